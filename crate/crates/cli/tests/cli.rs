//! End-to-end runs of the `gtlab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gtlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gtlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn validation_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["simulate-2v", "--sigma", "const:-1"][..],
        &["simulate-2v", "--sigma", "const:1", "--theta", "0.5"],
        &["simulate-2v", "--n", "4"],
        &["poincare", "--sigma", "const:1"],
        &["telegrapher", "--sigma", "pc:0.01@pi,0.02@2pi"],
    ] {
        let out = gtlab(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("invalid"));
    }
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["simulate-2v", "--sigma", "pc:1@pi,4@2pi", "--n", "64", "--t-final", "5", "--seed", "3"];
    for dir in [&a, &b] {
        let out = gtlab(&args, dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["trajectory.csv", "summary.csv", "entropy.svg"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn config_batch_writes_one_directory_per_section() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("batch.ini");
    fs::write(
        &cfg,
        "n = 64\nplots = false\n\n[sharp]\nscenario = ConstantSigma\nsigma = const:5\nt-final = 10\n\n\
         [curve]\nscenario = RateCurve\nsigma-grid = 0.5,6,12\n\n[modes]\nscenario = ModalReport\nsigma = const:3\n",
    )
    .unwrap();
    let out_dir = dir.path().join("results");
    let out = Command::new(env!("CARGO_BIN_EXE_gtlab"))
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("sharp/summary.csv").exists());
    assert!(out_dir.join("curve/rate_curve.csv").exists());
    assert!(out_dir.join("modes/modal.csv").exists());
    assert!(!out_dir.join("curve/rate_curve.svg").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let order: Vec<usize> = ["[sharp]", "[curve]", "[modes]"]
        .iter()
        .map(|s| stdout.find(s).unwrap())
        .collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn bad_config_field_is_reported_by_section() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    fs::write(&cfg, "[first]\nscenario = Rates\nsigma = const:2\n\n[second]\nscenario = ConstantSigma\ndt = soon\n")
        .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gtlab"))
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("second.dt"));
    // nothing runs when validation fails
    assert!(!dir.path().join("o").exists());
}
