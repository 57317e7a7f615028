//! In-memory artifacts; workers fill them, a single collector writes them.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Relative slack for "observed ≥ theoretical" checks.
pub const RATE_SLACK: f64 = 0.02;

/// How an observation is judged against its theoretical value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Check {
    Info,
    /// `observed ≥ theoretical − slack`.
    AtLeast(f64),
    /// `observed ≤ theoretical + slack`.
    AtMost(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub quantity: String,
    pub theoretical: f64,
    pub observed: Option<f64>,
    pub check: Check,
}

impl SummaryRow {
    pub fn new(quantity: impl Into<String>, theoretical: f64, observed: Option<f64>, check: Check) -> Self {
        Self {
            quantity: quantity.into(),
            theoretical,
            observed,
            check,
        }
    }

    /// A guaranteed decay rate: the observation may fall short by [`RATE_SLACK`].
    pub fn rate(quantity: impl Into<String>, theoretical: f64, observed: Option<f64>) -> Self {
        Self::new(quantity, theoretical, observed, Check::AtLeast(RATE_SLACK * theoretical.abs()))
    }

    pub fn info(quantity: impl Into<String>, theoretical: f64, observed: Option<f64>) -> Self {
        Self::new(quantity, theoretical, observed, Check::Info)
    }

    pub fn margin(&self) -> Option<f64> {
        self.observed.map(|o| o - self.theoretical)
    }

    /// `None` when nothing is asserted or nothing was observed.
    pub fn holds(&self) -> Option<bool> {
        let o = self.observed?;
        match self.check {
            Check::Info => None,
            Check::AtLeast(slack) => Some(o >= self.theoretical - slack),
            Check::AtMost(slack) => Some(o <= self.theoretical + slack),
        }
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut s = String::from("quantity,theoretical,observed,margin,holds\n");
    for r in rows {
        let holds = r.holds().map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.quantity,
            r.theoretical,
            opt(r.observed),
            opt(r.margin()),
            holds
        );
    }
    s
}

/// Human-readable table for the terminal.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:<28} {:>14} {:>14} {:>11} {:>6}\n",
        "quantity", "theoretical", "observed", "margin", "holds"
    );
    let opt = |x: Option<f64>, p: usize| x.map(|v| format!("{v:.p$}")).unwrap_or_else(|| "-".into());
    for r in rows {
        let holds = match r.holds() {
            Some(true) => "yes",
            Some(false) => "NO",
            None => "-",
        };
        let _ = writeln!(
            s,
            "{:<28} {:>14.8} {:>14} {:>11} {:>6}",
            r.quantity,
            r.theoretical,
            opt(r.observed, 8),
            opt(r.margin(), 5),
            holds
        );
    }
    s
}

#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    /// Relative file name and contents.
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Vec<SummaryRow>,
    /// Text echoed to stdout after the files are written.
    pub report: String,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.push((name.into(), contents.into()));
    }

    /// Adds `summary.csv` and the summary table to the report.
    pub fn finish_summary(&mut self) {
        if self.summary.is_empty() {
            return;
        }
        let csv = summary_csv(&self.summary);
        self.add("summary.csv", csv);
        self.report.push_str(&summary_table(&self.summary));
    }

    /// Whether any asserted comparison failed.
    pub fn any_failed(&self) -> bool {
        self.summary.iter().any(|r| r.holds() == Some(false))
    }

    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, data) in &self.files {
            let path = dir.join(name);
            fs::write(&path, data)?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margins_and_verdicts() {
        let ok = SummaryRow::rate("r", 0.5, Some(0.495));
        assert_eq!(ok.holds(), Some(true));
        let bad = SummaryRow::rate("r", 0.5, Some(0.48));
        assert_eq!(bad.holds(), Some(false));
        let info = SummaryRow::rate("r", 0.5, None);
        assert_eq!(info.holds(), None);
        let cap = SummaryRow::new("inc", 0.0, Some(2e-8), Check::AtMost(1e-8));
        assert_eq!(cap.holds(), Some(false));
        let csv = summary_csv(&[ok, info]);
        assert_eq!(
            csv,
            "quantity,theoretical,observed,margin,holds\nr,0.5,0.495,-0.0050000000000000044,true\nr,0.5,,,\n"
        );
    }
}
