//! INI experiment files.
//!
//! ```ini
//! out = results
//! n = 128            ; top-level keys are defaults for every section
//!
//! [const5]
//! scenario = ConstantSigma
//! sigma = const:5
//! ```

use std::path::{Path, PathBuf};

use ini::Ini;

use crate::error::{CliError, Result};
use crate::params::Params;
use crate::scenarios::{Experiment, Scenario};

#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub out_dir: PathBuf,
    pub experiments: Vec<Experiment>,
}

pub fn load(path: &Path) -> Result<Batch> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::invalid("config", format!("{}: {e}", path.display())))?;
    let ini = Ini::load_from_str(&strip_inline_comments(&text))
        .map_err(|e| CliError::invalid("config", format!("{}: {e}", path.display())))?;
    parse(&ini)
}

/// Drops `; …` and `# …` tails that follow whitespace; no value needs either character.
fn strip_inline_comments(text: &str) -> String {
    text.lines()
        .map(|line| {
            let cut = line
                .char_indices()
                .find(|&(i, c)| (c == ';' || c == '#') && line[..i].ends_with(char::is_whitespace))
                .map_or(line.len(), |(i, _)| i);
            line[..cut].trim_end()
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn parse(ini: &Ini) -> Result<Batch> {
    let mut defaults = Params::default();
    let mut out_dir = PathBuf::from("out");
    for (key, value) in ini.general_section().iter() {
        match key {
            "out" => out_dir = PathBuf::from(value),
            _ => defaults.set(key, value)?,
        }
    }
    let mut experiments = Vec::new();
    for (name, props) in ini.iter() {
        let Some(name) = name else { continue };
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(CliError::invalid("section", format!("'{name}' is not usable as a directory name")));
        }
        let field = |e: CliError| match e {
            CliError::Validation { field, message } => CliError::Validation {
                field: format!("{name}.{field}"),
                message,
            },
            other => other,
        };
        let mut params = defaults.clone();
        let mut scenario = None;
        for (key, value) in props.iter() {
            if key == "scenario" {
                scenario = Some(value.parse::<Scenario>().map_err(field)?);
            } else {
                params.set(key, value).map_err(field)?;
            }
        }
        let scenario = scenario.ok_or_else(|| CliError::invalid(&format!("{name}.scenario"), "missing"))?;
        if experiments.iter().any(|e: &Experiment| e.name == name) {
            return Err(CliError::invalid("section", format!("'{name}' appears twice")));
        }
        experiments.push(Experiment {
            name: name.to_string(),
            scenario,
            params,
        });
    }
    if experiments.is_empty() {
        return Err(CliError::invalid("config", "no experiment sections"));
    }
    Ok(Batch { out_dir, experiments })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(s: &str) -> Result<Batch> {
        parse(&Ini::load_from_str(s).unwrap())
    }

    #[test]
    fn sections_become_experiments() {
        let b = parse_str(
            "out = res\nn = 64\n\n[a]\nscenario = ConstantSigma\nsigma = const:5\n\n[b]\nscenario = RateCurve\nn = 32\n",
        )
        .unwrap();
        assert_eq!(b.out_dir, PathBuf::from("res"));
        assert_eq!(b.experiments.len(), 2);
        assert_eq!(b.experiments[0].params.n, Some(64));
        assert_eq!(b.experiments[0].params.sigma.as_deref(), Some("const:5"));
        assert_eq!(b.experiments[1].scenario, Scenario::RateCurve);
        assert_eq!(b.experiments[1].params.n, Some(32));
    }

    #[test]
    fn inline_comments_are_ignored() {
        let text = strip_inline_comments("n = 64   ; default\n; whole line\n[a] # note\nscenario = Rates\n");
        let b = parse_str(&text).unwrap();
        assert_eq!(b.experiments[0].params.n, Some(64));
        assert_eq!(b.experiments[0].name, "a");
    }

    #[test]
    fn errors_name_the_section_and_field() {
        let e = parse_str("[x]\nscenario = ConstantSigma\ndt = fast\n").unwrap_err();
        assert!(e.to_string().starts_with("invalid x.dt"), "{e}");
        let e = parse_str("[x]\nsigma = const:1\n").unwrap_err();
        assert!(e.to_string().starts_with("invalid x.scenario"), "{e}");
        let e = parse_str("[x]\nscenario = Bogus\n").unwrap_err();
        assert!(e.to_string().starts_with("invalid x.scenario"), "{e}");
        assert!(parse_str("n = 8\n").is_err());
    }
}
