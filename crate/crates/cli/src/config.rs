//! `--config` support. The file is a JSON object whose keys are flag names
//! (`pool`, `k1`, `service`, ...; underscores and dashes are equivalent).
//! Nested objects are flattened, so `{"bm25": {"k1": 1.5}}` sets `--k1`.
//! Keys the chosen subcommand does not accept are ignored, and flags given
//! on the command line always win.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, CommandFactory};
use serde_json::Value;

use crate::args::Cli;
use crate::error::{CliError, Result};

/// Returns `argv` with config-file defaults appended.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let root: Value = serde_json::from_str(&text).map_err(|e| CliError::Config {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let Value::Object(_) = root else {
        return Err(CliError::Config {
            path,
            message: "expected a JSON object".into(),
        });
    };
    let mut flat = Vec::new();
    flatten(&root, &mut flat);

    let cmd = Cli::command();
    let sub = argv
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find_map(|a| cmd.find_subcommand(a));
    let Some(sub) = sub else {
        // let clap report the missing subcommand
        return Ok(argv);
    };
    let accepted: Vec<&clap::Arg> = sub
        .get_arguments()
        .chain(cmd.get_arguments())
        .filter(|a| a.get_long().is_some() && a.get_long() != Some("config"))
        .collect();

    let mut out = argv.clone();
    for (key, value) in flat {
        let long = key.replace('_', "-");
        let Some(arg) = accepted.iter().find(|a| a.get_long() == Some(long.as_str())) else {
            continue;
        };
        if given(&argv, &long) {
            continue;
        }
        let flag = OsString::from(format!("--{long}"));
        match (arg.get_action(), &value) {
            (ArgAction::SetTrue, Value::Bool(true)) => out.push(flag),
            (ArgAction::SetTrue, Value::Bool(false)) => {}
            (ArgAction::SetTrue, other) => {
                return Err(CliError::Config {
                    path,
                    message: format!("{key} must be a boolean, got {other}"),
                })
            }
            (ArgAction::Append, Value::Array(items)) => {
                for item in items {
                    out.push(flag.clone());
                    out.push(scalar(&path, &key, item)?.into());
                }
            }
            (_, Value::Array(items)) => {
                let parts = items
                    .iter()
                    .map(|i| scalar(&path, &key, i))
                    .collect::<Result<Vec<_>>>()?;
                out.push(flag);
                out.push(parts.join(",").into());
            }
            (_, v) => {
                out.push(flag);
                out.push(scalar(&path, &key, v)?.into());
            }
        }
    }
    Ok(out)
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_str()?;
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn given(argv: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    let with_value = format!("--{long}=");
    argv.iter()
        .filter_map(|a| a.to_str())
        .any(|a| a == flag || a.starts_with(&with_value))
}

fn flatten(v: &Value, out: &mut Vec<(String, Value)>) {
    if let Value::Object(map) = v {
        for (k, inner) in map {
            match inner {
                Value::Object(_) => flatten(inner, out),
                _ => out.push((k.clone(), inner.clone())),
            }
        }
    }
}

fn scalar(path: &Path, key: &str, v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(CliError::Config {
            path: path.to_path_buf(),
            message: format!("{key}: unsupported value {other}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(args: &[&str]) -> Vec<OsString> {
        args.iter().map(OsString::from).collect()
    }

    fn strs(v: &[OsString]) -> Vec<String> {
        v.iter().map(|s| s.to_string_lossy().into_owned()).collect()
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.json");
        std::fs::write(
            &cfg,
            r#"{"seed": 9, "pool": 50, "bm25": {"k1": 1.5, "b": 0.5}, "split": {"fractions": [0.8, 0.1, 0.1]}, "no_timestamp": true}"#,
        )
        .unwrap();
        let argv = os(&["faqkit", "--config", cfg.to_str().unwrap(), "rerank", "--pool", "7"]);
        let out = strs(&expand(argv).unwrap());
        assert!(out.windows(2).any(|w| w == ["--pool", "7"]));
        assert!(!out.windows(2).any(|w| w == ["--pool", "50"]));
        assert!(out.windows(2).any(|w| w == ["--k1", "1.5"]));
        assert!(out.windows(2).any(|w| w == ["--seed", "9"]));
        assert!(out.contains(&"--no-timestamp".to_string()));
        // rerank has no --fractions
        assert!(!out.contains(&"--fractions".to_string()));
    }

    #[test]
    fn arrays_join_for_single_value_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.json");
        std::fs::write(&cfg, r#"{"fractions": [0.8, 0.1, 0.1], "level": "topic"}"#).unwrap();
        let argv = os(&["faqkit", "split", &format!("--config={}", cfg.display())]);
        let out = strs(&expand(argv).unwrap());
        assert!(out.windows(2).any(|w| w == ["--fractions", "0.8,0.1,0.1"]));
        assert!(out.windows(2).any(|w| w == ["--level", "topic"]));
    }

    #[test]
    fn no_config_is_identity() {
        let argv = os(&["faqkit", "eval", "--rounds", "2"]);
        assert_eq!(expand(argv.clone()).unwrap(), argv);
    }

    #[test]
    fn bad_config_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.json");
        std::fs::write(&cfg, "[1, 2]").unwrap();
        let err = expand(os(&["faqkit", "--config", cfg.to_str().unwrap(), "eval"])).unwrap_err();
        assert_eq!(err.kind(), "config");
    }
}
