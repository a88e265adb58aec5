use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use faqkit_core::jsonl::{ArtifactHeader, HEADER_KEY};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

/// Per-invocation settings shared by every subcommand.
pub struct Ctx {
    pub command: &'static str,
    pub seed: u64,
    pub jobs: usize,
    pub timestamp: bool,
}

impl Ctx {
    pub fn header(&self) -> ArtifactHeader {
        ArtifactHeader {
            tool: "faqkit".into(),
            command: self.command.into(),
            seed: self.seed,
            created_at: self.timestamp.then(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs())
            }),
        }
    }

    /// Writes a report: one pretty JSON document with the header under
    /// `$header` and the fields of `body` beside it. Goes to stdout when
    /// `path` is `None`.
    pub fn report<T: Serialize>(&self, path: Option<&Path>, body: &T) -> Result<()> {
        let mut doc = Map::new();
        doc.insert(HEADER_KEY.into(), to_value(&self.header())?);
        match to_value(body)? {
            Value::Object(fields) => doc.extend(fields),
            other => {
                doc.insert("value".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(doc))
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        text.push('\n');
        match path {
            Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|e| CliError::io("<stdout>", e))
            }
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Invalid(e.to_string()))
}

/// One-line JSON summary on stdout for commands that write files.
pub fn summary(v: Value) {
    println!("{v}");
}

/// Maps `f` over `items` on up to `jobs` threads, keeping input order.
pub fn par_map<T, U, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(f).collect::<Result<Vec<U>>>()))
            .collect();
        let mut out = Vec::with_capacity(items.len());
        for h in handles {
            out.extend(h.join().expect("worker panicked")?);
        }
        Ok(out)
    })
}
