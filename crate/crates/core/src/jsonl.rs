//! Line-delimited JSON helpers shared by every file format in the crate.
//!
//! Artifacts written by the toolkit may start with a single header line of
//! the form `{"$header": {...}}` recording how the file was produced.
//! Readers skip that line transparently, so hand-written input files and
//! generated artifacts are interchangeable.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const HEADER_KEY: &str = "$header";

/// Provenance recorded at the top of generated artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub tool: String,
    pub command: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<u64>,
}

#[derive(Serialize)]
struct HeaderLine<'a> {
    #[serde(rename = "$header")]
    header: &'a ArtifactHeader,
}

/// Reads every record of a line-delimited JSON file. Blank lines are
/// ignored; a leading header line is skipped. Parse failures carry the
/// 1-based line number.
pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records_from(BufReader::new(file), path)
}

pub fn read_records_from<T: DeserializeOwned, R: BufRead>(reader: R, path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if out.is_empty() && is_header_line(trimmed) {
            continue;
        }
        let record = serde_json::from_str(trimmed).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Reads the header line of an artifact, if present.
pub fn read_header(path: &Path) -> Result<Option<ArtifactHeader>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !is_header_line(trimmed) {
            return Ok(None);
        }
        let mut value: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: e.to_string(),
            })?;
        let header = value
            .get_mut(HEADER_KEY)
            .map(serde_json::Value::take)
            .unwrap_or_default();
        return serde_json::from_value(header)
            .map(Some)
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: e.to_string(),
            });
    }
    Ok(None)
}

fn is_header_line(line: &str) -> bool {
    // cheap prefix test before a full parse
    line.starts_with('{')
        && line.contains(HEADER_KEY)
        && serde_json::from_str::<serde_json::Value>(line)
            .ok()
            .and_then(|v| v.as_object().map(|o| o.len() == 1 && o.contains_key(HEADER_KEY)))
            .unwrap_or(false)
}

/// Writes records one JSON object per line, optionally preceded by a header.
pub fn write_records<T: Serialize>(
    path: &Path,
    header: Option<&ArtifactHeader>,
    records: impl IntoIterator<Item = T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_records_to(&mut w, header, records).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_records_to<T: Serialize, W: Write>(
    w: &mut W,
    header: Option<&ArtifactHeader>,
    records: impl IntoIterator<Item = T>,
) -> std::io::Result<()> {
    if let Some(header) = header {
        serde_json::to_writer(&mut *w, &HeaderLine { header })?;
        w.write_all(b"\n")?;
    }
    for record in records {
        serde_json::to_writer(&mut *w, &record)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
