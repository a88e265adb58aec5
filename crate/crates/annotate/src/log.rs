//! Append-only event log: one JSON event per line, fsynced on append.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::error::{AnnotateError, Result};
use crate::model::Event;

#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    /// Opens (or creates) the log and returns it with every stored event.
    ///
    /// A final line without a newline is a torn write from a crash; it is
    /// cut off. A bad line anywhere else is an error.
    pub fn open(path: &Path) -> Result<(Self, Vec<Event>)> {
        let io = |e| AnnotateError::Io(path.to_path_buf(), e);
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(path)
            .map_err(io)?;
        let mut events = Vec::new();
        let mut good_len = 0u64;
        let mut reader = BufReader::new(&file);
        let mut line = String::new();
        let mut lineno = 0;
        loop {
            line.clear();
            let n = reader.read_line(&mut line).map_err(io)?;
            if n == 0 {
                break;
            }
            lineno += 1;
            let complete = line.ends_with('\n');
            let body = line.trim_end();
            if body.is_empty() {
                good_len += n as u64;
                continue;
            }
            // an unterminated last line was never acknowledged
            if !complete {
                break;
            }
            let ev = serde_json::from_str::<Event>(body).map_err(|e| AnnotateError::Log {
                path: path.to_path_buf(),
                line: lineno,
                message: e.to_string(),
            })?;
            events.push(ev);
            good_len += n as u64;
        }
        drop(reader);
        if file.metadata().map_err(io)?.len() > good_len {
            file.set_len(good_len).map_err(io)?;
            file.seek(SeekFrom::End(0)).map_err(io)?;
        }
        Ok((
            EventLog {
                path: path.to_path_buf(),
                file,
            },
            events,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, event: &Event) -> Result<()> {
        let io = |e| AnnotateError::Io(self.path.clone(), e);
        let mut line = serde_json::to_string(event).expect("events always serialize");
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(io)?;
        self.file.sync_data().map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use faqkit_core::ranker::Label;

    fn judged(i: u64) -> Event {
        Event::Judged {
            task_id: "t".into(),
            candidate_id: format!("c{i}"),
            annotator: "a".into(),
            label: Label::Match,
            rewrite: None,
            at: i,
        }
    }

    #[test]
    fn append_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let (mut log, evs) = EventLog::open(&path).unwrap();
        assert!(evs.is_empty());
        log.append(&judged(1)).unwrap();
        log.append(&judged(2)).unwrap();
        drop(log);
        let (_, evs) = EventLog::open(&path).unwrap();
        assert_eq!(evs, vec![judged(1), judged(2)]);
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let good = serde_json::to_string(&judged(1)).unwrap();
        std::fs::write(&path, format!("{good}\n{{\"event\":\"jud")).unwrap();
        let (mut log, evs) = EventLog::open(&path).unwrap();
        assert_eq!(evs.len(), 1);
        log.append(&judged(2)).unwrap();
        drop(log);
        let (_, evs) = EventLog::open(&path).unwrap();
        assert_eq!(evs, vec![judged(1), judged(2)]);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let good = serde_json::to_string(&judged(1)).unwrap();
        std::fs::write(&path, format!("garbage\n{good}\n")).unwrap();
        assert!(matches!(EventLog::open(&path), Err(AnnotateError::Log { line: 1, .. })));
    }
}
