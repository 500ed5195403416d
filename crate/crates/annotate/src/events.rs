use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::store::{LabelSubmission, Resolution, StoreError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub(crate) enum Event {
    Open { pairs: usize, fingerprint: String },
    Served { pair_id: usize, annotator: String },
    Submitted(LabelSubmission),
    Resolved(Resolution),
}

/// Append-only JSON-lines event log.
pub(crate) struct EventLog {
    file: File,
}

impl EventLog {
    /// Opens (or creates) the log and returns its events with 1-based line
    /// numbers. A torn final line left by an interrupted write is cut off.
    pub(crate) fn open(path: &Path) -> Result<(EventLog, Vec<(usize, Event)>), StoreError> {
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let mut text = String::new();
        file.read_to_string(&mut text)?;

        let mut events = Vec::new();
        let mut offset = 0usize;
        let mut keep = 0usize;
        for (i, line) in text.split_inclusive('\n').enumerate() {
            let complete = line.ends_with('\n');
            let body = line.trim();
            offset += line.len();
            if body.is_empty() {
                keep = offset;
                continue;
            }
            if !complete {
                log::warn!("{}: dropping torn final line {}", path.display(), i + 1);
                break;
            }
            let event = serde_json::from_str::<Event>(body).map_err(|e| StoreError::Replay {
                line: i + 1,
                reason: e.to_string(),
            })?;
            events.push((i + 1, event));
            keep = offset;
        }
        if keep < text.len() {
            file.set_len(keep as u64)?;
            file.seek(SeekFrom::End(0))?;
        }
        Ok((EventLog { file }, events))
    }

    pub(crate) fn append(&mut self, event: &Event) -> io::Result<()> {
        let mut line = serde_json::to_string(event).map_err(io::Error::other)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()
    }
}
