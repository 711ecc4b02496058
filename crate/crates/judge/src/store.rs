//! Append-only judgment log.
//!
//! Each judgment is one JSON line, written and synced to disk before the
//! caller is told it was accepted. Every `snapshot_every` appends the
//! records so far and the log offset they cover are written to a sidecar
//! file (via a temporary file and a rename), so reopening only has to parse
//! the tail of the log. A torn final line, left by a crash in the middle
//! of a write, is cut off on open; it was never acknowledged.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use acs_core::judgment::JudgmentRecord;
use serde::{Deserialize, Serialize};

use crate::JudgeError;

pub const DEFAULT_SNAPSHOT_EVERY: usize = 256;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    offset: u64,
    records: Vec<JudgmentRecord>,
}

pub struct JudgmentStore {
    path: PathBuf,
    file: File,
    offset: u64,
    records: Vec<JudgmentRecord>,
    index: HashMap<(String, String), usize>,
    snapshot_every: usize,
    since_snapshot: usize,
}

pub fn snapshot_path(log: &Path) -> PathBuf {
    let mut name = log.file_name().unwrap_or_default().to_os_string();
    name.push(".snapshot");
    log.with_file_name(name)
}

fn io_err(path: &Path, e: std::io::Error) -> JudgeError {
    JudgeError::Store(format!("{}: {e}", path.display()))
}

/// Reads a log without modifying it or its snapshot. A torn final line is
/// ignored.
pub fn load(path: &Path) -> Result<Vec<JudgmentRecord>, JudgeError> {
    let text = fs::read(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    let mut rest = &text[..];
    let mut offset = 0;
    while !rest.is_empty() {
        let Some(end) = rest.iter().position(|&b| b == b'\n') else {
            break;
        };
        let record = serde_json::from_slice(&rest[..end]).map_err(|e| {
            JudgeError::Store(format!("{}: corrupt record at byte {offset}: {e}", path.display()))
        })?;
        out.push(record);
        offset += end + 1;
        rest = &rest[end + 1..];
    }
    Ok(out)
}

impl JudgmentStore {
    pub fn open(path: &Path) -> Result<Self, JudgeError> {
        Self::open_with(path, DEFAULT_SNAPSHOT_EVERY)
    }

    pub fn open_with(path: &Path, snapshot_every: usize) -> Result<Self, JudgeError> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(|e| io_err(path, e))?;
        let len = file.metadata().map_err(|e| io_err(path, e))?.len();

        let (mut offset, mut records) = match fs::read(snapshot_path(path)) {
            Ok(bytes) => match serde_json::from_slice::<Snapshot>(&bytes) {
                Ok(s) if s.offset <= len => (s.offset, s.records),
                _ => (0, Vec::new()),
            },
            Err(_) => (0, Vec::new()),
        };

        file.seek(SeekFrom::Start(offset))
            .map_err(|e| io_err(path, e))?;
        let mut reader = BufReader::new(&file);
        let mut line = Vec::new();
        loop {
            line.clear();
            let n = reader
                .read_until(b'\n', &mut line)
                .map_err(|e| io_err(path, e))?;
            if n == 0 {
                break;
            }
            let complete = line.last() == Some(&b'\n');
            match serde_json::from_slice::<JudgmentRecord>(&line) {
                Ok(r) if complete => {
                    records.push(r);
                    offset += n as u64;
                }
                _ if offset + n as u64 == len => break,
                Err(e) => {
                    return Err(JudgeError::Store(format!(
                        "{}: corrupt record at byte {offset}: {e}",
                        path.display()
                    )))
                }
                Ok(_) => unreachable!("incomplete lines end the file"),
            }
        }
        drop(reader);
        if offset < len {
            file.set_len(offset).map_err(|e| io_err(path, e))?;
            file.sync_all().map_err(|e| io_err(path, e))?;
        }

        let index = records
            .iter()
            .enumerate()
            .map(|(i, r)| ((r.annotator.clone(), r.pair_id.clone()), i))
            .collect();
        Ok(Self {
            path: path.to_path_buf(),
            file,
            offset,
            records,
            index,
            snapshot_every: snapshot_every.max(1),
            since_snapshot: 0,
        })
    }

    pub fn records(&self) -> &[JudgmentRecord] {
        &self.records
    }

    pub fn get(&self, annotator: &str, pair_id: &str) -> Option<&JudgmentRecord> {
        self.index
            .get(&(annotator.to_string(), pair_id.to_string()))
            .map(|&i| &self.records[i])
    }

    /// Appends a judgment unless the annotator already judged the pair, in
    /// which case the stored record is returned as the error.
    pub fn append(&mut self, record: JudgmentRecord) -> Result<Result<(), JudgmentRecord>, JudgeError> {
        if let Some(existing) = self.get(&record.annotator, &record.pair_id) {
            return Ok(Err(existing.clone()));
        }
        let mut line = serde_json::to_vec(&record).map_err(|e| JudgeError::Store(e.to_string()))?;
        line.push(b'\n');
        self.file
            .write_all(&line)
            .and_then(|_| self.file.sync_data())
            .map_err(|e| io_err(&self.path, e))?;
        self.offset += line.len() as u64;
        self.index.insert(
            (record.annotator.clone(), record.pair_id.clone()),
            self.records.len(),
        );
        self.records.push(record);
        self.since_snapshot += 1;
        if self.since_snapshot >= self.snapshot_every {
            self.snapshot()?;
        }
        Ok(Ok(()))
    }

    pub fn snapshot(&mut self) -> Result<(), JudgeError> {
        let target = snapshot_path(&self.path);
        let tmp = target.with_extension("snapshot.tmp");
        let body = serde_json::to_vec(&Snapshot {
            offset: self.offset,
            records: self.records.clone(),
        })
        .map_err(|e| JudgeError::Store(e.to_string()))?;
        let mut f = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        f.write_all(&body)
            .and_then(|_| f.sync_all())
            .map_err(|e| io_err(&tmp, e))?;
        fs::rename(&tmp, &target).map_err(|e| io_err(&target, e))?;
        self.since_snapshot = 0;
        Ok(())
    }
}
