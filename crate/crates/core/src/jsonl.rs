//! Line-delimited JSON records with an optional provenance header line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// First line of a pipeline artifact: `{"_header": {...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub artifact: String,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    #[serde(rename = "_header")]
    header: ArtifactHeader,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Records<T> {
    pub header: Option<ArtifactHeader>,
    pub records: Vec<T>,
}

/// Reads one record per non-blank line. Lines starting with `//` are
/// comments.
pub fn read<T: DeserializeOwned>(path: &Path) -> Result<Records<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse(BufReader::new(file), path)
}

pub fn parse<T: DeserializeOwned>(reader: impl BufRead, path: &Path) -> Result<Records<T>> {
    let mut header = None;
    let mut records = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        if line.starts_with("{\"_header\"") {
            let h: HeaderLine = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                message: e.to_string(),
            })?;
            header = Some(h.header);
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(Records { header, records })
}

pub fn write<T: Serialize>(
    path: &Path,
    header: Option<&ArtifactHeader>,
    records: impl IntoIterator<Item = T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_to(&mut w, header, records).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_to<T: Serialize>(
    w: &mut impl Write,
    header: Option<&ArtifactHeader>,
    records: impl IntoIterator<Item = T>,
) -> std::io::Result<()> {
    if let Some(h) = header {
        serde_json::to_writer(&mut *w, &HeaderLine { header: h.clone() })?;
        w.write_all(b"\n")?;
    }
    for r in records {
        serde_json::to_writer(&mut *w, &r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a plain list file: one entry per line, `#` comments, blank lines
/// skipped.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}
