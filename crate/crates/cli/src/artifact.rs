//! Stage artifacts: JSONL files whose first line carries the config hash
//! and seed they were produced under.

use std::path::Path;

use acs_core::jsonl::{self, ArtifactHeader};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};

pub fn header(config: &PipelineConfig, artifact: &str) -> ArtifactHeader {
    ArtifactHeader {
        artifact: artifact.to_string(),
        config_hash: config.hash(),
        seed: config.seed,
    }
}

/// Reads records, refusing files whose header names another config hash.
/// Files without a header (produced outside the pipeline) are accepted.
pub fn read<T: DeserializeOwned>(path: &Path, config: &PipelineConfig) -> Result<Vec<T>> {
    let recs = jsonl::read(path)?;
    if let Some(h) = &recs.header {
        let expected = config.hash();
        if h.config_hash != expected {
            return Err(CliError::data(format!(
                "{}: {} artifact was produced with config {}, this run uses {}",
                path.display(),
                h.artifact,
                h.config_hash,
                expected
            )));
        }
    }
    Ok(recs.records)
}

pub fn write<T: Serialize>(
    path: &Path,
    config: &PipelineConfig,
    artifact: &str,
    records: impl IntoIterator<Item = T>,
) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| acs_core::Error::io(dir, e))?;
    }
    jsonl::write(path, Some(&header(config, artifact)), records)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_hashes_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        let a = PipelineConfig::default();
        write(&path, &a, "numbers", [1, 2, 3]).unwrap();
        assert_eq!(read::<i32>(&path, &a).unwrap(), vec![1, 2, 3]);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&format!("{{\"_header\":{{\"artifact\":\"numbers\",\"config_hash\":\"{}\"", a.hash())));
        let mut b = a.clone();
        b.seed = 1;
        let err = read::<i32>(&path, &b).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        std::fs::write(&path, "1\n2\n").unwrap();
        assert_eq!(read::<i32>(&path, &b).unwrap(), vec![1, 2]);
    }
}
