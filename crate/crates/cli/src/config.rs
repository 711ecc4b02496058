//! Pipeline configuration file.
//!
//! ```toml
//! version = 1
//! lang_pair = "de-en"
//! seed = 1
//! out_dir = "out"
//!
//! [stages]
//! score = true
//!
//! [paths]
//! documents = "documents.jsonl"
//! obscene_list = "obscene.txt"
//! lexicon_manifest = "lexicons/manifest.toml"
//! bundles = "bundles.jsonl"
//! mwes = "mwes.txt"
//! scores = "scores.txt"
//!
//! [backends]
//! segmenter = "fallback"
//! mono_lid = "trigram"
//!
//! [thresholds]
//! cap = 1000
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use acs_core::ingest::{MAX_CHARS, MIN_TOKENS};
use acs_core::lid::{MAX_UNKNOWN_FRACTION, NE_CAPITALIZED_FRACTION};
use acs_core::scoring::{ScorerKind, DEFAULT_BATCH_SIZE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    pub lang_pair: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub stages: Stages,
    pub paths: Paths,
    pub backends: Backends,
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stages {
    pub ingest: bool,
    pub lid: bool,
    pub bundle: bool,
    pub genpairs: bool,
    pub score: bool,
    pub stats: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub documents: Option<PathBuf>,
    pub obscene_list: Option<PathBuf>,
    pub lexicon_manifest: Option<PathBuf>,
    pub bundles: Option<PathBuf>,
    pub mwes: Option<PathBuf>,
    /// Precomputed score file; used when no scorer endpoint is set.
    pub scores: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LidMode {
    /// Wordlist lookup.
    Wordlist,
    /// Character-class labeling for Chinese–English.
    Han,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Backends {
    /// `fallback` or a segmenter URL.
    pub segmenter: String,
    /// `trigram`, `none` (skip the check) or a classifier URL.
    pub mono_lid: String,
    pub lid: LidMode,
    pub scorer: Option<String>,
    pub scorer_kind: ScorerKind,
    pub score_batch_size: usize,
    pub retries: u32,
    pub max_inflight: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub max_chars: usize,
    pub min_tokens: usize,
    pub max_unknown_fraction: f64,
    pub ne_fraction: f64,
    pub min_translation_distance: usize,
    pub cap: usize,
    pub resamples: usize,
    pub alpha: f64,
    pub batch_size: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            lang_pair: "de-en".into(),
            seed: 0,
            out_dir: "out".into(),
            stages: Stages::default(),
            paths: Paths::default(),
            backends: Backends::default(),
            thresholds: Thresholds::default(),
        }
    }
}

impl Default for Stages {
    fn default() -> Self {
        Self {
            ingest: true,
            lid: true,
            bundle: true,
            genpairs: true,
            score: false,
            stats: false,
        }
    }
}

impl Default for Backends {
    fn default() -> Self {
        Self {
            segmenter: "fallback".into(),
            mono_lid: "trigram".into(),
            lid: LidMode::Wordlist,
            scorer: None,
            scorer_kind: ScorerKind::Autoregressive,
            score_batch_size: DEFAULT_BATCH_SIZE,
            retries: 3,
            max_inflight: 4,
        }
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            max_chars: MAX_CHARS,
            min_tokens: MIN_TOKENS,
            max_unknown_fraction: MAX_UNKNOWN_FRACTION,
            ne_fraction: NE_CAPITALIZED_FRACTION,
            min_translation_distance: acs_core::bundle::MIN_TRANSLATION_DISTANCE,
            cap: 1000,
            resamples: 10_000,
            alpha: 0.05,
            batch_size: acs_judge::plan::DEFAULT_BATCH_SIZE,
        }
    }
}

/// The settings that change what a stage produces.
#[derive(Serialize)]
struct HashedSettings<'a> {
    version: u32,
    lang_pair: &'a str,
    seed: u64,
    backends: &'a Backends,
    thresholds: &'a Thresholds,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let mut config: PipelineConfig = toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        for p in [
            &mut self.paths.documents,
            &mut self.paths.obscene_list,
            &mut self.paths.lexicon_manifest,
            &mut self.paths.bundles,
            &mut self.paths.mwes,
            &mut self.paths.scores,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.thresholds;
        let bad = |what: &str| Err(CliError::usage(format!("config: {what}")));
        if self.version != CONFIG_VERSION {
            return bad(&format!("unsupported version {}", self.version));
        }
        if self.lang_pair.is_empty() {
            return bad("lang_pair is empty");
        }
        if t.max_chars == 0 || t.min_tokens == 0 {
            return bad("length thresholds must be positive");
        }
        for (name, v) in [("max_unknown_fraction", t.max_unknown_fraction), ("ne_fraction", t.ne_fraction)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(&format!("{name} must be in (0, 1]"));
            }
        }
        if t.cap == 0 || t.resamples == 0 || t.batch_size == 0 {
            return bad("cap, resamples and batch_size must be positive");
        }
        if !(t.alpha > 0.0 && t.alpha < 1.0) {
            return bad("alpha must be in (0, 1)");
        }
        if self.backends.score_batch_size == 0 || self.backends.max_inflight == 0 {
            return bad("score_batch_size and max_inflight must be positive");
        }
        if self.stages.score && self.backends.scorer.is_none() && self.paths.scores.is_none() {
            return bad("score stage needs backends.scorer or paths.scores");
        }
        Ok(())
    }

    /// SHA-256 over the settings that affect stage outputs. Paths, stage
    /// toggles and the output directory are left out, so moving files or
    /// re-running single stages keeps artifacts compatible.
    pub fn hash(&self) -> String {
        let settings = HashedSettings {
            version: self.version,
            lang_pair: &self.lang_pair,
            seed: self.seed,
            backends: &self.backends,
            thresholds: &self.thresholds,
        };
        let json = serde_json::to_vec(&settings).expect("settings serialize");
        hex::encode(Sha256::digest(&json))
    }

    pub fn client_config(&self) -> acs_core::backend::ClientConfig {
        acs_core::backend::ClientConfig {
            retries: self.backends.retries,
            max_inflight: self.backends.max_inflight,
            ..Default::default()
        }
    }

    pub fn require(&self, path: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
        path.clone()
            .ok_or_else(|| CliError::usage(format!("config: paths.{name} is not set")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_thresholds() {
        let t = Thresholds::default();
        assert_eq!(
            (t.max_chars, t.min_tokens, t.min_translation_distance, t.cap, t.resamples, t.batch_size),
            (200, 6, 5, 1000, 10_000, 67)
        );
        assert_eq!((t.max_unknown_fraction, t.ne_fraction, t.alpha), (0.5, 0.75, 0.05));
    }

    #[test]
    fn hash_ignores_paths_and_toggles() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.paths.documents = Some("x".into());
        b.stages.score = true;
        b.out_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 9;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn parses_and_resolves() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "lang_pair = \"sv-en\"\nseed = 4\n[paths]\nbundles = \"b.jsonl\"\n[thresholds]\ncap = 10\n",
        )
        .unwrap();
        let c = PipelineConfig::load(&path).unwrap();
        assert_eq!(c.lang_pair, "sv-en");
        assert_eq!(c.paths.bundles, Some(dir.path().join("b.jsonl")));
        assert_eq!(c.thresholds.cap, 10);
        assert_eq!(c.thresholds.min_tokens, 6);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = PipelineConfig::default();
        c.thresholds.alpha = 1.5;
        assert_eq!(c.validate().unwrap_err().exit_code(), 1);
        let mut c = PipelineConfig::default();
        c.stages.score = true;
        assert!(c.validate().is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "sed = 4\n").unwrap();
        assert!(PipelineConfig::load(&path).is_err());
    }
}
