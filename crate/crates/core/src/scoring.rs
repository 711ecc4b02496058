//! Sentence log-probabilities from external scorers, per-pair margins and
//! challenge-set accuracy.
//!
//! Scores are natural-log probabilities of the whole raw sentence text,
//! without length normalisation. Masked-LM backends are expected to report
//! a pseudo-log-likelihood.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{ClientConfig, JsonEndpoint};
use crate::pairgen::MinimalPair;
use crate::{Error, Result};

pub const DEFAULT_BATCH_SIZE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Autoregressive,
    Masked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub pair_id: String,
    pub logp_observed: f64,
    pub logp_manipulated: f64,
    pub scorer: String,
}

impl ScoredPair {
    pub fn margin(&self) -> f64 {
        margin(self)
    }

    pub fn swapped(&self) -> ScoredPair {
        ScoredPair {
            logp_observed: self.logp_manipulated,
            logp_manipulated: self.logp_observed,
            ..self.clone()
        }
    }
}

/// `log P(observed) − log P(manipulated)`, in nats.
pub fn margin(pair: &ScoredPair) -> f64 {
    pair.logp_observed - pair.logp_manipulated
}

/// Fraction of pairs whose observed sentence scores strictly higher.
pub fn accuracy(pairs: &[ScoredPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyChallengeSet);
    }
    let correct = pairs
        .iter()
        .filter(|p| p.logp_observed > p.logp_manipulated)
        .count();
    Ok(correct as f64 / pairs.len() as f64)
}

/// The two texts of one pair as submitted to a scorer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub pair_id: String,
    pub observed: String,
    pub manipulated: String,
}

impl From<&MinimalPair> for ScoreRequest {
    fn from(p: &MinimalPair) -> Self {
        Self {
            pair_id: p.pair_id.clone(),
            observed: p.observed.text().to_string(),
            manipulated: p.manipulated.text().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreFailure {
    pub pair_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreOutcome {
    pub scored: Vec<ScoredPair>,
    pub failures: Vec<ScoreFailure>,
}

pub trait ScorerBackend: Sync {
    fn id(&self) -> String;
    fn kind(&self) -> ScorerKind;
    fn batch_size(&self) -> usize {
        DEFAULT_BATCH_SIZE
    }
    /// One `(logp_observed, logp_manipulated)` or failure message per
    /// request, in order.
    fn score_batch(&self, batch: &[ScoreRequest]) -> Vec<std::result::Result<(f64, f64), String>>;
}

/// Scores every request; failed items are listed instead of aborting the
/// run. Output is sorted by pair id.
pub fn score_pairs(requests: &[ScoreRequest], backend: &dyn ScorerBackend) -> ScoreOutcome {
    let id = backend.id();
    let size = backend.batch_size().max(1);
    let results: Vec<(String, std::result::Result<(f64, f64), String>)> = requests
        .par_chunks(size)
        .flat_map_iter(|chunk| {
            let mut got = backend.score_batch(chunk);
            got.resize(chunk.len(), Err("backend returned too few results".into()));
            chunk
                .iter()
                .map(|r| r.pair_id.clone())
                .zip(got)
                .collect::<Vec<_>>()
        })
        .collect();

    let mut out = ScoreOutcome::default();
    for (pair_id, r) in results {
        match r {
            Ok((o, m)) if o.is_finite() && m.is_finite() => out.scored.push(ScoredPair {
                pair_id,
                logp_observed: o,
                logp_manipulated: m,
                scorer: id.clone(),
            }),
            Ok(_) => out.failures.push(ScoreFailure {
                pair_id,
                reason: "non-finite score".into(),
            }),
            Err(reason) => out.failures.push(ScoreFailure { pair_id, reason }),
        }
    }
    out.scored.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    out.failures.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    out
}

/// Precomputed scores: whitespace-separated `pair_id logp_observed
/// logp_manipulated` rows, `#` starting a comment.
#[derive(Debug, Clone)]
pub struct FileScorer {
    id: String,
    kind: ScorerKind,
    rows: HashMap<String, (f64, f64)>,
}

impl FileScorer {
    pub fn load(path: &Path, kind: ScorerKind) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut s = Self::parse(&text, path)?;
        s.kind = kind;
        Ok(s)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut rows = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("");
            let cols: Vec<&str> = content.split_whitespace().collect();
            if cols.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                message,
            };
            if cols.len() != 3 {
                return Err(parse_err(format!("expected 3 columns, got {}", cols.len())));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| parse_err(format!("not a number: {s:?}")))
            };
            rows.insert(cols[0].to_string(), (num(cols[1])?, num(cols[2])?));
        }
        Ok(Self {
            id: path.display().to_string(),
            kind: ScorerKind::Autoregressive,
            rows,
        })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Every row as a scored pair, sorted by pair id.
    pub fn scored(&self) -> Vec<ScoredPair> {
        let mut out: Vec<ScoredPair> = self
            .rows
            .iter()
            .map(|(id, &(o, m))| ScoredPair {
                pair_id: id.clone(),
                logp_observed: o,
                logp_manipulated: m,
                scorer: self.id.clone(),
            })
            .collect();
        out.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
        out
    }
}

impl ScorerBackend for FileScorer {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn kind(&self) -> ScorerKind {
        self.kind
    }

    fn score_batch(&self, batch: &[ScoreRequest]) -> Vec<std::result::Result<(f64, f64), String>> {
        batch
            .iter()
            .map(|r| {
                self.rows
                    .get(&r.pair_id)
                    .copied()
                    .ok_or_else(|| "no score for pair".to_string())
            })
            .collect()
    }
}

#[derive(Serialize)]
struct ScoreBody<'a> {
    texts: Vec<&'a str>,
}

#[derive(Deserialize)]
struct ScoreResponse {
    logprobs: Vec<Option<f64>>,
}

/// Remote scorer: `{texts: [..]}` → `{logprobs: [..]}` in the same order.
/// Each pair contributes its observed then its manipulated text.
pub struct EndpointScorer {
    kind: ScorerKind,
    batch_size: usize,
    endpoint: JsonEndpoint,
}

impl EndpointScorer {
    pub fn new(url: impl Into<String>, kind: ScorerKind, config: ClientConfig) -> Self {
        Self {
            kind,
            batch_size: DEFAULT_BATCH_SIZE,
            endpoint: JsonEndpoint::new(url, config),
        }
    }

    pub fn with_batch_size(mut self, n: usize) -> Self {
        self.batch_size = n.max(1);
        self
    }
}

impl ScorerBackend for EndpointScorer {
    fn id(&self) -> String {
        self.endpoint.url().to_string()
    }

    fn kind(&self) -> ScorerKind {
        self.kind
    }

    fn batch_size(&self) -> usize {
        self.batch_size
    }

    fn score_batch(&self, batch: &[ScoreRequest]) -> Vec<std::result::Result<(f64, f64), String>> {
        let fail = |msg: String| vec![Err(msg); batch.len()];
        let body = ScoreBody {
            texts: batch
                .iter()
                .flat_map(|r| [r.observed.as_str(), r.manipulated.as_str()])
                .collect(),
        };
        let text = match self.endpoint.post_text(&body) {
            Ok(t) => t,
            Err(e) => return fail(e.to_string()),
        };
        // Non-finite values are not JSON, but common serialisers emit them.
        let cleaned = text
            .replace("-Infinity", "null")
            .replace("Infinity", "null")
            .replace("NaN", "null");
        let resp: ScoreResponse = match serde_json::from_str(&cleaned) {
            Ok(r) => r,
            Err(e) => return fail(format!("malformed response: {e}: {text}")),
        };
        if resp.logprobs.len() != 2 * batch.len() {
            return fail(format!(
                "malformed response: expected {} logprobs, got {}: {text}",
                2 * batch.len(),
                resp.logprobs.len()
            ));
        }
        resp.logprobs
            .chunks(2)
            .map(|c| Ok((c[0].unwrap_or(f64::NAN), c[1].unwrap_or(f64::NAN))))
            .collect()
    }
}
