//! Monolingual language identification backends.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::backend::{ClientConfig, JsonEndpoint};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidPrediction {
    /// ISO 639-1 code.
    pub language: String,
    pub confidence: f64,
}

pub trait MonoLidBackend: Send + Sync {
    fn name(&self) -> String;
    fn detect(&self, text: &str) -> Result<LidPrediction>;
}

#[derive(Serialize)]
struct LidRequest<'a> {
    text: &'a str,
}

/// Remote classifier: `{text}` → `{language, confidence}`.
pub struct HttpMonoLid {
    endpoint: JsonEndpoint,
}

impl HttpMonoLid {
    pub fn new(url: impl Into<String>, config: ClientConfig) -> Self {
        Self {
            endpoint: JsonEndpoint::new(url, config),
        }
    }
}

impl MonoLidBackend for HttpMonoLid {
    fn name(&self) -> String {
        self.endpoint.url().to_string()
    }

    fn detect(&self, text: &str) -> Result<LidPrediction> {
        self.endpoint.post(&LidRequest { text })
    }
}

type Profile = HashMap<[char; 3], f64>;

fn profile(text: &str) -> Profile {
    let mut counts: Profile = HashMap::new();
    for word in text.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()) {
        let padded: Vec<char> = std::iter::once(' ')
            .chain(word.chars().flat_map(char::to_lowercase))
            .chain(std::iter::once(' '))
            .collect();
        for w in padded.windows(3) {
            *counts.entry([w[0], w[1], w[2]]).or_default() += 1.0;
        }
    }
    let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in counts.values_mut() {
            *v /= norm;
        }
    }
    counts
}

fn cosine(a: &Profile, b: &Profile) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small
        .iter()
        .filter_map(|(k, v)| large.get(k).map(|w| v * w))
        .sum()
}

/// Character-trigram cosine classifier over small seed texts. Deterministic
/// stand-in for a production monolingual identifier.
pub struct TrigramLid {
    profiles: Vec<(String, Profile)>,
}

const SEEDS: &[(&str, &str)] = &[
    ("da", include_str!("../../data/lid_seed/da.txt")),
    ("de", include_str!("../../data/lid_seed/de.txt")),
    ("en", include_str!("../../data/lid_seed/en.txt")),
    ("es", include_str!("../../data/lid_seed/es.txt")),
    ("fr", include_str!("../../data/lid_seed/fr.txt")),
    ("it", include_str!("../../data/lid_seed/it.txt")),
    ("nl", include_str!("../../data/lid_seed/nl.txt")),
    ("sv", include_str!("../../data/lid_seed/sv.txt")),
];

impl TrigramLid {
    pub fn from_seeds<S: AsRef<str>>(seeds: &[(S, S)]) -> Self {
        Self {
            profiles: seeds
                .iter()
                .map(|(lang, text)| (lang.as_ref().to_string(), profile(text.as_ref())))
                .collect(),
        }
    }

    /// Classifier over the bundled seed texts (da, de, en, es, fr, it, nl, sv).
    pub fn bundled() -> Self {
        Self::from_seeds(SEEDS)
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.profiles.iter().map(|(l, _)| l.as_str())
    }
}

impl MonoLidBackend for TrigramLid {
    fn name(&self) -> String {
        "trigram".into()
    }

    fn detect(&self, text: &str) -> Result<LidPrediction> {
        let p = profile(text);
        let mut best = ("und", 0.0);
        for (lang, prof) in &self.profiles {
            let s = cosine(&p, prof);
            // ties resolve to the alphabetically first language
            if s > best.1 {
                best = (lang, s);
            }
        }
        Ok(LidPrediction {
            language: best.0.to_string(),
            confidence: best.1.clamp(0.0, 1.0),
        })
    }
}
