//! Forced-choice judgment records as exported by the judging service.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
}

impl Choice {
    pub fn other(self) -> Choice {
        match self {
            Choice::A => Choice::B,
            Choice::B => Choice::A,
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Choice::A => "A",
            Choice::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolved {
    Observed,
    Manipulated,
}

/// Maps a displayed choice back to the sentence it showed.
pub fn resolve(choice: Choice, observed_side: Choice) -> Resolved {
    if choice == observed_side {
        Resolved::Observed
    } else {
        Resolved::Manipulated
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub annotator: String,
    pub pair_id: String,
    pub choice: Choice,
    /// Where the observed sentence was displayed.
    pub observed_side: Choice,
    pub resolved_choice: Resolved,
    pub batch: usize,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

impl JudgmentRecord {
    /// `resolved_choice` agrees with `choice` and `observed_side`.
    pub fn is_consistent(&self) -> bool {
        resolve(self.choice, self.observed_side) == self.resolved_choice
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution() {
        assert_eq!(resolve(Choice::A, Choice::A), Resolved::Observed);
        assert_eq!(resolve(Choice::A, Choice::B), Resolved::Manipulated);
        assert_eq!(resolve(Choice::B, Choice::B), Resolved::Observed);
    }

    #[test]
    fn record_round_trip() {
        let r = JudgmentRecord {
            annotator: "ann1".into(),
            pair_id: "de-en:d#0".into(),
            choice: Choice::B,
            observed_side: Choice::A,
            resolved_choice: Resolved::Manipulated,
            batch: 2,
            timestamp: 1_700_000_000_000,
        };
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains(r#""choice":"B""#));
        assert!(s.contains(r#""resolved_choice":"manipulated""#));
        assert_eq!(serde_json::from_str::<JudgmentRecord>(&s).unwrap(), r);
        assert!(r.is_consistent());
    }
}
