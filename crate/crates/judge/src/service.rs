//! Session, presentation and submission logic, independent of transport.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use acs_core::judgment::{resolve, Choice, JudgmentRecord};
use acs_core::pairgen::MinimalPair;
use serde::{Deserialize, Serialize};

use crate::plan::{plan_assignments, Plan, PlanRequest};
use crate::store::JudgmentStore;
use crate::JudgeError;

/// What the service needs to show one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTexts {
    pub pair_id: String,
    pub observed: String,
    pub manipulated: String,
    /// Character range of the differing material in `observed`.
    pub observed_span: (usize, usize),
    pub manipulated_span: (usize, usize),
}

impl From<&MinimalPair> for PairTexts {
    fn from(p: &MinimalPair) -> Self {
        Self {
            pair_id: p.pair_id.clone(),
            observed: p.observed.text().to_string(),
            manipulated: p.manipulated.text().to_string(),
            observed_span: p.observed_span,
            manipulated_span: p.manipulated_span,
        }
    }
}

/// One pair as shown to an annotator. Nothing in it says which sentence
/// is the observed one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub pair_id: String,
    pub a: String,
    pub b: String,
    /// Character ranges to bold-face in `a` and `b`.
    pub a_span: (usize, usize),
    pub b_span: (usize, usize),
    pub batch: usize,
    pub judged: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum NextItem {
    Item(Presentation),
    Complete { judged: usize, total: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchProgress {
    pub index: usize,
    pub size: usize,
    pub judged: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub annotator: String,
    pub judged: usize,
    pub total: usize,
    pub batches: Vec<BatchProgress>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub pair_id: String,
    pub judged: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubmitRejection {
    UnknownPair,
    NotAssigned,
    Duplicate(JudgmentRecord),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportFilter {
    pub annotator: Option<String>,
    /// Only records from batches the annotator has finished.
    #[serde(default)]
    pub complete_batches: bool,
}

pub struct JudgeService {
    pairs: HashMap<String, PairTexts>,
    pair_order: Vec<String>,
    plan: RwLock<Option<Plan>>,
    plan_path: Option<PathBuf>,
    store: Mutex<JudgmentStore>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl JudgeService {
    /// `plan_path`, if given, is read when it exists and written when a plan
    /// is created through [`JudgeService::create_plan`].
    pub fn new(
        pairs: Vec<PairTexts>,
        plan_path: Option<&Path>,
        log_path: &Path,
    ) -> Result<Self, JudgeError> {
        let plan = match plan_path {
            Some(p) if p.exists() => Some(load_plan(p)?),
            _ => None,
        };
        let pair_order = pairs.iter().map(|p| p.pair_id.clone()).collect();
        let service = Self {
            pairs: pairs.into_iter().map(|p| (p.pair_id.clone(), p)).collect(),
            pair_order,
            plan: RwLock::new(None),
            plan_path: plan_path.map(Path::to_path_buf),
            store: Mutex::new(JudgmentStore::open(log_path)?),
        };
        if let Some(plan) = plan {
            service.check_plan(&plan)?;
            *service.plan.write().expect("plan lock") = Some(plan);
        }
        Ok(service)
    }

    fn check_plan(&self, plan: &Plan) -> Result<(), JudgeError> {
        for a in &plan.assignments {
            if !self.pairs.contains_key(&a.pair_id) {
                return Err(JudgeError::Plan(format!(
                    "plan references unknown pair {}",
                    a.pair_id
                )));
            }
        }
        Ok(())
    }

    pub fn plan(&self) -> Option<Plan> {
        self.plan.read().expect("plan lock").clone()
    }

    /// Creates the plan over all loaded pairs. Asking again with the same
    /// request returns the existing plan; a different request is refused.
    pub fn create_plan(&self, req: &PlanRequest) -> Result<Plan, JudgeError> {
        let mut guard = self.plan.write().expect("plan lock");
        if let Some(existing) = guard.as_ref() {
            if existing.request() == *req {
                return Ok(existing.clone());
            }
            return Err(JudgeError::Conflict("a different plan already exists".into()));
        }
        let mut plan = plan_assignments(&self.pair_order, &req.pool, req.k, req.seed, req.batch_size)?;
        plan.issue_tokens();
        if let Some(path) = &self.plan_path {
            save_plan(path, &plan)?;
        }
        *guard = Some(plan.clone());
        Ok(plan)
    }

    /// Resolves a bearer token to its annotator.
    pub fn open_session(&self, token: &str) -> Result<String, JudgeError> {
        let guard = self.plan.read().expect("plan lock");
        let plan = guard.as_ref().ok_or(JudgeError::NoPlan)?;
        plan.annotator_for_token(token)
            .map(str::to_string)
            .ok_or(JudgeError::Unauthorized)
    }

    fn with_plan<T>(&self, f: impl FnOnce(&Plan) -> Result<T, JudgeError>) -> Result<T, JudgeError> {
        let guard = self.plan.read().expect("plan lock");
        f(guard.as_ref().ok_or(JudgeError::NoPlan)?)
    }

    pub fn progress(&self, annotator: &str) -> Result<Progress, JudgeError> {
        self.with_plan(|plan| {
            let store = self.store.lock().expect("store lock");
            let batches: Vec<BatchProgress> = plan
                .batches_of(annotator)
                .map(|b| BatchProgress {
                    index: b.index,
                    size: b.pair_ids.len(),
                    judged: b
                        .pair_ids
                        .iter()
                        .filter(|p| store.get(annotator, p).is_some())
                        .count(),
                })
                .collect();
            Ok(Progress {
                annotator: annotator.to_string(),
                judged: batches.iter().map(|b| b.judged).sum(),
                total: batches.iter().map(|b| b.size).sum(),
                batches,
            })
        })
    }

    /// First unjudged pair in batch order; repeated calls without a
    /// submission return the same pair.
    pub fn next_item(&self, annotator: &str) -> Result<NextItem, JudgeError> {
        let progress = self.progress(annotator)?;
        self.with_plan(|plan| {
            let store = self.store.lock().expect("store lock");
            for batch in plan.batches_of(annotator) {
                for pair_id in &batch.pair_ids {
                    if store.get(annotator, pair_id).is_some() {
                        continue;
                    }
                    let texts = &self.pairs[pair_id];
                    let side = presentation(plan, pair_id, annotator)?;
                    let (a, a_span, b, b_span) = match side {
                        Choice::A => (
                            &texts.observed,
                            texts.observed_span,
                            &texts.manipulated,
                            texts.manipulated_span,
                        ),
                        Choice::B => (
                            &texts.manipulated,
                            texts.manipulated_span,
                            &texts.observed,
                            texts.observed_span,
                        ),
                    };
                    return Ok(NextItem::Item(Presentation {
                        pair_id: pair_id.clone(),
                        a: a.clone(),
                        b: b.clone(),
                        a_span,
                        b_span,
                        batch: batch.index,
                        judged: progress.judged,
                        total: progress.total,
                    }));
                }
            }
            Ok(NextItem::Complete {
                judged: progress.judged,
                total: progress.total,
            })
        })
    }

    /// Records a choice for any pair assigned to the annotator and not yet
    /// judged by them. The record is on disk before this returns.
    pub fn submit(
        &self,
        annotator: &str,
        pair_id: &str,
        choice: Choice,
    ) -> Result<Result<Ack, SubmitRejection>, JudgeError> {
        if !self.pairs.contains_key(pair_id) {
            return Ok(Err(SubmitRejection::UnknownPair));
        }
        self.with_plan(|plan| {
            let Some(batch) = plan
                .batches_of(annotator)
                .find(|b| b.pair_ids.iter().any(|p| p == pair_id))
            else {
                return Ok(Err(SubmitRejection::NotAssigned));
            };
            let side = presentation(plan, pair_id, annotator)?;
            let record = JudgmentRecord {
                annotator: annotator.to_string(),
                pair_id: pair_id.to_string(),
                choice,
                observed_side: side,
                resolved_choice: resolve(choice, side),
                batch: batch.index,
                timestamp: now_ms(),
            };
            let mut store = self.store.lock().expect("store lock");
            if let Err(original) = store.append(record)? {
                return Ok(Err(SubmitRejection::Duplicate(original)));
            }
            let total: usize = plan.batches_of(annotator).map(|b| b.pair_ids.len()).sum();
            let judged = plan
                .batches_of(annotator)
                .flat_map(|b| b.pair_ids.iter())
                .filter(|p| store.get(annotator, p).is_some())
                .count();
            Ok(Ok(Ack {
                pair_id: pair_id.to_string(),
                judged,
                total,
            }))
        })
    }

    /// Records ordered by pair id, then annotator.
    pub fn export(&self, filter: &ExportFilter) -> Vec<JudgmentRecord> {
        let store = self.store.lock().expect("store lock");
        let plan = self.plan.read().expect("plan lock");
        filter_records(store.records(), plan.as_ref(), filter)
    }
}

/// Applies `filter` and orders the result by pair id, then annotator.
/// Without a plan no batch counts as complete.
pub fn filter_records(
    records: &[JudgmentRecord],
    plan: Option<&Plan>,
    filter: &ExportFilter,
) -> Vec<JudgmentRecord> {
    let judged: HashSet<(&str, &str)> = records
        .iter()
        .map(|r| (r.annotator.as_str(), r.pair_id.as_str()))
        .collect();
    let batch_complete = |r: &JudgmentRecord| {
        plan.and_then(|p| p.batches_of(&r.annotator).find(|b| b.index == r.batch))
            .is_some_and(|b| {
                b.pair_ids
                    .iter()
                    .all(|p| judged.contains(&(r.annotator.as_str(), p.as_str())))
            })
    };
    let mut out: Vec<JudgmentRecord> = records
        .iter()
        .filter(|r| filter.annotator.as_ref().is_none_or(|a| *a == r.annotator))
        .filter(|r| !filter.complete_batches || batch_complete(r))
        .cloned()
        .collect();
    out.sort_by(|x, y| (&x.pair_id, &x.annotator).cmp(&(&y.pair_id, &y.annotator)));
    out
}

fn presentation(plan: &Plan, pair_id: &str, annotator: &str) -> Result<Choice, JudgeError> {
    plan.assignments
        .iter()
        .find(|a| a.pair_id == pair_id)
        .and_then(|a| a.presentation.get(annotator).copied())
        .ok_or_else(|| JudgeError::Plan(format!("{annotator} has no placement for {pair_id}")))
}

pub fn load_plan(path: &Path) -> Result<Plan, JudgeError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| JudgeError::Plan(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| JudgeError::Plan(format!("{}: {e}", path.display())))
}

pub fn save_plan(path: &Path, plan: &Plan) -> Result<(), JudgeError> {
    let text = serde_json::to_string_pretty(plan).map_err(|e| JudgeError::Plan(e.to_string()))?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text + "\n")
        .and_then(|_| std::fs::rename(&tmp, path))
        .map_err(|e| JudgeError::Plan(format!("{}: {e}", path.display())))
}
