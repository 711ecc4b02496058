//! Forced-choice judgment collection: assignment planning, sessions,
//! durable storage and an HTTP API.

pub mod plan;
pub mod server;
pub mod service;
pub mod store;

pub use plan::{plan_assignments, Assignment, Batch, Plan, PlanRequest};
pub use service::{filter_records, ExportFilter, JudgeService, NextItem, PairTexts, Presentation};
pub use store::JudgmentStore;

#[derive(Debug, thiserror::Error)]
pub enum JudgeError {
    #[error("plan: {0}")]
    Plan(String),
    #[error("store: {0}")]
    Store(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("no plan has been created")]
    NoPlan,
    #[error("unknown token")]
    Unauthorized,
}
