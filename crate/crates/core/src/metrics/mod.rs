//! Metric proposals, their executable implementations, and per-team evaluation.

mod evaluate;
mod programmer;
mod registry;
mod spec;

use thiserror::Error;

use crate::llm::LlmError;
use crate::store::StoreError;

pub use evaluate::{evaluate, select_worst, MetricResult};
pub use programmer::{
    extract_sql_block, implement_via_llm, programmer_prompt, Programmer, ProgrammerOutcome,
    PROGRAMMER_PROMPT_HEAD, REPAIR_PROMPT_HEAD,
};
pub use registry::{
    match_predefined, name_similarity, validate_metric_sql, ImplKind, MetricImpl,
    PredefinedRegistry, RegistryEntry, DEFAULT_MATCH_THRESHOLD,
};
pub use spec::{canonical_name, name_tokens, MetricRole, MetricSpec, Polarity};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("response contains no ```sql fenced block")]
    NoSqlBlock,
    #[error("query rejected: {0}")]
    SandboxReject(String),
    #[error("metric result has no usable values")]
    EmptyResult,
    #[error("invalid metric registry: {0}")]
    InvalidRegistry(String),
    #[error(transparent)]
    Gateway(LlmError),
    #[error(transparent)]
    Store(StoreError),
}
