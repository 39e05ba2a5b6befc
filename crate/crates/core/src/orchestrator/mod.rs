//! The lead orchestrator: configuration, the end-to-end pipeline, the
//! single-prompt baseline, metric diversity statistics and report output.

mod config;
mod pipeline;
mod report;
mod stats;
mod vanilla;

use thiserror::Error;

use crate::llm::LlmError;
use crate::prompts::PromptError;
use crate::store::StoreError;

pub use config::{build_gateway, ConfigLayer, PanelLayer, RunConfig, DEFAULT_AGGREGATION};
pub use pipeline::{
    define_goal_metric, goal_metric_prompt, run_from_config, run_pipeline, AbortCause, MatchReport,
    PipelineAbort, PipelineStage, RunParameters, SupportingMetric,
};
pub use report::{emit_report, render_report, report_json, report_markdown, ReportFormat};
pub use stats::{diversity_stats, diversity_stats_from_names, metric_names_from_json, top_k_share, DiversityStats};
pub use vanilla::{parse_vanilla_pairs, run_vanilla, vanilla_prompt};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrchestratorError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no input to compute statistics over")]
    EmptyInput,
    #[error("response holds no name/description pairs")]
    UnparseableVanillaList,
    #[error("response contains no well-formed <metric> block")]
    NoMetricBlocks,
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Gateway(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Abort(Box<PipelineAbort>),
}
