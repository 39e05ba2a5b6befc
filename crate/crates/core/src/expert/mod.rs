//! A single primed expert agent: staged priming conversation, metric
//! proposals, and the expert's ranking of candidate partner teams.

mod blocks;
mod priming;
mod ranking;

use thiserror::Error;

use crate::llm::LlmError;
use crate::prompts::PromptError;

pub use blocks::{parse_metric_blocks, BlockParse, BlockWarning, ParsedBlock};
pub use priming::{
    list_items, prime_stage1, prime_stage2, prime_stage3, stage1_prompt, stage2_prompt,
    stage3_prompt, ExpertProfile, PrimingStage, PrimingTranscript,
};
pub use ranking::{
    deterministic_ranking, deterministic_scores, parse_ranking, rank_teams, ranking_prompt,
    values_table, RankingInput, RankingMode, TeamRanking,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpertError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gateway(#[from] LlmError),
    #[error("priming out of order: expected a transcript at {expected:?}, found {found:?}")]
    StageOrderViolation {
        expected: PrimingStage,
        found: PrimingStage,
    },
    #[error("response contains no well-formed <metric> block")]
    NoMetricBlocks,
    #[error("unparseable ranking: {0}")]
    UnparseableRanking(String),
    #[error("no usable metric results to rank with")]
    NoUsableMetrics,
}
