use serde::{Deserialize, Serialize};

use super::{parse_metric_blocks, ExpertError};
use crate::llm::{max_tokens, ChatMessage, Gateway};
use crate::metrics::MetricSpec;
use crate::prompts::{render, Bindings, Stage};
use crate::store::{SchemaCatalog, TeamId};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExpertProfile {
    pub name: String,
    pub field: String,
    #[serde(default)]
    pub summary: String,
}

impl ExpertProfile {
    pub fn new(name: impl Into<String>, field: impl Into<String>, summary: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            field: field.into(),
            summary: summary.into(),
        }
    }
}

/// How far a transcript has progressed through priming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrimingStage {
    Fresh,
    Knowledge,
    Elements,
    Metrics,
}

/// The growing conversation with one expert agent. Each stage appends its
/// prompt and the model's reply; earlier messages are never touched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimingTranscript {
    pub expert: ExpertProfile,
    pub stage: PrimingStage,
    pub messages: Vec<ChatMessage>,
    /// Items parsed from the stage 2 reply.
    pub elements: Vec<String>,
    pub warnings: Vec<String>,
}

impl PrimingTranscript {
    pub fn new(expert: ExpertProfile) -> Self {
        Self {
            expert,
            stage: PrimingStage::Fresh,
            messages: Vec::new(),
            elements: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn require(&self, expected: PrimingStage) -> Result<(), ExpertError> {
        if self.stage == expected {
            Ok(())
        } else {
            Err(ExpertError::StageOrderViolation {
                expected,
                found: self.stage,
            })
        }
    }

    /// Sends the conversation plus `prompt`; appends both on success only.
    fn exchange(&mut self, prompt: String, max_tokens: u32, gateway: &Gateway) -> Result<String, ExpertError> {
        let mut messages = self.messages.clone();
        messages.push(ChatMessage::user(prompt));
        let response = gateway.complete(&gateway.request(messages.clone(), max_tokens))?;
        messages.push(ChatMessage::assistant(response.content.clone()));
        self.messages = messages;
        Ok(response.content)
    }
}

/// Stage 1 prompt for `expert`. Carries no goal information.
pub fn stage1_prompt(expert: &ExpertProfile) -> Result<String, ExpertError> {
    Ok(render(
        Stage::Stage1,
        &Bindings::new()
            .set("expert", &expert.name)
            .set("expert_field", &expert.field),
    )?)
}

pub fn stage2_prompt(
    expert: &ExpertProfile,
    goal: &str,
    team_x: &TeamId,
    num_of_tools: usize,
) -> Result<String, ExpertError> {
    Ok(render(
        Stage::Stage2,
        &Bindings::new()
            .set("expert", &expert.name)
            .set("goal", goal)
            .set("teamX", team_x)
            .set("num_of_tools", num_of_tools),
    )?)
}

pub fn stage3_prompt(
    expert: &ExpertProfile,
    catalog: &SchemaCatalog,
    metrics_per_expert: usize,
) -> Result<String, ExpertError> {
    Ok(render(
        Stage::Stage3,
        &Bindings::new()
            .set("expert", &expert.name)
            .set("db_description", &catalog.description)
            .set("db_tables", catalog.table_list())
            .set("num_metrics", metrics_per_expert),
    )?)
}

/// Stage 1: elicit the expert's background and contributions.
pub fn prime_stage1(expert: &ExpertProfile, gateway: &Gateway) -> Result<PrimingTranscript, ExpertError> {
    let prompt = stage1_prompt(expert)?;
    let mut transcript = PrimingTranscript::new(expert.clone());
    transcript.exchange(prompt, max_tokens::STAGE1, gateway)?;
    transcript.stage = PrimingStage::Knowledge;
    Ok(transcript)
}

/// Stage 2: expose the goal and the target team; collect important elements.
pub fn prime_stage2(
    transcript: &mut PrimingTranscript,
    goal: &str,
    team_x: &TeamId,
    num_of_tools: usize,
    gateway: &Gateway,
) -> Result<(), ExpertError> {
    transcript.require(PrimingStage::Knowledge)?;
    let prompt = stage2_prompt(&transcript.expert, goal, team_x, num_of_tools)?;
    let reply = transcript.exchange(prompt, max_tokens::STAGE2, gateway)?;
    transcript.elements = list_items(&reply);
    if transcript.elements.len() < num_of_tools {
        transcript.warnings.push(format!(
            "{} listed {} elements, fewer than the {num_of_tools} requested",
            transcript.expert.name,
            transcript.elements.len()
        ));
    }
    transcript.stage = PrimingStage::Elements;
    Ok(())
}

/// Stage 3: expose the data and collect metric proposals, keeping at most
/// `metrics_per_expert` in document order.
pub fn prime_stage3(
    transcript: &mut PrimingTranscript,
    catalog: &SchemaCatalog,
    metrics_per_expert: usize,
    gateway: &Gateway,
) -> Result<Vec<MetricSpec>, ExpertError> {
    transcript.require(PrimingStage::Elements)?;
    let prompt = stage3_prompt(&transcript.expert, catalog, metrics_per_expert)?;
    let mut attempt = transcript.clone();
    let reply = attempt.exchange(prompt, max_tokens::STAGE3, gateway)?;
    let parsed = parse_metric_blocks(&reply);
    if parsed.blocks.is_empty() {
        return Err(ExpertError::NoMetricBlocks);
    }
    for w in &parsed.warnings {
        attempt.warnings.push(format!(
            "{}: skipped malformed metric block at offset {}: {}",
            attempt.expert.name, w.offset, w.message
        ));
    }
    let mut specs: Vec<MetricSpec> = Vec::new();
    for spec in parsed.specs() {
        if specs.iter().any(|s| s.function_name == spec.function_name) {
            attempt.warnings.push(format!(
                "{}: dropped repeated metric {}",
                attempt.expert.name, spec.function_name
            ));
        } else {
            specs.push(spec);
        }
    }
    specs.truncate(metrics_per_expert);
    attempt.stage = PrimingStage::Metrics;
    *transcript = attempt;
    Ok(specs)
}

/// Items of a numbered or bulleted list, markers and surrounding emphasis
/// stripped. Lines that are not list items are ignored.
pub fn list_items(text: &str) -> Vec<String> {
    text.lines().filter_map(list_item).collect()
}

fn list_item(line: &str) -> Option<String> {
    let mut rest = line.trim_start();
    // "**1. Title**" style
    let bold = rest.starts_with("**");
    if bold {
        rest = &rest[2..];
    }
    let after_marker = if let Some(r) = rest
        .strip_prefix("- ")
        .or_else(|| rest.strip_prefix("* "))
        .or_else(|| rest.strip_prefix("• "))
        .or_else(|| rest.strip_prefix("+ "))
    {
        r
    } else {
        let digits = rest.chars().take_while(char::is_ascii_digit).count();
        if digits == 0 || digits > 3 {
            return None;
        }
        let r = &rest[digits..];
        r.strip_prefix(". ")
            .or_else(|| r.strip_prefix(") "))
            .or_else(|| r.strip_prefix(".** "))
            .or_else(|| r.strip_prefix('.').filter(|s| bold && s.starts_with("**")))?
    };
    let item = after_marker.replace("**", "");
    let item = item.trim();
    (!item.is_empty()).then(|| item.to_string())
}
