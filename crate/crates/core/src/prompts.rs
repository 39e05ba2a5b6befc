//! Plain-text prompt templates with `{{variable}}` placeholders.
//!
//! The bodies live under `templates/` and are embedded at compile time.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("template variable {0:?} is not bound")]
    MissingVariable(String),
    #[error("template variable {0:?} is bound to an empty value")]
    EmptyBinding(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Stage1,
    Stage2,
    Stage3,
    GoalMetric,
    Programmer,
    Repair,
    Ranking,
    Vanilla,
    Disciplines,
    DisciplinesRetry,
    Experts,
    ExpertsRetry,
    Panel,
    Judge,
}

impl Stage {
    fn body(self) -> &'static str {
        match self {
            Stage::Stage1 => include_str!("../templates/stage1.txt"),
            Stage::Stage2 => include_str!("../templates/stage2.txt"),
            Stage::Stage3 => include_str!("../templates/stage3.txt"),
            Stage::GoalMetric => include_str!("../templates/goal_metric.txt"),
            Stage::Programmer => include_str!("../templates/programmer.txt"),
            Stage::Repair => include_str!("../templates/repair.txt"),
            Stage::Ranking => include_str!("../templates/ranking.txt"),
            Stage::Vanilla => include_str!("../templates/vanilla.txt"),
            Stage::Disciplines => include_str!("../templates/disciplines.txt"),
            Stage::DisciplinesRetry => include_str!("../templates/disciplines_retry.txt"),
            Stage::Experts => include_str!("../templates/experts.txt"),
            Stage::ExpertsRetry => include_str!("../templates/experts_retry.txt"),
            Stage::Panel => include_str!("../templates/panel.txt"),
            Stage::Judge => include_str!("../templates/judge.txt"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub stage: Stage,
    pub body: String,
    /// Placeholder names in order of first appearance.
    pub required_vars: Vec<String>,
}

impl PromptTemplate {
    pub fn new(stage: Stage, body: impl Into<String>) -> Self {
        let body = body.into();
        let mut required_vars: Vec<String> = Vec::new();
        for (_, name) in placeholders(&body) {
            if !required_vars.iter().any(|v| v == name) {
                required_vars.push(name.to_string());
            }
        }
        Self {
            stage,
            body,
            required_vars,
        }
    }

    /// The shipped template for `stage`.
    pub fn builtin(stage: Stage) -> Self {
        Self::new(stage, stage.body().trim_end())
    }
}

/// `(byte range, name)` of each `{{name}}` occurrence.
fn placeholders(body: &str) -> Vec<(std::ops::Range<usize>, &str)> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(open) = body[pos..].find("{{").map(|i| i + pos) {
        let Some(close) = body[open + 2..].find("}}").map(|i| i + open + 2) else {
            break;
        };
        let name = &body[open + 2..close];
        if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            out.push((open..close + 2, name));
            pos = close + 2;
        } else {
            pos = open + 2;
        }
    }
    out
}

/// Variable bindings for [`render_template`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings(BTreeMap<String, String>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, name: &str, value: impl fmt::Display) -> Self {
        self.0.insert(name.to_string(), value.to_string());
        self
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.get(name).map(String::as_str)
    }
}

/// Substitutes every placeholder in one pass; text outside placeholders is
/// copied byte for byte.
pub fn render_template(template: &PromptTemplate, bindings: &Bindings) -> Result<String, PromptError> {
    for name in &template.required_vars {
        match bindings.get(name) {
            None => return Err(PromptError::MissingVariable(name.clone())),
            Some(v) if v.trim().is_empty() => return Err(PromptError::EmptyBinding(name.clone())),
            Some(_) => {}
        }
    }
    let mut out = String::with_capacity(template.body.len());
    let mut last = 0;
    for (range, name) in placeholders(&template.body) {
        out.push_str(&template.body[last..range.start]);
        out.push_str(bindings.get(name).expect("checked above"));
        last = range.end;
    }
    out.push_str(&template.body[last..]);
    Ok(out)
}

/// Renders a shipped template.
pub fn render(stage: Stage, bindings: &Bindings) -> Result<String, PromptError> {
    render_template(&PromptTemplate::builtin(stage), bindings)
}
