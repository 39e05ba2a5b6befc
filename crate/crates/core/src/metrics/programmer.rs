//! The programmer agent: turns a metric proposal into executable SQL, either
//! by reusing a registry entry or by asking the model for a query.

use crate::llm::{max_tokens, ChatMessage, Gateway, LlmError};
use crate::prompts::{render, Bindings, Stage};
use crate::store::{schema, RepoStore, SchemaCatalog, StoreError, TeamId, TeamRecord};

use super::{
    evaluate, match_predefined, validate_metric_sql, ImplKind, MetricError, MetricImpl,
    MetricResult, MetricSpec, PredefinedRegistry,
};

/// First line of every programmer prompt.
pub const PROGRAMMER_PROMPT_HEAD: &str =
    "You are the programmer agent of a metrics system for software teams.";
/// First line of the follow-up sent when a generated query fails.
pub const REPAIR_PROMPT_HEAD: &str = "The query you wrote could not be used.";

pub fn programmer_prompt(spec: &MetricSpec, catalog: &SchemaCatalog) -> String {
    let columns: Vec<String> = catalog
        .tables
        .iter()
        .map(|name| match schema::table(name) {
            Some(table) => {
                let cols: Vec<&str> = table.columns.iter().map(|c| c.name).collect();
                format!("- {}({})", name, cols.join(", "))
            }
            None => format!("- {name}"),
        })
        .collect();
    let description = if spec.description.trim().is_empty() {
        "(no description given)"
    } else {
        spec.description.as_str()
    };
    render(
        Stage::Programmer,
        &Bindings::new()
            .set("metric_name", &spec.function_name)
            .set("metric_description", description)
            .set("db_description", &catalog.description)
            .set("db_columns", columns.join("\n")),
    )
    .expect("programmer bindings are complete")
}

fn repair_prompt(error: &str) -> String {
    let error = if error.trim().is_empty() { "unknown error" } else { error };
    render(Stage::Repair, &Bindings::new().set("error", error)).expect("repair binding")
}

/// The body of the first ```sql fenced block, trimmed.
pub fn extract_sql_block(text: &str) -> Option<String> {
    let lower = text.to_ascii_lowercase();
    let start = lower.find("```sql")?;
    let body_start = start + "```sql".len();
    let end = lower[body_start..].find("```")? + body_start;
    let body = text[body_start..end].trim();
    (!body.is_empty()).then(|| body.to_string())
}

fn interpret(spec: &MetricSpec, response: &str) -> Result<MetricImpl, MetricError> {
    let sql = extract_sql_block(response).ok_or(MetricError::NoSqlBlock)?;
    validate_metric_sql(&sql)?;
    Ok(MetricImpl {
        spec: spec.clone(),
        kind: ImplKind::Generated,
        sql,
    })
}

/// Asks the model for an implementation of `spec`.
pub fn implement_via_llm(
    spec: &MetricSpec,
    catalog: &SchemaCatalog,
    gateway: &Gateway,
) -> Result<MetricImpl, MetricError> {
    let messages = vec![ChatMessage::user(programmer_prompt(spec, catalog))];
    let response = gateway.complete(&gateway.request(messages, max_tokens::PROGRAMMER))?;
    interpret(spec, &response.content)
}

/// How a metric was obtained and what it evaluated to.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgrammerOutcome {
    pub implementation: Option<MetricImpl>,
    pub result: MetricResult,
    pub repaired: bool,
}

/// Resolves specs to implementations and runs them.
pub struct Programmer<'a> {
    pub gateway: &'a Gateway,
    pub store: &'a RepoStore,
    pub registry: &'a PredefinedRegistry,
    pub catalog: &'a SchemaCatalog,
    pub match_threshold: f64,
}

impl Programmer<'_> {
    /// Registry match first; otherwise generate, and on a generation or
    /// execution failure re-prompt exactly once with the error before
    /// giving up. Failures end up in the returned result, not as errors;
    /// only gateway and store outages propagate.
    pub fn produce(
        &self,
        spec: &MetricSpec,
        teams: &[TeamRecord],
        exclude: Option<&TeamId>,
    ) -> Result<ProgrammerOutcome, MetricError> {
        if let Some(found) = match_predefined(spec, self.registry, self.match_threshold) {
            let result = evaluate(&found, self.store, teams, exclude)?;
            return Ok(ProgrammerOutcome {
                implementation: Some(found),
                result,
                repaired: false,
            });
        }

        let mut messages = vec![ChatMessage::user(programmer_prompt(spec, self.catalog))];
        let mut errors = Vec::new();
        for attempt in 0..2 {
            let response = self
                .gateway
                .complete(&self.gateway.request(messages.clone(), max_tokens::PROGRAMMER))?;
            let error = match interpret(spec, &response.content) {
                Ok(metric) => {
                    let result = evaluate(&metric, self.store, teams, exclude)?;
                    if !result.failed {
                        return Ok(ProgrammerOutcome {
                            implementation: Some(metric),
                            result,
                            repaired: attempt > 0,
                        });
                    }
                    result.failure.unwrap_or_default()
                }
                Err(e @ (MetricError::NoSqlBlock | MetricError::SandboxReject(_))) => e.to_string(),
                Err(other) => return Err(other),
            };
            errors.push(error.clone());
            messages.push(ChatMessage::assistant(response.content));
            messages.push(ChatMessage::user(repair_prompt(&error)));
        }
        Ok(ProgrammerOutcome {
            implementation: None,
            result: MetricResult::failure(
                spec.function_name.clone(),
                spec.polarity,
                format!("no usable implementation: {}", errors.join(" | then: ")),
            ),
            repaired: true,
        })
    }
}

impl From<LlmError> for MetricError {
    fn from(e: LlmError) -> Self {
        MetricError::Gateway(e)
    }
}

impl From<StoreError> for MetricError {
    fn from(e: StoreError) -> Self {
        MetricError::Store(e)
    }
}
