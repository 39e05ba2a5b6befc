use std::fmt;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::OrchestratorError;
use super::RunConfig;
use crate::expert::{
    parse_metric_blocks, prime_stage1, prime_stage2, prime_stage3, rank_teams, ExpertError,
    ExpertProfile, PrimingTranscript, RankingInput, TeamRanking,
};
use crate::judge::{judge, Ballot, Decision, JudgeError};
use crate::llm::{max_tokens, BackendKind, ChatMessage, Gateway, LlmError};
use crate::metrics::{
    select_worst, MetricError, MetricImpl, MetricResult, MetricRole, MetricSpec,
    PredefinedRegistry, Programmer,
};
use crate::panel::{build_pool, generate_disciplines, select_panel, Discipline, ExpertPool, Panel, PanelError};
use crate::prompts::{render, Bindings, Stage};
use crate::store::{RepoStore, SchemaCatalog, StoreError, TeamId, TeamRecord};

pub fn goal_metric_prompt(goal: &str) -> Result<String, OrchestratorError> {
    Ok(render(Stage::GoalMetric, &Bindings::new().set("goal", goal))?)
}

/// The goal metric and any warnings raised while reading it.
pub fn define_goal_metric(goal: &str, gateway: &Gateway) -> Result<(MetricSpec, Vec<String>), OrchestratorError> {
    if goal.trim().is_empty() {
        return Err(OrchestratorError::Config("goal must not be empty".into()));
    }
    let prompt = goal_metric_prompt(goal)?;
    let reply = gateway.complete(&gateway.request(vec![ChatMessage::user(prompt)], max_tokens::GOAL_METRIC))?;
    let parsed = parse_metric_blocks(&reply.content);
    let mut warnings: Vec<String> = parsed
        .warnings
        .iter()
        .map(|w| format!("goal metric: skipped malformed block at offset {}: {}", w.offset, w.message))
        .collect();
    let block = parsed.blocks.first().ok_or(OrchestratorError::NoMetricBlocks)?;
    if !block.polarity_declared {
        warnings.push(format!(
            "goal metric {} declared no polarity; assuming {}",
            block.spec.function_name, block.spec.polarity
        ));
    }
    Ok((block.spec.clone().with_role(MetricRole::Goal), warnings))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineStage {
    Setup,
    GoalMetric,
    WorstTeam,
    Disciplines,
    Experts,
    Panel,
    Priming,
    Metrics,
    Ranking,
    Judge,
}

impl fmt::Display for PipelineStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string"))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AbortCause {
    #[error(transparent)]
    Orchestrator(#[from] OrchestratorError),
    #[error(transparent)]
    Expert(#[from] ExpertError),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{0}")]
    Empty(String),
}

impl AbortCause {
    pub fn gateway_error(&self) -> Option<&LlmError> {
        match self {
            AbortCause::Orchestrator(OrchestratorError::Gateway(e))
            | AbortCause::Expert(ExpertError::Gateway(e))
            | AbortCause::Panel(PanelError::Gateway(e))
            | AbortCause::Metric(MetricError::Gateway(e))
            | AbortCause::Judge(JudgeError::Gateway(e)) => Some(e),
            _ => None,
        }
    }

    /// The fingerprint of the request a replay cassette could not answer.
    pub fn replay_miss(&self) -> Option<&str> {
        match self.gateway_error() {
            Some(LlmError::ReplayMiss(fp)) => Some(fp),
            _ => None,
        }
    }
}

/// A run that stopped because a stage produced nothing usable. Carries the
/// transcripts gathered so far for debugging.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("pipeline aborted during {stage}: {cause}")]
pub struct PipelineAbort {
    pub stage: PipelineStage,
    pub cause: AbortCause,
    pub transcripts: Vec<PrimingTranscript>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunParameters {
    pub perspectives: usize,
    pub experts_per_field: usize,
    pub panel_size: usize,
    pub panel_criteria: String,
    pub metrics_per_expert: usize,
    pub num_of_tools: usize,
    pub aggregation_preference: String,
    pub backend: BackendKind,
    pub model: String,
    pub seed_label: String,
}

impl From<&RunConfig> for RunParameters {
    fn from(c: &RunConfig) -> Self {
        Self {
            perspectives: c.perspectives,
            experts_per_field: c.experts_per_field,
            panel_size: c.panel_size,
            panel_criteria: c.panel.raw_text.clone(),
            metrics_per_expert: c.metrics_per_expert,
            num_of_tools: c.num_of_tools,
            aggregation_preference: c.aggregation_preference.clone(),
            backend: c.backend,
            model: c.model.clone(),
            seed_label: c.seed_label.clone(),
        }
    }
}

/// One expert-proposed metric and how it was implemented. The matching
/// entry of `MatchReport::metric_results` holds its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportingMetric {
    pub expert: String,
    pub spec: MetricSpec,
    pub implementation: Option<MetricImpl>,
    pub repaired: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub goal: String,
    pub parameters: RunParameters,
    pub goal_metric: MetricSpec,
    pub goal_metric_impl: MetricImpl,
    pub goal_metric_values: MetricResult,
    pub team_x: TeamId,
    pub disciplines: Vec<Discipline>,
    pub expert_pool: ExpertPool,
    pub panel: Panel,
    pub supporting_metrics: Vec<SupportingMetric>,
    pub metric_results: Vec<MetricResult>,
    pub rankings: Vec<TeamRanking>,
    pub ballots: Vec<Ballot>,
    pub decision: Decision,
    pub team_y: TeamId,
    pub transcripts: Vec<PrimingTranscript>,
    pub warnings: Vec<String>,
}

impl MatchReport {
    pub fn usable_metric_count(&self) -> usize {
        self.metric_results.iter().filter(|r| r.is_usable()).count()
    }
}

struct Run<'a> {
    config: &'a RunConfig,
    gateway: &'a Gateway,
    transcripts: Vec<PrimingTranscript>,
    warnings: Vec<String>,
}

impl Run<'_> {
    fn abort(&self, stage: PipelineStage, cause: impl Into<AbortCause>) -> PipelineAbort {
        PipelineAbort {
            stage,
            cause: cause.into(),
            transcripts: self.transcripts.clone(),
            warnings: self.warnings.clone(),
        }
    }

    /// Stages 1 to 3 for one panel member. The transcript is returned even
    /// when a later stage fails.
    fn prime(
        &self,
        expert: &ExpertProfile,
        team_x: &TeamId,
        catalog: &SchemaCatalog,
    ) -> (Option<PrimingTranscript>, Result<Vec<MetricSpec>, ExpertError>) {
        let mut transcript = match prime_stage1(expert, self.gateway) {
            Ok(t) => t,
            Err(e) => return (None, Err(e)),
        };
        if let Err(e) = prime_stage2(
            &mut transcript,
            &self.config.goal,
            team_x,
            self.config.num_of_tools,
            self.gateway,
        ) {
            return (Some(transcript), Err(e));
        }
        let specs = prime_stage3(&mut transcript, catalog, self.config.metrics_per_expert, self.gateway);
        (Some(transcript), specs)
    }
}

/// Runs the whole pipeline: goal metric, worst team, panel, priming,
/// supporting metrics, rankings and the judge's decision. Individual metric
/// failures become warnings; a stage with no usable output aborts the run.
pub fn run_pipeline(
    config: &RunConfig,
    gateway: &Gateway,
    store: &RepoStore,
    registry: &PredefinedRegistry,
) -> Result<MatchReport, PipelineAbort> {
    use PipelineStage as S;
    let mut run = Run {
        config,
        gateway,
        transcripts: Vec::new(),
        warnings: Vec::new(),
    };
    if let Err(e) = config.validate() {
        return Err(run.abort(S::Setup, e));
    }
    let teams: Vec<TeamRecord> = store.list_teams().map_err(|e| run.abort(S::Setup, e))?;
    if teams.len() < 2 {
        return Err(run.abort(
            S::Setup,
            AbortCause::Empty(format!("need at least 2 teams, the store has {}", teams.len())),
        ));
    }
    let catalog = store.schema_catalog().map_err(|e| run.abort(S::Setup, e))?;
    let programmer = Programmer {
        gateway,
        store,
        registry,
        catalog: &catalog,
        match_threshold: config.match_threshold,
    };

    let (goal_metric, goal_warnings) =
        define_goal_metric(&config.goal, gateway).map_err(|e| run.abort(S::GoalMetric, e))?;
    run.warnings.extend(goal_warnings);
    let goal_outcome = programmer
        .produce(&goal_metric, &teams, None)
        .map_err(|e| run.abort(S::GoalMetric, e))?;
    let goal_impl = match (goal_outcome.implementation, goal_outcome.result.is_usable()) {
        (Some(i), true) => i,
        _ => {
            let why = goal_outcome.result.failure.unwrap_or_else(|| "no values".into());
            return Err(run.abort(
                S::GoalMetric,
                AbortCause::Empty(format!("goal metric {} is unusable: {why}", goal_metric.function_name)),
            ));
        }
    };
    let goal_values = goal_outcome.result;
    let team_x = select_worst(&goal_values, &teams).map_err(|e| run.abort(S::WorstTeam, e))?;
    let candidates: Vec<TeamRecord> = teams.iter().filter(|t| t.team_id != team_x).cloned().collect();

    let disciplines = generate_disciplines(&config.goal, config.perspectives, gateway)
        .map_err(|e| run.abort(S::Disciplines, e))?;
    let pool = build_pool(&disciplines, config.experts_per_field, gateway).map_err(|e| run.abort(S::Experts, e))?;
    let selection =
        select_panel(&pool, &config.panel, &config.goal, Some(gateway)).map_err(|e| run.abort(S::Panel, e))?;
    run.warnings.extend(selection.notice.clone());
    let panel = selection.panel;

    let primed: Vec<_> = thread::scope(|scope| {
        let (run, team_x, catalog) = (&run, &team_x, &catalog);
        let handles: Vec<_> = panel
            .members
            .iter()
            .map(|expert| scope.spawn(move || run.prime(expert, team_x, catalog)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("priming thread panicked"))
            .collect()
    });
    let mut proposals: Vec<(ExpertProfile, Vec<MetricSpec>)> = Vec::new();
    let mut failure = None;
    for (expert, (transcript, specs)) in panel.members.iter().zip(primed) {
        if let Some(t) = transcript {
            run.warnings.extend(t.warnings.iter().cloned());
            run.transcripts.push(t);
        }
        match specs {
            Ok(specs) => proposals.push((expert.clone(), specs)),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }
    if let Some(e) = failure {
        return Err(run.abort(S::Priming, e));
    }

    let mut supporting = Vec::new();
    let mut results = Vec::new();
    let mut owner = Vec::new();
    for (i, (expert, specs)) in proposals.iter().enumerate() {
        for spec in specs {
            let outcome = programmer
                .produce(spec, &teams, Some(&team_x))
                .map_err(|e| run.abort(S::Metrics, e))?;
            if !outcome.result.is_usable() {
                run.warnings.push(format!(
                    "metric {} proposed by {} was dropped: {}",
                    spec.function_name,
                    expert.name,
                    outcome.result.failure.as_deref().unwrap_or("no values")
                ));
            }
            supporting.push(SupportingMetric {
                expert: expert.name.clone(),
                spec: spec.clone(),
                implementation: outcome.implementation,
                repaired: outcome.repaired,
            });
            results.push(outcome.result);
            owner.push(i);
        }
    }
    let pooled: Vec<MetricResult> = results.iter().filter(|r| r.is_usable()).cloned().collect();
    if pooled.is_empty() {
        return Err(run.abort(S::Metrics, AbortCause::Empty("no supporting metric is usable".into())));
    }

    let mut rankings = Vec::new();
    for (i, (expert, _)) in proposals.iter().enumerate() {
        let own: Vec<MetricResult> = results
            .iter()
            .zip(&owner)
            .filter(|(r, &o)| o == i && r.is_usable())
            .map(|(r, _)| r.clone())
            .collect();
        let inputs = if own.is_empty() {
            run.warnings.push(format!(
                "{} has no usable metrics of their own; ranking with the whole panel's metrics",
                expert.name
            ));
            pooled.clone()
        } else {
            own
        };
        let input = RankingInput {
            expert,
            goal: &config.goal,
            team_x: &team_x,
            results: &inputs,
            teams: &candidates,
        };
        let ranking = rank_teams(&input, config.ranking_mode, gateway).map_err(|e| run.abort(S::Ranking, e))?;
        run.warnings.extend(ranking.notice.clone());
        rankings.push(ranking);
    }
    let ballots: Vec<Ballot> = rankings
        .iter()
        .map(|r| Ballot::new(r.expert.name.clone(), r.ranked_teams.clone()))
        .collect();
    let decision: Decision =
        judge(&ballots, &config.aggregation_preference, Some(gateway)).map_err(|e| run.abort(S::Judge, e))?;

    Ok(MatchReport {
        goal: config.goal.clone(),
        parameters: RunParameters::from(config),
        goal_metric,
        goal_metric_impl: goal_impl,
        goal_metric_values: goal_values,
        team_y: decision.winner.clone(),
        team_x,
        disciplines,
        expert_pool: pool,
        panel,
        supporting_metrics: supporting,
        metric_results: results,
        rankings,
        ballots,
        decision,
        transcripts: run.transcripts,
        warnings: run.warnings,
    })
}

/// Opens the store and builds the gateway named by `config`, then runs.
pub fn run_from_config(config: &RunConfig, registry: &PredefinedRegistry) -> Result<MatchReport, OrchestratorError> {
    config.validate()?;
    let store = RepoStore::open(&config.db_path)?;
    let gateway = super::build_gateway(config.backend, config.cassette_path.as_deref(), &config.model)?;
    run_pipeline(config, &gateway, &store, registry).map_err(|e| OrchestratorError::Abort(Box::new(e)))
}
