//! Records the shipped fixture cassettes by running the pipeline and a set
//! of component calls against the scripted model.

use std::path::{Path, PathBuf};

use super::{demo_events, expert_name, expert_summary, scripted_gateway, Scenario, DISCIPLINES};
use crate::expert::{prime_stage1, prime_stage2, prime_stage3, rank_teams, ExpertProfile, RankingInput, RankingMode};
use crate::judge::{judge, Ballot};
use crate::llm::{Cassette, ChatMessage, ChatRequest, Gateway};
use crate::metrics::{MetricResult, MetricSpec, Polarity, PredefinedRegistry, Programmer, DEFAULT_MATCH_THRESHOLD};
use crate::orchestrator::{define_goal_metric, run_pipeline, run_vanilla, MatchReport, PipelineAbort, RunConfig};
use crate::panel::{build_pool, generate_disciplines, generate_experts, select_panel, Discipline, PanelCriteria};
use crate::store::{RepoStore, TeamId};

pub const FIXTURE_GOAL: &str = "keep projects on track";
/// Goal used for the duplicate-discipline and invalid-panel recordings.
pub const ALT_GOAL: &str = "reduce onboarding time";
/// Goal used for the short baseline list and the garbled ranking.
pub const REVIEW_GOAL: &str = "improve code review quality";
/// An aggregation preference with no mechanism keyword in it.
pub const OPEN_PREFERENCE: &str = "whatever the panel would consider sensible";

/// The request whose fingerprint the gateway tests pin.
pub fn ping_request() -> ChatRequest {
    ChatRequest::new(vec![ChatMessage::user("ping")], 16)
}

/// First expert of the first scripted discipline.
pub fn fixture_expert() -> ExpertProfile {
    ExpertProfile::new(expert_name(0, 0), DISCIPLINES[0], expert_summary(0, 0))
}

pub fn fixture_ranking_results() -> Vec<MetricResult> {
    let ids = ["r1", "r2", "r3", "r4", "r5", "r6"].map(TeamId::from);
    let commits = [24.0, 18.0, 9.0, 30.0, 14.0, 21.0];
    let review = [6.0, 30.0, 72.0, 3.0, 48.0, 12.0];
    vec![
        MetricResult::from_values("commitFrequency", Polarity::HigherBetter, ids.iter().cloned().zip(commits)),
        MetricResult::from_values("reviewTurnaroundTime", Polarity::LowerBetter, ids.iter().cloned().zip(review)),
    ]
}

pub fn fixture_ballots() -> Vec<Ballot> {
    vec![
        Ballot::new("A", ["r4", "r1", "r2"]),
        Ballot::new("B", ["r1", "r4", "r2"]),
        Ballot::new("C", ["r4", "r2", "r1"]),
    ]
}

/// Union of two cassettes. The same fingerprint with different responses
/// is an error, since replay could then serve either.
pub fn merge_cassettes(mut into: Cassette, from: &Cassette) -> Result<Cassette, String> {
    for (key, entry) in from.entries() {
        match into.get(key) {
            Some(existing) if existing.response != entry.response => {
                return Err(format!("conflicting responses for fingerprint {key}"));
            }
            Some(_) => {}
            None => {
                into.insert(entry.request.clone(), entry.response.clone());
            }
        }
    }
    Ok(into)
}

fn recorded(gateway: &Gateway) -> Cassette {
    gateway.recorded().expect("scripted gateways record")
}

/// Runs the pipeline against the script and returns what was recorded.
pub fn record_pipeline(
    config: &RunConfig,
    scenario: Scenario,
    store: &RepoStore,
    registry: &PredefinedRegistry,
) -> (Cassette, Result<MatchReport, PipelineAbort>) {
    let gateway = scripted_gateway(scenario);
    let outcome = run_pipeline(config, &gateway, store, registry);
    (recorded(&gateway), outcome)
}

/// The component-level calls the integration tests replay. `store` must
/// hold [`demo_events`].
pub fn record_components(store: &RepoStore, registry: &PredefinedRegistry) -> Result<Cassette, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let teams = store.list_teams().map_err(|e| err(&e))?;
    let catalog = store.schema_catalog().map_err(|e| err(&e))?;
    let mut all = Cassette::new();

    let gw = scripted_gateway(Scenario::default());
    gw.complete(&ping_request()).map_err(|e| err(&e))?;
    define_goal_metric(FIXTURE_GOAL, &gw).map_err(|e| err(&e))?;
    let programmer = Programmer {
        gateway: &gw,
        store,
        registry,
        catalog: &catalog,
        match_threshold: DEFAULT_MATCH_THRESHOLD,
    };
    let task = MetricSpec::supporting("taskCompletionRate", "Share of issues that are closed.", "");
    programmer.produce(&task, &teams, None).map_err(|e| err(&e))?;

    let expert = fixture_expert();
    let mut transcript = prime_stage1(&expert, &gw).map_err(|e| err(&e))?;
    prime_stage2(&mut transcript, FIXTURE_GOAL, &TeamId::from("r3"), 5, &gw).map_err(|e| err(&e))?;
    prime_stage3(&mut transcript, &catalog, 3, &gw).map_err(|e| err(&e))?;

    let results = fixture_ranking_results();
    let input = RankingInput {
        expert: &expert,
        goal: FIXTURE_GOAL,
        team_x: &TeamId::from("r3"),
        results: &results,
        teams: &teams,
    };
    rank_teams(&input, RankingMode::Model, &gw).map_err(|e| err(&e))?;
    judge(&fixture_ballots(), OPEN_PREFERENCE, Some(&gw)).map_err(|e| err(&e))?;
    run_vanilla(FIXTURE_GOAL, &gw).map_err(|e| err(&e))?;

    let disciplines: Vec<Discipline> = DISCIPLINES[..4].iter().map(|d| Discipline(d.to_string())).collect();
    let pool = build_pool(&disciplines, 3, &gw).map_err(|e| err(&e))?;
    all = merge_cassettes(all, &recorded(&gw))?;

    let dup = scripted_gateway(Scenario { duplicate_disciplines: true, ..Scenario::default() });
    generate_disciplines(ALT_GOAL, 4, &dup).map_err(|e| err(&e))?;
    all = merge_cassettes(all, &recorded(&dup))?;

    let nameless = scripted_gateway(Scenario { nameless_expert: true, ..Scenario::default() });
    generate_experts(&Discipline(DISCIPLINES[7].to_string()), 3, &nameless).map_err(|e| err(&e))?;
    all = merge_cassettes(all, &recorded(&nameless))?;

    let invalid = scripted_gateway(Scenario { invalid_panel_pick: true, ..Scenario::default() });
    select_panel(&pool, &PanelCriteria::default(), ALT_GOAL, Some(&invalid)).map_err(|e| err(&e))?;
    all = merge_cassettes(all, &recorded(&invalid))?;

    let short = scripted_gateway(Scenario { vanilla_pairs: 6, ..Scenario::default() });
    run_vanilla(REVIEW_GOAL, &short).map_err(|e| err(&e))?;
    all = merge_cassettes(all, &recorded(&short))?;

    let garbled = scripted_gateway(Scenario { garbled_ranking: true, ..Scenario::default() });
    let input = RankingInput { goal: REVIEW_GOAL, ..input };
    rank_teams(&input, RankingMode::Model, &garbled).map_err(|e| err(&e))?;
    all = merge_cassettes(all, &recorded(&garbled))?;

    Ok(all)
}

/// Every authored fixture file, by name, with its contents.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSet {
    pub files: Vec<(&'static str, String)>,
}

impl FixtureSet {
    pub const DEMO_EVENTS: &'static str = "demo_events.jsonl";
    pub const PIPELINE_DEFAULT: &'static str = "pipeline_default.jsonl";
    pub const PIPELINE_BAD_SQL: &'static str = "pipeline_bad_sql.jsonl";
    pub const COMPONENTS: &'static str = "components.jsonl";

    /// The run configuration the pipeline cassettes were recorded with.
    pub fn pipeline_config(db: &Path, cassette: &Path) -> RunConfig {
        RunConfig {
            goal: FIXTURE_GOAL.to_string(),
            db_path: db.to_path_buf(),
            cassette_path: Some(cassette.to_path_buf()),
            ..RunConfig::default()
        }
    }

    /// Authors everything. `scratch` receives a throwaway database.
    pub fn author(scratch: &Path) -> Result<Self, String> {
        let db: PathBuf = scratch.join("fixture-authoring.sqlite");
        if db.exists() {
            std::fs::remove_file(&db).map_err(|e| e.to_string())?;
        }
        let store = RepoStore::open(&db).map_err(|e| e.to_string())?;
        let events = demo_events();
        store.ingest_str(&events).map_err(|e| e.to_string())?;
        let registry = PredefinedRegistry::shipped();
        let config = Self::pipeline_config(&db, &scratch.join("unused.jsonl"));

        let mut pipelines = Vec::new();
        for scenario in [Scenario::default(), Scenario { bad_sql: true, ..Scenario::default() }] {
            let (cassette, outcome) = record_pipeline(&config, scenario, &store, &registry);
            outcome.map_err(|abort| format!("authoring run aborted: {abort}"))?;
            pipelines.push(cassette.to_jsonl());
        }
        let components = record_components(&store, &registry)?.to_jsonl();
        let bad_sql = pipelines.pop().unwrap_or_default();
        let default = pipelines.pop().unwrap_or_default();
        Ok(Self {
            files: vec![
                (Self::DEMO_EVENTS, events),
                (Self::PIPELINE_DEFAULT, default),
                (Self::PIPELINE_BAD_SQL, bad_sql),
                (Self::COMPONENTS, components),
            ],
        })
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }

    /// Names of files in `dir` that are missing or differ from this set.
    pub fn stale_in(&self, dir: &Path) -> Vec<&'static str> {
        self.files
            .iter()
            .filter(|(name, body)| std::fs::read_to_string(dir.join(name)).ok().as_deref() != Some(body.as_str()))
            .map(|(name, _)| *name)
            .collect()
    }
}
