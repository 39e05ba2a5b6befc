mod common;

use std::collections::BTreeSet;

use common::{replay, replay_pipeline, TempStore};
use gems::llm::LlmError;
use gems::metrics::{MetricRole, Polarity};
use gems::offline::{FIXTURE_GOAL, REVIEW_GOAL};
use gems::orchestrator::{
    define_goal_metric, diversity_stats, diversity_stats_from_names, report_json, report_markdown, run_vanilla,
    vanilla_prompt, AbortCause, ConfigLayer, OrchestratorError, PipelineStage, RunConfig,
};
use gems::metrics::MetricSpec;

#[test]
fn goal_metric_declares_polarity() {
    let (spec, warnings) = define_goal_metric(FIXTURE_GOAL, &replay("components.jsonl")).unwrap();
    assert_eq!(spec.role, MetricRole::Goal);
    assert_eq!(spec.polarity, Polarity::LowerBetter);
    assert!(warnings.is_empty());
    assert!(matches!(define_goal_metric(" ", &replay("components.jsonl")), Err(OrchestratorError::Config(_))));
}

#[test]
fn default_fixture_run_has_the_expected_shape() {
    let report = replay_pipeline("pipeline_default.jsonl", |_| {}).unwrap();
    assert_eq!(report.expert_pool.len(), 12);
    assert_eq!(report.panel.members.len(), 3);
    assert_eq!(report.supporting_metrics.len(), 9);
    assert_eq!(report.metric_results.len(), 9);
    assert!(report.usable_metric_count() <= 9);
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    assert_eq!(report.team_y, report.decision.winner);
    assert_ne!(report.team_y, report.team_x);
    for r in &report.rankings {
        assert!(!r.ranked_teams.contains(&report.team_x));
    }
    for b in &report.ballots {
        assert!(!b.ranking.contains(&report.team_x));
    }
    for r in &report.metric_results {
        assert!(!r.values.contains_key(&report.team_x));
    }
}

#[test]
fn missing_stage3_entry_aborts_in_priming() {
    let mut removed = String::new();
    let abort = replay_pipeline("pipeline_default.jsonl", |c| {
        let key = c
            .entries()
            .find(|(_, e)| e.request.messages.last().is_some_and(|m| m.content.contains("Propose exactly")))
            .map(|(k, _)| k.clone())
            .unwrap();
        c.remove(&key);
        removed = key;
    })
    .unwrap_err();
    assert_eq!(abort.stage, PipelineStage::Priming);
    assert_eq!(abort.cause.replay_miss(), Some(removed.as_str()));
    assert!(matches!(abort.cause.gateway_error(), Some(LlmError::ReplayMiss(_))));
    assert!(!abort.transcripts.is_empty());
}

#[test]
fn one_failing_query_degrades_gracefully() {
    let report = replay_pipeline("pipeline_bad_sql.jsonl", |_| {}).unwrap();
    assert_eq!(report.usable_metric_count(), 8);
    assert_eq!(report.warnings.len(), 1);
    assert!(report.warnings[0].contains("knowledgeSharingIndex"));
    let dropped: Vec<_> = report.supporting_metrics.iter().zip(&report.metric_results).filter(|(_, r)| !r.is_usable()).collect();
    assert_eq!(dropped.len(), 1);
    assert!(dropped[0].0.implementation.is_none());
    assert_ne!(report.team_y, report.team_x);
}

#[test]
fn json_report_is_deterministic_apart_from_header() {
    let a = replay_pipeline("pipeline_default.jsonl", |_| {}).unwrap();
    let b = replay_pipeline("pipeline_default.jsonl", |_| {}).unwrap();
    assert_eq!(report_json(&a, "T").unwrap(), report_json(&b, "T").unwrap());
    let one = report_json(&a, "2024-01-01T00:00:00Z").unwrap();
    let two = report_json(&a, "2025-06-30T12:00:00Z").unwrap();
    let strip = |s: &str| s.lines().filter(|l| !l.contains("created_at")).collect::<Vec<_>>().join("\n");
    assert_ne!(one, two);
    assert_eq!(strip(&one), strip(&two));
}

#[test]
fn empty_rankings_still_serialize() {
    let mut report = replay_pipeline("pipeline_default.jsonl", |_| {}).unwrap();
    report.rankings.clear();
    let json: serde_json::Value = serde_json::from_str(&report_json(&report, "T").unwrap()).unwrap();
    assert_eq!(json["report"]["rankings"], serde_json::json!([]));
}

#[test]
fn markdown_has_one_transcript_section_per_panel_member() {
    let report = replay_pipeline("pipeline_default.jsonl", |_| {}).unwrap();
    let md = report_markdown(&report, "T");
    let transcripts = md.split("## Expert transcripts").nth(1).unwrap();
    for m in &report.panel.members {
        assert_eq!(transcripts.matches(&format!("### {} ({})", m.name, m.field)).count(), 1);
    }
    for heading in ["## Goal", "## Goal metric", "## Team needing help", "## Panel", "## Supporting metrics", "## Rankings", "## Decision", "## Partner team"] {
        assert!(md.contains(heading), "{heading}");
    }
}

#[test]
fn vanilla_lists_of_nine_and_six() {
    assert!(vanilla_prompt(FIXTURE_GOAL).unwrap().starts_with("I am a software manager"));
    let gw = replay("components.jsonl");
    let nine = run_vanilla(FIXTURE_GOAL, &gw).unwrap();
    assert_eq!(nine.len(), 9);
    assert!(nine.iter().all(|s| s.reason.is_empty() && !s.description.is_empty()));
    assert_eq!(run_vanilla(REVIEW_GOAL, &gw).unwrap().len(), 6);
}

#[test]
fn diversity_examples() {
    let single = diversity_stats(&[MetricSpec::supporting("x", "", "")], 5).unwrap();
    assert_eq!(single.top_k_share, 1.0);
    assert!(matches!(diversity_stats(&[], 5), Err(OrchestratorError::EmptyInput)));
    let s = diversity_stats_from_names(["a", "A", "b", "c"], 2).unwrap();
    assert_eq!(s.name_counts.values().sum::<usize>(), s.total);
    assert_eq!(s.top_k_share, 0.75);
}

#[test]
fn config_layers_and_validation() {
    let file = ConfigLayer::from_toml(
        "goal = \"ship faster\"\nperspectives = 5\nbackend = \"replay\"\ncassette = \"c.jsonl\"\n[panel]\ntext = \"three from one field, one from another\"\nsame_field = 3\nother_field = 1\n",
    )
    .unwrap();
    let flags = ConfigLayer { panel_size: Some(4), perspectives: Some(6), ..ConfigLayer::default() };
    let c = RunConfig::layered(&[&file, &flags]).unwrap();
    assert_eq!((c.perspectives, c.panel_size, c.panel.same_field_count), (6, 4, 3));
    assert_eq!(c.experts_per_field, 3);

    assert!(ConfigLayer::from_toml("unknown_key = 1").is_err());
    let no_cassette = ConfigLayer { goal: Some("g".into()), ..ConfigLayer::default() };
    assert!(RunConfig::layered(&[&no_cassette]).is_err());
    let mismatch = ConfigLayer { panel_size: Some(5), ..file };
    assert!(RunConfig::layered(&[&mismatch]).is_err());
}

#[test]
fn setup_needs_two_teams() {
    let store = TempStore::with_events("{\"entity\": \"repositories\", \"data\": {\"id\": \"r1\", \"name\": \"solo\"}}\n");
    let config = gems::offline::FixtureSet::pipeline_config(&store.db_path(), &common::fixture("pipeline_default.jsonl"));
    let abort = gems::orchestrator::run_pipeline(
        &config,
        &replay("pipeline_default.jsonl"),
        &store.store,
        &gems::metrics::PredefinedRegistry::shipped(),
    )
    .unwrap_err();
    assert_eq!(abort.stage, PipelineStage::Setup);
    assert!(matches!(abort.cause, AbortCause::Empty(_)));
}

#[test]
fn panel_members_come_from_the_pool() {
    let report = replay_pipeline("pipeline_default.jsonl", |_| {}).unwrap();
    let pool: BTreeSet<&str> = report.expert_pool.experts().map(|e| e.name.as_str()).collect();
    assert!(report.panel.members.iter().all(|m| pool.contains(m.name.as_str())));
}
