mod common;

use common::{replay, TempStore};
use gems::llm::{max_tokens, Cassette, ChatMessage, ChatResponse, Gateway};
use gems::metrics::{
    evaluate, implement_via_llm, match_predefined, programmer_prompt, select_worst, ImplKind, MetricError,
    MetricImpl, MetricResult, MetricSpec, Polarity, PredefinedRegistry, Programmer, RegistryEntry,
    DEFAULT_MATCH_THRESHOLD,
};
use gems::store::{SchemaCatalog, TeamId, TeamRecord};

fn spec(name: &str) -> MetricSpec {
    MetricSpec::supporting(name, "", "")
}

/// A replay gateway holding one programmer reply for `spec`.
fn canned(spec: &MetricSpec, catalog: &SchemaCatalog, reply: &str) -> Gateway {
    let shape = Gateway::replay(Cassette::new());
    let request = shape.request(vec![ChatMessage::user(programmer_prompt(spec, catalog))], max_tokens::PROGRAMMER);
    let mut cassette = Cassette::new();
    cassette.insert(
        request,
        ChatResponse {
            content: reply.into(),
            prompt_tokens: 1,
            completion_tokens: 1,
        },
    );
    Gateway::replay(cassette)
}

fn teams(ids: &[&str]) -> Vec<TeamRecord> {
    ids.iter()
        .map(|id| TeamRecord {
            team_id: TeamId::from(*id),
            name: id.to_string(),
        })
        .collect()
}

fn values(pairs: &[(&str, f64)], polarity: Polarity) -> MetricResult {
    MetricResult::from_values("m", polarity, pairs.iter().map(|(t, v)| (TeamId::from(*t), *v)))
}

#[test]
fn shipped_registry_has_ten_valid_entries() {
    let registry = PredefinedRegistry::shipped();
    assert_eq!(registry.len(), 10);
    for name in ["issue_resolution_time", "commit_frequency", "test_coverage", "code_churn", "contributors_count"] {
        assert!(registry.get(name).is_some(), "{name}");
    }
}

#[test]
fn every_registry_entry_runs_on_the_demo_store() {
    let s = TempStore::demo();
    let teams = s.store.list_teams().unwrap();
    let registry = PredefinedRegistry::shipped();
    for entry in registry.entries() {
        let m = MetricImpl::new(spec(&entry.canonical_name), ImplKind::Predefined, entry.sql.clone()).unwrap();
        let r = evaluate(&m, &s.store, &teams, None).unwrap();
        assert!(r.is_usable(), "{}: {:?}", entry.canonical_name, r.failure);
    }
}

#[test]
fn registry_with_a_write_statement_fails_to_load() {
    let entries = vec![RegistryEntry {
        canonical_name: "sneaky".into(),
        description: String::new(),
        sql: "DELETE FROM issues".into(),
    }];
    assert!(matches!(PredefinedRegistry::from_entries(entries), Err(MetricError::InvalidRegistry(_))));
}

#[test]
fn matcher_examples() {
    let registry = PredefinedRegistry::shipped();
    let m = match_predefined(&spec("issueResolutionTime"), &registry, 0.5).unwrap();
    assert_eq!(m.kind, ImplKind::Predefined);
    assert_eq!(m.sql, registry.get("issue_resolution_time").unwrap().sql);
    // {calculate, average, issue, resolution, time} against {issue, resolution, time}: 3/5.
    assert!(match_predefined(&spec("calculateAverageIssueResolutionTime"), &registry, 0.6).is_some());
    assert!(match_predefined(&spec("calculateAverageIssueResolutionTime"), &registry, 0.61).is_none());
    assert!(match_predefined(&spec("recognitionRatio"), &registry, 0.5).is_none());
}

#[test]
fn threshold_one_requires_identical_tokens() {
    let registry = PredefinedRegistry::shipped();
    assert!(match_predefined(&spec("CodeChurn"), &registry, 1.0).is_some());
    assert!(match_predefined(&spec("codeChurnRate"), &registry, 1.0).is_none());
}

#[test]
fn programmer_replays_task_completion_rate() {
    let s = TempStore::demo();
    let teams = s.store.list_teams().unwrap();
    let catalog = s.store.schema_catalog().unwrap();
    let gw = replay("components.jsonl");
    let registry = PredefinedRegistry::shipped();
    let programmer = Programmer {
        gateway: &gw,
        store: &s.store,
        registry: &registry,
        catalog: &catalog,
        match_threshold: DEFAULT_MATCH_THRESHOLD,
    };
    let task = MetricSpec::supporting("taskCompletionRate", "Share of issues that are closed.", "");
    let out = programmer.produce(&task, &teams, None).unwrap();
    let implementation = out.implementation.unwrap();
    assert_eq!(implementation.kind, ImplKind::Generated);
    assert!(!out.repaired);

    // Independent oracle: closed over total issues, read straight from the store.
    for team in &teams {
        let id = team.team_id.as_str();
        let count = |cond: &str| {
            let sql = format!("SELECT COUNT(*) FROM issues WHERE repository_id = '{id}'{cond}");
            s.store.execute_readonly(&sql).unwrap().rows[0][0].as_f64().unwrap()
        };
        let expected = count(" AND state = 'closed'") / count("");
        assert!((out.result.values[&team.team_id] - expected).abs() < 1e-12, "{id}");
    }
}

#[test]
fn reply_without_fence_is_no_sql_block() {
    let s = TempStore::small();
    let catalog = s.store.schema_catalog().unwrap();
    let m = spec("anything");
    let gw = canned(&m, &catalog, "I would count the issues per repository.");
    assert!(matches!(implement_via_llm(&m, &catalog, &gw), Err(MetricError::NoSqlBlock)));
}

#[test]
fn reply_with_delete_is_rejected() {
    let s = TempStore::small();
    let catalog = s.store.schema_catalog().unwrap();
    let m = spec("anything");
    let gw = canned(&m, &catalog, "```sql\nDELETE FROM issues\n```");
    assert!(matches!(implement_via_llm(&m, &catalog, &gw), Err(MetricError::SandboxReject(_))));
}

#[test]
fn exclusion_and_failure() {
    let s = TempStore::small();
    let all = s.store.list_teams().unwrap();
    let per_repo = MetricImpl::new(
        spec("issueCount"),
        ImplKind::Generated,
        "SELECT repository_id AS team_id, COUNT(*) AS value FROM issues GROUP BY repository_id",
    )
    .unwrap();
    let r1 = TeamId::from("r1");
    let r = evaluate(&per_repo, &s.store, &all, Some(&r1)).unwrap();
    assert_eq!(r.values.keys().collect::<Vec<_>>(), [&TeamId::from("r2")]);

    let broken = MetricImpl::new(spec("x"), ImplKind::Generated, "SELECT id AS team_id, 1 AS value FROM nowhere").unwrap();
    let r = evaluate(&broken, &s.store, &all, None).unwrap();
    assert!(r.failed && r.values.is_empty());
}

#[test]
fn select_worst_examples() {
    let ab = teams(&["A", "B"]);
    assert_eq!(select_worst(&values(&[("A", 0.9), ("B", 0.1)], Polarity::HigherBetter), &ab).unwrap(), "B".into());
    assert_eq!(select_worst(&values(&[("A", 2.0), ("B", 2.0)], Polarity::HigherBetter), &ab).unwrap(), "A".into());
    let abc = teams(&["A", "B", "C"]);
    let r = values(&[("A", 1.0), ("B", 5.0), ("C", 3.0)], Polarity::LowerBetter);
    assert_eq!(select_worst(&r, &abc).unwrap(), "B".into());
    let empty = MetricResult::from_values("m", Polarity::HigherBetter, []);
    assert!(matches!(select_worst(&empty, &ab), Err(MetricError::EmptyResult)));
}
