mod common;

use common::{fixture, statements, TempStore};
use gems::metrics::{evaluate, ImplKind, MetricImpl, MetricSpec};
use gems::store::{Scalar, StoreError, TeamId};

#[test]
fn small_fixture_counts_by_entity() {
    let s = TempStore::empty();
    let summary = s.store.ingest(fixture("events.jsonl")).unwrap();
    assert_eq!(summary.count("repositories"), 2);
    assert_eq!(summary.count("issues"), 3);
    assert_eq!(summary.count("commits"), 0);
}

#[test]
fn reingesting_the_same_file_is_a_no_op() {
    let s = TempStore::small();
    let before = s.store.dump().unwrap();
    s.store.ingest(fixture("events.jsonl")).unwrap();
    assert_eq!(s.store.dump().unwrap(), before);
}

#[test]
fn teams_are_listed_in_identifier_order() {
    let s = TempStore::small();
    let ids: Vec<TeamId> = s.store.list_teams().unwrap().into_iter().map(|t| t.team_id).collect();
    assert_eq!(ids, [TeamId::from("r1"), TeamId::from("r2")]);
}

#[test]
fn count_query_on_small_fixture() {
    let s = TempStore::small();
    let rows = s.store.execute_readonly("SELECT COUNT(*) FROM issues").unwrap();
    assert_eq!(rows.rows.len(), 1);
    assert_eq!(rows.rows[0][0].as_f64(), Some(3.0));
}

#[test]
fn offset_timestamps_are_stored_as_utc() {
    let s = TempStore::small();
    let rows = s.store.execute_readonly("SELECT created_at FROM repositories WHERE id = 'r2'").unwrap();
    assert_eq!(rows.rows[0][0], Scalar::Timestamp("2023-01-05T07:00:00Z".into()));
}

#[test]
fn issues_per_repository_fill_absent_teams() {
    let s = TempStore::small();
    let teams = s.store.list_teams().unwrap();
    let metric = MetricImpl::new(
        MetricSpec::supporting("issueCount", "issues per repository", ""),
        ImplKind::Generated,
        "SELECT repository_id AS team_id, COUNT(*) AS value FROM issues GROUP BY repository_id",
    )
    .unwrap();
    let result = evaluate(&metric, &s.store, &teams, None).unwrap();
    assert_eq!(result.values[&TeamId::from("r1")], 3.0);
    assert_eq!(result.values[&TeamId::from("r2")], 0.0);
    assert!(result.missing.contains(&TeamId::from("r2")));
}

#[test]
fn schema_catalog_lists_every_table() {
    let s = TempStore::empty();
    let catalog = s.store.schema_catalog().unwrap();
    let list = catalog.table_list();
    for table in ["repositories", "commits", "issues", "pull_requests", "reviews", "comments"] {
        assert!(list.contains(table), "{table} missing from {list}");
    }
}

#[test]
fn adversarial_corpus_is_rejected_and_store_unchanged() {
    let s = TempStore::demo();
    let before = s.store.dump().unwrap();
    let corpus = statements("adversarial_sql.txt");
    assert!(corpus.len() >= 20);
    for sql in &corpus {
        match s.store.execute_readonly(sql) {
            Err(StoreError::ForbiddenStatement(_)) | Err(StoreError::QueryError(_)) => {}
            other => panic!("{sql:?} was not rejected: {other:?}"),
        }
    }
    for sql in statements("accepted_sql.txt") {
        s.store.execute_readonly(&sql).unwrap_or_else(|e| panic!("{sql:?}: {e}"));
    }
    assert_eq!(s.store.dump().unwrap(), before);
}

#[test]
fn reads_run_concurrently() {
    let s = TempStore::demo();
    std::thread::scope(|scope| {
        for _ in 0..4 {
            scope.spawn(|| {
                let rows = s.store.execute_readonly("SELECT COUNT(*) FROM commits").unwrap();
                assert_eq!(rows.rows[0][0].as_f64(), Some(116.0));
            });
        }
    });
}
