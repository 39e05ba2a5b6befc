#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use gems::llm::{Cassette, Gateway};
use gems::offline::demo_events;
use gems::store::RepoStore;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Blank-line separated SQL statements from a fixture file.
pub fn statements(name: &str) -> Vec<String> {
    read_fixture(name)
        .split("\n\n")
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

pub fn cassette(name: &str) -> Cassette {
    Cassette::load(&fixture(name)).unwrap()
}

pub fn replay(name: &str) -> Gateway {
    Gateway::replay(cassette(name))
}

/// A store in its own temporary directory; keep the guard alive.
pub struct TempStore {
    pub dir: tempfile::TempDir,
    pub store: RepoStore,
}

impl TempStore {
    pub fn empty() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let store = RepoStore::open(dir.path().join("store.sqlite")).unwrap();
        Self { dir, store }
    }

    pub fn with_events(text: &str) -> Self {
        let s = Self::empty();
        s.store.ingest_str(text).unwrap();
        s
    }

    pub fn demo() -> Self {
        Self::with_events(&demo_events())
    }

    pub fn small() -> Self {
        Self::with_events(&read_fixture("events.jsonl"))
    }

    pub fn db_path(&self) -> PathBuf {
        self.dir.path().join("store.sqlite")
    }
}

/// Replays a shipped pipeline cassette over a fresh demo store.
pub fn replay_pipeline(
    cassette_name: &str,
    edit: impl FnOnce(&mut Cassette),
) -> Result<gems::orchestrator::MatchReport, gems::orchestrator::PipelineAbort> {
    let store = TempStore::demo();
    let config = gems::offline::FixtureSet::pipeline_config(&store.db_path(), &fixture(cassette_name));
    let mut c = cassette(cassette_name);
    edit(&mut c);
    gems::orchestrator::run_pipeline(
        &config,
        &Gateway::replay(c),
        &store.store,
        &gems::metrics::PredefinedRegistry::shipped(),
    )
}
