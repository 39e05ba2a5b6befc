//! Ingests an event file into a fresh store and lists the teams, row
//! counts and the schema catalog the agents see. Defaults to the small
//! fixture file; pass a path to load another.
//!
//!     cargo run --example ingest_events [-- path/to/events.jsonl]

use std::path::PathBuf;

use gems::store::RepoStore;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let events = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/events.jsonl"));
    let dir = tempfile::tempdir()?;
    let store = RepoStore::open(dir.path().join("events.sqlite"))?;

    let summary = store.ingest(&events)?;
    for (table, n) in &summary.counts {
        println!("{table:<16} {n}");
    }
    // Ingest is idempotent: loading the same file again leaves the data as it was.
    let before = store.dump()?;
    store.ingest(&events)?;
    println!("unchanged after a second ingest: {}", store.dump()? == before);

    println!("\nteams:");
    for t in store.list_teams()? {
        println!("  {} {}", t.team_id, t.name);
    }
    println!("\n{}", store.schema_catalog()?.table_list());
    Ok(())
}
