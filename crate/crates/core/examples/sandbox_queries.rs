//! Loads the demo dataset and sends a mix of read-only and hostile SQL
//! through the sandbox. Only single SELECT statements get through.
//!
//!     cargo run --example sandbox_queries

use gems::offline::demo_events;
use gems::store::RepoStore;

const QUERIES: &[&str] = &[
    "SELECT repository_id, COUNT(*) FROM commits GROUP BY repository_id ORDER BY repository_id",
    "WITH open AS (SELECT repository_id FROM issues WHERE state = 'open') SELECT repository_id, COUNT(*) FROM open GROUP BY repository_id",
    "DELETE FROM commits",
    "SELECT 1; DROP TABLE users",
    "PRAGMA writable_schema = 1",
    "ATTACH DATABASE '/tmp/x.db' AS x",
    "SELECT load_extension('evil')",
    "SELECT * FROM no_such_table",
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let store = RepoStore::open(dir.path().join("demo.sqlite"))?;
    store.ingest_str(&demo_events())?;
    let before = store.dump()?;

    for sql in QUERIES {
        match store.execute_readonly(sql) {
            Ok(rows) => println!("ok       {sql}\n         {} rows, columns {:?}", rows.rows.len(), rows.columns),
            Err(e) => println!("refused  {sql}\n         {e}"),
        }
    }
    println!("\nstore unchanged: {}", store.dump()? == before);
    Ok(())
}
