//! Replays the shipped pipeline cassette against the demo dataset and
//! prints a summary of the match report. Pass `bad_sql` to replay the
//! cassette in which one generated query never works.
//!
//!     cargo run --example replay_pipeline [-- bad_sql]

use std::path::Path;

use gems::llm::{Cassette, Gateway};
use gems::metrics::PredefinedRegistry;
use gems::offline::{demo_events, FixtureSet};
use gems::orchestrator::{report_markdown, run_pipeline};
use gems::store::RepoStore;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let name = match std::env::args().nth(1).as_deref() {
        Some("bad_sql") => FixtureSet::PIPELINE_BAD_SQL,
        _ => FixtureSet::PIPELINE_DEFAULT,
    };
    let cassette_path = fixtures.join(name);
    let scratch = tempfile::tempdir()?;
    let db = scratch.path().join("demo.sqlite");
    let store = RepoStore::open(&db)?;
    store.ingest_str(&demo_events())?;

    let config = FixtureSet::pipeline_config(&db, &cassette_path);
    let gateway = Gateway::replay(Cassette::load(&cassette_path)?);
    let report = run_pipeline(&config, &gateway, &store, &PredefinedRegistry::shipped())?;

    println!("goal metric:   {} ({})", report.goal_metric.function_name, report.goal_metric.polarity);
    println!("team x:        {}", report.team_x);
    println!("expert pool:   {} experts", report.expert_pool.len());
    for m in &report.panel.members {
        println!("panel member:  {} ({})", m.name, m.field);
    }
    println!(
        "metrics:       {} attempted, {} usable",
        report.supporting_metrics.len(),
        report.usable_metric_count()
    );
    println!("mechanism:     {}", report.decision.mechanism.name());
    println!("partner team:  {}", report.team_y);
    for w in &report.warnings {
        println!("warning:       {w}");
    }
    if std::env::args().any(|a| a == "--markdown") {
        println!("\n{}", report_markdown(&report, "example"));
    }
    Ok(())
}
