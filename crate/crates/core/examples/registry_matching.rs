//! Matches proposed metric names against the shipped registry, evaluates
//! the matches on the demo data and reports the worst team for each.
//!
//!     cargo run --example registry_matching

use gems::metrics::{evaluate, match_predefined, select_worst, MetricSpec, Polarity, PredefinedRegistry, DEFAULT_MATCH_THRESHOLD};
use gems::offline::demo_events;
use gems::store::RepoStore;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = PredefinedRegistry::shipped();
    println!("registry holds {} implementations:", registry.len());
    for e in registry.entries() {
        println!("  {}", e.canonical_name);
    }

    let dir = tempfile::tempdir()?;
    let store = RepoStore::open(dir.path().join("demo.sqlite"))?;
    store.ingest_str(&demo_events())?;
    let teams = store.list_teams()?;

    let proposals = [
        ("commitFrequency", Polarity::HigherBetter),
        ("reviewTurnaroundTime", Polarity::LowerBetter),
        ("open_issue_backlog", Polarity::LowerBetter),
        ("teamMoraleIndex", Polarity::HigherBetter),
    ];
    for (name, polarity) in proposals {
        let mut spec = MetricSpec::supporting(name, "", "");
        spec.polarity = polarity;
        println!();
        let Some(metric) = match_predefined(&spec, &registry, DEFAULT_MATCH_THRESHOLD) else {
            println!("{name}: no registry match, would go to the programmer agent");
            continue;
        };
        let result = evaluate(&metric, &store, &teams, None)?;
        let values: Vec<String> = result.values.iter().map(|(t, v)| format!("{t}={v:.2}")).collect();
        println!("{name}: matched, {polarity}");
        println!("  {}", values.join(" "));
        println!("  worst team: {}", select_worst(&result, &teams)?);
    }
    Ok(())
}
