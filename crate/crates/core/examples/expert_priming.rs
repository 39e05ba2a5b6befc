//! Primes one expert agent through the three stages against the scripted
//! offline model and prints the transcript and proposed metrics.
//!
//!     cargo run --example expert_priming

use gems::expert::{prime_stage1, prime_stage2, prime_stage3};
use gems::offline::{demo_events, fixture_expert, scripted_gateway, Scenario, FIXTURE_GOAL};
use gems::store::{RepoStore, TeamId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let store = RepoStore::open(dir.path().join("demo.sqlite"))?;
    store.ingest_str(&demo_events())?;
    let catalog = store.schema_catalog()?;

    let gateway = scripted_gateway(Scenario::default());
    let expert = fixture_expert();

    let mut t = prime_stage1(&expert, &gateway)?;
    prime_stage2(&mut t, FIXTURE_GOAL, &TeamId::from("r3"), 5, &gateway)?;
    let metrics = prime_stage3(&mut t, &catalog, 3, &gateway)?;

    for m in &t.messages {
        let first = m.content.lines().next().unwrap_or_default();
        println!("[{}] {first}", m.role.as_str());
    }
    println!("\nelements:");
    for e in &t.elements {
        println!("  - {e}");
    }
    println!("\nproposed metrics:");
    for m in &metrics {
        println!("  {} ({}): {}", m.function_name, m.polarity, m.description);
    }
    Ok(())
}
