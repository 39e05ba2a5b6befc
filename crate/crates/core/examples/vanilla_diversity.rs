//! Asks the single-prompt baseline for metrics several times and measures
//! how concentrated the proposed names are.
//!
//!     cargo run --example vanilla_diversity

use gems::offline::{scripted_gateway, Scenario, ALT_GOAL, FIXTURE_GOAL, REVIEW_GOAL};
use gems::orchestrator::{diversity_stats, run_vanilla};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gateway = scripted_gateway(Scenario::default());
    let mut all = Vec::new();
    for goal in [FIXTURE_GOAL, ALT_GOAL, REVIEW_GOAL] {
        let specs = run_vanilla(goal, &gateway)?;
        println!("{goal}: {} metrics", specs.len());
        for s in &specs {
            println!("  {}", s.function_name);
        }
        all.extend(specs);
    }
    let stats = diversity_stats(&all, 5)?;
    println!("\nmost frequent names:");
    for (name, count) in stats.top() {
        println!("{count:>4}  {name}");
    }
    println!("top-{} share: {:.4} of {} metrics", stats.k, stats.top_k_share, stats.total);
    Ok(())
}
