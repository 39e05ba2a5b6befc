//! Tallies three expert ballots with every aggregation mechanism, then lets
//! the judge pick one from a plain-language preference.
//!
//!     cargo run --example voting

use gems::judge::{judge, tally_approval, tally_borda, tally_irv, tally_plurality, Tally};
use gems::offline::fixture_ballots;

fn show(t: &Tally) -> String {
    t.iter().map(|(team, n)| format!("{team}={n}")).collect::<Vec<_>>().join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ballots = fixture_ballots();
    for b in &ballots {
        let order: Vec<&str> = b.ranking.iter().map(|t| t.as_str()).collect();
        println!("{:<10} {}", b.expert_name, order.join(" > "));
    }
    println!();

    let (w, t) = tally_plurality(&ballots)?;
    println!("plurality     {w}   {}", show(&t));
    let (w, t) = tally_borda(&ballots)?;
    println!("borda         {w}   {}", show(&t));
    for k in 1..=3 {
        let (w, t) = tally_approval(&ballots, k)?;
        println!("approval k={k}  {w}   {}", show(&t));
    }
    let (w, rounds) = tally_irv(&ballots)?;
    println!("irv           {w}   {} round(s)", rounds.len());
    for (i, r) in rounds.iter().enumerate() {
        println!("  round {}: {}", i + 1, show(r));
    }

    // Without a gateway the judge only understands preferences containing one
    // of its keywords and falls back to Borda otherwise.
    for preference in ["a fair compromise between experts", "one vote per expert", "weighted points by position", "keep it to what the room agrees on"] {
        let d = judge(&ballots, preference, None)?;
        println!("\n{preference:?} -> {} picks {}", d.mechanism.name(), d.winner);
        for step in &d.trace {
            println!("  {}", step.observation);
        }
    }
    Ok(())
}
