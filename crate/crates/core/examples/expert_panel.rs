//! Generates disciplines and an expert pool with the scripted model, then
//! selects a panel of two same-field experts and one outsider.
//!
//!     cargo run --example expert_panel

use gems::offline::{scripted_gateway, Scenario, FIXTURE_GOAL};
use gems::panel::{build_pool, generate_disciplines, select_panel, validate_panel, PanelCriteria};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gateway = scripted_gateway(Scenario::default());
    let disciplines = generate_disciplines(FIXTURE_GOAL, 4, &gateway)?;
    let pool = build_pool(&disciplines, 3, &gateway)?;
    for (discipline, experts) in &pool.by_discipline {
        println!("{discipline}");
        for e in experts {
            println!("  {}: {}", e.name, e.summary);
        }
    }

    let criteria = PanelCriteria::new("two experts from one field and one from another", 2, 1)?;
    let selection = select_panel(&pool, &criteria, FIXTURE_GOAL, Some(&gateway))?;
    println!("\nmodel pick accepted: {}", selection.model_pick_accepted);
    if let Some(n) = &selection.notice {
        println!("notice: {n}");
    }
    for m in &selection.panel.members {
        println!("panel: {} ({})", m.name, m.field);
    }
    println!("meets criteria: {}", validate_panel(&selection.panel, &criteria));
    Ok(())
}
