mod common;

use std::collections::BTreeSet;

use common::replay;
use gems::expert::ExpertProfile;
use gems::llm::{Cassette, Gateway};
use gems::offline::{ALT_GOAL, DISCIPLINES};
use gems::panel::{
    build_pool, deterministic_panel, generate_disciplines, generate_experts, select_panel, validate_panel,
    Discipline, ExpertPool, Panel, PanelCriteria, PanelError,
};

fn first_four() -> Vec<Discipline> {
    DISCIPLINES[..4].iter().map(|d| Discipline(d.to_string())).collect()
}

fn fields(fs: &[&str]) -> Panel {
    Panel {
        members: fs.iter().enumerate().map(|(i, f)| ExpertProfile::new(format!("e{i}"), *f, "")).collect(),
    }
}

#[test]
fn duplicate_disciplines_trigger_one_reprompt() {
    let ds = generate_disciplines(ALT_GOAL, 4, &replay("components.jsonl")).unwrap();
    assert_eq!(ds.len(), 4);
    let distinct: BTreeSet<String> = ds.iter().map(|d| d.0.to_lowercase()).collect();
    assert_eq!(distinct.len(), 4);
}

#[test]
fn zero_perspectives_is_rejected_before_any_call() {
    let gw = Gateway::replay(Cassette::new());
    assert!(matches!(generate_disciplines(ALT_GOAL, 0, &gw), Err(PanelError::InvalidArgument(_))));
    assert!(matches!(generate_experts(&first_four()[0], 0, &gw), Err(PanelError::InvalidArgument(_))));
}

#[test]
fn pool_of_four_by_three() {
    let pool = build_pool(&first_four(), 3, &replay("components.jsonl")).unwrap();
    assert_eq!(pool.len(), 12);
    for (d, experts) in &pool.by_discipline {
        assert_eq!(experts.len(), 3);
        assert!(experts.iter().all(|e| e.field == d.0 && !e.name.is_empty() && !e.summary.is_empty()));
    }
}

#[test]
fn nameless_expert_is_discarded_and_reprompted() {
    let d = Discipline(DISCIPLINES[7].to_string());
    let experts = generate_experts(&d, 3, &replay("components.jsonl")).unwrap();
    assert_eq!(experts.len(), 3);
    assert!(experts.iter().all(|e| !e.name.trim().is_empty()));
}

#[test]
fn invalid_model_pick_falls_back_to_a_valid_panel() {
    let gw = replay("components.jsonl");
    let pool = build_pool(&first_four(), 3, &gw).unwrap();
    let criteria = PanelCriteria::default();
    let selection = select_panel(&pool, &criteria, ALT_GOAL, Some(&gw)).unwrap();
    assert!(!selection.model_pick_accepted);
    assert!(selection.notice.is_some());
    assert!(validate_panel(&selection.panel, &criteria));
    assert_eq!(selection.panel, deterministic_panel(&pool, &criteria).unwrap());
}

#[test]
fn single_discipline_pool_is_infeasible() {
    let one = ExpertPool {
        by_discipline: vec![(
            Discipline("Solo".into()),
            (0..3).map(|i| ExpertProfile::new(format!("s{i}"), "Solo", "")).collect(),
        )],
    };
    let err = select_panel(&one, &PanelCriteria::default(), ALT_GOAL, None).unwrap_err();
    assert!(matches!(err, PanelError::InfeasibleCriteria(_)));
}

#[test]
fn validate_panel_examples() {
    let c = PanelCriteria::default();
    assert!(validate_panel(&fields(&["a", "a", "b"]), &c));
    assert!(!validate_panel(&fields(&["a", "a", "a"]), &c));
    assert!(!validate_panel(&fields(&["a", "b", "c"]), &c));
}

#[test]
fn criteria_require_a_same_field_member() {
    assert!(PanelCriteria::new("x", 0, 3).is_err());
    assert_eq!(PanelCriteria::new("x", 2, 2).unwrap().panel_size(), 4);
}
