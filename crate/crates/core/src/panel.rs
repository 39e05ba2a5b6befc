//! Panel assembly: disciplines for the goal, candidate experts per
//! discipline, and a panel that satisfies the user's composition criteria.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expert::{list_items, ExpertProfile};
use crate::llm::{max_tokens, ChatMessage, Gateway, LlmError};
use crate::prompts::{render, Bindings, PromptError, Stage};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PanelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("wanted {wanted} distinct disciplines, the model gave {got}")]
    InsufficientDisciplines { wanted: usize, got: usize },
    #[error("wanted {wanted} experts in {discipline}, the model gave {got}")]
    InsufficientExperts {
        discipline: String,
        wanted: usize,
        got: usize,
    },
    #[error("no panel can satisfy the criteria: {0}")]
    InfeasibleCriteria(String),
    #[error(transparent)]
    Gateway(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Discipline(pub String);

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Experts grouped by discipline, in the order the disciplines were generated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertPool {
    pub by_discipline: Vec<(Discipline, Vec<ExpertProfile>)>,
}

impl ExpertPool {
    pub fn len(&self) -> usize {
        self.by_discipline.iter().map(|(_, e)| e.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every expert in discipline order, then generation order.
    pub fn experts(&self) -> impl Iterator<Item = &ExpertProfile> {
        self.by_discipline.iter().flat_map(|(_, e)| e.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelCriteria {
    pub raw_text: String,
    pub same_field_count: usize,
    pub other_field_count: usize,
}

impl PanelCriteria {
    pub fn new(raw_text: impl Into<String>, same_field_count: usize, other_field_count: usize) -> Result<Self, PanelError> {
        if same_field_count == 0 {
            return Err(PanelError::InvalidArgument(
                "same_field_count must be at least 1".into(),
            ));
        }
        Ok(Self {
            raw_text: raw_text.into(),
            same_field_count,
            other_field_count,
        })
    }

    pub fn panel_size(&self) -> usize {
        self.same_field_count + self.other_field_count
    }
}

impl Default for PanelCriteria {
    fn default() -> Self {
        Self {
            raw_text: "panel must contain 2 experts from the same field and 1 from a different field".into(),
            same_field_count: 2,
            other_field_count: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Panel {
    pub members: Vec<ExpertProfile>,
}

/// A chosen panel plus how it was chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelSelection {
    pub panel: Panel,
    pub model_pick_accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
}

fn fold(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn distinct_disciplines(reply: &str) -> Vec<Discipline> {
    let mut seen = BTreeSet::new();
    list_items(reply)
        .into_iter()
        .map(|item| item.trim_end_matches('.').trim().to_string())
        .filter(|item| !item.is_empty() && seen.insert(fold(item)))
        .map(Discipline)
        .collect()
}

/// Asks for `perspectives` disciplines. A reply with too few distinct
/// names earns one re-prompt; the second reply must stand on its own.
pub fn generate_disciplines(goal: &str, perspectives: usize, gateway: &Gateway) -> Result<Vec<Discipline>, PanelError> {
    if perspectives == 0 {
        return Err(PanelError::InvalidArgument("perspectives must be at least 1".into()));
    }
    let prompt = render(
        Stage::Disciplines,
        &Bindings::new().set("goal", goal).set("perspectives", perspectives),
    )?;
    let mut messages = vec![ChatMessage::user(prompt)];
    let first = gateway.complete(&gateway.request(messages.clone(), max_tokens::DISCIPLINES))?;
    let mut found = distinct_disciplines(&first.content);
    if found.len() < perspectives {
        messages.push(ChatMessage::assistant(first.content));
        messages.push(ChatMessage::user(render(
            Stage::DisciplinesRetry,
            &Bindings::new().set("perspectives", perspectives),
        )?));
        let second = gateway.complete(&gateway.request(messages, max_tokens::DISCIPLINES))?;
        found = distinct_disciplines(&second.content);
    }
    if found.len() < perspectives {
        return Err(PanelError::InsufficientDisciplines {
            wanted: perspectives,
            got: found.len(),
        });
    }
    found.truncate(perspectives);
    Ok(found)
}

/// Parses `- name | summary` lines. Lines with an empty name are dropped, as
/// are repeats of a name already seen.
pub fn parse_expert_lines(reply: &str, discipline: &Discipline) -> (Vec<ExpertProfile>, usize) {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut discarded = 0;
    for item in list_items(reply) {
        let (name, summary) = match item.split_once('|') {
            Some((n, s)) => (n.trim(), s.trim()),
            None => (item.trim(), ""),
        };
        if name.is_empty() || !seen.insert(fold(name)) {
            discarded += 1;
            continue;
        }
        out.push(ExpertProfile::new(name, discipline.0.clone(), summary));
    }
    (out, discarded)
}

pub fn generate_experts(discipline: &Discipline, n: usize, gateway: &Gateway) -> Result<Vec<ExpertProfile>, PanelError> {
    if n == 0 {
        return Err(PanelError::InvalidArgument("experts per field must be at least 1".into()));
    }
    let prompt = render(
        Stage::Experts,
        &Bindings::new().set("count", n).set("discipline", discipline),
    )?;
    let mut messages = vec![ChatMessage::user(prompt)];
    let first = gateway.complete(&gateway.request(messages.clone(), max_tokens::EXPERTS))?;
    let (mut experts, discarded) = parse_expert_lines(&first.content, discipline);
    if experts.len() < n || discarded > 0 {
        messages.push(ChatMessage::assistant(first.content));
        messages.push(ChatMessage::user(render(
            Stage::ExpertsRetry,
            &Bindings::new().set("count", n),
        )?));
        let second = gateway.complete(&gateway.request(messages, max_tokens::EXPERTS))?;
        experts = parse_expert_lines(&second.content, discipline).0;
    }
    if experts.len() < n {
        return Err(PanelError::InsufficientExperts {
            discipline: discipline.0.clone(),
            wanted: n,
            got: experts.len(),
        });
    }
    experts.truncate(n);
    Ok(experts)
}

/// Generates experts for every discipline concurrently; the pool keeps
/// discipline order regardless of completion order.
pub fn build_pool(disciplines: &[Discipline], experts_per_field: usize, gateway: &Gateway) -> Result<ExpertPool, PanelError> {
    let results: Vec<Result<Vec<ExpertProfile>, PanelError>> = thread::scope(|scope| {
        let handles: Vec<_> = disciplines
            .iter()
            .map(|d| scope.spawn(move || generate_experts(d, experts_per_field, gateway)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("expert generation thread panicked"))
            .collect()
    });
    let mut pool = ExpertPool::default();
    for (d, r) in disciplines.iter().zip(results) {
        pool.by_discipline.push((d.clone(), r?));
    }
    Ok(pool)
}

pub fn validate_panel(panel: &Panel, criteria: &PanelCriteria) -> bool {
    if panel.members.len() != criteria.panel_size() {
        return false;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for m in &panel.members {
        *counts.entry(m.field.as_str()).or_default() += 1;
    }
    counts.values().any(|&c| c == criteria.same_field_count)
}

/// First discipline (in pool order) with enough experts supplies the
/// same-field members; the following disciplines, wrapping around, supply
/// the rest in generation order.
pub fn deterministic_panel(pool: &ExpertPool, criteria: &PanelCriteria) -> Result<Panel, PanelError> {
    let groups = &pool.by_discipline;
    for (i, (_, experts)) in groups.iter().enumerate() {
        if experts.len() < criteria.same_field_count {
            continue;
        }
        let mut members: Vec<ExpertProfile> = experts[..criteria.same_field_count].to_vec();
        let others = (1..groups.len())
            .map(|k| &groups[(i + k) % groups.len()])
            .filter(|(d, _)| *d != groups[i].0)
            .flat_map(|(_, e)| e.iter())
            .take(criteria.other_field_count);
        members.extend(others.cloned());
        let panel = Panel { members };
        if validate_panel(&panel, criteria) {
            return Ok(panel);
        }
    }
    Err(PanelError::InfeasibleCriteria(format!(
        "needs {} experts sharing a field and {} from other fields; pool has {} discipline(s) with sizes {:?}",
        criteria.same_field_count,
        criteria.other_field_count,
        groups.len(),
        groups.iter().map(|(_, e)| e.len()).collect::<Vec<_>>()
    )))
}

pub fn panel_prompt(pool: &ExpertPool, criteria: &PanelCriteria, goal: &str) -> Result<String, PanelError> {
    let candidates: Vec<String> = pool
        .experts()
        .enumerate()
        .map(|(i, e)| {
            if e.summary.is_empty() {
                format!("{}. {} ({})", i + 1, e.name, e.field)
            } else {
                format!("{}. {} ({}): {}", i + 1, e.name, e.field, e.summary)
            }
        })
        .collect();
    Ok(render(
        Stage::Panel,
        &Bindings::new()
            .set("panel_size", criteria.panel_size())
            .set("goal", goal)
            .set("criteria", &criteria.raw_text)
            .set("candidates", candidates.join("\n")),
    )?)
}

/// 1-based candidate numbers from a `<panel>` reply.
pub fn parse_panel_pick(reply: &str) -> Option<Vec<usize>> {
    let start = reply.find("<panel>")? + "<panel>".len();
    let end = reply[start..].find("</panel>")? + start;
    reply[start..end]
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.trim_end_matches('.').parse().ok())
        .collect()
}

fn check_pick(pick: &[usize], pool: &[&ExpertProfile], criteria: &PanelCriteria) -> Result<Panel, String> {
    let unique: BTreeSet<usize> = pick.iter().copied().collect();
    if unique.len() != pick.len() {
        return Err(format!("pick {pick:?} repeats a candidate"));
    }
    let members = pick
        .iter()
        .map(|&i| {
            i.checked_sub(1)
                .and_then(|i| pool.get(i))
                .map(|e| (*e).clone())
                .ok_or_else(|| format!("candidate {i} does not exist"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let panel = Panel { members };
    if validate_panel(&panel, criteria) {
        Ok(panel)
    } else {
        Err(format!("pick {pick:?} does not satisfy the criteria"))
    }
}

/// Asks the model to pick the panel, then checks the pick locally. A
/// missing or invalid pick falls back to [`deterministic_panel`] with a
/// notice. With no gateway the deterministic path is used directly.
pub fn select_panel(
    pool: &ExpertPool,
    criteria: &PanelCriteria,
    goal: &str,
    gateway: Option<&Gateway>,
) -> Result<PanelSelection, PanelError> {
    let fallback = deterministic_panel(pool, criteria)?;
    let Some(gateway) = gateway else {
        return Ok(PanelSelection {
            panel: fallback,
            model_pick_accepted: false,
            notice: None,
        });
    };
    let prompt = panel_prompt(pool, criteria, goal)?;
    let reply = gateway.complete(&gateway.request(vec![ChatMessage::user(prompt)], max_tokens::PANEL))?;
    let candidates: Vec<&ExpertProfile> = pool.experts().collect();
    let checked = parse_panel_pick(&reply.content)
        .ok_or_else(|| "reply has no readable <panel> element".to_string())
        .and_then(|pick| check_pick(&pick, &candidates, criteria));
    Ok(match checked {
        Ok(panel) => PanelSelection {
            panel,
            model_pick_accepted: true,
            notice: None,
        },
        Err(why) => PanelSelection {
            panel: fallback,
            model_pick_accepted: false,
            notice: Some(format!("model panel pick rejected ({why}); used the deterministic selection")),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn member(field: &str) -> ExpertProfile {
        ExpertProfile::new(format!("someone in {field}"), field, "")
    }

    fn pool(shape: &[(&str, usize)]) -> ExpertPool {
        ExpertPool {
            by_discipline: shape
                .iter()
                .map(|(d, n)| {
                    let experts = (0..*n)
                        .map(|i| ExpertProfile::new(format!("{d}-{i}"), *d, "s"))
                        .collect();
                    (Discipline(d.to_string()), experts)
                })
                .collect(),
        }
    }

    #[test]
    fn validate_examples() {
        let c = PanelCriteria::default();
        let panel = |fs: &[&str]| Panel {
            members: fs.iter().map(|f| member(f)).collect(),
        };
        assert!(validate_panel(&panel(&["a", "a", "b"]), &c));
        assert!(!validate_panel(&panel(&["a", "a", "a"]), &c));
        assert!(!validate_panel(&panel(&["a", "b", "c"]), &c));
        assert!(!validate_panel(&panel(&["a", "a"]), &c));
    }

    #[test]
    fn deterministic_selection_takes_first_then_next() {
        let p = pool(&[("a", 3), ("b", 3), ("c", 3), ("d", 3)]);
        let panel = deterministic_panel(&p, &PanelCriteria::default()).unwrap();
        let names: Vec<&str> = panel.members.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, ["a-0", "a-1", "b-0"]);
    }

    #[test]
    fn deterministic_selection_skips_small_fields() {
        let p = pool(&[("a", 1), ("b", 2)]);
        let panel = deterministic_panel(&p, &PanelCriteria::default()).unwrap();
        let names: Vec<&str> = panel.members.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, ["b-0", "b-1", "a-0"]);
    }

    #[test]
    fn single_discipline_is_infeasible() {
        let p = pool(&[("a", 3)]);
        assert!(matches!(
            select_panel(&p, &PanelCriteria::default(), "g", None),
            Err(PanelError::InfeasibleCriteria(_))
        ));
    }

    #[test]
    fn parses_pick_and_expert_lines() {
        assert_eq!(parse_panel_pick("ok <panel>1, 2,3</panel>"), Some(vec![1, 2, 3]));
        assert_eq!(parse_panel_pick("<panel>one</panel>"), None);
        let d = Discipline("DevOps".into());
        let (experts, discarded) = parse_expert_lines("- Ada Rivera | pipelines\n- | nobody\n- ada rivera | again\n- Bo Chen", &d);
        assert_eq!(discarded, 2);
        assert_eq!(experts.len(), 2);
        assert_eq!(experts[0].summary, "pipelines");
        assert_eq!(experts[1].field, "DevOps");
    }

    #[test]
    fn disciplines_dedupe_case_insensitively() {
        let d = distinct_disciplines("1. Psychology\n2. psychology\n3. Organizational  Behavior.\n4. DevOps");
        let names: Vec<&str> = d.iter().map(|d| d.0.as_str()).collect();
        assert_eq!(names, ["Psychology", "Organizational  Behavior", "DevOps"]);
    }

    #[test]
    fn zero_counts_are_rejected() {
        assert!(PanelCriteria::new("x", 0, 1).is_err());
    }
}
