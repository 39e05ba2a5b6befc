//! The judge: maps a plain-text aggregation preference to a voting
//! mechanism and tallies the experts' ballots into a final decision.
//!
//! Every tie is broken toward the lexicographically smallest team id.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{max_tokens, ChatMessage, Gateway, LlmError};
use crate::prompts::{render, Bindings, PromptError, Stage};
use crate::store::TeamId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JudgeError {
    #[error("no ballots to tally")]
    EmptyElection,
    #[error("approval cutoff {k} exceeds the {candidates} candidates")]
    KTooLarge { k: usize, candidates: usize },
    #[error("inconsistent ballots: {0}")]
    InconsistentBallots(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Gateway(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub expert_name: String,
    pub ranking: Vec<TeamId>,
}

impl Ballot {
    pub fn new(expert_name: impl Into<String>, ranking: impl IntoIterator<Item = impl Into<TeamId>>) -> Self {
        Self {
            expert_name: expert_name.into(),
            ranking: ranking.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mechanism {
    Approval { approval_k: usize },
    Plurality,
    Borda,
    Irv,
}

impl Mechanism {
    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::Approval { .. } => "approval",
            Mechanism::Plurality => "plurality",
            Mechanism::Borda => "borda",
            Mechanism::Irv => "irv",
        }
    }

    /// Approval with the default cutoff of half the candidates, rounded up.
    pub fn approval_for(n_candidates: usize) -> Self {
        Mechanism::Approval {
            approval_k: n_candidates.div_ceil(2).max(1),
        }
    }

    fn from_name(name: &str, n_candidates: usize) -> Option<Self> {
        match name {
            "approval" => Some(Self::approval_for(n_candidates)),
            "plurality" => Some(Mechanism::Plurality),
            "borda" => Some(Mechanism::Borda),
            "irv" => Some(Mechanism::Irv),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub thought: String,
    pub action: String,
    pub observation: String,
}

impl TraceStep {
    fn new(thought: impl Into<String>, action: impl Into<String>, observation: impl Into<String>) -> Self {
        Self {
            thought: thought.into(),
            action: action.into(),
            observation: observation.into(),
        }
    }
}

pub type Tally = BTreeMap<TeamId, u64>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub winner: TeamId,
    /// One tally for single-round mechanisms, one per round for IRV.
    pub tally: Vec<Tally>,
    pub mechanism: Mechanism,
    pub trace: Vec<TraceStep>,
}

/// Candidates of a well-formed election, sorted.
pub fn candidates(ballots: &[Ballot]) -> Result<Vec<TeamId>, JudgeError> {
    let first = ballots.first().ok_or(JudgeError::EmptyElection)?;
    let set: BTreeSet<&TeamId> = first.ranking.iter().collect();
    if set.is_empty() {
        return Err(JudgeError::InconsistentBallots(format!(
            "ballot of {} ranks no teams",
            first.expert_name
        )));
    }
    for b in ballots {
        let other: BTreeSet<&TeamId> = b.ranking.iter().collect();
        if other.len() != b.ranking.len() {
            return Err(JudgeError::InconsistentBallots(format!(
                "ballot of {} repeats a team",
                b.expert_name
            )));
        }
        if other != set {
            return Err(JudgeError::InconsistentBallots(format!(
                "ballot of {} ranks a different candidate set",
                b.expert_name
            )));
        }
    }
    Ok(set.into_iter().cloned().collect())
}

fn zeroed(candidates: &[TeamId]) -> Tally {
    candidates.iter().map(|c| (c.clone(), 0)).collect()
}

/// Highest score; the map iterates in id order so the first maximum wins ties.
fn leader(tally: &Tally) -> TeamId {
    let mut best: Option<(&TeamId, u64)> = None;
    for (team, &score) in tally {
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((team, score));
        }
    }
    best.expect("tally is non-empty").0.clone()
}

fn positional(ballots: &[Ballot], points: impl Fn(usize, usize) -> u64) -> Result<(TeamId, Tally), JudgeError> {
    let cands = candidates(ballots)?;
    let m = cands.len();
    let mut tally = zeroed(&cands);
    for b in ballots {
        for (i, team) in b.ranking.iter().enumerate() {
            *tally.get_mut(team).expect("validated candidate") += points(i, m);
        }
    }
    Ok((leader(&tally), tally))
}

pub fn tally_plurality(ballots: &[Ballot]) -> Result<(TeamId, Tally), JudgeError> {
    positional(ballots, |i, _| u64::from(i == 0))
}

pub fn tally_borda(ballots: &[Ballot]) -> Result<(TeamId, Tally), JudgeError> {
    positional(ballots, |i, m| (m - 1 - i) as u64)
}

pub fn tally_approval(ballots: &[Ballot], k: usize) -> Result<(TeamId, Tally), JudgeError> {
    let m = candidates(ballots)?.len();
    if k == 0 {
        return Err(JudgeError::InvalidArgument("approval cutoff must be at least 1".into()));
    }
    if k > m {
        return Err(JudgeError::KTooLarge { k, candidates: m });
    }
    positional(ballots, |i, _| u64::from(i < k))
}

/// Instant runoff. Each round counts first preferences among the remaining
/// candidates; a strict majority wins, otherwise the candidate with the
/// fewest is eliminated (the lexicographically last among equals).
pub fn tally_irv(ballots: &[Ballot]) -> Result<(TeamId, Vec<Tally>), JudgeError> {
    let mut remaining: BTreeSet<TeamId> = candidates(ballots)?.into_iter().collect();
    let mut rounds = Vec::new();
    loop {
        let mut tally: Tally = remaining.iter().map(|c| (c.clone(), 0)).collect();
        for b in ballots {
            let top = b
                .ranking
                .iter()
                .find(|t| remaining.contains(*t))
                .expect("every ballot ranks all remaining candidates");
            *tally.get_mut(top).expect("remaining") += 1;
        }
        let leading = leader(&tally);
        let majority = tally[&leading] * 2 > ballots.len() as u64;
        rounds.push(tally.clone());
        if majority || remaining.len() == 1 {
            return Ok((leading, rounds));
        }
        let fewest = *tally.values().min().expect("non-empty");
        let eliminated = tally
            .iter()
            .rev()
            .find(|(_, &v)| v == fewest)
            .map(|(t, _)| t.clone())
            .expect("some candidate has the minimum");
        remaining.remove(&eliminated);
    }
}

fn describe(tally: &Tally) -> String {
    tally
        .iter()
        .map(|(t, s)| format!("{t}={s}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Tallies `ballots` under `mechanism`. The trace records each tally step.
pub fn aggregate(ballots: &[Ballot], mechanism: Mechanism) -> Result<Decision, JudgeError> {
    let (winner, tally, trace) = match mechanism {
        Mechanism::Irv => {
            let (winner, rounds) = tally_irv(ballots)?;
            let trace = rounds
                .iter()
                .enumerate()
                .map(|(i, round)| {
                    let last = i + 1 == rounds.len();
                    TraceStep::new(
                        format!("Round {} of instant runoff", i + 1),
                        "count first preferences among remaining teams",
                        if last {
                            format!("{}; {winner} wins", describe(round))
                        } else {
                            format!("{}; no majority, eliminate the weakest", describe(round))
                        },
                    )
                })
                .collect();
            (winner, rounds, trace)
        }
        other => {
            let (winner, tally, rule) = match other {
                Mechanism::Plurality => {
                    let (w, t) = tally_plurality(ballots)?;
                    (w, t, "one point per ballot to its top team".to_string())
                }
                Mechanism::Borda => {
                    let (w, t) = tally_borda(ballots)?;
                    (w, t, "m-1-i points for position i".to_string())
                }
                Mechanism::Approval { approval_k } => {
                    let (w, t) = tally_approval(ballots, approval_k)?;
                    (w, t, format!("one point to each of a ballot's top {approval_k} teams"))
                }
                Mechanism::Irv => unreachable!(),
            };
            let step = TraceStep::new(
                format!("Tally {} ballots with {}", ballots.len(), other.name()),
                rule,
                format!("{}; {winner} wins", describe(&tally)),
            );
            (winner, vec![tally], vec![step])
        }
    };
    Ok(Decision {
        winner,
        tally,
        mechanism,
        trace,
    })
}

const KEYWORDS: [(&str, &[&str]); 4] = [
    ("approval", &["fair", "easy"]),
    ("plurality", &["one vote", "1 person", "plurality"]),
    ("irv", &["rank", "preference", "runoff"]),
    ("borda", &["points", "weighted"]),
];

/// The first keyword group (in the fixed order above) that matches.
pub fn keyword_mechanism(preference: &str, n_candidates: usize) -> Option<(Mechanism, &'static str)> {
    let lower = preference.to_lowercase();
    KEYWORDS.iter().find_map(|(name, words)| {
        words
            .iter()
            .find(|w| lower.contains(*w))
            .map(|w| (Mechanism::from_name(name, n_candidates).expect("known name"), *w))
    })
}

/// Reads the `Thought:`/`Action:`/`Observation:` lines of a reply.
pub fn parse_react(reply: &str, n_candidates: usize) -> Option<(Mechanism, TraceStep)> {
    let field = |label: &str| {
        reply.lines().find_map(|l| {
            let l = l.trim().trim_start_matches('*').trim();
            l.strip_prefix(label).map(|rest| rest.trim_start_matches(['*', ':']).trim().to_string())
        })
    };
    let action = field("Action")?;
    let lower = action.to_lowercase();
    let name = ["approval", "plurality", "borda", "irv"]
        .into_iter()
        .find(|n| lower.contains(n))
        .or_else(|| lower.contains("runoff").then_some("irv"))?;
    let mechanism = Mechanism::from_name(name, n_candidates)?;
    Some((
        mechanism,
        TraceStep::new(
            field("Thought").unwrap_or_default(),
            action,
            field("Observation").unwrap_or_default(),
        ),
    ))
}

/// Keyword map first; otherwise the model is asked to reason about the
/// preference. Borda is the default when neither yields a mechanism.
pub fn select_mechanism(
    preference: &str,
    n_candidates: usize,
    gateway: Option<&Gateway>,
) -> Result<(Mechanism, Vec<TraceStep>), JudgeError> {
    if preference.trim().is_empty() {
        return Err(JudgeError::InvalidArgument("aggregation preference is empty".into()));
    }
    if n_candidates == 0 {
        return Err(JudgeError::InvalidArgument("no candidates".into()));
    }
    if let Some((mechanism, keyword)) = keyword_mechanism(preference, n_candidates) {
        let observation = match mechanism {
            Mechanism::Approval { approval_k } => {
                format!("approval voting with each ballot approving its top {approval_k} of {n_candidates} teams")
            }
            m => format!("{} over {n_candidates} teams", m.name()),
        };
        return Ok((
            mechanism,
            vec![TraceStep::new(
                format!("The preference mentions \"{keyword}\""),
                mechanism.name(),
                observation,
            )],
        ));
    }
    let default_step = |why: &str| {
        TraceStep::new(
            format!("No aggregation keyword in \"{}\"", preference.trim()),
            "borda",
            format!("{why}; defaulting to borda"),
        )
    };
    let Some(gateway) = gateway else {
        return Ok((Mechanism::Borda, vec![default_step("model consultation disabled")]));
    };
    let prompt = render(
        Stage::Judge,
        &Bindings::new()
            .set("candidate_count", n_candidates)
            .set("preference", preference.trim()),
    )?;
    let reply = gateway.complete(&gateway.request(vec![ChatMessage::user(prompt)], max_tokens::JUDGE))?;
    Ok(match parse_react(&reply.content, n_candidates) {
        Some((mechanism, step)) => (mechanism, vec![step]),
        None => (Mechanism::Borda, vec![default_step("the model's choice could not be parsed")]),
    })
}

/// Selects a mechanism for `preference` and tallies; the decision's trace
/// starts with the selection reasoning.
pub fn judge(ballots: &[Ballot], preference: &str, gateway: Option<&Gateway>) -> Result<Decision, JudgeError> {
    let n = candidates(ballots)?.len();
    let (mechanism, mut trace) = select_mechanism(preference, n, gateway)?;
    let mut decision = aggregate(ballots, mechanism)?;
    trace.append(&mut decision.trace);
    decision.trace = trace;
    Ok(decision)
}
