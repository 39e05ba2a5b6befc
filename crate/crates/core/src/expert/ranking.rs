use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ExpertError, ExpertProfile};
use crate::llm::{max_tokens, ChatMessage, Gateway};
use crate::metrics::{MetricResult, Polarity};
use crate::prompts::{render, Bindings, Stage};
use crate::store::{TeamId, TeamRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingMode {
    Model,
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamRanking {
    pub expert: ExpertProfile,
    pub ranked_teams: Vec<TeamId>,
    pub explanation: String,
    /// The mode that actually produced the ranking.
    pub mode: RankingMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
}

/// Everything an expert needs to rank the candidate partner teams.
#[derive(Debug, Clone, Copy)]
pub struct RankingInput<'a> {
    pub expert: &'a ExpertProfile,
    pub goal: &'a str,
    pub team_x: &'a TeamId,
    pub results: &'a [MetricResult],
    pub teams: &'a [TeamRecord],
}

impl RankingInput<'_> {
    fn candidates(&self) -> Vec<TeamId> {
        self.teams
            .iter()
            .map(|t| t.team_id.clone())
            .filter(|id| id != self.team_x)
            .collect()
    }

    fn usable(&self) -> Vec<&MetricResult> {
        self.results.iter().filter(|r| r.is_usable()).collect()
    }
}

/// Min-max score of each team, oriented so that 1 is best. A constant
/// metric gives every team 0.5.
fn normalized(result: &MetricResult, teams: &[TeamId]) -> Vec<f64> {
    let raw: Vec<f64> = teams
        .iter()
        .map(|t| result.values.get(t).copied().unwrap_or(0.0))
        .collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    raw.iter()
        .map(|&v| {
            let n = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            match result.polarity {
                Polarity::HigherBetter => n,
                Polarity::LowerBetter => 1.0 - n,
            }
        })
        .collect()
}

/// Mean oriented score per team, best first, ties by team id.
pub fn deterministic_scores(results: &[&MetricResult], teams: &[TeamId]) -> Vec<(TeamId, f64)> {
    let mut sums = vec![0.0; teams.len()];
    for result in results {
        for (sum, n) in sums.iter_mut().zip(normalized(result, teams)) {
            *sum += n;
        }
    }
    let count = results.len().max(1) as f64;
    let mut scored: Vec<(TeamId, f64)> = teams
        .iter()
        .cloned()
        .zip(sums.into_iter().map(|s| s / count))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
}

pub fn deterministic_ranking(results: &[MetricResult], teams: &[TeamId]) -> Vec<TeamId> {
    let usable: Vec<&MetricResult> = results.iter().filter(|r| r.is_usable()).collect();
    deterministic_scores(&usable, teams)
        .into_iter()
        .map(|(t, _)| t)
        .collect()
}

/// Markdown table of team by metric, one row per candidate.
pub fn values_table(results: &[&MetricResult], teams: &[TeamId]) -> String {
    let mut out = String::from("| team_id |");
    for r in results {
        let direction = match r.polarity {
            Polarity::HigherBetter => "higher is better",
            Polarity::LowerBetter => "lower is better",
        };
        out.push_str(&format!(" {} ({direction}) |", r.spec_name));
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(results.len()));
    for team in teams {
        out.push_str(&format!("\n| {team} |"));
        for r in results {
            match r.values.get(team) {
                Some(v) if !r.missing.contains(team) => out.push_str(&format!(" {} |", format_value(*v))),
                _ => out.push_str(" n/a |"),
            }
        }
    }
    out
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.4}")
    }
}

pub fn ranking_prompt(input: &RankingInput<'_>) -> Result<String, ExpertError> {
    let candidates = input.candidates();
    let usable = input.usable();
    let team_list: Vec<&str> = candidates.iter().map(|t| t.0.as_str()).collect();
    Ok(render(
        Stage::Ranking,
        &Bindings::new()
            .set("expert", &input.expert.name)
            .set("expert_field", &input.expert.field)
            .set("teamX", input.team_x)
            .set("goal", input.goal)
            .set("values_table", values_table(&usable, &candidates))
            .set("team_list", team_list.join(", ")),
    )?)
}

fn tag<'a>(text: &'a str, name: &str) -> Option<&'a str> {
    let open = format!("<{name}>");
    let close = format!("</{name}>");
    let start = text.find(&open)? + open.len();
    let end = text[start..].find(&close)? + start;
    Some(text[start..end].trim())
}

/// Reads `<ranking>` and `<explanation>` from a reply. The ranking must be a
/// permutation of `candidates`.
pub fn parse_ranking(text: &str, candidates: &[TeamId]) -> Result<(Vec<TeamId>, String), ExpertError> {
    let unparseable = |why: String| ExpertError::UnparseableRanking(why);
    let list = tag(text, "ranking").ok_or_else(|| unparseable("no <ranking> element".into()))?;
    let explanation = tag(text, "explanation")
        .filter(|e| !e.is_empty())
        .ok_or_else(|| unparseable("no <explanation> element".into()))?;
    let ranked: Vec<TeamId> = list
        .split([',', '\n', '>'])
        .map(|s| s.trim().trim_matches(|c| c == '"' || c == '\'' || c == '`').trim())
        .filter(|s| !s.is_empty())
        .map(TeamId::from)
        .collect();
    let expected: BTreeSet<&TeamId> = candidates.iter().collect();
    let got: BTreeSet<&TeamId> = ranked.iter().collect();
    if got.len() != ranked.len() {
        return Err(unparseable("ranking repeats a team".into()));
    }
    if got != expected {
        return Err(unparseable(format!(
            "ranking {:?} is not a permutation of the candidates",
            ranked.iter().map(|t| t.0.as_str()).collect::<Vec<_>>()
        )));
    }
    Ok((ranked, explanation.to_string()))
}

/// Produces the expert's ranking of candidate partner teams. In model mode
/// an unparseable reply falls back to the deterministic ranking with a
/// notice; gateway failures propagate.
pub fn rank_teams(
    input: &RankingInput<'_>,
    mode: RankingMode,
    gateway: &Gateway,
) -> Result<TeamRanking, ExpertError> {
    let usable = input.usable();
    if usable.is_empty() {
        return Err(ExpertError::NoUsableMetrics);
    }
    let candidates = input.candidates();
    let fallback = |notice: Option<String>| {
        let scored = deterministic_scores(&usable, &candidates);
        let summary: Vec<String> = scored.iter().map(|(t, s)| format!("{t}={s:.3}")).collect();
        TeamRanking {
            expert: input.expert.clone(),
            ranked_teams: scored.into_iter().map(|(t, _)| t).collect(),
            explanation: format!(
                "Mean normalized score over {} metric(s): {}",
                usable.len(),
                summary.join(", ")
            ),
            mode: RankingMode::Deterministic,
            notice,
        }
    };
    if mode == RankingMode::Deterministic {
        return Ok(fallback(None));
    }
    let prompt = ranking_prompt(input)?;
    let response = gateway.complete(&gateway.request(vec![ChatMessage::user(prompt)], max_tokens::RANKING))?;
    match parse_ranking(&response.content, &candidates) {
        Ok((ranked_teams, explanation)) => Ok(TeamRanking {
            expert: input.expert.clone(),
            ranked_teams,
            explanation,
            mode: RankingMode::Model,
            notice: None,
        }),
        Err(e) => Ok(fallback(Some(format!(
            "{}: {e}; used the deterministic ranking instead",
            input.expert.name
        )))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(name: &str, polarity: Polarity, values: &[(&str, f64)]) -> MetricResult {
        MetricResult::from_values(name, polarity, values.iter().map(|(t, v)| (TeamId::from(*t), *v)))
    }

    fn ids(xs: &[&str]) -> Vec<TeamId> {
        xs.iter().map(|x| TeamId::from(*x)).collect()
    }

    #[test]
    fn single_metric_orders_by_value() {
        let r = result("m", Polarity::HigherBetter, &[("A", 10.0), ("B", 0.0)]);
        assert_eq!(deterministic_ranking(&[r], &ids(&["B", "A"])), ids(&["A", "B"]));
    }

    #[test]
    fn opposing_metrics_tie_and_break_by_id() {
        let m1 = result("m1", Polarity::HigherBetter, &[("A", 1.0), ("B", 0.0)]);
        let m2 = result("m2", Polarity::HigherBetter, &[("A", 0.0), ("B", 2.0)]);
        let scores = deterministic_scores(&[&m1, &m2], &ids(&["B", "A"]));
        assert_eq!(scores, vec![(TeamId::from("A"), 0.5), (TeamId::from("B"), 0.5)]);
    }

    #[test]
    fn lower_better_flips_and_constant_is_neutral() {
        let m = result("m", Polarity::LowerBetter, &[("A", 5.0), ("B", 1.0)]);
        let c = result("c", Polarity::HigherBetter, &[("A", 3.0), ("B", 3.0)]);
        let scores = deterministic_scores(&[&m, &c], &ids(&["A", "B"]));
        assert_eq!(scores[0], (TeamId::from("B"), 0.75));
        assert_eq!(scores[1], (TeamId::from("A"), 0.25));
    }

    #[test]
    fn parses_permutation_only() {
        let c = ids(&["r2", "r3"]);
        let (ranked, why) =
            parse_ranking("<ranking>r3, r2</ranking>\n<explanation>r3 reviews fast</explanation>", &c).unwrap();
        assert_eq!(ranked, ids(&["r3", "r2"]));
        assert_eq!(why, "r3 reviews fast");
        for bad in [
            "<ranking>r3</ranking><explanation>x</explanation>",
            "<ranking>r3, r3, r2</ranking><explanation>x</explanation>",
            "<ranking>r3, r2, r9</ranking><explanation>x</explanation>",
            "<ranking>r3, r2</ranking>",
            "r3 then r2",
        ] {
            assert!(matches!(parse_ranking(bad, &c), Err(ExpertError::UnparseableRanking(_))), "{bad}");
        }
    }

    #[test]
    fn table_marks_missing_values() {
        let mut r = result("m", Polarity::LowerBetter, &[("A", 1.5), ("B", 0.0)]);
        r.missing.insert(TeamId::from("B"));
        let t = values_table(&[&r], &ids(&["A", "B"]));
        assert!(t.contains("m (lower is better)"));
        assert!(t.contains("| A | 1.5000 |"));
        assert!(t.contains("| B | n/a |"));
    }
}
