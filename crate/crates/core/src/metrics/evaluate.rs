use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{MetricError, MetricImpl, Polarity};
use crate::store::{RepoStore, StoreError, TeamId, TeamRecord};

/// Per-team values of one metric. Teams the query did not report are
/// present with value 0 and listed in `missing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub spec_name: String,
    pub polarity: Polarity,
    pub values: BTreeMap<TeamId, f64>,
    pub missing: BTreeSet<TeamId>,
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl MetricResult {
    pub fn failure(spec_name: impl Into<String>, polarity: Polarity, message: impl Into<String>) -> Self {
        Self {
            spec_name: spec_name.into(),
            polarity,
            values: BTreeMap::new(),
            missing: BTreeSet::new(),
            failed: true,
            failure: Some(message.into()),
        }
    }

    pub fn from_values(
        spec_name: impl Into<String>,
        polarity: Polarity,
        values: impl IntoIterator<Item = (TeamId, f64)>,
    ) -> Self {
        Self {
            spec_name: spec_name.into(),
            polarity,
            values: values.into_iter().collect(),
            missing: BTreeSet::new(),
            failed: false,
            failure: None,
        }
    }

    pub fn is_usable(&self) -> bool {
        !self.failed && !self.values.is_empty()
    }
}

/// Runs a metric over every team. Query failures are captured in the
/// result; only an unavailable store is surfaced as an error.
pub fn evaluate(
    metric: &MetricImpl,
    store: &RepoStore,
    teams: &[TeamRecord],
    exclude: Option<&TeamId>,
) -> Result<MetricResult, StoreError> {
    let name = metric.spec.function_name.clone();
    let polarity = metric.spec.polarity;
    let rows = match store.execute_readonly(&metric.sql) {
        Ok(rows) => rows,
        Err(e @ StoreError::StoreUnavailable(_)) => return Err(e),
        Err(e) => return Ok(MetricResult::failure(name, polarity, e.to_string())),
    };
    if rows.columns.len() != 2 {
        return Ok(MetricResult::failure(
            name,
            polarity,
            format!("expected 2 result columns, got {}", rows.columns.len()),
        ));
    }

    let known: BTreeSet<&TeamId> = teams.iter().map(|t| &t.team_id).collect();
    let mut reported: BTreeMap<TeamId, f64> = BTreeMap::new();
    for row in &rows.rows {
        let Some(id) = row[0].as_text().map(TeamId) else {
            continue;
        };
        if !known.contains(&id) {
            continue;
        }
        let Some(value) = row[1].as_f64().filter(|v| v.is_finite()) else {
            continue;
        };
        if reported.insert(id.clone(), value).is_some() {
            return Ok(MetricResult::failure(
                name,
                polarity,
                format!("query returned more than one row for team {id}"),
            ));
        }
    }

    let mut values = BTreeMap::new();
    let mut missing = BTreeSet::new();
    for team in teams {
        if Some(&team.team_id) == exclude {
            continue;
        }
        match reported.get(&team.team_id) {
            Some(v) => {
                values.insert(team.team_id.clone(), *v);
            }
            None => {
                values.insert(team.team_id.clone(), 0.0);
                missing.insert(team.team_id.clone());
            }
        }
    }
    Ok(MetricResult {
        spec_name: name,
        polarity,
        values,
        missing,
        failed: false,
        failure: None,
    })
}

/// The worst performer: lowest value for higher-better metrics, highest for
/// lower-better. Ties go to the smallest team id.
pub fn select_worst(result: &MetricResult, teams: &[TeamRecord]) -> Result<TeamId, MetricError> {
    if result.failed {
        return Err(MetricError::EmptyResult);
    }
    let candidates = teams
        .iter()
        .filter_map(|t| result.values.get(&t.team_id).map(|v| (&t.team_id, *v)))
        .filter(|(_, v)| !v.is_nan());
    let mut worst: Option<(&TeamId, f64)> = None;
    for (id, v) in candidates {
        let better_candidate = match worst {
            None => true,
            Some((wid, wv)) => {
                let cmp = match result.polarity {
                    Polarity::HigherBetter => v.total_cmp(&wv).reverse(),
                    Polarity::LowerBetter => v.total_cmp(&wv),
                };
                cmp.is_gt() || (cmp.is_eq() && id < wid)
            }
        };
        if better_candidate {
            worst = Some((id, v));
        }
    }
    worst.map(|(id, _)| id.clone()).ok_or(MetricError::EmptyResult)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn teams(ids: &[&str]) -> Vec<TeamRecord> {
        ids.iter()
            .map(|id| TeamRecord {
                team_id: TeamId::from(*id),
                name: id.to_string(),
            })
            .collect()
    }

    fn result(polarity: Polarity, values: &[(&str, f64)]) -> MetricResult {
        MetricResult::from_values(
            "m",
            polarity,
            values.iter().map(|(k, v)| (TeamId::from(*k), *v)),
        )
    }

    #[test]
    fn worst_is_argmin_for_higher_better() {
        let r = result(Polarity::HigherBetter, &[("A", 0.9), ("B", 0.1)]);
        assert_eq!(select_worst(&r, &teams(&["A", "B"])).unwrap(), TeamId::from("B"));
    }

    #[test]
    fn ties_break_lexicographically() {
        let r = result(Polarity::HigherBetter, &[("B", 2.0), ("A", 2.0)]);
        assert_eq!(select_worst(&r, &teams(&["B", "A"])).unwrap(), TeamId::from("A"));
    }

    #[test]
    fn worst_is_argmax_for_lower_better() {
        let r = result(Polarity::LowerBetter, &[("A", 1.0), ("B", 5.0), ("C", 3.0)]);
        assert_eq!(
            select_worst(&r, &teams(&["A", "B", "C"])).unwrap(),
            TeamId::from("B")
        );
    }

    #[test]
    fn empty_or_failed_results_error() {
        let r = result(Polarity::HigherBetter, &[]);
        assert_eq!(select_worst(&r, &teams(&["A"])), Err(MetricError::EmptyResult));
        let f = MetricResult::failure("m", Polarity::HigherBetter, "boom");
        assert_eq!(select_worst(&f, &teams(&["A"])), Err(MetricError::EmptyResult));
    }
}
