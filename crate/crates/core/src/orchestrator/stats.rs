use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::metrics::{canonical_name, MetricSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityStats {
    pub total: usize,
    pub k: usize,
    /// Canonical metric name to occurrence count.
    pub name_counts: BTreeMap<String, usize>,
    pub top_k_share: f64,
}

impl DiversityStats {
    /// The `k` most frequent names, most frequent first, ties by name.
    pub fn top(&self) -> Vec<(&str, usize)> {
        let mut v: Vec<(&str, usize)> = self.name_counts.iter().map(|(n, c)| (n.as_str(), *c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v.truncate(self.k);
        v
    }
}

/// Share of the `k` largest counts in `total`.
pub fn top_k_share(counts: &[usize], total: usize, k: usize) -> f64 {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let top: usize = sorted.iter().take(k).sum();
    top as f64 / total as f64
}

/// Name frequencies over `specs`; names are canonicalized so that spelling
/// variants of the same metric are counted together.
pub fn diversity_stats(specs: &[MetricSpec], k: usize) -> Result<DiversityStats, OrchestratorError> {
    diversity_stats_from_names(specs.iter().map(|s| s.function_name.as_str()), k)
}

pub fn diversity_stats_from_names<'a>(
    names: impl IntoIterator<Item = &'a str>,
    k: usize,
) -> Result<DiversityStats, OrchestratorError> {
    if k == 0 {
        return Err(OrchestratorError::Config("k must be at least 1".into()));
    }
    let mut name_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut total = 0;
    for name in names {
        *name_counts.entry(canonical_name(name)).or_default() += 1;
        total += 1;
    }
    if total == 0 {
        return Err(OrchestratorError::EmptyInput);
    }
    let counts: Vec<usize> = name_counts.values().copied().collect();
    Ok(DiversityStats {
        total,
        k,
        top_k_share: top_k_share(&counts, total, k),
        name_counts,
    })
}

/// Metric names out of a JSON document: an array of names, an array of
/// specs, a match report (bare or wrapped with its header), or arrays of
/// any of these, which is how several runs are pooled.
pub fn metric_names_from_json(text: &str) -> Result<Vec<String>, OrchestratorError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| OrchestratorError::Config(format!("metrics json: {e}")))?;
    let mut names = Vec::new();
    collect_names(&value, &mut names)?;
    Ok(names)
}

fn collect_names(value: &serde_json::Value, out: &mut Vec<String>) -> Result<(), OrchestratorError> {
    use serde_json::Value;
    match value {
        Value::String(s) => out.push(s.clone()),
        Value::Array(items) => {
            for item in items {
                collect_names(item, out)?;
            }
        }
        Value::Object(map) => {
            if let Some(name) = map.get("function_name").and_then(Value::as_str) {
                out.push(name.to_string());
            } else if let Some(spec) = map.get("spec") {
                collect_names(spec, out)?;
            } else if let Some(metrics) = map.get("supporting_metrics") {
                collect_names(metrics, out)?;
            } else if let Some(report) = map.get("report") {
                collect_names(report, out)?;
            } else {
                return Err(OrchestratorError::Config(
                    "metrics json: object has no function_name, spec, supporting_metrics or report".into(),
                ));
            }
        }
        other => {
            return Err(OrchestratorError::Config(format!("metrics json: unexpected value {other}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separators_and_case_merge() {
        let s = diversity_stats_from_names(["Commit-Frequency", "commitFrequency", "commit_frequency", "other"], 1).unwrap();
        assert_eq!(s.name_counts["commitfrequency"], 3);
        assert_eq!(s.top_k_share, 0.75);
        assert_eq!(s.top(), [("commitfrequency", 3)]);
    }

    #[test]
    fn single_spec_and_empty_input() {
        let s = diversity_stats(&[MetricSpec::supporting("x", "", "")], 5).unwrap();
        assert_eq!(s.top_k_share, 1.0);
        assert!(matches!(diversity_stats(&[], 5), Err(OrchestratorError::EmptyInput)));
    }

    #[test]
    fn names_from_every_accepted_shape() {
        assert_eq!(metric_names_from_json(r#"["a", "b"]"#).unwrap(), ["a", "b"]);
        let specs = r#"[{"function_name": "a", "description": "", "role": "supporting"}]"#;
        assert_eq!(metric_names_from_json(specs).unwrap(), ["a"]);
        let report = r#"{"header": {}, "report": {"supporting_metrics": [{"expert": "x", "spec": {"function_name": "c"}}]}}"#;
        assert_eq!(metric_names_from_json(report).unwrap(), ["c"]);
        assert_eq!(metric_names_from_json(r#"[["a"], ["b", "c"]]"#).unwrap().len(), 3);
        assert!(metric_names_from_json("[1]").is_err());
        assert!(metric_names_from_json("{}").is_err());
    }
}
