use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{name_tokens, MetricError, MetricSpec};
use crate::store::sandbox;

pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.5;

const SHIPPED_REGISTRY: &str = include_str!("../../registry/predefined.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImplKind {
    Predefined,
    Generated,
}

/// An executable metric: a validated SELECT yielding `(team_id, value)` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricImpl {
    pub spec: MetricSpec,
    pub kind: ImplKind,
    pub sql: String,
}

impl MetricImpl {
    pub fn new(spec: MetricSpec, kind: ImplKind, sql: impl Into<String>) -> Result<Self, MetricError> {
        let sql = sql.into();
        validate_metric_sql(&sql)?;
        Ok(Self { spec, kind, sql })
    }
}

/// Sandbox admission plus the two-column result contract.
pub fn validate_metric_sql(sql: &str) -> Result<(), MetricError> {
    let admitted = sandbox::check(sql).map_err(|e| MetricError::SandboxReject(e.to_string()))?;
    match admitted.projection_width {
        Some(2) => Ok(()),
        Some(n) => Err(MetricError::SandboxReject(format!(
            "query must return exactly 2 columns (team_id, value), found {n}"
        ))),
        None => Err(MetricError::SandboxReject(
            "query must list its 2 result columns explicitly".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub canonical_name: String,
    pub description: String,
    pub sql: String,
}

/// Immutable set of ready-made metric implementations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredefinedRegistry {
    entries: BTreeMap<String, RegistryEntry>,
}

impl PredefinedRegistry {
    /// The ten implementations shipped with the crate.
    pub fn shipped() -> Self {
        Self::from_json(SHIPPED_REGISTRY).expect("shipped registry is valid")
    }

    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Parses a JSON array of `{canonical_name, description, sql}` and
    /// validates every template; any failure rejects the whole registry.
    pub fn from_json(text: &str) -> Result<Self, MetricError> {
        let list: Vec<RegistryEntry> = serde_json::from_str(text)
            .map_err(|e| MetricError::InvalidRegistry(e.to_string()))?;
        Self::from_entries(list)
    }

    pub fn from_entries(list: Vec<RegistryEntry>) -> Result<Self, MetricError> {
        let mut entries = BTreeMap::new();
        for entry in list {
            if entry.canonical_name.trim().is_empty() {
                return Err(MetricError::InvalidRegistry("empty canonical_name".into()));
            }
            validate_metric_sql(&entry.sql).map_err(|e| {
                MetricError::InvalidRegistry(format!("{}: {e}", entry.canonical_name))
            })?;
            if entries.contains_key(&entry.canonical_name) {
                return Err(MetricError::InvalidRegistry(format!(
                    "duplicate entry {}",
                    entry.canonical_name
                )));
            }
            entries.insert(entry.canonical_name.clone(), entry);
        }
        Ok(Self { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, MetricError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MetricError::InvalidRegistry(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, canonical_name: &str) -> Option<&RegistryEntry> {
        self.entries.get(canonical_name)
    }

    pub fn entries(&self) -> impl Iterator<Item = &RegistryEntry> {
        self.entries.values()
    }
}

/// Token-set Jaccard similarity between two names.
pub fn name_similarity(a: &str, b: &str) -> f64 {
    jaccard(&token_set(a), &token_set(b))
}

fn token_set(name: &str) -> BTreeSet<String> {
    name_tokens(name).into_iter().collect()
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Picks the registry entry whose name is most similar to the spec's
/// function name, if that similarity reaches `threshold`. Ties go to the
/// lexicographically smallest canonical name.
pub fn match_predefined(
    spec: &MetricSpec,
    registry: &PredefinedRegistry,
    threshold: f64,
) -> Option<MetricImpl> {
    let wanted = token_set(&spec.function_name);
    let mut best: Option<(&RegistryEntry, f64)> = None;
    // BTreeMap iteration is already in canonical-name order, so a strict `>`
    // keeps the earliest name on ties.
    for entry in registry.entries() {
        let score = jaccard(&wanted, &token_set(&entry.canonical_name));
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((entry, score));
        }
    }
    let (entry, score) = best?;
    (score > 0.0 && score >= threshold).then(|| MetricImpl {
        spec: spec.clone(),
        kind: ImplKind::Predefined,
        sql: entry.sql.clone(),
    })
}
