use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::expert::RankingMode;
use crate::llm::{BackendKind, Cassette, CassetteWriter, Gateway, LiveClient, DEFAULT_MODEL};
use crate::metrics::DEFAULT_MATCH_THRESHOLD;
use crate::panel::PanelCriteria;

pub const DEFAULT_AGGREGATION: &str = "easy to understand and fair aggregation";

/// Everything a run needs. Built from defaults, then a config file, then
/// command-line flags, each layer overriding the previous one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub goal: String,
    pub perspectives: usize,
    pub experts_per_field: usize,
    pub panel: PanelCriteria,
    pub panel_size: usize,
    pub metrics_per_expert: usize,
    /// How many elements Stage 2 asks each expert to list.
    pub num_of_tools: usize,
    pub aggregation_preference: String,
    pub backend: BackendKind,
    pub cassette_path: Option<PathBuf>,
    pub db_path: PathBuf,
    pub match_threshold: f64,
    pub ranking_mode: RankingMode,
    pub model: String,
    pub seed_label: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            goal: String::new(),
            perspectives: 4,
            experts_per_field: 3,
            panel: PanelCriteria::default(),
            panel_size: 3,
            metrics_per_expert: 3,
            num_of_tools: 5,
            aggregation_preference: DEFAULT_AGGREGATION.to_string(),
            backend: BackendKind::Replay,
            cassette_path: None,
            db_path: PathBuf::from("gems.sqlite"),
            match_threshold: DEFAULT_MATCH_THRESHOLD,
            ranking_mode: RankingMode::Model,
            model: DEFAULT_MODEL.to_string(),
            seed_label: "default".to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelLayer {
    pub text: Option<String>,
    pub same_field: Option<usize>,
    pub other_field: Option<usize>,
}

/// One partial layer of configuration: the config file, or the flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub goal: Option<String>,
    pub perspectives: Option<usize>,
    pub experts_per_field: Option<usize>,
    pub panel: Option<PanelLayer>,
    pub panel_size: Option<usize>,
    pub metrics_per_expert: Option<usize>,
    pub num_of_tools: Option<usize>,
    pub aggregation: Option<String>,
    pub backend: Option<BackendKind>,
    pub cassette: Option<PathBuf>,
    pub db: Option<PathBuf>,
    pub match_threshold: Option<f64>,
    pub ranking_mode: Option<RankingMode>,
    pub model: Option<String>,
    pub seed_label: Option<String>,
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> Result<Self, OrchestratorError> {
        toml::from_str(text).map_err(|e| OrchestratorError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| OrchestratorError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

impl RunConfig {
    pub fn apply(mut self, layer: &ConfigLayer) -> Self {
        macro_rules! take {
            ($field:ident <- $src:ident) => {
                if let Some(v) = &layer.$src {
                    self.$field = v.clone();
                }
            };
        }
        take!(goal <- goal);
        take!(perspectives <- perspectives);
        take!(experts_per_field <- experts_per_field);
        take!(panel_size <- panel_size);
        take!(metrics_per_expert <- metrics_per_expert);
        take!(num_of_tools <- num_of_tools);
        take!(aggregation_preference <- aggregation);
        take!(backend <- backend);
        take!(db_path <- db);
        take!(match_threshold <- match_threshold);
        take!(ranking_mode <- ranking_mode);
        take!(model <- model);
        take!(seed_label <- seed_label);
        if let Some(c) = &layer.cassette {
            self.cassette_path = Some(c.clone());
        }
        if let Some(p) = &layer.panel {
            if let Some(t) = &p.text {
                self.panel.raw_text = t.clone();
            }
            if let Some(n) = p.same_field {
                self.panel.same_field_count = n;
            }
            if let Some(n) = p.other_field {
                self.panel.other_field_count = n;
            }
        }
        self
    }

    /// Defaults, then each layer in order.
    pub fn layered(layers: &[&ConfigLayer]) -> Result<Self, OrchestratorError> {
        let config = layers.iter().fold(Self::default(), |c, l| c.apply(l));
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let bad = |m: String| Err(OrchestratorError::Config(m));
        if self.goal.trim().is_empty() {
            return bad("goal must not be empty".into());
        }
        for (name, v) in [
            ("perspectives", self.perspectives),
            ("experts_per_field", self.experts_per_field),
            ("panel_size", self.panel_size),
            ("metrics_per_expert", self.metrics_per_expert),
            ("num_of_tools", self.num_of_tools),
            ("panel.same_field", self.panel.same_field_count),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.panel.panel_size() != self.panel_size {
            return bad(format!(
                "panel_size {} does not equal same_field {} + other_field {}",
                self.panel_size, self.panel.same_field_count, self.panel.other_field_count
            ));
        }
        if self.panel.raw_text.trim().is_empty() {
            return bad("panel criteria text must not be empty".into());
        }
        if self.aggregation_preference.trim().is_empty() {
            return bad("aggregation preference must not be empty".into());
        }
        if !(0.0..=1.0).contains(&self.match_threshold) {
            return bad(format!("match_threshold {} is outside [0, 1]", self.match_threshold));
        }
        if matches!(self.backend, BackendKind::Replay | BackendKind::Record) && self.cassette_path.is_none() {
            return bad(format!("the {} backend needs a cassette path", self.backend));
        }
        Ok(())
    }
}

/// Builds the gateway the backend setting asks for. Live and record read
/// credentials from the environment.
pub fn build_gateway(
    backend: BackendKind,
    cassette: Option<&Path>,
    model: &str,
) -> Result<Gateway, OrchestratorError> {
    let gateway = match backend {
        BackendKind::Replay => {
            let path = cassette.ok_or_else(|| OrchestratorError::Config("replay needs a cassette path".into()))?;
            Gateway::replay(Cassette::load(path)?)
        }
        BackendKind::Record => {
            let path = cassette.ok_or_else(|| OrchestratorError::Config("record needs a cassette path".into()))?;
            Gateway::record(LiveClient::from_env()?, CassetteWriter::new(path)?)?
        }
        BackendKind::Live => Gateway::live(LiveClient::from_env()?),
    };
    Ok(gateway.with_model(model))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_over_defaults() {
        let file = ConfigLayer::from_toml(
            r#"
goal = "ship faster"
perspectives = 5
cassette = "a.jsonl"
panel = { text = "two alike, two apart", same_field = 2, other_field = 2 }
panel_size = 4
"#,
        )
        .unwrap();
        let flags = ConfigLayer {
            perspectives: Some(6),
            ..Default::default()
        };
        let c = RunConfig::layered(&[&file, &flags]).unwrap();
        assert_eq!(c.perspectives, 6);
        assert_eq!(c.goal, "ship faster");
        assert_eq!(c.panel.other_field_count, 2);
        assert_eq!(c.experts_per_field, 3);
        assert_eq!(c.cassette_path.as_deref(), Some(Path::new("a.jsonl")));
    }

    #[test]
    fn defaults_follow_the_evaluation_settings() {
        let c = RunConfig::default();
        assert_eq!(
            (c.perspectives, c.experts_per_field, c.panel_size, c.metrics_per_expert),
            (4, 3, 3, 3)
        );
        assert_eq!((c.panel.same_field_count, c.panel.other_field_count), (2, 1));
    }

    #[test]
    fn replay_requires_cassette_and_sizes_must_agree() {
        let goal = ConfigLayer {
            goal: Some("g".into()),
            ..Default::default()
        };
        assert!(RunConfig::layered(&[&goal]).is_err());
        let sized = ConfigLayer {
            cassette: Some("c".into()),
            panel_size: Some(4),
            ..goal.clone()
        };
        assert!(RunConfig::layered(&[&sized]).is_err());
        assert!(ConfigLayer::from_toml("bogus = 1").is_err());
    }
}
