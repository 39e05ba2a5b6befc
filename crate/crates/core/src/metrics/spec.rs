use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricRole {
    Goal,
    Supporting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    #[default]
    HigherBetter,
    LowerBetter,
}

impl Polarity {
    /// Accepts `higher_better`, `lower_better` and loose variants such as
    /// "higher is better" or "lower-better".
    pub fn parse(text: &str) -> Option<Self> {
        let t: String = text
            .chars()
            .filter(|c| c.is_ascii_alphabetic())
            .collect::<String>()
            .to_ascii_lowercase();
        match t.as_str() {
            "higherbetter" | "higherisbetter" | "higher" | "maximize" => Some(Self::HigherBetter),
            "lowerbetter" | "lowerisbetter" | "lower" | "minimize" => Some(Self::LowerBetter),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::HigherBetter => "higher_better",
            Polarity::LowerBetter => "lower_better",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named metric proposal: what to measure and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub function_name: String,
    pub description: String,
    #[serde(default)]
    pub reason: String,
    pub role: MetricRole,
    #[serde(default)]
    pub polarity: Polarity,
}

impl MetricSpec {
    pub fn supporting(
        function_name: impl Into<String>,
        description: impl Into<String>,
        reason: impl Into<String>,
    ) -> Self {
        Self {
            function_name: function_name.into(),
            description: description.into(),
            reason: reason.into(),
            role: MetricRole::Supporting,
            polarity: Polarity::HigherBetter,
        }
    }

    pub fn with_polarity(mut self, polarity: Polarity) -> Self {
        self.polarity = polarity;
        self
    }

    pub fn with_role(mut self, role: MetricRole) -> Self {
        self.role = role;
        self
    }
}

/// Splits an identifier or phrase into lowercase word tokens, breaking on
/// non-alphanumerics, snake_case and camelCase boundaries.
pub fn name_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            continue;
        }
        if c.is_uppercase() && !current.is_empty() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            // "issueTime" and "HTTPServer" both split before the capital that
            // starts a new word.
            if prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower)
            {
                tokens.push(std::mem::take(&mut current));
            }
        }
        current.extend(c.to_lowercase());
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Lowercase with every non-alphanumeric removed: "Commit-Frequency" and
/// "commitFrequency" both become "commitfrequency".
pub fn canonical_name(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(|c| c.to_lowercase())
        .collect()
}
