//! Parser for `<metric>` blocks in model responses.
//!
//! ```text
//! <metric>
//!     <metric_name>...</metric_name>
//!     <metric_description>...</metric_description>
//!     <metric_reason>...</metric_reason>
//!     <metric_polarity>higher_better</metric_polarity>   (optional)
//! </metric>
//! ```

use serde::{Deserialize, Serialize};

use crate::metrics::{MetricRole, MetricSpec, Polarity};

const OPEN: &str = "<metric>";
const CLOSE: &str = "</metric>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockWarning {
    /// Character offset of the offending `<metric>` tag.
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedBlock {
    pub spec: MetricSpec,
    pub offset: usize,
    pub polarity_declared: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockParse {
    pub blocks: Vec<ParsedBlock>,
    pub warnings: Vec<BlockWarning>,
}

impl BlockParse {
    pub fn specs(&self) -> Vec<MetricSpec> {
        self.blocks.iter().map(|b| b.spec.clone()).collect()
    }
}

/// Extracts every well-formed block in document order. Never fails;
/// malformed blocks are skipped and reported as warnings.
pub fn parse_metric_blocks(text: &str) -> BlockParse {
    let mut parse = BlockParse::default();
    let char_offset = |byte: usize| text[..byte].chars().count();
    let mut pos = 0;
    while let Some(start) = text[pos..].find(OPEN).map(|i| i + pos) {
        let body_start = start + OPEN.len();
        let close = text[body_start..].find(CLOSE).map(|i| i + body_start);
        let reopen = text[body_start..].find(OPEN).map(|i| i + body_start);
        match (close, reopen) {
            (None, _) => {
                parse.warnings.push(BlockWarning {
                    offset: char_offset(start),
                    message: "unclosed <metric> tag".into(),
                });
                break;
            }
            (Some(c), Some(r)) if r < c => {
                parse.warnings.push(BlockWarning {
                    offset: char_offset(start),
                    message: "<metric> tag not closed before the next block".into(),
                });
                pos = r;
            }
            (Some(c), _) => {
                match parse_body(&text[body_start..c]) {
                    Ok((spec, polarity_declared)) => parse.blocks.push(ParsedBlock {
                        spec,
                        offset: char_offset(start),
                        polarity_declared,
                    }),
                    Err(message) => parse.warnings.push(BlockWarning {
                        offset: char_offset(start),
                        message,
                    }),
                }
                pos = c + CLOSE.len();
            }
        }
    }
    parse
}

fn element<'a>(body: &'a str, name: &str) -> Option<&'a str> {
    let open = format!("<{name}>");
    let close = format!("</{name}>");
    let start = body.find(&open)? + open.len();
    let end = body[start..].find(&close)? + start;
    Some(body[start..end].trim())
}

fn parse_body(body: &str) -> Result<(MetricSpec, bool), String> {
    let name = element(body, "metric_name").ok_or("missing <metric_name> element")?;
    let description =
        element(body, "metric_description").ok_or("missing <metric_description> element")?;
    let reason = element(body, "metric_reason").ok_or("missing <metric_reason> element")?;
    if name.is_empty() {
        return Err("empty <metric_name>".into());
    }
    if description.is_empty() {
        return Err(format!("metric {name} has an empty description"));
    }
    let function_name = identifier(name);
    if function_name.is_empty() {
        return Err(format!("metric name {name:?} has no letters or digits"));
    }
    let polarity = element(body, "metric_polarity").and_then(Polarity::parse);
    let spec = MetricSpec {
        function_name,
        description: description.to_string(),
        reason: reason.to_string(),
        role: MetricRole::Supporting,
        polarity: polarity.unwrap_or_default(),
    };
    Ok((spec, polarity.is_some()))
}

/// "Average Review Time" becomes "averageReviewTime" and "on-time rate"
/// becomes "onTimeRate"; names without spaces pass through.
fn identifier(name: &str) -> String {
    if !name.chars().any(char::is_whitespace) {
        return name.to_string();
    }
    name.split(|c: char| !c.is_alphanumeric() && c != '_')
        .filter(|w| !w.is_empty())
        .enumerate()
        .map(|(i, word)| {
            let mut chars = word.chars();
            let first = chars.next().expect("non-empty word");
            let head: String = if i == 0 {
                first.to_lowercase().collect()
            } else {
                first.to_uppercase().collect()
            };
            head + chars.as_str()
        })
        .collect()
}
