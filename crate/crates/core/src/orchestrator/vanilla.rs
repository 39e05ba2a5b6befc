//! The single-prompt baseline and its tolerant list parser.

use super::OrchestratorError;
use crate::llm::{max_tokens, ChatMessage, Gateway};
use crate::metrics::MetricSpec;
use crate::prompts::{render, Bindings, Stage};

pub fn vanilla_prompt(goal: &str) -> Result<String, OrchestratorError> {
    Ok(render(Stage::Vanilla, &Bindings::new().set("goal", goal))?)
}

#[derive(Debug, PartialEq)]
enum Token {
    Text(String),
    Colon,
    Comma,
}

/// A quote closes a string only when the next non-space character could
/// follow a string in a dict literal, so "team's" survives in '...' strings.
fn closes(chars: &[char], i: usize) -> bool {
    chars[i + 1..]
        .iter()
        .find(|c| !c.is_whitespace())
        .is_none_or(|c| matches!(c, ':' | ',' | '}' | ']'))
}

fn tokenize(body: &[char]) -> Vec<Token> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < body.len() {
        let c = body[i];
        match c {
            ':' => out.push(Token::Colon),
            ',' => out.push(Token::Comma),
            '\'' | '"' | '\u{2018}' | '\u{201c}' => {
                let close = match c {
                    '\u{2018}' => '\u{2019}',
                    '\u{201c}' => '\u{201d}',
                    q => q,
                };
                let mut s = String::new();
                i += 1;
                while i < body.len() {
                    if body[i] == '\\' && i + 1 < body.len() {
                        s.push(body[i + 1]);
                        i += 2;
                        continue;
                    }
                    if body[i] == close && closes(body, i) {
                        break;
                    }
                    s.push(body[i]);
                    i += 1;
                }
                out.push(Token::Text(s));
            }
            c if c.is_whitespace() => {}
            _ => {
                let mut s = String::new();
                while i < body.len() && !matches!(body[i], ':' | ',') {
                    s.push(body[i]);
                    i += 1;
                }
                out.push(Token::Text(s.trim().to_string()));
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Every `name: description` pair inside `{...}` groups, in order. Quotes may
/// be single, double, typographic or missing.
pub fn parse_vanilla_pairs(text: &str) -> Vec<(String, String)> {
    let chars: Vec<char> = text.chars().collect();
    let mut pairs = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '{' {
            i += 1;
            continue;
        }
        let Some(len) = chars[i + 1..].iter().position(|&c| c == '}') else {
            break;
        };
        let tokens = tokenize(&chars[i + 1..i + 1 + len]);
        for w in tokens.windows(3) {
            if let [Token::Text(k), Token::Colon, Token::Text(v)] = w {
                let (k, v) = (k.trim(), v.trim());
                if !k.is_empty() && !v.is_empty() {
                    pairs.push((k.to_string(), v.to_string()));
                }
            }
        }
        i += len + 2;
    }
    pairs
}

/// Runs the baseline for `goal`. Fewer than nine metrics is not an error.
pub fn run_vanilla(goal: &str, gateway: &Gateway) -> Result<Vec<MetricSpec>, OrchestratorError> {
    if goal.trim().is_empty() {
        return Err(OrchestratorError::Config("goal must not be empty".into()));
    }
    let prompt = vanilla_prompt(goal)?;
    let reply = gateway.complete(&gateway.request(vec![ChatMessage::user(prompt)], max_tokens::VANILLA))?;
    let pairs = parse_vanilla_pairs(&reply.content);
    if pairs.is_empty() {
        return Err(OrchestratorError::UnparseableVanillaList);
    }
    Ok(pairs
        .into_iter()
        .map(|(name, description)| MetricSpec::supporting(name, description, ""))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn python_style_list() {
        let text = "[{'commitFrequency': 'How often the team commits.'}, {'teamMorale': \"The team's mood\"}]";
        let p = parse_vanilla_pairs(text);
        assert_eq!(
            p,
            [
                ("commitFrequency".to_string(), "How often the team commits.".to_string()),
                ("teamMorale".to_string(), "The team's mood".to_string()),
            ]
        );
    }

    #[test]
    fn tolerates_apostrophes_missing_quotes_and_json() {
        let p = parse_vanilla_pairs("{'leadTime': 'the team's lead time'}\n{cycleTime: time from start to done}\n{\"a\": \"b\", \"c\": \"d\"}");
        assert_eq!(p.len(), 4);
        assert_eq!(p[0].1, "the team's lead time");
        assert_eq!(p[1], ("cycleTime".into(), "time from start to done".into()));
        assert_eq!(p[3], ("c".into(), "d".into()));
    }

    #[test]
    fn prose_yields_nothing() {
        assert!(parse_vanilla_pairs("Here are some ideas: commits, reviews").is_empty());
        assert!(parse_vanilla_pairs("{ unclosed: x").is_empty());
    }
}
