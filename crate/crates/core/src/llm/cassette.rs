use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatRequest, ChatResponse, LlmError};

/// SHA-256 over the canonical serialization of a request, hex encoded.
///
/// Canonical form is compact JSON with fields in this order:
/// `model`, `temperature`, `max_tokens`, `messages` (each `role`, `content`).
/// CRLF and lone CR in message content are normalized to LF first.
pub fn fingerprint(request: &ChatRequest) -> String {
    let bytes = canonical_bytes(request);
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Serialize)]
struct CanonicalMessage<'a> {
    role: &'a str,
    content: String,
}

#[derive(Serialize)]
struct CanonicalRequest<'a> {
    model: &'a str,
    temperature: f64,
    max_tokens: u32,
    messages: Vec<CanonicalMessage<'a>>,
}

pub(crate) fn canonical_bytes(request: &ChatRequest) -> Vec<u8> {
    let canonical = CanonicalRequest {
        model: &request.model,
        temperature: request.temperature,
        max_tokens: request.max_tokens,
        messages: request
            .messages
            .iter()
            .map(|m| CanonicalMessage {
                role: m.role.as_str(),
                content: normalize_newlines(&m.content),
            })
            .collect(),
    };
    serde_json::to_vec(&canonical).expect("canonical request serializes")
}

fn normalize_newlines(s: &str) -> String {
    s.replace("\r\n", "\n").replace('\r', "\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub request: ChatRequest,
    pub response: ChatResponse,
}

#[derive(Serialize, Deserialize)]
struct CassetteLine {
    fingerprint: String,
    request: ChatRequest,
    response: ChatResponse,
}

/// Recorded request/response pairs keyed by request fingerprint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cassette {
    entries: BTreeMap<String, CassetteEntry>,
}

impl Cassette {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, fingerprint: &str) -> Option<&CassetteEntry> {
        self.entries.get(fingerprint)
    }

    pub fn lookup(&self, request: &ChatRequest) -> Option<&ChatResponse> {
        self.entries.get(&fingerprint(request)).map(|e| &e.response)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &CassetteEntry)> {
        self.entries.iter()
    }

    /// Inserts under the request's fingerprint and returns that key.
    pub fn insert(&mut self, request: ChatRequest, response: ChatResponse) -> String {
        let key = fingerprint(&request);
        self.entries
            .insert(key.clone(), CassetteEntry { request, response });
        key
    }

    pub fn remove(&mut self, fingerprint: &str) -> Option<CassetteEntry> {
        self.entries.remove(fingerprint)
    }

    /// Drops every entry for which `keep` returns false.
    pub fn retain(&mut self, mut keep: impl FnMut(&CassetteEntry) -> bool) {
        self.entries.retain(|_, e| keep(e));
    }

    pub fn from_jsonl(text: &str) -> Result<Self, LlmError> {
        let mut cassette = Cassette::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: CassetteLine = serde_json::from_str(line).map_err(|e| {
                LlmError::Cassette(format!("line {}: {e}", i + 1))
            })?;
            let actual = fingerprint(&parsed.request);
            if actual != parsed.fingerprint {
                return Err(LlmError::Cassette(format!(
                    "line {}: fingerprint {} does not match request digest {actual}",
                    i + 1,
                    parsed.fingerprint
                )));
            }
            cassette.entries.insert(
                actual,
                CassetteEntry {
                    request: parsed.request,
                    response: parsed.response,
                },
            );
        }
        Ok(cassette)
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Cassette(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&text)
    }

    /// One JSON object per line, sorted by fingerprint.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (key, entry) in &self.entries {
            out.push_str(&entry_line(key, entry));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        let file = File::create(path)
            .map_err(|e| LlmError::Cassette(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        w.write_all(self.to_jsonl().as_bytes())
            .and_then(|_| w.flush())
            .map_err(|e| LlmError::Cassette(format!("{}: {e}", path.display())))
    }
}

fn entry_line(key: &str, entry: &CassetteEntry) -> String {
    serde_json::to_string(&CassetteLine {
        fingerprint: key.to_string(),
        request: entry.request.clone(),
        response: entry.response.clone(),
    })
    .expect("cassette line serializes")
}

/// Append-only JSONL sink used by the record backend.
#[derive(Debug)]
pub struct CassetteWriter {
    path: PathBuf,
}

impl CassetteWriter {
    pub fn new(path: impl Into<PathBuf>) -> Result<Self, LlmError> {
        let path = path.into();
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| LlmError::Cassette(format!("{}: {e}", path.display())))?;
        Ok(Self { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Loads whatever the target already holds, so record runs can resume.
    pub fn existing(&self) -> Result<Cassette, LlmError> {
        let file = File::open(&self.path)
            .map_err(|e| LlmError::Cassette(format!("{}: {e}", self.path.display())))?;
        let mut text = String::new();
        for line in BufReader::new(file).lines() {
            let line =
                line.map_err(|e| LlmError::Cassette(format!("{}: {e}", self.path.display())))?;
            text.push_str(&line);
            text.push('\n');
        }
        Cassette::from_jsonl(&text)
    }

    pub fn append(&self, key: &str, entry: &CassetteEntry) -> Result<(), LlmError> {
        let mut file = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .map_err(|e| LlmError::Cassette(format!("{}: {e}", self.path.display())))?;
        let mut line = entry_line(key, entry);
        line.push('\n');
        file.write_all(line.as_bytes())
            .map_err(|e| LlmError::Cassette(format!("{}: {e}", self.path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ChatMessage;

    fn request(content: &str) -> ChatRequest {
        ChatRequest::new(vec![ChatMessage::user(content)], 64)
    }

    #[test]
    fn fingerprint_is_stable() {
        let r = request("hello");
        assert_eq!(fingerprint(&r), fingerprint(&r.clone()));
        assert_eq!(fingerprint(&r).len(), 64);
    }

    #[test]
    fn temperature_changes_fingerprint() {
        let a = request("hello");
        let b = a.clone().with_temperature(0.7);
        assert_ne!(fingerprint(&a), fingerprint(&b));
    }

    #[test]
    fn line_endings_are_normalized() {
        assert_eq!(fingerprint(&request("a\r\nb")), fingerprint(&request("a\nb")));
        assert_eq!(fingerprint(&request("a\rb")), fingerprint(&request("a\nb")));
    }

    #[test]
    fn canonical_field_order() {
        let text = String::from_utf8(canonical_bytes(&request("x"))).unwrap();
        assert_eq!(
            text,
            r#"{"model":"gpt-4-0613","temperature":0.0,"max_tokens":64,"messages":[{"role":"user","content":"x"}]}"#
        );
    }

    #[test]
    fn jsonl_rejects_tampered_key() {
        let mut c = Cassette::new();
        c.insert(
            request("q"),
            ChatResponse {
                content: "a".into(),
                prompt_tokens: 1,
                completion_tokens: 1,
            },
        );
        let text = c.to_jsonl();
        assert_eq!(Cassette::from_jsonl(&text).unwrap(), c);
        let key = c.entries().next().unwrap().0.clone();
        let tampered = text.replace(&key, &"0".repeat(64));
        assert!(matches!(
            Cassette::from_jsonl(&tampered),
            Err(LlmError::Cassette(_))
        ));
    }
}
