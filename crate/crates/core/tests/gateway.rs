mod common;

use std::sync::Arc;

use common::{cassette, fixture, replay};
use gems::llm::{fingerprint, Cassette, CassetteWriter, ChatMessage, ChatRequest, Gateway, LlmError};
use gems::offline::{ping_request, scripted_client, FixtureSet, Scenario, ScriptedModel};

/// Digest of the ping request as written into components.jsonl when the
/// fixtures were authored. Changing the canonical encoding breaks this.
const F1: &str = "e36eb49322dd01a824372855b8399abdd0a974d27fdfb38b41ab6973f387fbab";

#[test]
fn fixture_request_has_frozen_fingerprint() {
    assert_eq!(fingerprint(&ping_request()), F1);
    assert!(cassette("components.jsonl").get(F1).is_some());
}

#[test]
fn replay_serves_fixture_response_verbatim() {
    let gw = replay("components.jsonl");
    let first = gw.complete(&ping_request()).unwrap();
    let second = gw.complete(&ping_request()).unwrap();
    assert_eq!(first.content, "pong");
    assert_eq!(first, second);
}

#[test]
fn empty_cassette_misses_with_fingerprint() {
    let gw = Gateway::replay(Cassette::new());
    match gw.complete(&ping_request()) {
        Err(LlmError::ReplayMiss(key)) => assert_eq!(key, F1),
        other => panic!("expected a replay miss, got {other:?}"),
    }
}

#[test]
fn a_different_max_tokens_is_a_different_request() {
    let gw = replay("components.jsonl");
    let req = ChatRequest::new(vec![ChatMessage::user("ping")], 17);
    assert!(matches!(gw.complete(&req), Err(LlmError::ReplayMiss(_))));
}

#[test]
fn record_to_file_then_replay_from_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rec.jsonl");
    let gw = Gateway::record(scripted_client(Scenario::default()), CassetteWriter::new(&path).unwrap()).unwrap();
    let recorded = gw.complete(&ping_request()).unwrap();
    drop(gw);
    let replayed = Gateway::replay(Cassette::load(&path).unwrap()).complete(&ping_request()).unwrap();
    assert_eq!(recorded, replayed);
}

#[test]
fn concurrent_replay_is_consistent() {
    let gw = Arc::new(replay("components.jsonl"));
    let answers: Vec<String> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let gw = Arc::clone(&gw);
                s.spawn(move || gw.complete(&ping_request()).unwrap().content)
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(answers.iter().all(|a| a == "pong"));
}

#[test]
fn scripted_model_answers_unknown_prompts_politely() {
    let model = ScriptedModel::default();
    assert!(model.respond(&[ChatMessage::user("hello")]).contains("no scripted reply"));
}

#[test]
fn shipped_fixtures_are_current() {
    let scratch = tempfile::tempdir().unwrap();
    let set = FixtureSet::author(scratch.path()).unwrap();
    let stale = set.stale_in(&fixture(""));
    assert!(
        stale.is_empty(),
        "fixtures out of date: {stale:?}; run `cargo run --example record_fixture_cassettes`"
    );
}
