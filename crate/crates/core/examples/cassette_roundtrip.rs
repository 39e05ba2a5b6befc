//! Records a request against the scripted model, writes the cassette to
//! disk and answers the same request again from the file alone.
//!
//!     cargo run --example cassette_roundtrip

use gems::llm::{fingerprint, ChatMessage, ChatRequest, Cassette, Gateway};
use gems::offline::{ping_request, scripted_gateway, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let recorder = scripted_gateway(Scenario::default());
    let request = ping_request();
    let live = recorder.complete(&request)?;
    println!("recorded  {} -> {:?}", fingerprint(&request), live.content);

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("ping.jsonl");
    recorder.recorded().expect("recording gateway").save(&path)?;
    println!("cassette  {}", std::fs::read_to_string(&path)?.trim_end());

    let replay = Gateway::replay(Cassette::load(&path)?);
    println!("replayed  {:?}", replay.complete(&request)?.content);

    let unknown = ChatRequest::new(vec![ChatMessage::user("never recorded")], 16);
    match replay.complete(&unknown) {
        Ok(r) => println!("unexpected hit: {:?}", r.content),
        Err(e) => println!("miss      {e}"),
    }
    Ok(())
}
