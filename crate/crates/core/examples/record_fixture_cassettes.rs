//! Regenerates the shipped fixtures under tests/fixtures by recording the
//! scripted model. Run after changing a prompt template or the script:
//!
//!     cargo run --example record_fixture_cassettes

use std::path::Path;

use gems::offline::FixtureSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let scratch = tempfile::tempdir()?;
    let set = FixtureSet::author(scratch.path())?;
    let stale = set.stale_in(&dir);
    set.write_to(&dir)?;
    for (name, body) in &set.files {
        let mark = if stale.contains(name) { "updated" } else { "unchanged" };
        println!("{name:<26} {:>5} lines  {mark}", body.lines().count());
    }
    Ok(())
}
