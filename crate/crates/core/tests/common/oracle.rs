//! Brute-force voting tallies written from the rule statements, sharing no
//! code with the library. Each score is computed per candidate by scanning
//! every ballot.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

pub type Profile = Vec<Vec<String>>;

fn position(ballot: &[String], c: &str) -> usize {
    ballot.iter().position(|x| x == c).expect("candidate on ballot")
}

pub fn candidates(p: &Profile) -> Vec<String> {
    let mut c = p[0].clone();
    c.sort();
    c
}

/// Highest score; among equals the lexicographically smallest name.
pub fn best(scores: &BTreeMap<String, u64>) -> String {
    let top = *scores.values().max().expect("non-empty");
    scores.iter().find(|(_, s)| **s == top).map(|(c, _)| c.clone()).unwrap()
}

pub fn plurality(p: &Profile) -> (String, BTreeMap<String, u64>) {
    let scores: BTreeMap<String, u64> = candidates(p)
        .into_iter()
        .map(|c| {
            let n = p.iter().filter(|b| b[0] == c).count() as u64;
            (c, n)
        })
        .collect();
    (best(&scores), scores)
}

/// Borda score as the number of (ballot, rival) pairs the candidate beats.
pub fn borda(p: &Profile) -> (String, BTreeMap<String, u64>) {
    let cs = candidates(p);
    let scores: BTreeMap<String, u64> = cs
        .iter()
        .map(|c| {
            let beaten = p
                .iter()
                .map(|b| cs.iter().filter(|r| *r != c && position(b, c) < position(b, r)).count() as u64)
                .sum();
            (c.clone(), beaten)
        })
        .collect();
    (best(&scores), scores)
}

pub fn approval(p: &Profile, k: usize) -> (String, BTreeMap<String, u64>) {
    let cs = candidates(p);
    let scores: BTreeMap<String, u64> = cs
        .iter()
        .map(|c| {
            let above = |b: &Vec<String>| cs.iter().filter(|r| position(b, r) < position(b, c)).count();
            (c.clone(), p.iter().filter(|b| above(b) < k).count() as u64)
        })
        .collect();
    (best(&scores), scores)
}

/// Instant runoff. Each round recounts from scratch: a ballot counts for
/// `c` when every candidate it ranks above `c` is already eliminated.
pub fn irv(p: &Profile) -> (String, Vec<BTreeMap<String, u64>>) {
    let mut remaining = candidates(p);
    let mut rounds = Vec::new();
    loop {
        let counts: BTreeMap<String, u64> = remaining
            .iter()
            .map(|c| {
                let n = p
                    .iter()
                    .filter(|b| b.iter().take_while(|x| *x != c).all(|x| !remaining.contains(x)))
                    .count() as u64;
                (c.clone(), n)
            })
            .collect();
        rounds.push(counts.clone());
        if let Some((c, _)) = counts.iter().find(|(_, n)| 2 * **n > p.len() as u64) {
            return (c.clone(), rounds);
        }
        if remaining.len() == 1 {
            return (remaining[0].clone(), rounds);
        }
        let fewest = *counts.values().min().unwrap();
        let loser = counts.iter().filter(|(_, n)| **n == fewest).map(|(c, _)| c.clone()).max().unwrap();
        remaining.retain(|c| *c != loser);
    }
}

/// A random election with 1 to `max_candidates` candidates and 1 to
/// `max_ballots` complete ballots. Labels are drawn from a pool so that
/// their lexicographic order varies between elections.
pub fn random_profile(rng: &mut impl Rng, max_candidates: usize, max_ballots: usize) -> Profile {
    let mut pool: Vec<String> = ["ax", "b", "c7", "d", "e1", "f", "g2", "h"].iter().map(|s| s.to_string()).collect();
    pool.shuffle(rng);
    let m = rng.gen_range(1..=max_candidates);
    let names: Vec<String> = pool.into_iter().take(m).collect();
    let n = rng.gen_range(1..=max_ballots);
    (0..n)
        .map(|_| {
            let mut b = names.clone();
            b.shuffle(rng);
            b
        })
        .collect()
}
