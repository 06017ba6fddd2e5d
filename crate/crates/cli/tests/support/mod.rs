//! Test helpers: a synthetic raw corpus in the MFRC release layout and a
//! runner for the `moralscope` binary.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BUCKETS: [&str; 3] = ["Everyday Morality", "US Politics", "French politics"];

/// Raw label names per dyad, value first.
const RAW_LABELS: [[&str; 2]; 5] = [
    ["Care", "Harm"],
    ["Equality", "Cheating"],
    ["Loyalty", "Betrayal"],
    ["Authority", "Subversion"],
    ["Purity", "Degradation"],
];

const CUES: [&[&str]; 5] = [
    &["care", "protect", "hurt", "cruel"],
    &["fair", "equal", "cheat", "fraud"],
    &["loyal", "family", "betray", "traitor"],
    &["law", "obey", "rebel", "riot"],
    &["sacred", "pure", "disgust", "filth"],
];

const FILLER: [&str; 12] = [
    "the", "game", "today", "weather", "lunch", "city", "phone", "music", "train", "coffee",
    "movie", "garden",
];

fn escape(field: &str) -> String {
    format!("\"{}\"", field.replace('"', "\"\""))
}

/// Builds a CSV with `per_bucket` comments per bucket. Annotators mostly
/// agree with a latent label; a few are uncertain or disagree.
pub fn synthetic_mfrc(per_bucket: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("text,subreddit,bucket,annotator,annotation,confidence\n");
    for bucket in BUCKETS {
        for i in 0..per_bucket {
            let moral = rng.random_bool(0.45);
            let dyad = rng.random_range(0..5);
            let mut words: Vec<&str> = (0..7)
                .map(|_| FILLER[rng.random_range(0..FILLER.len())])
                .collect();
            if moral {
                words.insert(
                    rng.random_range(0..words.len()),
                    CUES[dyad][rng.random_range(0..4)],
                );
            }
            let text = format!("{} {bucket} {i}", words.join(" "));
            let annotators = rng.random_range(2..=5);
            for a in 0..annotators {
                let label = if moral && rng.random_bool(0.8) || !moral && rng.random_bool(0.1) {
                    RAW_LABELS[dyad][rng.random_range(0..2)].to_string()
                } else if rng.random_bool(0.05) {
                    "Thin Morality".to_string()
                } else {
                    "Non-Moral".to_string()
                };
                let confidence = if rng.random_bool(0.85) {
                    "Confident"
                } else {
                    "Somewhat Confident"
                };
                out.push_str(&format!(
                    "{},r/test,{bucket},annotator{a:02},{},{confidence}\n",
                    escape(&text),
                    escape(&label)
                ));
            }
        }
    }
    out
}

pub fn moralscope(workdir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moralscope"))
        .arg("--workdir")
        .arg(workdir)
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("failed to run moralscope")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes a synthetic corpus into `workdir/raw.csv` and runs `prepare`.
pub fn prepared_workdir(per_bucket: usize, seed: u64) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("raw.csv"), synthetic_mfrc(per_bucket, seed)).unwrap();
    let o = moralscope(dir.path(), &["prepare", "--raw", "raw.csv"]);
    assert!(o.status.success(), "prepare failed: {}", stderr(&o));
    dir
}
