mod support;

use std::fs;

use support::{moralscope, prepared_workdir, stderr, stdout, synthetic_mfrc};

#[test]
fn prepare_writes_corpora_and_grid() {
    let dir = prepared_workdir(40, 1);
    let out = dir.path().join("out/prepared");
    for f in [
        "A.jsonl",
        "B.jsonl",
        "C.jsonl",
        "distribution.tsv",
        "discards.tsv",
        "distribution_delta.tsv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let tsv = fs::read_to_string(out.join("distribution.tsv")).unwrap();
    assert!(tsv.starts_with("label\tA\tB\tC\nNon-moral\t"));
}

#[test]
fn missing_raw_file_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = moralscope(dir.path(), &["prepare", "--raw", "nope.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.csv"));
}

#[test]
fn unmapped_confidence_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let raw = synthetic_mfrc(3, 2).replacen("Confident\n", "Very Sure\n", 1);
    fs::write(dir.path().join("raw.csv"), raw).unwrap();
    let o = moralscope(dir.path(), &["prepare", "--raw", "raw.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Very Sure"), "{}", stderr(&o));
}

#[test]
fn gold_as_predictions_scores_one() {
    let dir = prepared_workdir(30, 3);
    let o = moralscope(
        dir.path(),
        &[
            "evaluate",
            "--predictions",
            "out/prepared/B.jsonl",
            "--gold",
            "out/prepared/B.jsonl",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("out/reports/B.metrics.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["weighted"]["f1"], 1.0);
}

#[test]
fn disjoint_ids_fail_alignment() {
    let dir = prepared_workdir(30, 4);
    let o = moralscope(
        dir.path(),
        &[
            "evaluate",
            "--predictions",
            "out/prepared/A.jsonl",
            "--gold",
            "out/prepared/B.jsonl",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no gold item"), "{}", stderr(&o));
}

#[test]
fn llm_replay_writes_predictions_and_audit() {
    let dir = prepared_workdir(20, 5);
    let items = fs::read_to_string(dir.path().join("out/prepared/A.jsonl")).unwrap();
    let mut audit = String::new();
    for (i, line) in items.lines().enumerate() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let prompt = moralscope_core::llm::build_prompt(v["text"].as_str().unwrap()).unwrap();
        let completion = match i % 3 {
            0 => "Moral. Care/Harm",
            1 => "not moral",
            _ => "I cannot say.",
        };
        audit.push_str(&format!(
            "{{\"item_id\":\"x\",\"attempt\":0,\"prompt_sha256\":\"{}\",\"completion\":\"{completion}\",\"outcome\":\"labeled\"}}\n",
            moralscope_core::llm::prompt_hash(&prompt)
        ));
    }
    fs::write(dir.path().join("recorded.jsonl"), audit).unwrap();
    let cfg = "[llm]\nbackoff_base_ms = 0\nmax_retries = 1\n";
    fs::write(dir.path().join("run.toml"), cfg).unwrap();
    let o = moralscope(
        dir.path(),
        &[
            "--config",
            "run.toml",
            "classify",
            "--backend",
            "llm",
            "--corpus",
            "out/prepared/A.jsonl",
            "--client",
            "replay:recorded.jsonl",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let preds = fs::read_to_string(dir.path().join("out/predictions/llm_A.jsonl")).unwrap();
    assert_eq!(preds.lines().count(), items.lines().count());
    assert!(preds.contains("\"status\":\"unparsed\""));
    let audit = fs::read_to_string(dir.path().join("out/predictions/llm_A.audit.jsonl")).unwrap();
    // Unparsed items are retried once.
    assert!(audit.lines().count() > items.lines().count());
    assert!(audit.contains("parse_error"));
}

#[test]
fn supervised_refuses_in_domain() {
    let dir = prepared_workdir(60, 6);
    let o = moralscope(
        dir.path(),
        &[
            "train",
            "--train-corpus",
            "A",
            "--epochs",
            "1",
            "--encoder",
            "hashing:256",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let model = "out/models/A-classifier";
    for f in ["params.bin", "config.toml", "training_log.tsv"] {
        assert!(dir.path().join(model).join(f).exists());
    }
    let base = [
        "classify",
        "--backend",
        "supervised",
        "--artifact",
        model,
        "--corpus",
    ];
    let o = moralscope(dir.path(), &[&base[..], &["out/prepared/A.jsonl"]].concat());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--allow-in-domain"));
    let o = moralscope(
        dir.path(),
        &[&base[..], &["out/prepared/A.jsonl", "--allow-in-domain"]].concat(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = moralscope(dir.path(), &[&base[..], &["out/prepared/B.jsonl"]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir
        .path()
        .join("out/predictions/A-classifier_B.jsonl")
        .exists());

    // Retraining into the same directory is refused.
    let o = moralscope(
        dir.path(),
        &[
            "train",
            "--train-corpus",
            "A",
            "--epochs",
            "1",
            "--encoder",
            "hashing:256",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_with_no_runs_is_a_notice() {
    let dir = tempfile::tempdir().unwrap();
    let o = moralscope(dir.path(), &["report"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("no evaluation reports"));
}

#[test]
fn full_pipeline_produces_seven_tables() {
    let dir = prepared_workdir(50, 7);
    let run = |args: &[&str]| {
        let o = moralscope(dir.path(), args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    };
    for c in ["A", "B", "C"] {
        let corpus = format!("out/prepared/{c}.jsonl");
        run(&["classify", "--backend", "nli", "--corpus", &corpus]);
        run(&[
            "evaluate",
            "--predictions",
            &format!("out/predictions/nli_{c}.jsonl"),
            "--gold",
            &corpus,
        ]);
    }
    run(&[
        "train",
        "--train-corpus",
        "A",
        "--epochs",
        "2",
        "--encoder",
        "hashing:512",
        "--learning-rate",
        "0.001",
    ]);
    for c in ["B", "C"] {
        let corpus = format!("out/prepared/{c}.jsonl");
        run(&[
            "classify",
            "--backend",
            "supervised",
            "--artifact",
            "out/models/A-classifier",
            "--corpus",
            &corpus,
        ]);
        run(&[
            "evaluate",
            "--predictions",
            &format!("out/predictions/A-classifier_{c}.jsonl"),
            "--gold",
            &corpus,
        ]);
    }
    run(&["report"]);
    let tables = dir.path().join("out/tables");
    let tsv: Vec<_> = fs::read_dir(&tables)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "tsv"))
        .collect();
    assert_eq!(tsv.len(), 7);
    let overall = fs::read_to_string(tables.join("overall.tsv")).unwrap();
    assert!(overall.contains("A-classifier\tF1\t-\t"), "{overall}");
    let summary = fs::read_to_string(tables.join("summary.jsonl")).unwrap();
    assert_eq!(summary.lines().count(), 5 * 7);
}

#[test]
fn bad_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "bogus = 1\n").unwrap();
    let o = moralscope(dir.path(), &["--config", "run.toml", "report"]);
    assert_eq!(o.status.code(), Some(2));
}
