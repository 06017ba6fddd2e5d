use super::*;
use rand::Rng;

const CUES: [&[&str]; 5] = [
    &["care", "protect", "hurt", "kind"],
    &["fair", "cheat", "equal", "rights"],
    &["loyal", "betray", "family", "team"],
    &["law", "obey", "police", "rebel"],
    &["sacred", "disgust", "pure", "filth"],
];
const FILLER: [&str; 8] = [
    "the", "game", "today", "weather", "lunch", "city", "phone", "music",
];

fn synthetic(n: usize, seed: u64, corpus: SubCorpus) -> Vec<GoldItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut words: Vec<&str> = (0..6).map(|_| FILLER[rng.random_range(0..8)]).collect();
            let mut gold = LabelVector::empty();
            if rng.random_bool(0.5) {
                let d = rng.random_range(0..5);
                words.push(CUES[d][rng.random_range(0..4)]);
                gold.insert(MoralDimension::from_index(d).unwrap());
            } else {
                gold = LabelVector::non_moral();
            }
            GoldItem {
                id: format!("{}{i:05}", corpus.tag()),
                text: words.join(" "),
                subcorpus: corpus,
                gold,
                annotator_count: 3,
            }
        })
        .collect()
}

fn small_config() -> ClassifierConfig {
    ClassifierConfig {
        encoder: "hashing:256".into(),
        epochs: 1,
        seed: 11,
        ..Default::default()
    }
}

#[test]
fn defaults_follow_training_recipe() {
    let c = ClassifierConfig::default();
    assert_eq!(
        (c.learning_rate, c.batch_size, c.dropout, c.epochs),
        (1e-5, 64, 0.1, 5)
    );
    assert!(!c.class_weights);
    assert_eq!(c.validation_fraction, 0.0);
}

#[test]
fn invalid_configs_rejected() {
    for c in [
        ClassifierConfig {
            learning_rate: 0.0,
            ..Default::default()
        },
        ClassifierConfig {
            dropout: 1.0,
            ..Default::default()
        },
        ClassifierConfig {
            batch_size: 0,
            ..Default::default()
        },
    ] {
        assert!(matches!(
            build_classifier(&c),
            Err(SupervisedError::InvalidConfig(_))
        ));
    }
    let c = ClassifierConfig {
        encoder: "roberta-large".into(),
        ..Default::default()
    };
    assert!(matches!(
        build_classifier(&c),
        Err(SupervisedError::UnresolvableEncoder(_))
    ));
}

#[test]
fn output_has_six_probabilities() {
    let m = build_classifier(&small_config()).unwrap();
    let p = m.probabilities("a perfectly ordinary sentence");
    assert_eq!(p.len(), 6);
    assert!(p.iter().all(|x| *x > 0.0 && *x < 1.0));
}

#[test]
fn same_seed_same_init() {
    let a = build_classifier(&small_config()).unwrap();
    let b = build_classifier(&small_config()).unwrap();
    assert_eq!(a.head, b.head);
    let c = build_classifier(&ClassifierConfig {
        seed: 12,
        ..small_config()
    })
    .unwrap();
    assert_ne!(a.head, c.head);
}

#[test]
fn inference_is_deterministic() {
    let items = synthetic(100, 1, SubCorpus::A);
    let art = train(build_classifier(&small_config()).unwrap(), &items).unwrap();
    let first = art.predict_items(&items);
    assert_eq!(first, art.predict_items(&items));
}

#[test]
fn decision_rule_examples() {
    let care = decide(&[0.9, 0.1, 0.1, 0.1, 0.1, 0.05]);
    assert_eq!(
        care,
        LabelVector::from_dimensions([MoralDimension::CareHarm])
    );
    assert_eq!(decide(&[0.49; 6]), LabelVector::non_moral());
    assert_eq!(
        decide(&[0.7, 0.1, 0.1, 0.1, 0.1, 0.8]),
        LabelVector::from_dimensions([MoralDimension::CareHarm])
    );
    assert_eq!(decide(&[0.5, 0.0, 0.0, 0.0, 0.0, 0.0]).count(), 1);
}

#[test]
fn empty_and_mixed_training_sets_fail() {
    let m = build_classifier(&small_config()).unwrap();
    assert!(matches!(
        train(m.clone(), &[]),
        Err(SupervisedError::EmptyTrainingSet)
    ));
    let mut items = synthetic(4, 2, SubCorpus::A);
    items[3].subcorpus = SubCorpus::B;
    assert!(matches!(
        train(m, &items),
        Err(SupervisedError::MixedCorpora { .. })
    ));
}

#[test]
fn non_finite_loss_aborts() {
    let cfg = ClassifierConfig {
        learning_rate: 1e300,
        epochs: 3,
        dropout: 0.0,
        ..small_config()
    };
    let err = train(
        build_classifier(&cfg).unwrap(),
        &synthetic(64, 3, SubCorpus::A),
    )
    .unwrap_err();
    assert!(
        matches!(err, SupervisedError::NonFiniteLoss { .. }),
        "{err}"
    );
}

#[test]
fn memorizes_single_item() {
    let cfg = ClassifierConfig {
        learning_rate: 0.05,
        epochs: 400,
        dropout: 0.0,
        weight_decay: 0.0,
        ..small_config()
    };
    let items = synthetic(1, 4, SubCorpus::B);
    let art = train(build_classifier(&cfg).unwrap(), &items).unwrap();
    let losses = art.log.epoch_losses();
    assert!(losses[0] > 0.6);
    assert!(*losses.last().unwrap() < 0.01, "{:?}", losses.last());
    assert_eq!(art.predict(&items[0].text).labels, items[0].gold);
}

#[test]
fn identical_runs_identical_traces() {
    let items = synthetic(300, 5, SubCorpus::C);
    let cfg = ClassifierConfig {
        epochs: 2,
        ..small_config()
    };
    let a = train(build_classifier(&cfg).unwrap(), &items).unwrap();
    let b = train(build_classifier(&cfg).unwrap(), &items).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.classifier.head, b.classifier.head);
    assert_eq!(a.log.epochs.len(), 2);
    assert_eq!(a.log.batch_losses(1).len(), 5);
}

#[test]
fn validation_fraction_reports_loss() {
    let cfg = ClassifierConfig {
        validation_fraction: 0.2,
        ..small_config()
    };
    let art = train(
        build_classifier(&cfg).unwrap(),
        &synthetic(100, 6, SubCorpus::A),
    )
    .unwrap();
    assert!(art.log.epochs[0].validation_loss.is_some());
    assert_eq!(art.log.batch_losses(1).len(), 2);
}

#[test]
fn artifact_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model");
    let cfg = ClassifierConfig {
        validation_fraction: 0.1,
        ..small_config()
    };
    let items = synthetic(80, 7, SubCorpus::B);
    let art = train(build_classifier(&cfg).unwrap(), &items).unwrap();
    art.save(&path).unwrap();
    assert!(matches!(
        art.save(&path),
        Err(SupervisedError::ArtifactExists(_))
    ));
    let back = ModelArtifact::load(&path).unwrap();
    assert_eq!(back.train_corpus, SubCorpus::B);
    assert_eq!(back.log, art.log);
    assert_eq!(back.classifier.head, art.classifier.head);
    assert_eq!(back.classifier.config, art.classifier.config);
    assert_eq!(back.predict_items(&items), art.predict_items(&items));

    let wrong = ModelArtifact::load_with(&path, |_| resolve_encoder("hashing:128"));
    assert!(matches!(
        wrong,
        Err(SupervisedError::HiddenSizeMismatch { .. })
    ));

    let params = path.join("params.bin");
    let mut bytes = std::fs::read(&params).unwrap();
    bytes.truncate(bytes.len() - 8);
    std::fs::write(&params, bytes).unwrap();
    assert!(matches!(
        ModelArtifact::load(&path),
        Err(SupervisedError::ArtifactMismatch(_))
    ));
}

#[test]
fn cross_domain_skips_training_corpus() {
    let mut corpora = [
        synthetic(120, 8, SubCorpus::A),
        synthetic(90, 9, SubCorpus::B),
        synthetic(90, 10, SubCorpus::C),
    ];
    // One text shared with training under the same id.
    corpora[2][0].id = corpora[1][0].id.clone();
    let run = cross_domain_run(SubCorpus::B, &corpora, &small_config()).unwrap();
    let evals: Vec<SubCorpus> = run.evaluations.iter().map(|e| e.eval_corpus).collect();
    assert_eq!(evals, [SubCorpus::A, SubCorpus::C]);
    assert_eq!(run.evaluations[0].report.item_count, 120);
    assert_eq!(run.evaluations[1].excluded_overlap, 1);
    assert_eq!(run.evaluations[1].report.item_count, 89);
    assert_eq!(run.evaluations[1].report.train_corpus, Some(SubCorpus::B));

    let ids = HashSet::new();
    let err = evaluate_cross_domain(&run.artifact, &ids, &corpora[1], SubCorpus::B);
    assert!(matches!(err, Err(SupervisedError::InDomain(SubCorpus::B))));
}

#[test]
fn predictions_respect_exclusivity() {
    let cfg = ClassifierConfig {
        learning_rate: 0.01,
        epochs: 3,
        ..small_config()
    };
    let items = synthetic(400, 12, SubCorpus::A);
    let art = train(build_classifier(&cfg).unwrap(), &items).unwrap();
    for r in art.predict_items(&items) {
        assert!(r.labels.is_well_formed());
        match r.scores {
            Some(LabelScores::PerDimension(s)) => assert_eq!(s.len(), 6),
            other => panic!("unexpected scores {other:?}"),
        }
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn decide_is_well_formed(probs in proptest::array::uniform6(0.0f64..1.0)) {
            let l = decide(&probs);
            prop_assert!(l.is_well_formed());
            for d in MoralDimension::ALL.iter().filter(|d| d.is_moral()) {
                prop_assert_eq!(l.contains(*d), probs[d.index()] >= THRESHOLD);
            }
        }
    }
}
