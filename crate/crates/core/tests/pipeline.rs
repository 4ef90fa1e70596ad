//! File-level round trips and the end-to-end library pipeline.

use std::fs;

use subsel_core::greedy::{greedy_select_corpus, GreedyConfig};
use subsel_core::lm::{train_pair, LmConfig, NgramLanguageModel};
use subsel_core::xent::{rank_and_select, score_corpus, Limit};
use subsel_core::{load_corpus, Concave, CostMode, FeatureSet, Tokenizer, WeightScheme};

#[test]
fn files_to_selection() {
    let dir = tempfile::tempdir().unwrap();
    let ind = dir.path().join("in.src");
    let src = dir.path().join("ground.src");
    let tgt = dir.path().join("ground.tgt");
    fs::write(&ind, "Where is the clinic\nthe clinic is closed\n").unwrap();
    fs::write(&src, "where is the clinic\r\n\r\nstocks fell sharply\r\nthe clinic is open\r\n").unwrap();
    fs::write(&tgt, "x1\n\nx2\nx3\n").unwrap();

    let (in_domain, _) = load_corpus(&ind, None, Tokenizer::LowercaseWhitespace).unwrap();
    let (ground, stats) = load_corpus(&src, Some(&tgt), Tokenizer::LowercaseWhitespace).unwrap();
    assert_eq!(stats.skipped_blank, 1);
    assert!(ground.is_parallel());

    let features = FeatureSet::extract(&in_domain, 7, WeightScheme::Uniform)
        .unwrap()
        .fit_idf(&ground)
        .unwrap();
    let path = dir.path().join("features.tsv");
    features.save(&path).unwrap();
    let loaded = FeatureSet::load(&path).unwrap();
    assert_eq!(loaded, features);

    let state = greedy_select_corpus(&ground, &loaded, Concave::default(), CostMode::Words, &GreedyConfig::new(8.0))
        .unwrap();
    assert!(state.spent() <= 8.0);
    assert!(!state.selected().contains(&1), "off-domain sentence has no features");

    let (lm_in, lm_out) = train_pair(&in_domain, &ground, LmConfig::default()).unwrap();
    let lm_path = dir.path().join("in.lm");
    lm_in.save(&lm_path).unwrap();
    assert_eq!(NgramLanguageModel::load(&lm_path).unwrap(), lm_in);
    let scores = score_corpus(&ground, &lm_in, &lm_out).unwrap();
    let top = rank_and_select(&ground, &scores, Limit::TopN(1)).unwrap();
    assert_ne!(top.ids(), vec![1]);
}

#[test]
fn features_fitted_elsewhere_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    fs::write(&a, "a b\nb c\n").unwrap();
    let (c, _) = load_corpus(&a, None, Tokenizer::Whitespace).unwrap();
    let (one, _) = subsel_core::Corpus::parse("a", None, Tokenizer::Whitespace).unwrap();
    let fs = FeatureSet::extract(&c, 2, WeightScheme::Uniform).unwrap().fit_idf(&one).unwrap();
    let err = greedy_select_corpus(&c, &fs, Concave::default(), CostMode::Unit, &GreedyConfig::new(1.0)).unwrap_err();
    assert!(matches!(err, subsel_core::Error::State(_)));
}
