//! Budgeted selection of training sentences that match an in-domain sample.
//!
//! Two selectors are provided:
//!
//! * [`greedy`]: greedy maximization of a feature-based submodular objective
//!   over tf-idf weighted n-gram features, under a knapsack budget.
//! * [`xent`]: the cross-entropy-difference ranking baseline built on the
//!   n-gram language models in [`lm`].
//!
//! [`oracle`] holds a brute-force optimum for small instances along with
//! coverage and redundancy metrics used to compare the two.

// `!(x > 0.0)` is used on purpose so that NaN is rejected along with zero.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod error;
pub mod features;
pub mod greedy;
pub mod lm;
pub mod objective;
pub mod oracle;
pub mod report;
pub mod synth;
pub mod output;
pub mod xent;

pub use corpus::{load_corpus, tokenize, CostMode, Corpus, LoadStats, Sentence, Tokenizer};
pub use error::{Error, Result};
pub use features::{extract_feature_set, FeatureId, FeatureInfo, FeatureSet, FeatureVector, WeightScheme};
pub use greedy::{greedy_select, greedy_select_corpus, GreedyConfig, SelectionState, Step, StopReason, Variant};
pub use lm::{LmConfig, NgramLanguageModel, Smoothing, Vocabulary};
pub use objective::{Concave, Objective};
pub use xent::{rank_and_select, xent_score, Limit, ScoredSentence, XentSelection};
pub use oracle::{brute_force_optimal, coverage_report, CoverageMetrics, OptimalSet};
pub use report::{compare_methods, CompareConfig, ComparisonReport, MethodReport};
