//! Exhaustive optimum for small instances, and intrinsic selection metrics.

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;

use crate::corpus::{CostMode, Corpus};
use crate::error::{Error, Result};
use crate::features::{ngrams, FeatureSet, FeatureVector};
use crate::greedy::check_fitted_on;
use crate::objective::{Concave, Objective};

/// Largest ground set the exhaustive search accepts.
pub const ORACLE_CAP: usize = 20;

/// Number of leading elements whose include/exclude choices are fanned out
/// to worker threads.
const PREFIX_BITS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalSet {
    /// Sorted ids.
    pub ids: Vec<usize>,
    pub value: f64,
    pub cost: f64,
}

impl OptimalSet {
    fn empty() -> Self {
        OptimalSet {
            ids: Vec::new(),
            value: 0.0,
            cost: 0.0,
        }
    }

    fn better_than(&self, other: &OptimalSet) -> bool {
        beats(self.value, &self.ids, other)
    }
}

/// Higher value wins; near-equal values prefer fewer elements, then the
/// lexicographically smaller id list.
fn beats(value: f64, ids: &[usize], other: &OptimalSet) -> bool {
    let tol = 1e-12 * value.abs().max(other.value.abs()).max(1.0);
    if (value - other.value).abs() > tol {
        return value > other.value;
    }
    match ids.len().cmp(&other.ids.len()) {
        Ordering::Equal => ids < other.ids.as_slice(),
        ord => ord == Ordering::Less,
    }
}

struct Search<'a> {
    objective: &'a Objective,
    vectors: &'a [FeatureVector],
    costs: &'a [f64],
    budget: f64,
    mass: Vec<f64>,
    chosen: Vec<usize>,
    best: OptimalSet,
}

impl Search<'_> {
    fn visit(&mut self, next: usize, value: f64, cost: f64) {
        if next == self.vectors.len() {
            if beats(value, &self.chosen, &self.best) {
                self.best = OptimalSet {
                    ids: self.chosen.clone(),
                    value,
                    cost,
                };
            }
            return;
        }
        self.visit(next + 1, value, cost);
        let c = self.costs[next];
        if cost + c <= self.budget {
            let v = &self.vectors[next];
            let gain = self.objective.gain(v, &self.mass);
            let saved: Vec<f64> = v.entries().iter().map(|&(u, _)| self.mass[u as usize]).collect();
            for &(u, m) in v.entries() {
                self.mass[u as usize] += m;
            }
            self.chosen.push(next);
            self.visit(next + 1, value + gain, cost + c);
            self.chosen.pop();
            for (&(u, _), old) in v.entries().iter().zip(saved) {
                self.mass[u as usize] = old;
            }
        }
    }
}

/// Maximize the objective over every subset whose total cost fits `budget`.
pub fn brute_force_optimal(
    objective: &Objective,
    vectors: &[FeatureVector],
    costs: &[f64],
    budget: f64,
) -> Result<OptimalSet> {
    let n = vectors.len();
    if n > ORACLE_CAP {
        return Err(Error::SizeCap {
            size: n,
            cap: ORACLE_CAP,
        });
    }
    if costs.len() != n {
        return Err(Error::Precondition(format!("{n} feature vectors but {} costs", costs.len())));
    }
    if !(budget > 0.0) {
        return Ok(OptimalSet::empty());
    }
    let bits = PREFIX_BITS.min(n);
    let best = (0u32..1 << bits)
        .into_par_iter()
        .filter_map(|prefix| {
            let mut search = Search {
                objective,
                vectors,
                costs,
                budget,
                mass: vec![0.0; objective.num_features()],
                chosen: Vec::new(),
                best: OptimalSet::empty(),
            };
            let (mut value, mut cost) = (0.0, 0.0);
            for i in 0..bits {
                if prefix & (1 << i) != 0 {
                    cost += costs[i];
                    if cost > budget {
                        return None;
                    }
                    value += objective.gain(&vectors[i], &search.mass);
                    for &(u, m) in vectors[i].entries() {
                        search.mass[u as usize] += m;
                    }
                    search.chosen.push(i);
                }
            }
            search.visit(bits, value, cost);
            Some(search.best)
        })
        .reduce(OptimalSet::empty, |a, b| if b.better_than(&a) { b } else { a });
    Ok(best)
}

/// Corpus-level wrapper around [`brute_force_optimal`].
pub fn brute_force_optimal_corpus(
    ground: &Corpus,
    features: &FeatureSet,
    phi: Concave,
    budget: f64,
    cost_mode: CostMode,
) -> Result<OptimalSet> {
    if ground.len() > ORACLE_CAP {
        return Err(Error::SizeCap {
            size: ground.len(),
            cap: ORACLE_CAP,
        });
    }
    check_fitted_on(features, ground)?;
    let vectors = features.featurize_corpus(ground)?;
    let costs: Vec<f64> = ground.iter().map(|s| cost_mode.cost(s)).collect();
    brute_force_optimal(&Objective::new(features, phi), &vectors, &costs, budget)
}

/// Feature coverage and n-gram redundancy of a selection.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CoverageMetrics {
    /// Features occurring in the selection over features occurring anywhere in
    /// the ground set.
    pub coverage: f64,
    /// Distinct n-gram types over n-gram tokens (orders `1..=max_order`) in
    /// the selection; 0 for an empty selection.
    pub type_token_ratio: f64,
    /// `1 − type_token_ratio` for a non-empty selection; 0 otherwise.
    pub redundancy: f64,
    pub covered_features: usize,
    pub coverable_features: usize,
    pub ngram_types: usize,
    pub ngram_tokens: usize,
}

pub fn coverage_report(ground: &Corpus, selected: &[usize], features: &FeatureSet) -> Result<CoverageMetrics> {
    let mut covered = vec![false; features.len()];
    let mut types: HashSet<&[String]> = HashSet::new();
    let mut tokens = 0usize;
    for &id in selected {
        let s = ground
            .get(id)
            .ok_or_else(|| Error::Precondition(format!("selected id {id} is not in the ground set")))?;
        for gram in ngrams(&s.source, features.max_order()) {
            tokens += 1;
            types.insert(gram);
            if let Some(f) = features.id_of(gram) {
                covered[f as usize] = true;
            }
        }
    }
    let coverable = features.coverable();
    let covered_features = covered
        .iter()
        .enumerate()
        .filter(|(f, c)| **c && features.info(*f as u32).doc_freq > 0)
        .count();
    let type_token_ratio = if tokens == 0 {
        0.0
    } else {
        types.len() as f64 / tokens as f64
    };
    Ok(CoverageMetrics {
        coverage: if coverable == 0 {
            0.0
        } else {
            covered_features as f64 / coverable as f64
        },
        type_token_ratio,
        redundancy: if tokens == 0 { 0.0 } else { 1.0 - type_token_ratio },
        covered_features,
        coverable_features: coverable,
        ngram_types: types.len(),
        ngram_tokens: tokens,
    })
}
