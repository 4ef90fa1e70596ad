//! Budgeted greedy maximization of the feature-based objective.
//!
//! Each step adds the candidate with the largest gain-to-cost ratio among
//! those that still fit in the budget. Ratios within a relative
//! [`TIE_TOLERANCE`] of the best are ties and go to the lower sentence id, so
//! candidates that tie in exact arithmetic are not separated by rounding.
//! Selection stops when nothing fits or the best feasible gain is zero.
//!
//! The lazy variant keeps a max-heap of gain ratios computed at earlier
//! steps. Because gains only shrink as the selection grows, a stale ratio is
//! an upper bound, so a freshly recomputed entry that is still on top of the
//! heap is the true argmax. Both variants produce identical trajectories.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::{CostMode, Corpus};
use crate::error::{Error, Result};
use crate::features::{FeatureSet, FeatureVector};
use crate::objective::{Concave, Objective};

/// Relative width of the band of ratios treated as tied with the best.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Smallest ratio still tied with `best`.
fn tie_floor(best: f64) -> f64 {
    best - TIE_TOLERANCE * best.abs()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Variant {
    Naive,
    #[default]
    Lazy,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Variant::Naive),
            "lazy" => Ok(Variant::Lazy),
            other => Err(Error::Config(format!(
                "unknown greedy variant `{other}` (expected naive or lazy)"
            ))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Naive => "naive",
            Variant::Lazy => "lazy",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// No unselected candidate fits in the remaining budget.
    BudgetExhausted,
    /// The best feasible candidate has zero gain.
    ZeroGain,
    /// Every candidate was selected.
    GroundExhausted,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::BudgetExhausted => "budget-exhausted",
            StopReason::ZeroGain => "zero-gain",
            StopReason::GroundExhausted => "ground-exhausted",
        })
    }
}

/// One greedy iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub id: usize,
    pub gain: f64,
    pub ratio: f64,
    pub cost: f64,
    pub cumulative_cost: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionState {
    selected: Vec<usize>,
    in_selection: Vec<bool>,
    mass: Vec<f64>,
    spent: f64,
    objective: f64,
    budget: f64,
    trajectory: Vec<Step>,
    stop: Option<StopReason>,
    evaluations: u64,
}

impl SelectionState {
    pub fn new(num_features: usize, num_candidates: usize, budget: f64) -> Self {
        SelectionState {
            selected: Vec::new(),
            in_selection: vec![false; num_candidates],
            mass: vec![0.0; num_features],
            spent: 0.0,
            objective: 0.0,
            budget,
            trajectory: Vec::new(),
            stop: None,
            evaluations: 0,
        }
    }

    /// Selected ids in selection order.
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn contains(&self, id: usize) -> bool {
        self.in_selection.get(id).copied().unwrap_or(false)
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Incrementally maintained `f(X)`.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn trajectory(&self) -> &[Step] {
        &self.trajectory
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    /// Number of marginal-gain evaluations performed.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// `f(v | X)` for an unselected candidate.
    pub fn marginal_gain(&self, id: usize, v: &FeatureVector, objective: &Objective) -> Result<f64> {
        if self.contains(id) {
            return Err(Error::Precondition(format!("sentence {id} is already selected")));
        }
        Ok(objective.gain(v, &self.mass))
    }

    /// Add a candidate regardless of budget, updating mass and objective.
    pub fn add(&mut self, id: usize, v: &FeatureVector, cost: f64, objective: &Objective) -> Result<f64> {
        let gain = self.marginal_gain(id, v, objective)?;
        self.push(id, v, cost, gain);
        Ok(gain)
    }

    fn push(&mut self, id: usize, v: &FeatureVector, cost: f64, gain: f64) {
        for &(u, m) in v.entries() {
            self.mass[u as usize] += m;
        }
        self.in_selection[id] = true;
        self.selected.push(id);
        self.spent += cost;
        self.objective += gain;
        self.trajectory.push(Step {
            id,
            gain,
            ratio: gain / cost,
            cost,
            cumulative_cost: self.spent,
            objective: self.objective,
        });
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GreedyConfig {
    pub budget: f64,
    pub variant: Variant,
    /// Worker threads for gain evaluation; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl GreedyConfig {
    pub fn new(budget: f64) -> Self {
        GreedyConfig {
            budget,
            variant: Variant::default(),
            threads: None,
        }
    }

    pub fn variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }
}

/// Candidate scored at some iteration; ordered by ratio, then lower id.
#[derive(Clone, Copy, Debug)]
struct Scored {
    ratio: f64,
    gain: f64,
    id: usize,
    stamp: usize,
}

impl PartialEq for Scored {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scored {}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ratio
            .total_cmp(&other.ratio)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn validate(vectors: &[FeatureVector], costs: &[f64], config: &GreedyConfig) -> Result<()> {
    if !(config.budget > 0.0) || !config.budget.is_finite() {
        return Err(Error::Config(format!(
            "budget must be a positive number, got {}",
            config.budget
        )));
    }
    if vectors.len() != costs.len() {
        return Err(Error::Precondition(format!(
            "{} feature vectors but {} costs",
            vectors.len(),
            costs.len()
        )));
    }
    if let Some(i) = costs.iter().position(|c| !(*c > 0.0) || !c.is_finite()) {
        return Err(Error::Precondition(format!(
            "candidate {i} has non-positive cost {}",
            costs[i]
        )));
    }
    if config.threads == Some(0) {
        return Err(Error::Config("thread count must be at least 1".into()));
    }
    Ok(())
}

/// Run greedy selection over pre-featurized candidates.
pub fn greedy_select(
    objective: &Objective,
    vectors: &[FeatureVector],
    costs: &[f64],
    config: &GreedyConfig,
) -> Result<SelectionState> {
    validate(vectors, costs, config)?;
    let run = || match config.variant {
        Variant::Naive => naive(objective, vectors, costs, config.budget),
        Variant::Lazy => lazy(objective, vectors, costs, config.budget),
    };
    let state = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(run),
        None => run(),
    };
    if state.is_empty() && costs.iter().all(|c| *c > config.budget) {
        log::warn!(
            "budget {} is smaller than every candidate cost; selection is empty",
            config.budget
        );
    }
    Ok(state)
}

/// Featurize `ground` against fitted `features` and run greedy selection.
pub fn greedy_select_corpus(
    ground: &Corpus,
    features: &FeatureSet,
    phi: Concave,
    cost_mode: CostMode,
    config: &GreedyConfig,
) -> Result<SelectionState> {
    check_fitted_on(features, ground)?;
    let vectors = features.featurize_corpus(ground)?;
    let costs: Vec<f64> = ground.iter().map(|s| cost_mode.cost(s)).collect();
    greedy_select(&Objective::new(features, phi), &vectors, &costs, config)
}

pub(crate) fn check_fitted_on(features: &FeatureSet, ground: &Corpus) -> Result<()> {
    match features.ground_size() {
        None => Err(Error::State("feature set has not been fitted".into())),
        Some(n) if n != ground.len() => Err(Error::State(format!(
            "feature set was fitted on {n} sentences but the ground set has {}",
            ground.len()
        ))),
        Some(_) => Ok(()),
    }
}

fn score(objective: &Objective, vectors: &[FeatureVector], costs: &[f64], mass: &[f64], id: usize, stamp: usize) -> Scored {
    let gain = objective.gain(&vectors[id], mass);
    Scored {
        ratio: gain / costs[id],
        gain,
        id,
        stamp,
    }
}

fn finish(state: &mut SelectionState, n: usize, zero_gain: bool) {
    state.stop = Some(if zero_gain {
        StopReason::ZeroGain
    } else if state.selected.len() == n {
        StopReason::GroundExhausted
    } else {
        StopReason::BudgetExhausted
    });
}

fn naive(objective: &Objective, vectors: &[FeatureVector], costs: &[f64], budget: f64) -> SelectionState {
    let n = vectors.len();
    let mut state = SelectionState::new(objective.num_features(), n, budget);
    let mut remaining: Vec<usize> = (0..n).collect();
    loop {
        let spent = state.spent;
        remaining.retain(|&id| !state.in_selection[id] && spent + costs[id] <= budget);
        state.evaluations += remaining.len() as u64;
        let mass = &state.mass;
        let scored: Vec<Scored> = remaining
            .par_iter()
            .map(|&id| score(objective, vectors, costs, mass, id, 0))
            .collect();
        let Some(best) = scored.iter().map(|s| s.ratio).reduce(f64::max) else {
            finish(&mut state, n, false);
            break;
        };
        if best <= 0.0 {
            finish(&mut state, n, true);
            break;
        }
        let floor = tie_floor(best);
        let winner = scored
            .iter()
            .filter(|s| s.ratio >= floor)
            .min_by_key(|s| s.id)
            .expect("the best candidate is in its own band");
        state.push(winner.id, &vectors[winner.id], costs[winner.id], winner.gain);
    }
    state
}

fn lazy(objective: &Objective, vectors: &[FeatureVector], costs: &[f64], budget: f64) -> SelectionState {
    let n = vectors.len();
    let mut state = SelectionState::new(objective.num_features(), n, budget);
    let initial: Vec<Scored> = (0..n)
        .into_par_iter()
        .filter(|&id| costs[id] <= budget)
        .map(|id| score(objective, vectors, costs, &state.mass, id, 0))
        .collect();
    state.evaluations += initial.len() as u64;
    let mut heap = BinaryHeap::from(initial);

    let mut zero_gain = false;
    let mut band: Vec<Scored> = Vec::new();
    loop {
        let iteration = state.selected.len();
        let fits = |s: &Scored, spent: f64| spent + costs[s.id] <= budget;

        // Find the best candidate with an up-to-date ratio.
        let top = loop {
            let Some(top) = heap.pop() else { break None };
            if !fits(&top, state.spent) {
                // Spending only grows, so this candidate never fits again.
                continue;
            }
            if top.stamp == iteration {
                break Some(top);
            }
            state.evaluations += 1;
            heap.push(score(objective, vectors, costs, &state.mass, top.id, iteration));
        };
        let Some(top) = top else { break };
        if top.gain <= 0.0 {
            zero_gain = true;
            break;
        }

        // Everything whose upper bound reaches the tie band may be tied.
        let mut best = top.ratio;
        band.clear();
        band.push(top);
        while let Some(next) = heap.peek() {
            if next.ratio < tie_floor(best) {
                break;
            }
            let next = heap.pop().expect("peeked");
            if !fits(&next, state.spent) {
                continue;
            }
            let fresh = if next.stamp == iteration {
                next
            } else {
                state.evaluations += 1;
                score(objective, vectors, costs, &state.mass, next.id, iteration)
            };
            best = best.max(fresh.ratio);
            band.push(fresh);
        }
        let floor = tie_floor(best);
        let winner = band
            .iter()
            .filter(|s| s.ratio >= floor)
            .min_by_key(|s| s.id)
            .copied()
            .expect("the best candidate is in its own band");
        for s in band.drain(..) {
            if s.id != winner.id {
                heap.push(s);
            }
        }
        state.push(winner.id, &vectors[winner.id], costs[winner.id], winner.gain);
    }
    finish(&mut state, n, zero_gain);
    state
}
