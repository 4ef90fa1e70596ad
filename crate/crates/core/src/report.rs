//! Side-by-side comparison of the submodular and cross-entropy selectors.

use std::io::Write;

use crate::corpus::{CostMode, Corpus};
use crate::error::{Error, Result};
use crate::features::{FeatureSet, FeatureVector, WeightScheme};
use crate::greedy::{greedy_select, GreedyConfig, SelectionState, Variant};
use crate::lm::{train_pair, LmConfig};
use crate::objective::{Concave, Objective};
use crate::oracle::{brute_force_optimal, coverage_report, CoverageMetrics, ORACLE_CAP};
use crate::xent::{rank_and_select, score_corpus, Limit, XentSelection};

#[derive(Clone, Debug)]
pub struct CompareConfig {
    pub max_order: usize,
    pub weights: WeightScheme,
    pub phi: Concave,
    pub budget: f64,
    pub cost_mode: CostMode,
    pub variant: Variant,
    pub threads: Option<usize>,
    pub lm: LmConfig,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            max_order: 7,
            weights: WeightScheme::Uniform,
            phi: Concave::default(),
            budget: 100_000.0,
            cost_mode: CostMode::Words,
            variant: Variant::Lazy,
            threads: None,
            lm: LmConfig::default(),
        }
    }
}

impl CompareConfig {
    /// The ranking cut that matches this budget: top-N sentences in unit-cost
    /// mode, a source-word prefix otherwise.
    pub fn xent_limit(&self) -> Limit {
        match self.cost_mode {
            CostMode::Unit => Limit::TopN(self.budget.floor() as usize),
            CostMode::Words => Limit::WordBudget(self.budget),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodReport {
    pub method: String,
    /// Submodular objective of the selection, whichever method produced it.
    pub objective: f64,
    pub spent: f64,
    pub size: usize,
    pub metrics: CoverageMetrics,
}

impl MethodReport {
    /// Score an arbitrary selection against the shared objective.
    pub fn measure(
        method: &str,
        ground: &Corpus,
        ids: &[usize],
        features: &FeatureSet,
        objective: &Objective,
        vectors: &[FeatureVector],
        cost_mode: CostMode,
    ) -> Result<Self> {
        let mut spent = 0.0;
        for &id in ids {
            let s = ground
                .get(id)
                .ok_or_else(|| Error::Precondition(format!("selected id {id} is not in the ground set")))?;
            spent += cost_mode.cost(s);
        }
        Ok(MethodReport {
            method: method.to_string(),
            objective: objective.evaluate(ids.iter().map(|&i| &vectors[i])),
            spent,
            size: ids.len(),
            metrics: coverage_report(ground, ids, features)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleSummary {
    pub optimal_objective: f64,
    pub optimal_size: usize,
    /// Greedy objective over the optimum; 1 when the optimum is 0.
    pub greedy_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub ground_size: usize,
    pub budget: f64,
    pub cost_mode: CostMode,
    pub methods: Vec<MethodReport>,
    pub oracle: Option<OracleSummary>,
}

pub const CSV_HEADER: &str =
    "method,objective,spent,size,coverage,type_token_ratio,redundancy,covered_features,coverable_features,ngram_types,ngram_tokens";

impl ComparisonReport {
    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }

    /// Flat `key=value` form, keys prefixed by method name.
    pub fn write_key_values<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "ground_size={}", self.ground_size)?;
        writeln!(w, "budget={}", self.budget)?;
        writeln!(w, "cost_mode={}", self.cost_mode)?;
        for m in &self.methods {
            let p = &m.method;
            let x = &m.metrics;
            writeln!(w, "{p}.objective={}", m.objective)?;
            writeln!(w, "{p}.spent={}", m.spent)?;
            writeln!(w, "{p}.size={}", m.size)?;
            writeln!(w, "{p}.coverage={}", x.coverage)?;
            writeln!(w, "{p}.type_token_ratio={}", x.type_token_ratio)?;
            writeln!(w, "{p}.redundancy={}", x.redundancy)?;
            writeln!(w, "{p}.covered_features={}", x.covered_features)?;
            writeln!(w, "{p}.coverable_features={}", x.coverable_features)?;
        }
        if let Some(o) = &self.oracle {
            writeln!(w, "oracle.objective={}", o.optimal_objective)?;
            writeln!(w, "oracle.size={}", o.optimal_size)?;
            writeln!(w, "oracle.greedy_ratio={}", o.greedy_ratio)?;
        }
        w.flush()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for m in &self.methods {
            let x = &m.metrics;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                m.method,
                m.objective,
                m.spent,
                m.size,
                x.coverage,
                x.type_token_ratio,
                x.redundancy,
                x.covered_features,
                x.coverable_features,
                x.ngram_types,
                x.ngram_tokens
            )?;
        }
        w.flush()
    }

    /// Aligned table for terminals.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<8} {:>12} {:>10} {:>6} {:>9} {:>10}\n",
            "method", "objective", "spent", "size", "coverage", "redundancy"
        );
        for m in &self.methods {
            out.push_str(&format!(
                "{:<8} {:>12.4} {:>10} {:>6} {:>9.4} {:>10.4}\n",
                m.method, m.objective, m.spent, m.size, m.metrics.coverage, m.metrics.redundancy
            ));
        }
        if let Some(o) = &self.oracle {
            out.push_str(&format!(
                "oracle optimum {:.4} ({} sentences), greedy/optimal {:.4}\n",
                o.optimal_objective, o.optimal_size, o.greedy_ratio
            ));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub features: FeatureSet,
    pub submod: SelectionState,
    pub xent: XentSelection,
    pub report: ComparisonReport,
}

impl ComparisonReport {
    /// Measure named selections over one ground set. When the ground set is
    /// small enough the exhaustive optimum is added, with the greedy ratio
    /// taken from the `submod` entry (or the first entry if there is none).
    pub fn build(
        ground: &Corpus,
        features: &FeatureSet,
        phi: Concave,
        budget: f64,
        cost_mode: CostMode,
        selections: &[(&str, &[usize])],
    ) -> Result<Self> {
        let vectors = features.featurize_corpus(ground)?;
        let objective = Objective::new(features, phi);
        let methods = selections
            .iter()
            .map(|(name, ids)| MethodReport::measure(name, ground, ids, features, &objective, &vectors, cost_mode))
            .collect::<Result<Vec<_>>>()?;

        let oracle = if ground.len() <= ORACLE_CAP {
            let costs: Vec<f64> = ground.iter().map(|s| cost_mode.cost(s)).collect();
            let best = brute_force_optimal(&objective, &vectors, &costs, budget)?;
            let reference = methods
                .iter()
                .find(|m| m.method == "submod")
                .or(methods.first())
                .map_or(0.0, |m| m.objective);
            Some(OracleSummary {
                optimal_objective: best.value,
                optimal_size: best.ids.len(),
                greedy_ratio: if best.value > 0.0 { reference / best.value } else { 1.0 },
            })
        } else {
            None
        };

        Ok(ComparisonReport {
            ground_size: ground.len(),
            budget,
            cost_mode,
            methods,
            oracle,
        })
    }
}

/// Run both selectors on identical inputs and measure them with the same
/// objective and metrics. Adds the exhaustive optimum when the ground set is
/// small enough.
pub fn compare_methods(ground: &Corpus, in_domain: &Corpus, config: &CompareConfig) -> Result<Comparison> {
    let features = FeatureSet::extract(in_domain, config.max_order, config.weights)?.fit_idf(ground)?;
    let vectors = features.featurize_corpus(ground)?;
    let costs: Vec<f64> = ground.iter().map(|s| config.cost_mode.cost(s)).collect();
    let objective = Objective::new(&features, config.phi);

    let greedy_config = GreedyConfig::new(config.budget)
        .variant(config.variant)
        .threads(config.threads);
    let submod = greedy_select(&objective, &vectors, &costs, &greedy_config)?;

    let (lm_in, lm_out) = train_pair(in_domain, ground, config.lm)?;
    let scores = score_corpus(ground, &lm_in, &lm_out)?;
    let xent = rank_and_select(ground, &scores, config.xent_limit())?;

    let report = ComparisonReport::build(
        ground,
        &features,
        config.phi,
        config.budget,
        config.cost_mode,
        &[("submod", submod.selected()), ("xent", &xent.ids())],
    )?;
    Ok(Comparison {
        features,
        submod,
        xent,
        report,
    })
}
