//! Browser bindings for the selection demo.
//!
//! Every exported function takes plain strings and numbers and returns a JSON
//! string, so the page needs no generated glue beyond `wasm-bindgen`. The
//! `*_json` functions are ordinary Rust and are what the native tests call.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use subsel_core::greedy::{greedy_select, GreedyConfig, Variant};
use subsel_core::lm::LmConfig;
use subsel_core::report::{compare_methods, CompareConfig};
use subsel_core::{Concave, CostMode, Corpus, FeatureSet, Objective, Smoothing, Tokenizer, WeightScheme};

/// Sentences beyond this are rejected so a pasted corpus cannot hang the tab.
pub const MAX_GROUND: usize = 5_000;

#[derive(Serialize)]
struct StepJson {
    id: usize,
    text: String,
    gain: f64,
    ratio: f64,
    cost: f64,
    cumulative_cost: f64,
    objective: f64,
}

#[derive(Serialize)]
struct TrajectoryJson {
    features: usize,
    ground_size: usize,
    total_cost: f64,
    budget: f64,
    stop_reason: Option<String>,
    objective: f64,
    lazy_evaluations: u64,
    naive_evaluations: u64,
    steps: Vec<StepJson>,
}

#[derive(Serialize)]
struct MethodJson {
    method: String,
    objective: f64,
    spent: f64,
    size: usize,
    coverage: f64,
    redundancy: f64,
    type_token_ratio: f64,
    ids: Vec<usize>,
    texts: Vec<String>,
}

#[derive(Serialize)]
struct ComparisonJson {
    features: usize,
    ground_size: usize,
    methods: Vec<MethodJson>,
    oracle_objective: Option<f64>,
    greedy_ratio: Option<f64>,
}

#[derive(Serialize)]
struct CurveJson {
    name: String,
    points: Vec<[f64; 2]>,
}

fn load(text: &str, what: &str) -> Result<Corpus, String> {
    let (corpus, _) = Corpus::parse(text, None, Tokenizer::LowercaseWhitespace).map_err(|e| format!("{what}: {e}"))?;
    if corpus.is_empty() {
        return Err(format!("{what}: no sentences"));
    }
    Ok(corpus)
}

fn inputs(in_domain: &str, ground: &str) -> Result<(Corpus, Corpus), String> {
    let in_domain = load(in_domain, "in-domain text")?;
    let ground = load(ground, "candidate pool")?;
    if ground.len() > MAX_GROUND {
        return Err(format!("candidate pool has {} sentences; the demo takes at most {MAX_GROUND}", ground.len()));
    }
    Ok((in_domain, ground))
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| format!("{what}: {e}"))
}

/// Run budgeted greedy selection and return every step.
pub fn greedy_trajectory_json(
    in_domain: &str,
    ground: &str,
    budget: f64,
    phi: &str,
    max_order: usize,
    cost_mode: &str,
) -> Result<String, String> {
    let (in_domain, ground) = inputs(in_domain, ground)?;
    let phi: Concave = parse(phi, "concave function")?;
    let cost_mode: CostMode = parse(cost_mode, "cost mode")?;
    let features = FeatureSet::extract(&in_domain, max_order, WeightScheme::Uniform)
        .and_then(|f| f.fit_idf(&ground))
        .map_err(|e| e.to_string())?;
    let vectors = features.featurize_corpus(&ground).map_err(|e| e.to_string())?;
    let costs: Vec<f64> = ground.iter().map(|s| cost_mode.cost(s)).collect();
    let objective = Objective::new(&features, phi);

    let cfg = GreedyConfig::new(budget);
    let lazy = greedy_select(&objective, &vectors, &costs, &cfg).map_err(|e| e.to_string())?;
    let naive = greedy_select(&objective, &vectors, &costs, &cfg.variant(Variant::Naive)).map_err(|e| e.to_string())?;

    let steps = lazy
        .trajectory()
        .iter()
        .map(|s| StepJson {
            id: s.id,
            text: ground.get(s.id).map(|x| x.source_text()).unwrap_or_default(),
            gain: s.gain,
            ratio: s.ratio,
            cost: s.cost,
            cumulative_cost: s.cumulative_cost,
            objective: s.objective,
        })
        .collect();
    let out = TrajectoryJson {
        features: features.len(),
        ground_size: ground.len(),
        total_cost: costs.iter().sum(),
        budget,
        stop_reason: lazy.stop_reason().map(|r| r.to_string()),
        objective: lazy.objective(),
        lazy_evaluations: lazy.evaluations(),
        naive_evaluations: naive.evaluations(),
        steps,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Select with both methods under the same budget and measure each result.
pub fn compare_json(
    in_domain: &str,
    ground: &str,
    budget: f64,
    cost_mode: &str,
    max_order: usize,
    lm_order: usize,
) -> Result<String, String> {
    let (in_domain, ground) = inputs(in_domain, ground)?;
    let config = CompareConfig {
        max_order,
        budget,
        cost_mode: parse(cost_mode, "cost mode")?,
        lm: LmConfig::new(lm_order, Smoothing::WittenBell),
        ..CompareConfig::default()
    };
    let cmp = compare_methods(&ground, &in_domain, &config).map_err(|e| e.to_string())?;
    let ids_for = |name: &str| match name {
        "submod" => cmp.submod.selected().to_vec(),
        _ => cmp.xent.ids(),
    };
    let methods = cmp
        .report
        .methods
        .iter()
        .map(|m| {
            let ids = ids_for(&m.method);
            MethodJson {
                method: m.method.clone(),
                objective: m.objective,
                spent: m.spent,
                size: m.size,
                coverage: m.metrics.coverage,
                redundancy: m.metrics.redundancy,
                type_token_ratio: m.metrics.type_token_ratio,
                texts: ids.iter().filter_map(|&i| ground.get(i)).map(|s| s.source_text()).collect(),
                ids,
            }
        })
        .collect();
    let out = ComparisonJson {
        features: cmp.features.len(),
        ground_size: ground.len(),
        methods,
        oracle_objective: cmp.report.oracle.as_ref().map(|o| o.optimal_objective),
        greedy_ratio: cmp.report.oracle.as_ref().map(|o| o.greedy_ratio),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Sample each named concave function on `[0, max_mass]`.
pub fn concave_curves_json(names: &str, max_mass: f64, points: usize) -> Result<String, String> {
    if !(max_mass > 0.0 && max_mass.is_finite()) || points < 2 {
        return Err("need a positive range and at least two points".into());
    }
    let curves = names
        .split(',')
        .map(str::trim)
        .filter(|n| !n.is_empty())
        .map(|name| {
            let phi: Concave = parse(name, "concave function")?;
            let points = (0..points)
                .map(|i| {
                    let t = max_mass * i as f64 / (points - 1) as f64;
                    [t, phi.apply(t)]
                })
                .collect();
            Ok(CurveJson { name: name.to_owned(), points })
        })
        .collect::<Result<Vec<_>, String>>()?;
    serde_json::to_string(&curves).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn greedy_trajectory(
    in_domain: &str,
    ground: &str,
    budget: f64,
    phi: &str,
    max_order: usize,
    cost_mode: &str,
) -> Result<String, JsError> {
    greedy_trajectory_json(in_domain, ground, budget, phi, max_order, cost_mode).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn compare(
    in_domain: &str,
    ground: &str,
    budget: f64,
    cost_mode: &str,
    max_order: usize,
    lm_order: usize,
) -> Result<String, JsError> {
    compare_json(in_domain, ground, budget, cost_mode, max_order, lm_order).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn concave_curves(names: &str, max_mass: f64, points: usize) -> Result<String, JsError> {
    concave_curves_json(names, max_mass, points).map_err(|e| JsError::new(&e))
}
