use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use subsel_core::greedy::{greedy_select, GreedyConfig};
use subsel_core::lm::{train_pair, LmConfig, NgramLanguageModel};
use subsel_core::oracle::brute_force_optimal;
use subsel_core::output::{read_selection, write_key_values, write_scores, write_selection, write_subcorpus, Pick};
use subsel_core::xent::{rank_and_select, score_corpus, Limit};
use subsel_core::{
    load_corpus, ComparisonReport, Concave, CostMode, Corpus, FeatureSet, FeatureVector, Objective,
    SelectionState, Tokenizer, Variant, WeightScheme,
};

use crate::args::{BudgetArgs, Cli, Command, FeatureArgs, InputArgs, LmArgs, OracleArgs, ReportArgs, SelectArgs};

/// Minimum greedy/optimal ratio for `oracle` to exit successfully.
const ORACLE_PASS_RATIO: f64 = 0.63;

const DEFAULT_WORD_BUDGET: f64 = 100_000.0;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(subsel_core::Error),
    Io(PathBuf, std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => e.fmt(f),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<subsel_core::Error> for CliError {
    fn from(e: subsel_core::Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("cannot configure {n} threads: {e}")))?;
    }
    match cli.command {
        Command::ExtractFeatures(a) => {
            let (in_domain, ground) = load_pair(&a.input)?;
            let features = build_features(&a.features, &in_domain, &ground)?;
            features.save(&a.output)?;
            log::info!("wrote {} features to {}", features.len(), a.output.display());
        }
        Command::TrainLm(a) => {
            let (in_domain, ground) = load_pair(&a.input)?;
            let (lm_in, lm_out) = train_pair(&in_domain, &ground, lm_config(&a.lm)?)?;
            create_dir(&a.output_dir)?;
            lm_in.save(&a.output_dir.join("in.lm"))?;
            lm_out.save(&a.output_dir.join("out.lm"))?;
        }
        Command::Score(a) => {
            let lm_in = NgramLanguageModel::load(&existing(&a.lm_in)?)?;
            let lm_out = NgramLanguageModel::load(&existing(&a.lm_out)?)?;
            let (ground, _) = load_corpus(&existing(&a.ground_source)?, None, tokenizer(&a.tokenizer)?)?;
            let scores = score_corpus(&ground, &lm_in, &lm_out)?;
            write_scores(create(&a.output)?, &scores).map_err(|e| CliError::Io(a.output.clone(), e))?;
        }
        Command::Select(a) => select(a)?,
        Command::Oracle(a) => return oracle(a),
        Command::Report(a) => report(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn tokenizer(id: &str) -> Result<Tokenizer> {
    Ok(id.parse()?)
}

fn existing(path: &Path) -> Result<PathBuf> {
    if path.exists() {
        Ok(path.to_path_buf())
    } else {
        Err(usage(format!("input file {} does not exist", path.display())))
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| usage(format!("missing required input --{flag}")))
}

fn load(source: &Path, target: Option<&Path>, tok: Tokenizer) -> Result<Corpus> {
    let source = existing(source)?;
    let target = target.map(existing).transpose()?;
    Ok(load_corpus(&source, target.as_deref(), tok)?.0)
}

/// In-domain and ground corpora; both source files are required.
fn load_pair(input: &InputArgs) -> Result<(Corpus, Corpus)> {
    let tok = tokenizer(&input.tokenizer)?;
    let in_src = required(&input.in_domain_source, "in-domain-source")?;
    let ground_src = required(&input.ground_source, "ground-source")?;
    let in_domain = load(in_src, input.in_domain_target.as_deref(), tok)?;
    let ground = load(ground_src, input.ground_target.as_deref(), tok)?;
    Ok((in_domain, ground))
}

fn build_features(args: &FeatureArgs, in_domain: &Corpus, ground: &Corpus) -> Result<FeatureSet> {
    let scheme: WeightScheme = args.weights.parse()?;
    Ok(FeatureSet::extract(in_domain, args.max_order, scheme)?.fit_idf(ground)?)
}

fn lm_config(args: &LmArgs) -> Result<LmConfig> {
    Ok(LmConfig {
        order: args.lm_order,
        smoothing: args.smoothing.parse()?,
        markers: !args.no_markers,
        unk_floor: args.unk_floor,
    })
}

/// Resolve the budget flags to an amount and a cost unit.
fn resolve_budget(b: &BudgetArgs, ground: &Corpus) -> Result<(f64, CostMode)> {
    let explicit: Option<CostMode> = b.cost_mode.as_deref().map(str::parse).transpose()?;
    let (budget, mode) = match (b.budget_words, b.budget_sentences, b.budget_percent) {
        (Some(w), None, None) => {
            if explicit == Some(CostMode::Unit) {
                return Err(usage("--budget-words requires the words cost mode"));
            }
            (w, CostMode::Words)
        }
        (None, Some(n), None) => {
            if explicit == Some(CostMode::Words) {
                return Err(usage("--budget-sentences requires the unit cost mode"));
            }
            (n as f64, CostMode::Unit)
        }
        (None, None, Some(p)) => {
            if !(p > 0.0 && p <= 100.0) {
                return Err(usage(format!("--budget-percent must lie in (0, 100], got {p}")));
            }
            match explicit.unwrap_or(CostMode::Unit) {
                CostMode::Unit => ((p / 100.0 * ground.len() as f64).ceil(), CostMode::Unit),
                CostMode::Words => (p / 100.0 * ground.total_words() as f64, CostMode::Words),
            }
        }
        (None, None, None) => {
            if explicit == Some(CostMode::Unit) {
                return Err(usage("unit cost mode needs --budget-sentences or --budget-percent"));
            }
            (DEFAULT_WORD_BUDGET, CostMode::Words)
        }
        _ => return Err(usage("give exactly one of --budget-words, --budget-sentences, --budget-percent")),
    };
    if budget.is_nan() || budget <= 0.0 || budget.is_infinite() {
        return Err(usage(format!("budget must be positive, got {budget}")));
    }
    if budget >= ground.total_cost(mode) {
        log::warn!("budget {budget} covers the whole ground set; every positive-gain sentence is eligible");
    }
    Ok((budget, mode))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn emit_selection(dir: &Path, method: &str, ground: &Corpus, picks: &[Pick]) -> Result<Vec<usize>> {
    let sel_path = dir.join(format!("{method}.selection.tsv"));
    write_selection(create(&sel_path)?, picks).map_err(|e| CliError::Io(sel_path, e))?;
    let ids: Vec<usize> = picks.iter().map(|p| p.id).collect();
    let target = if ground.is_parallel() {
        Some(create(&dir.join(format!("{method}.target")))?)
    } else {
        None
    };
    write_subcorpus(ground, &ids, create(&dir.join(format!("{method}.source")))?, target)?;
    Ok(ids)
}

fn write_kv(path: &Path, pairs: &[(&str, String)]) -> Result<()> {
    write_key_values(create(path)?, pairs).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn submod_summary(state: &SelectionState, variant: Variant) -> Vec<(&'static str, String)> {
    vec![
        ("method", "submod".into()),
        ("variant", variant.to_string()),
        ("objective", state.objective().to_string()),
        ("spent", state.spent().to_string()),
        ("budget", state.budget().to_string()),
        ("selected", state.len().to_string()),
        ("iterations", state.trajectory().len().to_string()),
        ("evaluations", state.evaluations().to_string()),
        (
            "stop_reason",
            state.stop_reason().map_or_else(|| "-".into(), |r| r.to_string()),
        ),
    ]
}

fn select(a: SelectArgs) -> Result<()> {
    let (run_submod, run_xent) = match a.method.as_str() {
        "submod" => (true, false),
        "xent" => (false, true),
        "both" => (true, true),
        other => return Err(usage(format!("unknown method `{other}` (expected submod, xent or both)"))),
    };
    let variant: Variant = a.variant.parse()?;
    let phi: Concave = a.phi.parse()?;
    let lm = lm_config(&a.lm)?;
    let (in_domain, ground) = load_pair(&a.input)?;
    let (budget, cost_mode) = resolve_budget(&a.budget, &ground)?;
    let features = match &a.features_file {
        Some(path) => FeatureSet::load(&existing(path)?)?,
        None => build_features(&a.features, &in_domain, &ground)?,
    };
    if features.ground_size() != Some(ground.len()) {
        return Err(usage(format!(
            "feature file was fitted on {:?} sentences, ground set has {}",
            features.ground_size(),
            ground.len()
        )));
    }
    create_dir(&a.output_dir)?;
    let dir = &a.output_dir;

    let mut selections: Vec<(&str, Vec<usize>)> = Vec::new();
    if run_submod {
        let vectors = features.featurize_corpus(&ground)?;
        let costs: Vec<f64> = ground.iter().map(|s| cost_mode.cost(s)).collect();
        let objective = Objective::new(&features, phi);
        let state = greedy_select(&objective, &vectors, &costs, &GreedyConfig::new(budget).variant(variant))?;
        let ids = emit_selection(dir, "submod", &ground, &state.picks())?;
        write_kv(&dir.join("submod.summary"), &submod_summary(&state, variant))?;
        log::info!(
            "submod: {} sentences, spent {}, objective {}",
            state.len(),
            state.spent(),
            state.objective()
        );
        selections.push(("submod", ids));
    }
    if run_xent {
        let (lm_in, lm_out) = train_pair(&in_domain, &ground, lm)?;
        let scores = score_corpus(&ground, &lm_in, &lm_out)?;
        let path = dir.join("xent.scores.tsv");
        write_scores(create(&path)?, &scores).map_err(|e| CliError::Io(path, e))?;
        let limit = match cost_mode {
            CostMode::Unit => Limit::TopN(budget.floor() as usize),
            CostMode::Words => Limit::WordBudget(budget),
        };
        let sel = rank_and_select(&ground, &scores, limit)?;
        let ids = emit_selection(dir, "xent", &ground, &sel.picks())?;
        write_kv(
            &dir.join("xent.summary"),
            &[
                ("method", "xent".into()),
                ("spent", sel.picks().last().map_or(0.0, |p| p.cumulative_cost).to_string()),
                ("budget", budget.to_string()),
                ("selected", sel.selected.len().to_string()),
                ("undefined_scores", scores.iter().filter(|s| s.is_undefined()).count().to_string()),
            ],
        )?;
        log::info!("xent: {} sentences, {} words", sel.selected.len(), sel.spent_words());
        selections.push(("xent", ids));
    }
    if run_submod && run_xent {
        let named: Vec<(&str, &[usize])> = selections.iter().map(|(n, ids)| (*n, ids.as_slice())).collect();
        let report = ComparisonReport::build(&ground, &features, phi, budget, cost_mode, &named)?;
        write_report(dir, &report)?;
    }
    Ok(())
}

fn write_report(dir: &Path, report: &ComparisonReport) -> Result<()> {
    let txt = dir.join("report.txt");
    report
        .write_key_values(create(&txt)?)
        .map_err(|e| CliError::Io(txt, e))?;
    let csv = dir.join("report.csv");
    report.write_csv(create(&csv)?).map_err(|e| CliError::Io(csv, e))?;
    eprint!("{}", report.to_table());
    Ok(())
}

fn three_sentence_fixture() -> (Objective, Vec<FeatureVector>, Vec<f64>) {
    let fv = |pairs: &[(u32, f64)]| FeatureVector::from_pairs(pairs.iter().copied());
    (
        Objective::from_weights(vec![1.0; 3], Concave::Power(0.5)),
        vec![fv(&[(0, 9.0)]), fv(&[(0, 9.0)]), fv(&[(1, 4.0), (2, 4.0)])],
        vec![1.0; 3],
    )
}

fn join_ids(ids: &[usize]) -> String {
    ids.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn oracle(a: OracleArgs) -> Result<ExitCode> {
    let (objective, vectors, costs, budget) = match a.fixture.as_deref() {
        Some("three-sentence") => {
            let (o, v, c) = three_sentence_fixture();
            let budget = a.budget.budget_sentences.map_or(2.0, |k| k as f64);
            (o, v, c, budget)
        }
        Some(other) => return Err(usage(format!("unknown fixture `{other}` (expected three-sentence)"))),
        None => {
            let (in_domain, ground) = load_pair(&a.input)?;
            if ground.len() > subsel_core::oracle::ORACLE_CAP {
                return Err(subsel_core::Error::SizeCap {
                    size: ground.len(),
                    cap: subsel_core::oracle::ORACLE_CAP,
                }
                .into());
            }
            let (budget, cost_mode) = resolve_budget(&a.budget, &ground)?;
            let features = build_features(&a.features, &in_domain, &ground)?;
            let phi: Concave = a.phi.parse()?;
            let vectors = features.featurize_corpus(&ground)?;
            let costs = ground.iter().map(|s| cost_mode.cost(s)).collect();
            (Objective::new(&features, phi), vectors, costs, budget)
        }
    };
    let greedy = greedy_select(&objective, &vectors, &costs, &GreedyConfig::new(budget))?;
    let best = brute_force_optimal(&objective, &vectors, &costs, budget)?;
    let ratio = if best.value > 0.0 {
        greedy.objective() / best.value
    } else {
        1.0
    };
    let pairs = [
        ("optimal_f", best.value.to_string()),
        ("optimal_set", join_ids(&best.ids)),
        ("greedy_f", greedy.objective().to_string()),
        ("greedy_set", join_ids(greedy.selected())),
        ("ratio", ratio.to_string()),
    ];
    write_key_values(std::io::stdout().lock(), &pairs).map_err(|e| CliError::Io("<stdout>".into(), e))?;
    if let Some(path) = &a.output {
        write_kv(path, &pairs)?;
    }
    if ratio >= ORACLE_PASS_RATIO {
        Ok(ExitCode::SUCCESS)
    } else {
        log::error!("greedy/optimal ratio {ratio} is below {ORACLE_PASS_RATIO}");
        Ok(ExitCode::from(1))
    }
}

fn report(a: ReportArgs) -> Result<()> {
    let (in_domain, ground) = load_pair(&a.input)?;
    let (budget, cost_mode) = resolve_budget(&a.budget, &ground)?;
    let features = build_features(&a.features, &in_domain, &ground)?;
    let phi: Concave = a.phi.parse()?;
    let mut selections = Vec::new();
    for path in &a.selections {
        let path = existing(path)?;
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.split('.').next())
            .unwrap_or("selection")
            .to_string();
        let file = File::open(&path).map_err(|e| CliError::Io(path.clone(), e))?;
        let ids = read_selection(BufReader::new(file), &path)?;
        selections.push((name, ids));
    }
    let named: Vec<(&str, &[usize])> = selections.iter().map(|(n, ids)| (n.as_str(), ids.as_slice())).collect();
    let report = ComparisonReport::build(&ground, &features, phi, budget, cost_mode, &named)?;
    create_dir(&a.output_dir)?;
    write_report(&a.output_dir, &report)
}
