use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "subsel", version, about = "Budgeted in-domain selection of training sentences")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Flat key=value file of default flag values; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for scoring; output does not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the n-gram feature universe and fit idf on the ground set.
    ExtractFeatures(ExtractArgs),
    /// Train in-domain and out-of-domain language models.
    TrainLm(TrainLmArgs),
    /// Score ground sentences by cross-entropy difference.
    Score(ScoreArgs),
    /// Select a budgeted subset with one or both methods.
    Select(SelectArgs),
    /// Compare greedy with the exhaustive optimum on a small instance.
    Oracle(OracleArgs),
    /// Measure existing selection files.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Sample of the target domain, one sentence per line.
    #[arg(long, value_name = "FILE")]
    pub in_domain_source: Option<PathBuf>,
    /// Target side of the in-domain sample; only checked for alignment.
    #[arg(long, value_name = "FILE")]
    pub in_domain_target: Option<PathBuf>,
    /// Candidate pool to select from.
    #[arg(long, value_name = "FILE")]
    pub ground_source: Option<PathBuf>,
    /// Target side of the pool; selected lines are copied alongside.
    #[arg(long, value_name = "FILE")]
    pub ground_target: Option<PathBuf>,
    /// whitespace or lowercase-whitespace
    #[arg(long, default_value = "whitespace")]
    pub tokenizer: String,
}

#[derive(Debug, Args)]
pub struct FeatureArgs {
    /// Longest n-gram in the feature universe.
    #[arg(long, default_value_t = 7)]
    pub max_order: usize,
    /// uniform or in-domain-frequency
    #[arg(long, default_value = "uniform")]
    pub weights: String,
}

#[derive(Debug, Args)]
pub struct LmArgs {
    /// N-gram order of both language models.
    #[arg(long, default_value_t = 4)]
    pub lm_order: usize,
    /// mle, add-k:<k> or witten-bell
    #[arg(long, default_value = "witten-bell")]
    pub smoothing: String,
    /// Do not pad sentences with <s> and </s>.
    #[arg(long)]
    pub no_markers: bool,
    /// Map tokens seen fewer times than this to <unk>.
    #[arg(long, default_value_t = 1)]
    pub unk_floor: usize,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Cap on selected source words (default 100000).
    #[arg(long, conflicts_with_all = ["budget_sentences", "budget_percent"])]
    pub budget_words: Option<f64>,
    /// Cap on selected sentences.
    #[arg(long, conflicts_with = "budget_percent")]
    pub budget_sentences: Option<usize>,
    /// Percentage of the ground set, in (0, 100].
    #[arg(long)]
    pub budget_percent: Option<f64>,
    /// words or unit; inferred from the budget form when omitted.
    #[arg(long)]
    pub cost_mode: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainLmArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub lm: LmArgs,
    /// Receives in.lm and out.lm.
    #[arg(long, value_name = "DIR")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_name = "FILE")]
    pub lm_in: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub lm_out: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub ground_source: PathBuf,
    #[arg(long, default_value = "whitespace")]
    pub tokenizer: String,
    #[arg(long, value_name = "FILE")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    /// Precomputed feature file from extract-features.
    #[arg(long, value_name = "FILE")]
    pub features_file: Option<PathBuf>,
    /// sqrt, log1p, linear or power:<alpha>
    #[arg(long, default_value = "sqrt")]
    pub phi: String,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// submod, xent or both
    #[arg(long, default_value = "submod")]
    pub method: String,
    /// naive or lazy
    #[arg(long, default_value = "lazy")]
    pub variant: String,
    #[command(flatten)]
    pub lm: LmArgs,
    /// Receives selections, sub-corpora, summaries and reports.
    #[arg(long, value_name = "DIR")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Built-in instance instead of corpus files: three-sentence
    #[arg(long)]
    pub fixture: Option<String>,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long, default_value = "sqrt")]
    pub phi: String,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Also write the result as key=value lines.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long, default_value = "sqrt")]
    pub phi: String,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Selection file(s); the method name is the file stem before the first dot.
    #[arg(long = "selection", value_name = "FILE", required = true, action = clap::ArgAction::Append)]
    pub selections: Vec<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub output_dir: PathBuf,
}

const SUBCOMMANDS: [&str; 6] = ["extract-features", "train-lm", "score", "select", "oracle", "report"];

const BUDGET_FLAGS: [&str; 3] = ["budget-words", "budget-sentences", "budget-percent"];

/// Turn config-file entries into flags placed ahead of the user's own
/// arguments, so that later (explicit) occurrences override them.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = find_config(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let user_has_budget = args
        .iter()
        .any(|a| BUDGET_FLAGS.iter().any(|f| a.trim_start_matches('-').starts_with(f)));

    let Some(sub_pos) = args.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(args);
    };

    let mut injected = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), i + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if user_has_budget && BUDGET_FLAGS.contains(&key.as_str()) {
            continue;
        }
        match value {
            "true" => injected.push(format!("--{key}")),
            "false" => {}
            v => {
                injected.push(format!("--{key}"));
                injected.push(v.to_string());
            }
        }
    }
    let mut out = args[..=sub_pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[sub_pos + 1..]);
    Ok(out)
}

fn find_config(args: &[String]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(Path::new(p).to_path_buf());
        }
    }
    None
}


#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn config_values_precede_user_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "# comment\nmax_order=3\nbudget-words=50\nno-markers=true\n").unwrap();
        let args = s(&["subsel", "--config", cfg.to_str().unwrap(), "select", "--max-order", "5"]);
        let out = expand_config(args).unwrap();
        let pos = out.iter().position(|a| a == "select").unwrap();
        assert_eq!(
            &out[pos + 1..],
            &s(&["--max-order", "3", "--budget-words", "50", "--no-markers", "--max-order", "5"])
        );
    }

    #[test]
    fn explicit_budget_suppresses_config_budget() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "budget_words=50\n").unwrap();
        let args = s(&["subsel", "select", "--config", cfg.to_str().unwrap(), "--budget-percent", "10"]);
        let out = expand_config(args).unwrap();
        assert!(!out.iter().any(|a| a == "--budget-words"));
    }

    #[test]
    fn parses_with_override() {
        let cli = Cli::try_parse_from(s(&[
            "subsel", "select", "--ground-source", "g", "--output-dir", "o",
            "--max-order", "3", "--max-order", "5",
        ]))
        .unwrap();
        let Command::Select(a) = cli.command else { panic!() };
        assert_eq!(a.features.max_order, 5);
    }

    #[test]
    fn two_budget_forms_conflict() {
        let err = Cli::try_parse_from(s(&[
            "subsel", "select", "--output-dir", "o", "--budget-words", "5", "--budget-percent", "3",
        ]))
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
