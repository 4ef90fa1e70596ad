//! Tab-separated selection, score and sub-corpus files.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::greedy::SelectionState;
use crate::xent::{ScoredSentence, XentSelection};

/// One row of a selection file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pick {
    pub id: usize,
    /// Marginal gain for greedy selection, score for ranking.
    pub value: f64,
    pub cumulative_cost: f64,
}

impl SelectionState {
    pub fn picks(&self) -> Vec<Pick> {
        self.trajectory()
            .iter()
            .map(|s| Pick {
                id: s.id,
                value: s.gain,
                cumulative_cost: s.cumulative_cost,
            })
            .collect()
    }
}

impl XentSelection {
    pub fn picks(&self) -> Vec<Pick> {
        self.selected
            .iter()
            .zip(&self.cumulative_words)
            .map(|(s, &c)| Pick {
                id: s.id,
                value: s.score,
                cumulative_cost: c as f64,
            })
            .collect()
    }
}

/// `rank \t sentence-id \t gain \t cumulative-cost`, rank starting at 1.
pub fn write_selection<W: Write>(mut w: W, picks: &[Pick]) -> std::io::Result<()> {
    for (rank, p) in picks.iter().enumerate() {
        writeln!(w, "{}\t{}\t{}\t{}", rank + 1, p.id, p.value, p.cumulative_cost)?;
    }
    w.flush()
}

/// Sentence ids of a selection file, in rank order.
pub fn read_selection<R: BufRead>(r: R, path: &Path) -> Result<Vec<usize>> {
    let mut ids = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let id = line
            .split('\t')
            .nth(1)
            .and_then(|f| f.parse::<usize>().ok())
            .ok_or_else(|| Error::parse(path, i + 1, "expected `rank\\tid\\tgain\\tcost`"))?;
        ids.push(id);
    }
    Ok(ids)
}

/// `sentence-id \t score \t length`, in id order.
pub fn write_scores<W: Write>(mut w: W, scores: &[ScoredSentence]) -> std::io::Result<()> {
    for s in scores {
        writeln!(w, "{}\t{}\t{}", s.id, s.score, s.length)?;
    }
    w.flush()
}

/// Re-emit the selected sentences in selection order. The target writer is
/// used only for parallel corpora.
pub fn write_subcorpus<W: Write>(
    corpus: &Corpus,
    ids: &[usize],
    mut source: W,
    mut target: Option<W>,
) -> Result<()> {
    let io = |e| Error::io("<sub-corpus>", e);
    for &id in ids {
        let s = corpus
            .get(id)
            .ok_or_else(|| Error::Precondition(format!("selected id {id} is not in the corpus")))?;
        writeln!(source, "{}", s.source_text()).map_err(io)?;
        if let (Some(t), Some(text)) = (target.as_mut(), s.target_text()) {
            writeln!(t, "{text}").map_err(io)?;
        }
    }
    source.flush().map_err(io)?;
    if let Some(t) = target.as_mut() {
        t.flush().map_err(io)?;
    }
    Ok(())
}

/// Flat `key=value` records, one per line.
pub fn write_key_values<W: Write>(mut w: W, pairs: &[(&str, String)]) -> std::io::Result<()> {
    for (k, v) in pairs {
        writeln!(w, "{k}={v}")?;
    }
    w.flush()
}
