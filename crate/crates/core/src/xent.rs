//! Cross-entropy-difference ranking: score each sentence by the per-word log
//! ratio of in-domain to out-of-domain model probabilities, then keep the top
//! of the ranking.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::corpus::{Corpus, Sentence};
use crate::error::{Error, Result};
use crate::lm::NgramLanguageModel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredSentence {
    pub id: usize,
    /// `(ln P_in − ln P_out) / length`; NaN when both log-probabilities are
    /// `-inf`.
    pub score: f64,
    pub length: usize,
}

impl ScoredSentence {
    /// The score could not be computed and the sentence ranks last.
    pub fn is_undefined(&self) -> bool {
        self.score.is_nan()
    }

    /// Descending score, undefined scores last, then ascending id.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        match (self.is_undefined(), other.is_undefined()) {
            (false, false) => other.score.total_cmp(&self.score),
            (a, b) => a.cmp(&b),
        }
        .then_with(|| self.id.cmp(&other.id))
    }
}

fn check_compatible(lm_in: &NgramLanguageModel, lm_out: &NgramLanguageModel) -> Result<()> {
    if lm_in.order() != lm_out.order() || lm_in.config().markers != lm_out.config().markers {
        return Err(Error::Config(
            "in-domain and out-of-domain models must share order and marker settings".into(),
        ));
    }
    Ok(())
}

fn score_unchecked(
    x: &Sentence,
    lm_in: &NgramLanguageModel,
    lm_out: &NgramLanguageModel,
) -> ScoredSentence {
    let lp_in = lm_in.log_prob(&x.source);
    let lp_out = lm_out.log_prob(&x.source);
    let length = x.source.len();
    let score = if lp_in == f64::NEG_INFINITY && lp_out == f64::NEG_INFINITY {
        f64::NAN
    } else {
        (lp_in - lp_out) / length as f64
    };
    ScoredSentence {
        id: x.id,
        score,
        length,
    }
}

pub fn xent_score(
    x: &Sentence,
    lm_in: &NgramLanguageModel,
    lm_out: &NgramLanguageModel,
) -> Result<ScoredSentence> {
    check_compatible(lm_in, lm_out)?;
    Ok(score_unchecked(x, lm_in, lm_out))
}

/// Score every sentence of `ground`, in id order.
pub fn score_corpus(
    ground: &Corpus,
    lm_in: &NgramLanguageModel,
    lm_out: &NgramLanguageModel,
) -> Result<Vec<ScoredSentence>> {
    check_compatible(lm_in, lm_out)?;
    let scores: Vec<ScoredSentence> = ground
        .sentences()
        .par_iter()
        .map(|x| score_unchecked(x, lm_in, lm_out))
        .collect();
    let undefined = scores.iter().filter(|s| s.is_undefined()).count();
    if undefined > 0 {
        log::warn!("{undefined} sentence(s) have zero probability under both models; ranked last");
    }
    Ok(scores)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Limit {
    TopN(usize),
    /// Longest prefix of the ranking whose source-word total fits.
    WordBudget(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct XentSelection {
    /// The full ranking, best first.
    pub ranking: Vec<ScoredSentence>,
    /// Selected sentences in rank order.
    pub selected: Vec<ScoredSentence>,
    /// Cumulative source-word cost after each selected sentence.
    pub cumulative_words: Vec<usize>,
}

impl XentSelection {
    pub fn ids(&self) -> Vec<usize> {
        self.selected.iter().map(|s| s.id).collect()
    }

    pub fn spent_words(&self) -> usize {
        self.cumulative_words.last().copied().unwrap_or(0)
    }
}

pub fn rank_and_select(
    ground: &Corpus,
    scores: &[ScoredSentence],
    limit: Limit,
) -> Result<XentSelection> {
    match limit {
        Limit::TopN(0) => return Err(Error::Config("top-N limit must be positive".into())),
        Limit::WordBudget(b) if !(b > 0.0) => {
            return Err(Error::Config(format!("word budget must be positive, got {b}")))
        }
        _ => {}
    }
    if scores.len() != ground.len() {
        return Err(Error::Precondition(format!(
            "{} scores for {} sentences",
            scores.len(),
            ground.len()
        )));
    }
    let mut ranking = scores.to_vec();
    ranking.sort_by(ScoredSentence::rank_cmp);

    let mut selected = Vec::new();
    let mut cumulative_words = Vec::new();
    let mut spent = 0usize;
    for s in &ranking {
        let cost = ground
            .get(s.id)
            .ok_or_else(|| Error::Precondition(format!("score for unknown sentence {}", s.id)))?
            .cost;
        let fits = match limit {
            Limit::TopN(n) => selected.len() < n,
            Limit::WordBudget(b) => (spent + cost) as f64 <= b,
        };
        if !fits {
            break;
        }
        spent += cost;
        selected.push(*s);
        cumulative_words.push(spent);
    }
    Ok(XentSelection {
        ranking,
        selected,
        cumulative_words,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tokenizer;
    use crate::lm::{train_pair, LmConfig, Smoothing};

    fn corpus(lines: &[&str]) -> Corpus {
        Corpus::parse(&lines.join("\n"), None, Tokenizer::Whitespace)
            .unwrap()
            .0
    }

    fn unigram_pair() -> (NgramLanguageModel, NgramLanguageModel) {
        // P_in(a) = 0.8, P_in(b) = 0.2; P_out mirrored.
        train_pair(
            &corpus(&["a a a a b"]),
            &corpus(&["a b b b b"]),
            LmConfig::new(1, Smoothing::Mle).markers(false),
        )
        .unwrap()
    }

    fn scored(id: usize, score: f64) -> ScoredSentence {
        ScoredSentence { id, score, length: 1 }
    }

    #[test]
    fn log_ratio_hand_values() {
        let (lin, lout) = unigram_pair();
        let g = corpus(&["a a", "b b"]);
        let s = xent_score(g.get(0).unwrap(), &lin, &lout).unwrap();
        assert!((s.score - 4f64.ln()).abs() < 1e-12);
        assert_eq!(s.length, 2);
        let s = xent_score(g.get(1).unwrap(), &lin, &lout).unwrap();
        assert!((s.score + 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn identical_models_score_zero() {
        let (lin, _) = unigram_pair();
        let g = corpus(&["a b a", "b"]);
        for s in score_corpus(&g, &lin, &lin).unwrap() {
            assert_eq!(s.score, 0.0);
        }
    }

    #[test]
    fn mismatched_orders_are_rejected() {
        let c = corpus(&["a b"]);
        let a = NgramLanguageModel::train(&c, LmConfig::new(1, Smoothing::Mle)).unwrap();
        let b = NgramLanguageModel::train(&c, LmConfig::new(2, Smoothing::Mle)).unwrap();
        assert!(matches!(
            xent_score(c.get(0).unwrap(), &a, &b),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn undefined_scores_rank_last() {
        let (lin, lout) = train_pair(
            &corpus(&["a"]),
            &corpus(&["a"]),
            LmConfig::new(1, Smoothing::Mle).markers(false),
        )
        .unwrap();
        let g = corpus(&["zzz", "a"]);
        let scores = score_corpus(&g, &lin, &lout).unwrap();
        assert!(scores[0].is_undefined());
        let sel = rank_and_select(&g, &scores, Limit::TopN(2)).unwrap();
        assert_eq!(sel.ids(), vec![1, 0]);
    }

    #[test]
    fn top_n_ordering() {
        let g = corpus(&["a", "b", "c"]);
        let scores = [scored(0, 1.5), scored(1, 0.3), scored(2, -0.2)];
        assert_eq!(rank_and_select(&g, &scores, Limit::TopN(2)).unwrap().ids(), vec![0, 1]);
        assert_eq!(rank_and_select(&g, &scores, Limit::TopN(9)).unwrap().ids(), vec![0, 1, 2]);
    }

    #[test]
    fn ties_prefer_lower_id() {
        let g = corpus(&["a", "b", "c"]);
        let scores = [scored(0, 0.1), scored(1, 0.7), scored(2, 0.7)];
        assert_eq!(rank_and_select(&g, &scores, Limit::TopN(3)).unwrap().ids(), vec![1, 2, 0]);
    }

    #[test]
    fn word_budget_takes_prefix_without_skipping() {
        // Costs [3, 3, 1] in score order; the second does not fit and stops the walk.
        let g = corpus(&["a b c", "d e f", "g"]);
        let scores = [scored(0, 3.0), scored(1, 2.0), scored(2, 1.0)];
        let sel = rank_and_select(&g, &scores, Limit::WordBudget(5.0)).unwrap();
        assert_eq!(sel.ids(), vec![0]);
        assert_eq!(sel.spent_words(), 3);
    }

    #[test]
    fn word_budget_prefix_hand_example() {
        // Costs [3, 1, 3] in score order: prefix of the first two fits in 5.
        let g = corpus(&["a b c", "g", "d e f"]);
        let scores = [scored(0, 3.0), scored(1, 2.0), scored(2, 1.0)];
        let sel = rank_and_select(&g, &scores, Limit::WordBudget(5.0)).unwrap();
        assert_eq!(sel.ids(), vec![0, 1]);
        assert_eq!(sel.cumulative_words, vec![3, 4]);
    }

    #[test]
    fn non_positive_limits_are_config_errors() {
        let g = corpus(&["a"]);
        let scores = [scored(0, 1.0)];
        assert!(matches!(rank_and_select(&g, &scores, Limit::TopN(0)), Err(Error::Config(_))));
        assert!(matches!(
            rank_and_select(&g, &scores, Limit::WordBudget(0.0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn swapping_models_negates_scores() {
        let (lin, lout) = train_pair(
            &corpus(&["a b c a", "c c b"]),
            &corpus(&["b b d", "a d d c"]),
            LmConfig::new(3, Smoothing::WittenBell),
        )
        .unwrap();
        let g = corpus(&["a b", "d d c a", "c", "b a d"]);
        let fwd = score_corpus(&g, &lin, &lout).unwrap();
        let rev = score_corpus(&g, &lout, &lin).unwrap();
        for (f, r) in fwd.iter().zip(&rev) {
            assert_eq!(f.score, -r.score);
        }
    }

    #[test]
    fn self_concatenation_keeps_unigram_score() {
        let (lin, lout) = unigram_pair();
        let g = corpus(&["a b a", "a b a a b a"]);
        let s = score_corpus(&g, &lin, &lout).unwrap();
        assert!((s[0].score - s[1].score).abs() < 1e-12);
    }

    #[test]
    fn constant_shift_keeps_selection() {
        let g = corpus(&["a", "b", "c", "d"]);
        let scores = [scored(0, 0.4), scored(1, -1.0), scored(2, 2.5), scored(3, 0.4)];
        let shifted: Vec<_> = scores.iter().map(|s| scored(s.id, s.score + 17.0)).collect();
        assert_eq!(
            rank_and_select(&g, &scores, Limit::TopN(3)).unwrap().ids(),
            rank_and_select(&g, &shifted, Limit::TopN(3)).unwrap().ids()
        );
    }
}
