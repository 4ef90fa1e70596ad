//! Count-based n-gram language models with MLE, add-k and interpolated
//! Witten-Bell estimates.
//!
//! Sentences are padded with `order - 1` start markers and one end marker
//! when markers are enabled. Predicted events are every vocabulary token plus
//! `</s>` (when markers are on) and `<unk>`; `<s>` is context only.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

pub type TokenId = u32;

const UNK_ID: TokenId = 0;
const EOS_ID: TokenId = 1;
const BOS_ID: TokenId = 2;
const FIRST_WORD_ID: TokenId = 3;

/// Token inventory shared by the models whose scores get compared.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    fn from_sorted_words(words: Vec<String>) -> Self {
        let mut tokens = vec![UNK.to_string(), EOS.to_string(), BOS.to_string()];
        tokens.extend(words);
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        Vocabulary { tokens, index }
    }

    /// Union of the source-side tokens of `corpora` whose combined frequency
    /// is at least `min_count`.
    pub fn build(corpora: &[&Corpus], min_count: usize) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for corpus in corpora {
            for s in corpus.iter() {
                for t in &s.source {
                    *counts.entry(t.as_str()).or_default() += 1;
                }
            }
        }
        let mut words: Vec<String> = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_count && ![UNK, EOS, BOS].contains(t))
            .map(|(t, _)| t.to_string())
            .collect();
        words.sort_unstable();
        Self::from_sorted_words(words)
    }

    pub fn id(&self, token: &str) -> TokenId {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    /// Number of entries including the three reserved markers.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Ordinary (non-reserved) tokens in id order.
    pub fn words(&self) -> &[String] {
        &self.tokens[FIRST_WORD_ID as usize..]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Smoothing {
    Mle,
    AddK(f64),
    WittenBell,
}

impl FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(Smoothing::Mle),
            "add-one" | "laplace" => Ok(Smoothing::AddK(1.0)),
            "wb" | "witten-bell" | "interpolated-wb" => Ok(Smoothing::WittenBell),
            other => match other.strip_prefix("add-k:").map(str::parse::<f64>) {
                Some(Ok(k)) if k > 0.0 && k.is_finite() => Ok(Smoothing::AddK(k)),
                _ => Err(Error::Config(format!(
                    "unknown smoothing `{other}` (expected mle, add-k:<k> or witten-bell)"
                ))),
            },
        }
    }
}

impl fmt::Display for Smoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothing::Mle => f.write_str("mle"),
            Smoothing::AddK(k) => write!(f, "add-k:{k}"),
            Smoothing::WittenBell => f.write_str("witten-bell"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmConfig {
    pub order: usize,
    pub smoothing: Smoothing,
    /// Pad with `<s>` / `</s>`.
    pub markers: bool,
    /// Tokens seen fewer times than this are mapped to `<unk>`.
    pub unk_floor: usize,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            order: 4,
            smoothing: Smoothing::WittenBell,
            markers: true,
            unk_floor: 1,
        }
    }
}

impl LmConfig {
    pub fn new(order: usize, smoothing: Smoothing) -> Self {
        LmConfig {
            order,
            smoothing,
            ..LmConfig::default()
        }
    }

    pub fn markers(mut self, markers: bool) -> Self {
        self.markers = markers;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::Config("language model order must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct HistoryCounts {
    total: u64,
    followers: HashMap<TokenId, u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NgramLanguageModel {
    config: LmConfig,
    vocab: Vocabulary,
    /// Raw events keyed by `history ++ [word]`, history as long as available.
    events: HashMap<Vec<TokenId>, u64>,
    /// `tables[k]` holds statistics for histories of length `k`.
    tables: Vec<HashMap<Vec<TokenId>, HistoryCounts>>,
}

impl NgramLanguageModel {
    /// Train with a vocabulary built from `corpus` alone.
    pub fn train(corpus: &Corpus, config: LmConfig) -> Result<Self> {
        let vocab = Vocabulary::build(&[corpus], config.unk_floor);
        Self::train_with_vocab(corpus, config, vocab)
    }

    pub fn train_with_vocab(corpus: &Corpus, config: LmConfig, vocab: Vocabulary) -> Result<Self> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut model = NgramLanguageModel {
            config,
            vocab,
            events: HashMap::new(),
            tables: Vec::new(),
        };
        for sentence in corpus {
            let seq = model.sequence(&sentence.source);
            let start = model.context_len();
            for i in start..seq.len() {
                let lo = i.saturating_sub(config.order - 1);
                *model.events.entry(seq[lo..=i].to_vec()).or_default() += 1;
            }
        }
        model.rebuild_tables();
        Ok(model)
    }

    fn rebuild_tables(&mut self) {
        let mut tables = vec![HashMap::<Vec<TokenId>, HistoryCounts>::new(); self.config.order];
        for (gram, &count) in &self.events {
            let (word, history) = gram.split_last().expect("events are non-empty");
            for k in 0..=history.len() {
                let entry = tables[k].entry(history[history.len() - k..].to_vec()).or_default();
                entry.total += count;
                *entry.followers.entry(*word).or_default() += count;
            }
        }
        self.tables = tables;
    }

    /// Number of leading `<s>` markers in a padded sequence.
    fn context_len(&self) -> usize {
        if self.config.markers {
            self.config.order - 1
        } else {
            0
        }
    }

    fn sequence(&self, tokens: &[String]) -> Vec<TokenId> {
        let mut seq = Vec::with_capacity(tokens.len() + self.config.order);
        seq.extend(std::iter::repeat_n(BOS_ID, self.context_len()));
        seq.extend(tokens.iter().map(|t| self.vocab.id(t)));
        if self.config.markers {
            seq.push(EOS_ID);
        }
        seq
    }

    pub fn config(&self) -> &LmConfig {
        &self.config
    }

    pub fn order(&self) -> usize {
        self.config.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Ids of every predictable event.
    pub fn event_ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        let markers = self.config.markers;
        (0..self.vocab.len() as TokenId)
            .filter(move |&id| id != BOS_ID && (markers || id != EOS_ID))
    }

    fn event_space(&self) -> f64 {
        self.event_ids().count() as f64
    }

    /// Histories observed in training, at every order.
    pub fn histories(&self) -> impl Iterator<Item = &[TokenId]> {
        self.tables.iter().flat_map(|t| t.keys().map(Vec::as_slice))
    }

    /// `P(word | history)`; only the last `order - 1` history ids are used.
    pub fn prob(&self, word: TokenId, history: &[TokenId]) -> f64 {
        let h = &history[history.len().saturating_sub(self.config.order - 1)..];
        let v = self.event_space();
        match self.config.smoothing {
            Smoothing::Mle => match self.tables[h.len()].get(h) {
                Some(c) if c.total > 0 => {
                    c.followers.get(&word).copied().unwrap_or(0) as f64 / c.total as f64
                }
                _ => 0.0,
            },
            Smoothing::AddK(k) => {
                let (count, total) = self.tables[h.len()].get(h).map_or((0, 0), |c| {
                    (c.followers.get(&word).copied().unwrap_or(0), c.total)
                });
                (count as f64 + k) / (total as f64 + k * v)
            }
            Smoothing::WittenBell => {
                let mut p = 1.0 / v;
                for k in 0..=h.len() {
                    if let Some(c) = self.tables[k].get(&h[h.len() - k..]) {
                        let types = c.followers.len() as f64;
                        let count = c.followers.get(&word).copied().unwrap_or(0) as f64;
                        p = (count + types * p) / (c.total as f64 + types);
                    }
                }
                p
            }
        }
    }

    /// Natural-log probability of a token sequence, including `</s>` when
    /// markers are on. `-inf` when some event has zero probability.
    pub fn log_prob(&self, tokens: &[String]) -> f64 {
        let seq = self.sequence(tokens);
        (self.context_len()..seq.len())
            .map(|i| self.prob(seq[i], &seq[..i]).ln())
            .sum()
    }

    /// Versioned text form: header, vocabulary, then raw event counts.
    ///
    /// ```text
    /// #subsel-lm v1 order=<n> smoothing=<s> markers=<bool> unk_floor=<n> words=<n> events=<n>
    /// w\t<token>
    /// e\t<space-joined history>\t<word>\t<count>
    /// ```
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let c = &self.config;
        writeln!(
            w,
            "#subsel-lm v1 order={} smoothing={} markers={} unk_floor={} words={} events={}",
            c.order,
            c.smoothing,
            c.markers,
            c.unk_floor,
            self.vocab.words().len(),
            self.events.len()
        )?;
        for word in self.vocab.words() {
            writeln!(w, "w\t{word}")?;
        }
        let mut events: Vec<_> = self.events.iter().collect();
        events.sort();
        for (gram, count) in events {
            let (word, history) = gram.split_last().expect("events are non-empty");
            let history: Vec<&str> = history.iter().map(|&t| self.vocab.token(t)).collect();
            writeln!(
                w,
                "e\t{}\t{}\t{count}",
                history.join(" "),
                self.vocab.token(*word)
            )?;
        }
        w.flush()
    }

    pub fn read_from<R: BufRead>(r: R, path: &Path) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let header = match lines.next() {
            Some((_, l)) => l.map_err(|e| Error::io(path, e))?,
            None => return Err(Error::parse(path, 1, "empty model file")),
        };
        let mut fields = header.split_whitespace();
        if fields.next() != Some("#subsel-lm") || fields.next() != Some("v1") {
            return Err(Error::parse(path, 1, "not a v1 language model file"));
        }
        let mut config = LmConfig::default();
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::parse(path, 1, format!("malformed header field `{field}`")))?;
            let bad = || Error::parse(path, 1, format!("bad value for {key}: `{value}`"));
            match key {
                "order" => config.order = value.parse().map_err(|_| bad())?,
                "smoothing" => config.smoothing = value.parse().map_err(|_| bad())?,
                "markers" => config.markers = value.parse().map_err(|_| bad())?,
                "unk_floor" => config.unk_floor = value.parse().map_err(|_| bad())?,
                "words" | "events" => {}
                _ => return Err(Error::parse(path, 1, format!("unknown header key `{key}`"))),
            }
        }
        config.validate()?;

        let mut words = Vec::new();
        let mut raw_events = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            let lineno = i + 1;
            let parts: Vec<&str> = line.split('\t').collect();
            match parts.as_slice() {
                ["w", token] => words.push(token.to_string()),
                ["e", history, word, count] => {
                    let count: u64 = count
                        .parse()
                        .map_err(|_| Error::parse(path, lineno, "invalid event count"))?;
                    raw_events.push((lineno, history.to_string(), word.to_string(), count));
                }
                _ => return Err(Error::parse(path, lineno, "unrecognized record")),
            }
        }
        let vocab = Vocabulary::from_sorted_words(words);
        let mut events = HashMap::new();
        for (lineno, history, word, count) in raw_events {
            let mut gram: Vec<TokenId> = history
                .split(' ')
                .filter(|t| !t.is_empty())
                .map(|t| vocab.id(t))
                .collect();
            gram.push(vocab.id(&word));
            if gram.len() > config.order {
                return Err(Error::parse(path, lineno, "event longer than model order"));
            }
            events.insert(gram, count);
        }
        let mut model = NgramLanguageModel {
            config,
            vocab,
            events,
            tables: Vec::new(),
        };
        model.rebuild_tables();
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file), path)
    }
}

/// Train in-domain and out-of-domain models over one shared vocabulary.
pub fn train_pair(
    in_domain: &Corpus,
    out_domain: &Corpus,
    config: LmConfig,
) -> Result<(NgramLanguageModel, NgramLanguageModel)> {
    let vocab = Vocabulary::build(&[in_domain, out_domain], config.unk_floor);
    Ok((
        NgramLanguageModel::train_with_vocab(in_domain, config, vocab.clone())?,
        NgramLanguageModel::train_with_vocab(out_domain, config, vocab)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tokenizer;

    fn corpus(lines: &[&str]) -> Corpus {
        Corpus::parse(&lines.join("\n"), None, Tokenizer::Whitespace)
            .unwrap()
            .0
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn unigram_mle_counts_end_marker() {
        let lm = NgramLanguageModel::train(&corpus(&["a b"]), LmConfig::new(1, Smoothing::Mle))
            .unwrap();
        let v = lm.vocab();
        for t in ["a", "b", EOS] {
            assert!((lm.prob(v.id(t), &[]) - 1.0 / 3.0).abs() < 1e-12, "{t}");
        }
        assert_eq!(lm.prob(v.id(UNK), &[]), 0.0);
    }

    #[test]
    fn add_one_unigram() {
        let lm = NgramLanguageModel::train(&corpus(&["a"]), LmConfig::new(1, Smoothing::AddK(1.0)))
            .unwrap();
        assert_eq!(lm.event_ids().count(), 3);
        assert!((lm.prob(lm.vocab().id("a"), &[]) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn log_prob_without_markers() {
        let lm = NgramLanguageModel::train(
            &corpus(&["a a a a b"]),
            LmConfig::new(1, Smoothing::Mle).markers(false),
        )
        .unwrap();
        let lp = lm.log_prob(&toks("a a"));
        assert!((lp - 2.0 * 0.8f64.ln()).abs() < 1e-12);
        assert!((lp - -0.446_287_102_628_419_5).abs() < 1e-12);
        assert!(lm.log_prob(&toks("a a a")) < lp);
        assert_eq!(lm.log_prob(&[]), 0.0);
    }

    #[test]
    fn empty_sequence_scores_end_marker_only() {
        let lm = NgramLanguageModel::train(&corpus(&["a b"]), LmConfig::new(2, Smoothing::WittenBell))
            .unwrap();
        let expected = lm.prob(EOS_ID, &[BOS_ID]).ln();
        assert_eq!(lm.log_prob(&[]), expected);
    }

    #[test]
    fn mle_unseen_event_is_negative_infinity() {
        let lm = NgramLanguageModel::train(&corpus(&["a b"]), LmConfig::new(2, Smoothing::Mle))
            .unwrap();
        assert_eq!(lm.log_prob(&toks("b a")), f64::NEG_INFINITY);
        assert!(lm.log_prob(&toks("a b")).is_finite());
    }

    #[test]
    fn order_zero_is_config_error() {
        let err = NgramLanguageModel::train(&corpus(&["a"]), LmConfig::new(0, Smoothing::Mle))
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn smoothed_models_are_positive_and_normalized() {
        let c = corpus(&["a b c a", "b b a", "c"]);
        for smoothing in [Smoothing::AddK(0.5), Smoothing::WittenBell] {
            for order in 1..=3 {
                let lm = NgramLanguageModel::train(&c, LmConfig::new(order, smoothing)).unwrap();
                let hist: Vec<Vec<TokenId>> = lm.histories().map(<[_]>::to_vec).collect();
                for h in hist.iter().chain([&vec![7, 7]]) {
                    let total: f64 = lm.event_ids().map(|w| lm.prob(w, h)).sum();
                    assert!((total - 1.0).abs() < 1e-9, "{smoothing} order {order}");
                    assert!(lm.event_ids().all(|w| lm.prob(w, h) > 0.0));
                }
            }
        }
    }

    #[test]
    fn shared_vocabulary_maps_oov_to_unk() {
        let (lin, lout) = train_pair(
            &corpus(&["a b"]),
            &corpus(&["c d"]),
            LmConfig::new(2, Smoothing::WittenBell),
        )
        .unwrap();
        assert_eq!(lin.vocab(), lout.vocab());
        assert_ne!(lin.vocab().id("c"), UNK_ID);
        assert_eq!(lin.vocab().id("zzz"), UNK_ID);
    }

    #[test]
    fn frequency_floor() {
        let v = Vocabulary::build(&[&corpus(&["a a b"])], 2);
        assert_eq!(v.words(), &["a".to_string()]);
        assert_eq!(v.id("b"), UNK_ID);
    }

    #[test]
    fn file_round_trip() {
        let c = corpus(&["a b c a", "b b a"]);
        for markers in [true, false] {
            let lm = NgramLanguageModel::train(
                &c,
                LmConfig::new(3, Smoothing::AddK(0.25)).markers(markers),
            )
            .unwrap();
            let mut buf = Vec::new();
            lm.write_to(&mut buf).unwrap();
            let back = NgramLanguageModel::read_from(&buf[..], Path::new("mem")).unwrap();
            assert_eq!(back, lm);
            let mut again = Vec::new();
            back.write_to(&mut again).unwrap();
            assert_eq!(again, buf);
        }
    }

    #[test]
    fn parse_smoothing() {
        assert_eq!("mle".parse::<Smoothing>().unwrap(), Smoothing::Mle);
        assert_eq!("add-k:0.5".parse::<Smoothing>().unwrap(), Smoothing::AddK(0.5));
        assert_eq!("witten-bell".parse::<Smoothing>().unwrap(), Smoothing::WittenBell);
        assert!("add-k:-1".parse::<Smoothing>().is_err());
        assert!("kneser-ney".parse::<Smoothing>().is_err());
    }
}
