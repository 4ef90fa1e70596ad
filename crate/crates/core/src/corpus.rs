//! Line-aligned corpora: one sentence per line, UTF-8, optional target side.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How a raw line is split into tokens.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Tokenizer {
    /// Split on runs of Unicode whitespace.
    #[default]
    Whitespace,
    /// Whitespace splitting followed by Unicode lowercasing.
    LowercaseWhitespace,
}

impl Tokenizer {
    pub fn tokenize(self, line: &str) -> Vec<String> {
        match self {
            Tokenizer::Whitespace => line.split_whitespace().map(str::to_owned).collect(),
            Tokenizer::LowercaseWhitespace => {
                line.split_whitespace().map(str::to_lowercase).collect()
            }
        }
    }
}

impl FromStr for Tokenizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whitespace" => Ok(Tokenizer::Whitespace),
            "lowercase-whitespace" => Ok(Tokenizer::LowercaseWhitespace),
            other => Err(Error::Config(format!(
                "unknown tokenizer `{other}` (expected whitespace or lowercase-whitespace)"
            ))),
        }
    }
}

impl fmt::Display for Tokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tokenizer::Whitespace => "whitespace",
            Tokenizer::LowercaseWhitespace => "lowercase-whitespace",
        })
    }
}

/// Tokenize `line` with the tokenizer named by `tokenizer_id`.
pub fn tokenize(line: &str, tokenizer_id: &str) -> Result<Vec<String>> {
    Ok(tokenizer_id.parse::<Tokenizer>()?.tokenize(line))
}

/// The unit in which a sentence's selection cost is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CostMode {
    /// Number of source-side tokens.
    #[default]
    Words,
    /// Every sentence costs 1.
    Unit,
}

impl CostMode {
    pub fn cost(self, sentence: &Sentence) -> f64 {
        match self {
            CostMode::Words => sentence.cost as f64,
            CostMode::Unit => 1.0,
        }
    }
}

impl FromStr for CostMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "words" => Ok(CostMode::Words),
            "unit" | "sentences" => Ok(CostMode::Unit),
            other => Err(Error::Config(format!(
                "unknown cost mode `{other}` (expected words or unit)"
            ))),
        }
    }
}

impl fmt::Display for CostMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostMode::Words => "words",
            CostMode::Unit => "unit",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    /// Contiguous 0-based index within the corpus.
    pub id: usize,
    /// 1-based line number in the source file.
    pub line: usize,
    pub source: Vec<String>,
    pub target: Option<Vec<String>>,
    /// Number of source tokens; always at least 1.
    pub cost: usize,
}

impl Sentence {
    pub fn source_text(&self) -> String {
        self.source.join(" ")
    }

    pub fn target_text(&self) -> Option<String> {
        self.target.as_ref().map(|t| t.join(" "))
    }
}

/// An ordered, immutable collection of sentences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<Sentence>,
    parallel: bool,
}

/// Counts reported by the loader.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub lines: usize,
    pub sentences: usize,
    pub skipped_blank: usize,
}

impl Corpus {
    /// Build a corpus from tokenized source sides, assigning ids in order.
    pub fn from_tokens<I>(sources: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let sentences = sources
            .into_iter()
            .enumerate()
            .map(|(i, source)| Sentence {
                id: i,
                line: i + 1,
                cost: source.len(),
                source,
                target: None,
            })
            .collect();
        Corpus::new(sentences)
    }

    /// Validate and wrap sentences. Ids must be `0..n`, every sentence must be
    /// non-empty and the target side must be present on all or none.
    pub fn new(sentences: Vec<Sentence>) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let parallel = sentences[0].target.is_some();
        for (i, s) in sentences.iter().enumerate() {
            if s.id != i {
                return Err(Error::Precondition(format!(
                    "sentence at position {i} has id {}",
                    s.id
                )));
            }
            if s.source.is_empty() || s.cost != s.source.len() {
                return Err(Error::Precondition(format!(
                    "sentence {i} has cost {} for {} source tokens",
                    s.cost,
                    s.source.len()
                )));
            }
            if s.target.is_some() != parallel {
                return Err(Error::Precondition(format!(
                    "sentence {i} disagrees on the presence of a target side"
                )));
            }
        }
        Ok(Corpus {
            sentences,
            parallel,
        })
    }

    /// Parse in-memory text. `target`, when given, must have the same number
    /// of lines as `source`.
    pub fn parse(
        source: &str,
        target: Option<&str>,
        tokenizer: Tokenizer,
    ) -> Result<(Self, LoadStats)> {
        let src_lines: Vec<&str> = source.lines().collect();
        let tgt_lines: Option<Vec<&str>> = target.map(|t| t.lines().collect());
        if let Some(tgt) = &tgt_lines {
            if tgt.len() != src_lines.len() {
                return Err(Error::Alignment {
                    source_lines: src_lines.len(),
                    target_lines: tgt.len(),
                });
            }
        }

        let mut stats = LoadStats {
            lines: src_lines.len(),
            ..LoadStats::default()
        };
        let mut sentences = Vec::with_capacity(src_lines.len());
        for (i, line) in src_lines.iter().enumerate() {
            let src = tokenizer.tokenize(line);
            let tgt = tgt_lines.as_ref().map(|t| tokenizer.tokenize(t[i]));
            match (src.is_empty(), tgt.as_ref().map(Vec::is_empty)) {
                (true, None) | (true, Some(true)) => {
                    stats.skipped_blank += 1;
                    continue;
                }
                (true, Some(false)) => {
                    return Err(Error::OneSidedBlank {
                        line: i + 1,
                        side: "source",
                    })
                }
                (false, Some(true)) => {
                    return Err(Error::OneSidedBlank {
                        line: i + 1,
                        side: "target",
                    })
                }
                _ => {}
            }
            sentences.push(Sentence {
                id: sentences.len(),
                line: i + 1,
                cost: src.len(),
                source: src,
                target: tgt,
            });
        }
        stats.sentences = sentences.len();
        if stats.skipped_blank > 0 {
            log::warn!("skipped {} blank line(s)", stats.skipped_blank);
        }
        Ok((Corpus::new(sentences)?, stats))
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn is_parallel(&self) -> bool {
        self.parallel
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn get(&self, id: usize) -> Option<&Sentence> {
        self.sentences.get(id)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sentence> {
        self.sentences.iter()
    }

    /// Total source-token count.
    pub fn total_words(&self) -> usize {
        self.sentences.iter().map(|s| s.cost).sum()
    }

    pub fn total_cost(&self, mode: CostMode) -> f64 {
        self.sentences.iter().map(|s| mode.cost(s)).sum()
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Sentence;
    type IntoIter = std::slice::Iter<'a, Sentence>;

    fn into_iter(self) -> Self::IntoIter {
        self.sentences.iter()
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Load a corpus from a source file and an optional line-aligned target file.
pub fn load_corpus(
    source_path: &Path,
    target_path: Option<&Path>,
    tokenizer: Tokenizer,
) -> Result<(Corpus, LoadStats)> {
    let source = read_text(source_path)?;
    let target = target_path.map(read_text).transpose()?;
    let loaded = Corpus::parse(&source, target.as_deref(), tokenizer)?;
    log::info!(
        "{}: {} lines, {} sentences, {} skipped",
        source_path.display(),
        loaded.1.lines,
        loaded.1.sentences,
        loaded.1.skipped_blank
    );
    Ok(loaded)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn tokenizer_semantics() {
        assert_eq!(tokenize("A  b", "whitespace").unwrap(), toks(&["A", "b"]));
        assert_eq!(
            tokenize("A b", "lowercase-whitespace").unwrap(),
            toks(&["a", "b"])
        );
        assert!(tokenize("", "whitespace").unwrap().is_empty());
        assert!(tokenize(" \t\u{3000} ", "whitespace").unwrap().is_empty());
        assert!(matches!(tokenize("a", "bpe"), Err(Error::Config(_))));
    }

    #[test]
    fn monolingual_costs() {
        let (c, stats) = Corpus::parse("a b\nc\n", None, Tokenizer::Whitespace).unwrap();
        assert_eq!(c.len(), 2);
        assert!(!c.is_parallel());
        let costs: Vec<_> = c.iter().map(|s| s.cost).collect();
        assert_eq!(costs, vec![2, 1]);
        assert_eq!(c.total_words(), 3);
        assert_eq!(stats.skipped_blank, 0);
    }

    #[test]
    fn misaligned_files_name_both_counts() {
        let err = Corpus::parse("a\nb\nc\n", Some("x\ny\n"), Tokenizer::Whitespace).unwrap_err();
        assert!(err.to_string().contains("3 vs 2"), "{err}");
    }

    #[test]
    fn blank_on_both_sides_is_skipped() {
        let (c, stats) =
            Corpus::parse("a b\n\na\n", Some("x y\n\nz\n"), Tokenizer::Whitespace).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(stats.skipped_blank, 1);
        assert_eq!(c.get(1).unwrap().line, 3);
        assert_eq!(c.get(1).unwrap().id, 1);
        assert_eq!(c.get(1).unwrap().target_text().as_deref(), Some("z"));
    }

    #[test]
    fn blank_on_one_side_is_an_error() {
        let err = Corpus::parse("a\n\n", Some("x\ny\n"), Tokenizer::Whitespace).unwrap_err();
        assert!(matches!(err, Error::OneSidedBlank { line: 2, side: "source" }));
        let err = Corpus::parse("a\nb\n", Some("x\n \n"), Tokenizer::Whitespace).unwrap_err();
        assert!(matches!(err, Error::OneSidedBlank { line: 2, side: "target" }));
    }

    #[test]
    fn crlf_is_accepted() {
        let (c, _) = Corpus::parse("a b\r\nc\r\n", None, Tokenizer::Whitespace).unwrap();
        assert_eq!(c.get(0).unwrap().source, toks(&["a", "b"]));
        assert_eq!(c.get(1).unwrap().source, toks(&["c"]));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(
            Corpus::parse("\n  \n", None, Tokenizer::Whitespace),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_corpus(Path::new("/nonexistent/x.src"), None, Tokenizer::Whitespace)
            .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn unit_cost_mode() {
        let (c, _) = Corpus::parse("a b c\nd\n", None, Tokenizer::Whitespace).unwrap();
        assert_eq!(c.total_cost(CostMode::Words), 4.0);
        assert_eq!(c.total_cost(CostMode::Unit), 2.0);
    }

    proptest::proptest! {
        #[test]
        fn retokenizing_joined_tokens_is_idempotent(line in "[a-zA-Z \t\u{00a0}é]{0,40}") {
            let once = Tokenizer::Whitespace.tokenize(&line);
            let twice = Tokenizer::Whitespace.tokenize(&once.join(" "));
            proptest::prop_assert_eq!(once, twice);
        }

        #[test]
        fn loading_preserves_order_and_total_cost(lines in proptest::collection::vec("[a-c ]{0,12}", 1..20)) {
            let text = lines.join("\n");
            if let Ok((c, stats)) = Corpus::parse(&text, None, Tokenizer::Whitespace) {
                let kept: Vec<Vec<String>> = lines
                    .iter()
                    .map(|l| Tokenizer::Whitespace.tokenize(l))
                    .filter(|t| !t.is_empty())
                    .collect();
                let loaded: Vec<Vec<String>> = c.iter().map(|s| s.source.clone()).collect();
                proptest::prop_assert_eq!(&loaded, &kept);
                proptest::prop_assert_eq!(c.total_words(), kept.iter().map(Vec::len).sum::<usize>());
                proptest::prop_assert_eq!(stats.skipped_blank + stats.sentences, stats.lines);
            }
        }
    }
}
