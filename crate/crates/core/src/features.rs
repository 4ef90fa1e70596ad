//! N-gram feature universe and tf-idf relevance scores.
//!
//! The universe is every contiguous n-gram (orders `1..=max_order`) of an
//! in-domain sample. Each ground-set sentence is treated as a document when
//! computing inverse document frequencies, and a sentence's relevance for a
//! feature is its (overlapping) occurrence count times the feature's idf.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::{Corpus, Sentence};
use crate::error::{Error, Result};

pub type Ngram = Vec<String>;

/// Index of a feature inside its [`FeatureSet`].
pub type FeatureId = u32;

/// All contiguous n-grams of `tokens` with order in `1..=max_order`, shortest
/// order first.
pub fn ngrams(tokens: &[String], max_order: usize) -> impl Iterator<Item = &[String]> {
    (1..=max_order.min(tokens.len())).flat_map(move |n| tokens.windows(n))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WeightScheme {
    /// Every feature weighs 1.
    #[default]
    Uniform,
    /// A feature weighs its occurrence count in the in-domain sample.
    InDomainFrequency,
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(WeightScheme::Uniform),
            "in-domain-frequency" | "frequency" => Ok(WeightScheme::InDomainFrequency),
            other => Err(Error::Config(format!(
                "unknown feature weighting `{other}` (expected uniform or in-domain-frequency)"
            ))),
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightScheme::Uniform => "uniform",
            WeightScheme::InDomainFrequency => "in-domain-frequency",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureInfo {
    pub weight: f64,
    /// Number of ground-set sentences containing the feature.
    pub doc_freq: usize,
    /// `ln(|V| / doc_freq)`; `None` before fitting or when `doc_freq == 0`.
    pub idf: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct FeatureSet {
    max_order: usize,
    ngrams: Vec<Ngram>,
    info: Vec<FeatureInfo>,
    index: HashMap<Ngram, FeatureId>,
    ground_size: Option<usize>,
}

impl PartialEq for FeatureSet {
    fn eq(&self, other: &Self) -> bool {
        self.max_order == other.max_order
            && self.ground_size == other.ground_size
            && self.ngrams == other.ngrams
            && self.info == other.info
    }
}

const HEADER_MAGIC: &str = "#subsel-features";
const FORMAT_VERSION: &str = "v1";

impl FeatureSet {
    /// Collect every n-gram of the in-domain sample up to `max_order`.
    pub fn extract(in_domain: &Corpus, max_order: usize, scheme: WeightScheme) -> Result<Self> {
        if max_order < 1 {
            return Err(Error::Config("max_order must be at least 1".into()));
        }
        if in_domain.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut counts: HashMap<&[String], usize> = HashMap::new();
        for sentence in in_domain {
            for gram in ngrams(&sentence.source, max_order) {
                *counts.entry(gram).or_default() += 1;
            }
        }
        let mut entries: Vec<(Ngram, f64)> = counts
            .into_iter()
            .map(|(gram, count)| {
                let weight = match scheme {
                    WeightScheme::Uniform => 1.0,
                    WeightScheme::InDomainFrequency => count as f64,
                };
                (gram.to_vec(), weight)
            })
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let (ngrams, weights): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        Ok(Self::assemble(
            max_order,
            ngrams,
            weights
                .into_iter()
                .map(|weight| FeatureInfo {
                    weight,
                    doc_freq: 0,
                    idf: None,
                })
                .collect(),
            None,
        ))
    }

    fn assemble(
        max_order: usize,
        ngrams: Vec<Ngram>,
        info: Vec<FeatureInfo>,
        ground_size: Option<usize>,
    ) -> Self {
        let index = ngrams
            .iter()
            .enumerate()
            .map(|(i, g)| (g.clone(), i as FeatureId))
            .collect();
        FeatureSet {
            max_order,
            ngrams,
            info,
            index,
            ground_size,
        }
    }

    /// Compute document frequencies and idf values against `ground`.
    pub fn fit_idf(mut self, ground: &Corpus) -> Result<Self> {
        if ground.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let n_features = self.ngrams.len();
        let doc_freq = ground
            .sentences()
            .par_chunks(4096)
            .map(|chunk| {
                let mut df = vec![0usize; n_features];
                let mut seen = Vec::new();
                for sentence in chunk {
                    seen.clear();
                    seen.extend(self.feature_ids(&sentence.source));
                    seen.sort_unstable();
                    seen.dedup();
                    for &f in &seen {
                        df[f as usize] += 1;
                    }
                }
                df
            })
            .reduce(
                || vec![0usize; n_features],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        let v = ground.len() as f64;
        for (info, df) in self.info.iter_mut().zip(doc_freq) {
            info.doc_freq = df;
            info.idf = (df > 0).then(|| (v / df as f64).ln());
        }
        self.ground_size = Some(ground.len());
        Ok(self)
    }

    /// Ids of every feature occurrence in `tokens`, with repetition.
    fn feature_ids<'a>(&'a self, tokens: &'a [String]) -> impl Iterator<Item = FeatureId> + 'a {
        ngrams(tokens, self.max_order).filter_map(|g| self.index.get(g).copied())
    }

    /// The tf-idf relevance vector of one sentence.
    pub fn featurize(&self, sentence: &Sentence) -> Result<FeatureVector> {
        self.featurize_tokens(&sentence.source)
    }

    pub fn featurize_tokens(&self, tokens: &[String]) -> Result<FeatureVector> {
        if !self.is_fitted() {
            return Err(Error::State(
                "feature set has no idf values; fit it against a ground set first".into(),
            ));
        }
        let mut ids: Vec<FeatureId> = self.feature_ids(tokens).collect();
        ids.sort_unstable();
        let mut entries = Vec::new();
        for run in ids.chunk_by(|a, b| a == b) {
            let id = run[0];
            if let Some(idf) = self.info[id as usize].idf {
                let score = run.len() as f64 * idf;
                if score > 0.0 {
                    entries.push((id, score));
                }
            }
        }
        Ok(FeatureVector { entries })
    }

    /// Featurize every sentence of `corpus`, in id order.
    pub fn featurize_corpus(&self, corpus: &Corpus) -> Result<Vec<FeatureVector>> {
        corpus
            .sentences()
            .par_iter()
            .map(|s| self.featurize(s))
            .collect()
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn ground_size(&self) -> Option<usize> {
        self.ground_size
    }

    pub fn is_fitted(&self) -> bool {
        self.ground_size.is_some()
    }

    pub fn len(&self) -> usize {
        self.ngrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngrams.is_empty()
    }

    pub fn id_of(&self, gram: &[String]) -> Option<FeatureId> {
        self.index.get(gram).copied()
    }

    pub fn ngram(&self, id: FeatureId) -> &[String] {
        &self.ngrams[id as usize]
    }

    pub fn info(&self, id: FeatureId) -> &FeatureInfo {
        &self.info[id as usize]
    }

    pub fn get(&self, gram: &[String]) -> Option<&FeatureInfo> {
        self.id_of(gram).map(|id| self.info(id))
    }

    /// Per-feature weights indexed by [`FeatureId`].
    pub fn weights(&self) -> Vec<f64> {
        self.info.iter().map(|i| i.weight).collect()
    }

    /// Number of features that occur somewhere in the fitted ground set.
    pub fn coverable(&self) -> usize {
        self.info.iter().filter(|i| i.doc_freq > 0).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[String], &FeatureInfo)> {
        self.ngrams.iter().map(Vec::as_slice).zip(&self.info)
    }

    /// Write the versioned flat-file representation.
    ///
    /// ```text
    /// #subsel-features v1 max_order=<n> ground_size=<|V| or -> count=<|U|>
    /// <space-joined n-gram>\t<weight>\t<doc_freq>
    /// ```
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let ground = self
            .ground_size
            .map_or_else(|| "-".to_string(), |g| g.to_string());
        writeln!(
            w,
            "{HEADER_MAGIC} {FORMAT_VERSION} max_order={} ground_size={ground} count={}",
            self.max_order,
            self.len()
        )?;
        for (gram, info) in self.iter() {
            writeln!(w, "{}\t{}\t{}", gram.join(" "), info.weight, info.doc_freq)?;
        }
        w.flush()
    }

    pub fn read_from<R: BufRead>(r: R, path: &Path) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
            None => return Err(Error::parse(path, 1, "empty feature file")),
        };
        let mut fields = header.split_whitespace();
        if fields.next() != Some(HEADER_MAGIC) || fields.next() != Some(FORMAT_VERSION) {
            return Err(Error::parse(path, 1, "not a v1 feature file"));
        }
        let (mut max_order, mut ground_size, mut count) = (None, None, None);
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::parse(path, 1, format!("malformed header field `{field}`")))?;
            let bad = || Error::parse(path, 1, format!("bad value for {key}: `{value}`"));
            match key {
                "max_order" => max_order = Some(value.parse::<usize>().map_err(|_| bad())?),
                "ground_size" => {
                    ground_size = Some(match value {
                        "-" => None,
                        v => Some(v.parse::<usize>().map_err(|_| bad())?),
                    })
                }
                "count" => count = Some(value.parse::<usize>().map_err(|_| bad())?),
                _ => return Err(Error::parse(path, 1, format!("unknown header key `{key}`"))),
            }
        }
        let (Some(max_order), Some(ground_size), Some(count)) = (max_order, ground_size, count)
        else {
            return Err(Error::parse(path, 1, "header is missing a field"));
        };

        let mut ngrams = Vec::with_capacity(count);
        let mut info = Vec::with_capacity(count);
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            let lineno = i + 1;
            let mut parts = line.split('\t');
            let (Some(gram), Some(weight), Some(df), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(Error::parse(path, lineno, "expected 3 tab-separated fields"));
            };
            let gram: Ngram = gram.split(' ').map(str::to_owned).collect();
            if gram.is_empty() || gram.len() > max_order || gram.iter().any(String::is_empty) {
                return Err(Error::parse(path, lineno, "invalid n-gram"));
            }
            let weight: f64 = weight
                .parse()
                .ok()
                .filter(|w: &f64| w.is_finite() && *w >= 0.0)
                .ok_or_else(|| Error::parse(path, lineno, "weight must be a non-negative number"))?;
            let doc_freq: usize = df
                .parse()
                .map_err(|_| Error::parse(path, lineno, "invalid doc_freq"))?;
            let idf = match ground_size {
                Some(v) if doc_freq > 0 => {
                    if doc_freq > v {
                        return Err(Error::parse(path, lineno, "doc_freq exceeds ground size"));
                    }
                    Some((v as f64 / doc_freq as f64).ln())
                }
                _ => None,
            };
            if let Some(prev) = ngrams.last() {
                if *prev >= gram {
                    return Err(Error::parse(path, lineno, "records are not in sorted order"));
                }
            }
            ngrams.push(gram);
            info.push(FeatureInfo {
                weight,
                doc_freq,
                idf,
            });
        }
        if ngrams.len() != count {
            return Err(Error::parse(
                path,
                1,
                format!("header announces {count} features, found {}", ngrams.len()),
            ));
        }
        Ok(Self::assemble(max_order, ngrams, info, ground_size))
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

/// `extract` with uniform weights.
pub fn extract_feature_set(in_domain: &Corpus, max_order: usize) -> Result<FeatureSet> {
    FeatureSet::extract(in_domain, max_order, WeightScheme::Uniform)
}

/// Sparse, strictly positive relevance scores of one sentence, sorted by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureVector {
    entries: Vec<(FeatureId, f64)>,
}

impl FeatureVector {
    /// Build from arbitrary `(id, score)` pairs; duplicate ids are summed and
    /// non-positive scores dropped.
    pub fn from_pairs<I: IntoIterator<Item = (FeatureId, f64)>>(pairs: I) -> Self {
        let mut entries: Vec<_> = pairs.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(FeatureId, f64)> = Vec::with_capacity(entries.len());
        for (id, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == id => last.1 += v,
                _ => merged.push((id, v)),
            }
        }
        merged.retain(|e| e.1 > 0.0);
        FeatureVector { entries: merged }
    }

    pub fn entries(&self) -> &[(FeatureId, f64)] {
        &self.entries
    }

    pub fn get(&self, id: FeatureId) -> f64 {
        self.entries
            .binary_search_by_key(&id, |e| e.0)
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
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

    fn g(s: &str) -> Ngram {
        s.split(' ').map(str::to_owned).collect()
    }

    #[test]
    fn extracts_all_ngrams_with_unit_weight() {
        let fs = extract_feature_set(&corpus(&["a b"]), 2).unwrap();
        let keys: Vec<String> = fs.iter().map(|(k, _)| k.join(" ")).collect();
        assert_eq!(keys, vec!["a", "a b", "b"]);
        assert!(fs.iter().all(|(_, i)| i.weight == 1.0 && i.idf.is_none()));
        assert!(!fs.is_fitted());
    }

    #[test]
    fn duplicate_ngrams_collapse() {
        let fs = extract_feature_set(&corpus(&["a a"]), 1).unwrap();
        assert_eq!(fs.len(), 1);
        assert!(fs.get(&g("a")).is_some());
    }

    #[test]
    fn order_seven_cap() {
        let fs = extract_feature_set(&corpus(&["a b c d e f g h i j"]), 7).unwrap();
        assert!(fs.iter().all(|(k, _)| (1..=7).contains(&k.len())));
        // 10 + 9 + ... + 4 windows, all distinct.
        assert_eq!(fs.len(), (4..=10).sum::<usize>());
    }

    #[test]
    fn zero_order_is_rejected() {
        assert!(matches!(
            extract_feature_set(&corpus(&["a"]), 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn frequency_weighting() {
        let fs = FeatureSet::extract(&corpus(&["a a b", "a"]), 1, WeightScheme::InDomainFrequency)
            .unwrap();
        assert_eq!(fs.get(&g("a")).unwrap().weight, 3.0);
        assert_eq!(fs.get(&g("b")).unwrap().weight, 1.0);
    }

    #[test]
    fn idf_hand_values() {
        // u = "a" in 3 of 4, "b" in 2 of 4, "c" in 1 of 4, "d" in 4 of 4.
        let fs = extract_feature_set(&corpus(&["a b c d"]), 1)
            .unwrap()
            .fit_idf(&corpus(&["a b c d", "a b d", "a d", "d d"]))
            .unwrap();
        let idf = |s: &str| fs.get(&g(s)).unwrap().idf.unwrap();
        assert!((idf("a") - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((idf("b") - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((idf("c") - 1.386_294_361_119_890_6).abs() < 1e-12);
        assert_eq!(idf("d"), 0.0);
        assert_eq!(fs.get(&g("d")).unwrap().doc_freq, 4);
    }

    #[test]
    fn absent_features_have_no_idf_and_no_relevance() {
        let fs = extract_feature_set(&corpus(&["a z"]), 1)
            .unwrap()
            .fit_idf(&corpus(&["a b", "b"]))
            .unwrap();
        let z = fs.get(&g("z")).unwrap();
        assert_eq!(z.doc_freq, 0);
        assert!(z.idf.is_none());
        assert_eq!(fs.coverable(), 1);
    }

    #[test]
    fn featurize_hand_values() {
        let fs = extract_feature_set(&corpus(&["a"]), 1)
            .unwrap()
            .fit_idf(&corpus(&["a b", "a", "a c", "c"]))
            .unwrap();
        let v = fs.featurize_tokens(&g("a b")).unwrap();
        assert_eq!(v.len(), 1);
        assert!((v.entries()[0].1 - 0.287_682_072_451_780_9).abs() < 1e-12);
        assert!(fs.featurize_tokens(&g("q r")).unwrap().is_empty());
    }

    #[test]
    fn overlapping_counts() {
        let fs = extract_feature_set(&corpus(&["a a"]), 2)
            .unwrap()
            .fit_idf(&corpus(&["a a", "b", "b", "b"]))
            .unwrap();
        let v = fs.featurize_tokens(&g("a a a")).unwrap();
        let aa = fs.id_of(&g("a a")).unwrap();
        let idf = fs.info(aa).idf.unwrap();
        assert!((v.get(aa) / idf - 2.0).abs() < 1e-12);
        let a = fs.id_of(&g("a")).unwrap();
        assert!((v.get(a) / fs.info(a).idf.unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn featurize_requires_fit() {
        let fs = extract_feature_set(&corpus(&["a"]), 1).unwrap();
        assert!(matches!(fs.featurize_tokens(&g("a")), Err(Error::State(_))));
    }

    #[test]
    fn file_format_round_trip_and_layout() {
        let fs = extract_feature_set(&corpus(&["b a", "c"]), 2)
            .unwrap()
            .fit_idf(&corpus(&["a b", "b a c", "c c"]))
            .unwrap();
        let mut buf = Vec::new();
        fs.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "#subsel-features v1 max_order=2 ground_size=3 count=4\n\
             a\t1\t2\n\
             b\t1\t2\n\
             b a\t1\t1\n\
             c\t1\t2\n"
        );
        let back = FeatureSet::read_from(&buf[..], Path::new("mem")).unwrap();
        assert_eq!(back, fs);
    }

    #[test]
    fn malformed_files_report_line() {
        let text = "#subsel-features v1 max_order=1 ground_size=2 count=1\na\tx\t1\n";
        let err = FeatureSet::read_from(text.as_bytes(), Path::new("f")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = FeatureSet::read_from("junk\n".as_bytes(), Path::new("f")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn idf_is_anti_monotone_in_doc_freq() {
        let v = 10usize;
        let idfs: Vec<f64> = (1..=v).map(|df| (v as f64 / df as f64).ln()).collect();
        assert!(idfs.windows(2).all(|w| w[0] > w[1]));
    }

    proptest::proptest! {
        #[test]
        fn tf_is_additive_over_repeats(reps in 1usize..6, sep in proptest::bool::ANY) {
            let fs = extract_feature_set(&corpus(&["x y"]), 2)
                .unwrap()
                .fit_idf(&corpus(&["x y", "z"]))
                .unwrap();
            // Repeating "x y" with a separator token adds exactly one occurrence each time.
            let mut tokens = Vec::new();
            for i in 0..reps {
                if i > 0 && sep { tokens.push("z".to_string()); }
                tokens.extend(g("x y"));
            }
            let v = fs.featurize_tokens(&tokens).unwrap();
            let xy = fs.id_of(&g("x y")).unwrap();
            let idf = fs.info(xy).idf.unwrap();
            proptest::prop_assert!((v.get(xy) - reps as f64 * idf).abs() < 1e-9);
            proptest::prop_assert!(v.entries().iter().all(|e| e.1 > 0.0));
        }
    }
}
