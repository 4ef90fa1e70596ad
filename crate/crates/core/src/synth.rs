//! Seeded synthetic corpora for tests, benchmarks and the demo.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::corpus::Corpus;

/// Zipf-distributed token sampler over `w0, w1, ...`.
#[derive(Clone, Debug)]
pub struct ZipfVocab {
    names: Vec<String>,
    cdf: Vec<f64>,
}

impl ZipfVocab {
    pub fn new(size: usize, exponent: f64, prefix: &str) -> Self {
        let mut cdf = Vec::with_capacity(size);
        let mut acc = 0.0;
        for rank in 1..=size {
            acc += 1.0 / (rank as f64).powf(exponent);
            cdf.push(acc);
        }
        cdf.iter_mut().for_each(|c| *c /= acc);
        ZipfVocab {
            names: (0..size).map(|i| format!("{prefix}{i}")).collect(),
            cdf,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> String {
        let u: f64 = rng.gen();
        let i = self.cdf.partition_point(|c| *c < u).min(self.names.len() - 1);
        self.names[i].clone()
    }

    pub fn sentence<R: Rng>(&self, rng: &mut R, min_len: usize, max_len: usize) -> Vec<String> {
        let len = rng.gen_range(min_len..=max_len);
        (0..len).map(|_| self.sample(rng)).collect()
    }
}

pub fn zipf_corpus(seed: u64, sentences: usize, vocab: &ZipfVocab, min_len: usize, max_len: usize) -> Corpus {
    let mut rng = StdRng::seed_from_u64(seed);
    Corpus::from_tokens((0..sentences).map(|_| vocab.sentence(&mut rng, min_len, max_len)))
        .expect("min_len >= 1 and sentences >= 1")
}

/// Small random corpus over the alphabet `a, b, c, ...` with uniform tokens.
pub fn small_corpus<R: Rng>(rng: &mut R, sentences: usize, alphabet: usize, max_len: usize) -> Corpus {
    let letters: Vec<String> = (0..alphabet)
        .map(|i| char::from(b'a' + (i % 26) as u8).to_string())
        .collect();
    Corpus::from_tokens((0..sentences.max(1)).map(|_| {
        let len = rng.gen_range(1..=max_len.max(1));
        (0..len)
            .map(|_| letters[rng.gen_range(0..letters.len())].clone())
            .collect()
    }))
    .expect("non-empty by construction")
}
