//! Feature-based submodular objective `f(X) = Σ_u w_u φ(Σ_{x∈X} m_u(x))`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::{FeatureSet, FeatureVector};

/// A non-negative, non-decreasing concave function with `φ(0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Concave {
    /// `t^α` with `α ∈ (0, 1]`.
    Power(f64),
    /// `ln(1 + t)`.
    Log1p,
}

impl Default for Concave {
    fn default() -> Self {
        Concave::Power(0.5)
    }
}

impl Concave {
    pub fn power(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Concave::Power(alpha))
        } else {
            Err(Error::Config(format!(
                "power exponent must lie in (0, 1], got {alpha}"
            )))
        }
    }

    #[inline]
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Concave::Power(0.5) => t.sqrt(),
            Concave::Power(1.0) => t,
            Concave::Power(a) => t.powf(a),
            Concave::Log1p => t.ln_1p(),
        }
    }
}

impl FromStr for Concave {
    type Err = Error;

    /// Accepts `sqrt`, `log1p`, `linear`, `power:<α>` or a bare exponent.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt" => Ok(Concave::Power(0.5)),
            "log1p" => Ok(Concave::Log1p),
            "linear" => Ok(Concave::Power(1.0)),
            other => {
                let alpha = other.strip_prefix("power:").unwrap_or(other);
                let alpha = alpha
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("unknown concave function `{s}`")))?;
                Concave::power(alpha)
            }
        }
    }
}

impl fmt::Display for Concave {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concave::Power(a) => write!(f, "power:{a}"),
            Concave::Log1p => f.write_str("log1p"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Objective {
    weights: Vec<f64>,
    phi: Concave,
}

impl Objective {
    pub fn new(features: &FeatureSet, phi: Concave) -> Self {
        Self::from_weights(features.weights(), phi)
    }

    /// Weights are indexed by feature id and must be non-negative.
    pub fn from_weights(weights: Vec<f64>, phi: Concave) -> Self {
        debug_assert!(weights.iter().all(|w| *w >= 0.0));
        Objective { weights, phi }
    }

    pub fn phi(&self) -> Concave {
        self.phi
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_features(&self) -> usize {
        self.weights.len()
    }

    /// `Σ_u w_u φ(mass[u])`.
    pub fn evaluate_mass(&self, mass: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(mass)
            .filter(|(_, m)| **m > 0.0)
            .map(|(w, m)| w * self.phi.apply(*m))
            .sum()
    }

    /// Accumulated per-feature mass of a set of vectors.
    pub fn mass_of<'a, I>(&self, vectors: I) -> Vec<f64>
    where
        I: IntoIterator<Item = &'a FeatureVector>,
    {
        let mut mass = vec![0.0; self.weights.len()];
        for v in vectors {
            for &(u, m) in v.entries() {
                mass[u as usize] += m;
            }
        }
        mass
    }

    /// `f(X)` computed from scratch.
    pub fn evaluate<'a, I>(&self, vectors: I) -> f64
    where
        I: IntoIterator<Item = &'a FeatureVector>,
    {
        self.evaluate_mass(&self.mass_of(vectors))
    }

    /// `f(v | X)` given the accumulated mass of `X`; touches only `v`'s support.
    ///
    /// Per-feature terms are summed in ascending order so that candidates
    /// whose terms form the same multiset get bit-identical gains.
    pub fn gain(&self, v: &FeatureVector, mass: &[f64]) -> f64 {
        let term = |&(u, m): &(u32, f64)| {
            let before = mass[u as usize];
            self.weights[u as usize] * (self.phi.apply(before + m) - self.phi.apply(before))
        };
        match v.entries() {
            [] => 0.0,
            [only] => term(only),
            entries => {
                let mut terms: Vec<f64> = entries.iter().map(term).collect();
                terms.sort_unstable_by(f64::total_cmp);
                terms.iter().sum()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn fv(pairs: &[(u32, f64)]) -> FeatureVector {
        FeatureVector::from_pairs(pairs.iter().copied())
    }

    #[test]
    fn empty_set_is_zero() {
        let obj = Objective::from_weights(vec![1.0; 3], Concave::default());
        assert_eq!(obj.evaluate(std::iter::empty()), 0.0);
    }

    #[test]
    fn hand_evaluations() {
        let obj = Objective::from_weights(vec![1.0, 1.0], Concave::Power(0.5));
        let a = fv(&[(0, 4.0)]);
        assert!((obj.evaluate([&a, &a]) - 8f64.sqrt()).abs() < 1e-12);
        let b = fv(&[(0, 4.0), (1, 9.0)]);
        assert!((obj.evaluate([&b]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn gain_hand_values() {
        let obj = Objective::from_weights(vec![1.0], Concave::Power(0.5));
        let v = fv(&[(0, 4.0)]);
        assert_eq!(obj.gain(&v, &[0.0]), 2.0);
        assert!((obj.gain(&v, &[4.0]) - (8f64.sqrt() - 2.0)).abs() < 1e-12);
        assert_eq!(obj.gain(&FeatureVector::default(), &[4.0]), 0.0);
    }

    #[test]
    fn parse_concave() {
        assert_eq!("sqrt".parse::<Concave>().unwrap(), Concave::Power(0.5));
        assert_eq!("power:0.25".parse::<Concave>().unwrap(), Concave::Power(0.25));
        assert_eq!("log1p".parse::<Concave>().unwrap(), Concave::Log1p);
        assert!("power:1.5".parse::<Concave>().is_err());
        assert!("power:0".parse::<Concave>().is_err());
        assert!("cubic".parse::<Concave>().is_err());
    }

    #[test]
    fn concave_shape_by_sampling() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let phis = [
            Concave::Power(0.5),
            Concave::Power(0.1),
            Concave::Power(1.0),
            Concave::Power(0.73),
            Concave::Log1p,
        ];
        for phi in phis {
            assert_eq!(phi.apply(0.0), 0.0);
            for _ in 0..2000 {
                let t: f64 = rng.gen_range(0.0..100.0);
                let d: f64 = rng.gen_range(1e-3..10.0);
                let (a, b, c) = (phi.apply(t), phi.apply(t + d), phi.apply(t + 2.0 * d));
                assert!(b >= a, "{phi} decreasing at {t}");
                assert!(c - b <= b - a + 1e-12, "{phi} not concave at {t}, {d}");
            }
        }
    }
}
