//! Discrete noise alphabet, multinomial event statistics and candidate
//! enumeration.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;

const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// Coupling strengths `G_k = multiplier_k * g` with event probabilities `p_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAlphabet", into = "RawAlphabet")]
pub struct NoiseAlphabet {
    unit_shift: f64,
    multipliers: Vec<f64>,
    probabilities: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawAlphabet {
    unit_shift: f64,
    multipliers: Vec<f64>,
    probabilities: Vec<f64>,
}

impl TryFrom<RawAlphabet> for NoiseAlphabet {
    type Error = Error;
    fn try_from(raw: RawAlphabet) -> Result<Self> {
        NoiseAlphabet::new(raw.unit_shift, raw.multipliers, raw.probabilities)
    }
}

impl From<NoiseAlphabet> for RawAlphabet {
    fn from(a: NoiseAlphabet) -> Self {
        RawAlphabet {
            unit_shift: a.unit_shift,
            multipliers: a.multipliers,
            probabilities: a.probabilities,
        }
    }
}

impl NoiseAlphabet {
    pub fn new(unit_shift: f64, multipliers: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        let invalid = |m: &str| Err(Error::InvalidAlphabet(m.to_string()));
        if !(unit_shift.is_finite() && unit_shift > 0.0) {
            return invalid("unit shift must be positive and finite");
        }
        if multipliers.is_empty() {
            return invalid("alphabet is empty");
        }
        if multipliers.len() != probabilities.len() {
            return Err(Error::DimensionMismatch {
                expected: multipliers.len(),
                actual: probabilities.len(),
            });
        }
        if multipliers.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return invalid("multipliers must be finite and non-negative");
        }
        if multipliers.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("multipliers must be strictly increasing");
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return invalid("probabilities must be finite and non-negative");
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(Error::InvalidAlphabet(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self {
            unit_shift,
            multipliers,
            probabilities,
        })
    }

    /// The five-value alphabet `(0, g, 2g, 3g, 4g)`.
    pub fn equally_spaced(unit_shift: f64, probabilities: Vec<f64>) -> Result<Self> {
        let multipliers = (0..probabilities.len()).map(|k| k as f64).collect();
        Self::new(unit_shift, multipliers, probabilities)
    }

    pub fn unit_shift(&self) -> f64 {
        self.unit_shift
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.multipliers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multipliers.is_empty()
    }

    /// Physical coupling values `G_k`.
    pub fn values(&self) -> Vec<f64> {
        self.multipliers.iter().map(|m| m * self.unit_shift).collect()
    }

    pub fn with_probabilities(&self, probabilities: Vec<f64>) -> Result<Self> {
        Self::new(self.unit_shift, self.multipliers.clone(), probabilities)
    }

    pub fn with_unit_shift(&self, unit_shift: f64) -> Result<Self> {
        Self::new(unit_shift, self.multipliers.clone(), self.probabilities.clone())
    }

    /// Realization with the events of `indices` in the given order.
    pub fn realization(&self, indices: &[usize]) -> Result<ChannelRealization> {
        let values = self.values();
        let couplings = indices
            .iter()
            .map(|&k| {
                values.get(k).copied().ok_or(Error::DimensionMismatch {
                    expected: values.len(),
                    actual: k + 1,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ChannelRealization::new(couplings)
    }
}

/// Event multiplicities `n_1..n_D`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(Vec<u32>);

impl Configuration {
    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn from_event_indices(indices: &[usize], dimension: usize) -> Result<Self> {
        let mut counts = vec![0u32; dimension];
        for &k in indices {
            *counts.get_mut(k).ok_or(Error::DimensionMismatch {
                expected: dimension,
                actual: k + 1,
            })? += 1;
        }
        Ok(Self(counts))
    }

    /// Event indices in canonical (ascending) order.
    pub fn event_indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(k, &n)| std::iter::repeat_n(k, n as usize))
            .collect()
    }

    /// The realization listing every event of the multiset in canonical order.
    pub fn realization(&self, alphabet: &NoiseAlphabet) -> Result<ChannelRealization> {
        if self.len() != alphabet.len() {
            return Err(Error::DimensionMismatch {
                expected: alphabet.len(),
                actual: self.len(),
            });
        }
        alphabet.realization(&self.event_indices())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for Configuration {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        inner
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidAlphabet(format!("cannot parse configuration {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Configuration)
    }
}

/// `n` i.i.d. event indices drawn with the alphabet's probabilities.
pub fn sample_event_indices<R: Rng + ?Sized>(alphabet: &NoiseAlphabet, n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::EmptyRealization);
    }
    let dist = WeightedIndex::new(alphabet.probabilities()).map_err(|e| Error::InvalidAlphabet(e.to_string()))?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

pub fn sample_realization(alphabet: &NoiseAlphabet, n: usize, seed: u64) -> Result<ChannelRealization> {
    let indices = sample_event_indices(alphabet, n, &mut rng_from_seed(seed))?;
    alphabet.realization(&indices)
}

/// All count vectors of length `dimension` summing to `n`, in ascending
/// lexicographic order. The position in this list is the candidate index.
pub fn enumerate_configurations(dimension: usize, n: u32) -> Vec<Configuration> {
    fn fill(prefix: &mut Vec<u32>, slots: usize, remaining: u32, out: &mut Vec<Configuration>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(Configuration(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in 0..=remaining {
            prefix.push(first);
            fill(prefix, slots - 1, remaining - first, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dimension == 0 {
        return out;
    }
    fill(&mut Vec::with_capacity(dimension), dimension, n, &mut out);
    out
}

/// `C(n + k, k)` computed exactly in integers while it fits.
pub fn candidate_count(dimension: usize, n: u32) -> u64 {
    if dimension == 0 {
        return 0;
    }
    let k = (dimension - 1) as u64;
    let mut result = 1u64;
    for i in 1..=k {
        result = result * (n as u64 + i) / i;
    }
    result
}

/// Multinomial probability `N! / prod n_k! * prod p_k^{n_k}`.
pub fn multinomial_pmf(config: &Configuration, alphabet: &NoiseAlphabet) -> Result<f64> {
    if config.len() != alphabet.len() {
        return Err(Error::DimensionMismatch {
            expected: alphabet.len(),
            actual: config.len(),
        });
    }
    let mut value = 1.0;
    let mut placed = 0u32;
    for (&n_k, &p_k) in config.counts().iter().zip(alphabet.probabilities()) {
        // Binomial factor C(placed + n_k, n_k) times p_k^{n_k}; 0^0 = 1.
        for i in 1..=n_k {
            value *= (placed + i) as f64 / i as f64 * p_k;
        }
        placed += n_k;
    }
    Ok(value)
}

/// Empirical event frequencies `n_k / N`.
pub fn config_to_probs(config: &Configuration) -> Result<Vec<f64>> {
    let total = config.total();
    if total == 0 {
        return Err(Error::EmptyConfiguration);
    }
    Ok(config.counts().iter().map(|&n| n as f64 / total as f64).collect())
}
