//! Reconstruction of event multiplicities from a measured output profile and
//! aggregation of repeated trials into event probabilities with Beta credible
//! intervals.
//!
//! Two reconstruction routes are provided over the same candidate table:
//!
//! * [`l2_profile_estimate`] minimizes the integrated squared difference
//!   between the measured profile and each candidate's pixel-averaged density.
//! * [`moment_estimate`] keeps the candidates whose mean position matches the
//!   measured one and then minimizes the squared mismatch of the second moment
//!   about the measured mean.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::channel::ProbeState;
use crate::detector::{theoretical_density, DetectorGeometry, PixelProfile, TheoreticalDensity};
use crate::error::{Error, Result};
use crate::noise_model::{enumerate_configurations, Configuration, NoiseAlphabet};

/// Candidates whose means (in units of sigma) or variances (in sigma^2) agree
/// to this level are considered moment-identical.
pub const MOMENT_COLLISION_TOLERANCE: f64 = 1e-9;
/// L2 objectives within this fraction of the profile energy count as ties.
pub const L2_TIE_TOLERANCE: f64 = 1e-12;
pub const MAX_TOLERANCE_WIDENINGS: u32 = 10;
const TOP_CANDIDATES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    L2,
    Moments,
}

impl FromStr for EstimatorKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "l2" => Ok(Self::L2),
            "moments" => Ok(Self::Moments),
            other => Err(format!("unknown estimator {other:?} (expected l2 or moments)")),
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::L2 => "l2",
            Self::Moments => "moments",
        })
    }
}

/// Every configuration of `events` events over the alphabet, with its output
/// density and closed-form moments. Candidate `c` is the `c`-th configuration
/// in lexicographic order.
pub struct CandidateTable {
    probe: ProbeState,
    sigma: f64,
    alphabet: NoiseAlphabet,
    events: u32,
    configs: Vec<Configuration>,
    densities: Vec<TheoreticalDensity>,
    means: Vec<f64>,
    variances: Vec<f64>,
    pixel_cache: Mutex<Vec<(DetectorGeometry, Arc<Vec<Vec<f64>>>)>>,
}

impl CandidateTable {
    pub fn build(alphabet: &NoiseAlphabet, probe: ProbeState, sigma: f64, events: u32) -> Result<Self> {
        if events == 0 {
            return Err(Error::EmptyConfiguration);
        }
        let configs = enumerate_configurations(alphabet.len(), events);
        let densities = configs
            .par_iter()
            .map(|c| theoretical_density(c, probe, sigma, alphabet))
            .collect::<Result<Vec<_>>>()?;
        let means = densities.iter().map(TheoreticalDensity::mean).collect();
        let variances = densities.iter().map(TheoreticalDensity::variance).collect();
        Ok(Self {
            probe,
            sigma,
            alphabet: alphabet.clone(),
            events,
            configs,
            densities,
            means,
            variances,
            pixel_cache: Mutex::new(Vec::new()),
        })
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn probe(&self) -> ProbeState {
        self.probe
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn alphabet(&self) -> &NoiseAlphabet {
        &self.alphabet
    }

    pub fn events(&self) -> u32 {
        self.events
    }

    pub fn configurations(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn density(&self, index: usize) -> &TheoreticalDensity {
        &self.densities[index]
    }

    pub fn mean(&self, index: usize) -> f64 {
        self.means[index]
    }

    pub fn variance(&self, index: usize) -> f64 {
        self.variances[index]
    }

    pub fn index_of(&self, config: &Configuration) -> Option<usize> {
        self.configs.binary_search(config).ok()
    }

    /// Half the smallest nonzero spacing between candidate means.
    pub fn default_mean_tolerance(&self) -> f64 {
        let mut means = self.means.clone();
        means.sort_by(f64::total_cmp);
        let floor = MOMENT_COLLISION_TOLERANCE * self.sigma;
        means
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|gap| *gap > floor)
            .min_by(f64::total_cmp)
            .map_or(self.sigma, |gap| 0.5 * gap)
    }

    fn moments_collide(&self, a: usize, b: usize) -> bool {
        (self.means[a] - self.means[b]).abs() <= MOMENT_COLLISION_TOLERANCE * self.sigma
            && (self.variances[a] - self.variances[b]).abs() <= MOMENT_COLLISION_TOLERANCE * self.sigma * self.sigma
    }

    /// Groups (size >= 2) of candidates sharing the same mean and variance.
    pub fn moment_collision_groups(&self) -> Vec<Vec<usize>> {
        let mut assigned = vec![false; self.len()];
        let mut groups = Vec::new();
        for a in 0..self.len() {
            if assigned[a] {
                continue;
            }
            let group: Vec<usize> = (a..self.len())
                .filter(|&b| !assigned[b] && self.moments_collide(a, b))
                .collect();
            for &b in &group {
                assigned[b] = true;
            }
            if group.len() > 1 {
                groups.push(group);
            }
        }
        groups
    }

    /// Pixel probabilities of every candidate on `geometry`, computed once.
    pub fn pixelized(&self, geometry: &DetectorGeometry) -> Arc<Vec<Vec<f64>>> {
        let mut cache = self.pixel_cache.lock().expect("pixel cache poisoned");
        if let Some((_, table)) = cache.iter().find(|(g, _)| g == geometry) {
            return Arc::clone(table);
        }
        let table: Arc<Vec<Vec<f64>>> = Arc::new(
            self.densities
                .par_iter()
                .map(|d| d.pixel_probabilities(geometry))
                .collect(),
        );
        cache.push((*geometry, Arc::clone(&table)));
        table
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub index: usize,
    pub configuration: Configuration,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub estimator: EstimatorKind,
    pub index: usize,
    pub configuration: Configuration,
    pub objective: f64,
    /// Best candidates in ranking order (at most five).
    pub top: Vec<RankedCandidate>,
    /// Other candidates the estimator cannot tell apart from the winner.
    pub degenerate_with: Vec<Configuration>,
    /// Stage-one survivors (moment route only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stage_one: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_tolerance: Option<f64>,
    pub widenings: u32,
}

impl Reconstruction {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_with.is_empty()
    }
}

/// Sorts by objective, ties to the smaller candidate index.
fn rank(scores: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut ranked = scores.to_vec();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    ranked
}

fn top_candidates(table: &CandidateTable, ranked: &[(usize, f64)]) -> Vec<RankedCandidate> {
    ranked
        .iter()
        .take(TOP_CANDIDATES)
        .map(|&(index, objective)| RankedCandidate {
            index,
            configuration: table.configs[index].clone(),
            objective,
        })
        .collect()
}

/// Full-profile reconstruction:
/// `argmin_c sum_i (P_exp,i - P_c,i)^2 / pitch`, the pixel-wise form of the
/// integrated squared density difference with pixel-averaged densities.
pub fn l2_profile_estimate(profile: &PixelProfile, table: &CandidateTable) -> Result<Reconstruction> {
    if table.is_empty() {
        return Err(Error::NoCandidates);
    }
    let geometry = profile.geometry();
    let pixelized = table.pixelized(geometry);
    let measured = profile.probabilities();
    let scores: Vec<(usize, f64)> = pixelized
        .iter()
        .enumerate()
        .map(|(c, model)| {
            let sum: f64 = measured.iter().zip(model).map(|(p, q)| (p - q) * (p - q)).sum();
            (c, sum / geometry.pitch)
        })
        .collect();
    let ranked = rank(&scores);
    let energy: f64 = measured.iter().map(|p| p * p).sum::<f64>() / geometry.pitch;
    let tie = ranked[0].1 + L2_TIE_TOLERANCE * energy;
    // Objectives within rounding of the minimum are ties: smallest index wins.
    let mut tied: Vec<usize> = ranked
        .iter()
        .take_while(|(_, obj)| *obj <= tie)
        .map(|&(c, _)| c)
        .collect();
    tied.sort_unstable();
    let best = tied[0];
    let best_obj = scores[best].1;
    let degenerate_with = tied[1..].iter().map(|&c| table.configs[c].clone()).collect();
    Ok(Reconstruction {
        estimator: EstimatorKind::L2,
        index: best,
        configuration: table.configs[best].clone(),
        objective: best_obj,
        top: top_candidates(table, &ranked),
        degenerate_with,
        stage_one: Vec::new(),
        mean_tolerance: None,
        widenings: 0,
    })
}

/// Two-stage moment reconstruction.
///
/// Stage one keeps candidates whose mean is within `mean_tolerance` of the
/// measured mean (default: half the smallest spacing of candidate means); if
/// none qualify the tolerance doubles, at most ten times (a zero tolerance is
/// first replaced by the default divided by 1024). Stage two minimizes
/// `(E_exp[dx^2] - E_c[dx^2])^2` with `dx = x - E_exp[x]`. The measured second
/// moment is evaluated at pixel centers and carries the `pitch^2 / 12` binning
/// excess, which is removed before comparison.
pub fn moment_estimate(
    profile: &PixelProfile,
    table: &CandidateTable,
    mean_tolerance: Option<f64>,
) -> Result<Reconstruction> {
    if table.is_empty() {
        return Err(Error::NoCandidates);
    }
    let pitch = profile.geometry().pitch;
    let measured_mean = profile.mean();
    let measured_spread = profile.centered_second_moment(measured_mean) - pitch * pitch / 12.0;

    let default_tolerance = table.default_mean_tolerance();
    let mut tolerance = mean_tolerance.unwrap_or(default_tolerance).max(0.0);
    let mut widenings = 0;
    let subset = loop {
        let subset: Vec<usize> = (0..table.len())
            .filter(|&c| (table.means[c] - measured_mean).abs() <= tolerance)
            .collect();
        if !subset.is_empty() {
            break subset;
        }
        if widenings == MAX_TOLERANCE_WIDENINGS {
            return Err(Error::NoCandidateWithinTolerance {
                mean: measured_mean,
                tolerance,
                widenings,
            });
        }
        tolerance = if tolerance > 0.0 {
            2.0 * tolerance
        } else {
            default_tolerance / 1024.0
        };
        widenings += 1;
    };

    let scores: Vec<(usize, f64)> = subset
        .iter()
        .map(|&c| {
            let offset = table.means[c] - measured_mean;
            let model = table.variances[c] + offset * offset;
            (c, (measured_spread - model).powi(2))
        })
        .collect();
    let ranked = rank(&scores);
    let leader = ranked[0].0;
    // Candidates with colliding moments are indistinguishable here: the
    // smallest index among them wins.
    let colliding: Vec<usize> = subset
        .iter()
        .copied()
        .filter(|&c| c == leader || table.moments_collide(c, leader))
        .collect();
    let best = colliding[0];
    let best_obj = scores.iter().find(|(c, _)| *c == best).map_or(ranked[0].1, |s| s.1);
    let degenerate_with = colliding[1..].iter().map(|&c| table.configs[c].clone()).collect();
    Ok(Reconstruction {
        estimator: EstimatorKind::Moments,
        index: best,
        configuration: table.configs[best].clone(),
        objective: best_obj,
        top: top_candidates(table, &ranked),
        degenerate_with,
        stage_one: subset,
        mean_tolerance: Some(tolerance),
        widenings,
    })
}

pub fn estimate(
    kind: EstimatorKind,
    profile: &PixelProfile,
    table: &CandidateTable,
    mean_tolerance: Option<f64>,
) -> Result<Reconstruction> {
    match kind {
        EstimatorKind::L2 => l2_profile_estimate(profile, table),
        EstimatorKind::Moments => moment_estimate(profile, table, mean_tolerance),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Pooled event counts `s_k = sum_l n_k^(l)`.
    pub successes: Vec<u64>,
    /// `N * L`.
    pub total: u64,
    pub probabilities: Vec<f64>,
}

/// Pools `L` reconstructed configurations of `events` events each.
pub fn aggregate_trials(configs: &[Configuration], events: u32) -> Result<Aggregate> {
    let first = configs
        .first()
        .ok_or_else(|| Error::InconsistentTrials("no trials".into()))?;
    let dimension = first.len();
    let mut successes = vec![0u64; dimension];
    for (l, c) in configs.iter().enumerate() {
        if c.len() != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                actual: c.len(),
            });
        }
        if c.total() != events {
            return Err(Error::InconsistentTrials(format!(
                "trial {l} has {} events, expected {events}",
                c.total()
            )));
        }
        for (s, &n) in successes.iter_mut().zip(c.counts()) {
            *s += n as u64;
        }
    }
    let total = events as u64 * configs.len() as u64;
    if total == 0 {
        return Err(Error::EmptyConfiguration);
    }
    let probabilities = successes.iter().map(|&s| s as f64 / total as f64).collect();
    Ok(Aggregate {
        successes,
        total,
        probabilities,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl From<[f64; 2]> for Interval {
    fn from([lower, upper]: [f64; 2]) -> Self {
        Self { lower, upper }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lower, i.upper]
    }
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Equal-tailed credible interval of the `Beta(s + 1, n - s + 1)` posterior
/// (uniform prior), with the lower end pinned to 0 when `s = 0` and the upper
/// end pinned to 1 when `s = n`.
pub fn beta_ci(successes: u64, total: u64, level: f64) -> Result<Interval> {
    if total == 0 || successes > total {
        return Err(Error::InvalidCounts { successes, total });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    let posterior = Beta::new((successes + 1) as f64, (total - successes + 1) as f64)
        .map_err(|_| Error::InvalidCounts { successes, total })?;
    let tail = 0.5 * (1.0 - level);
    let lower = if successes == 0 {
        0.0
    } else {
        posterior.inverse_cdf(tail)
    };
    let upper = if successes == total {
        1.0
    } else {
        posterior.inverse_cdf(1.0 - tail)
    };
    Ok(Interval {
        lower: lower.clamp(0.0, 1.0),
        upper: upper.clamp(0.0, 1.0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    /// Pooled reconstructed event counts over all trials.
    #[serde(rename = "n_R")]
    pub n_r: Vec<u64>,
    #[serde(rename = "p_R")]
    pub p_r: Vec<f64>,
    pub ci68: Vec<Interval>,
    pub ci95: Vec<Interval>,
    /// `(s + 1) / (n + 2)`.
    pub posterior_mean: Vec<f64>,
    pub alphabet: Vec<f64>,
    pub events_per_trial: u32,
    pub trials: Vec<Configuration>,
    pub diagnostics: Vec<Reconstruction>,
}

pub fn build_report(trials: &[Reconstruction], alphabet: &NoiseAlphabet, events: u32) -> Result<EstimateReport> {
    let configs: Vec<Configuration> = trials.iter().map(|t| t.configuration.clone()).collect();
    let aggregate = aggregate_trials(&configs, events)?;
    if aggregate.successes.len() != alphabet.len() {
        return Err(Error::DimensionMismatch {
            expected: alphabet.len(),
            actual: aggregate.successes.len(),
        });
    }
    let n = aggregate.total;
    let ci = |level: f64| {
        aggregate
            .successes
            .iter()
            .map(|&s| beta_ci(s, n, level))
            .collect::<Result<Vec<_>>>()
    };
    Ok(EstimateReport {
        ci68: ci(0.68)?,
        ci95: ci(0.95)?,
        posterior_mean: aggregate
            .successes
            .iter()
            .map(|&s| (s + 1) as f64 / (n + 2) as f64)
            .collect(),
        p_r: aggregate.probabilities,
        n_r: aggregate.successes,
        alphabet: alphabet.values(),
        events_per_trial: events,
        trials: configs,
        diagnostics: trials.to_vec(),
    })
}

impl EstimateReport {
    /// Plain-text table: target (if known), estimate, 68% and 95% intervals.
    pub fn render_table(&self, targets: Option<&[f64]>) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} trial(s) x {} events; reconstructed sets: {}",
            self.trials.len(),
            self.events_per_trial,
            self.trials
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        );
        let _ = writeln!(
            out,
            "{:>3}  {:>10}  {:>8}  {:>9}  {:>16}  {:>16}",
            "k", "G_k", "target", "estimate", "68% CI", "95% CI"
        );
        for k in 0..self.p_r.len() {
            let target = targets
                .and_then(|t| t.get(k))
                .map_or_else(|| "-".to_string(), |t| format!("{t:.3}"));
            let _ = writeln!(
                out,
                "{:>3}  {:>10.3}  {:>8}  {:>9.3}  ({:.3} ; {:.3})  ({:.3} ; {:.3})",
                k + 1,
                self.alphabet[k],
                target,
                self.p_r[k],
                self.ci68[k].lower,
                self.ci68[k].upper,
                self.ci95[k].lower,
                self.ci95[k].upper
            );
        }
        out
    }
}
