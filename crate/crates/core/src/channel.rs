//! Forward simulation of the noisy channel with and without Zeno projections.
//!
//! The probe is the polarization qubit `cos(theta)|H> + sin(theta)|V>`. Each
//! noise event translates the H-polarized part of the spatial wavepacket by
//! `g_j`; in the protected protocol the photon is projected back onto the probe
//! state after every event, which leaves the bath in the non-normalized state
//! `B_j |f>` with `B_j = cos^2(theta) T_{g_j} + sin^2(theta) I`. The running norm
//! of that state is the survival probability.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise_model::NoiseAlphabet;
use crate::seeding::{derive_seed, rng_from_seed};
use crate::wavepacket::{make_gaussian, GaussianSum};

/// Polarization angle of the probe, `|psi> = cos(theta)|H> + sin(theta)|V>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ProbeState(f64);

impl ProbeState {
    pub fn new(theta: f64) -> Result<Self> {
        if theta.is_finite() && (0.0..=FRAC_PI_2).contains(&theta) {
            Ok(Self(theta))
        } else {
            Err(Error::InvalidAngle(theta))
        }
    }

    /// The diagonal probe `|+> = (|H> + |V>) / sqrt(2)`.
    pub fn diagonal() -> Self {
        Self(PI / 4.0)
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    /// Variance of `Pi_H` in the probe state, `sin^2 cos^2`.
    pub fn dephasing_variance(self) -> f64 {
        let (s, c) = self.0.sin_cos();
        s * s * c * c
    }

    /// Kernel weights `(cos^2 theta, sin^2 theta)`.
    pub fn kernel_weights(self) -> (f64, f64) {
        let (s, c) = self.0.sin_cos();
        (c * c, s * s)
    }
}

impl TryFrom<f64> for ProbeState {
    type Error = Error;
    fn try_from(theta: f64) -> Result<Self> {
        Self::new(theta)
    }
}

impl From<ProbeState> for f64 {
    fn from(p: ProbeState) -> f64 {
        p.0
    }
}

/// Ordered per-step integrated couplings `g_1..g_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ChannelRealization(Vec<f64>);

impl ChannelRealization {
    pub fn new(couplings: Vec<f64>) -> Result<Self> {
        if couplings.is_empty() {
            return Err(Error::EmptyRealization);
        }
        if let Some(&bad) = couplings.iter().find(|g| !g.is_finite() || **g < 0.0) {
            return Err(Error::InvalidCoupling(bad));
        }
        Ok(Self(couplings))
    }

    pub fn couplings(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl TryFrom<Vec<f64>> for ChannelRealization {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ChannelRealization> for Vec<f64> {
    fn from(r: ChannelRealization) -> Vec<f64> {
        r.0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub final_state: GaussianSum,
    pub total_survival: f64,
    pub conditional_survivals: Vec<f64>,
    /// `<P_x^2>` of the normalized bath state just before each event.
    pub momentum_second_moments: Vec<f64>,
}

/// Protected protocol: a projection onto the probe state after every event.
pub fn run_protected(probe: ProbeState, sigma: f64, realization: &ChannelRealization) -> Result<RunReport> {
    let mut state = make_gaussian(sigma)?;
    let mut norm = state.norm_sq();
    let mut conditional = Vec::with_capacity(realization.len());
    let mut momenta = Vec::with_capacity(realization.len());
    for &g in realization.couplings() {
        momenta.push(state.momentum_second_moment()?);
        state = state.apply_noise_kernel(probe.theta(), g)?;
        let next = state.norm_sq();
        conditional.push((next / norm).clamp(0.0, 1.0));
        norm = next;
    }
    Ok(RunReport {
        final_state: state,
        total_survival: norm.clamp(0.0, 1.0),
        conditional_survivals: conditional,
        momentum_second_moments: momenta,
    })
}

/// Unprotected protocol: a single projection after the whole channel.
///
/// Without intermediate projections the H component accumulates the total
/// shift `G = sum g_j`, so the survival is
/// `cos^4 + sin^4 + 2 sin^2 cos^2 exp(-G^2 / (8 sigma^2))`.
pub fn run_unprotected(probe: ProbeState, sigma: f64, realization: &ChannelRealization) -> Result<f64> {
    unprotected_survival(probe, sigma, realization.total())
}

pub fn unprotected_survival(probe: ProbeState, sigma: f64, total_shift: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidWidth(sigma));
    }
    let (c, s) = probe.kernel_weights();
    let overlap = (-total_shift * total_shift / (8.0 * sigma * sigma)).exp();
    Ok((c * c + s * s + 2.0 * c * s * overlap).clamp(0.0, 1.0))
}

/// Protected survival evaluated in momentum space,
/// `int |f~(k)|^2 prod_j |cos^2 e^{-i k g_j} + sin^2|^2 dk`.
///
/// Exact for any number of events (the position-space state grows to one
/// component per distinct subset sum, which is impractical for long random
/// realizations). The momentum density of the initial packet is normal with
/// standard deviation `1 / (2 sigma)`; the integrand is a Gaussian times a
/// trigonometric polynomial of bandwidth `sum g_j`, so the trapezoid rule with
/// step `2 pi / (sum g_j + 30 sigma)` is accurate to machine precision.
pub fn protected_survival_spectral(probe: ProbeState, sigma: f64, realization: &ChannelRealization) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidWidth(sigma));
    }
    let (c, s) = probe.kernel_weights();
    let k_sd = 1.0 / (2.0 * sigma);
    let step = 2.0 * PI / (realization.total() + 30.0 * sigma);
    let half_points = ((12.0 * k_sd) / step).ceil() as usize;
    let weight = |k: f64| (-0.5 * (k / k_sd).powi(2)).exp() / ((2.0 * PI).sqrt() * k_sd);
    let integrand = |k: f64| {
        let product: f64 = realization
            .couplings()
            .iter()
            .map(|&g| c * c + s * s + 2.0 * c * s * (k * g).cos())
            .product();
        weight(k) * product
    };
    let mut total = integrand(0.0);
    for i in 1..=half_points {
        total += 2.0 * integrand(i as f64 * step);
    }
    Ok((total * step).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayMode {
    /// Every event sees a fresh bath in the initial state.
    FixedBath,
    /// The bath carries over between events (the photonic protocol).
    EvolvingBath,
    /// One measurement at the end of the channel.
    SingleMeasurement,
}

/// Approximate decay exponent `J` with survival `~ exp(-J)`.
///
/// `J_N = dS^2 sum_j g_j^2 B_j` where `B_j` is the momentum second moment of
/// the bath before event `j`; the single-measurement variant is
/// `J_1 = dS^2 B_1 (sum_j g_j)^2`.
pub fn decay_parameter(
    probe: ProbeState,
    sigma: f64,
    realization: &ChannelRealization,
    mode: DecayMode,
) -> Result<f64> {
    let initial = make_gaussian(sigma)?.momentum_second_moment()?;
    let ds2 = probe.dephasing_variance();
    let g = realization.couplings();
    Ok(match mode {
        DecayMode::FixedBath => ds2 * initial * g.iter().map(|x| x * x).sum::<f64>(),
        DecayMode::SingleMeasurement => ds2 * initial * realization.total().powi(2),
        DecayMode::EvolvingBath => {
            let run = run_protected(probe, sigma, realization)?;
            ds2 * g
                .iter()
                .zip(&run.momentum_second_moments)
                .map(|(x, b)| x * x * b)
                .sum::<f64>()
        }
    })
}

/// Short-time expansion `1 - G^2 dS^2 <P_x^2>`, clamped to `[0, 1]`.
pub fn second_order_survival(probe: ProbeState, sigma: f64, shift: f64) -> Result<f64> {
    let b2 = make_gaussian(sigma)?.momentum_second_moment()?;
    Ok((1.0 - shift * shift * probe.dephasing_variance() * b2).clamp(0.0, 1.0))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CouplingSampler {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
    Alphabet { alphabet: NoiseAlphabet },
}

impl CouplingSampler {
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<ChannelRealization> {
        let couplings = match self {
            CouplingSampler::Constant { value } => vec![*value; n],
            CouplingSampler::Uniform { low, high } => {
                let dist = Uniform::new_inclusive(*low, *high).map_err(|_| Error::InvalidCoupling(*high))?;
                (0..n).map(|_| dist.sample(rng)).collect()
            }
            CouplingSampler::Alphabet { alphabet } => {
                let values = alphabet.values();
                let dist =
                    WeightedIndex::new(alphabet.probabilities()).map_err(|e| Error::InvalidAlphabet(e.to_string()))?;
                (0..n).map(|_| values[dist.sample(rng)]).collect()
            }
        };
        ChannelRealization::new(couplings)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub events: usize,
    /// Ensemble mean and standard deviation of `J_N / J_1` (fixed bath).
    pub j_ratio_mean: f64,
    pub j_ratio_std: f64,
    /// Ensemble statistics of the exact ratio `ln p_protected / ln p_unprotected`.
    pub decay_ratio_mean: f64,
    pub decay_ratio_std: f64,
    pub protected_survival_mean: f64,
    pub unprotected_survival_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub theta: f64,
    pub sigma: f64,
    pub ensemble: usize,
    pub seed: u64,
    pub rows: Vec<ScalingRow>,
}

fn ratio_or_one(num: f64, den: f64) -> f64 {
    // No decay in either protocol: no gain either.
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Ensemble statistics of the Zeno gain versus the number of interleaved
/// measurements. Member `m` of row `i` draws from
/// `derive_seed(derive_seed(seed, i), m)`.
pub fn qze_scaling_report(
    probe: ProbeState,
    sigma: f64,
    sampler: &CouplingSampler,
    event_counts: &[usize],
    ensemble: usize,
    seed: u64,
) -> Result<ScalingReport> {
    if event_counts.is_empty() {
        return Err(Error::EmptyEventCounts);
    }
    if ensemble == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let mut rows = Vec::with_capacity(event_counts.len());
    for (row, &n) in event_counts.iter().enumerate() {
        if n == 0 {
            return Err(Error::EmptyRealization);
        }
        let row_seed = derive_seed(seed, row as u64);
        let members: Vec<[f64; 4]> = (0..ensemble)
            .into_par_iter()
            .map(|m| -> Result<[f64; 4]> {
                let mut rng = rng_from_seed(derive_seed(row_seed, m as u64));
                let realization = sampler.sample(n, &mut rng)?;
                let j_n = decay_parameter(probe, sigma, &realization, DecayMode::FixedBath)?;
                let j_1 = decay_parameter(probe, sigma, &realization, DecayMode::SingleMeasurement)?;
                let protected = protected_survival_spectral(probe, sigma, &realization)?;
                let unprotected = run_unprotected(probe, sigma, &realization)?;
                Ok([
                    ratio_or_one(j_n, j_1),
                    ratio_or_one(protected.ln(), unprotected.ln()),
                    protected,
                    unprotected,
                ])
            })
            .collect::<Result<_>>()?;
        let column = |i: usize| members.iter().map(|m| m[i]).collect::<Vec<_>>();
        let (j_ratio_mean, j_ratio_std) = mean_std(&column(0));
        let (decay_ratio_mean, decay_ratio_std) = mean_std(&column(1));
        rows.push(ScalingRow {
            events: n,
            j_ratio_mean,
            j_ratio_std,
            decay_ratio_mean,
            decay_ratio_std,
            protected_survival_mean: mean_std(&column(2)).0,
            unprotected_survival_mean: mean_std(&column(3)).0,
        });
    }
    Ok(ScalingReport {
        theta: probe.theta(),
        sigma,
        ensemble,
        seed,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// `u = g^2 / (8 sigma^2)`.
    pub u: f64,
    pub shift_over_sigma: f64,
    pub unit_shift: f64,
    pub protected_survival: f64,
    pub unprotected_survival: f64,
    pub survival_floor: f64,
}

fn reference_survival(probe: ProbeState, sigma: f64, multipliers: &[f64], unit_shift: f64) -> Result<f64> {
    let realization = ChannelRealization::new(multipliers.iter().map(|m| m * unit_shift).collect())?;
    Ok(run_protected(probe, sigma, &realization)?.total_survival)
}

/// Finds the unit shift `g` for which the protected survival of the reference
/// realization (event multipliers of `g`) equals `target`, by bisection on
/// `u = g^2 / (8 sigma^2)`.
pub fn calibrate_unit_shift(probe: ProbeState, sigma: f64, multipliers: &[f64], target: f64) -> Result<Calibration> {
    let shift_for = |u: f64| sigma * (8.0 * u).sqrt();
    let survival = |u: f64| reference_survival(probe, sigma, multipliers, shift_for(u));
    // Far-separated sub-packets no longer interfere: the norm is the plain sum
    // of squared amplitudes.
    let floor = reference_survival(probe, sigma, multipliers, 1e4 * sigma)?;
    if !(target.is_finite() && target > floor && target < 1.0) {
        return Err(Error::UnattainableTarget { target, floor });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while survival(hi)? > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::UnattainableTarget { target, floor });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if survival(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let u = 0.5 * (lo + hi);
    let unit_shift = shift_for(u);
    let realization = ChannelRealization::new(multipliers.iter().map(|m| m * unit_shift).collect())?;
    Ok(Calibration {
        u,
        shift_over_sigma: unit_shift / sigma,
        unit_shift,
        protected_survival: run_protected(probe, sigma, &realization)?.total_survival,
        unprotected_survival: run_unprotected(probe, sigma, &realization)?,
        survival_floor: floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag() -> ProbeState {
        ProbeState::diagonal()
    }

    #[test]
    fn probe_angle_bounds() {
        assert!(ProbeState::new(0.0).is_ok());
        assert!(ProbeState::new(FRAC_PI_2).is_ok());
        assert!(matches!(ProbeState::new(-0.1), Err(Error::InvalidAngle(_))));
        assert!(matches!(ProbeState::new(2.0), Err(Error::InvalidAngle(_))));
    }

    #[test]
    fn realization_validation() {
        assert!(matches!(ChannelRealization::new(vec![]), Err(Error::EmptyRealization)));
        assert!(matches!(
            ChannelRealization::new(vec![1.0, -0.5]),
            Err(Error::InvalidCoupling(_))
        ));
    }

    #[test]
    fn zero_couplings_preserve_state() {
        let r = ChannelRealization::new(vec![0.0; 6]).unwrap();
        let run = run_protected(diag(), 1.0, &r).unwrap();
        assert!((run.total_survival - 1.0).abs() < 1e-15);
        assert_eq!(run.final_state, make_gaussian(1.0).unwrap());
    }

    #[test]
    fn horizontal_probe_never_decays() {
        let r = ChannelRealization::new(vec![0.3, 2.0, 5.0]).unwrap();
        let p = ProbeState::new(0.0).unwrap();
        assert!((run_protected(p, 1.0, &r).unwrap().total_survival - 1.0).abs() < 1e-15);
        assert!((run_unprotected(p, 1.0, &r).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_step_protocols_agree() {
        let r = ChannelRealization::new(vec![2.0]).unwrap();
        let expected = 0.5 * (1.0 + (-0.5f64).exp());
        let prot = run_protected(diag(), 1.0, &r).unwrap().total_survival;
        let unprot = run_unprotected(diag(), 1.0, &r).unwrap();
        assert!((prot - expected).abs() < 1e-15);
        assert!((unprot - expected).abs() < 1e-15);
    }

    #[test]
    fn conditional_survivals_multiply_to_total() {
        let r = ChannelRealization::new(vec![0.4, 1.1, 0.0, 2.5, 0.7]).unwrap();
        let run = run_protected(ProbeState::new(0.9).unwrap(), 1.3, &r).unwrap();
        let product: f64 = run.conditional_survivals.iter().product();
        assert!((product - run.total_survival).abs() < 1e-12);
        assert!(run.conditional_survivals.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn spectral_route_matches_position_route() {
        let r = ChannelRealization::new(vec![0.4, 1.1, 0.0, 2.5, 0.7, 0.05]).unwrap();
        for theta in [0.2, 0.785, 1.3] {
            let p = ProbeState::new(theta).unwrap();
            let a = run_protected(p, 1.0, &r).unwrap().total_survival;
            let b = protected_survival_spectral(p, 1.0, &r).unwrap();
            assert!((a - b).abs() < 1e-13, "theta={theta}: {a} vs {b}");
        }
    }

    #[test]
    fn decay_parameter_modes() {
        let n = 7;
        let g = 0.3;
        let r = ChannelRealization::new(vec![g; n]).unwrap();
        let fixed = decay_parameter(diag(), 1.0, &r, DecayMode::FixedBath).unwrap();
        let single = decay_parameter(diag(), 1.0, &r, DecayMode::SingleMeasurement).unwrap();
        assert!((fixed - n as f64 * g * g / 16.0).abs() < 1e-15);
        assert!((single - (n * n) as f64 * g * g / 16.0).abs() < 1e-14);
        let evolving = decay_parameter(diag(), 1.0, &r, DecayMode::EvolvingBath).unwrap();
        assert!(evolving < fixed);
        let h = ProbeState::new(0.0).unwrap();
        for mode in [
            DecayMode::FixedBath,
            DecayMode::EvolvingBath,
            DecayMode::SingleMeasurement,
        ] {
            assert_eq!(decay_parameter(h, 1.0, &r, mode).unwrap(), 0.0);
        }
    }

    #[test]
    fn second_order_expansion() {
        assert_eq!(second_order_survival(diag(), 1.0, 0.0).unwrap(), 1.0);
        let v = second_order_survival(diag(), 1.0, 0.2).unwrap();
        assert!((v - (1.0 - 0.04 / 16.0)).abs() < 1e-15);
        let vertical = ProbeState::new(FRAC_PI_2).unwrap();
        assert!((second_order_survival(vertical, 1.0, 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(second_order_survival(diag(), 1.0, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn scaling_report_rejects_empty_inputs() {
        let s = CouplingSampler::Constant { value: 1.0 };
        assert!(matches!(
            qze_scaling_report(diag(), 1.0, &s, &[], 10, 1),
            Err(Error::EmptyEventCounts)
        ));
        assert!(matches!(
            qze_scaling_report(diag(), 1.0, &s, &[3], 0, 1),
            Err(Error::EmptyEnsemble)
        ));
    }

    #[test]
    fn constant_coupling_ratio_is_inverse_n() {
        let s = CouplingSampler::Constant { value: 0.2 };
        let counts = [1, 2, 5, 17];
        let report = qze_scaling_report(diag(), 1.0, &s, &counts, 3, 9).unwrap();
        for row in &report.rows {
            assert!((row.j_ratio_mean - 1.0 / row.events as f64).abs() < 1e-12);
            assert!(row.j_ratio_std < 1e-12);
        }
        assert!((report.rows[0].decay_ratio_mean - 1.0).abs() < 1e-10);
    }

    #[test]
    fn calibration_rejects_unit_target() {
        let m = [2.0, 2.0, 3.0, 3.0];
        assert!(matches!(
            calibrate_unit_shift(diag(), 1.0, &m, 1.0),
            Err(Error::UnattainableTarget { .. })
        ));
        assert!(matches!(
            calibrate_unit_shift(diag(), 1.0, &m, 0.1),
            Err(Error::UnattainableTarget { .. })
        ));
    }

    #[test]
    fn calibration_floor_counts_subset_sums() {
        // Subset sums of {2,2,3,3} have multiplicities 1,2,2,1,4,1,2,2,1.
        let c = calibrate_unit_shift(diag(), 1.0, &[2.0, 2.0, 3.0, 3.0], 0.9).unwrap();
        assert!((c.survival_floor - 36.0 / 256.0).abs() < 1e-12);
        assert!((c.protected_survival - 0.9).abs() < 1e-10);
    }
}
