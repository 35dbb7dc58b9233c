//! Closed-form algebra for superpositions of equal-width shifted Gaussians.
//!
//! The bath is the transverse profile of the photon, a Gaussian wavepacket
//!
//! ```text
//! f(x) = (2 pi sigma^2)^(-1/4) exp(-x^2 / (4 sigma^2))
//! ```
//!
//! and every state reachable through the channel is a finite sum
//! `psi(x) = sum_m a_m f(x - s_m)`. Products of two such packets collapse to a
//! single normal density,
//!
//! ```text
//! f(x - a) f(x - b) = exp(-(a - b)^2 / (8 sigma^2)) * Normal(x; (a + b) / 2, sigma^2)
//! ```
//!
//! so overlaps, spatial moments, the momentum second moment, point densities
//! and cumulative probabilities are all exact finite sums.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Centers closer than this multiple of the width are merged into one component.
pub const MERGE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub amplitude: Complex64,
    pub center: f64,
}

impl Component {
    pub fn new(amplitude: impl Into<Complex64>, center: f64) -> Self {
        Self {
            amplitude: amplitude.into(),
            center,
        }
    }
}

/// A (possibly non-normalized) superposition of identically wide Gaussian
/// wavepackets. Components are kept sorted by center with coincident centers
/// merged.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianSum {
    sigma: f64,
    components: Vec<Component>,
}

/// Single unit-norm Gaussian of width `sigma` centered at the origin.
pub fn make_gaussian(sigma: f64) -> Result<GaussianSum> {
    GaussianSum::gaussian(sigma)
}

fn check_width(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidWidth(sigma))
    }
}

impl GaussianSum {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::from_components(sigma, vec![Component::new(1.0, 0.0)])
    }

    pub fn from_components(sigma: f64, mut components: Vec<Component>) -> Result<Self> {
        check_width(sigma)?;
        if components.is_empty()
            || components
                .iter()
                .any(|c| !c.center.is_finite() || !c.amplitude.re.is_finite() || !c.amplitude.im.is_finite())
        {
            return Err(Error::EmptyState);
        }
        components.sort_by(|a, b| a.center.total_cmp(&b.center));
        let tolerance = MERGE_TOLERANCE * sigma;
        let mut merged: Vec<Component> = Vec::with_capacity(components.len());
        for c in components {
            match merged.last_mut() {
                Some(last) if c.center - last.center <= tolerance => last.amplitude += c.amplitude,
                _ => merged.push(c),
            }
        }
        Ok(Self {
            sigma,
            components: merged,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Smallest and largest component center.
    pub fn center_range(&self) -> (f64, f64) {
        let first = self.components[0].center;
        let last = self.components[self.components.len() - 1].center;
        (first, last)
    }

    fn overlap(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        (-d * d / (8.0 * self.sigma * self.sigma)).exp()
    }

    /// Position-space amplitude `psi(x)`.
    pub fn amplitude_at(&self, x: f64) -> Complex64 {
        let norm = (2.0 * PI * self.sigma * self.sigma).powf(-0.25);
        let inv = 1.0 / (4.0 * self.sigma * self.sigma);
        self.components
            .iter()
            .map(|c| {
                let d = x - c.center;
                c.amplitude * (norm * (-d * d * inv).exp())
            })
            .sum()
    }

    /// `<self | other>`, antilinear in `self`.
    pub fn inner_product(&self, other: &GaussianSum) -> Result<Complex64> {
        if self.sigma != other.sigma {
            return Err(Error::WidthMismatch(self.sigma, other.sigma));
        }
        let mut total = Complex64::new(0.0, 0.0);
        for a in &self.components {
            for b in &other.components {
                total += a.amplitude.conj() * b.amplitude * self.overlap(a.center, b.center);
            }
        }
        Ok(total)
    }

    pub fn norm_sq(&self) -> f64 {
        self.pair_sum(|_, _| 1.0).max(0.0)
    }

    /// Sum over component pairs of `Re(conj(a_m) a_n) O_mn w(s_m, s_n)`,
    /// folding the symmetric off-diagonal pairs together.
    fn pair_sum(&self, weight: impl Fn(f64, f64) -> f64) -> f64 {
        let comps = &self.components;
        let mut total = 0.0;
        for (m, a) in comps.iter().enumerate() {
            total += a.amplitude.norm_sqr() * weight(a.center, a.center);
            for b in &comps[m + 1..] {
                let re = (a.amplitude.conj() * b.amplitude).re;
                total += 2.0 * re * self.overlap(a.center, b.center) * weight(a.center, b.center);
            }
        }
        total
    }

    fn checked_norm_sq(&self) -> Result<f64> {
        let n = self.norm_sq();
        if n > 0.0 && n.is_finite() {
            Ok(n)
        } else {
            Err(Error::ZeroNorm)
        }
    }

    pub fn translated(&self, shift: f64) -> GaussianSum {
        GaussianSum {
            sigma: self.sigma,
            components: self
                .components
                .iter()
                .map(|c| Component::new(c.amplitude, c.center + shift))
                .collect(),
        }
    }

    pub fn scaled(&self, factor: Complex64) -> GaussianSum {
        GaussianSum {
            sigma: self.sigma,
            components: self
                .components
                .iter()
                .map(|c| Component::new(c.amplitude * factor, c.center))
                .collect(),
        }
    }

    /// One noise event followed by projection onto the probe state:
    /// `cos^2(theta) T_g + sin^2(theta) I`, where `T_g` moves the packet by `+g`.
    /// The result is not renormalized.
    pub fn apply_noise_kernel(&self, theta: f64, shift: f64) -> Result<GaussianSum> {
        if !shift.is_finite() || shift < 0.0 {
            return Err(Error::InvalidCoupling(shift));
        }
        let (sin, cos) = theta.sin_cos();
        let (moved, stay) = (cos * cos, sin * sin);
        let mut next = Vec::with_capacity(2 * self.components.len());
        for c in &self.components {
            next.push(Component::new(c.amplitude * moved, c.center + shift));
            next.push(Component::new(c.amplitude * stay, c.center));
        }
        GaussianSum::from_components(self.sigma, next)
    }

    /// Spatial moment of order 0, 1 or 2 of the normalized density `|psi|^2`.
    pub fn moment(&self, order: u32) -> Result<f64> {
        let norm = self.checked_norm_sq()?;
        let s2 = self.sigma * self.sigma;
        match order {
            0 => Ok(1.0),
            1 => Ok(self.pair_sum(|a, b| 0.5 * (a + b)) / norm),
            2 => Ok(self.pair_sum(|a, b| {
                let mid = 0.5 * (a + b);
                mid * mid + s2
            }) / norm),
            other => Err(Error::UnsupportedMomentOrder(other)),
        }
    }

    /// `<P_x^2>` of the normalized state (units of inverse length squared).
    ///
    /// Uses `int f'(x - a) f'(x - b) dx = O_ab (sigma^2 - d^2 / 4) / (4 sigma^4)`
    /// with `d = a - b`.
    pub fn momentum_second_moment(&self) -> Result<f64> {
        let norm = self.checked_norm_sq()?;
        let s2 = self.sigma * self.sigma;
        let v = 1.0 / (4.0 * s2);
        Ok(self.pair_sum(|a, b| {
            let d = a - b;
            v * (1.0 - d * d / (4.0 * s2))
        }) / norm)
    }

    /// Normalized position density `|psi(x)|^2 / <psi|psi>`.
    pub fn density_at(&self, x: f64) -> Result<f64> {
        let norm = self.checked_norm_sq()?;
        Ok((self.amplitude_at(x).norm_sqr() / norm).max(0.0))
    }

    /// The normalized density as an explicit mixture of normals.
    pub fn density(&self) -> Result<DensityMixture> {
        let norm = self.checked_norm_sq()?;
        let comps = &self.components;
        let mut terms = Vec::with_capacity(comps.len() * (comps.len() + 1) / 2);
        for (m, a) in comps.iter().enumerate() {
            terms.push(DensityTerm {
                weight: a.amplitude.norm_sqr() / norm,
                center: a.center,
            });
            for b in &comps[m + 1..] {
                let re = (a.amplitude.conj() * b.amplitude).re;
                terms.push(DensityTerm {
                    weight: 2.0 * re * self.overlap(a.center, b.center) / norm,
                    center: 0.5 * (a.center + b.center),
                });
            }
        }
        Ok(DensityMixture::new(self.sigma, terms))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityTerm {
    pub weight: f64,
    pub center: f64,
}

/// Signed mixture of normals `sum_t w_t Normal(x; c_t, sigma^2)` with
/// `sum_t w_t = 1`. Weights may be negative for interfering states, but the
/// mixture itself is a modulus squared and never negative.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityMixture {
    sigma: f64,
    terms: Vec<DensityTerm>,
}

/// `P(a < Z < b)` for a standard normal, accurate in both tails.
pub(crate) fn standard_normal_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        0.5 * (erfc(a / SQRT_2) - erfc(b / SQRT_2))
    } else if b <= 0.0 {
        0.5 * (erfc(-b / SQRT_2) - erfc(-a / SQRT_2))
    } else {
        1.0 - 0.5 * erfc(b / SQRT_2) - 0.5 * erfc(-a / SQRT_2)
    }
}

impl DensityMixture {
    fn new(sigma: f64, mut terms: Vec<DensityTerm>) -> Self {
        terms.sort_by(|a, b| a.center.total_cmp(&b.center));
        let tolerance = MERGE_TOLERANCE * sigma;
        let mut merged: Vec<DensityTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if t.center - last.center <= tolerance => last.weight += t.weight,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.weight != 0.0);
        Self { sigma, terms: merged }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn terms(&self) -> &[DensityTerm] {
        &self.terms
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let norm = 1.0 / ((2.0 * PI).sqrt() * self.sigma);
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        let value: f64 = self
            .terms
            .iter()
            .map(|t| {
                let d = x - t.center;
                t.weight * (-d * d * inv).exp()
            })
            .sum();
        (value * norm).max(0.0)
    }

    /// Probability mass in `[a, b)`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight * standard_normal_mass((a - t.center) / self.sigma, (b - t.center) / self.sigma))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.mass_between(f64::NEG_INFINITY, x).clamp(0.0, 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.terms.iter().map(|t| t.weight * t.center).sum()
    }

    pub fn second_moment(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        self.terms.iter().map(|t| t.weight * (t.center * t.center + s2)).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.terms
            .iter()
            .map(|t| t.weight * ((t.center - m).powi(2) + self.sigma * self.sigma))
            .sum()
    }

    /// Span `[min center - k sigma, max center + k sigma]`.
    pub fn support(&self, widths: f64) -> (f64, f64) {
        let lo = self.terms.first().map_or(0.0, |t| t.center);
        let hi = self.terms.last().map_or(0.0, |t| t.center);
        (lo - widths * self.sigma, hi + widths * self.sigma)
    }
}
