//! Forward model from a configuration to the output density, and a pixelated
//! photon-counting detector along the transverse axis.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ProbeState;
use crate::error::{Error, Result};
use crate::noise_model::{Configuration, NoiseAlphabet};
use crate::seeding::rng_from_seed;
use crate::wavepacket::{make_gaussian, DensityMixture, GaussianSum};

pub const DEFAULT_PIXEL_PITCH_UM: f64 = 13.0;
pub const DEFAULT_PIXEL_COUNT: usize = 1024;

/// Histograms may drop at most this fraction of positions outside the sensor.
pub const MAX_OVERFLOW_FRACTION: f64 = 0.01;

pub const CSV_HEADER: [&str; 3] = ["pixel_index", "center_x_um", "count"];

/// Pixel `i` covers `[offset + i * pitch, offset + (i + 1) * pitch)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorGeometry {
    pub pitch: f64,
    pub pixels: usize,
    pub offset: f64,
}

impl DetectorGeometry {
    pub fn new(pitch: f64, pixels: usize, offset: f64) -> Result<Self> {
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::InvalidGeometry(format!("pitch must be positive, got {pitch}")));
        }
        if pixels < 2 {
            return Err(Error::InvalidGeometry(format!(
                "need at least two pixels, got {pixels}"
            )));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidGeometry("offset must be finite".into()));
        }
        Ok(Self { pitch, pixels, offset })
    }

    /// Sensor centered on the origin.
    pub fn centered(pitch: f64, pixels: usize) -> Result<Self> {
        Self::new(pitch, pixels, -0.5 * pitch * pixels as f64)
    }

    pub fn pixel_center(&self, i: usize) -> f64 {
        self.offset + (i as f64 + 0.5) * self.pitch
    }

    pub fn pixel_edges(&self, i: usize) -> (f64, f64) {
        (
            self.offset + i as f64 * self.pitch,
            self.offset + (i + 1) as f64 * self.pitch,
        )
    }

    pub fn span(&self) -> (f64, f64) {
        (self.offset, self.offset + self.pixels as f64 * self.pitch)
    }

    pub fn pixel_index(&self, x: f64) -> Option<usize> {
        let t = ((x - self.offset) / self.pitch).floor();
        if t >= 0.0 && t < self.pixels as f64 {
            Some(t as usize)
        } else {
            None
        }
    }

    pub fn is_compatible(&self, other: &DetectorGeometry) -> bool {
        let tol = 1e-6 * self.pitch;
        self.pixels == other.pixels
            && (self.pitch - other.pitch).abs() <= tol
            && (self.offset - other.offset).abs() <= tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialHistogram {
    pub geometry: DetectorGeometry,
    pub counts: Vec<u64>,
    /// Positions that landed outside the sensor.
    pub overflow: u64,
}

impl SpatialHistogram {
    pub fn empty(geometry: DetectorGeometry) -> Self {
        Self {
            geometry,
            counts: vec![0; geometry.pixels],
            overflow: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Normalized output density of a configuration, `|<x| prod_k B_k^{n_k} |f>|^2`
/// divided by its integral.
#[derive(Clone, Debug)]
pub struct TheoreticalDensity {
    state: GaussianSum,
    mixture: DensityMixture,
}

pub fn theoretical_density(
    config: &Configuration,
    probe: ProbeState,
    sigma: f64,
    alphabet: &NoiseAlphabet,
) -> Result<TheoreticalDensity> {
    let realization = config.realization(alphabet)?;
    let mut state = make_gaussian(sigma)?;
    for &g in realization.couplings() {
        state = state.apply_noise_kernel(probe.theta(), g)?;
    }
    TheoreticalDensity::from_state(state)
}

impl TheoreticalDensity {
    pub fn from_state(state: GaussianSum) -> Result<Self> {
        let mixture = state.density()?;
        Ok(Self { state, mixture })
    }

    pub fn state(&self) -> &GaussianSum {
        &self.state
    }

    pub fn mixture(&self) -> &DensityMixture {
        &self.mixture
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.mixture.pdf(x)
    }

    pub fn mean(&self) -> f64 {
        self.mixture.mean()
    }

    pub fn variance(&self) -> f64 {
        self.mixture.variance()
    }

    /// Probability of landing in each pixel (exact integral over the pixel).
    pub fn pixel_probabilities(&self, geometry: &DetectorGeometry) -> Vec<f64> {
        (0..geometry.pixels)
            .map(|i| {
                let (a, b) = geometry.pixel_edges(i);
                self.mixture.mass_between(a, b).max(0.0)
            })
            .collect()
    }
}

/// Inverse-CDF sampler on a uniform grid, with a guide table for constant
/// expected lookup cost. Between grid nodes the CDF is linear.
#[derive(Clone, Debug)]
pub struct InverseCdfSampler {
    start: f64,
    step: f64,
    cdf: Vec<f64>,
    guide: Vec<usize>,
}

/// Grid span `[min center - 8 sigma, max center + 8 sigma]`.
pub const SAMPLER_SPAN_WIDTHS: f64 = 8.0;
/// Grid cells per width.
pub const SAMPLER_CELLS_PER_WIDTH: f64 = 200.0;

impl InverseCdfSampler {
    pub fn new(density: &TheoreticalDensity) -> Result<Self> {
        let mixture = density.mixture();
        let (lo, hi) = mixture.support(SAMPLER_SPAN_WIDTHS);
        let step_max = mixture.sigma() / SAMPLER_CELLS_PER_WIDTH;
        let cells = ((hi - lo) / step_max).ceil().max(1.0) as usize;
        let step = (hi - lo) / cells as f64;
        let mut cdf = Vec::with_capacity(cells + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..cells {
            let a = lo + i as f64 * step;
            acc += mixture.mass_between(a, a + step).max(0.0);
            cdf.push(acc);
        }
        if !(acc.is_finite() && acc > 0.0) {
            return Err(Error::DegenerateDensity(format!("grid mass {acc} on [{lo}, {hi}]")));
        }
        for v in &mut cdf {
            *v /= acc;
        }
        cdf[cells] = 1.0;
        let mut guide = Vec::with_capacity(cells);
        let mut i = 0;
        for j in 0..cells {
            let u = j as f64 / cells as f64;
            while cdf[i + 1] <= u && i + 1 < cells {
                i += 1;
            }
            guide.push(i);
        }
        Ok(Self {
            start: lo,
            step,
            cdf,
            guide,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let cells = self.guide.len();
        let mut i = self.guide[((u * cells as f64) as usize).min(cells - 1)];
        while i + 1 < cells && self.cdf[i + 1] <= u {
            i += 1;
        }
        let (c0, c1) = (self.cdf[i], self.cdf[i + 1]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.start + (i as f64 + frac) * self.step
    }
}

/// `count` i.i.d. photon positions drawn from the density.
pub fn sample_positions(density: &TheoreticalDensity, count: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = InverseCdfSampler::new(density)?;
    let mut rng = rng_from_seed(seed);
    Ok((0..count).map(|_| sampler.sample(&mut rng)).collect())
}

pub fn bin_to_pixels(positions: &[f64], geometry: DetectorGeometry) -> Result<SpatialHistogram> {
    let mut hist = SpatialHistogram::empty(geometry);
    for &x in positions {
        match geometry.pixel_index(x) {
            Some(i) => hist.counts[i] += 1,
            None => hist.overflow += 1,
        }
    }
    let total = positions.len() as u64;
    if hist.overflow as f64 > MAX_OVERFLOW_FRACTION * total as f64 {
        return Err(Error::DetectorOverflow {
            overflow: hist.overflow,
            total,
        });
    }
    Ok(hist)
}

/// Raw moment of order 1 or 2 of the normalized histogram, evaluated at pixel
/// centers.
pub fn empirical_moment(hist: &SpatialHistogram, order: u32) -> Result<f64> {
    PixelProfile::from_histogram(hist)?.raw_moment(order)
}

/// Normalized per-pixel probabilities, either measured or exact.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelProfile {
    geometry: DetectorGeometry,
    probabilities: Vec<f64>,
}

impl PixelProfile {
    pub fn from_histogram(hist: &SpatialHistogram) -> Result<Self> {
        let total = hist.total();
        if total == 0 {
            return Err(Error::EmptyHistogram);
        }
        Ok(Self {
            geometry: hist.geometry,
            probabilities: hist.counts.iter().map(|&c| c as f64 / total as f64).collect(),
        })
    }

    /// The infinite-statistics limit: each pixel holds its exact probability.
    pub fn from_density(density: &TheoreticalDensity, geometry: DetectorGeometry) -> Result<Self> {
        Self::from_weights(geometry, density.pixel_probabilities(&geometry))
    }

    pub fn from_weights(geometry: DetectorGeometry, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != geometry.pixels {
            return Err(Error::DimensionMismatch {
                expected: geometry.pixels,
                actual: weights.len(),
            });
        }
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::EmptyHistogram);
        }
        Ok(Self {
            geometry,
            probabilities: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn geometry(&self) -> &DetectorGeometry {
        &self.geometry
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn raw_moment(&self, order: u32) -> Result<f64> {
        if !(1..=2).contains(&order) {
            return Err(Error::UnsupportedMomentOrder(order));
        }
        Ok(self
            .probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| p * self.geometry.pixel_center(i).powi(order as i32))
            .sum())
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1).expect("order 1 is supported")
    }

    /// Second moment about `about`, evaluated at pixel centers.
    pub fn centered_second_moment(&self, about: f64) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, p)| p * (self.geometry.pixel_center(i) - about).powi(2))
            .sum()
    }
}

pub fn write_histogram_csv<W: Write>(hist: &SpatialHistogram, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for (i, c) in hist.counts.iter().enumerate() {
        w.write_record([i.to_string(), hist.geometry.pixel_center(i).to_string(), c.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a histogram CSV; the geometry is inferred from the pixel centers.
/// `source_name` is used in error messages.
pub fn read_histogram_csv<R: Read>(reader: R, source_name: &str) -> Result<SpatialHistogram> {
    let err = |row: usize, message: String| Error::Csv {
        source_name: source_name.to_string(),
        row,
        message,
    };
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = r.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if headers.iter().map(str::trim).ne(CSV_HEADER) {
        return Err(err(1, format!("expected header {}", CSV_HEADER.join(","))));
    }
    let mut centers = Vec::new();
    let mut counts = Vec::new();
    for (i, record) in r.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| err(row, e.to_string()))?;
        if record.len() != 3 {
            return Err(err(row, format!("expected 3 fields, found {}", record.len())));
        }
        let index: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| err(row, format!("bad pixel index {:?}", &record[0])))?;
        if index != i {
            return Err(err(row, format!("pixel index {index} out of sequence, expected {i}")));
        }
        let center: f64 = record[1]
            .trim()
            .parse()
            .ok()
            .filter(|c: &f64| c.is_finite())
            .ok_or_else(|| err(row, format!("bad center {:?}", &record[1])))?;
        let count: u64 = record[2]
            .trim()
            .parse()
            .map_err(|_| err(row, format!("bad count {:?}", &record[2])))?;
        centers.push(center);
        counts.push(count);
    }
    if centers.len() < 2 {
        return Err(err(centers.len() + 1, "need at least two pixel rows".into()));
    }
    let pitch = centers[1] - centers[0];
    let offset = centers[0] - 0.5 * pitch;
    let geometry = DetectorGeometry::new(pitch, centers.len(), offset).map_err(|e| err(3, e.to_string()))?;
    for (i, c) in centers.iter().enumerate() {
        if (c - geometry.pixel_center(i)).abs() > 1e-6 * pitch {
            return Err(err(i + 2, format!("center {c} breaks the uniform pixel pitch {pitch}")));
        }
    }
    Ok(SpatialHistogram {
        geometry,
        counts,
        overflow: 0,
    })
}
