//! End-to-end trials: draw a channel realization, run the protected channel,
//! detect photons, and reconstruct the event multiplicities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{run_protected, run_unprotected, ProbeState, RunReport};
use crate::detector::{
    bin_to_pixels, sample_positions, DetectorGeometry, PixelProfile, SpatialHistogram, TheoreticalDensity,
};
use crate::error::Result;
use crate::estimator::{build_report, estimate, CandidateTable, EstimateReport, EstimatorKind, Reconstruction};
use crate::noise_model::{sample_event_indices, Configuration, NoiseAlphabet};
use crate::seeding::{derive_seed, rng_from_seed, PHOTON_STREAM, REALIZATION_STREAM};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub probe: ProbeState,
    pub sigma: f64,
    pub alphabet: NoiseAlphabet,
    pub events: u32,
    pub trials: usize,
    pub photons: usize,
    pub geometry: DetectorGeometry,
    pub seed: u64,
    /// Use this multiset in every trial instead of sampling one.
    pub forced: Option<Configuration>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialOutput {
    pub trial: usize,
    pub seed: u64,
    pub event_indices: Vec<usize>,
    pub configuration: Configuration,
    pub run: RunReport,
    pub unprotected_survival: f64,
    pub histogram: SpatialHistogram,
}

pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, trial as u64)
}

pub fn simulate_trial(spec: &ExperimentSpec, trial: usize) -> Result<TrialOutput> {
    let seed = trial_seed(spec.seed, trial);
    let event_indices = match &spec.forced {
        Some(config) => config.event_indices(),
        None => {
            let mut rng = rng_from_seed(derive_seed(seed, REALIZATION_STREAM));
            sample_event_indices(&spec.alphabet, spec.events as usize, &mut rng)?
        }
    };
    let configuration = Configuration::from_event_indices(&event_indices, spec.alphabet.len())?;
    let realization = spec.alphabet.realization(&event_indices)?;
    let run = run_protected(spec.probe, spec.sigma, &realization)?;
    let unprotected_survival = run_unprotected(spec.probe, spec.sigma, &realization)?;
    let density = TheoreticalDensity::from_state(run.final_state.clone())?;
    let positions = sample_positions(&density, spec.photons, derive_seed(seed, PHOTON_STREAM))?;
    let histogram = bin_to_pixels(&positions, spec.geometry)?;
    Ok(TrialOutput {
        trial,
        seed,
        event_indices,
        configuration,
        run,
        unprotected_survival,
        histogram,
    })
}

/// All trials of the experiment, in trial order.
pub fn simulate(spec: &ExperimentSpec) -> Result<Vec<TrialOutput>> {
    (0..spec.trials)
        .into_par_iter()
        .map(|t| simulate_trial(spec, t))
        .collect()
}

pub fn reconstruct_all(
    histograms: &[SpatialHistogram],
    table: &CandidateTable,
    kind: EstimatorKind,
    mean_tolerance: Option<f64>,
) -> Result<Vec<Reconstruction>> {
    histograms
        .par_iter()
        .map(|h| estimate(kind, &PixelProfile::from_histogram(h)?, table, mean_tolerance))
        .collect()
}

/// Simulates every trial, reconstructs each one and pools the result.
pub fn run_end_to_end(
    spec: &ExperimentSpec,
    table: &CandidateTable,
    kind: EstimatorKind,
) -> Result<(Vec<TrialOutput>, EstimateReport)> {
    let outputs = simulate(spec)?;
    let histograms: Vec<SpatialHistogram> = outputs.iter().map(|o| o.histogram.clone()).collect();
    let trials = reconstruct_all(&histograms, table, kind, None)?;
    let report = build_report(&trials, &spec.alphabet, spec.events)?;
    Ok((outputs, report))
}
