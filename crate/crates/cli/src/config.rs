//! Experiment configuration.
//!
//! The file is flat TOML: one `key = value` assignment per line, `#` starts a
//! comment. Every key is optional; missing keys take the defaults below.
//!
//! ```toml
//! theta = 0.7853981633974483        # probe angle (radians)
//! sigma_um = 150.0                  # packet width
//! # unit_shift_um = 114.0           # if absent, calibrated from the two keys below
//! calibration_target = 0.58
//! calibration_reference = [2, 0, 2, 2, 0]
//! multipliers = [0.0, 1.0, 2.0, 3.0, 4.0]
//! probabilities = [0.2, 0.2, 0.2, 0.2, 0.2]
//! events = 6
//! trials = 10
//! photons = 1000000
//! pixel_pitch_um = 13.0
//! pixel_count = 1024
//! pixel_offset_um = -6656.0
//! seed = 1
//! estimator = "moments"             # or "l2"
//! output_dir = "out"
//! # forced_configuration = [2, 0, 2, 2, 0]
//! # mean_tolerance_um = 20.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use zeno_core::channel::{calibrate_unit_shift, Calibration, ProbeState};
use zeno_core::detector::{DetectorGeometry, DEFAULT_PIXEL_COUNT, DEFAULT_PIXEL_PITCH_UM};
use zeno_core::estimator::EstimatorKind;
use zeno_core::experiment::ExperimentSpec;
use zeno_core::noise_model::{Configuration, NoiseAlphabet};

pub const DEFAULT_SIGMA_UM: f64 = 150.0;
pub const DEFAULT_CALIBRATION_TARGET: f64 = 0.58;
pub const DEFAULT_REFERENCE: &str = "(2,0,2,2,0)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub theta: f64,
    pub sigma_um: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit_shift_um: Option<f64>,
    pub calibration_target: f64,
    pub calibration_reference: Configuration,
    pub multipliers: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub events: u32,
    pub trials: usize,
    pub photons: usize,
    pub pixel_pitch_um: f64,
    pub pixel_count: usize,
    pub pixel_offset_um: f64,
    pub seed: u64,
    pub estimator: EstimatorKind,
    pub output_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forced_configuration: Option<Configuration>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_tolerance_um: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            theta: std::f64::consts::FRAC_PI_4,
            sigma_um: DEFAULT_SIGMA_UM,
            unit_shift_um: None,
            calibration_target: DEFAULT_CALIBRATION_TARGET,
            calibration_reference: DEFAULT_REFERENCE.parse().expect("valid reference"),
            multipliers: vec![0.0, 1.0, 2.0, 3.0, 4.0],
            probabilities: vec![0.2; 5],
            events: 6,
            trials: 10,
            photons: 1_000_000,
            pixel_pitch_um: DEFAULT_PIXEL_PITCH_UM,
            pixel_count: DEFAULT_PIXEL_COUNT,
            pixel_offset_um: -0.5 * DEFAULT_PIXEL_PITCH_UM * DEFAULT_PIXEL_COUNT as f64,
            seed: 1,
            estimator: EstimatorKind::Moments,
            output_dir: PathBuf::from("out"),
            forced_configuration: None,
            mean_tolerance_um: None,
        }
    }
}

/// A configuration with its derived objects.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub probe: ProbeState,
    pub alphabet: NoiseAlphabet,
    pub geometry: DetectorGeometry,
    pub calibration: Option<Calibration>,
}

fn field(name: &str, message: impl fmt::Display) -> anyhow::Error {
    anyhow::anyhow!("field `{name}`: {message}")
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && (0.0..=std::f64::consts::FRAC_PI_2).contains(&self.theta)) {
            return Err(field("theta", format!("must lie in [0, pi/2], got {}", self.theta)));
        }
        if !(self.sigma_um.is_finite() && self.sigma_um > 0.0) {
            return Err(field("sigma_um", "must be positive"));
        }
        if let Some(g) = self.unit_shift_um {
            if !(g.is_finite() && g >= 0.0) {
                return Err(field("unit_shift_um", "must be non-negative"));
            }
        }
        if self.multipliers.len() != self.probabilities.len() {
            return Err(field(
                "probabilities",
                format!(
                    "{} entries for {} multipliers",
                    self.probabilities.len(),
                    self.multipliers.len()
                ),
            ));
        }
        NoiseAlphabet::new(1.0, self.multipliers.clone(), self.probabilities.clone())
            .map_err(|e| field("probabilities", e.to_string()))?;
        if self.events == 0 {
            return Err(field("events", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(field("trials", "must be at least 1"));
        }
        if self.photons == 0 {
            return Err(field("photons", "must be at least 1"));
        }
        DetectorGeometry::new(self.pixel_pitch_um, self.pixel_count, self.pixel_offset_um)
            .map_err(|e| field("pixel_pitch_um", e.to_string()))?;
        if let Some(c) = &self.forced_configuration {
            if c.len() != self.multipliers.len() || c.total() != self.events {
                return Err(field(
                    "forced_configuration",
                    format!(
                        "{c} does not have {} entries summing to {}",
                        self.multipliers.len(),
                        self.events
                    ),
                ));
            }
        }
        if self.calibration_reference.len() != self.multipliers.len() {
            return Err(field("calibration_reference", "length differs from multipliers"));
        }
        if let Some(t) = self.mean_tolerance_um {
            if !(t.is_finite() && t >= 0.0) {
                return Err(field("mean_tolerance_um", "must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn probe(&self) -> ProbeState {
        ProbeState::new(self.theta).expect("validated")
    }

    /// Event multipliers of the calibration reference realization.
    pub fn reference_multipliers(&self) -> Vec<f64> {
        self.calibration_reference
            .event_indices()
            .into_iter()
            .map(|i| self.multipliers[i])
            .collect()
    }

    pub fn calibrate(&self, target: f64) -> Result<Calibration> {
        calibrate_unit_shift(self.probe(), self.sigma_um, &self.reference_multipliers(), target)
            .with_context(|| format!("calibration to target {target} failed"))
    }

    /// Fixes the unit shift (calibrating if needed) and builds derived objects.
    pub fn resolve(&self) -> Result<Resolved> {
        self.validate()?;
        let (unit_shift, calibration) = match self.unit_shift_um {
            Some(g) => (g, None),
            None => {
                let c = self.calibrate(self.calibration_target)?;
                (c.unit_shift, Some(c))
            }
        };
        let alphabet = NoiseAlphabet::new(unit_shift, self.multipliers.clone(), self.probabilities.clone())?;
        let geometry = DetectorGeometry::new(self.pixel_pitch_um, self.pixel_count, self.pixel_offset_um)?;
        let mut config = self.clone();
        config.unit_shift_um = Some(unit_shift);
        Ok(Resolved {
            probe: config.probe(),
            config,
            alphabet,
            geometry,
            calibration,
        })
    }
}

impl Resolved {
    pub fn spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            probe: self.probe,
            sigma: self.config.sigma_um,
            alphabet: self.alphabet.clone(),
            events: self.config.events,
            trials: self.config.trials,
            photons: self.config.photons,
            geometry: self.geometry,
            seed: self.config.seed,
            forced: self.config.forced_configuration.clone(),
        }
    }
}

/// Reads the config file if given, otherwise the defaults.
pub fn load_or_default(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

pub fn ensure_positive(name: &str, value: usize) -> Result<usize> {
    if value == 0 {
        bail!("--{name} must be at least 1");
    }
    Ok(value)
}
