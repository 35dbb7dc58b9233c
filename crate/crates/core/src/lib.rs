//! Zeno-protected qubit probe in a noisy channel.
//!
//! A polarization qubit crosses a channel of `N` stochastic coupling events,
//! each of which shifts the H-polarized part of the photon's transverse
//! wavepacket. Projecting back onto the initial polarization after every event
//! slows the decay of the qubit and imprints the multiset of event strengths
//! onto the transverse profile. This crate simulates that channel exactly and
//! recovers the event statistics from the detected profile.
//!
//! * [`wavepacket`]: closed-form algebra of shifted Gaussian superpositions.
//! * [`channel`]: protected and unprotected survival, decay exponents, Zeno
//!   scaling and calibration.
//! * [`noise_model`]: noise alphabet, multinomial sampling and candidate
//!   enumeration.
//! * [`detector`]: output densities, photon sampling, pixel binning, CSV I/O.
//! * [`estimator`]: L2 and two-stage moment reconstruction, trial pooling and
//!   Beta credible intervals.
//! * [`experiment`]: seeded end-to-end trials.

pub mod channel;
pub mod detector;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod noise_model;
pub mod seeding;
pub mod wavepacket;

pub use error::{Error, Result};
