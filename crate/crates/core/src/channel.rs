//! Radio propagation and success model.
//!
//! All powers are normalized to the unit noise floor. Mean path gains follow
//! the free-space rule `d^-2`; per-slot gain and noise realizations are
//! Gaussian around their means with a configurable relative standard
//! deviation, clamped below at zero since negative powers are unphysical.
//! A transmission succeeds when the SINR at the receiver meets the threshold
//! (inclusive).

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("noise power must be positive, got {0}")]
    NonPositiveNoise(f64),
}

/// Node identifiers for the four-terminal topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeId {
    /// Background traffic source.
    B,
    /// Cognitive transmitter.
    T,
    /// Receiver.
    R,
    /// Adversary.
    A,
}

/// Planar node location in distance units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Euclidean distance between two positions.
pub fn distance(a: Position, b: Position) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// Free-space mean path gain `d^-2`.
pub fn mean_gain(d: f64) -> Result<f64, ChannelError> {
    path_gain(d, 2.0)
}

/// Mean path gain `d^-exponent` for a configurable path-loss exponent.
pub fn path_gain(d: f64, exponent: f64) -> Result<f64, ChannelError> {
    if d <= 0.0 {
        return Err(ChannelError::NonPositiveDistance(d));
    }
    Ok(d.powf(-exponent))
}

/// One directed link's gain distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    /// Mean power gain (dimensionless).
    pub gain_mean: f64,
    /// Standard deviation as a fraction of `gain_mean`.
    pub gain_rel_std: f64,
    pub source: NodeId,
    pub dest: NodeId,
}

impl LinkModel {
    /// Build a link from node positions with a free-space-style mean gain.
    pub fn from_geometry(
        source: NodeId,
        dest: NodeId,
        source_pos: Position,
        dest_pos: Position,
        gain_rel_std: f64,
        pathloss_exponent: f64,
    ) -> Result<Self, ChannelError> {
        let gain_mean = path_gain(distance(source_pos, dest_pos), pathloss_exponent)?;
        Ok(Self {
            gain_mean,
            gain_rel_std,
            source,
            dest,
        })
    }
}

/// Thermal noise distribution at one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Mean noise power; 1 is the normalization unit.
    pub mean_power: f64,
    /// Standard deviation as a fraction of `mean_power`.
    pub rel_std: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            mean_power: 1.0,
            rel_std: 0.1,
        }
    }
}

fn sample_clamped<R: Rng>(mean: f64, std: f64, rng: &mut R) -> f64 {
    let normal = Normal::new(mean, std).expect("finite nonnegative std");
    normal.sample(rng).max(0.0)
}

/// Draw one gain realization, clamped below at zero.
pub fn sample_gain<R: Rng>(link: &LinkModel, rng: &mut R) -> f64 {
    sample_clamped(link.gain_mean, link.gain_rel_std * link.gain_mean, rng)
}

/// Draw one noise-power realization, clamped below at zero.
pub fn sample_noise<R: Rng>(noise: &NoiseModel, rng: &mut R) -> f64 {
    sample_clamped(noise.mean_power, noise.rel_std * noise.mean_power, rng)
}

/// Signal-to-interference-plus-noise ratio.
pub fn sinr(signal: f64, interference: f64, noise: f64) -> Result<f64, ChannelError> {
    if noise <= 0.0 {
        return Err(ChannelError::NonPositiveNoise(noise));
    }
    debug_assert!(signal >= 0.0 && interference >= 0.0);
    Ok(signal / (noise + interference))
}

/// Success test: SINR not less than the threshold (inclusive).
pub fn is_success(sinr_value: f64, threshold: f64) -> bool {
    sinr_value >= threshold
}
