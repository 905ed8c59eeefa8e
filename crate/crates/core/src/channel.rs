//! Honest-channel statistics for phase-randomised weak coherent pulses.
//!
//! A `k`-photon pulse is detected with probability `η_k = 1 − (1−η)^k`; background
//! clicks occur independently with probability `Y₀`. Gains and QBERs are Poisson
//! mixtures of the per-photon-number yields and error rates.

use crate::error::{Error, Result};
use crate::math::{poisson_weight, theta_truncation};
use serde::{Deserialize, Serialize};

/// Poisson tail mass below which the gain/QBER series are cut off.
pub const SERIES_TAIL_TOLERANCE: f64 = 1e-12;

pub const DEFAULT_BACKGROUND_ERROR: f64 = 0.5;
pub const DEFAULT_DARK_YIELD: f64 = 1.7e-6;
pub const DEFAULT_MISALIGNMENT: f64 = 0.033;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Overall single-photon transmittance times detector efficiency.
    pub eta: f64,
    /// Background (dark count) yield `Y₀`.
    pub y0: f64,
    /// Misalignment error `e_d`.
    pub e_detector: f64,
    /// Error rate of background clicks `e₀`.
    #[serde(default = "default_background_error")]
    pub e_background: f64,
}

fn default_background_error() -> f64 {
    DEFAULT_BACKGROUND_ERROR
}

impl ChannelParams {
    pub fn new(eta: f64, y0: f64, e_detector: f64, e_background: f64) -> Result<Self> {
        let params = Self { eta, y0, e_detector, e_background };
        params.validate()?;
        Ok(params)
    }

    /// Default dark yield and misalignment with the given transmittance.
    pub fn honest(eta: f64) -> Result<Self> {
        Self::new(eta, DEFAULT_DARK_YIELD, DEFAULT_MISALIGNMENT, DEFAULT_BACKGROUND_ERROR)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("eta", self.eta)?;
        check_unit("y0", self.y0)?;
        check_unit("e_background", self.e_background)?;
        if !(0.0..=0.5).contains(&self.e_detector) {
            return Err(Error::domain(format!(
                "e_detector {} not in [0, 1/2]",
                self.e_detector
            )));
        }
        Ok(())
    }
}

/// Fiber link: exponential attenuation in front of a receiver of fixed efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    #[serde(default = "default_alpha")]
    pub alpha_db_per_km: f64,
    #[serde(default = "default_eta_receiver")]
    pub eta_receiver: f64,
}

fn default_alpha() -> f64 {
    0.2
}

fn default_eta_receiver() -> f64 {
    0.3
}

impl Default for LinkModel {
    fn default() -> Self {
        Self { alpha_db_per_km: default_alpha(), eta_receiver: default_eta_receiver() }
    }
}

impl LinkModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_db_per_km.is_finite() && self.alpha_db_per_km >= 0.0) {
            return Err(Error::domain(format!(
                "attenuation {} dB/km must be >= 0",
                self.alpha_db_per_km
            )));
        }
        check_unit("eta_receiver", self.eta_receiver)
    }
}

/// Observed (or expected) gain and QBER at one intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityStatistics {
    pub label: String,
    pub mean_photon: f64,
    pub gain: f64,
    pub qber: f64,
    /// Undiscarded rounds at this intensity; 0 for asymptotic statistics.
    #[serde(default)]
    pub rounds: u64,
}

impl IntensityStatistics {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_photon.is_finite() && self.mean_photon >= 0.0) {
            return Err(Error::domain(format!(
                "{}: mean photon number {} must be >= 0",
                self.label, self.mean_photon
            )));
        }
        check_unit(&format!("{}: gain", self.label), self.gain)?;
        check_unit(&format!("{}: qber", self.label), self.qber)
    }
}

pub fn eta_k(params: &ChannelParams, k: usize) -> f64 {
    1.0 - (1.0 - params.eta).powi(k as i32)
}

pub fn yield_k(params: &ChannelParams, k: usize) -> f64 {
    let eta_k = eta_k(params, k);
    params.y0 + eta_k - params.y0 * eta_k
}

/// `e_k = (e₀Y₀ + e_d η_k) / Y_k`.
pub fn error_rate_k(params: &ChannelParams, k: usize) -> Result<f64> {
    let y = yield_k(params, k);
    if y <= 0.0 {
        return Err(Error::UndefinedRate(format!("yield Y_{k} is zero")));
    }
    Ok(error_weight_k(params, k) / y)
}

/// `e_k Y_k`, well defined even when `Y_k = 0`.
fn error_weight_k(params: &ChannelParams, k: usize) -> f64 {
    params.e_background * params.y0 + params.e_detector * eta_k(params, k)
}

/// Smallest `n` whose Poisson tail mass beyond `n` is below [`SERIES_TAIL_TOLERANCE`].
pub fn series_terms(mu: f64) -> Result<usize> {
    let mut n = 0;
    while theta_truncation(mu, n)? * (-mu).exp() >= SERIES_TAIL_TOLERANCE {
        n += 1;
    }
    Ok(n)
}

/// Gain `Q_μ = Σ_k Y_k P_μ(k)`, summed until the Poisson tail is negligible.
pub fn gain(params: &ChannelParams, mu: f64) -> Result<f64> {
    gain_truncated(params, mu, series_terms(mu)?)
}

pub fn gain_truncated(params: &ChannelParams, mu: f64, n_terms: usize) -> Result<f64> {
    (0..=n_terms).try_fold(0.0, |acc, k| Ok(acc + yield_k(params, k) * poisson_weight(mu, k)?))
}

/// QBER `E_μ = Σ_k e_k Y_k P_μ(k) / Q_μ`.
pub fn qber(params: &ChannelParams, mu: f64) -> Result<f64> {
    qber_truncated(params, mu, series_terms(mu)?)
}

pub fn qber_truncated(params: &ChannelParams, mu: f64, n_terms: usize) -> Result<f64> {
    let q = gain_truncated(params, mu, n_terms)?;
    if q <= 0.0 {
        return Err(Error::UndefinedRate(format!("gain at mu = {mu} is zero")));
    }
    let weighted = (0..=n_terms)
        .try_fold(0.0, |acc, k| Ok::<_, Error>(acc + error_weight_k(params, k) * poisson_weight(mu, k)?))?;
    Ok(weighted / q)
}

/// Overall transmittance after `distance_km` of fiber.
pub fn eta_from_distance(link: &LinkModel, distance_km: f64) -> Result<f64> {
    link.validate()?;
    if !(distance_km.is_finite() && distance_km >= 0.0) {
        return Err(Error::domain(format!("distance {distance_km} km must be >= 0")));
    }
    Ok(link.eta_receiver * 10f64.powf(-link.alpha_db_per_km * distance_km / 10.0))
}

/// Probability that both of Bob's measurement ports click in one round.
///
/// Transmitted photons split independently between the two ports, so each
/// port sees Poisson(ημ/2) photons; each port also fires a dark count with
/// probability `Y₀/2`.
pub fn coincidence_probability(params: &ChannelParams, mu: f64) -> Result<f64> {
    params.validate()?;
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::domain(format!("mean photon number {mu} must be >= 0")));
    }
    let port_click = 1.0 - (-params.eta * mu / 2.0).exp() * (1.0 - params.y0 / 2.0);
    Ok(port_click * port_click)
}

/// Asymptotic statistics for each intensity; the first is labelled the signal.
pub fn expected_statistics(
    params: &ChannelParams,
    intensities: &[f64],
) -> Result<Vec<IntensityStatistics>> {
    params.validate()?;
    if intensities.is_empty() {
        return Err(Error::domain("at least one intensity is required"));
    }
    intensities
        .iter()
        .enumerate()
        .map(|(i, &mu)| {
            Ok(IntensityStatistics {
                label: default_label(i),
                mean_photon: mu,
                gain: gain(params, mu)?,
                qber: qber(params, mu)?,
                rounds: 0,
            })
        })
        .collect()
}

pub fn default_label(index: usize) -> String {
    if index == 0 {
        "signal".to_string()
    } else {
        format!("decoy{index}")
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {v} not in [0, 1]")))
    }
}
