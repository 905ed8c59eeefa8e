//! Closed-form single-decoy bounds on `Y₀`, `Y₁` and `e₁`.

use crate::channel::IntensityStatistics;
use crate::error::{Error, Result};
use crate::lp::VACUUM_ERROR_RATE;
use crate::math::entropy_bits;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRate {
    pub rate_per_pulse: f64,
    pub y0_upper: f64,
    pub y1_lower: f64,
    pub e1_upper: f64,
    /// Set when the statistics give no positive single-photon yield bound;
    /// the rate is then reported as zero.
    pub degenerate: bool,
}

/// Vacuum + weak decoy estimate of the key rate from a signal `μ` and one decoy `ν < μ`.
pub fn analytic_rate(signal: &IntensityStatistics, decoy: &IntensityStatistics, f_ec: f64) -> Result<AnalyticRate> {
    let (mu, nu) = (signal.mean_photon, decoy.mean_photon);
    if !(nu > 0.0 && nu < mu) {
        return Err(Error::domain(format!("analytic bound needs 0 < nu < mu, got nu = {nu}, mu = {mu}")));
    }
    signal.validate()?;
    decoy.validate()?;

    let decoy_errors = decoy.qber * decoy.gain * nu.exp();
    let y0_upper = decoy_errors / VACUUM_ERROR_RATE;
    let y1_raw = mu / (mu * nu - nu * nu)
        * (decoy.gain * nu.exp()
            - signal.gain * mu.exp() * (nu * nu) / (mu * mu)
            - y0_upper * (mu * mu - nu * nu) / (mu * mu));
    if y1_raw.is_nan() || y1_raw <= 0.0 {
        return Ok(AnalyticRate {
            rate_per_pulse: 0.0,
            y0_upper,
            y1_lower: y1_raw,
            e1_upper: VACUUM_ERROR_RATE,
            degenerate: true,
        });
    }
    let y1_lower = y1_raw.min(1.0);
    let e1_upper = (decoy_errors / (y1_lower * nu)).clamp(0.0, 0.5);
    let leak = signal.gain * f_ec * entropy_bits(signal.qber);
    let privacy = y1_lower * mu * (-mu).exp() * (1.0 - entropy_bits(e1_upper));
    Ok(AnalyticRate {
        rate_per_pulse: 0.5 * (privacy - leak).max(0.0),
        y0_upper,
        y1_lower,
        e1_upper,
        degenerate: false,
    })
}
