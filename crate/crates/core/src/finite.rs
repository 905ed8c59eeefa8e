//! Hoeffding tolerances on observed gains and error rates, abort conditions,
//! and the coincidence consistency check.

use crate::channel::IntensityStatistics;
use crate::error::{Error, Result};
use crate::sim::ObservedStatistics;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityParams {
    pub epsilon_completeness: f64,
    pub epsilon_stat: f64,
    pub num_decoys: usize,
}

impl SecurityParams {
    pub fn new(epsilon_completeness: f64, epsilon_stat: f64, num_decoys: usize) -> Result<Self> {
        let params = Self { epsilon_completeness, epsilon_stat, num_decoys };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let (ec, es) = (self.epsilon_completeness, self.epsilon_stat);
        if !(ec > 0.0 && ec < 1.0) {
            return Err(Error::domain(format!("epsilon_completeness {ec} not in (0, 1)")));
        }
        if !(es >= 0.0 && ec - 2.0 * es > 0.0) {
            return Err(Error::domain(format!(
                "epsilon_stat {es} must satisfy 0 <= epsilon_stat < epsilon_completeness / 2"
            )));
        }
        Ok(())
    }

    /// Value of each exponential in [`completeness_bound`], `(ε_C − 2ε_stat) / (4(K+1))`.
    ///
    /// The bound sums `2(K+1)` exponentials with a leading factor 2, so this
    /// budget makes it equal `ε_C` exactly.
    fn term_budget(&self) -> f64 {
        (self.epsilon_completeness - 2.0 * self.epsilon_stat) / (4.0 * (self.num_decoys as f64 + 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tolerance {
    pub delta_gain: f64,
    pub delta_qber: f64,
}

/// Tolerances in the same order as the statistics they relax.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ToleranceSet {
    pub per_intensity: Vec<Tolerance>,
}

impl ToleranceSet {
    /// Asymptotic mode: no statistical slack.
    pub fn zero(intensities: usize) -> Self {
        Self { per_intensity: vec![Tolerance::default(); intensities] }
    }

    /// `δ^Q = δ^E = hoeffding_delta(N)` for each intensity's round count.
    pub fn from_rounds(rounds: &[u64], params: &SecurityParams) -> Result<Self> {
        let per_intensity = rounds
            .iter()
            .map(|&n| {
                let d = hoeffding_delta(n, params)?;
                Ok(Tolerance { delta_gain: d, delta_qber: d })
            })
            .collect::<Result<_>>()?;
        Ok(Self { per_intensity })
    }

    pub fn len(&self) -> usize {
        self.per_intensity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_intensity.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.per_intensity.iter().enumerate() {
            if !(t.delta_gain >= 0.0 && t.delta_qber >= 0.0) || !t.delta_gain.is_finite() || !t.delta_qber.is_finite() {
                return Err(Error::domain(format!("tolerance {i} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// `δ = sqrt(−ln((ε_C − 2ε_stat) / (4(K+1))) / (2N))`.
pub fn hoeffding_delta(rounds: u64, params: &SecurityParams) -> Result<f64> {
    params.validate()?;
    if rounds == 0 {
        return Err(Error::DegenerateStatistics("hoeffding tolerance needs at least one round".into()));
    }
    Ok((-params.term_budget().ln() / (2.0 * rounds as f64)).sqrt())
}

/// Upper bound on the probability that an honest run aborts.
pub fn completeness_bound(
    rounds: &[u64],
    tolerances: &ToleranceSet,
    params: &SecurityParams,
) -> Result<f64> {
    if rounds.len() != tolerances.len() {
        return Err(Error::config(format!(
            "{} round counts for {} tolerances",
            rounds.len(),
            tolerances.len()
        )));
    }
    let sum: f64 = rounds
        .iter()
        .zip(&tolerances.per_intensity)
        .map(|(&n, t)| {
            let n = n as f64;
            (-2.0 * n * t.delta_gain * t.delta_gain).exp() + (-2.0 * n * t.delta_qber * t.delta_qber).exp()
        })
        .sum();
    Ok(2.0 * sum + 2.0 * params.epsilon_stat)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Gain,
    ErrorFraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AbortDecision {
    Accept,
    Abort { label: String, quantity: Quantity, observed: f64, low: f64, high: f64 },
}

impl AbortDecision {
    pub fn is_accept(&self) -> bool {
        matches!(self, AbortDecision::Accept)
    }
}

impl std::fmt::Display for AbortDecision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AbortDecision::Accept => write!(f, "accept"),
            AbortDecision::Abort { label, quantity, observed, low, high } => {
                let q = match quantity {
                    Quantity::Gain => "gain",
                    Quantity::ErrorFraction => "error fraction",
                };
                write!(f, "abort: {label} {q} {observed} outside [{low}, {high}]")
            }
        }
    }
}

/// Tests each observed gain and error fraction against `expected ± δ`.
///
/// The error fraction is the share of sifted rounds in which Bob recorded the
/// wrong bit (rounds without a click contribute nothing), so its expectation
/// is `E·Q` for the conditional QBER `E`. Both quantities are means of bounded i.i.d.
/// indicators, which is what the Hoeffding tolerances control.
pub fn check_abort(
    observed: &ObservedStatistics,
    expected: &[IntensityStatistics],
    tolerances: &ToleranceSet,
) -> Result<AbortDecision> {
    let obs = &observed.per_intensity;
    if obs.len() != expected.len() || expected.len() != tolerances.len() {
        return Err(Error::LabelMismatch(format!(
            "{} observed, {} expected, {} tolerances",
            obs.len(),
            expected.len(),
            tolerances.len()
        )));
    }
    for ((o, e), t) in obs.iter().zip(expected).zip(&tolerances.per_intensity) {
        if o.stats.label != e.label {
            return Err(Error::LabelMismatch(format!(
                "observed '{}' against expected '{}'",
                o.stats.label, e.label
            )));
        }
        let checks = [
            (Quantity::Gain, o.stats.gain, e.gain, t.delta_gain),
            (Quantity::ErrorFraction, o.error_fraction, e.qber * e.gain, t.delta_qber),
        ];
        for (quantity, value, centre, delta) in checks {
            let (low, high) = (centre - delta, centre + delta);
            if !(low..=high).contains(&value) {
                return Ok(AbortDecision::Abort { label: e.label.clone(), quantity, observed: value, low, high });
            }
        }
    }
    Ok(AbortDecision::Accept)
}

/// True when `|observed − expected| ≤ half_width`.
pub fn check_coincidence_consistency(observed_rate: f64, expected_rate: f64, half_width: f64) -> Result<bool> {
    for (name, v) in [("observed_rate", observed_rate), ("expected_rate", expected_rate)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("{name} {v} not in [0, 1]")));
        }
    }
    if half_width.is_nan() || half_width < 0.0 {
        return Err(Error::domain(format!("half_width {half_width} must be >= 0")));
    }
    Ok((observed_rate - expected_rate).abs() <= half_width)
}
