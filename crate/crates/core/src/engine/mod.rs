//! Partition-and-bound key-rate lower bounds.
//!
//! The unknown yields `Y_k` and error rates `e_k` are constrained only
//! through the observed gains and QBERs. Partitioning the `(e₁, e₂)` domain
//! into boxes makes the entropy terms constant per box, and each box becomes
//! an LP; the smallest LP optimum over all boxes is a certified lower bound on
//! the privacy-amplification term of the key rate.

mod analytic;
mod bounds;
mod partition;

pub use analytic::{analytic_rate, AnalyticRate};
pub use bounds::{compute_error_upper_bound, ErrorAxis};
pub use partition::{build_partition, xi_max, Cell, Interval, Partition};

use crate::channel::IntensityStatistics;
use crate::error::{Error, Result};
use crate::finite::ToleranceSet;
use crate::lp::{build_cell_lp, solve_lp_with, LpOptions, LpStatus};
use crate::math::{entropy_bits, phi_unchecked, TruncationOrder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolVariant {
    Bb84,
    Cd,
    Decoy,
    Dscd,
}

impl ProtocolVariant {
    pub const ALL: [ProtocolVariant; 4] = [Self::Bb84, Self::Cd, Self::Decoy, Self::Dscd];

    pub fn uses_decoys(self) -> bool {
        matches!(self, Self::Decoy | Self::Dscd)
    }

    pub fn uses_two_photon(self) -> bool {
        matches!(self, Self::Cd | Self::Dscd)
    }

    /// The same protocol without the two-photon term.
    pub fn without_two_photon(self) -> Self {
        match self {
            Self::Cd => Self::Bb84,
            Self::Dscd => Self::Decoy,
            v => v,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bb84 => "bb84",
            Self::Cd => "cd",
            Self::Decoy => "decoy",
            Self::Dscd => "dscd",
        }
    }
}

impl fmt::Display for ProtocolVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown variant '{s}' (expected bb84, cd, decoy or dscd)")))
    }
}

/// Fixed `[0, e1_up] × [0, e2_up]` domain, skipping the bisection searches.
///
/// The caller is responsible for the bounds being valid upper bounds on the
/// feasible error rates; any bound computed for a weaker constraint system
/// (fewer terms, larger tolerances) is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainOverride {
    pub e1_up: f64,
    pub e2_up: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub truncation: TruncationOrder,
    pub grid: (usize, usize),
    pub f_ec: f64,
    pub clamp_negative: bool,
    pub refinement_passes: usize,
    pub domain: Option<DomainOverride>,
    pub bisection_width: f64,
    #[serde(skip)]
    pub lp: LpOptions,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            truncation: TruncationOrder::default(),
            grid: (40, 40),
            f_ec: 1.16,
            clamp_negative: true,
            refinement_passes: 0,
            domain: None,
            bisection_width: 1e-4,
            lp: LpOptions::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.0 == 0 || self.grid.1 == 0 {
            return Err(Error::config("grid resolution must be at least 1x1"));
        }
        if !(self.f_ec >= 1.0 && self.f_ec.is_finite()) {
            return Err(Error::config(format!("f_ec {} must be >= 1", self.f_ec)));
        }
        if !(self.bisection_width > 0.0 && self.bisection_width < 1.0) {
            return Err(Error::config(format!("bisection width {} not in (0, 1)", self.bisection_width)));
        }
        if let Some(d) = self.domain {
            for v in [d.e1_up, d.e2_up] {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(Error::config(format!("domain bound {v} not in (0, 1]")));
                }
            }
        }
        Ok(())
    }
}

/// One cell's LP optimum, or `None` if the statistics exclude the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellValue {
    pub cell: Cell,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBound {
    pub r_lb: f64,
    pub cells: Vec<CellValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub variant: ProtocolVariant,
    pub rate_per_pulse: f64,
    pub r_lb: f64,
    pub analytic: Option<AnalyticRate>,
    pub e1_up: f64,
    pub e2_up: Option<f64>,
    pub cells: Vec<CellValue>,
    pub config: EngineConfig,
    pub tolerances: ToleranceSet,
}

/// The privacy-amplification term `Σ_{k∈{1,2}} Y_k (μ^k/k!) (1 − Φ((2e_k−1)^k))`
/// at a given point; the `k = 2` term only for two-photon variants.
pub fn privacy_objective(mu: f64, y1: f64, e1: f64, y2: f64, e2: f64, variant: ProtocolVariant) -> f64 {
    let single = y1 * mu * (1.0 - phi_unchecked(2.0 * e1 - 1.0));
    if variant.uses_two_photon() {
        let x = 2.0 * e2 - 1.0;
        single + y2 * mu * mu / 2.0 * (1.0 - phi_unchecked(x * x))
    } else {
        single
    }
}

fn validate_inputs(stats: &[IntensityStatistics], tolerances: &ToleranceSet, variant: ProtocolVariant) -> Result<()> {
    if stats.is_empty() {
        return Err(Error::config("no intensity statistics"));
    }
    for s in stats {
        s.validate()?;
    }
    tolerances.validate()?;
    if tolerances.len() != stats.len() {
        return Err(Error::config(format!(
            "{} tolerances for {} intensities",
            tolerances.len(),
            stats.len()
        )));
    }
    if variant.uses_decoys() && stats.len() < 2 {
        return Err(Error::config(format!("variant {variant} needs at least one decoy intensity")));
    }
    Ok(())
}

/// Minimum of the cell LP optima over `partition`, after the configured
/// number of refinement passes (each splits the minimising cells).
pub fn lower_bound_objective(
    stats: &[IntensityStatistics],
    tolerances: &ToleranceSet,
    partition: &Partition,
    config: &EngineConfig,
    variant: ProtocolVariant,
) -> Result<ObjectiveBound> {
    validate_inputs(stats, tolerances, variant)?;
    config.validate()?;
    let solve_all = |cells: &[Cell]| -> Result<Vec<CellValue>> {
        cells
            .par_iter()
            .map(|cell| {
                let lp = build_cell_lp(stats, tolerances, config.truncation, cell, variant)?;
                let sol = solve_lp_with(&lp, &config.lp)?;
                let value = match sol.status {
                    LpStatus::Optimal => Some(sol.objective_value),
                    LpStatus::Infeasible => None,
                    LpStatus::Unbounded => {
                        return Err(Error::Solver("cell LP reported unbounded on a bounded domain".into()))
                    }
                };
                Ok(CellValue { cell: *cell, value })
            })
            .collect()
    };

    let mut values = solve_all(&partition.cells)?;
    let mut r_lb = minimum(&values)?;
    for _ in 0..config.refinement_passes {
        let (split, keep): (Vec<CellValue>, Vec<CellValue>) = values
            .into_iter()
            .partition(|c| c.value.is_some_and(|v| v <= r_lb + 1e-12));
        let children: Vec<Cell> = split.iter().flat_map(|c| c.cell.split()).collect();
        values = keep;
        values.extend(solve_all(&children)?);
        r_lb = minimum(&values)?;
    }
    Ok(ObjectiveBound { r_lb, cells: values })
}

fn minimum(values: &[CellValue]) -> Result<f64> {
    values
        .iter()
        .filter_map(|c| c.value)
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Inconsistent("every partition cell is infeasible".into()))
}

/// `R = ½·(−Q_μ f H(E_μ) + e^{−μ} r_lb)`, clamped at zero when configured.
pub fn assemble_rate(signal: &IntensityStatistics, r_lb: f64, config: &EngineConfig) -> Result<f64> {
    signal.validate()?;
    let raw = 0.5 * (-signal.gain * config.f_ec * entropy_bits(signal.qber) + (-signal.mean_photon).exp() * r_lb);
    Ok(if config.clamp_negative { raw.max(0.0) } else { raw })
}

/// Full pipeline: domain bounds, partition, cell LPs and rate assembly.
///
/// `stats[0]` is the signal intensity.
pub fn compute_rate(
    stats: &[IntensityStatistics],
    tolerances: &ToleranceSet,
    config: &EngineConfig,
    variant: ProtocolVariant,
) -> Result<RateResult> {
    validate_inputs(stats, tolerances, variant)?;
    config.validate()?;

    let (e1_up, e2_up) = match config.domain {
        Some(d) => (d.e1_up, variant.uses_two_photon().then_some(d.e2_up)),
        None => {
            let e1_up = compute_error_upper_bound(ErrorAxis::E1, stats, tolerances, config, variant)?;
            let e2_up = if variant.uses_two_photon() {
                Some(compute_error_upper_bound(ErrorAxis::E2 { e1_up }, stats, tolerances, config, variant)?)
            } else {
                None
            };
            (e1_up, e2_up)
        }
    };
    let partition = build_partition(e1_up, e2_up, config.grid)?;
    let bound = lower_bound_objective(stats, tolerances, &partition, config, variant)?;
    let rate_per_pulse = assemble_rate(&stats[0], bound.r_lb, config)?;
    let analytic = if variant.uses_decoys() && stats.len() == 2 {
        analytic_rate(&stats[0], &stats[1], config.f_ec).ok()
    } else {
        None
    };
    Ok(RateResult {
        variant,
        rate_per_pulse,
        r_lb: bound.r_lb,
        analytic,
        e1_up,
        e2_up,
        cells: bound.cells,
        config: config.clone(),
        tolerances: tolerances.clone(),
    })
}
