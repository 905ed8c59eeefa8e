//! Shrinking the partitioned domain to error rates the statistics allow.

use super::partition::{Cell, Interval};
use super::{EngineConfig, ProtocolVariant};
use crate::channel::IntensityStatistics;
use crate::error::{Error, Result};
use crate::finite::ToleranceSet;
use crate::lp::{build_cell_lp, solve_lp_with, LpStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorAxis {
    E1,
    /// Searched with `e₁` restricted to `[0, e1_up]`.
    E2 { e1_up: f64 },
}

/// Upper bound on the largest error rate on `axis` compatible with the statistics.
///
/// Feasibility of `e_k ≥ t` (as `z_k ≥ t·Y_k`) can only be lost as `t` grows,
/// so bisection on `t` brackets the supremum; the upper end of the final
/// bracket is returned, which never under-estimates it.
pub fn compute_error_upper_bound(
    axis: ErrorAxis,
    stats: &[IntensityStatistics],
    tolerances: &ToleranceSet,
    config: &EngineConfig,
    variant: ProtocolVariant,
) -> Result<f64> {
    let feasible = |t: f64| -> Result<bool> {
        let cell = match axis {
            ErrorAxis::E1 => Cell::new(Interval { lo: t, hi: 1.0 }, Some(Interval { lo: 0.0, hi: 1.0 })),
            ErrorAxis::E2 { e1_up } => {
                Cell::new(Interval { lo: 0.0, hi: e1_up }, Some(Interval { lo: t, hi: 1.0 }))
            }
        };
        let lp = build_cell_lp(stats, tolerances, config.truncation, &cell, variant)?;
        Ok(solve_lp_with(&lp, &config.lp)?.status == LpStatus::Optimal)
    };

    if !feasible(0.0)? {
        return Err(Error::Inconsistent(
            "the constraint system is infeasible for every error rate".into(),
        ));
    }
    if feasible(1.0)? {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > config.bisection_width {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
