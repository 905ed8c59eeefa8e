//! One partition cell's sub-problem as a linear program.
//!
//! With `z_k = e_k·Y_k` every constraint of the polynomial sub-problem is
//! linear: a box `e_k ∈ [a, b]` becomes `a·Y_k ≤ z_k ≤ b·Y_k`, and the
//! error-weighted gain sums are linear in `z`. Because `Y_k ≥ 0`, the map is
//! exact in both directions (for `Y_k = 0` any `e_k` in the box reproduces
//! `z_k = 0`).

use super::{LinearProgram, Relation};
use crate::channel::IntensityStatistics;
use crate::engine::{Cell, ProtocolVariant};
use crate::error::{Error, Result};
use crate::finite::ToleranceSet;
use crate::math::{series_term, theta_truncation, TruncationOrder};

/// Error rate of vacuum detections, which carry no information about Alice's bit.
pub const VACUUM_ERROR_RATE: f64 = 0.5;

/// Variable index of `Y_k`.
pub fn y_index(k: usize) -> usize {
    k
}

/// Variable index of `z_k = e_k·Y_k`.
pub fn z_index(n: TruncationOrder, k: usize) -> usize {
    n.get() + 1 + k
}

/// Builds the minimisation LP for `cell`.
///
/// The objective is the privacy-amplification term `Y₁μ(1−ξ₁) + Y₂(μ²/2)(1−ξ₂)`
/// (the second term only for two-photon variants) with the cell's `ξ^max`
/// constants. `stats[0]` is the signal; single-intensity variants ignore the rest.
pub fn build_cell_lp(
    stats: &[IntensityStatistics],
    tolerances: &ToleranceSet,
    n: TruncationOrder,
    cell: &Cell,
    variant: ProtocolVariant,
) -> Result<LinearProgram> {
    let signal = stats.first().ok_or_else(|| Error::config("no intensity statistics"))?;
    if tolerances.len() != stats.len() {
        return Err(Error::config(format!(
            "{} tolerances for {} intensities",
            tolerances.len(),
            stats.len()
        )));
    }
    if variant.uses_two_photon() && cell.e2.is_none() {
        return Err(Error::config(format!("variant {variant} needs e2 bounds on every cell")));
    }

    let terms = n.get() + 1;
    let vars = 2 * terms;
    let mu = signal.mean_photon;

    let mut objective = vec![0.0; vars];
    objective[y_index(1)] = mu * (1.0 - cell.xi1_max);
    if variant.uses_two_photon() {
        let xi2 = cell.xi2_max.unwrap_or(1.0);
        objective[y_index(2)] = mu * mu / 2.0 * (1.0 - xi2);
    }
    let mut lp = LinearProgram::new(objective, vec![(0.0, 1.0); vars]);

    let mut row = |pairs: &[(usize, f64)], relation, rhs| {
        let mut coeffs = vec![0.0; vars];
        for &(j, a) in pairs {
            coeffs[j] += a;
        }
        lp.add_constraint(coeffs, relation, rhs);
    };

    row(&[(z_index(n, 0), 1.0), (y_index(0), -VACUUM_ERROR_RATE)], Relation::Eq, 0.0);
    let mut boxed = |k: usize, lo: f64, hi: f64| {
        if lo > 0.0 {
            row(&[(z_index(n, k), 1.0), (y_index(k), -lo)], Relation::Ge, 0.0);
        }
        row(&[(z_index(n, k), 1.0), (y_index(k), -hi)], Relation::Le, 0.0);
    };
    boxed(1, cell.e1.lo, cell.e1.hi);
    match cell.e2 {
        Some(e2) => boxed(2, e2.lo, e2.hi),
        None => boxed(2, 0.0, 1.0),
    }
    for k in 3..terms {
        boxed(k, 0.0, 1.0);
    }

    let used = if variant.uses_decoys() { stats.len() } else { 1 };
    for (s, t) in stats.iter().zip(&tolerances.per_intensity).take(used) {
        let lambda = s.mean_photon;
        let scale = lambda.exp();
        let theta = theta_truncation(lambda, n.get())?;
        let gain_lo = (s.gain - t.delta_gain).max(0.0);
        let gain_hi = s.gain + t.delta_gain;
        let qber_lo = (s.qber - t.delta_qber).max(0.0);
        let qber_hi = s.qber + t.delta_qber;

        let y_terms: Vec<(usize, f64)> = (0..terms).map(|k| (y_index(k), series_term(lambda, k))).collect();
        let z_terms: Vec<(usize, f64)> = (0..terms).map(|k| (z_index(n, k), series_term(lambda, k))).collect();
        row(&y_terms, Relation::Ge, gain_lo * scale - theta);
        row(&y_terms, Relation::Le, gain_hi * scale);
        row(&z_terms, Relation::Ge, qber_lo * gain_lo * scale - theta);
        row(&z_terms, Relation::Le, qber_hi * gain_hi * scale);
    }
    Ok(lp)
}
