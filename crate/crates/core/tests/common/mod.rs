//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};
use qkdrate_core::channel::{self, ChannelParams, IntensityStatistics};
use qkdrate_core::lp::{LinearProgram, Relation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod hp {
    //! Arbitrary-precision reference values (256-bit mantissa).
    use super::*;

    const P: usize = 256;
    const RM: RoundingMode = RoundingMode::ToEven;

    fn num(x: f64) -> BigFloat {
        BigFloat::from_f64(x, P)
    }

    fn to_f64(x: &BigFloat) -> f64 {
        x.to_string().parse().expect("decimal rendering parses")
    }

    fn consts() -> Consts {
        Consts::new().expect("constants cache")
    }

    fn xlog2x(p: &BigFloat, cc: &mut Consts) -> BigFloat {
        if p.is_zero() {
            return num(0.0);
        }
        p.mul(&p.log2(P, RM, cc), P, RM).neg()
    }

    pub fn binary_entropy(x: f64) -> f64 {
        let cc = &mut consts();
        let x = num(x);
        let y = num(1.0).sub(&x, P, RM);
        to_f64(&xlog2x(&x, cc).add(&xlog2x(&y, cc), P, RM))
    }

    pub fn phi(x: f64) -> f64 {
        let cc = &mut consts();
        let p = num(0.5).add(&num(x).div(&num(2.0), P, RM), P, RM);
        let q = num(1.0).sub(&p, P, RM);
        to_f64(&xlog2x(&p, cc).add(&xlog2x(&q, cc), P, RM))
    }

    fn factorial(k: usize) -> BigFloat {
        (1..=k).fold(num(1.0), |acc, i| acc.mul(&num(i as f64), P, RM))
    }

    pub fn poisson_weight(lambda: f64, k: usize) -> f64 {
        let cc = &mut consts();
        let l = num(lambda);
        let term = l.powi(k, P, RM).mul(&l.neg().exp(P, RM, cc), P, RM);
        to_f64(&term.div(&factorial(k), P, RM))
    }

    /// `e^λ − Σ_{k≤n} λ^k/k!` by subtracting in high precision.
    pub fn theta(lambda: f64, n: usize) -> f64 {
        let cc = &mut consts();
        let l = num(lambda);
        let mut head = num(0.0);
        for k in 0..=n {
            head = head.add(&l.powi(k, P, RM).div(&factorial(k), P, RM), P, RM);
        }
        to_f64(&l.exp(P, RM, cc).sub(&head, P, RM))
    }

    pub fn hoeffding_delta(rounds: u64, ec: f64, es: f64, decoys: usize) -> f64 {
        let cc = &mut consts();
        let budget = num(ec)
            .sub(&num(2.0).mul(&num(es), P, RM), P, RM)
            .div(&num(4.0 * (decoys as f64 + 1.0)), P, RM);
        let v = budget.ln(P, RM, cc).neg().div(&num(2.0 * rounds as f64), P, RM);
        to_f64(&v.sqrt(P, RM))
    }
}

/// A halfspace `a·x ≤ b` or hyperplane `a·x = b`.
#[derive(Clone, Debug)]
pub struct Face {
    pub a: Vec<f64>,
    pub b: f64,
    pub equality: bool,
}

/// Faces of a [`LinearProgram`], bounds included.
pub fn lp_faces(lp: &LinearProgram) -> Vec<Face> {
    let n = lp.num_vars();
    let mut faces = Vec::new();
    for row in &lp.constraints {
        match row.relation {
            Relation::Le => faces.push(Face { a: row.coefficients.clone(), b: row.rhs, equality: false }),
            Relation::Ge => faces.push(Face {
                a: row.coefficients.iter().map(|v| -v).collect(),
                b: -row.rhs,
                equality: false,
            }),
            Relation::Eq => faces.push(Face { a: row.coefficients.clone(), b: row.rhs, equality: true }),
        }
    }
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if hi.is_finite() {
            faces.push(Face { a: e.clone(), b: hi, equality: false });
        }
        if lo.is_finite() {
            e[j] = -1.0;
            faces.push(Face { a: e, b: -lo, equality: false });
        }
    }
    faces
}

/// Minimum of `c·x` over a bounded polyhedron by enumerating every point
/// where `n` faces are tight. `None` if no such point is feasible.
pub fn vertex_min(c: &[f64], faces: &[Face], tol: f64) -> Option<(f64, Vec<f64>)> {
    let n = c.len();
    let m = faces.len();
    if n == 0 {
        return faces.iter().all(|f| if f.equality { f.b.abs() <= tol } else { f.b >= -tol }).then(|| (0.0, vec![]));
    }
    if m < n {
        return None;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut mat = vec![0.0; n * (n + 1)];
    loop {
        for (r, &f) in idx.iter().enumerate() {
            mat[r * (n + 1)..r * (n + 1) + n].copy_from_slice(&faces[f].a);
            mat[r * (n + 1) + n] = faces[f].b;
        }
        if let Some(x) = gauss(&mut mat, n) {
            let feasible = faces.iter().all(|f| {
                let v: f64 = f.a.iter().zip(&x).map(|(a, b)| a * b).sum();
                let t = tol * (1.0 + f.b.abs());
                if f.equality {
                    (v - f.b).abs() <= t
                } else {
                    v <= f.b + t
                }
            });
            if feasible {
                let obj: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, x));
                }
            }
        }
        // Next combination in lexicographic order.
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - n + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Solves the augmented `n × (n+1)` system in place.
fn gauss(mat: &mut [f64], n: usize) -> Option<Vec<f64>> {
    let w = n + 1;
    for k in 0..n {
        let p = (k..n).max_by(|&a, &b| mat[a * w + k].abs().total_cmp(&mat[b * w + k].abs()))?;
        if mat[p * w + k].abs() < 1e-12 {
            return None;
        }
        if p != k {
            for j in 0..w {
                mat.swap(k * w + j, p * w + j);
            }
        }
        for i in 0..n {
            if i != k {
                let f = mat[i * w + k] / mat[k * w + k];
                if f != 0.0 {
                    for j in k..w {
                        mat[i * w + j] -= f * mat[k * w + j];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| mat[i * w + n] / mat[i * w + i]).collect())
}

/// Random LP with `n ≤ 6` boxed variables and `m ≤ 8` rows. Coefficients
/// are multiples of 1/4 so that degenerate vertices and ties are common.
pub fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(0..=8);
    let q = |rng: &mut ChaCha8Rng, lo: i32, hi: i32| rng.random_range(lo..=hi) as f64 / 4.0;
    let objective = (0..n).map(|_| q(rng, -12, 12)).collect();
    let bounds = (0..n)
        .map(|_| {
            let lo = q(rng, -12, 4);
            (lo, lo + q(rng, 0, 16))
        })
        .collect();
    let mut lp = LinearProgram::new(objective, bounds);
    for _ in 0..m {
        let coeffs = (0..n).map(|_| if rng.random_bool(0.3) { 0.0 } else { q(rng, -12, 12) }).collect();
        let relation = match rng.random_range(0..10) {
            0 => Relation::Eq,
            1..=5 => Relation::Le,
            _ => Relation::Ge,
        };
        lp.add_constraint(coeffs, relation, q(rng, -16, 16));
    }
    lp
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Honest-channel statistics for a signal `mu` and decoys.
pub fn honest_stats(params: &ChannelParams, mu: f64, decoys: &[f64]) -> Vec<IntensityStatistics> {
    let mut intensities = vec![mu];
    intensities.extend_from_slice(decoys);
    channel::expected_statistics(params, &intensities).unwrap()
}

/// Random honest channel spanning short to long links and noisy detectors.
pub fn random_channel(rng: &mut ChaCha8Rng) -> ChannelParams {
    let eta = 10f64.powf(rng.random_range(-3.0..-0.3));
    let y0 = 10f64.powf(rng.random_range(-7.0..-4.0));
    let e_d = rng.random_range(0.005..0.05);
    ChannelParams::new(eta, y0, e_d, 0.5).unwrap()
}

/// True `(Y_k)` and `(e_k Y_k)` for `k = 0..=n`.
pub fn truth_point(params: &ChannelParams, n: usize) -> (Vec<f64>, Vec<f64>) {
    let y: Vec<f64> = (0..=n).map(|k| channel::yield_k(params, k)).collect();
    let z: Vec<f64> = (0..=n).map(|k| channel::error_rate_k(params, k).unwrap() * y[k]).collect();
    (y, z)
}

/// Independent evaluation of one cell's polynomial sub-problem at `n = 3`.
pub mod grid {
    use super::*;
    use qkdrate_core::engine::Cell;

    pub const N: usize = 3;

    /// `Φ` bound over `[lo, hi]` from the high-precision `Φ`.
    pub fn xi(k: i32, lo: f64, hi: f64) -> f64 {
        let (a, b) = (2.0 * lo - 1.0, 2.0 * hi - 1.0);
        if a <= 0.0 && b >= 0.0 {
            1.0
        } else {
            hp::phi(a.powi(k)).max(hp::phi(b.powi(k)))
        }
    }

    fn series(lambda: f64, k: usize) -> f64 {
        lambda.powi(k as i32) / (1..=k).product::<usize>() as f64
    }

    /// Gain and error rows with `e = (1/2, e1, e2, e3)` fixed, as faces over `Y₀..Y₃`.
    pub fn y_faces(stats: &[IntensityStatistics], e: [f64; 4]) -> Vec<Face> {
        let mut faces = Vec::new();
        for s in stats {
            let l = s.mean_photon;
            let theta = hp::theta(l, N);
            let c: Vec<f64> = (0..=N).map(|k| series(l, k)).collect();
            let ce: Vec<f64> = (0..=N).map(|k| e[k] * c[k]).collect();
            let q = s.gain * l.exp();
            let eq = s.qber * s.gain * l.exp();
            faces.push(Face { a: c.iter().map(|v| -v).collect(), b: -(q - theta), equality: false });
            faces.push(Face { a: c, b: q, equality: false });
            faces.push(Face { a: ce.iter().map(|v| -v).collect(), b: -(eq - theta), equality: false });
            faces.push(Face { a: ce, b: eq, equality: false });
        }
        for j in 0..=N {
            let mut a = vec![0.0; N + 1];
            a[j] = 1.0;
            faces.push(Face { a: a.clone(), b: 1.0, equality: false });
            a[j] = -1.0;
            faces.push(Face { a, b: 0.0, equality: false });
        }
        faces
    }

    /// Objective coefficients over `Y₀..Y₃` for a cell.
    pub fn cell_objective(mu: f64, cell: &Cell, two_photon: bool) -> [f64; 4] {
        let xi1 = xi(1, cell.e1.lo, cell.e1.hi);
        let c2 = match (two_photon, cell.e2) {
            (true, Some(e2)) => mu * mu / 2.0 * (1.0 - xi(2, e2.lo, e2.hi)),
            _ => 0.0,
        };
        [0.0, mu * (1.0 - xi1), c2, 0.0]
    }

    pub fn axis(lo: f64, hi: f64, h: f64) -> Vec<f64> {
        let steps = ((hi - lo) / h).ceil() as usize;
        (0..=steps).map(|i| (lo + i as f64 * h).min(hi)).collect()
    }

    /// Minimum over the `e` grid of the exact `Y` sub-problem.
    pub fn cell_grid_min(stats: &[IntensityStatistics], cell: &Cell, objective: [f64; 4], h: f64) -> Option<f64> {
        let e2s = match cell.e2 {
            Some(e2) => axis(e2.lo, e2.hi, h),
            None => axis(0.0, 1.0, h),
        };
        let mut best: Option<f64> = None;
        for &e1 in &axis(cell.e1.lo, cell.e1.hi, h) {
            for &e2 in &e2s {
                for &e3 in &axis(0.0, 1.0, h) {
                    let faces = y_faces(stats, [0.5, e1, e2, e3]);
                    if let Some((v, _)) = vertex_min(&objective, &faces, 1e-11) {
                        best = Some(best.map_or(v, |b: f64| b.min(v)));
                    }
                }
            }
        }
        best
    }

    /// Exact `Y` sub-problem at one `e` point.
    pub fn y_value(stats: &[IntensityStatistics], e: [f64; 4], objective: [f64; 4]) -> Option<f64> {
        vertex_min(&objective, &y_faces(stats, e), 1e-11).map(|(v, _)| v)
    }

    /// Full-domain brute force of the true objective at `n = 3`. The errors
    /// entering the objective are fixed on a grid of step `h`; the yields
    /// and the remaining products `z_k = e_k Y_k` are solved exactly.
    pub fn brute_force_min(stats: &[IntensityStatistics], two_photon: bool, h: f64) -> Option<f64> {
        let mu = stats[0].mean_photon;
        // Y₀..Y₃, then z₃ (and z₂ when e₂ is free).
        let nv = if two_photon { 5 } else { 6 };
        let mut best: Option<f64> = None;
        let e2s = if two_photon { axis(0.0, 1.0, h) } else { vec![0.0] };
        for &e1 in &axis(0.0, 1.0, h) {
            for &e2 in &e2s {
                let mut obj = vec![0.0; nv];
                obj[1] = mu * (1.0 - hp::phi(2.0 * e1 - 1.0));
                if two_photon {
                    obj[2] = mu * mu / 2.0 * (1.0 - hp::phi((2.0 * e2 - 1.0).powi(2)));
                }
                let mut faces = Vec::new();
                for s in stats {
                    let l = s.mean_photon;
                    let theta = hp::theta(l, N);
                    let c: Vec<f64> = (0..=N).map(|k| series(l, k)).collect();
                    let q = s.gain * l.exp();
                    let eq = s.qber * s.gain * l.exp();
                    let mut gy = c.clone();
                    gy.resize(nv, 0.0);
                    let mut ez = vec![0.5 * c[0], e1 * c[1], 0.0, 0.0, c[3]];
                    if two_photon {
                        ez[2] = e2 * c[2];
                    } else {
                        ez.push(c[2]);
                    }
                    faces.push(Face { a: gy.iter().map(|v| -v).collect(), b: -(q - theta), equality: false });
                    faces.push(Face { a: gy, b: q, equality: false });
                    faces.push(Face { a: ez.iter().map(|v| -v).collect(), b: -(eq - theta), equality: false });
                    faces.push(Face { a: ez, b: eq, equality: false });
                }
                for j in 0..nv {
                    let mut a = vec![0.0; nv];
                    a[j] = 1.0;
                    faces.push(Face { a: a.clone(), b: 1.0, equality: false });
                    a[j] = -1.0;
                    faces.push(Face { a, b: 0.0, equality: false });
                }
                let mut z3 = vec![0.0; nv];
                z3[3] = -1.0;
                z3[4] = 1.0;
                faces.push(Face { a: z3, b: 0.0, equality: false });
                if !two_photon {
                    let mut z2 = vec![0.0; nv];
                    z2[2] = -1.0;
                    z2[5] = 1.0;
                    faces.push(Face { a: z2, b: 0.0, equality: false });
                }
                if let Some((v, _)) = vertex_min(&obj, &faces, 1e-11) {
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
        }
        best
    }
}

/// Outcome of comparing one random cell LP with the grid search.
#[derive(Debug)]
pub struct CellCase {
    pub lp_value: Option<f64>,
    pub grid_min: Option<f64>,
    /// `(c₁ + c₂)·h` for the cell objective.
    pub lipschitz: f64,
    /// Exact `Y` sub-problem at `e* = z*/Y*` from the LP optimum.
    pub at_argmin: Option<f64>,
}

impl CellCase {
    /// LP ≤ grid, grid within the Lipschitz allowance, and the LP optimum
    /// reproduced by fixing `e` at its argmin.
    pub fn agrees(&self) -> bool {
        match (self.lp_value, self.grid_min) {
            (None, None) => true,
            (Some(lp), None) => self.at_argmin.is_some_and(|v| (v - lp).abs() <= 1e-8),
            (Some(lp), Some(g)) => {
                lp <= g + 1e-9
                    && g - lp <= self.lipschitz + 1e-9
                    && self.at_argmin.is_some_and(|v| (v - lp).abs() <= 1e-8)
            }
            (None, Some(_)) => false,
        }
    }
}

/// Random `n = 3`, one-decoy DSCD cell near the honest error rates, solved
/// as an LP and by the `(Y, e)` grid search at resolution `h`.
pub fn random_cell_case(seed: u64, h: f64) -> CellCase {
    use qkdrate_core::engine::{Cell, Interval, ProtocolVariant};
    use qkdrate_core::finite::ToleranceSet;
    use qkdrate_core::lp::{build_cell_lp, solve_lp, z_index, LpStatus};
    use qkdrate_core::TruncationOrder;

    let mut r = rng(seed);
    let eta = r.random_range(0.1..0.5);
    let params = ChannelParams::new(eta, 10f64.powf(r.random_range(-6.0..-4.0)), r.random_range(0.01..0.05), 0.5).unwrap();
    let mu = r.random_range(0.3..0.6);
    let nu = r.random_range(0.03..0.15);
    let stats = honest_stats(&params, mu, &[nu]);
    let e1 = channel::error_rate_k(&params, 1).unwrap();
    let e2 = channel::error_rate_k(&params, 2).unwrap();
    // Every fourth cell is pushed well above the honest rates, where the
    // statistics usually exclude it.
    let far = seed % 4 == 3;
    let side = |truth: f64, r: &mut ChaCha8Rng| {
        let lo = if far { truth + r.random_range(0.08..0.2) } else { (truth - r.random_range(0.0..0.05)).max(0.0) };
        Interval::new(lo, (lo + r.random_range(0.01..0.04)).min(1.0)).unwrap()
    };
    let cell = Cell::new(side(e1, &mut r), Some(side(e2, &mut r)));

    let n = TruncationOrder::new(grid::N).unwrap();
    let lp = build_cell_lp(&stats, &ToleranceSet::zero(2), n, &cell, ProtocolVariant::Dscd).unwrap();
    let sol = solve_lp(&lp).unwrap();
    let objective = grid::cell_objective(mu, &cell, true);
    let lp_value = (sol.status == LpStatus::Optimal).then_some(sol.objective_value);
    let at_argmin = lp_value.and_then(|_| {
        let y = &sol.values;
        let mut e = [0.5; 4];
        let boxes = [None, Some(cell.e1), cell.e2, Some(Interval::new(0.0, 1.0).unwrap())];
        for k in 1..=3 {
            let b = boxes[k].unwrap();
            e[k] = if y[k] > 1e-13 { (y[z_index(n, k)] / y[k]).clamp(b.lo, b.hi) } else { b.lo };
        }
        grid::y_value(&stats, e, objective)
    });
    CellCase {
        lp_value,
        grid_min: grid::cell_grid_min(&stats, &cell, objective, h),
        lipschitz: (objective[1] + objective[2]) * h,
        at_argmin,
    }
}

/// Signal plus decoys with equal selection probabilities.
pub fn sim_config(params: &ChannelParams, intensities: &[f64], rounds: u64, seed: u64) -> qkdrate_core::sim::ProtocolConfig {
    use qkdrate_core::sim::{IntensitySpec, ProtocolConfig};
    ProtocolConfig {
        intensities: intensities
            .iter()
            .enumerate()
            .map(|(i, &m)| IntensitySpec { label: channel::default_label(i), mean_photon: m })
            .collect(),
        decoy_probabilities: vec![1.0 / intensities.len() as f64; intensities.len()],
        rounds,
        channel: *params,
        seed,
        estimation_fraction: 1.0,
    }
}

/// Honest runs of the simulator against its exact expectations, with
/// Hoeffding tolerances from each run's own sifted counts. Returns the
/// number of aborts. About `4·per_intensity` rounds are simulated per trial
/// for two intensities, since sifting keeps roughly half the rounds.
pub fn honest_abort_count(
    params: &ChannelParams,
    intensities: &[f64],
    per_intensity: u64,
    security: &qkdrate_core::SecurityParams,
    trials: u64,
) -> u64 {
    use qkdrate_core::finite::check_abort;
    use qkdrate_core::sim::{run_protocol, sifted_expectation};
    use qkdrate_core::ToleranceSet;

    let expected: Vec<IntensityStatistics> = intensities
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let e = sifted_expectation(params, m).unwrap();
            IntensityStatistics { label: channel::default_label(i), mean_photon: m, gain: e.gain, qber: e.qber, rounds: 0 }
        })
        .collect();
    let rounds = 2 * per_intensity * intensities.len() as u64;
    (0..trials)
        .filter(|&t| {
            let obs = run_protocol(&sim_config(params, intensities, rounds, 1_000_003 * t + 17)).unwrap();
            let counts: Vec<u64> = obs.per_intensity.iter().map(|o| o.stats.rounds).collect();
            let tol = ToleranceSet::from_rounds(&counts, security).unwrap();
            !check_abort(&obs, &expected, &tol).unwrap().is_accept()
        })
        .count() as u64
}
