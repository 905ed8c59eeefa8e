//! Rectangular partitions of the `(e₁, e₂)` domain.

use crate::error::{Error, Result};
use crate::math::phi_unchecked;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::domain(format!("interval [{lo}, {hi}] not within [0, 1]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, e: f64) -> bool {
        self.lo <= e && e <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn halves(&self) -> [Interval; 2] {
        let mid = 0.5 * (self.lo + self.hi);
        [Interval { lo: self.lo, hi: mid }, Interval { lo: mid, hi: self.hi }]
    }
}

/// A box of single- and (optionally) two-photon error rates with the
/// constants bounding `Φ((2e_k−1)^k)` over it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub e1: Interval,
    pub e2: Option<Interval>,
    pub xi1_max: f64,
    pub xi2_max: Option<f64>,
}

impl Cell {
    pub fn new(e1: Interval, e2: Option<Interval>) -> Self {
        Self {
            e1,
            e2,
            xi1_max: xi_bound(1, e1.lo, e1.hi),
            xi2_max: e2.map(|e| xi_bound(2, e.lo, e.hi)),
        }
    }

    pub fn contains(&self, e1: f64, e2: f64) -> bool {
        self.e1.contains(e1) && self.e2.is_none_or(|i| i.contains(e2))
    }

    /// Halves every bounded axis: four children in 2D, two in 1D.
    pub fn split(&self) -> Vec<Cell> {
        let e1s = self.e1.halves();
        match self.e2 {
            None => e1s.iter().map(|&a| Cell::new(a, None)).collect(),
            Some(e2) => {
                let e2s = e2.halves();
                e1s.iter().flat_map(|&a| e2s.iter().map(move |&b| Cell::new(a, Some(b)))).collect()
            }
        }
    }
}

/// Upper bound of `Φ((2e−1)^k)` for `e ∈ [e_lo, e_hi]`, `k ∈ {1, 2}`.
///
/// `Φ` is even and decreasing on `[0, 1]`, so the maximum sits at the
/// endpoint closest to `e = 1/2`, or equals `Φ(0) = 1` when the interval
/// reaches `1/2`.
pub fn xi_max(k: u32, e_lo: f64, e_hi: f64) -> Result<f64> {
    if !(k == 1 || k == 2) {
        return Err(Error::domain(format!("xi_max is defined for k = 1, 2, got {k}")));
    }
    Interval::new(e_lo, e_hi)?;
    Ok(xi_bound(k, e_lo, e_hi))
}

fn xi_bound(k: u32, e_lo: f64, e_hi: f64) -> f64 {
    let (a, b) = (2.0 * e_lo - 1.0, 2.0 * e_hi - 1.0);
    if a <= 0.0 && 0.0 <= b {
        1.0
    } else {
        phi_unchecked(a.powi(k as i32)).max(phi_unchecked(b.powi(k as i32)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub cells: Vec<Cell>,
    /// Requested cells per axis before the `1/2` edge is inserted.
    pub resolution: (usize, usize),
    pub e1_up: f64,
    pub e2_up: Option<f64>,
}

/// Uniform grid over `[0, e1_up] × [0, e2_up]`, or over `[0, e1_up]` alone
/// when `e2_up` is `None`. An edge is inserted at `1/2` on any axis whose
/// range contains it, so no cell straddles `e = 1/2`.
pub fn build_partition(e1_up: f64, e2_up: Option<f64>, resolution: (usize, usize)) -> Result<Partition> {
    let (n1, n2) = resolution;
    if n1 == 0 || n2 == 0 {
        return Err(Error::config("grid resolution must be at least 1x1"));
    }
    let e1_edges = axis_edges(e1_up, n1)?;
    let cells = match e2_up {
        None => e1_edges.windows(2).map(|w| Cell::new(Interval { lo: w[0], hi: w[1] }, None)).collect(),
        Some(up) => {
            let e2_edges = axis_edges(up, n2)?;
            let mut cells = Vec::with_capacity((e1_edges.len() - 1) * (e2_edges.len() - 1));
            for a in e1_edges.windows(2) {
                for b in e2_edges.windows(2) {
                    cells.push(Cell::new(Interval { lo: a[0], hi: a[1] }, Some(Interval { lo: b[0], hi: b[1] })));
                }
            }
            cells
        }
    };
    Ok(Partition { cells, resolution, e1_up, e2_up })
}

fn axis_edges(up: f64, n: usize) -> Result<Vec<f64>> {
    if !(up > 0.0 && up <= 1.0) {
        return Err(Error::domain(format!("domain bound {up} not in (0, 1]")));
    }
    let mut edges: Vec<f64> = (0..=n).map(|i| if i == n { up } else { up * i as f64 / n as f64 }).collect();
    if 0.5 < up && !edges.contains(&0.5) {
        let at = edges.partition_point(|&e| e < 0.5);
        edges.insert(at, 0.5);
    }
    Ok(edges)
}
