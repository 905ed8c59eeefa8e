//! Dense LU factorisation with partial pivoting for simplex bases.

use crate::error::{Error, Result};

pub(crate) struct Lu {
    m: usize,
    /// Row-major `L\U` packed in one matrix; `L` has an implicit unit diagonal.
    a: Vec<f64>,
    /// `perm[i]` is the original row stored at position `i`.
    perm: Vec<usize>,
}

impl Lu {
    /// Factorises the square matrix whose columns are `columns`.
    pub(crate) fn factor(columns: &[&[f64]]) -> Result<Self> {
        let m = columns.len();
        let mut a = vec![0.0; m * m];
        for (j, col) in columns.iter().enumerate() {
            for i in 0..m {
                a[i * m + j] = col[i];
            }
        }
        let mut perm: Vec<usize> = (0..m).collect();
        for k in 0..m {
            let p = (k..m)
                .max_by(|&r, &s| a[r * m + k].abs().total_cmp(&a[s * m + k].abs()))
                .unwrap_or(k);
            let pivot = a[p * m + k];
            if pivot.abs() < 1e-14 {
                return Err(Error::Solver("singular basis matrix".into()));
            }
            if p != k {
                for j in 0..m {
                    a.swap(k * m + j, p * m + j);
                }
                perm.swap(k, p);
            }
            for i in k + 1..m {
                let f = a[i * m + k] / pivot;
                a[i * m + k] = f;
                if f != 0.0 {
                    for j in k + 1..m {
                        a[i * m + j] -= f * a[k * m + j];
                    }
                }
            }
        }
        Ok(Self { m, a, perm })
    }

    /// Solves `B x = b`.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..m {
            let s: f64 = (0..i).map(|j| self.a[i * m + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..m).rev() {
            let s: f64 = (i + 1..m).map(|j| self.a[i * m + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.a[i * m + i];
        }
        x
    }

    /// Solves `Bᵀ y = c`.
    pub(crate) fn solve_transpose(&self, c: &[f64]) -> Vec<f64> {
        let m = self.m;
        // PB = LU, so Bᵀ = UᵀLᵀP and y = Pᵀ L⁻ᵀ U⁻ᵀ c.
        let mut w = c.to_vec();
        for i in 0..m {
            let s: f64 = (0..i).map(|j| self.a[j * m + i] * w[j]).sum();
            w[i] = (w[i] - s) / self.a[i * m + i];
        }
        for i in (0..m).rev() {
            let s: f64 = (i + 1..m).map(|j| self.a[j * m + i] * w[j]).sum();
            w[i] -= s;
        }
        let mut y = vec![0.0; m];
        for (i, &p) in self.perm.iter().enumerate() {
            y[p] = w[i];
        }
        y
    }
}
