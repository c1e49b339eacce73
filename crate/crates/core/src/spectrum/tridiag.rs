//! Symmetric tridiagonal eigensolver: Sturm-count bisection for eigenvalues,
//! inverse iteration for eigenvectors.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::SolverFailure("tridiagonal shape mismatch".into()));
        }
        if diag.iter().chain(&off).any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure("non-finite matrix entry".into()));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `sigma` (negative pivots of the
    /// `LDL^T` factorization of `T - sigma I`).
    pub fn count_below(&self, sigma: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.diag.len() {
            let e2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            d = self.diag[i] - sigma - if i == 0 { 0.0 } else { e2 / d };
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[i].abs() + sigma.abs() + f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn lower_bound(&self) -> f64 {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let l = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let r = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i] - l - r
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// The `j`-th smallest eigenvalue (0-based) by bisection to relative
    /// width `4 eps`.
    pub fn eigenvalue(&self, j: usize) -> Result<f64> {
        if j >= self.len() {
            return Err(Error::SolverFailure(format!("requested eigenvalue {j} of {}", self.len())));
        }
        let mut lo = self.lower_bound();
        let mut hi = lo.abs().max(1.0);
        while self.count_below(hi) <= j {
            hi = 2.0 * hi + 1.0;
            if !hi.is_finite() {
                return Err(Error::SolverFailure("eigenvalue bracket diverged".into()));
            }
        }
        for _ in 0..4096 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) || mid == lo || mid == hi {
                break;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * y[i];
                if i > 0 {
                    v += self.off[i - 1] * y[i - 1];
                }
                if i + 1 < n {
                    v += self.off[i] * y[i + 1];
                }
                v
            })
            .collect()
    }

    /// Unit eigenvector for the eigenvalue `mu` by inverse iteration, with
    /// its largest component made positive.
    pub fn eigenvector(&self, mu: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let mut y: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        normalize(&mut y);
        let scale = self.diag.iter().map(|d| d.abs()).fold(0.0, f64::max).max(mu.abs()).max(1.0);
        let shift = mu + 4.0 * f64::EPSILON * scale.min(mu.abs().max(1.0));
        for _ in 0..4 {
            y = solve_shifted(self, shift, &y)?;
            normalize(&mut y);
        }
        let imax = (0..n).max_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs())).unwrap_or(0);
        if y[imax] < 0.0 {
            y.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(y)
    }

    /// Inverse iteration from a given start vector.
    pub fn refine(&self, mu: f64, start: &[f64], iters: usize) -> Result<Vec<f64>> {
        let scale = self.diag.iter().map(|d| d.abs()).fold(0.0, f64::max).max(mu.abs()).max(1.0);
        let shift = mu + 4.0 * f64::EPSILON * scale.min(mu.abs().max(1.0));
        let mut y = start.to_vec();
        for _ in 0..iters {
            y = solve_shifted(self, shift, &y)?;
            normalize(&mut y);
        }
        if y.iter().zip(start).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
            y.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(y)
    }

    /// `||T y - mu y|| / ||y||`.
    pub fn residual(&self, mu: f64, y: &[f64]) -> f64 {
        let ty = self.apply(y);
        let num: f64 = ty.iter().zip(y).map(|(a, b)| (a - mu * b).powi(2)).sum::<f64>().sqrt();
        num / y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn normalize(y: &mut [f64]) {
    let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        y.iter_mut().for_each(|v| *v /= n);
    }
}

/// Solves `(T - shift I) x = b` by Gaussian elimination with partial
/// pivoting (the fill-in is one extra superdiagonal).
fn solve_shifted(t: &SymTridiag, shift: f64, b: &[f64]) -> Result<Vec<f64>> {
    let n = t.len();
    let tiny = f64::EPSILON * t.diag.iter().map(|d| (d - shift).abs()).fold(f64::MIN_POSITIVE, f64::max);
    // rows as (diag, super1, super2)
    let mut d: Vec<f64> = t.diag.iter().map(|v| v - shift).collect();
    let mut u1: Vec<f64> = t.off.clone();
    u1.push(0.0);
    let mut u2 = vec![0.0; n];
    let mut l = t.off.clone();
    let mut rhs = b.to_vec();
    for i in 0..n.saturating_sub(1) {
        if l[i].abs() > d[i].abs() {
            // swap rows i and i+1
            let (di, u1i, u2i) = (d[i], u1[i], u2[i]);
            d[i] = l[i];
            u1[i] = d[i + 1];
            u2[i] = u1[i + 1];
            l[i] = di;
            d[i + 1] = u1i;
            u1[i + 1] = u2i;
            rhs.swap(i, i + 1);
        }
        if d[i] == 0.0 {
            d[i] = tiny;
        }
        let f = l[i] / d[i];
        d[i + 1] -= f * u1[i];
        u1[i + 1] -= f * u2[i];
        rhs[i + 1] -= f * rhs[i];
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / d[i];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure("inverse iteration overflowed".into()));
    }
    Ok(x)
}
