//! Sturm counts and inverse iteration for the symmetrized mode pencil,
//! organized so small eigenvalues keep relative accuracy however widely the
//! coefficients are graded.
//!
//! For unknowns `i` with stiffness `a_{i+1/2}` to the right, lumped mass
//! `b_i` and zeroth-order mass `g_i b_i`, the `LDL^T` pivots of
//! `A - sigma B` are `a_{i+1/2} + delta_i` with
//! `delta_i = a_{i-1/2} delta_{i-1}/(a_{i-1/2} + delta_{i-1}) + g_i b_i - sigma b_i`.
//! Forming `delta` directly avoids the cancellation in
//! `d_i - e_i^2/p_{i-1}`, which loses everything once `a/b` reaches `1e16`
//! times the eigenvalue. Everything is stored divided by `b_i`.

use super::tridiag::SymTridiag;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GradedPencil {
    /// `a_{i+1/2}/b_i`
    right: Vec<f64>,
    /// `a_{i-1/2}/b_i`; for the first unknown this is the coupling to a
    /// Dirichlet node (zero for a free end)
    left: Vec<f64>,
    /// `b_{i-1}/b_i` (unused at `i = 0`)
    rho: Vec<f64>,
    /// `b_{i-1}/a_{i-1/2}` (unused at `i = 0`)
    kappa: Vec<f64>,
    /// zeroth-order coefficient `g_i`
    g: Vec<f64>,
    /// `-a_{i+1/2}/sqrt(b_i b_{i+1})`
    off: Vec<f64>,
}

impl GradedPencil {
    /// From logarithms: `ln_a[i]` is `ln a_{i+1/2}` for `i` in `-1..n` (so
    /// `n + 1` entries, the first being `-inf` at a free end), `ln_b` and
    /// `g` per unknown.
    pub fn new(ln_a: &[f64], ln_b: &[f64], g: Vec<f64>) -> Result<Self> {
        let n = ln_b.len();
        if n == 0 || ln_a.len() != n + 1 || g.len() != n {
            return Err(Error::SolverFailure("graded pencil shape mismatch".into()));
        }
        let right: Vec<f64> = (0..n).map(|i| (ln_a[i + 1] - ln_b[i]).exp()).collect();
        let left: Vec<f64> = (0..n).map(|i| (ln_a[i] - ln_b[i]).exp()).collect();
        let rho: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { (ln_b[i - 1] - ln_b[i]).exp() }).collect();
        let kappa: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { (ln_b[i - 1] - ln_a[i]).exp() }).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| -(ln_a[i + 1] - 0.5 * (ln_b[i] + ln_b[i + 1])).exp()).collect();
        let pencil = Self { right, left, rho, kappa, g, off };
        let finite = |v: &Vec<f64>| v.iter().all(|x| x.is_finite());
        if !(finite(&pencil.right) && finite(&pencil.left) && finite(&pencil.g) && finite(&pencil.off)) {
            return Err(Error::SolverFailure("pencil coefficients overflow".into()));
        }
        Ok(pencil)
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// Scaled defects `delta_i/b_i` of `A - sigma B`.
    fn defects(&self, sigma: f64) -> Vec<f64> {
        let n = self.len();
        let mut dl = vec![0.0; n];
        dl[0] = self.left[0] + self.g[0] - sigma;
        for i in 1..n {
            let prev = dl[i - 1];
            let carried = prev * self.rho[i] / (1.0 + prev * self.kappa[i]);
            // 1 + prev*kappa = 0 is a zero pivot; treat it as a tiny negative
            let carried = if carried.is_finite() { carried } else { -f64::MAX };
            dl[i] = carried + self.g[i] - sigma;
        }
        dl
    }

    /// Number of eigenvalues below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        self.defects(sigma).iter().zip(&self.right).filter(|(d, r)| **r + **d < 0.0).count()
    }

    pub fn eigenvalue(&self, j: usize) -> Result<f64> {
        if j >= self.len() {
            return Err(Error::SolverFailure(format!("requested eigenvalue {j} of {}", self.len())));
        }
        // A and B are positive definite
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.count_below(hi) <= j {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::SolverFailure("eigenvalue bracket diverged".into()));
            }
        }
        for _ in 0..4096 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 4.0 * f64::EPSILON * hi || mid == lo || mid == hi {
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

    /// The symmetrized matrix in plain tridiagonal form.
    pub fn to_tridiag(&self) -> Result<SymTridiag> {
        let diag = (0..self.len()).map(|i| self.left[i] + self.right[i] + self.g[i]).collect();
        SymTridiag::new(diag, self.off.clone())
    }

    /// Symmetrized matrix-vector product.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = (self.left[i] + self.right[i] + self.g[i]) * y[i];
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

    /// Scaled backward defects `epsilon_i/b_i` of `A - sigma B`: the
    /// `UDU^T` pivots are `a_{i-1/2} + epsilon_i`.
    fn back_defects(&self, sigma: f64) -> Vec<f64> {
        let n = self.len();
        let mut el = vec![0.0; n];
        el[n - 1] = self.right[n - 1] + self.g[n - 1] - sigma;
        for i in (0..n - 1).rev() {
            // b_{i+1}/b_i and b_{i+1}/a_{i+1/2}
            let rho = self.rho[i + 1].recip();
            let kappa = self.kappa[i + 1] * rho;
            let next = el[i + 1];
            let carried = next * rho / (1.0 + next * kappa);
            let carried = if carried.is_finite() { carried } else { -f64::MAX };
            el[i] = carried + self.g[i] - sigma;
        }
        el
    }

    /// Unit eigenvector for `mu` from a twisted factorization, largest
    /// component made positive. The twist element is at roundoff level over
    /// the whole support of the eigenvector, so the twist index is taken
    /// where the previous solve put its largest component.
    pub fn eigenvector(&self, mu: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let dl = self.defects(mu);
        let el = self.back_defects(mu);
        let mut r = (0..n)
            .min_by(|&a, &b| {
                let ga = (dl[a] + el[a] - self.g[a] + mu).abs();
                let gb = (dl[b] + el[b] - self.g[b] + mu).abs();
                ga.total_cmp(&gb)
            })
            .unwrap_or(0);
        let mut z = Vec::new();
        for _ in 0..3 {
            z = self.twisted_solve(&dl, &el, r, mu)?;
            let imax = argmax_abs(&z);
            if imax == r {
                break;
            }
            r = imax;
        }
        if z[r] < 0.0 {
            z.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(z)
    }

    /// Propagates `z_r = 1` outward with the factor ratios. Next to a node
    /// of the eigenvector the pivot is small and known only to an absolute
    /// accuracy of `eps * a`; its relative error would rescale everything
    /// beyond it, so that step uses the row equation instead.
    fn twisted_solve(&self, dl: &[f64], el: &[f64], r: usize, mu: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let tiny = |p: f64| if p == 0.0 { f64::MIN_POSITIVE } else { p };
        let diag = |i: usize| self.left[i] + self.right[i] + self.g[i] - mu;
        let mut z = vec![0.0; n];
        z[r] = 1.0;
        for i in (0..r).rev() {
            let piv = self.right[i] + dl[i];
            z[i] = if i + 2 <= r && piv.abs() < 1e-3 * self.right[i] {
                -(diag(i + 1) * z[i + 1] + self.off[i + 1] * z[i + 2]) / self.off[i]
            } else {
                -self.off[i] / tiny(piv) * z[i + 1]
            };
        }
        for i in r + 1..n {
            let piv = self.left[i] + el[i];
            z[i] = if i >= r + 2 && piv.abs() < 1e-3 * self.left[i] {
                -(diag(i - 1) * z[i - 1] + self.off[i - 2] * z[i - 2]) / self.off[i - 1]
            } else {
                -self.off[i - 1] / tiny(piv) * z[i - 1]
            };
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure("twisted solve overflowed".into()));
        }
        normalize(&mut z);
        Ok(z)
    }
}

fn argmax_abs(y: &[f64]) -> usize {
    (0..y.len()).max_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs())).unwrap_or(0)
}

fn normalize(y: &mut [f64]) {
    let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        y.iter_mut().for_each(|v| *v /= n);
    }
}
