//! Finite-difference pencil for one angular mode in the `s = r^(1/t)`
//! variable, discretized on a uniform grid in `x = ln s`.
//!
//! The quadratic forms are
//! `A(eta) = int (P/s) eta_x^2 dx + c_k int (P/s) eta^2 dx` and
//! `B(eta) = c_0 int P s^(q-1) (1+s^q)^(-2) eta^2 dx` with
//! `P = s^(K - 1/(p-1)) (1+s^q)^(-(p-2)K/p)`, `q = p/(p-1)`,
//! `c_k = t^2 lambda_k/(p-1)` and `c_0 = K(Kp-K+p)/((p-1)^2 (p*-1))`, so the
//! generalized eigenvalue is the `mu` of the linearized problem directly.
//! Stiffness uses midpoint coefficients, mass is lumped (half cell at a free
//! end). With diagonal `B` the pencil is symmetrized as `B^(-1/2) A B^(-1/2)`,
//! assembled in log space because `P` spans hundreds of decades, and solved
//! in the differential form of [`GradedPencil`].

use serde::Serialize;

use super::graded::GradedPencil;
use crate::error::{Error, Result};
use crate::params::{angular_eigenvalue, CknParams, DerivedExponents};
use crate::quadrature::RadialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    NeumannAtZero,
    DirichletAtZero,
}

impl BoundaryCondition {
    pub fn for_mode(k: u32) -> Self {
        if k == 0 {
            Self::NeumannAtZero
        } else {
            Self::DirichletAtZero
        }
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Log-densities of the pencil at `x = ln s`.
#[derive(Debug, Clone, Copy)]
struct Coefficients {
    k_dim: f64,
    p: f64,
    q: f64,
    ln_c0: f64,
}

impl Coefficients {
    fn new(params: &CknParams, d: &DerivedExponents) -> Self {
        let p = params.p();
        let k = d.k_dim;
        let c0 = k * (k * p - k + p) / ((p - 1.0).powi(2) * (d.p_star - 1.0));
        Self { k_dim: k, p, q: p / (p - 1.0), ln_c0: c0.ln() }
    }

    fn ln_p(&self, x: f64) -> f64 {
        let (k, p) = (self.k_dim, self.p);
        (k - 1.0 / (p - 1.0)) * x - (p - 2.0) * k / p * softplus(self.q * x)
    }

    /// `ln(P/s)`, the stiffness and angular density.
    fn ln_stiff(&self, x: f64) -> f64 {
        self.ln_p(x) - x
    }

    /// `ln(c_0 P s^(q-1) (1+s^q)^(-2))`.
    fn ln_mass(&self, x: f64) -> f64 {
        self.ln_c0 + self.ln_p(x) + (self.q - 1.0) * x - 2.0 * softplus(self.q * x)
    }
}

/// Discrete generalized eigenproblem for angular mode `k`.
#[derive(Debug, Clone)]
pub struct ModeProblem {
    pub params: CknParams,
    pub derived: DerivedExponents,
    pub k: u32,
    pub lambda_k: f64,
    pub bc: BoundaryCondition,
    grid: RadialGrid,
    /// first grid index carrying an unknown; the last grid node is Dirichlet
    first: usize,
    /// `ln b_i` of the lumped mass for each unknown
    ln_b: Vec<f64>,
    /// `ln a_{i-1/2}` for each unknown, then `ln a_{i+1/2}` of the last
    ln_a: Vec<f64>,
    /// zeroth-order stiffness `g_i` relative to `b_i`
    g: Vec<f64>,
    matrix: GradedPencil,
}

impl ModeProblem {
    pub fn assemble(params: &CknParams, k: u32, grid: &RadialGrid) -> Result<Self> {
        let n = grid.len();
        if n < 5 {
            return Err(Error::InvalidGrid("mode grid needs at least 5 nodes".into()));
        }
        let derived = params.derived();
        let coef = Coefficients::new(params, &derived);
        let lambda_k = angular_eigenvalue(params.n(), k);
        let c_k = derived.t.powi(2) * lambda_k / (params.p() - 1.0);
        let bc = BoundaryCondition::for_mode(k);
        let first = usize::from(bc == BoundaryCondition::DirichletAtZero);
        let x: Vec<f64> = grid.nodes().iter().map(|s| s.ln()).collect();
        let h = (x[n - 1] - x[0]) / (n - 1) as f64;
        if x.windows(2).any(|w| ((w[1] - w[0]) / h - 1.0).abs() > 1e-6) {
            return Err(Error::InvalidGrid("mode grid must be uniform in ln s".into()));
        }
        let unknowns: Vec<usize> = (first..n - 1).collect();
        // ln of midpoint stiffness a_{i+1/2} = (P/s)(x_{i+1/2})/h for i = 0..n-2
        let ln_a: Vec<f64> = (0..n - 1).map(|i| coef.ln_stiff(0.5 * (x[i] + x[i + 1])) - h.ln()).collect();
        let mut ln_b = Vec::with_capacity(unknowns.len());
        let mut g = Vec::with_capacity(unknowns.len());
        for &i in &unknowns {
            let cell = if i == 0 { 0.5 * h } else { h };
            let lb = cell.ln() + coef.ln_mass(x[i]);
            if !lb.is_finite() {
                return Err(Error::IndefiniteWeight(i));
            }
            g.push(if c_k > 0.0 { c_k * (cell.ln() + coef.ln_stiff(x[i]) - lb).exp() } else { 0.0 });
            ln_b.push(lb);
        }
        // a_{i-1/2} for the first unknown (none at a free end), then a_{i+1/2}
        let mut ln_a_p = Vec::with_capacity(unknowns.len() + 1);
        ln_a_p.push(if first == 0 { f64::NEG_INFINITY } else { ln_a[first - 1] });
        ln_a_p.extend_from_slice(&ln_a[first..n - 1]);
        let matrix = GradedPencil::new(&ln_a_p, &ln_b, g.clone())?;
        Ok(Self { params: *params, derived, k, lambda_k, bc, grid: grid.clone(), first, ln_b, ln_a: ln_a_p, g, matrix })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &GradedPencil {
        &self.matrix
    }

    pub fn unknowns(&self) -> usize {
        self.ln_b.len()
    }

    /// `y = B^(1/2) eta` from full-grid samples (boundary values ignored).
    pub(crate) fn to_symmetric(&self, eta: &[f64]) -> Vec<f64> {
        self.ln_b.iter().enumerate().map(|(j, lb)| eta[self.first + j] * (0.5 * lb).exp()).collect()
    }

    /// Full-grid samples from `y`, zero at Dirichlet nodes.
    pub(crate) fn from_symmetric(&self, y: &[f64]) -> Vec<f64> {
        let mut eta = vec![0.0; self.grid.len()];
        for (j, lb) in self.ln_b.iter().enumerate() {
            eta[self.first + j] = y[j] * (-0.5 * lb).exp();
        }
        eta
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.grid.sample(f)
    }

    /// `||A eta - mu B eta|| / ||B eta||` for the eigenvector `y = B^(1/2) eta`
    /// of the symmetrized matrix. Both vectors equal `B^(1/2)` times their
    /// symmetric counterparts, so the ratio avoids the huge diagonal entries
    /// of the symmetrized matrix near `s_min`.
    pub fn pencil_residual(&self, mu: f64, y: &[f64]) -> f64 {
        self.windowed_residual(mu, y, 0..y.len())
    }

    /// Evaluated twice: through the symmetrized matrix, and in flux form
    /// `a_{i-1/2}(eta_i - eta_{i-1}) + a_{i+1/2}(eta_i - eta_{i+1})` on
    /// `eta = B^(-1/2) y`. Rounding only inflates a residual, and each form
    /// has its own noise floor (the first near huge symmetrized diagonals,
    /// the second where `eta` is nearly constant), so the smaller is reported.
    fn windowed_residual(&self, mu: f64, y: &[f64], window: std::ops::Range<usize>) -> f64 {
        let n = y.len();
        let window_sym = window.clone();
        let shift = self.ln_b[window.clone()].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let eta: Vec<f64> = y.iter().zip(&self.ln_b).map(|(v, lb)| v * (-0.5 * lb).exp()).collect();
        let at = |j: isize| if j < 0 || j as usize >= n { 0.0 } else { eta[j as usize] };
        let (mut num, mut den) = (0.0, 0.0);
        for j in window {
            let b = (self.ln_b[j] - shift).exp();
            let al = (self.ln_a[j] - shift).exp();
            let ar = (self.ln_a[j + 1] - shift).exp();
            let e = eta[j];
            let ji = j as isize;
            let a_eta = al * (e - at(ji - 1)) + ar * (e - at(ji + 1)) + self.g[j] * b * e;
            num += (a_eta - mu * b * e).powi(2);
            den += (b * e).powi(2);
        }
        let flux = (num / den).sqrt();
        let ty = self.matrix.apply(y);
        let (mut num, mut den) = (0.0, 0.0);
        for j in window_sym {
            let w = (0.5 * (self.ln_b[j] - shift)).exp();
            num += (w * (ty[j] - mu * y[j])).powi(2);
            den += (w * y[j]).powi(2);
        }
        let sym = (num / den).sqrt();
        if sym.is_nan() { flux } else { flux.min(sym) }
    }

    /// Componentwise backward error
    /// `max_i |A eta - mu B eta|_i / (|A| |eta| + mu B |eta|)_i` of the
    /// eigenvector `y = B^(1/2) eta`: the smallest relative perturbation of
    /// the pencil coefficients making `eta` exact. Meaningful at any grading.
    pub fn backward_error(&self, mu: f64, y: &[f64]) -> f64 {
        let n = y.len();
        let shift = self.ln_b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let eta: Vec<f64> = y.iter().zip(&self.ln_b).map(|(v, lb)| v * (-0.5 * lb).exp()).collect();
        let at = |j: isize| if j < 0 || j as usize >= n { 0.0 } else { eta[j as usize] };
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let b = (self.ln_b[j] - shift).exp();
            let al = (self.ln_a[j] - shift).exp();
            let ar = (self.ln_a[j + 1] - shift).exp();
            let (e, ji) = (eta[j], j as isize);
            let (l, r) = (at(ji - 1), at(ji + 1));
            let res = al * (e - l) + ar * (e - r) + self.g[j] * b * e - mu * b * e;
            let scale = al * (e.abs() + l.abs()) + ar * (e.abs() + r.abs()) + (self.g[j] + mu) * b * e.abs();
            if scale > 0.0 {
                worst = worst.max(res.abs() / scale);
            }
        }
        worst
    }

    /// `||A eta - mu B eta|| / ||B eta||` for full-grid samples, restricted to
    /// nodes with `s` in `[s_lo, s_hi]` (the outer truncation is excluded
    /// this way when `eta` is a sampled closed form that does not vanish at
    /// `s_max`).
    pub fn residual_of(&self, eta: &[f64], mu: f64, s_lo: f64, s_hi: f64) -> f64 {
        let y = self.to_symmetric(eta);
        let s = &self.grid.nodes()[self.first..self.first + y.len()];
        let lo = s.iter().position(|&v| v >= s_lo).unwrap_or(0);
        let hi = s.iter().rposition(|&v| v <= s_hi).map_or(y.len(), |i| i + 1);
        self.windowed_residual(mu, &y, lo..hi.max(lo + 1))
    }

    /// Discrete Rayleigh quotient `eta^T A eta / eta^T B eta`, summed in
    /// flux form `sum a_{i+1/2} (eta_{i+1} - eta_i)^2 + ...` so every term is
    /// non-negative.
    pub fn rayleigh(&self, eta: &[f64]) -> f64 {
        self.rayleigh_symmetric(&self.to_symmetric(eta))
    }

    pub(crate) fn rayleigh_symmetric(&self, y: &[f64]) -> f64 {
        let n = y.len();
        let shift = self.ln_b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let eta: Vec<f64> = y.iter().zip(&self.ln_b).map(|(v, lb)| v * (-0.5 * lb).exp()).collect();
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..n {
            let b = (self.ln_b[j] - shift).exp();
            let next = if j + 1 < n { eta[j + 1] } else { 0.0 };
            num += (self.ln_a[j + 1] - shift).exp() * (eta[j] - next).powi(2) + self.g[j] * b * eta[j] * eta[j];
            den += b * eta[j] * eta[j];
        }
        // coupling to a Dirichlet node on the left
        if self.first > 0 {
            num += (self.ln_a[0] - shift).exp() * eta[0] * eta[0];
        }
        num / den
    }

    /// `eta^T B zeta`.
    pub fn b_inner(&self, eta: &[f64], zeta: &[f64]) -> f64 {
        let (a, b) = (self.to_symmetric(eta), self.to_symmetric(zeta));
        a.iter().zip(&b).map(|(x, y)| x * y).sum()
    }

    /// `|<eta, zeta>_B| / (|eta|_B |zeta|_B)`.
    pub fn cosine_similarity(&self, eta: &[f64], zeta: &[f64]) -> f64 {
        let ab = self.b_inner(eta, zeta);
        ab.abs() / (self.b_inner(eta, eta) * self.b_inner(zeta, zeta)).sqrt()
    }
}

/// `ln s` grid used for mode problems.
pub fn mode_grid(s_min: f64, s_max: f64, n: usize) -> Result<RadialGrid> {
    RadialGrid::log_uniform(s_min, s_max, n)
}
