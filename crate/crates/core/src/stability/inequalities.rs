//! Pointwise algebraic inequalities used by the remainder estimates, plus
//! seeded sampling drivers that turn them into empirical constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::CknParams;

/// Both sides of one inequality at one point. `margin` is signed so that a
/// nonnegative value means the inequality holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

impl InequalityCheck {
    /// `lhs >= rhs`.
    pub fn at_least(lhs: f64, rhs: f64) -> Self {
        Self::with_margin(lhs, rhs, lhs - rhs)
    }

    /// `lhs <= rhs`.
    pub fn at_most(lhs: f64, rhs: f64) -> Self {
        Self::with_margin(lhs, rhs, rhs - lhs)
    }

    fn with_margin(lhs: f64, rhs: f64, margin: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs());
        Self { lhs, rhs, margin, holds: margin >= -1e-12 * scale }
    }
}

/// A sample infimum or supremum, never a certified bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalConstant {
    pub name: String,
    pub value: f64,
    pub samples: usize,
    pub seed: u64,
    /// Samples where the base inequality (constant set to zero) failed.
    pub violations: usize,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

/// The interpolating vector `omega(x, x+y)`.
///
/// For `p < 2` it is a multiple of `x` that blends `|x|` and `|x+y|` when
/// the sum is longer; for `p > 2` it is `x` unless the sum is shorter, in
/// which case it is a multiple of `x+y`. At `p = 2` it is `x`.
pub fn omega_vector(x: &[f64], xy: &[f64], p: f64) -> Result<Vec<f64>> {
    let nx = norm(x);
    if nx == 0.0 {
        return Err(Error::ZeroBase);
    }
    let nxy = norm(xy);
    if p == 2.0 {
        return Ok(x.to_vec());
    }
    if p < 2.0 {
        if nx < nxy {
            let f = (nxy / ((2.0 - p) * nxy + (p - 1.0) * nx)).powf(1.0 / (p - 2.0));
            return Ok(x.iter().map(|v| f * v).collect());
        }
        return Ok(x.to_vec());
    }
    if nx < nxy {
        return Ok(x.to_vec());
    }
    let f = (nxy / nx).powf(1.0 / (p - 2.0));
    Ok(xy.iter().map(|v| f * v).collect())
}

/// `|omega|^(p-2) (|x| - |x+y|)^2`, zero whenever the squared factor is.
fn omega_term(x: &[f64], xy: &[f64], p: f64) -> Result<f64> {
    let gap = norm(x) - norm(xy);
    if gap == 0.0 || p == 2.0 {
        return Ok(0.0);
    }
    let w = norm(&omega_vector(x, xy, p)?);
    Ok(w.powf(p - 2.0) * gap * gap)
}

/// `(|x+y|^p - lower-order expansion, remainder weight)` for the gradient
/// inequality, so that it holds with constant `C1` iff `slack >= C1 * weight`.
fn gradient_slack(x: &[f64], y: &[f64], p: f64, kappa: f64) -> Result<(f64, f64, f64)> {
    let xy = add(x, y);
    let (nx, ny) = (norm(x), norm(y));
    let lhs = norm(&xy).powf(p);
    let xp2 = nx.powf(p - 2.0);
    let quad = p * xp2 * ny * ny + p * (p - 2.0) * omega_term(x, &xy, p)?;
    let base = nx.powf(p) + p * xp2 * dot(x, y) + 0.5 * (1.0 - kappa) * quad;
    let weight = if p < 2.0 { ny.powf(p).min(xp2 * ny * ny) } else { ny.powf(p) };
    Ok((lhs, base, weight))
}

/// Both sides of the expansion of `|x+y|^p` with remainder
/// `C1 min{|y|^p, |x|^(p-2)|y|^2}` (`p < 2`) or `C1 |y|^p` (`p >= 2`).
pub fn check_gradient_inequality(x: &[f64], y: &[f64], p: f64, kappa: f64, c1: f64) -> Result<InequalityCheck> {
    let (lhs, base, weight) = gradient_slack(x, y, p, kappa)?;
    Ok(InequalityCheck::at_least(lhs, base + c1 * weight))
}

/// Both sides of the upper expansion of `|a+b|^(p*)`. The branch follows
/// `p` against `2(N+alpha)/(N+2+beta)`, equivalently `p*` against 2.
pub fn check_scalar_inequality(a: f64, b: f64, params: &CknParams, kappa: f64, c2: f64) -> InequalityCheck {
    let q = params.derived().p_star;
    let lhs = (a + b).abs().powf(q);
    InequalityCheck::at_most(lhs, scalar_rhs(a, b, q, params.p() <= params.pstar_two_threshold(), kappa, c2))
}

fn scalar_rhs(a: f64, b: f64, q: f64, low: bool, kappa: f64, c2: f64) -> f64 {
    let (aa, ab) = (a.abs(), b.abs());
    let coef = 0.5 * q * (q - 1.0) + kappa;
    let linear = if a == 0.0 { 0.0 } else { q * aa.powf(q - 2.0) * a * b };
    if low {
        let den = aa * aa + ab * ab;
        let quad = if den == 0.0 { 0.0 } else { (aa + c2 * ab).powf(q) * ab * ab / den };
        aa.powf(q) + linear + coef * quad
    } else {
        let quad = if a == 0.0 { 0.0 } else { aa.powf(q - 2.0) * ab * ab };
        aa.powf(q) + linear + coef * quad + c2 * ab.powf(q)
    }
}

/// `p|x|^(p-2)|y|^2 + p(p-2)|omega|^(p-2)(|x|-|x+y|)^2` divided by
/// `|x|/(|x|+|y|) |x|^(p-2)|y|^2`; the infimum over samples estimates `c(p)`.
/// `rhs` is the weighted quantity without `c(p)`; `y = 0` gives `lhs = +inf`.
pub fn check_fz_lower_bound(x: &[f64], y: &[f64], p: f64) -> Result<InequalityCheck> {
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::BranchViolation(format!("1 < p < 2, got p = {p}")));
    }
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 {
        return Err(Error::ZeroBase);
    }
    let den = nx / (nx + ny) * nx.powf(p - 2.0) * ny * ny;
    if den == 0.0 {
        return Ok(InequalityCheck { lhs: f64::INFINITY, rhs: 0.0, margin: f64::INFINITY, holds: true });
    }
    let xy = add(x, y);
    let num = p * nx.powf(p - 2.0) * ny * ny + p * (p - 2.0) * omega_term(x, &xy, p)?;
    Ok(InequalityCheck::at_least(num / den, 0.0))
}

/// `|x|^(p-2)|y|^2 + (p-2)|omega|^(p-2)(|x|-|x+y|)^2` relative to
/// `|x|^(p-2)|y|^2`; nonnegative for `p < 2`.
pub fn bracket_ratio(x: &[f64], y: &[f64], p: f64) -> Result<f64> {
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 {
        return Err(Error::ZeroBase);
    }
    let base = nx.powf(p - 2.0) * ny * ny;
    if base == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 + (p - 2.0) * omega_term(x, &add(x, y), p)? / base)
}

/// Random pair `(x, y)` in `R^dim`: uniform directions in the cube and
/// `|y|/|x|` log-uniform over six decades.
fn sample_pair(rng: &mut ChaCha8Rng, dim: usize) -> (Vec<f64>, Vec<f64>) {
    loop {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let y: Vec<f64> = (0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        if norm(&x) > 1e-3 && norm(&y) > 0.0 {
            return (x, y);
        }
    }
}

/// Largest `C1` consistent with every sample of the gradient inequality.
pub fn empirical_c1(p: f64, kappa: f64, dim: usize, samples: usize, seed: u64) -> Result<EmpiricalConstant> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..samples {
        let (x, y) = sample_pair(&mut rng, dim);
        let (lhs, base, weight) = gradient_slack(&x, &y, p, kappa)?;
        let slack = lhs - base;
        if slack < -1e-12 * lhs.abs().max(base.abs()) {
            violations += 1;
        }
        if weight > 0.0 {
            best = best.min(slack / weight);
        }
    }
    Ok(EmpiricalConstant { name: "C1".into(), value: best, samples, seed, violations })
}

/// Smallest `C2` making every sampled `(a, b) in [-10, 10]^2` satisfy the
/// scalar inequality, by per-sample bisection.
pub fn empirical_c2(params: &CknParams, kappa: f64, samples: usize, seed: u64) -> EmpiricalConstant {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..samples {
        let a = rng.random_range(-10.0..10.0);
        let b = rng.random_range(-10.0..10.0);
        if !check_scalar_inequality(a, b, params, kappa, 0.0).holds {
            violations += 1;
            worst = worst.max(minimal_c2(a, b, params, kappa));
        }
    }
    EmpiricalConstant { name: "C2".into(), value: worst, samples, seed, violations }
}

fn minimal_c2(a: f64, b: f64, params: &CknParams, kappa: f64) -> f64 {
    let q = params.derived().p_star;
    let low = params.p() <= params.pstar_two_threshold();
    if !low && b != 0.0 {
        // Linear in C2 on this branch; large p* can need values far beyond
        // any bisection bracket.
        return (((a + b).abs().powf(q) - scalar_rhs(a, b, q, false, kappa, 0.0)) / b.abs().powf(q)).max(0.0);
    }
    let ok = |c: f64| check_scalar_inequality(a, b, params, kappa, c).holds;
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Sample infimum of the `c(p)` ratio; violations count nonpositive ratios.
pub fn empirical_fz_constant(p: f64, dim: usize, samples: usize, seed: u64) -> Result<EmpiricalConstant> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..samples {
        let (x, y) = sample_pair(&mut rng, dim);
        let r = check_fz_lower_bound(&x, &y, p)?.lhs;
        if r <= 0.0 {
            violations += 1;
        }
        best = best.min(r);
    }
    Ok(EmpiricalConstant { name: "c(p)".into(), value: best, samples, seed, violations })
}

/// Sample minimum of [`bracket_ratio`]; violations count negative values.
pub fn bracket_minimum(p: f64, dim: usize, samples: usize, seed: u64) -> Result<EmpiricalConstant> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..samples {
        let (x, y) = sample_pair(&mut rng, dim);
        let r = bracket_ratio(&x, &y, p)?;
        if r < -1e-12 {
            violations += 1;
        }
        best = best.min(r);
    }
    Ok(EmpiricalConstant { name: "bracket".into(), value: best, samples, seed, violations })
}
