//! Parameter domain of the weighted problem
//!
//! `-div(|x|^alpha |grad u|^(p-2) grad u) = |x|^beta u^(p*-1)` in `R^N`,
//! together with the derived exponents of the radial change of variables
//! `r = s^t`, the degeneracy classification of the linearized operator and
//! the map to the classical `(a, b)` Caffarelli-Kohn-Nirenberg parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default integrality tolerance used when classifying degeneracy.
pub const DEFAULT_INT_TOL: f64 = 1e-9;

/// Validated problem parameters `(N, p, alpha, beta)`.
///
/// Invariants: `N >= 2`, `1 < p < N`, `p - N < alpha < p + beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CknParams {
    #[serde(rename = "N")]
    n: u32,
    p: f64,
    alpha: f64,
    beta: f64,
}

impl CknParams {
    /// Checks the parameter domain and returns the validated tuple.
    pub fn new(n: u32, p: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::NonFinite("p"));
        }
        if !alpha.is_finite() {
            return Err(Error::NonFinite("alpha"));
        }
        if !beta.is_finite() {
            return Err(Error::NonFinite("beta"));
        }
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        let nf = f64::from(n);
        if p <= 1.0 || p >= nf {
            return Err(Error::PNotInRange { p, n });
        }
        let lower = p - nf;
        let upper = p + beta;
        if alpha <= lower || alpha >= upper {
            return Err(Error::AlphaOutOfRange { alpha, lower, upper });
        }
        Ok(Self { n, p, alpha, beta })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> f64 {
        f64::from(self.n)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `N - p + alpha`, positive on the domain.
    pub fn m(&self) -> f64 {
        self.dim() - self.p + self.alpha
    }

    /// `p + beta - alpha`, positive on the domain.
    pub fn gap(&self) -> f64 {
        self.p + self.beta - self.alpha
    }

    /// Exponent of `|x|` inside the extremal profile, `(p + beta - alpha)/(p - 1)`.
    pub fn q(&self) -> f64 {
        self.gap() / (self.p - 1.0)
    }

    pub fn derived(&self) -> DerivedExponents {
        derive(self)
    }

    /// Threshold `2(N + alpha)/(N + 2 + beta)` separating `p* <= 2` from `p* > 2`.
    pub fn pstar_two_threshold(&self) -> f64 {
        2.0 * (self.dim() + self.alpha) / (self.dim() + 2.0 + self.beta)
    }
}

/// Exponents derived from validated parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    /// Critical exponent `p(N + beta)/(N - p + alpha)`.
    pub p_star: f64,
    /// Change-of-variables exponent `p/(p + beta - alpha)`.
    pub t: f64,
    /// Fractional dimension `(N - p + alpha) t + p`.
    #[serde(rename = "K")]
    pub k_dim: f64,
}

impl DerivedExponents {
    /// `K` through the closed form `p(N + beta)/(p + beta - alpha)`.
    pub fn k_closed(params: &CknParams) -> f64 {
        params.p * (params.dim() + params.beta) / params.gap()
    }
}

pub fn derive(params: &CknParams) -> DerivedExponents {
    let p_star = params.p * (params.dim() + params.beta) / params.m();
    let t = params.p / params.gap();
    let k_dim = params.m() * t + params.p;
    DerivedExponents { p_star, t, k_dim }
}

/// Eigenvalue `k(N - 2 + k)` of the Laplace-Beltrami operator on `S^(N-1)`.
pub fn angular_eigenvalue(n: u32, k: u32) -> f64 {
    let k = f64::from(k);
    k * (f64::from(n) - 2.0 + k)
}

fn binomial(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul(u128::from(n - i))
            .ok_or(Error::Overflow("binomial coefficient"))?
            / u128::from(i + 1);
    }
    u64::try_from(acc).map_err(|_| Error::Overflow("binomial coefficient"))
}

/// Dimension `M_k` of the degree-`k` spherical harmonics on `S^(N-1)`.
///
/// Evaluated as `C(N+k-1, k) - C(N+k-3, k-2)` with checked integer products,
/// which equals `(N+2k-2)(N+k-3)!/((N-2)! k!)` for `N >= 3` and gives
/// `1, 2, 2, ...` for `N = 2`.
pub fn multiplicity(n: u32, k: u32) -> Result<u64> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let (n, k) = (u64::from(n), u64::from(k));
    let all = binomial(n + k - 1, k)?;
    let lower = if k >= 2 { binomial(n + k - 3, k - 2)? } else { 0 };
    Ok(all - lower)
}

/// Two algebraically equal forms of the degeneracy left-hand side.
///
/// Returns `(((p+beta-alpha)/p)^2 [p(N+beta)/(p+beta-alpha) - 1],
/// (p+beta-alpha)[(N-1)p + beta(p-1) + alpha]/p^2)`; both equal `t^-2 (K - 1)`.
pub fn degeneracy_lhs_forms(params: &CknParams) -> (f64, f64) {
    let (p, a, b, n) = (params.p, params.alpha, params.beta, params.dim());
    let g = params.gap();
    let first = (g / p).powi(2) * (p * (n + b) / g - 1.0);
    let second = g * ((n - 1.0) * p + b * (p - 1.0) + a) / (p * p);
    (first, second)
}

/// Outcome of the integrality test `k(N - 2 + k) = t^-2 (K - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    /// Positive root of `k(N - 2 + k) = t^-2 (K - 1)`.
    pub k_real: f64,
    /// Nearest integer to `k_real`.
    pub nearest_k: u32,
    /// `|k_real - nearest_k|`, reported whether or not the case is degenerate.
    pub distance: f64,
    pub degenerate: bool,
    pub k: Option<u32>,
    pub multiplicity: Option<u64>,
    /// `1 + M_k` when degenerate, otherwise 1.
    pub eigenspace_dim: u64,
    pub int_tol: f64,
}

impl DegeneracyReport {
    /// Near-degenerate: not structurally degenerate but within `loose_tol`
    /// of an integer root.
    pub fn is_nearly_degenerate(&self, loose_tol: f64) -> bool {
        !self.degenerate && self.nearest_k >= 1 && self.distance < loose_tol
    }
}

/// Solves `k(N - 2 + k) = t^-2 (K - 1)` for `k > 0` and tests integrality.
pub fn classify_degeneracy(params: &CknParams, int_tol: f64) -> Result<DegeneracyReport> {
    if !(int_tol > 0.0 && int_tol < 0.5) {
        return Err(Error::BranchViolation(format!(
            "integrality tolerance in (0, 0.5), got {int_tol}"
        )));
    }
    let (rhs, _) = degeneracy_lhs_forms(params);
    let b = params.dim() - 2.0;
    let k_real = 0.5 * (-b + (b * b + 4.0 * rhs).sqrt());
    let rounded = k_real.round();
    let distance = (k_real - rounded).abs();
    let nearest_k = rounded.max(0.0) as u32;
    let degenerate = distance < int_tol && nearest_k >= 1;
    let (k, mult, dim) = if degenerate {
        let m = multiplicity(params.n, nearest_k)?;
        (Some(nearest_k), Some(m), 1 + m)
    } else {
        (None, None, 1)
    };
    Ok(DegeneracyReport {
        k_real,
        nearest_k,
        distance,
        degenerate,
        k,
        multiplicity: mult,
        eigenspace_dim: dim,
        int_tol,
    })
}

/// Classical parametrization `alpha = -p a`, `beta = -b h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CknClassicalParams {
    pub a: f64,
    pub b: f64,
    pub h: f64,
}

impl CknClassicalParams {
    /// Validates `a < (N-p)/p`, `a - (N-p)/p < b < a + 1` and computes
    /// `h = Np/(N - p(1 + a - b))`.
    pub fn new(n: u32, p: f64, a: f64, b: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        let nf = f64::from(n);
        if !(p > 1.0 && p < nf) {
            return Err(Error::PNotInRange { p, n });
        }
        let crit = (nf - p) / p;
        if !(a < crit) {
            return Err(Error::ClassicalDomain(format!("need a < (N-p)/p = {crit}, got a = {a}")));
        }
        if !(b > a - crit && b < a + 1.0) {
            return Err(Error::ClassicalDomain(format!(
                "need {} < b < {}, got b = {b}",
                a - crit,
                a + 1.0
            )));
        }
        let h = nf * p / (nf - p * (1.0 + a - b));
        Ok(Self { a, b, h })
    }
}

pub fn to_classical(params: &CknParams) -> CknClassicalParams {
    let a = -params.alpha / params.p;
    let h = params.derived().p_star;
    let b = -params.beta / h;
    CknClassicalParams { a, b, h }
}

/// Inverse of [`to_classical`]; `beta = -b Np/(N - p(1 + a - b))` in closed form.
pub fn from_classical(c: &CknClassicalParams, n: u32, p: f64) -> Result<CknParams> {
    let checked = CknClassicalParams::new(n, p, c.a, c.b)?;
    CknParams::new(n, p, -p * checked.a, -checked.b * checked.h)
}

/// Felli-Schneider curve
/// `b_FS^(k)(a) = (N/2)[1 + 4k(N-2+k)/(N-2-2a)^2]^(-1/2) - (N-2-2a)/2`.
pub fn felli_schneider(n: u32, a: f64, k: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    if k < 1 {
        return Err(Error::BranchViolation("mode k >= 1 on the Felli-Schneider curve".into()));
    }
    let nf = f64::from(n);
    let d = nf - 2.0 - 2.0 * a;
    if d.abs() <= 1e-12 * nf {
        return Err(Error::SingularDenominator("N - 2 - 2a = 0 on the Felli-Schneider curve"));
    }
    if d < 0.0 {
        return Err(Error::ClassicalDomain(format!("need a < (N-2)/2, got a = {a}")));
    }
    let bracket = 1.0 + 4.0 * angular_eigenvalue(n, k) / (d * d);
    Ok(0.5 * nf / bracket.sqrt() - 0.5 * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn validate_examples() {
        assert!(CknParams::new(3, 2.0, 0.0, 0.0).is_ok());
        assert!(matches!(
            CknParams::new(3, 2.0, 2.0, 0.0),
            Err(Error::AlphaOutOfRange { .. })
        ));
        assert!(CknParams::new(4, 2.0, 0.0, 2.0).is_ok());
        assert_eq!(CknParams::new(1, 1.5, 0.0, 0.0), Err(Error::DimensionTooSmall(1)));
        assert!(matches!(CknParams::new(3, 1.0, 0.0, 0.0), Err(Error::PNotInRange { .. })));
        assert!(matches!(CknParams::new(3, 3.0, 0.0, 0.0), Err(Error::PNotInRange { .. })));
        assert!(matches!(
            CknParams::new(3, 2.0, -1.0, 0.0),
            Err(Error::AlphaOutOfRange { .. })
        ));
        assert!(CknParams::new(3, f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn derive_examples() {
        let d = CknParams::new(3, 2.0, 0.0, 0.0).unwrap().derived();
        assert_eq!((d.p_star, d.t, d.k_dim), (6.0, 1.0, 3.0));
        let d = CknParams::new(4, 2.0, 0.0, 2.0).unwrap().derived();
        assert!(rel(d.p_star, 6.0) < 1e-15);
        assert!(rel(d.t, 0.5) < 1e-15);
        assert!(rel(d.k_dim, 3.0) < 1e-15);
    }

    #[test]
    fn unweighted_case_is_degenerate_at_k1() {
        for n in 2..8u32 {
            for &p in &[1.1, 1.5, 1.9] {
                if p >= f64::from(n) {
                    continue;
                }
                let prm = CknParams::new(n, p, 0.0, 0.0).unwrap();
                let rep = classify_degeneracy(&prm, DEFAULT_INT_TOL).unwrap();
                assert!(rep.degenerate, "N={n} p={p}: {rep:?}");
                assert_eq!(rep.k, Some(1));
                assert_eq!(rep.multiplicity, Some(u64::from(n)));
            }
        }
    }

    #[test]
    fn degenerate_k2_example() {
        let prm = CknParams::new(4, 2.0, 0.0, 2.0).unwrap();
        let rep = classify_degeneracy(&prm, DEFAULT_INT_TOL).unwrap();
        assert!(rep.degenerate);
        assert_eq!(rep.k, Some(2));
        assert_eq!(rep.multiplicity, Some(9));
        assert_eq!(rep.eigenspace_dim, 10);
    }

    #[test]
    fn non_degenerate_example() {
        let prm = CknParams::new(3, 2.0, 0.3, 0.1).unwrap();
        let rep = classify_degeneracy(&prm, DEFAULT_INT_TOL).unwrap();
        // t^-2 (K-1) = 0.81 * (62/18 - 1) = 1.98, root (-1 + sqrt(8.92))/2
        let expected = 0.5 * (-1.0 + (1.0f64 + 4.0 * 1.98).sqrt());
        assert!((rep.k_real - expected).abs() < 1e-12);
        assert!(!rep.degenerate);
        assert_eq!(rep.eigenspace_dim, 1);
        assert!(rep.is_nearly_degenerate(0.05));
        assert!(classify_degeneracy(&prm, 0.7).is_err());
    }

    #[test]
    fn multiplicity_examples() {
        for n in 2..10 {
            assert_eq!(multiplicity(n, 0).unwrap(), 1);
            assert_eq!(multiplicity(n, 1).unwrap(), u64::from(n));
        }
        assert_eq!(multiplicity(4, 2).unwrap(), 9);
        assert_eq!(multiplicity(3, 5).unwrap(), 11);
        assert!(multiplicity(1, 2).is_err());
        assert!(matches!(multiplicity(200, 200), Err(Error::Overflow(_))));
    }

    /// Brute-force count of degree-k harmonic polynomials: nullity of the
    /// Laplacian from degree-k to degree-(k-2) monomials, by exact
    /// fraction-free elimination.
    fn harmonic_dim_bruteforce(n: usize, k: usize) -> usize {
        fn monomials(n: usize, k: usize) -> Vec<Vec<usize>> {
            if n == 1 {
                return vec![vec![k]];
            }
            let mut out = Vec::new();
            for first in 0..=k {
                for mut rest in monomials(n - 1, k - first) {
                    rest.insert(0, first);
                    out.push(rest);
                }
            }
            out
        }
        let src = monomials(n, k);
        if k < 2 {
            return src.len();
        }
        let dst = monomials(n, k - 2);
        let mut mat = vec![vec![0i128; src.len()]; dst.len()];
        for (j, m) in src.iter().enumerate() {
            for i in 0..n {
                if m[i] >= 2 {
                    let mut e = m.clone();
                    e[i] -= 2;
                    let row = dst.iter().position(|d| *d == e).unwrap();
                    mat[row][j] += (m[i] * (m[i] - 1)) as i128;
                }
            }
        }
        let (rows, cols) = (dst.len(), src.len());
        let mut rank = 0;
        for c in 0..cols {
            let Some(piv) = (rank..rows).find(|&r| mat[r][c] != 0) else { continue };
            mat.swap(rank, piv);
            for r in 0..rows {
                if r != rank && mat[r][c] != 0 {
                    let (f, g) = (mat[r][c], mat[rank][c]);
                    for cc in 0..cols {
                        mat[r][cc] = mat[r][cc] * g - mat[rank][cc] * f;
                    }
                    let gcd = mat[r].iter().fold(0i128, |a, &b| gcd(a, b.abs()));
                    if gcd > 1 {
                        mat[r].iter_mut().for_each(|v| *v /= gcd);
                    }
                }
            }
            rank += 1;
        }
        cols - rank
    }

    fn gcd(a: i128, b: i128) -> i128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }

    #[test]
    fn multiplicity_matches_bruteforce_harmonic_count() {
        for n in 2..=5u32 {
            for k in 0..=4u32 {
                assert_eq!(
                    multiplicity(n, k).unwrap() as usize,
                    harmonic_dim_bruteforce(n as usize, k as usize),
                    "N={n} k={k}"
                );
            }
        }
    }

    #[test]
    fn angular_eigenvalue_examples() {
        assert_eq!(angular_eigenvalue(5, 0), 0.0);
        assert_eq!(angular_eigenvalue(5, 1), 4.0);
        assert_eq!(angular_eigenvalue(4, 2), 8.0);
    }

    #[test]
    fn classical_unweighted() {
        let prm = CknParams::new(5, 2.5, 0.0, 0.0).unwrap();
        let c = to_classical(&prm);
        assert_eq!(c.a, 0.0);
        assert_eq!(c.b, 0.0);
        assert!(rel(c.h, 5.0 * 2.5 / 2.5) < 1e-15);
    }

    #[test]
    fn felli_schneider_examples() {
        let b = felli_schneider(3, -1.0, 1).unwrap();
        // N=3, a=-1: d = 3, bracket = 1 + 8/9
        let expected = 1.5 / (17.0f64 / 9.0).sqrt() - 1.5;
        assert!((b - expected).abs() < 1e-15);
        let mut prev = b;
        for k in 2..60 {
            let next = felli_schneider(3, -1.0, k).unwrap();
            assert!(next < prev);
            assert!(next > -1.5);
            prev = next;
        }
        assert!((felli_schneider(3, -1.0, 100_000).unwrap() + 1.5).abs() < 1e-4);
        assert!(matches!(felli_schneider(3, 0.5, 1), Err(Error::SingularDenominator(_))));
        assert!(felli_schneider(3, 0.7, 1).is_err());
        assert!(felli_schneider(3, -1.0, 0).is_err());
    }

    #[test]
    fn felli_schneider_maps_onto_degeneracy_condition() {
        for n in [3u32, 4] {
            for a in [-0.5, -1.0, -2.0] {
                for k in [1u32, 2] {
                    let b = felli_schneider(n, a, k).unwrap();
                    let c = CknClassicalParams::new(n, 2.0, a, b).unwrap();
                    let prm = from_classical(&c, n, 2.0).unwrap();
                    let (lhs, _) = degeneracy_lhs_forms(&prm);
                    assert!((lhs - angular_eigenvalue(n, k)).abs() < 1e-10);
                    let rep = classify_degeneracy(&prm, DEFAULT_INT_TOL).unwrap();
                    assert_eq!(rep.k, Some(k));
                }
            }
        }
    }

    fn arb_params() -> impl Strategy<Value = CknParams> {
        (2u32..9, 0.0f64..1.0, 0.0f64..1.0, -1.0f64..3.0).prop_map(|(n, up, ua, beta)| {
            let nf = f64::from(n);
            let p = 1.05 + up * (nf - 1.1);
            // beta >= -1 > -N keeps the alpha window nonempty
            let (lo, hi) = (p - nf, p + beta);
            let alpha = lo + (0.02 + 0.96 * ua) * (hi - lo);
            CknParams::new(n, p, alpha, beta).unwrap()
        })
    }

    proptest! {
        #[test]
        fn derived_invariants(prm in arb_params()) {
            let d = prm.derived();
            prop_assert!(d.p_star > prm.p());
            prop_assert!(d.t > 0.0);
            prop_assert!(d.k_dim > prm.p());
            prop_assert!(rel(d.k_dim, DerivedExponents::k_closed(&prm)) < 1e-14);
        }

        #[test]
        fn degeneracy_forms_agree(prm in arb_params()) {
            let (a, b) = degeneracy_lhs_forms(&prm);
            prop_assert!(rel(a, b) < 1e-12);
            let d = prm.derived();
            prop_assert!(rel(a, (d.k_dim - 1.0) / (d.t * d.t)) < 1e-12);
        }

        #[test]
        fn classical_round_trip(prm in arb_params()) {
            let c = to_classical(&prm);
            prop_assert!(rel(c.h, prm.derived().p_star) < 1e-12);
            let back = from_classical(&c, prm.n(), prm.p()).unwrap();
            prop_assert!((back.alpha() - prm.alpha()).abs() < 1e-12 * (1.0 + prm.alpha().abs()));
            prop_assert!((back.beta() - prm.beta()).abs() < 1e-12 * (1.0 + prm.beta().abs()));
        }

        #[test]
        fn felli_schneider_consistency_p2(a in -3.0f64..-0.01, n in 3u32..7, k in 1u32..3) {
            let b = felli_schneider(n, a, k).unwrap();
            let c = CknClassicalParams::new(n, 2.0, a, b).unwrap();
            let prm = from_classical(&c, n, 2.0).unwrap();
            let (lhs, _) = degeneracy_lhs_forms(&prm);
            prop_assert!((lhs - angular_eigenvalue(n, k)).abs() < 1e-10);
        }
    }
}
