//! Remainder terms: distance to the extremal manifold, the deficit, its
//! stability quotient along perturbation families, and pointwise checkers
//! for the algebraic inequalities behind the estimates.
//!
//! Every constant produced here (`C1`, `C2`, `c(p)`, the Orlicz-Poincare
//! constant, `B`) is a sample extremum with its sample count, never a bound.

mod corpus;
mod inequalities;
mod nelder_mead;
mod projection;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use corpus::{corpus, CorpusEntry};
pub use inequalities::{
    bracket_minimum, bracket_ratio, check_fz_lower_bound, check_gradient_inequality, check_scalar_inequality,
    empirical_c1, empirical_c2, empirical_fz_constant, omega_vector, EmpiricalConstant, InequalityCheck,
};
pub use nelder_mead::{minimize, Minimum, NelderMeadOptions};
pub use projection::{project_to_manifold, LocalMinimum, ManifoldProjection, ProjectionOptions};

use crate::closed_forms::{sharp_constant, surface_area, EigenfunctionW, ExtremalProfile};
use crate::error::{Error, Result};
use crate::params::CknParams;
use crate::profile::RadialFunction;
use crate::quadrature::{grad_norm_p, l2_star_inner, lp_star_norm, RadialGrid, TailRates};
use crate::spectrum::{assemble_mode, eigen_solve, SpectrumOptions};

/// `p` for `p >= 2`, else 2: the power of the distance the deficit controls.
pub fn deficit_exponent(p: f64) -> f64 {
    if p >= 2.0 {
        p
    } else {
        2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeficitReport {
    /// `||u||^p`.
    pub norm_p: f64,
    /// `||u||_*^p`.
    pub norm_star_p: f64,
    /// `||u||^p - S ||u||_*^p`.
    pub deficit: f64,
    pub exponent: f64,
    pub dist: Option<f64>,
    /// `deficit / dist^exponent`, once a positive distance is attached.
    pub quotient: Option<f64>,
}

impl DeficitReport {
    pub fn with_distance(mut self, d: f64) -> Self {
        self.dist = Some(d);
        self.quotient = (d > 0.0).then(|| self.deficit / d.powf(self.exponent));
        self
    }
}

pub fn deficit(u: &RadialFunction, params: &CknParams, grid: &RadialGrid) -> Result<DeficitReport> {
    let p = params.p();
    let norm_p = grad_norm_p(u, params, grid)?.value;
    let star = lp_star_norm(u, params, grid)?.value;
    if !(norm_p > 0.0) {
        return Err(Error::ZeroFunction);
    }
    let norm_star_p = star.powf(p / params.derived().p_star);
    let s = sharp_constant(params).value;
    Ok(DeficitReport {
        norm_p,
        norm_star_p,
        deficit: norm_p - s * norm_star_p,
        exponent: deficit_exponent(p),
        dist: None,
        quotient: None,
    })
}

/// Deficit with the distance from [`project_to_manifold`] attached.
pub fn deficit_with_distance(
    u: &RadialFunction,
    params: &CknParams,
    grid: &RadialGrid,
    opts: &ProjectionOptions,
) -> Result<(DeficitReport, ManifoldProjection)> {
    let proj = project_to_manifold(u, params, grid, opts)?;
    Ok((deficit(u, params, grid)?.with_distance(proj.d), proj))
}

/// Perturbation directions `w` for `u = U_1 + eps w`, each normalized to
/// `||w|| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `W_0`, tangent to the manifold.
    W0,
    /// Smooth bump supported on `1 < r < 2`.
    Bump,
    /// Third radial eigenvector of the linearized operator, made
    /// `L^2_*`-orthogonal to `U` and `W_0`.
    Eig3,
    /// Equal-weight sum of the three.
    Mix,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::W0, Family::Bump, Family::Eig3, Family::Mix];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::W0 => "w0",
            Family::Bump => "bump",
            Family::Eig3 => "eig3",
            Family::Mix => "mix",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

/// `exp(-1/((r-a)(b-r)))` on `(a, b)`, zero elsewhere.
pub fn bump(a: f64, b: f64) -> RadialFunction {
    let g = move |r: f64| (r - a) * (b - r);
    RadialFunction::new(move |r| if r > a && r < b { (-1.0 / g(r)).exp() } else { 0.0 }).with_derivative(move |r| {
        if r > a && r < b {
            let gr = g(r);
            (-1.0 / gr).exp() * (a + b - 2.0 * r) / (gr * gr)
        } else {
            0.0
        }
    })
}

fn normalized(w: RadialFunction, params: &CknParams, grid: &RadialGrid) -> Result<RadialFunction> {
    let n = grad_norm_p(&w, params, grid)?.value.powf(1.0 / params.p());
    if !(n > 0.0) {
        return Err(Error::ZeroFunction);
    }
    Ok(w.scaled(1.0 / n))
}

/// `v` minus its `L^2_*` projection onto `span{U_1, W_0}`.
pub fn orthogonalize(v: &RadialFunction, params: &CknParams, grid: &RadialGrid) -> Result<RadialFunction> {
    let u = ExtremalProfile::unit(*params).to_radial_function();
    let w0 = EigenfunctionW::w0(*params).to_radial_function();
    let ip = |a: &RadialFunction, b: &RadialFunction| l2_star_inner(a, b, params, grid);
    let (g11, g12, g22) = (ip(&u, &u)?, ip(&u, &w0)?, ip(&w0, &w0)?);
    let (b1, b2) = (ip(&u, v)?, ip(&w0, v)?);
    let det = g11 * g22 - g12 * g12;
    let x1 = (b1 * g22 - b2 * g12) / det;
    let x2 = (g11 * b2 - g12 * b1) / det;
    Ok(v.combine(1.0, &u, -x1).combine(1.0, &w0, -x2))
}

/// Third `k = 0` eigenvector in the `r` variable, before normalization.
pub fn third_radial_eigenvector(params: &CknParams) -> Result<RadialFunction> {
    let opts = SpectrumOptions::default().adapted(params);
    let problem = assemble_mode(params, 0, &opts.grid()?)?;
    let pairs = eigen_solve(&problem, 3)?;
    pairs[2].to_radial_function(&problem)
}

pub fn family_profile(family: Family, params: &CknParams, grid: &RadialGrid) -> Result<RadialFunction> {
    Ok(match family {
        Family::W0 => normalized(EigenfunctionW::w0(*params).to_radial_function(), params, grid)?,
        Family::Bump => normalized(bump(1.0, 2.0), params, grid)?,
        Family::Eig3 => {
            let v = orthogonalize(&third_radial_eigenvector(params)?, params, grid)?;
            normalized(v, params, grid)?
        }
        Family::Mix => {
            let parts: Vec<RadialFunction> = [Family::W0, Family::Bump, Family::Eig3]
                .iter()
                .map(|f| family_profile(*f, params, grid))
                .collect::<Result<_>>()?;
            normalized(parts[0].combine(1.0, &parts[1], 1.0).combine(1.0, &parts[2], 1.0), params, grid)?
        }
    })
}

/// `count` points log-spaced from `from` to `to` inclusive.
pub fn log_space(from: f64, to: f64, count: usize) -> Result<Vec<f64>> {
    if !(from > 0.0 && to > 0.0 && from.is_finite() && to.is_finite()) || count == 0 {
        return Err(Error::Parse(format!("need positive finite bounds and count >= 1, got {from}:{to}:{count}")));
    }
    if count == 1 {
        return Ok(vec![from]);
    }
    let (a, b) = (from.ln(), to.ln());
    Ok((0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub eps: f64,
    pub deficit: f64,
    pub dist: f64,
    pub quotient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub params: CknParams,
    pub family: Family,
    pub exponent: f64,
    pub rows: Vec<ScanRow>,
    /// Smallest quotient over the rows.
    #[serde(rename = "empirical_B")]
    pub empirical_b: f64,
    /// Least-squares slope of `ln deficit` against `ln eps` over the rows
    /// with `1e-3 <= eps <= 1e-2`.
    pub slope: Option<f64>,
    /// Set when a projection failed; `rows` then stops before that `eps`.
    pub aborted: Option<String>,
}

impl ScanReport {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(["eps", "deficit", "dist", "quotient"]).map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.rows {
            w.write_record([r.eps, r.deficit, r.dist, r.quotient].map(|v| format!("{v:e}")))
                .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn slope_fit(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(_, y)| *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Deficit, distance and quotient of `U_1 + eps w` along `eps_grid`.
pub fn quotient_scan(
    params: &CknParams,
    family: Family,
    eps_grid: &[f64],
    grid: &RadialGrid,
    opts: &ProjectionOptions,
) -> Result<ScanReport> {
    let w = family_profile(family, params, grid)?;
    scan_profile(params, family, &w, eps_grid, grid, opts)
}

/// [`quotient_scan`] with an explicit direction `w`.
pub fn scan_profile(
    params: &CknParams,
    family: Family,
    w: &RadialFunction,
    eps_grid: &[f64],
    grid: &RadialGrid,
    opts: &ProjectionOptions,
) -> Result<ScanReport> {
    let u1 = ExtremalProfile::unit(*params).to_radial_function();
    let results: Vec<Result<ScanRow>> = eps_grid
        .par_iter()
        .map(|&eps| {
            let u = u1.combine(1.0, w, eps);
            let (rep, proj) = deficit_with_distance(&u, params, grid, opts)?;
            Ok(ScanRow { eps, deficit: rep.deficit, dist: proj.d, quotient: rep.quotient.unwrap_or(f64::NAN) })
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut aborted = None;
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                aborted = Some(e.to_string());
                break;
            }
        }
    }
    let empirical_b = rows.iter().map(|r| r.quotient).fold(f64::INFINITY, f64::min);
    let fit: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.eps >= 1e-3 * (1.0 - 1e-9) && r.eps <= 1e-2 * (1.0 + 1e-9)).map(|r| (r.eps, r.deficit)).collect();
    Ok(ScanReport {
        params: *params,
        family,
        exponent: deficit_exponent(params.p()),
        rows,
        empirical_b,
        slope: slope_fit(&fit),
        aborted,
    })
}

fn weighted_integral(params: &CknParams, grid: &RadialGrid, exponent: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    Ok(grid.integrate_fn(|r| r.powf(exponent + params.dim() - 1.0) * f(r), TailRates::default())?.value
        * surface_area(params.dim()))
}

/// `int |x|^beta (U + |eps v|)^(p*-2) v^2` over
/// `int |x|^alpha (|grad U| + eps |grad v|)^(p-2) |grad v|^2`, defined for
/// `p <= 2(N+alpha)/(N+2+beta)`.
pub fn orlicz_poincare_ratio(v: &RadialFunction, eps: f64, params: &CknParams, grid: &RadialGrid) -> Result<f64> {
    if params.p() > params.pstar_two_threshold() {
        return Err(Error::BranchViolation(format!(
            "p <= 2(N+alpha)/(N+2+beta) = {}, got p = {}",
            params.pstar_two_threshold(),
            params.p()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::BranchViolation(format!("eps > 0, got {eps}")));
    }
    let (p, ps) = (params.p(), params.derived().p_star);
    let u = ExtremalProfile::unit(*params);
    let lhs = weighted_integral(params, grid, params.beta(), |r| {
        let x = v.value(r);
        if x == 0.0 {
            0.0
        } else {
            (u.value(r) + (eps * x).abs()).powf(ps - 2.0) * x * x
        }
    })?;
    let rhs = weighted_integral(params, grid, params.alpha(), |r| {
        let d = v.derivative(r);
        if d == 0.0 {
            0.0
        } else {
            (u.derivative(r).abs() + eps * d.abs()).powf(p - 2.0) * d * d
        }
    })?;
    if !(rhs > 0.0) {
        return Err(Error::ZeroFunction);
    }
    Ok(lhs / rhs)
}

/// Which spectral-gap estimate applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapBranch {
    /// `p >= 2`.
    Quadratic,
    /// `p < 2` and `p* <= 2`: the right side uses `(U + C1|v|)^(p*) v^2/(U^2 + v^2)`.
    SubQuadraticLow,
    /// `p < 2 < p*`.
    SubQuadraticHigh,
}

impl GapBranch {
    pub fn of(params: &CknParams) -> Self {
        if params.p() >= 2.0 {
            GapBranch::Quadratic
        } else if params.p() <= params.pstar_two_threshold() {
            GapBranch::SubQuadraticLow
        } else {
            GapBranch::SubQuadraticHigh
        }
    }
}

/// Caller-chosen constants of the spectral-gap estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapCase {
    pub tau: f64,
    /// Weight of `min{|grad v|^p, |grad U|^(p-2)|grad v|^2}` (`p < 2` only).
    pub gamma0: f64,
    /// `C1` in the low branch.
    pub c1: f64,
    /// Amplitude bound; exceeding it only produces a warning.
    pub delta: Option<f64>,
}

impl GapCase {
    pub fn new(tau: f64) -> Self {
        Self { tau, gamma0: 0.0, c1: 1.0, delta: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralGapCheck {
    pub branch: GapBranch,
    pub check: InequalityCheck,
    /// `||v||`.
    pub norm: f64,
    /// Normalized `L^2_*` pairings of `v` with `U` and `W_0`.
    pub orthogonality: [f64; 2],
    pub warning: Option<String>,
}

/// Tolerance on the normalized `L^2_*` pairings with the tangent space.
pub const ORTHOGONALITY_TOL: f64 = 1e-6;

/// Both sides of the spectral-gap estimate at `U = U_1` for a radial `v`
/// that is `L^2_*`-orthogonal to `U` and `W_0`.
pub fn spectral_gap_lhs_rhs(v: &RadialFunction, params: &CknParams, grid: &RadialGrid, case: &GapCase) -> Result<SpectralGapCheck> {
    let (p, ps) = (params.p(), params.derived().p_star);
    let branch = GapBranch::of(params);
    let unit = ExtremalProfile::unit(*params);
    let u = unit.to_radial_function();
    let w0 = EigenfunctionW::w0(*params).to_radial_function();

    let vv = l2_star_inner(v, v, params, grid)?;
    if !(vv > 0.0) {
        return Err(Error::ZeroFunction);
    }
    let cos = |a: &RadialFunction| -> Result<f64> {
        Ok(l2_star_inner(v, a, params, grid)? / (vv * l2_star_inner(a, a, params, grid)?).sqrt())
    };
    let orthogonality = [cos(&u)?, cos(&w0)?];
    if let Some(bad) = orthogonality.iter().find(|c| c.abs() > ORTHOGONALITY_TOL) {
        return Err(Error::OrthogonalityViolation(format!("normalized L2_* pairing {bad:e} exceeds {ORTHOGONALITY_TOL:e}")));
    }

    let lhs = weighted_integral(params, grid, params.alpha(), |r| {
        let (x, y) = (unit.derivative(r), v.derivative(r));
        if y == 0.0 {
            return 0.0;
        }
        let ax = x.abs();
        let mut s = ax.powf(p - 2.0) * y * y;
        if p != 2.0 {
            let gap = (x + y).abs() - ax;
            let w = match omega_vector(&[x], &[x + y], p) {
                Ok(w) => w[0].abs(),
                Err(_) => return f64::NAN,
            };
            if gap != 0.0 {
                s += (p - 2.0) * w.powf(p - 2.0) * gap * gap;
            }
        }
        if p < 2.0 {
            s += case.gamma0 * y.abs().powf(p).min(ax.powf(p - 2.0) * y * y);
        }
        s
    })?;
    let weight = |r: f64| {
        let (uu, x) = (unit.value(r), v.value(r));
        match branch {
            GapBranch::SubQuadraticLow if x != 0.0 => (uu + case.c1 * x.abs()).powf(ps) * x * x / (uu * uu + x * x),
            _ => uu.powf(ps - 2.0) * x * x,
        }
    };
    let rhs = (ps - 1.0 + case.tau) * weighted_integral(params, grid, params.beta(), weight)?;

    let norm = grad_norm_p(v, params, grid)?.value.powf(1.0 / p);
    let warning = case
        .delta
        .filter(|&d| norm > d)
        .map(|d| format!("||v|| = {norm:e} exceeds the amplitude bound {d:e}; the estimate is only claimed for small v"));
    Ok(SpectralGapCheck { branch, check: InequalityCheck::at_least(lhs, rhs), norm, orthogonality, warning })
}
