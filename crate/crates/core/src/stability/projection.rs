//! Distance to the extremal manifold `{c U_lambda}` in the gradient norm.

use serde::Serialize;

use super::nelder_mead::{minimize, NelderMeadOptions};
use crate::closed_forms::{surface_area, ExtremalProfile};
use crate::error::{Error, Result};
use crate::params::CknParams;
use crate::profile::RadialFunction;
use crate::quadrature::{grad_norm_p, Grading, RadialGrid, TailRates};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionOptions {
    /// Seed grid is `seed_points x seed_points` over the search box.
    pub seed_points: usize,
    pub starts: usize,
    pub diameter_tol: f64,
    pub max_iter: usize,
    /// Extra Nelder-Mead runs from the best vertex of an unconverged run.
    pub max_restarts: usize,
    pub log_lambda_range: (f64, f64),
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { seed_points: 21, starts: 5, diameter_tol: 1e-8, max_iter: 1000, max_restarts: 3, log_lambda_range: (-3.0, 3.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalMinimum {
    pub c: f64,
    pub lambda: f64,
    pub d: f64,
}

/// Result of minimizing `||u - c U_lambda||` over `c` and `lambda > 0`.
///
/// `stationarity` holds the two first-order conditions of the distance,
/// `int r^(alpha+N-1) |w'|^(p-2) w' T'` for `T = U_lambda` and
/// `T = lambda d/dlambda U_lambda`, each divided by `||T||`.
/// `tangent_pairing` is `int r^(alpha+N-1) |U_lambda'|^(p-2) U_lambda' w'`
/// over `||U_lambda||^(p-1)`; it agrees with the first condition only at
/// `p = 2`.
#[derive(Debug, Clone, Serialize)]
pub struct ManifoldProjection {
    pub c: f64,
    pub lambda: f64,
    pub d: f64,
    #[serde(skip)]
    pub w: Option<RadialFunction>,
    pub converged: bool,
    pub restarts_used: usize,
    pub minima: Vec<LocalMinimum>,
    /// More than one distinct minimizer attains the smallest distance.
    pub non_unique: bool,
    pub stationarity: Option<[f64; 2]>,
    pub tangent_pairing: Option<f64>,
}

impl ManifoldProjection {
    /// `c U_lambda + d w`.
    pub fn reconstruct(&self, params: &CknParams) -> Result<RadialFunction> {
        let base = ExtremalProfile::new(*params, self.c, self.lambda)?.to_radial_function();
        Ok(match &self.w {
            Some(w) => base.combine(1.0, w, self.d),
            None => base,
        })
    }
}

/// Precomputed samples for the search objective.
struct Objective<'a> {
    unit: ExtremalProfile,
    grid: &'a RadialGrid,
    du: Vec<f64>,
    weight: Vec<f64>,
    p: f64,
    mp: f64,
    omega: f64,
}

const SEARCH_NODES: usize = 1000;

impl<'a> Objective<'a> {
    fn new(u: &RadialFunction, params: &CknParams, grid: &'a RadialGrid) -> Self {
        let ex = params.alpha() + params.dim() - 1.0;
        Self {
            unit: ExtremalProfile::unit(*params),
            grid,
            du: grid.sample(|r| u.derivative(r)),
            weight: grid.sample(|r| r.powf(ex)),
            p: params.p(),
            mp: params.m() / params.p(),
            omega: surface_area(params.dim()),
        }
    }

    /// `||u - c U_lambda||` from grid samples only; `+inf` where the tail
    /// model fails.
    fn distance(&self, c: f64, lambda: f64) -> f64 {
        let pre = c * lambda.powf(self.mp + 1.0);
        let g: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .zip(&self.du)
            .zip(&self.weight)
            .map(|((&r, &du), &w)| w * (du - pre * self.unit.derivative(lambda * r)).abs().powf(self.p))
            .collect();
        match self.grid.integrate(&g, TailRates::default()) {
            Ok(q) if q.value >= 0.0 => (self.omega * q.value).powf(1.0 / self.p),
            Ok(_) => 0.0,
            Err(_) => f64::INFINITY,
        }
    }
}

/// Local minimizers of `||u - c U_lambda||` by Nelder-Mead over
/// `(c/c0, ln lambda)`, `c0 = ||u||/||U_1||`, seeded from the best points of
/// a coarse grid on `[-2, 2] x log_lambda_range`.
pub fn project_to_manifold(
    u: &RadialFunction,
    params: &CknParams,
    grid: &RadialGrid,
    opts: &ProjectionOptions,
) -> Result<ManifoldProjection> {
    let p = params.p();
    let unit = ExtremalProfile::unit(*params);
    let norm_u = grad_norm_p(u, params, grid)?.value.powf(1.0 / p);
    if !(norm_u > 0.0) {
        return Err(Error::ZeroFunction);
    }
    let norm_unit = grad_norm_p(&unit.to_radial_function(), params, grid)?.value.powf(1.0 / p);
    let c0 = norm_u / norm_unit;

    // seeding and multi-start run on a coarser copy of the grid; the best
    // minimizer is then polished on the full grid
    let coarse = match grid.grading() {
        Grading::Custom => grid.clone(),
        _ if grid.len() <= 2 * SEARCH_NODES => grid.clone(),
        _ => RadialGrid::log_uniform(grid.r_min(), grid.r_max(), SEARCH_NODES)?,
    };
    let search = Objective::new(u, params, &coarse);
    let f = |x: &[f64; 2]| search.distance(x[0] * c0, x[1].exp());

    let (lo, hi) = opts.log_lambda_range;
    let k = opts.seed_points.max(2);
    let mut seeds: Vec<([f64; 2], f64)> = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let x = [-2.0 + 4.0 * i as f64 / (k - 1) as f64, lo + (hi - lo) * j as f64 / (k - 1) as f64];
            seeds.push((x, f(&x)));
        }
    }
    seeds.sort_by(|a, b| a.1.total_cmp(&b.1));

    let nm = NelderMeadOptions { max_iter: opts.max_iter, diameter_tol: opts.diameter_tol };
    let step = 0.5 * (hi - lo) / (k - 1) as f64;
    let mut restarts_used = 0;
    let mut runs = Vec::new();
    for (x0, _) in seeds.iter().take(opts.starts.max(1)) {
        let mut m = minimize(f, *x0, step, nm);
        let mut tries = 0;
        while !m.converged && tries < opts.max_restarts {
            tries += 1;
            m = minimize(f, m.x, step * 0.1, nm);
        }
        restarts_used += tries;
        runs.push(m);
    }

    // distinct minimizers, best first
    runs.sort_by(|a, b| a.f.total_cmp(&b.f));
    let mut distinct: Vec<&super::nelder_mead::Minimum<2>> = Vec::new();
    for m in &runs {
        if distinct.iter().all(|d| (d.x[0] - m.x[0]).hypot(d.x[1] - m.x[1]) > 1e-5) {
            distinct.push(m);
        }
    }
    let best = distinct[0];
    if !runs.iter().any(|m| m.converged) {
        return Err(Error::NonConvergence { restarts: restarts_used, best: best.f });
    }
    let full = Objective::new(u, params, grid);
    let polished = minimize(|x: &[f64; 2]| full.distance(x[0] * c0, x[1].exp()), best.x, 1e-4, nm);
    let tie = 1e-6 * best.f + 1e-12 * norm_u;
    let non_unique = distinct.iter().skip(1).any(|m| m.f <= best.f + tie);
    let minima = distinct.iter().map(|m| LocalMinimum { c: m.x[0] * c0, lambda: m.x[1].exp(), d: m.f }).collect();

    let remainder = |c: f64, lambda: f64| -> Result<(RadialFunction, f64)> {
        let ul = ExtremalProfile::new(*params, c, lambda)?.to_radial_function();
        let e = u.combine(1.0, &ul, -1.0);
        // the search value stands in when the tail model rejects a vanishing remainder
        let d = grad_norm_p(&e, params, grid).map_or(polished.f, |q| q.value.max(0.0).powf(1.0 / p));
        Ok((e, d))
    };
    let (mut c, mut lambda) = (polished.x[0] * c0, polished.x[1].exp());
    let (mut e, mut d) = remainder(c, lambda)?;
    if d > 1e-10 * norm_u {
        // Newton on the first-order conditions with the accurate quadrature;
        // the simplex stops where the search quadrature flattens out
        for _ in 0..4 {
            let Ok(step) = newton_step(u, params, grid, c, lambda) else { break };
            let (c1, l1) = (c + step[0], lambda * step[1].exp());
            let (e1, d1) = remainder(c1, l1)?;
            if !(d1 <= d * (1.0 + 1e-12)) {
                break;
            }
            (c, lambda, e, d) = (c1, l1, e1, d1);
            if step[0].abs() < 1e-13 * c.abs() && step[1].abs() < 1e-13 {
                break;
            }
        }
    }

    let mut out = ManifoldProjection {
        c,
        lambda,
        d,
        w: None,
        converged: best.converged && polished.converged,
        restarts_used,
        minima,
        non_unique,
        stationarity: None,
        tangent_pairing: None,
    };
    if d > 1e-10 * norm_u {
        let w = e.scaled(1.0 / d);
        let (st, pairing) = first_order_conditions(&w, params, grid, lambda)?;
        out.stationarity = Some(st);
        out.tangent_pairing = Some(pairing);
        out.w = Some(w);
    }
    Ok(out)
}

/// Gradient of `||u - c U_lambda||^p / p` in `(c, ln lambda)`, up to sign
/// and the factor `c` in the second slot.
fn gradient(u: &RadialFunction, params: &CknParams, grid: &RadialGrid, c: f64, lambda: f64) -> Result<[f64; 2]> {
    let p = params.p();
    let ex = params.alpha() + params.dim() - 1.0;
    let ul = ExtremalProfile::new(*params, 1.0, lambda)?;
    let mp = params.m() / p;
    let e = |r: f64| {
        let v = u.derivative(r) - c * ul.derivative(r);
        v.signum() * v.abs().powf(p - 1.0)
    };
    let int = |f: &dyn Fn(f64) -> f64| -> Result<f64> { Ok(grid.integrate_fn(|r| r.powf(ex) * f(r), TailRates::default())?.value) };
    Ok([
        int(&|r| e(r) * ul.derivative(r))?,
        int(&|r| e(r) * ((mp + 1.0) * ul.derivative(r) + r * ul.second_derivative(r)))?,
    ])
}

/// Newton step `(dc, d ln lambda)` toward a zero of [`gradient`], with a
/// central-difference Jacobian.
fn newton_step(u: &RadialFunction, params: &CknParams, grid: &RadialGrid, c: f64, lambda: f64) -> Result<[f64; 2]> {
    let g = gradient(u, params, grid, c, lambda)?;
    let hc = 1e-5 * c.abs().max(1e-3);
    let hl: f64 = 1e-5;
    let gcp = gradient(u, params, grid, c + hc, lambda)?;
    let gcm = gradient(u, params, grid, c - hc, lambda)?;
    let glp = gradient(u, params, grid, c, lambda * hl.exp())?;
    let glm = gradient(u, params, grid, c, lambda * (-hl).exp())?;
    let j = [
        [(gcp[0] - gcm[0]) / (2.0 * hc), (glp[0] - glm[0]) / (2.0 * hl)],
        [(gcp[1] - gcm[1]) / (2.0 * hc), (glp[1] - glm[1]) / (2.0 * hl)],
    ];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if !(det.abs() > 0.0) || !det.is_finite() {
        return Err(Error::SolverFailure("singular Jacobian in projection polish".into()));
    }
    Ok([-(g[0] * j[1][1] - g[1] * j[0][1]) / det, -(j[0][0] * g[1] - j[1][0] * g[0]) / det])
}

fn first_order_conditions(w: &RadialFunction, params: &CknParams, grid: &RadialGrid, lambda: f64) -> Result<([f64; 2], f64)> {
    let p = params.p();
    let ex = params.alpha() + params.dim() - 1.0;
    let ul = ExtremalProfile::new(*params, 1.0, lambda)?;
    let mp = params.m() / p;
    // derivative of lambda d/dlambda U_lambda = (m/p) U + r U'
    let gen = |r: f64| (mp + 1.0) * ul.derivative(r) + r * ul.second_derivative(r);
    let pow = |v: f64, e: f64| v.signum() * v.abs().powf(e);
    let int = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        Ok(grid.integrate_fn(|r| r.powf(ex) * f(r), TailRates::default())?.value * surface_area(params.dim()))
    };
    let norm_u = int(&|r| ul.derivative(r).abs().powf(p))?.powf(1.0 / p);
    let norm_g = int(&|r| gen(r).abs().powf(p))?.powf(1.0 / p);
    let s_c = int(&|r| pow(w.derivative(r), p - 1.0) * ul.derivative(r))? / norm_u;
    let s_l = int(&|r| pow(w.derivative(r), p - 1.0) * gen(r))? / norm_g;
    let pairing = int(&|r| pow(ul.derivative(r), p - 1.0) * w.derivative(r))? / norm_u.powf(p - 1.0);
    Ok(([s_c, s_l], pairing))
}
