//! The invariant suite behind `ckn-lab verify`.

use serde::Serialize;

use crate::closed_forms::{ln_cp_talenti_form, ln_cp_gamma_form, sharp_constant, ExtremalProfile};
use crate::error::Result;
use crate::params::{classify_degeneracy, CknParams, DEFAULT_INT_TOL};
use crate::quadrature::{grad_norm_p, pde_residual, rayleigh_quotient, transform_to_s, transformed_grad_norm_p, RadialGrid};
use crate::spectrum::{assemble_mode, closed, eigen_solve, full_spectrum, SpectrumOptions, Tag};
use crate::stability::{
    bracket_minimum, corpus, deficit, empirical_c1, empirical_c2, empirical_fz_constant, log_space,
    project_to_manifold, quotient_scan, Family, ProjectionOptions,
};

pub const INEQUALITY_SAMPLES: usize = 10_000;
const KAPPA: f64 = 0.1;
/// Bumps put a kink into `|u'|^p` at their peak when `p < 2`, which limits
/// the quadrature order; a fine step keeps the identity check at `1e-8`.
pub const TRANSFORM_GRID_N: usize = 1_000_001;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The measured quantity the tolerance applies to.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `value < tol`; NaN fails.
fn below(name: &str, value: f64, tol: f64, detail: String) -> Check {
    Check { name: name.into(), passed: value < tol, value, tolerance: tol, detail }
}

/// Runs one check, turning an error into a failed entry.
fn guarded(name: &str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check { name: name.into(), passed: false, value: f64::NAN, tolerance: f64::NAN, detail: e.to_string() })
}

/// Upper end of the residual window: beyond `r ~ (eps_mach)^(-1/q)` the
/// residual is dominated by cancellation, not by the profile.
fn residual_r_max(params: &CknParams) -> f64 {
    1e4f64.min(4.5e8f64.powf(1.0 / params.q()))
}

pub fn verify_suite(params: &CknParams, seed: u64) -> Result<VerifyReport> {
    let grid = RadialGrid::default_grid();
    let u1 = ExtremalProfile::unit(*params).to_radial_function();
    let d = params.derived();
    let p = params.p();
    let mut checks = Vec::new();

    let pstar_from_k = p * d.k_dim / (d.k_dim - p);
    checks.push(below("derived_exponents", rel(pstar_from_k, d.p_star), 1e-12, format!("p* = {}, K = {}, t = {}", d.p_star, d.k_dim, d.t)));

    let (a, b) = (ln_cp_gamma_form(d.k_dim, p), ln_cp_talenti_form(d.k_dim, p));
    checks.push(below("cp_dual_form", rel(a.exp(), b.exp()), 1e-12, format!("ln C_p(K) = {a}")));

    checks.push(guarded("sharp_constant", || {
        let s = sharp_constant(params).value;
        let q = rayleigh_quotient(&u1, params, &grid)?;
        Ok(below("sharp_constant", rel(q, s), 1e-6, format!("closed form {s:e}, quadrature {q:e}")))
    }));

    checks.push(guarded("pde_residual", || {
        let hi = residual_r_max(params);
        let rs = log_space(1e-4, hi, 100)?;
        let sup = pde_residual(&u1, params, &rs)?.into_iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(below("pde_residual", sup, 1e-6, format!("sup over [1e-4, {hi:.3e}]")))
    }));

    checks.push(guarded("transform_identity", || {
        let mut worst = rel(
            transformed_grad_norm_p(&transform_to_s(&u1, params), params, &grid)?.value,
            grad_norm_p(&u1, params, &grid)?.value,
        );
        let fine = RadialGrid::log_uniform(1e-6, 1e6, TRANSFORM_GRID_N)?;
        for e in corpus(params, 5, seed) {
            let lhs = grad_norm_p(&e.f, params, &fine)?.value;
            let rhs = transformed_grad_norm_p(&transform_to_s(&e.f, params), params, &fine)?.value;
            worst = worst.max(rel(rhs, lhs));
        }
        Ok(below("transform_identity", worst, 1e-8, "U_1 and 5 corpus functions".into()))
    }));

    checks.push(guarded("eigenpair_recovery", || {
        let opts = SpectrumOptions::default().adapted(params);
        let pb = assemble_mode(params, 0, &opts.grid()?)?;
        let e = eigen_solve(&pb, 2)?;
        let err = rel(e[0].mu, p - 1.0).max(rel(e[1].mu, d.p_star - 1.0));
        let u = pb.sample(|s| closed::extremal(params, s));
        let w = pb.sample(|s| closed::eta0(params, s));
        let cos = pb.cosine_similarity(&e[0].eta, &u).min(pb.cosine_similarity(&e[1].eta, &w));
        let mut c = below("eigenpair_recovery", err, 1e-3, format!("mu = {}, {}; min cosine {cos:.6}", e[0].mu, e[1].mu));
        c.passed &= cos > 0.999;
        Ok(c)
    }));

    checks.push(guarded("threshold_multiplicity", || {
        let report = classify_degeneracy(params, DEFAULT_INT_TOL)?;
        let k_max = report.k.unwrap_or(1).max(1);
        let opts = SpectrumOptions { n_eigs: 2, ..SpectrumOptions::default() }.adapted(params);
        let table = full_spectrum(params, k_max, &opts)?;
        let found = table.count_tagged(Tag::Threshold);
        let expected = report.eigenspace_dim;
        Ok(Check {
            name: "threshold_multiplicity".into(),
            passed: found == expected,
            value: found as f64,
            tolerance: 0.0,
            detail: format!("expected {expected} over modes 0..={k_max}"),
        })
    }));

    checks.push(guarded("gradient_inequality", || {
        let c1 = empirical_c1(p, KAPPA, 3, INEQUALITY_SAMPLES, seed)?;
        Ok(Check {
            name: "gradient_inequality".into(),
            passed: c1.violations == 0 && c1.value.is_finite(),
            value: c1.value,
            tolerance: 0.0,
            detail: format!("empirical C1 over {} samples, kappa = {KAPPA}", c1.samples),
        })
    }));

    let c2 = empirical_c2(params, KAPPA, INEQUALITY_SAMPLES, seed);
    checks.push(Check {
        name: "scalar_inequality".into(),
        passed: c2.value.is_finite(),
        value: c2.value,
        tolerance: 0.0,
        detail: format!("empirical C2 over {} samples ({} needed C2 > 0)", c2.samples, c2.violations),
    });

    if p < 2.0 {
        checks.push(guarded("bracket_nonnegative", || {
            let m = bracket_minimum(p, 3, INEQUALITY_SAMPLES, seed)?;
            Ok(Check { name: "bracket_nonnegative".into(), passed: m.violations == 0 && m.value >= 0.0, value: m.value, tolerance: 0.0, detail: "sample minimum".into() })
        }));
        checks.push(guarded("cp_lower_bound", || {
            let m = empirical_fz_constant(p, 3, INEQUALITY_SAMPLES, seed)?;
            Ok(Check { name: "cp_lower_bound".into(), passed: m.violations == 0 && m.value > 0.0, value: m.value, tolerance: 0.0, detail: "sample infimum of c(p)".into() })
        }));
    }

    checks.push(guarded("deficit_on_manifold", || {
        let u = ExtremalProfile::new(*params, 1.7, 0.6)?.to_radial_function();
        let r = deficit(&u, params, &grid)?;
        Ok(below("deficit_on_manifold", (r.deficit / r.norm_p).abs(), 1e-6, format!("deficit {:e}", r.deficit)))
    }));

    checks.push(guarded("deficit_off_manifold", || {
        let mut worst = f64::INFINITY;
        for e in corpus(params, 10, seed) {
            let r = deficit(&e.f, params, &grid)?;
            worst = worst.min(r.deficit / r.norm_p);
        }
        Ok(Check { name: "deficit_off_manifold".into(), passed: worst > -1e-6, value: worst, tolerance: -1e-6, detail: "smallest relative deficit over 10 corpus functions".into() })
    }));

    checks.push(guarded("projection", || {
        let u = ExtremalProfile::new(*params, 3.0, 2.0)?.to_radial_function();
        let pr = project_to_manifold(&u, params, &grid, &ProjectionOptions::default())?;
        let err = rel(pr.c, 3.0).max(rel(pr.lambda, 2.0));
        Ok(below("projection", err, 1e-5, format!("c = {}, lambda = {}, d = {:e}", pr.c, pr.lambda, pr.d)))
    }));

    checks.push(guarded("stability_quotient", || {
        let scan = quotient_scan(params, Family::Bump, &log_space(1e-3, 0.5, 5)?, &grid, &ProjectionOptions::default())?;
        Ok(Check {
            name: "stability_quotient".into(),
            passed: scan.aborted.is_none() && scan.empirical_b > 0.0,
            value: scan.empirical_b,
            tolerance: 0.0,
            detail: "empirical B over 5 bump perturbations".into(),
        })
    }));

    Ok(VerifyReport { passed: checks.iter().all(|c| c.passed), checks })
}
