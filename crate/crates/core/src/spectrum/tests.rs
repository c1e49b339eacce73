use proptest::prelude::*;

use super::*;
use crate::closed_forms::EigenfunctionW;

fn params(n: u32, p: f64, a: f64, b: f64) -> CknParams {
    CknParams::new(n, p, a, b).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn default_grid() -> RadialGrid {
    SpectrumOptions::default().grid().unwrap()
}

fn lowest(pr: &CknParams, k: u32, n: usize) -> Vec<EigenPair> {
    eigen_solve(&assemble_mode(pr, k, &default_grid()).unwrap(), n).unwrap()
}

fn tuples() -> Vec<CknParams> {
    vec![
        params(3, 2.0, 0.0, 0.0),
        params(4, 2.0, 0.0, 2.0),
        params(3, 1.5, 0.5, 0.1),
        params(5, 3.0, 0.0, 1.0),
        params(4, 2.5, 0.3, 0.5),
    ]
}

#[test]
fn classical_radial_mode() {
    let e = lowest(&params(3, 2.0, 0.0, 0.0), 0, 2);
    assert!(rel(e[0].mu, 1.0) < 1e-3, "{}", e[0].mu);
    assert!(rel(e[1].mu, 5.0) < 1e-3, "{}", e[1].mu);
    assert!(e.iter().all(|x| x.residual < 1e-10));
}

#[test]
fn degenerate_modes_hit_threshold() {
    let e = lowest(&params(3, 2.0, 0.0, 0.0), 1, 1);
    assert!(rel(e[0].mu, 5.0) < 1e-3);
    let e = lowest(&params(4, 2.0, 0.0, 2.0), 2, 1);
    assert!(rel(e[0].mu, 5.0) < 1e-3);
}

#[test]
fn residuals_below_solver_tolerance() {
    for pr in tuples() {
        for k in 0..3 {
            for e in lowest(&pr, k, 3) {
                assert!(e.residual < 1e-10, "{pr:?} k={k}: mu {} residual {}", e.mu, e.residual);
                assert!(e.backward_error < 1e-12, "{pr:?} k={k}: {}", e.backward_error);
            }
        }
    }
}

#[test]
fn closed_forms_satisfy_pencil() {
    for pr in tuples() {
        let grid = default_grid();
        let th = pr.derived().p_star - 1.0;
        let pb = assemble_mode(&pr, 0, &grid).unwrap();
        let u = pb.sample(|s| closed::extremal(&pr, s));
        let w = pb.sample(|s| closed::eta0(&pr, s));
        assert!(pb.residual_of(&u, pr.p() - 1.0, 1e-6, 1e4) < 1e-3 * (pr.p() - 1.0), "{pr:?}");
        assert!(pb.residual_of(&w, th, 1e-6, 1e4) < 1e-3 * th, "{pr:?}");
        if let Some(k) = classify_degeneracy(&pr, DEFAULT_INT_TOL).unwrap().k {
            let pk = assemble_mode(&pr, k, &grid).unwrap();
            let v = pk.sample(|s| closed::eta1(&pr, s));
            assert!(pk.residual_of(&v, th, 1e-6, 1e4) < 1e-3 * th, "{pr:?}");
        }
    }
}

#[test]
fn eigenvectors_match_closed_forms() {
    for pr in tuples() {
        let grid = default_grid();
        let pb = assemble_mode(&pr, 0, &grid).unwrap();
        let e = eigen_solve(&pb, 2).unwrap();
        let u = pb.sample(|s| closed::extremal(&pr, s));
        let w = pb.sample(|s| closed::eta0(&pr, s));
        assert!(pb.cosine_similarity(&e[0].eta, &u) > 0.999, "{pr:?}");
        assert!(pb.cosine_similarity(&e[1].eta, &w) > 0.999, "{pr:?}");
        if let Some(k) = classify_degeneracy(&pr, DEFAULT_INT_TOL).unwrap().k {
            let pk = assemble_mode(&pr, k, &grid).unwrap();
            let e = eigen_solve(&pk, 1).unwrap();
            let v = pk.sample(|s| closed::eta1(&pr, s));
            assert!(pk.cosine_similarity(&e[0].eta, &v) > 0.999, "{pr:?}");
        }
    }
}

#[test]
fn eigenvectors_are_b_orthonormal() {
    let pr = params(4, 2.5, 0.3, 0.5);
    let pb = assemble_mode(&pr, 1, &default_grid()).unwrap();
    let e = eigen_solve(&pb, 4).unwrap();
    for (i, a) in e.iter().enumerate() {
        for (j, b) in e.iter().enumerate() {
            let ip = pb.b_inner(&a.eta, &b.eta);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((ip - want).abs() < 1e-8, "({i},{j}) {ip}");
        }
    }
    // discrete Rayleigh quotient of an eigenvector is its eigenvalue
    assert!(rel(pb.rayleigh(&e[2].eta), e[2].mu) < 1e-12);
}

#[test]
fn second_order_refinement() {
    for pr in [params(3, 2.0, 0.0, 0.0), params(3, 1.5, 0.5, 0.1), params(4, 2.5, 0.3, 0.5)] {
        let g1 = default_grid();
        let g2 = refined(&g1).unwrap();
        let g3 = refined(&g2).unwrap();
        for k in 0..2 {
            let mus: Vec<Vec<f64>> = [&g1, &g2, &g3]
                .iter()
                .map(|g| eigen_solve(&assemble_mode(&pr, k, g).unwrap(), 3).unwrap().iter().map(|e| e.mu).collect())
                .collect();
            for j in 0..3 {
                let ratio = (mus[0][j] - mus[1][j]) / (mus[1][j] - mus[2][j]);
                assert!((3.5..4.5).contains(&ratio), "{pr:?} k={k} j={j}: {ratio}");
            }
        }
    }
}

#[test]
fn outer_truncation_is_small() {
    // doubling s_max barely moves the low eigenvalues
    for pr in tuples() {
        let a = lowest(&pr, 0, 2);
        let wide = mode_grid(DEFAULT_S_MIN, 2.0 * DEFAULT_S_MAX, DEFAULT_SPECTRUM_N).unwrap();
        let b = eigen_solve(&assemble_mode(&pr, 0, &wide).unwrap(), 2).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(rel(x.mu, y.mu) < 1e-3, "{pr:?}");
        }
    }
}

#[test]
fn threshold_in_mode_iff_degenerate() {
    for pr in tuples() {
        let th = pr.derived().p_star - 1.0;
        let e0 = lowest(&pr, 0, 2);
        assert!(rel(e0[0].mu, pr.p() - 1.0) < 1e-3 && rel(e0[1].mu, th) < 1e-3);
        let dk = classify_degeneracy(&pr, DEFAULT_INT_TOL).unwrap().k;
        for k in 1..4 {
            let hit = lowest(&pr, k, 3).iter().any(|e| rel(e.mu, th) < 1e-3);
            assert_eq!(hit, dk == Some(k), "{pr:?} k={k}");
        }
    }
}

#[test]
fn threshold_multiplicity_counts() {
    let opts = SpectrumOptions::default();
    // degenerate at k = 1: 1 + M_1 = 1 + 3
    let t = full_spectrum(&params(3, 2.0, 0.0, 0.0), 3, &opts).unwrap();
    assert_eq!(t.count_tagged(Tag::Threshold), 4);
    assert_eq!(t.count_tagged(Tag::TrivialScaling), 1);
    // degenerate at k = 2 in dimension 4: M_2 = 9
    let t = full_spectrum(&params(4, 2.0, 0.0, 2.0), 3, &opts).unwrap();
    assert_eq!(t.count_tagged(Tag::Threshold), 10);
    let t = full_spectrum(&params(4, 2.5, 0.3, 0.5), 3, &opts).unwrap();
    assert_eq!(t.count_tagged(Tag::Threshold), 1);
    assert_eq!(t.count_tagged(Tag::TrivialScaling), 1);
    for k in 0..=3 {
        let mus: Vec<f64> = t.mode(k).map(|r| r.mu).collect();
        assert!(mus.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn table_formats() {
    let t = full_spectrum(&params(3, 2.0, 0.0, 0.0), 1, &SpectrumOptions { n_eigs: 2, ..Default::default() }).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,index,mu,lambda_k,multiplicity,tag");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,0,") && lines[1].ends_with(",1,trivial-scaling"));
    assert!(lines[3].starts_with("1,0,") && lines[3].ends_with(",3,threshold"));
    let json = serde_json::to_value(&t).unwrap();
    assert_eq!(json["rows"][1]["tag"], "threshold");
    assert_eq!(json["rows"][2]["lambda_k"], 2.0);
}

#[test]
fn gap_is_positive() {
    let g = spectral_gap(&params(3, 2.0, 0.0, 0.0), 3, &SpectrumOptions::default()).unwrap();
    assert!(g.tau > 0.0);
    // classical next eigenvalue: 35/3 in modes k = 0 and k = 2
    assert!(rel(g.mu_next, 35.0 / 3.0) < 1e-6, "{g:?}");
    let g = spectral_gap(&params(4, 2.0, 0.0, 2.0), 3, &SpectrumOptions::default()).unwrap();
    assert!(g.tau > 0.0 && g.mu_next > 5.0);
}

/// `beta` with `k_real = target` for `N = 4, p = 2, alpha = 0`, by bisection.
fn beta_for_k_real(target: f64) -> f64 {
    let k_real = |b: f64| classify_degeneracy(&params(4, 2.0, 0.0, b), DEFAULT_INT_TOL).unwrap().k_real;
    let (mut lo, mut hi) = (1.0, 3.0);
    let increasing = k_real(hi) > k_real(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (k_real(mid) < target) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn near_degenerate_gap_shrinks() {
    let opts = SpectrumOptions { tol: 1e-5, ..Default::default() };
    let taus: Vec<f64> = [1e-2, 3e-3, 1e-3]
        .iter()
        .map(|d| spectral_gap(&params(4, 2.0, 0.0, beta_for_k_real(2.0 - d)), 3, &opts).unwrap().tau)
        .collect();
    assert!(taus.iter().all(|&t| t > 0.0), "{taus:?}");
    assert!(taus.windows(2).all(|w| w[1] < w[0]), "{taus:?}");
    assert!(taus[2] < 1e-2);
    // at the default tolerance the last gap is not resolvable
    let err = spectral_gap(&params(4, 2.0, 0.0, beta_for_k_real(2.0 - 1e-3)), 3, &SpectrumOptions::default());
    assert!(matches!(err, Err(Error::GapNotResolved { .. })), "{err:?}");
}

#[test]
fn rayleigh_form_of_closed_forms() {
    let grid = RadialGrid::default();
    for pr in tuples() {
        let th = pr.derived().p_star - 1.0;
        let u = ExtremalProfile::unit(pr).to_radial_function();
        let w = EigenfunctionW::w0(pr).to_radial_function();
        assert!(rel(rayleigh_form(&u, 0, &pr, &grid).unwrap(), pr.p() - 1.0) < 1e-8);
        assert!(rel(rayleigh_form(&w, 0, &pr, &grid).unwrap(), th) < 1e-4);
        let mix = rayleigh_form(&u.combine(1.0, &w, 1.0), 0, &pr, &grid).unwrap();
        assert!(mix > pr.p() - 1.0 && mix < th, "{pr:?}: {mix}");
    }
}

#[test]
fn rayleigh_form_matches_extrapolated_eigenvalues() {
    // fast radial decay, so the outer truncation is below the extrapolated
    // discretization error
    let rgrid = RadialGrid::default();
    for pr in [params(3, 1.5, 0.5, 0.1), params(5, 2.0, 0.5, 0.0), params(4, 1.8, 0.3, 0.2)] {
        let grid = default_grid();
        let pb = assemble_mode(&pr, 0, &grid).unwrap();
        let e = eigen_solve(&pb, 3).unwrap();
        let ex = extrapolated_eigenvalues(&pr, 0, &grid, 3).unwrap();
        for (pair, mu) in e.iter().zip(&ex) {
            let v = pair.to_radial_function(&pb).unwrap();
            let rf = rayleigh_form(&v, 0, &pr, &rgrid).unwrap();
            assert!(rel(rf, *mu) < 1e-6, "{pr:?}: {rf} vs {mu}");
        }
    }
}

#[test]
fn large_k_needs_finer_grid() {
    let pr = params(4, 1.45, 1.126, 0.0);
    assert!(pr.derived().k_dim > 17.0);
    let fine = mode_grid(DEFAULT_S_MIN, DEFAULT_S_MAX, 4 * DEFAULT_SPECTRUM_N).unwrap();
    let e = eigen_solve(&assemble_mode(&pr, 0, &fine).unwrap(), 2).unwrap();
    assert!(rel(e[0].mu, pr.p() - 1.0) < 1e-3, "{}", e[0].mu);
    assert!(rel(e[1].mu, pr.derived().p_star - 1.0) < 1e-3, "{}", e[1].mu);
}

#[test]
fn classification_tags() {
    let pr = params(3, 2.0, 0.0, 0.0);
    assert_eq!(classify_eigenvalue(1.0005, &pr, 1e-3), Tag::TrivialScaling);
    assert_eq!(classify_eigenvalue(5.004, &pr, 1e-3), Tag::Threshold);
    assert_eq!(classify_eigenvalue(6.0, &pr, 1e-3), Tag::AboveGap);
    assert_eq!(classify_eigenvalue(3.0, &pr, 1e-3), Tag::BelowThreshold);
}

#[test]
fn small_grid_rejected() {
    let pr = params(3, 2.0, 0.0, 0.0);
    let pb = assemble_mode(&pr, 0, &mode_grid(1e-3, 1e3, 101).unwrap()).unwrap();
    assert!(matches!(eigen_solve(&pb, 2), Err(Error::InvalidGrid(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn spectral_identity_holds(n in 3u32..8, pf in 0.05f64..0.95, af in 0.05f64..0.95, beta in -0.5f64..2.0) {
        let p = 1.0 + pf * (f64::from(n) - 1.0);
        let lower = (p - f64::from(n)).max(-1.5);
        let upper = p + beta;
        prop_assume!(upper > lower + 0.1);
        let alpha = lower + af * (upper - lower);
        let pr = params(n, p, alpha, beta);
        let (lhs, rhs) = spectral_identity(&pr);
        prop_assert!(rel(lhs, rhs) < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn radial_mode_contains_both_eigenvalues(n in 3u32..7, pf in 0.05f64..0.95, af in 0.05f64..0.95, beta in -0.5f64..2.0) {
        let p = 1.0 + pf * (f64::from(n) - 1.0);
        let (lower, upper) = (p - f64::from(n), p + beta);
        prop_assume!(upper > lower + 0.1);
        let alpha = lower + af * (upper - lower);
        let pr = params(n, p, alpha, beta);
        let grid = SpectrumOptions::default().adapted(&pr).grid().unwrap();
        let e = eigen_solve(&assemble_mode(&pr, 0, &grid).unwrap(), 2).unwrap();
        prop_assert!(rel(e[0].mu, p - 1.0) < 1e-3, "{:?}: {}", pr, e[0].mu);
        prop_assert!(rel(e[1].mu, pr.derived().p_star - 1.0) < 1e-3, "{:?}: {}", pr, e[1].mu);
    }
}

#[test]
fn strongly_graded_pencil() {
    // p close to 1: the symmetrized matrix reaches 1e70 near s_min while the
    // eigenvalues are O(1)
    let pr = params(3, 1.1, -1.75, 0.0);
    let grid = SpectrumOptions::default().adapted(&pr).grid().unwrap();
    let e = eigen_solve(&assemble_mode(&pr, 0, &grid).unwrap(), 2).unwrap();
    assert!(rel(e[0].mu, 0.1) < 1e-3, "{}", e[0].mu);
    assert!(rel(e[1].mu, pr.derived().p_star - 1.0) < 1e-3, "{}", e[1].mu);
    for x in &e {
        assert!(x.backward_error < 1e-12, "{}", x.backward_error);
    }
    let pb = assemble_mode(&pr, 0, &grid).unwrap();
    let u = pb.sample(|s| closed::extremal(&pr, s));
    let w = pb.sample(|s| closed::eta0(&pr, s));
    assert!(pb.cosine_similarity(&e[0].eta, &u) > 0.999);
    assert!(pb.cosine_similarity(&e[1].eta, &w) > 0.999);
}

