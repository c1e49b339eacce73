//! Weighted norms on a log grid, and the change of variables `s = r^(1/t)`
//! that turns the weighted radial problem into an unweighted one in
//! fractional dimension `K`.

use ckn_lab::quadrature::{grad_norm_p, lp_star_norm, pde_residual, transform_to_s, transformed_grad_norm_p};
use ckn_lab::{CknParams, ExtremalProfile, RadialGrid};

fn main() -> ckn_lab::Result<()> {
    let params = CknParams::new(4, 2.0, 0.0, 2.0)?;
    let d = params.derived();
    println!("p* = {}, t = {}, K = {}", d.p_star, d.t, d.k_dim);

    let grid = RadialGrid::default_grid();
    let u = ExtremalProfile::unit(params).to_radial_function();
    let lhs = grad_norm_p(&u, &params, &grid)?;
    let rhs = transformed_grad_norm_p(&transform_to_s(&u, &params), &params, &grid)?;
    println!("||u||^p          = {:.15e} (error estimate {:.1e})", lhs.value, lhs.error_estimate);
    println!("transformed form = {:.15e}", rhs.value);
    println!("||u||_*          = {:.15e}", lp_star_norm(&u, &params, &grid)?.value);

    let radii = [1e-3, 0.1, 1.0, 10.0, 1e3];
    let res = pde_residual(&u, &params, &radii)?;
    for (r, e) in radii.iter().zip(res) {
        println!("residual at r = {r:e}: {e:.2e}");
    }
    Ok(())
}
