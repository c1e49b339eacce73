//! Distance to the manifold of extremals `{c U_lambda}`.

use ckn_lab::stability::{bump, project_to_manifold, ProjectionOptions};
use ckn_lab::{CknParams, ExtremalProfile, RadialGrid};

fn main() -> ckn_lab::Result<()> {
    let params = CknParams::new(3, 2.5, 0.2, 0.4)?;
    let grid = RadialGrid::default_grid();
    let opts = ProjectionOptions::default();

    let on = ExtremalProfile::new(params, 3.0, 2.0)?.to_radial_function();
    let pr = project_to_manifold(&on, &params, &grid, &opts)?;
    println!("3 U_2:           c = {:.9}, lambda = {:.9}, d = {:.2e}", pr.c, pr.lambda, pr.d);

    let off = on.combine(1.0, &bump(0.5, 1.5), 0.5);
    let pr = project_to_manifold(&off, &params, &grid, &opts)?;
    println!("3 U_2 + bump/2:  c = {:.6}, lambda = {:.6}, d = {:.6e}", pr.c, pr.lambda, pr.d);
    println!("local minima found: {}, non-unique: {}", pr.minima.len(), pr.non_unique);
    if let Some([a, b]) = pr.stationarity {
        println!("first-order conditions at the minimizer: {a:.1e}, {b:.1e}");
    }
    Ok(())
}
