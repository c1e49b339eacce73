//! The closed-form sharp constant against the Rayleigh quotient of the
//! extremal computed by quadrature.

use ckn_lab::closed_forms::{hardy_constant, sharp_constant};
use ckn_lab::quadrature::rayleigh_quotient;
use ckn_lab::{CknParams, ExtremalProfile, RadialGrid};

fn main() -> ckn_lab::Result<()> {
    let grid = RadialGrid::default_grid();
    for (n, p, a, b) in [(3, 2.0, 0.0, 0.0), (3, 1.5, 0.5, 0.1), (4, 2.5, 0.3, 0.5), (5, 3.0, 0.0, 1.0)] {
        let params = CknParams::new(n, p, a, b)?;
        let s = sharp_constant(&params);
        let u = ExtremalProfile::unit(params).to_radial_function();
        let q = rayleigh_quotient(&u, &params, &grid)?;
        println!(
            "N={n} p={p} alpha={a} beta={b}: S = {:.12e}, quadrature = {q:.12e}, rel diff = {:.1e}, hardy = {:.4}",
            s.value,
            (q - s.value).abs() / s.value,
            hardy_constant(n, p, a)?
        );
    }
    Ok(())
}
