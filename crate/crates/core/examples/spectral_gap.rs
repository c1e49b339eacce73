//! Spectral gap above the threshold and the quadratic lower bound it gives
//! for a small perturbation orthogonal to the tangent space.

use ckn_lab::spectrum::{spectral_gap, SpectrumOptions};
use ckn_lab::stability::{family_profile, spectral_gap_lhs_rhs, Family, GapCase};
use ckn_lab::{CknParams, RadialGrid};

fn main() -> ckn_lab::Result<()> {
    let grid = RadialGrid::default_grid();
    for (n, p, a, b) in [(3, 2.0, 0.0, 0.0), (5, 3.0, 0.0, 1.0), (4, 1.6, 0.2, 0.3)] {
        let params = CknParams::new(n, p, a, b)?;
        let gap = spectral_gap(&params, 3, &SpectrumOptions::default().adapted(&params))?;
        let v = family_profile(Family::Eig3, &params, &grid)?.scaled(1e-4);
        let c = spectral_gap_lhs_rhs(&v, &params, &grid, &GapCase::new(0.5 * gap.tau))?;
        println!(
            "N={n} p={p}: tau = {:.4} (next eigenvalue {:.4} in mode {}), {:?} branch, lhs {:.4e} >= rhs {:.4e}: {}",
            gap.tau, gap.mu_next, gap.k_next, c.branch, c.check.lhs, c.check.rhs, c.check.holds
        );
    }
    Ok(())
}
