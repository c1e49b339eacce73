//! The stability quotient `deficit / dist^e` along `U_1 + eps w` for each
//! perturbation family.

use ckn_lab::stability::{log_space, quotient_scan, Family, ProjectionOptions};
use ckn_lab::{CknParams, RadialGrid};

fn main() -> ckn_lab::Result<()> {
    let params = CknParams::new(3, 2.0, 0.0, 0.0)?;
    let grid = RadialGrid::default_grid();
    let eps = log_space(1e-3, 0.5, 12)?;
    for family in Family::ALL {
        let scan = quotient_scan(&params, family, &eps, &grid, &ProjectionOptions::default())?;
        let slope = scan.slope.map_or("n/a".to_string(), |s| format!("{s:.3}"));
        println!("{:>5}: empirical B = {:.4e}, deficit slope {slope}", family.as_str(), scan.empirical_b);
    }

    let scan = quotient_scan(&params, Family::Bump, &eps, &grid, &ProjectionOptions::default())?;
    println!();
    scan.write_csv(std::io::stdout())?;
    Ok(())
}
