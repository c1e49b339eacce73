//! Round trip of a sampled profile through the `r,u,du` CSV format, then
//! the deficit of the reconstructed function.

use ckn_lab::stability::{deficit_with_distance, ProjectionOptions};
use ckn_lab::{CknParams, ExtremalProfile, RadialGrid, RadialSamples};

fn main() -> ckn_lab::Result<()> {
    let params = CknParams::new(3, 2.0, 0.0, 0.0)?;
    let u = ExtremalProfile::unit(params).to_radial_function();
    let nodes = RadialGrid::log_uniform(1e-6, 1e6, 2001)?;

    let mut buf = Vec::new();
    u.sample(nodes.nodes()).write_csv(&mut buf)?;
    println!("{}", String::from_utf8_lossy(&buf).lines().take(3).collect::<Vec<_>>().join("\n"));

    let back = RadialSamples::read_csv(buf.as_slice())?.into_function();
    let (report, proj) = deficit_with_distance(&back, &params, &RadialGrid::default_grid(), &ProjectionOptions::default())?;
    println!("relative deficit {:.2e}, distance {:.2e}", report.deficit / report.norm_p, proj.d);
    Ok(())
}
