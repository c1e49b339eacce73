//! The Orlicz-Poincare ratio on the corpus of test functions, for a tuple
//! with `p* <= 2`.

use ckn_lab::stability::{corpus, orlicz_poincare_ratio};
use ckn_lab::{CknParams, RadialGrid};

fn main() -> ckn_lab::Result<()> {
    let params = CknParams::new(4, 1.3, 0.0, 0.0)?;
    println!("p* = {:.4}", params.derived().p_star);
    let grid = RadialGrid::default_grid();
    let mut worst: f64 = 0.0;
    for entry in corpus(&params, 20, 42) {
        let ratio = orlicz_poincare_ratio(&entry.f, 0.1, &params, &grid)?;
        println!("{:<40} {ratio:.4e}", entry.name);
        worst = worst.max(ratio);
    }
    println!("largest ratio: {worst:.4e}");
    Ok(())
}
