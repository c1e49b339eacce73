//! Degeneracy of the linearized operator across a few parameter tuples.
//!
//! ```text
//! cargo run --example classify
//! ```

use ckn_lab::params::{classify_degeneracy, DEFAULT_INT_TOL};
use ckn_lab::CknParams;

fn main() -> ckn_lab::Result<()> {
    let tuples = [(3, 2.0, 0.0, 0.0), (4, 2.0, 0.0, 2.0), (5, 3.0, 0.0, 1.0), (3, 2.5, 0.2, 0.4)];
    println!("{:>2} {:>4} {:>6} {:>6}  {:>10} {:>5} {:>4}", "N", "p", "alpha", "beta", "k_real", "k", "dim");
    for (n, p, a, b) in tuples {
        let params = CknParams::new(n, p, a, b)?;
        let r = classify_degeneracy(&params, DEFAULT_INT_TOL)?;
        let k = r.k.map_or("-".to_string(), |k| k.to_string());
        println!("{n:>2} {p:>4} {a:>6} {b:>6}  {:>10.6} {k:>5} {:>4}", r.k_real, r.eigenspace_dim);
    }

    // Parameters outside the admissible range are rejected up front.
    match CknParams::new(3, 2.0, 2.0, 0.0) {
        Err(e) => println!("\n(3, 2, 2, 0): {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
