//! Points on the Felli-Schneider curve, mapped to `(alpha, beta)`, are
//! degenerate at the matching mode.

use ckn_lab::params::{classify_degeneracy, felli_schneider, from_classical, CknClassicalParams, DEFAULT_INT_TOL};

fn main() -> ckn_lab::Result<()> {
    for n in [3, 4] {
        for a in [-0.5, -1.0, -2.0] {
            for k in [1, 2] {
                let b = felli_schneider(n, a, k)?;
                let params = from_classical(&CknClassicalParams::new(n, 2.0, a, b)?, n, 2.0)?;
                let r = classify_degeneracy(&params, DEFAULT_INT_TOL)?;
                println!(
                    "N={n} a={a:>4} k={k}: b = {b:.6}, alpha = {:.4}, beta = {:.4}, k_real = {:.12}",
                    params.alpha(),
                    params.beta(),
                    r.k_real
                );
            }
        }
    }
    Ok(())
}
