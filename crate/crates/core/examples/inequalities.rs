//! Sampled constants for the pointwise inequalities used in the stability
//! estimates. Each is a sample extremum, not a proven bound.

use ckn_lab::stability::{bracket_minimum, check_gradient_inequality, empirical_c1, empirical_c2, empirical_fz_constant};
use ckn_lab::CknParams;

fn main() -> ckn_lab::Result<()> {
    let (samples, seed, kappa) = (100_000, 42, 0.1);
    for p in [1.5, 2.5, 3.0] {
        let c1 = empirical_c1(p, kappa, 3, samples, seed)?;
        println!("p = {p}: C1 = {:.4e} ({} violations in {} samples)", c1.value, c1.violations, c1.samples);
    }
    for (n, p, a, b) in [(3, 1.5, 0.0, 0.0), (3, 2.5, 0.2, 0.4)] {
        let params = CknParams::new(n, p, a, b)?;
        let c2 = empirical_c2(&params, kappa, samples, seed);
        println!("p* = {:.3}: C2 = {:.4e}", params.derived().p_star, c2.value);
    }
    let p = 1.5;
    println!("p = {p}: bracket minimum {:.4e}", bracket_minimum(p, 3, samples, seed)?.value);
    println!("p = {p}: c(p) infimum {:.4e}", empirical_fz_constant(p, 3, samples, seed)?.value);

    let check = check_gradient_inequality(&[1.0, 0.0, 0.0], &[0.3, -0.2, 0.1], 2.5, kappa, 0.0)?;
    println!("single pair at p = 2.5: lhs {:.6} rhs {:.6} holds {}", check.lhs, check.rhs, check.holds);
    Ok(())
}
