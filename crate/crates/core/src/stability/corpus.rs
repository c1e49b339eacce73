//! Seeded test functions with power-law behaviour at 0 and infinity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bump;
use crate::closed_forms::{EigenfunctionW, ExtremalProfile};
use crate::params::CknParams;
use crate::profile::RadialFunction;

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub f: RadialFunction,
}

/// `(1 + (r/a)^b)^(-d/b)`: flat like `r^b` at the origin, `r^(-d)` at infinity.
fn rational(a: f64, b: f64, d: f64) -> RadialFunction {
    RadialFunction::new(move |r| (-(d / b) * (r / a).powf(b).ln_1p()).exp())
        .with_derivative(move |r| {
            let y = (r / a).powf(b);
            -d / r * y / (1.0 + y) * (-(d / b) * y.ln_1p()).exp()
        })
        .with_decay_hint(d)
        .with_origin_hint(b)
}

/// `count` functions cycling through rational profiles, bumps, dilated
/// extremals, dilated `W_0` and rational-plus-bump mixtures. Rational decay
/// rates lie between `m/(p-1)` (that of `U`) and twice that, so every entry
/// has finite gradient, `L^(p*)` and `L^2_*` norms.
pub fn corpus(params: &CknParams, count: usize, seed: u64) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_decay = params.m() / (params.p() - 1.0);
    let mp = params.m() / params.p();
    (0..count)
        .map(|i| {
            let a = 10f64.powf(rng.random_range(-0.5..0.5));
            let b = rng.random_range(1.5..3.0);
            let d = base_decay * rng.random_range(1.0..2.0);
            let amp = rng.random_range(0.5..2.0);
            let (name, f) = match i % 5 {
                0 => (format!("rational(a={a:.3},b={b:.3},d={d:.3})"), rational(a, b, d).scaled(amp)),
                1 => (format!("bump({a:.3},{:.3})", 2.0 * a), bump(a, 2.0 * a).scaled(amp * 50.0)),
                2 => (format!("extremal(lambda={a:.3})"), ExtremalProfile::new(*params, amp, a).expect("valid scale").to_radial_function()),
                3 => (format!("w0(lambda={a:.3})"), EigenfunctionW::w0(*params).to_radial_function().dilated(a, mp).scaled(amp)),
                _ => (
                    format!("rational+bump(a={a:.3},b={b:.3},d={d:.3})"),
                    rational(a, b, d).combine(amp, &bump(a, 2.0 * a), 20.0),
                ),
            };
            CorpusEntry { name, f }
        })
        .collect()
}
