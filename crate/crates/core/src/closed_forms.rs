//! Closed-form extremals, sharp constants and linearized eigenfunctions.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{multiplicity, CknParams};
use crate::profile::RadialFunction;

/// `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln(1 + r^q)` without overflow for large `r`.
#[inline]
pub(crate) fn ln1p_pow(r: f64, q: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let x = q * r.ln();
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `r^q / (1 + r^q)`.
#[inline]
pub(crate) fn pow_ratio(r: f64, q: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let x = q * r.ln();
    if x > 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Surface area of the unit sphere in `R^N`, `2 pi^(N/2) / Gamma(N/2)`.
pub fn surface_area(n: f64) -> f64 {
    ln_surface_area(n).exp()
}

fn ln_surface_area(n: f64) -> f64 {
    2f64.ln() + 0.5 * n * PI.ln() - ln_gamma(0.5 * n)
}

/// Normalization `C_{N,alpha,beta} = U_1(0)`.
pub fn normalization(params: &CknParams) -> f64 {
    let (p, m) = (params.p(), params.m());
    let base = (params.dim() + params.beta()).ln() + (p - 1.0) * (m / (p - 1.0)).ln();
    (base * m / (p * params.gap())).exp()
}

/// The extremal `c U_lambda(r) = c lambda^(m/p) U_1(lambda r)` with
/// `U_1(r) = C (1 + r^q)^(-m/(p+beta-alpha))`, `m = N-p+alpha`,
/// `q = (p+beta-alpha)/(p-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremalProfile {
    pub params: CknParams,
    pub amplitude: f64,
    pub scale: f64,
    norm_const: f64,
}

impl ExtremalProfile {
    pub fn new(params: CknParams, amplitude: f64, scale: f64) -> Result<Self> {
        if !amplitude.is_finite() || amplitude == 0.0 {
            return Err(Error::NonFinite("amplitude must be finite and nonzero"));
        }
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::NonFinite("scale must be finite and positive"));
        }
        Ok(Self { params, amplitude, scale, norm_const: normalization(&params) })
    }

    /// `U_1`.
    pub fn unit(params: CknParams) -> Self {
        Self::new(params, 1.0, 1.0).expect("unit amplitude and scale are valid")
    }

    /// The `A`-parametrized family `A lambda^(m/p) / (1 + (lambda r)^q)^(m/(p+beta-alpha))`.
    pub fn from_w_amplitude(params: CknParams, a: f64, scale: f64) -> Result<Self> {
        Self::new(params, a / normalization(&params), scale)
    }

    /// `C_{N,alpha,beta}`.
    pub fn normalization(&self) -> f64 {
        self.norm_const
    }

    /// `c_{N,p} = C m/(p-1)`, the gradient prefactor.
    pub fn gradient_constant(&self) -> f64 {
        self.norm_const * self.params.m() / (self.params.p() - 1.0)
    }

    fn prefactor(&self) -> f64 {
        self.amplitude * self.scale.powf(self.params.m() / self.params.p())
    }

    fn unit_value(&self, r: f64) -> f64 {
        let e = self.params.m() / self.params.gap();
        self.norm_const * (-e * ln1p_pow(r, self.params.q())).exp()
    }

    fn unit_derivative(&self, r: f64) -> f64 {
        let q = self.params.q();
        let g = (self.params.dim() + self.params.beta()) / self.params.gap();
        let a = q - 1.0;
        if r == 0.0 {
            return -self.gradient_constant() * 0f64.powf(a);
        }
        -self.gradient_constant() * (a * r.ln() - g * ln1p_pow(r, q)).exp()
    }

    pub fn value(&self, r: f64) -> f64 {
        self.prefactor() * self.unit_value(self.scale * r)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.prefactor() * self.scale * self.unit_derivative(self.scale * r)
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        let q = self.params.q();
        let g = (self.params.dim() + self.params.beta()) / self.params.gap();
        let s = self.scale * r;
        let d1 = self.unit_derivative(s);
        let bracket = (q - 1.0) / s - g * q * pow_ratio(s, q) / s;
        self.prefactor() * self.scale * self.scale * d1 * bracket
    }

    /// `lambda d/dlambda (c U_lambda)(r) = c[(m/p) U_lambda + r U_lambda']`;
    /// at `lambda = 1` this is the derivative in the scale parameter.
    pub fn dilation_generator(&self, r: f64) -> f64 {
        let mp = self.params.m() / self.params.p();
        mp * self.value(r) + r * self.derivative(r)
    }

    pub fn decay_exponent(&self) -> f64 {
        self.params.m() / (self.params.p() - 1.0)
    }

    pub fn to_radial_function(&self) -> RadialFunction {
        let (a, b, c) = (*self, *self, *self);
        RadialFunction::new(move |r| a.value(r))
            .with_derivative(move |r| b.derivative(r))
            .with_second_derivative(move |r| c.second_derivative(r))
            .with_decay_hint(self.decay_exponent())
            .with_origin_hint(self.params.q())
    }
}

/// `U_lambda` written as a free function for one-off evaluation.
pub fn extremal_value(profile: &ExtremalProfile, r: f64) -> f64 {
    profile.value(r)
}

pub fn extremal_derivative(profile: &ExtremalProfile, r: f64) -> f64 {
    profile.derivative(r)
}

/// `d/dlambda (U_lambda)(r)` at `lambda = 1`, unit amplitude.
pub fn dilation_generator(params: &CknParams, r: f64) -> f64 {
    ExtremalProfile::unit(*params).dilation_generator(r)
}

/// `ln C_p(K)` written with Gamma functions only.
pub fn ln_cp_gamma_form(k: f64, p: f64) -> f64 {
    let gammas = ln_gamma(k / p) + ln_gamma(1.0 + k - k / p) - ln_gamma(k) - ln_gamma(1.0 + 0.5 * k)
        + ln_gamma(0.5 * k)
        - 2f64.ln();
    k.ln() + (p - 1.0) * ((k - p) / (p - 1.0)).ln() + (p / k) * gammas
}

/// `ln C_p(K)` in the form carrying the explicit `pi` powers: Talenti's
/// constant in dimension `K` divided by `omega_{K-1}^{p/K}`.
pub fn ln_cp_talenti_form(k: f64, p: f64) -> f64 {
    let talenti = 0.5 * p * PI.ln()
        + k.ln()
        + (p - 1.0) * ((k - p) / (p - 1.0)).ln()
        + (p / k) * (ln_gamma(k / p) + ln_gamma(1.0 + k - k / p) - ln_gamma(0.5 * k + 1.0) - ln_gamma(k));
    talenti + (p / k) * (ln_gamma(0.5 * k) - 2f64.ln() - 0.5 * k * PI.ln())
}

pub fn cp_of_k(k: f64, p: f64) -> f64 {
    ln_cp_gamma_form(k, p).exp()
}

/// The sharp radial constant with its building blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpConstant {
    pub value: f64,
    pub cp_of_k: f64,
    pub surface_area: f64,
}

impl SharpConstant {
    pub fn new(params: &CknParams) -> Self {
        let (n, p, alpha, beta) = (params.dim(), params.p(), params.alpha(), params.beta());
        let k = params.derived().k_dim;
        let gap = params.gap();
        let e1 = (p * n - p + (p - 1.0) * beta + alpha) / (n + beta);
        let ln_cp = ln_cp_gamma_form(k, p);
        let ln_s = e1 * (gap / p).ln() + (gap / (n + beta)) * ln_surface_area(n) + ln_cp;
        Self { value: ln_s.exp(), cp_of_k: ln_cp.exp(), surface_area: surface_area(n) }
    }
}

pub fn sharp_constant(params: &CknParams) -> SharpConstant {
    SharpConstant::new(params)
}

/// `t^(-p+p/K) omega^(1-p/p*) C_p(K)`, the constant as it emerges from the
/// change of variables, using the `pi`-explicit `C_p(K)`.
pub fn sharp_constant_talenti_form(params: &CknParams) -> f64 {
    let d = params.derived();
    let p = params.p();
    let ln_s = (-p + p / d.k_dim) * d.t.ln()
        + (1.0 - p / d.p_star) * ln_surface_area(params.dim())
        + ln_cp_talenti_form(d.k_dim, p);
    ln_s.exp()
}

/// Linearized eigenfunction kinds at the threshold eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenKind {
    W0,
    Wk,
}

/// `W_0(r) = ((p-1) - r^q)/(1+r^q)^g` or the radial factor
/// `r^(q/p)/(1+r^q)^g` of `W_{k,i}`, with `g = (N+beta)/(p+beta-alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenfunctionW {
    pub params: CknParams,
    pub kind: EigenKind,
    pub k: Option<u32>,
}

impl EigenfunctionW {
    pub fn w0(params: CknParams) -> Self {
        Self { params, kind: EigenKind::W0, k: None }
    }

    pub fn wk(params: CknParams, k: u32) -> Self {
        Self { params, kind: EigenKind::Wk, k: Some(k) }
    }

    fn g(&self) -> f64 {
        (self.params.dim() + self.params.beta()) / self.params.gap()
    }

    pub fn value(&self, r: f64) -> f64 {
        let (p, q, g) = (self.params.p(), self.params.q(), self.g());
        let damp = (-g * ln1p_pow(r, q)).exp();
        match self.kind {
            EigenKind::W0 => {
                if r == 0.0 {
                    return p - 1.0;
                }
                // (p-1 - y)/(1+y)^g, with y/(1+y)^g formed in log space
                let y_term = (q * r.ln() - g * ln1p_pow(r, q)).exp();
                (p - 1.0) * damp - y_term
            }
            EigenKind::Wk => {
                if r == 0.0 {
                    return 0.0;
                }
                (q / p * r.ln() - g * ln1p_pow(r, q)).exp()
            }
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let (p, q, g) = (self.params.p(), self.params.q(), self.g());
        match self.kind {
            EigenKind::W0 => {
                if r == 0.0 {
                    let a = q - 1.0;
                    return -(1.0 + g * (p - 1.0)) * q * 0f64.powf(a);
                }
                // dW/dr = -q r^(q-1) (1+y)^(-g) [1 + g (p-1-y)/(1+y)]
                let base = (q * r.ln() - g * ln1p_pow(r, q)).exp() * q / r;
                let s = pow_ratio(r, q);
                // (p-1-y)/(1+y) = (p-1)(1-s) - s
                base * -(1.0 + g * ((p - 1.0) * (1.0 - s) - s))
            }
            EigenKind::Wk => {
                if r == 0.0 {
                    return 0f64.powf(q / p - 1.0);
                }
                self.value(r) * (q / p - g * q * pow_ratio(r, q)) / r
            }
        }
    }

    pub fn decay_exponent(&self) -> f64 {
        let (p, q, g) = (self.params.p(), self.params.q(), self.g());
        match self.kind {
            EigenKind::W0 => q * (g - 1.0),
            EigenKind::Wk => q * g - q / p,
        }
    }

    pub fn to_radial_function(&self) -> RadialFunction {
        let (a, b) = (*self, *self);
        let origin = match self.kind {
            EigenKind::W0 => self.params.q(),
            EigenKind::Wk => self.params.q() / self.params.p(),
        };
        RadialFunction::new(move |r| a.value(r))
            .with_derivative(move |r| b.derivative(r))
            .with_decay_hint(self.decay_exponent())
            .with_origin_hint(origin)
    }
}

/// Constant relating `W_0` to the scale derivative of `U_lambda` at `lambda = 1`.
pub fn w0_dilation_ratio(params: &CknParams) -> f64 {
    let p = params.p();
    normalization(params) * params.m() / (p * (p - 1.0))
}

/// Hardy constant `((N-p+alpha)/p)^p`.
pub fn hardy_constant(n: u32, p: f64, alpha: f64) -> Result<f64> {
    let nf = f64::from(n);
    if alpha <= p - nf {
        return Err(Error::AlphaOutOfRange { alpha, lower: p - nf, upper: f64::INFINITY });
    }
    Ok(((nf - p + alpha) / p).powf(p))
}

/// `gamma_{N,p} = [N((N-p)/(p-1))^(p-1)]^((N-p)/p^2)`.
pub fn aubin_talenti_constant(n: u32, p: f64) -> f64 {
    let nf = f64::from(n);
    (nf * ((nf - p) / (p - 1.0)).powf(p - 1.0)).powf((nf - p) / (p * p))
}

/// Radial Aubin-Talenti bubble centred at the origin.
pub fn aubin_talenti(n: u32, p: f64, lambda: f64, r: f64) -> f64 {
    let nf = f64::from(n);
    let q = p / (p - 1.0);
    let e = (nf - p) / p;
    aubin_talenti_constant(n, p) * lambda.powf(e) * (-e * ln1p_pow(lambda * r, q)).exp()
}

/// Homogeneous harmonic polynomial of degree `k <= 2` in `R^N`, basis element `i`.
///
/// Degree 1: `x_i`. Degree 2: `x_i^2 - x_{i+1}^2` for `i < N-1`, then the
/// products `x_j x_l` with `j < l` in lexicographic order.
pub fn harmonic_polynomial(k: u32, i: usize, x: &[f64]) -> Result<f64> {
    let n = x.len();
    let count = multiplicity(n as u32, k)? as usize;
    if i >= count {
        return Err(Error::InvalidGrid(format!("harmonic index {i} out of range for degree {k}")));
    }
    match k {
        0 => Ok(1.0),
        1 => Ok(x[i]),
        2 => {
            if i < n - 1 {
                return Ok(x[i] * x[i] - x[i + 1] * x[i + 1]);
            }
            let mut idx = n - 1;
            for j in 0..n {
                for l in j + 1..n {
                    if idx == i {
                        return Ok(x[j] * x[l]);
                    }
                    idx += 1;
                }
            }
            unreachable!("index bounded by multiplicity")
        }
        _ => Err(Error::BranchViolation("harmonic degree k <= 2".into())),
    }
}

/// `Psi_{k,i}(x/|x|)`, the degree-zero extension of a harmonic polynomial.
pub fn sphere_harmonic(k: u32, i: usize, x: &[f64]) -> Result<f64> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroBase);
    }
    let unit: Vec<f64> = x.iter().map(|v| v / norm).collect();
    harmonic_polynomial(k, i, &unit)
}
