//! Radial profiles `u(|x|)`: analytic closures or sampled data.

use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A radial function `r -> u(r)` on `(0, inf)`.
///
/// The first derivative is analytic when supplied, otherwise a centered
/// difference with step `1e-6 * max(r, 1)` (capped at `r/2`) is used. Power-law
/// hints describe `u ~ r^(-decay)` at infinity and `u - u(0) ~ r^origin` at the
/// origin; quadrature uses them for tail corrections when present.
#[derive(Clone)]
pub struct RadialFunction {
    value: Eval,
    derivative: Option<Eval>,
    second: Option<Eval>,
    decay_hint: Option<f64>,
    origin_hint: Option<f64>,
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialFunction")
            .field("derivative", &self.derivative.is_some())
            .field("second_derivative", &self.second.is_some())
            .field("decay_hint", &self.decay_hint)
            .field("origin_hint", &self.origin_hint)
            .finish()
    }
}

fn fd_step(r: f64) -> f64 {
    (1e-6 * r.max(1.0)).min(0.5 * r)
}

impl RadialFunction {
    pub fn new(value: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { value: Arc::new(value), derivative: None, second: None, decay_hint: None, origin_hint: None }
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    pub fn with_second_derivative(mut self, d2: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.second = Some(Arc::new(d2));
        self
    }

    pub fn with_decay_hint(mut self, decay: f64) -> Self {
        self.decay_hint = Some(decay);
        self
    }

    pub fn with_origin_hint(mut self, origin: f64) -> Self {
        self.origin_hint = Some(origin);
        self
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        (self.value)(r)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match &self.derivative {
            Some(d) => d(r),
            None => {
                let h = fd_step(r);
                ((self.value)(r + h) - (self.value)(r - h)) / (2.0 * h)
            }
        }
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn has_second_derivative(&self) -> bool {
        self.second.is_some()
    }

    /// Analytic second derivative, or a centered difference of the analytic
    /// first derivative. `None` without an analytic first derivative.
    pub fn second_derivative(&self, r: f64) -> Option<f64> {
        match (&self.second, &self.derivative) {
            (Some(d2), _) => Some(d2(r)),
            (None, Some(d)) => {
                let h = fd_step(r);
                Some((d(r + h) - d(r - h)) / (2.0 * h))
            }
            _ => None,
        }
    }

    pub fn decay_hint(&self) -> Option<f64> {
        self.decay_hint
    }

    pub fn origin_hint(&self) -> Option<f64> {
        self.origin_hint
    }

    /// `c * u`.
    pub fn scaled(&self, c: f64) -> Self {
        let v = self.value.clone();
        let mut out = Self::new(move |r| c * v(r));
        out.derivative = self.derivative.clone().map(|d| Arc::new(move |r: f64| c * d(r)) as Eval);
        out.second = self.second.clone().map(|d| Arc::new(move |r: f64| c * d(r)) as Eval);
        out.decay_hint = self.decay_hint;
        out.origin_hint = self.origin_hint;
        out
    }

    /// `a * self + b * other`. Analytic derivatives survive only when both
    /// operands carry them.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let (u, v) = (self.value.clone(), other.value.clone());
        let mut out = Self::new(move |r| a * u(r) + b * v(r));
        if let (Some(du), Some(dv)) = (self.derivative.clone(), other.derivative.clone()) {
            out.derivative = Some(Arc::new(move |r| a * du(r) + b * dv(r)));
        }
        if let (Some(du), Some(dv)) = (self.second.clone(), other.second.clone()) {
            out.second = Some(Arc::new(move |r| a * du(r) + b * dv(r)));
        }
        out.decay_hint = match (self.decay_hint, other.decay_hint) {
            (Some(x), Some(y)) => Some(x.min(y)),
            _ => None,
        };
        out.origin_hint = match (self.origin_hint, other.origin_hint) {
            (Some(x), Some(y)) => Some(x.min(y)),
            _ => None,
        };
        out
    }

    /// `lambda^weight * u(lambda r)`.
    pub fn dilated(&self, lambda: f64, weight: f64) -> Self {
        let pre = lambda.powf(weight);
        let v = self.value.clone();
        let mut out = Self::new(move |r| pre * v(lambda * r));
        out.derivative =
            self.derivative.clone().map(|d| Arc::new(move |r: f64| pre * lambda * d(lambda * r)) as Eval);
        out.second = self
            .second
            .clone()
            .map(|d| Arc::new(move |r: f64| pre * lambda * lambda * d(lambda * r)) as Eval);
        out.decay_hint = self.decay_hint;
        out.origin_hint = self.origin_hint;
        out
    }

    /// Samples `(r, u, du)` at the given nodes.
    pub fn sample(&self, nodes: &[f64]) -> RadialSamples {
        RadialSamples {
            r: nodes.to_vec(),
            u: nodes.iter().map(|&r| self.value(r)).collect(),
            du: Some(nodes.iter().map(|&r| self.derivative(r)).collect()),
        }
    }
}

/// Tabulated profile in the `r,u[,du]` CSV layout.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSamples {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Option<Vec<f64>>,
}

impl RadialSamples {
    pub fn new(r: Vec<f64>, u: Vec<f64>, du: Option<Vec<f64>>) -> Result<Self> {
        let s = Self { r, u, du };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.r.len() < 2 {
            return Err(Error::Parse("need at least two samples".into()));
        }
        if self.u.len() != self.r.len() || self.du.as_ref().is_some_and(|d| d.len() != self.r.len()) {
            return Err(Error::Parse("column lengths differ".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.r) || !finite(&self.u) || self.du.as_deref().is_some_and(|d| !finite(d)) {
            return Err(Error::Parse("non-finite value".into()));
        }
        if self.r[0] <= 0.0 {
            return Err(Error::Parse("radii must be positive".into()));
        }
        if let Some(i) = self.r.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Parse(format!("radii not strictly increasing at row {}", i + 2)));
        }
        Ok(())
    }

    /// Parses `r,u[,du]` with a mandatory header row.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        let names: Vec<&str> = headers.iter().collect();
        let with_du = match names.as_slice() {
            ["r", "u"] => false,
            ["r", "u", "du"] => true,
            _ => return Err(Error::Parse(format!("expected header r,u[,du], found {}", names.join(",")))),
        };
        let (mut r, mut u, mut du) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let field = |j: usize| -> Result<f64> {
                let s = rec.get(j).ok_or_else(|| Error::Parse(format!("row {}: missing column", i + 2)))?;
                s.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number {s:?}", i + 2)))
            };
            r.push(field(0)?);
            u.push(field(1)?);
            if with_du {
                du.push(field(2)?);
            }
        }
        Self::new(r, u, with_du.then_some(du))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let io = |e: csv::Error| Error::Io(e.to_string());
        match &self.du {
            Some(du) => {
                w.write_record(["r", "u", "du"]).map_err(io)?;
                for i in 0..self.r.len() {
                    w.write_record([fmt_num(self.r[i]), fmt_num(self.u[i]), fmt_num(du[i])]).map_err(io)?;
                }
            }
            None => {
                w.write_record(["r", "u"]).map_err(io)?;
                for i in 0..self.r.len() {
                    w.write_record([fmt_num(self.r[i]), fmt_num(self.u[i])]).map_err(io)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Piecewise cubic Hermite interpolant in `ln r`.
    ///
    /// Node slopes come from the `du` column when present, otherwise from
    /// three-point differences. Left of the first node the profile is held
    /// constant; right of the last node it continues as a power law fitted to
    /// the last samples, or as zero when the data already vanish there.
    pub fn into_function(self) -> RadialFunction {
        let n = self.r.len();
        let x: Vec<f64> = self.r.iter().map(|r| r.ln()).collect();
        let slopes: Vec<f64> = match &self.du {
            Some(du) => du.iter().zip(&self.r).map(|(d, r)| d * r).collect(),
            None => log_slopes(&x, &self.u),
        };
        let (ul, un) = (self.u[n - 1], self.u[n - 2]);
        let decay = if ul != 0.0 && un != 0.0 && ul.signum() == un.signum() {
            let m = -slopes[n - 1] / ul;
            (m > 0.0).then_some(m)
        } else {
            None
        };
        let interp = Arc::new(Hermite { x, y: self.u, m: slopes, decay });
        let i2 = interp.clone();
        let mut f = RadialFunction::new(move |r| interp.eval(r).0).with_derivative(move |r| i2.eval(r).1);
        if let Some(m) = decay {
            f = f.with_decay_hint(m);
        }
        f
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:e}")
}

fn log_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n == 2 {
        let s = (y[1] - y[0]) / (x[1] - x[0]);
        return vec![s, s];
    }
    for i in 1..n - 1 {
        let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        let (d0, d1) = ((y[i] - y[i - 1]) / h0, (y[i + 1] - y[i]) / h1);
        m[i] = (h1 * d0 + h0 * d1) / (h0 + h1);
    }
    m[0] = (y[1] - y[0]) / (x[1] - x[0]);
    m[n - 1] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    m
}

struct Hermite {
    x: Vec<f64>,
    y: Vec<f64>,
    /// dy/d(ln r) at the nodes
    m: Vec<f64>,
    decay: Option<f64>,
}

impl Hermite {
    /// Returns `(u, du/dr)`.
    fn eval(&self, r: f64) -> (f64, f64) {
        let n = self.x.len();
        let xr = r.ln();
        if xr <= self.x[0] {
            return (self.y[0], 0.0);
        }
        if xr >= self.x[n - 1] {
            let yl = self.y[n - 1];
            return match self.decay {
                Some(m) => {
                    let v = yl * (-(m) * (xr - self.x[n - 1])).exp();
                    (v, -m * v / r)
                }
                None if xr == self.x[n - 1] => (yl, self.m[n - 1] / r),
                None => (0.0, 0.0),
            };
        }
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&xr).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (xr - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        let v = h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        let dx = (d00 * y0 + d01 * y1) / h + d10 * m0 + d11 * m1;
        (v, dx / r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian() -> RadialFunction {
        RadialFunction::new(|r| (-r * r).exp()).with_derivative(|r| -2.0 * r * (-r * r).exp())
    }

    #[test]
    fn finite_difference_fallback() {
        let f = RadialFunction::new(|r| (-r * r).exp());
        for r in [0.01f64, 0.5, 1.0, 3.0] {
            let exact = -2.0 * r * (-r * r).exp();
            assert!((f.derivative(r) - exact).abs() < 1e-8, "r={r}");
        }
        assert!(f.second_derivative(1.0).is_none());
        assert!(gaussian().second_derivative(1.0).is_some());
    }

    #[test]
    fn combinators() {
        let g = gaussian();
        let s = g.scaled(2.0).combine(1.0, &g, -2.0);
        assert_eq!(s.value(0.7), 0.0);
        assert!(s.has_derivative());
        let d = g.dilated(2.0, 1.5);
        assert!((d.value(0.3) - 2f64.powf(1.5) * g.value(0.6)).abs() < 1e-15);
        assert!((d.derivative(0.3) - 2f64.powf(2.5) * g.derivative(0.6)).abs() < 1e-14);
        let no_d = RadialFunction::new(|r| r);
        assert!(!g.combine(1.0, &no_d, 1.0).has_derivative());
    }

    #[test]
    fn csv_round_trip_and_interpolation() {
        let nodes: Vec<f64> = (0..400).map(|i| 1e-3 * (1.03f64).powi(i)).collect();
        let f = RadialFunction::new(|r| 1.0 / (1.0 + r * r)).with_derivative(|r| -2.0 * r / (1.0 + r * r).powi(2));
        let samples = f.sample(&nodes);
        let mut buf = Vec::new();
        samples.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("r,u,du\n"));
        let back = RadialSamples::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, samples);
        let g = back.into_function();
        for r in [0.0123, 0.5, 2.2, 17.0] {
            assert!((g.value(r) - f.value(r)).abs() < 1e-8, "r={r}");
            assert!((g.derivative(r) - f.derivative(r)).abs() < 1e-6, "r={r}");
        }
        // power-law continuation beyond the last node (u ~ r^-2)
        let r_last = *nodes.last().unwrap();
        assert!((g.decay_hint().unwrap() - 2.0).abs() < 1e-3);
        let far = 10.0 * r_last;
        assert!((g.value(far) / f.value(far) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn csv_without_derivative_column() {
        let text = "r,u\n0.5,1.0\n1.0,0.5\n1.5,0.0\n2.0,0.0\n";
        let g = RadialSamples::read_csv(text.as_bytes()).unwrap().into_function();
        assert_eq!(g.value(3.0), 0.0);
        assert_eq!(g.value(0.1), 1.0);
        assert!((g.value(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn csv_rejections() {
        let bad = [
            "x,u\n1,2\n2,3\n",
            "r,u\n1,2\n1,3\n",
            "r,u\n2,2\n1,3\n",
            "r,u\n-1,2\n1,3\n",
            "r,u\n1,NaN\n2,3\n",
            "r,u\n1,inf\n2,3\n",
            "r,u\n1,abc\n2,3\n",
            "r,u,du\n1,2\n2,3,4\n",
            "r,u\n1,2\n",
        ];
        for text in bad {
            assert!(matches!(RadialSamples::read_csv(text.as_bytes()), Err(Error::Parse(_))), "{text:?}");
        }
    }
}
