//! Real time-dependent coefficient functions of the quadratic Hamiltonian
//!
//! ```text
//! i ψ_t = −a ψ_xx + b x² ψ − i (c x ψ_x + d ψ) − f x ψ + i g ψ_x  [+ h |ψ|^{2s} ψ]
//! ```
//!
//! together with the named presets that have closed-form propagators.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real function of time with analytic derivatives.
///
/// Serialized as `{"kind": ..., "params": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum TimeFunction {
    Constant(f64),
    /// Coefficients in ascending powers of `t`.
    Polynomial(Vec<f64>),
    /// `offset + amplitude · sin(omega · t + phase)`.
    Sinusoid {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amplitude · exp(rate · t)`.
    Exponential { amplitude: f64, rate: f64 },
    Tabulated(Spline),
    Sum(Vec<TimeFunction>),
    Product(Vec<TimeFunction>),
    Power {
        base: Box<TimeFunction>,
        exponent: f64,
    },
    Derivative(Box<TimeFunction>),
}

impl TimeFunction {
    pub fn constant(value: f64) -> Self {
        TimeFunction::Constant(value)
    }

    pub fn zero() -> Self {
        TimeFunction::Constant(0.0)
    }

    /// `offset + amplitude · cos(omega · t)`.
    pub fn cosine(offset: f64, amplitude: f64, omega: f64) -> Self {
        TimeFunction::Sinusoid {
            offset,
            amplitude,
            omega,
            phase: FRAC_PI_2,
        }
    }

    /// `amplitude · sin(omega · t)`.
    pub fn sine(amplitude: f64, omega: f64) -> Self {
        TimeFunction::Sinusoid {
            offset: 0.0,
            amplitude,
            omega,
            phase: 0.0,
        }
    }

    /// `H0 + H1 · t`.
    pub fn linear(intercept: f64, slope: f64) -> Self {
        TimeFunction::Polynomial(vec![intercept, slope])
    }

    pub fn scaled(self, factor: f64) -> Self {
        TimeFunction::Product(vec![TimeFunction::Constant(factor), self])
    }

    pub fn powf(self, exponent: f64) -> Self {
        TimeFunction::Power {
            base: Box::new(self),
            exponent,
        }
    }

    pub fn derivative_fn(self) -> Self {
        TimeFunction::Derivative(Box::new(self))
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            TimeFunction::Constant(v) => *v == 0.0,
            TimeFunction::Polynomial(c) => c.iter().all(|&v| v == 0.0),
            TimeFunction::Sinusoid {
                offset, amplitude, ..
            } => *offset == 0.0 && *amplitude == 0.0,
            TimeFunction::Exponential { amplitude, .. } => *amplitude == 0.0,
            TimeFunction::Tabulated(s) => s.values.iter().all(|&v| v == 0.0),
            TimeFunction::Sum(terms) => terms.iter().all(TimeFunction::is_identically_zero),
            TimeFunction::Product(factors) => factors.iter().any(TimeFunction::is_identically_zero),
            TimeFunction::Power { base, exponent } => *exponent > 0.0 && base.is_identically_zero(),
            TimeFunction::Derivative(inner) => match inner.as_ref() {
                TimeFunction::Constant(_) => true,
                other => other.is_identically_zero(),
            },
        }
    }

    /// Value at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.eval_d(t, 0)
    }

    /// First derivative at `t`.
    pub fn derivative(&self, t: f64) -> f64 {
        self.eval_d(t, 1)
    }

    /// `order`-th derivative at `t`. Powers support orders up to 3 and
    /// return NaN beyond that.
    pub fn eval_d(&self, t: f64, order: u32) -> f64 {
        match self {
            TimeFunction::Constant(v) => {
                if order == 0 {
                    *v
                } else {
                    0.0
                }
            }
            TimeFunction::Polynomial(coeffs) => {
                let n = order as usize;
                if n >= coeffs.len() {
                    return 0.0;
                }
                // Horner on the differentiated coefficients.
                let mut acc = 0.0;
                for k in (n..coeffs.len()).rev() {
                    let falling: f64 = ((k - n + 1)..=k).map(|j| j as f64).product();
                    acc = acc * t + coeffs[k] * falling;
                }
                acc
            }
            TimeFunction::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => {
                let shift = f64::from(order % 4) * FRAC_PI_2;
                let base = amplitude * omega.powi(order as i32) * (omega * t + phase + shift).sin();
                if order == 0 {
                    offset + base
                } else {
                    base
                }
            }
            TimeFunction::Exponential { amplitude, rate } => {
                amplitude * rate.powi(order as i32) * (rate * t).exp()
            }
            TimeFunction::Tabulated(spline) => spline.eval_d(t, order),
            TimeFunction::Sum(terms) => terms.iter().map(|f| f.eval_d(t, order)).sum(),
            TimeFunction::Product(factors) => leibniz(factors, t, order),
            TimeFunction::Power { base, exponent } => power_derivative(base, *exponent, t, order),
            TimeFunction::Derivative(inner) => inner.eval_d(t, order + 1),
        }
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * f64::from(n - j) / f64::from(j + 1))
}

fn leibniz(factors: &[TimeFunction], t: f64, order: u32) -> f64 {
    match factors {
        [] => {
            if order == 0 {
                1.0
            } else {
                0.0
            }
        }
        [only] => only.eval_d(t, order),
        [first, rest @ ..] => (0..=order)
            .map(|k| binomial(order, k) * first.eval_d(t, k) * leibniz(rest, t, order - k))
            .sum(),
    }
}

fn power_derivative(base: &TimeFunction, p: f64, t: f64, order: u32) -> f64 {
    let g = base.eval(t);
    match order {
        0 => g.powf(p),
        1 => p * g.powf(p - 1.0) * base.eval_d(t, 1),
        2 => {
            let g1 = base.eval_d(t, 1);
            let g2 = base.eval_d(t, 2);
            p * (p - 1.0) * g.powf(p - 2.0) * g1 * g1 + p * g.powf(p - 1.0) * g2
        }
        3 => {
            let g1 = base.eval_d(t, 1);
            let g2 = base.eval_d(t, 2);
            let g3 = base.eval_d(t, 3);
            p * (p - 1.0) * (p - 2.0) * g.powf(p - 3.0) * g1.powi(3)
                + 3.0 * p * (p - 1.0) * g.powf(p - 2.0) * g1 * g2
                + p * g.powf(p - 1.0) * g3
        }
        _ => f64::NAN,
    }
}

/// Natural cubic spline through tabulated samples. Exact at the knots;
/// outside the knot range the end cubic is extended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineData", into = "SplineData")]
pub struct Spline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SplineData {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<SplineData> for Spline {
    type Error = Error;
    fn try_from(data: SplineData) -> Result<Self> {
        Spline::new(data.knots, data.values)
    }
}

impl From<Spline> for SplineData {
    fn from(s: Spline) -> Self {
        SplineData {
            knots: s.knots,
            values: s.values,
        }
    }
}

impl Spline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(Error::InvalidParameter(
                "tabulated function needs at least two knots and one value per knot".into(),
            ));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "tabulated knots must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("tabulated values must be finite".into()));
        }
        // Natural spline second derivatives by the tridiagonal sweep.
        let mut second = vec![0.0; n];
        if n > 2 {
            let mut diag = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = knots[i] - knots[i - 1];
                let h1 = knots[i + 1] - knots[i];
                diag[i] = 2.0 * (h0 + h1);
                rhs[i] = 6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
            }
            for i in 2..n - 1 {
                let h = knots[i] - knots[i - 1];
                let w = h / diag[i - 1];
                diag[i] -= w * h;
                rhs[i] -= w * rhs[i - 1];
            }
            for i in (1..n - 1).rev() {
                let h1 = knots[i + 1] - knots[i];
                second[i] = (rhs[i] - h1 * second[i + 1]) / diag[i];
            }
        }
        Ok(Spline {
            knots,
            values,
            second,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    fn eval_d(&self, t: f64, order: u32) -> f64 {
        let n = self.knots.len();
        let i = match self.knots.partition_point(|&k| k <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        match order {
            0 => a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0,
            1 => (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0,
            2 => a * m0 + b * m1,
            3 => (m1 - m0) / h,
            _ => 0.0,
        }
    }
}

/// Unit convention of a coefficient set. Only natural units are used by the
/// one-dimensional engine; the magnetic module carries physical constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitsMode {
    #[default]
    Natural,
    Physical,
}

/// Named coefficient sets with closed-form propagators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Free,
    ConstantForce,
    Sho,
    ModifiedOscillator,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Free,
        Preset::ConstantForce,
        Preset::Sho,
        Preset::ModifiedOscillator,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Free => "free",
            Preset::ConstantForce => "constant_force",
            Preset::Sho => "sho",
            Preset::ModifiedOscillator => "modified_oscillator",
            Preset::Custom => "custom",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// The six (seven with the nonlinearity strength `h`) coefficient functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub a: TimeFunction,
    pub b: TimeFunction,
    pub c: TimeFunction,
    pub d: TimeFunction,
    pub f: TimeFunction,
    pub g: TimeFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<TimeFunction>,
    /// Unbounded unless set; omitted from JSON when infinite.
    #[serde(default = "infinite", skip_serializing_if = "is_infinite")]
    pub t_max: f64,
    #[serde(default)]
    pub units_mode: UnitsMode,
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn is_infinite(v: &f64) -> bool {
    v.is_infinite()
}

/// Values of all coefficients (and the derivatives the characteristic
/// equation needs) at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientValues {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub d_prime: f64,
    pub f: f64,
    pub g: f64,
}

impl CoefficientSet {
    /// Builds a set from six functions, validating `a(0) ≠ 0`.
    pub fn new(
        a: TimeFunction,
        b: TimeFunction,
        c: TimeFunction,
        d: TimeFunction,
        f: TimeFunction,
        g: TimeFunction,
    ) -> Result<Self> {
        let t_max = [&a, &b, &c, &d, &f, &g]
            .iter()
            .filter_map(|func| match func {
                TimeFunction::Tabulated(s) => Some(s.domain().1),
                _ => None,
            })
            .fold(f64::INFINITY, f64::min);
        let set = CoefficientSet {
            a,
            b,
            c,
            d,
            f,
            g,
            h: None,
            t_max,
            units_mode: UnitsMode::Natural,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn with_nonlinearity(mut self, h: TimeFunction) -> Self {
        self.h = Some(h);
        self
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    /// Checks the construction invariants: `a(0) ≠ 0`, positive domain and
    /// finite values on a sample grid.
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0) {
            return Err(Error::InvalidParameter("t_max must be positive".into()));
        }
        let a0 = self.a.eval(0.0);
        if a0 == 0.0 || !a0.is_finite() {
            return Err(Error::DegenerateDiffusion { t: 0.0 });
        }
        let probe_end = if self.t_max.is_finite() { self.t_max } else { 10.0 };
        for k in 0..=64 {
            let t = probe_end * f64::from(k) / 64.0;
            let v = self.values(t);
            let all = [v.a, v.a_prime, v.b, v.c, v.d, v.d_prime, v.f, v.g];
            if all.iter().any(|x| !x.is_finite()) {
                return Err(Error::CoefficientEvaluation {
                    t,
                    reason: "non-finite coefficient value".into(),
                });
            }
        }
        Ok(())
    }

    pub fn values(&self, t: f64) -> CoefficientValues {
        CoefficientValues {
            a: self.a.eval(t),
            a_prime: self.a.derivative(t),
            b: self.b.eval(t),
            c: self.c.eval(t),
            d: self.d.eval(t),
            d_prime: self.d.derivative(t),
            f: self.f.eval(t),
            g: self.g.eval(t),
        }
    }

    /// Coefficients `(τ, σ)` of the characteristic equation
    /// `μ″ − τ μ′ + 4 σ μ = 0`, using the form of σ that stays regular
    /// when `d ≡ 0`.
    pub fn tau_sigma(&self, t: f64) -> Result<(f64, f64)> {
        if t < 0.0 || t > self.t_max {
            return Err(Error::OutsideDomain { t, t_max: self.t_max });
        }
        let v = self.values(t);
        if v.a == 0.0 {
            return Err(Error::DegenerateDiffusion { t });
        }
        let log_a = v.a_prime / v.a;
        let tau = log_a - 2.0 * v.c + 4.0 * v.d;
        let sigma = v.a * v.b - v.c * v.d + v.d * v.d + 0.5 * log_a * v.d - 0.5 * v.d_prime;
        if !(tau.is_finite() && sigma.is_finite()) {
            return Err(Error::CoefficientEvaluation {
                t,
                reason: format!("tau = {tau}, sigma = {sigma}"),
            });
        }
        Ok((tau, sigma))
    }

    /// Smallest `t ∈ (0, t_end]` where `a(t)` vanishes, located by sampling
    /// and bisection. `None` if `a` keeps its sign.
    pub fn first_singularity(&self, t_end: f64) -> Option<f64> {
        let a0 = self.a.eval(0.0);
        let samples = 2048;
        let ts: Vec<f64> = (0..=samples).map(|k| t_end * f64::from(k) / f64::from(samples)).collect();
        let vs: Vec<f64> = ts.iter().map(|&t| self.a.eval(t)).collect();
        for k in 1..=samples as usize {
            if vs[k] == 0.0 {
                return Some(ts[k]);
            }
            if vs[k].signum() != a0.signum() {
                let (mut lo, mut hi) = (ts[k - 1], ts[k]);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.a.eval(mid).signum() == a0.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(hi);
            }
            // A zero that a(t) only touches (e.g. cos² t) shows up as a local
            // minimum of |a|; refine it by golden-section search.
            if k < samples as usize && vs[k].abs() <= vs[k - 1].abs() && vs[k].abs() <= vs[k + 1].abs() {
                let (t_min, a_min) = golden_min(|t| self.a.eval(t).abs(), ts[k - 1], ts[k + 1]);
                if a_min <= 1e-8 * a0.abs() {
                    return Some(t_min);
                }
            }
        }
        None
    }

    /// `d(t) = c(t)/2` on a sample grid; the Hamiltonian is Hermitian
    /// exactly when this holds.
    pub fn is_hermitian(&self, t_end: f64) -> bool {
        (0..=256).all(|k| {
            let t = t_end * f64::from(k) / 256.0;
            let c = self.c.eval(t);
            let d = self.d.eval(t);
            (d - 0.5 * c).abs() <= 1e-14 * (1.0 + c.abs())
        })
    }
}

/// Builds the coefficient set of a named preset in natural units
/// (`ħ = m = 1`).
///
/// Parameters: `constant_force` takes `[F]` (default 1), `sho` takes `[ω]`
/// (default 1, must be positive), `custom` takes the six constants
/// `[a, b, c, d, f, g]`; `free` and `modified_oscillator` take none.
pub fn make_preset(name: &str, params: &[f64]) -> Result<CoefficientSet> {
    let preset: Preset = name.parse()?;
    preset_set(preset, params)
}

pub fn preset_set(preset: Preset, params: &[f64]) -> Result<CoefficientSet> {
    use TimeFunction as T;
    let expect_at_most = |n: usize| {
        if params.len() > n {
            Err(Error::InvalidParameter(format!(
                "preset `{}` takes at most {n} parameter(s), got {}",
                preset.name(),
                params.len()
            )))
        } else {
            Ok(())
        }
    };
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter("preset parameters must be finite".into()));
    }
    match preset {
        Preset::Free => {
            expect_at_most(0)?;
            CoefficientSet::new(T::constant(0.5), T::zero(), T::zero(), T::zero(), T::zero(), T::zero())
        }
        Preset::ConstantForce => {
            expect_at_most(1)?;
            let force = params.first().copied().unwrap_or(1.0);
            CoefficientSet::new(
                T::constant(0.5),
                T::zero(),
                T::zero(),
                T::zero(),
                T::constant(force),
                T::zero(),
            )
        }
        Preset::Sho => {
            expect_at_most(1)?;
            let omega = params.first().copied().unwrap_or(1.0);
            if !(omega > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "sho frequency must be positive, got {omega}"
                )));
            }
            CoefficientSet::new(
                T::constant(0.5),
                T::constant(0.5 * omega * omega),
                T::zero(),
                T::zero(),
                T::zero(),
                T::zero(),
            )
        }
        Preset::ModifiedOscillator => {
            expect_at_most(0)?;
            CoefficientSet::new(
                T::cosine(0.5, 0.5, 2.0),
                T::cosine(0.5, -0.5, 2.0),
                T::sine(1.0, 2.0),
                T::sine(0.5, 2.0),
                T::zero(),
                T::zero(),
            )
        }
        Preset::Custom => {
            if params.len() != 6 {
                return Err(Error::InvalidParameter(
                    "custom preset takes the six constants [a, b, c, d, f, g]".into(),
                ));
            }
            let [a, b, c, d, f, g] = [0, 1, 2, 3, 4, 5].map(|i| T::constant(params[i]));
            CoefficientSet::new(a, b, c, d, f, g)
        }
    }
}

/// End of the smooth region of a preset: the modified oscillator's `a(t)`
/// vanishes at `π/2`.
pub fn preset_singularity(preset: Preset) -> Option<f64> {
    match preset {
        Preset::ModifiedOscillator => Some(0.5 * PI),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn free_preset_coefficients() {
        let cs = make_preset("free", &[]).unwrap();
        for t in [0.0, 0.3, 2.0] {
            let v = cs.values(t);
            assert_eq!(v.a, 0.5);
            assert_eq!([v.b, v.c, v.d, v.f, v.g], [0.0; 5]);
        }
        assert_eq!(cs.tau_sigma(1.7).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn sho_preset_coefficients() {
        let cs = make_preset("sho", &[1.0]).unwrap();
        let v = cs.values(0.4);
        assert_eq!((v.a, v.b), (0.5, 0.5));
        let (tau, sigma) = cs.tau_sigma(0.9).unwrap();
        assert_eq!(tau, 0.0);
        assert_eq!(sigma, 0.25);
    }

    #[test]
    fn modified_oscillator_matches_closed_forms() {
        let cs = make_preset("modified_oscillator", &[]).unwrap();
        for k in 0..=130 {
            let t = f64::from(k) * 0.01;
            let v = cs.values(t);
            assert!(close(v.a, 0.5 * (1.0 + (2.0 * t).cos()), 1e-15));
            assert!(close(v.b, 0.5 * (1.0 - (2.0 * t).cos()), 1e-15));
            assert!(close(v.c, (2.0 * t).sin(), 1e-15));
            assert!(close(v.d, 0.5 * (2.0 * t).sin(), 1e-15));
            // μ″ + 2 tan t μ′ − 2 μ = 0
            let (tau, sigma) = cs.tau_sigma(t).unwrap();
            assert!(close(tau, -2.0 * t.tan(), 1e-12 * (1.0 + t.tan().abs())), "tau at {t}");
            assert!(close(4.0 * sigma, -2.0, 1e-12), "sigma at {t}");
        }
    }

    #[test]
    fn unknown_preset_and_bad_frequency() {
        assert_eq!(make_preset("nope", &[]).unwrap_err().code(), "UNKNOWN_PRESET");
        assert!(matches!(make_preset("sho", &[0.0]), Err(Error::InvalidParameter(_))));
        assert!(matches!(make_preset("sho", &[-2.0]), Err(Error::InvalidParameter(_))));
        assert!(make_preset("free", &[1.0]).is_err());
    }

    #[test]
    fn degenerate_a_is_rejected() {
        let err = make_preset("custom", &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert_eq!(err, Error::DegenerateDiffusion { t: 0.0 });
        let cs = make_preset("modified_oscillator", &[]).unwrap();
        let err = cs.tau_sigma(0.5 * PI).unwrap_err();
        assert!(matches!(err, Error::DegenerateDiffusion { .. } | Error::CoefficientEvaluation { .. }));
    }

    #[test]
    fn singularity_scan_finds_cos_squared_zero() {
        let cs = make_preset("modified_oscillator", &[]).unwrap();
        let t = cs.first_singularity(3.0).unwrap();
        assert!(close(t, 0.5 * PI, 1e-6), "{t}");
        assert!(make_preset("sho", &[]).unwrap().first_singularity(10.0).is_none());
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let funcs = [
            TimeFunction::Polynomial(vec![1.0, -2.0, 0.5, 0.25]),
            TimeFunction::cosine(0.5, 0.5, 2.0),
            TimeFunction::Exponential { amplitude: 0.5, rate: -1.3 },
            TimeFunction::Product(vec![TimeFunction::sine(1.0, 1.0), TimeFunction::linear(1.0, 0.5)]),
            TimeFunction::linear(1.0, 0.5).powf(-1.5),
            TimeFunction::linear(1.0, 0.5).derivative_fn(),
            TimeFunction::Tabulated(
                Spline::new(
                    (0..11).map(|k| f64::from(k) * 0.2).collect(),
                    (0..11).map(|k| (f64::from(k) * 0.2).sin()).collect(),
                )
                .unwrap(),
            ),
        ];
        let h = 1e-4;
        for f in &funcs {
            for &t in &[0.3, 0.77, 1.5] {
                let fd = (f.eval(t + h) - f.eval(t - h)) / (2.0 * h);
                let fd2 = (f.derivative(t + h) - f.derivative(t - h)) / (2.0 * h);
                // O(h²) central differences against the analytic derivative
                assert!(close(f.derivative(t), fd, 1e-6), "{f:?} at {t}");
                assert!(close(f.eval_d(t, 2), fd2, 1e-6), "{f:?} at {t}");
            }
        }
    }

    #[test]
    fn spline_is_exact_at_knots() {
        let knots: Vec<f64> = (0..8).map(|k| f64::from(k) * 0.37).collect();
        let values: Vec<f64> = knots.iter().map(|t| (t * 1.3).cos() + t).collect();
        let s = Spline::new(knots.clone(), values.clone()).unwrap();
        for (t, v) in knots.iter().zip(&values) {
            assert!(close(s.eval_d(*t, 0), *v, 1e-14));
        }
        assert!(Spline::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn time_function_json_round_trip() {
        let json = r#"{"kind":"sinusoid","params":{"offset":0.5,"amplitude":0.5,"omega":2.0,"phase":1.5707963267948966}}"#;
        let f: TimeFunction = serde_json::from_str(json).unwrap();
        assert_eq!(f, TimeFunction::cosine(0.5, 0.5, 2.0));
        let tab = r#"{"kind":"tabulated","params":{"knots":[0,1,2],"values":[1,2,0]}}"#;
        let f: TimeFunction = serde_json::from_str(tab).unwrap();
        assert_eq!(f.eval(1.0), 2.0);
        let back: TimeFunction = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn presets_are_finite_on_dense_grid() {
        for p in [Preset::Free, Preset::ConstantForce, Preset::Sho, Preset::ModifiedOscillator] {
            let cs = preset_set(p, &[]).unwrap();
            for k in 0..=1000 {
                let t = f64::from(k) * 0.01;
                let v = cs.values(t);
                assert!([v.a, v.b, v.c, v.d, v.f, v.g].iter().all(|x| x.is_finite()));
            }
            assert!(cs.is_hermitian(3.0));
        }
    }
}
