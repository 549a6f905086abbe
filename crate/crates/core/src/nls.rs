//! Closed-form particular solutions of the nonlinear equation
//!
//! ```text
//! i ψ_t = −a ψ_xx + b x² ψ − i (c x ψ_x + d ψ) − f x ψ + i g ψ_x + h |ψ|^{2s} ψ
//! ```
//!
//! Three families are built: the free case with linear `μ = μ₀ + tμ₁`, the
//! regularized delta kernel, and the modified oscillator with a
//! `cos t sinh t` coupling. Everything else about the general system is an
//! extension point; see [`NlsFamily`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::{make_preset, CoefficientSet, TimeFunction};
use crate::error::{Error, Result};
use crate::green1d::pde_residual;
use crate::quadrature::GaussRule;

/// Initial phase data and nonlinearity of the linear-`μ` family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NLSParams {
    pub s: f64,
    pub h: f64,
    pub mu0: f64,
    pub mu1: f64,
    #[serde(default)]
    pub beta0: f64,
    #[serde(default)]
    pub gamma0: f64,
    #[serde(default)]
    pub delta0: f64,
    #[serde(default)]
    pub eps0: f64,
    #[serde(default)]
    pub kappa0: f64,
    #[serde(default)]
    pub phi: f64,
    /// Spectral parameter carried through the phase; fixed by the caller.
    #[serde(default)]
    pub y: f64,
}

impl Default for NLSParams {
    fn default() -> Self {
        NLSParams {
            s: 1.0,
            h: 1.0,
            mu0: 1.0,
            mu1: 0.0,
            beta0: 0.0,
            gamma0: 0.0,
            delta0: 0.0,
            eps0: 0.0,
            kappa0: 0.0,
            phi: 0.0,
            y: 0.0,
        }
    }
}

impl NLSParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.s, self.h, self.mu0, self.mu1, self.beta0, self.gamma0, self.delta0, self.eps0, self.kappa0,
            self.phi, self.y,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("NLS parameters must be finite".into()));
        }
        if self.s < 0.0 {
            return Err(Error::InvalidParameter(format!("nonlinearity exponent must be >= 0, got {}", self.s)));
        }
        if !(self.mu0 > 0.0) {
            return Err(Error::InvalidParameter(format!("mu0 must be positive, got {}", self.mu0)));
        }
        Ok(())
    }

    pub fn mu(&self, t: f64) -> f64 {
        self.mu0 + t * self.mu1
    }

    fn checked_mu(&self, t: f64) -> Result<f64> {
        self.validate()?;
        let mu = self.mu(t);
        // Compared in time as well, since μ₀ + t₀μ₁ need not round to zero.
        let reached = blowup_time(self).is_some_and(|t0| t >= t0);
        if mu > 0.0 && !reached {
            Ok(mu)
        } else {
            Err(Error::BlowUp { t, mu })
        }
    }
}

/// `((μ₀ + tμ₁)^{1−s} − μ₀^{1−s})/(1 − s)`, or `ln(1 + tμ₁/μ₀)` at `s = 1`.
pub fn xi_s(p: &NLSParams, t: f64) -> Result<f64> {
    let mu = p.checked_mu(t)?;
    Ok(power_primitive(p.s, mu, p.mu0))
}

/// `(u^{1−s} − v^{1−s})/(1 − s)` with the logarithmic branch at `s = 1`.
fn power_primitive(s: f64, u: f64, v: f64) -> f64 {
    if s == 1.0 {
        (u / v).ln()
    } else {
        let e = 1.0 - s;
        // exp_m1 keeps the difference accurate as s → 1.
        v.powf(e) * (e * (u / v).ln()).exp_m1() / e
    }
}

/// `−μ₀/μ₁` when `μ₁ < 0`.
pub fn blowup_time(p: &NLSParams) -> Option<f64> {
    (p.mu1 < 0.0).then(|| -p.mu0 / p.mu1)
}

/// Phase coefficients of the linear-`μ` family at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NlsPhase {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub kappa: f64,
}

impl NlsPhase {
    pub fn action(&self, x: f64, y: f64) -> f64 {
        self.alpha * x * x + self.beta * x * y + self.gamma * y * y + self.delta * x + self.epsilon * y + self.kappa
    }
}

pub fn simple_phase(p: &NLSParams, t: f64) -> Result<NlsPhase> {
    let mu = p.checked_mu(t)?;
    let ratio = p.mu0 / mu;
    let kappa_nl = if p.mu1 == 0.0 {
        p.h * t / p.mu0.powf(p.s)
    } else {
        p.h / p.mu1 * power_primitive(p.s, mu, p.mu0)
    };
    Ok(NlsPhase {
        mu,
        alpha: p.mu1 / (2.0 * mu),
        beta: ratio * p.beta0,
        gamma: p.gamma0 - 0.5 * ratio * p.beta0 * p.beta0 * t,
        delta: ratio * p.delta0,
        epsilon: p.eps0 - ratio * p.beta0 * p.delta0 * t,
        kappa: p.kappa0 - 0.5 * ratio * p.delta0 * p.delta0 * t - kappa_nl,
    })
}

/// `e^{iφ} μ^{−1/2} e^{iS(x, y, t)}` for `i ψ_t = −½ ψ_xx + h |ψ|^{2s} ψ`.
pub fn nls_simple_solution(p: &NLSParams, x: f64, t: f64) -> Result<Complex64> {
    let ph = simple_phase(p, t)?;
    Ok(Complex64::cis(p.phi + ph.action(x, p.y)) / ph.mu.sqrt())
}

/// Regularized kernel
/// `(2πi(t + ε))^{−1/2} exp(i(x − y)²/(2(t + ε)) − i h (2π)^{−s} χ_s(t))`
/// with `χ_s(t) = ((t + ε)^{1−s} − ε^{1−s})/(1 − s)`.
pub fn nls_kernel_solution(epsilon: f64, h: f64, s: f64, x: f64, y: f64, t: f64) -> Result<Complex64> {
    if !(epsilon > 0.0) || !(t >= 0.0) || s < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "kernel family needs epsilon > 0, t >= 0, s >= 0 (got {epsilon}, {t}, {s})"
        )));
    }
    let tau = t + epsilon;
    let chi = power_primitive(s, tau, epsilon);
    let amp = Complex64::new(0.0, 2.0 * PI * tau).sqrt().inv();
    let phase = (x - y) * (x - y) / (2.0 * tau) - h * (2.0 * PI).powf(-s) * chi;
    Ok(amp * Complex64::cis(phase))
}

/// `cos t cosh t + sin t sinh t`.
pub fn modified_oscillator_mu(t: f64) -> f64 {
    t.cos() * t.cosh() + t.sin() * t.sinh()
}

/// Phase of the modified-oscillator family: `[α, β, γ, κ]`.
pub fn modified_oscillator_phase(s: f64, t: f64) -> Result<[f64; 4]> {
    let mu = modified_oscillator_mu(t);
    if !(mu > 0.0) {
        return Err(Error::BlowUp { t, mu });
    }
    let (sn, cs) = t.sin_cos();
    let (sh, ch) = (t.sinh(), t.cosh());
    let alpha = (cs * sh - sn * ch) / (2.0 * mu);
    let beta = 1.0 / mu;
    let gamma = -(cs * sh + sn * ch) / (2.0 * mu);
    let kappa = -power_primitive(s, mu, 1.0);
    Ok([alpha, beta, gamma, kappa])
}

/// `μ^{−1/2} exp(i(αx² + βxy + γy² + κ))`, equal to `e^{ixy}` at `t = 0`.
pub fn nls_modified_oscillator(s: f64, x: f64, y: f64, t: f64) -> Result<Complex64> {
    if s < 0.0 {
        return Err(Error::InvalidParameter(format!("nonlinearity exponent must be >= 0, got {s}")));
    }
    let [alpha, beta, gamma, kappa] = modified_oscillator_phase(s, t)?;
    let mu = modified_oscillator_mu(t);
    Ok(Complex64::cis(alpha * x * x + beta * x * y + gamma * y * y + kappa) / mu.sqrt())
}

/// Free coefficients with constant nonlinearity `h`; shared by the simple and
/// kernel families.
pub fn free_nls_equation(h: f64) -> Result<CoefficientSet> {
    Ok(make_preset("free", &[])?.with_nonlinearity(TimeFunction::constant(h)))
}

/// Modified-oscillator coefficients with `h(t) = 2 cos t sinh t`.
pub fn modified_oscillator_equation() -> Result<CoefficientSet> {
    let sinh = TimeFunction::Sum(vec![
        TimeFunction::Exponential { amplitude: 0.5, rate: 1.0 },
        TimeFunction::Exponential { amplitude: -0.5, rate: -1.0 },
    ]);
    let h = TimeFunction::Product(vec![TimeFunction::cosine(0.0, 2.0, 1.0), sinh]);
    Ok(make_preset("modified_oscillator", &[])?.with_nonlinearity(h))
}

/// Finite-difference defect `iψ_t − Hψ − h(t)|ψ|^{2s}ψ` of the equation
/// described by `cs` (whose `h` defaults to zero).
pub fn nls_residual<K>(cs: &CoefficientSet, s: f64, psi: K, x: f64, t: f64, h_x: f64, h_t: f64) -> Result<Complex64>
where
    K: Fn(f64, f64) -> Result<Complex64>,
{
    let linear = pde_residual(cs, &psi, x, t, h_x, h_t)?;
    let strength = cs.h.as_ref().map_or(0.0, |h| h.eval(t));
    let value = psi(x, t)?;
    Ok(linear - strength * value.norm().powf(2.0 * s) * value)
}

/// The three printed families.
///
/// The general system with arbitrary quadratic coefficients has no printed
/// closed ladder; it would slot in here as a further variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NlsFamily {
    Simple(NLSParams),
    Kernel { epsilon: f64, h: f64, s: f64, y: f64 },
    ModifiedOscillator { s: f64, y: f64 },
}

impl NlsFamily {
    pub fn name(&self) -> &'static str {
        match self {
            NlsFamily::Simple(_) => "simple",
            NlsFamily::Kernel { .. } => "kernel",
            NlsFamily::ModifiedOscillator { .. } => "modified_oscillator",
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<Complex64> {
        match *self {
            NlsFamily::Simple(ref p) => nls_simple_solution(p, x, t),
            NlsFamily::Kernel { epsilon, h, s, y } => nls_kernel_solution(epsilon, h, s, x, y, t),
            NlsFamily::ModifiedOscillator { s, y } => nls_modified_oscillator(s, x, y, t),
        }
    }

    pub fn exponent(&self) -> f64 {
        match *self {
            NlsFamily::Simple(ref p) => p.s,
            NlsFamily::Kernel { s, .. } | NlsFamily::ModifiedOscillator { s, .. } => s,
        }
    }

    pub fn equation(&self) -> Result<CoefficientSet> {
        match *self {
            NlsFamily::Simple(ref p) => free_nls_equation(p.h),
            NlsFamily::Kernel { h, .. } => free_nls_equation(h),
            NlsFamily::ModifiedOscillator { .. } => modified_oscillator_equation(),
        }
    }

    /// Time beyond which the family is undefined.
    pub fn blowup_time(&self) -> Option<f64> {
        match *self {
            NlsFamily::Simple(ref p) => blowup_time(p),
            NlsFamily::Kernel { .. } => None,
            // First zero of cos t cosh t + sin t sinh t.
            NlsFamily::ModifiedOscillator { .. } => Some(modified_oscillator_blowup()),
        }
    }

    /// `nls_residual` of the family against its own equation.
    pub fn residual(&self, x: f64, t: f64, h_x: f64, h_t: f64) -> Result<Complex64> {
        let cs = self.equation()?;
        nls_residual(&cs, self.exponent(), |x, t| self.eval(x, t), x, t, h_x, h_t)
    }
}

fn modified_oscillator_blowup() -> f64 {
    // μ(π/2) = sinh(π/2) > 0 and μ(π) = −cosh π < 0; bisect.
    let (mut lo, mut hi) = (0.5 * PI, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if modified_oscillator_mu(mid) > 0.0 {
            lo = mid
        } else {
            hi = mid
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `∫ G_ε(x, y, 0) φ(y) dy`, evaluated on the rotated contour
/// `y = x + e^{iπ/4} u`, which turns the oscillatory kernel into the real
/// Gaussian `(2πε)^{−1/2} exp(−u²/(2ε))`. `phi` must be entire; it is
/// evaluated at complex arguments.
pub fn distributional_limit<F>(epsilon: f64, x: f64, phi: F) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let rot = Complex64::cis(0.25 * PI);
    let width = 12.0 * epsilon.sqrt();
    let rule = GaussRule::new(20);
    let panels = 16;
    let step = 2.0 * width / panels as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..panels {
        let a = -width + k as f64 * step;
        for (u, w) in rule.mapped(a, a + step) {
            sum += w * (-u * u / (2.0 * epsilon)).exp() * phi(x + rot * u);
        }
    }
    Ok(sum / (2.0 * PI * epsilon).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn params(mu0: f64, mu1: f64, s: f64) -> NLSParams {
        NLSParams { s, h: 1.0, mu0, mu1, ..NLSParams::default() }
    }

    #[test]
    fn xi_examples() {
        assert!((xi_s(&params(1.0, 1.0, 1.0), E - 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((xi_s(&params(1.0, 2.0, 0.0), 3.0).unwrap() - 6.0).abs() < 1e-14);
        for s in [0.0, 0.5, 1.0, 2.5] {
            assert_eq!(xi_s(&params(1.3, -0.4, s), 0.0).unwrap(), 0.0);
        }
        assert_eq!(xi_s(&params(1.0, -2.0, 1.0), 0.5).unwrap_err().code(), "BLOW_UP");
    }

    #[test]
    fn xi_is_continuous_at_unit_exponent() {
        let t = 1.7;
        let at_one = xi_s(&params(1.0, 0.8, 1.0), t).unwrap();
        for s in [1.0 - 1e-6, 1.0 + 1e-6] {
            assert!((xi_s(&params(1.0, 0.8, s), t).unwrap() - at_one).abs() < 1e-5);
        }
    }

    #[test]
    fn modulus_examples() {
        let p = params(1.0, 0.0, 1.0);
        for t in [0.0, 1.0, 10.0] {
            assert!((nls_simple_solution(&p, 0.4, t).unwrap().norm() - 1.0).abs() < 1e-15);
        }
        let p = params(1.0, 1.0, 1.0);
        assert!((nls_simple_solution(&p, -2.0, 3.0).unwrap().norm() - 0.5).abs() < 1e-15);
        let p = params(1.0, -2.0, 1.0);
        assert!(nls_simple_solution(&p, 0.0, 0.49).is_ok());
        assert!(nls_simple_solution(&p, 0.0, 0.5).is_err());
    }

    #[test]
    fn blowup_examples() {
        assert_eq!(blowup_time(&params(1.0, -2.0, 1.0)), Some(0.5));
        assert_eq!(blowup_time(&params(1.0, 1.0, 1.0)), None);
        assert_eq!(blowup_time(&params(2.0, -1.0, 1.0)), Some(2.0));
    }

    #[test]
    fn kernel_examples() {
        let (x, y, eps) = (0.7, -0.2, 0.3);
        let g = nls_kernel_solution(eps, 2.0, 1.5, x, y, 0.0).unwrap();
        let expected = Complex64::new(0.0, 2.0 * PI * eps).sqrt().inv() * Complex64::cis((x - y) * (x - y) / (2.0 * eps));
        assert!((g - expected).norm() < 1e-15);

        let free = nls_kernel_solution(eps, 0.0, 1.0, x, y, 0.9).unwrap();
        let shifted = Complex64::new(0.0, 2.0 * PI * 1.2).sqrt().inv() * Complex64::cis((x - y) * (x - y) / 2.4);
        assert!((free - shifted).norm() < 1e-15);

        let h = 0.8;
        let with = nls_kernel_solution(1.0, h, 1.0, x, y, E - 1.0).unwrap();
        let without = nls_kernel_solution(1.0, 0.0, 1.0, x, y, E - 1.0).unwrap();
        assert!((with / without - Complex64::cis(-h / (2.0 * PI))).norm() < 1e-14);
    }

    #[test]
    fn modified_oscillator_examples() {
        for (x, y) in [(0.0, 0.0), (1.3, -0.7), (-2.0, 2.5)] {
            let v = nls_modified_oscillator(0.7, x, y, 0.0).unwrap();
            assert!((v - Complex64::cis(x * y)).norm() < 1e-15);
        }
        let [a, b, g, k] = modified_oscillator_phase(1.0, 0.0).unwrap();
        assert_eq!((a, b, g, k), (0.0, 1.0, 0.0, 0.0));
        let t = 0.5_f64;
        let [_, _, _, k] = modified_oscillator_phase(1.0, t).unwrap();
        let expected = -(t.cos() * t.cosh() + t.sin() * t.sinh()).ln();
        assert!((k - expected).abs() < 1e-15);
    }

    #[test]
    fn residual_examples() {
        let p = NLSParams { s: 1.0, h: 1.0, mu0: 1.0, mu1: 1.0, y: 0.0, ..NLSParams::default() };
        let fam = NlsFamily::Simple(p);
        let r = fam.residual(0.3, 0.4, 1e-3, 1e-3).unwrap();
        assert!(r.norm() <= 1e-4 * fam.eval(0.3, 0.4).unwrap().norm(), "{r}");

        let fam = NlsFamily::Kernel { epsilon: 0.5, h: 1.0, s: 2.0, y: 0.0 };
        let r = fam.residual(0.1, 0.3, 1e-3, 1e-3).unwrap();
        assert!(r.norm() <= 1e-4 * fam.eval(0.1, 0.3).unwrap().norm(), "{r}");

        let fam = NlsFamily::ModifiedOscillator { s: 1.0, y: 0.5 };
        let r = fam.residual(0.2, 0.4, 1e-3, 1e-3).unwrap();
        assert!(r.norm() <= 1e-3 * fam.eval(0.2, 0.4).unwrap().norm(), "{r}");
    }

    #[test]
    fn wrong_nonlinearity_is_detected() {
        // Same solution against an equation with the sign of h flipped.
        let p = NLSParams { s: 1.0, h: 1.0, mu0: 1.0, mu1: 0.5, ..NLSParams::default() };
        let cs = free_nls_equation(-1.0).unwrap();
        let r = nls_residual(&cs, 1.0, |x, t| nls_simple_solution(&p, x, t), 0.3, 0.4, 1e-3, 1e-3).unwrap();
        assert!(r.norm() > 0.1);
    }

    #[test]
    fn modified_oscillator_blowup_is_a_root() {
        let t0 = NlsFamily::ModifiedOscillator { s: 1.0, y: 0.0 }.blowup_time().unwrap();
        assert!(modified_oscillator_mu(t0).abs() < 1e-12);
        assert!(t0 > 0.5 * PI && t0 < PI);
    }

    #[test]
    fn delta_sequence_converges() {
        let phi = |z: Complex64| (-z * z).exp();
        let x = 0.4_f64;
        let target = (-x * x).exp();
        let mut last = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let err = (distributional_limit(eps, x, phi).unwrap() - target).norm();
            assert!(err < last && err <= eps.sqrt(), "eps = {eps}: {err}");
            last = err;
        }
    }
}
