//! Phase coefficients `(α, β, γ, δ, ε, κ)` of the quadratic action and the
//! one-dimensional Green function
//!
//! ```text
//! G(x, y, t) = (2πi μ)^(−1/2) · exp(i (α x² + β x y + γ y² + δ x + ε y + κ)).
//! ```
//!
//! With `E(t) = exp(−∫₀ᵗ (c − 2d))` and `P = (f − d g/a) μ + g μ′/(2a)`:
//!
//! ```text
//! α = μ′/(4aμ) − d/(2a)        β = −E/μ        δ = (E/μ) ∫₀ᵗ P/E
//! γ = a E²/(μ μ′) − 4 ∫ a σ E²/μ′²
//! ε = −2a δ E/μ′ + 8 ∫ a σ E (μδ)/μ′² + 2 ∫ (a/μ′) E (f − d g/a)
//! κ = a μ δ²/μ′ − 4 ∫ a σ (μδ)²/μ′² − 2 ∫ (a/μ′) (μδ) (f − d g/a)
//! ```
//!
//! The integrated-by-parts forms divide by `μ′`. Past the first zero of `μ′`
//! (the oscillator at a quarter period) γ, ε and κ are continued from an
//! anchor time by integrating `γ′ = −aβ²`, `ε′ = (g − 2aδ)β`,
//! `κ′ = gδ − aδ²`, whose right-hand sides stay regular until `μ` vanishes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::characteristic::CharacteristicSolution;
use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, CumulativeIntegral};

pub const DEFAULT_QTOL: f64 = 1e-10;

/// The quadratic action `S = αx² + βxy + γy² + δx + εy + κ` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticPhase {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub kappa: f64,
}

impl QuadraticPhase {
    pub fn action(&self, x: f64, y: f64) -> f64 {
        self.alpha * x * x + self.beta * x * y + self.gamma * y * y + self.delta * x + self.epsilon * y + self.kappa
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.alpha, self.beta, self.gamma, self.delta, self.epsilon, self.kappa]
    }
}

/// How the amplitude `(2πiμ)^(−1/2)` is continued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeBranch {
    /// Only times before the first focal point are accepted.
    #[default]
    RestrictToFirstFocal,
    /// Principal square root for any `μ ≠ 0`, no phase correction.
    Principal,
    /// Experimental: principal root of `2πi|μ|` times `e^{−iπ/2}` per focal
    /// point crossed.
    MaslovContinuation,
}

/// Green function at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Green1D {
    pub t: f64,
    pub mu: f64,
    pub phase: QuadraticPhase,
    pub branch: AmplitudeBranch,
    /// Focal points crossed in `(0, t)`.
    pub crossings: usize,
}

impl Green1D {
    pub fn new(mu: f64, phase: QuadraticPhase) -> Self {
        Green1D {
            t: phase.t,
            mu,
            phase,
            branch: AmplitudeBranch::default(),
            crossings: 0,
        }
    }

    /// `(2πiμ)^(−1/2)` on the selected branch.
    pub fn amplitude(&self) -> Result<Complex64> {
        if self.mu == 0.0 {
            return Err(Error::Caustic { t: self.t });
        }
        let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        match self.branch {
            AmplitudeBranch::RestrictToFirstFocal | AmplitudeBranch::Principal => {
                Ok((two_pi_i * self.mu).sqrt().inv())
            }
            AmplitudeBranch::MaslovContinuation => {
                let maslov = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_2 * self.crossings as f64);
                Ok((two_pi_i * self.mu.abs()).sqrt().inv() * maslov)
            }
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<Complex64> {
        Ok(self.amplitude()? * Complex64::from_polar(1.0, self.phase.action(x, y)))
    }
}

/// Evaluates `G(x, y, t)`.
pub fn eval_green(g: &Green1D, x: f64, y: f64) -> Result<Complex64> {
    g.eval(x, y)
}

/// Precomputed running integrals for evaluating the phase at any time in
/// `(0, horizon]`.
pub struct PhaseEngine<'a> {
    cs: &'a CoefficientSet,
    sol: &'a CharacteristicSolution,
    qtol: f64,
    horizon: f64,
    window: f64,
    switch: f64,
    log_decay: CumulativeIntegral,
    source: CumulativeIntegral,
    gamma_int: CumulativeIntegral,
    eps_sigma: CumulativeIntegral,
    eps_force: CumulativeIntegral,
    kappa_sigma: CumulativeIntegral,
    kappa_force: CumulativeIntegral,
    anchor: Option<QuadraticPhase>,
}

impl<'a> PhaseEngine<'a> {
    /// Prepares phase evaluation on `(0, horizon]`. The horizon must lie
    /// inside the characteristic solution's domain and before its first
    /// focal time.
    pub fn new(cs: &'a CoefficientSet, sol: &'a CharacteristicSolution, horizon: f64, qtol: f64) -> Result<Self> {
        if !(qtol > 0.0) {
            return Err(Error::InvalidParameter(format!("qtol must be positive, got {qtol}")));
        }
        let window = validity_window(sol);
        if !(horizon > 0.0) || horizon > sol.t_end() || horizon >= window && sol.first_focal_time().is_some() {
            return Err(Error::OutsideValidityWindow { t: horizon, window });
        }
        // The by-parts integrands carry 1/μ′², so they stop well short of
        // any zero of μ′ in the solution, even one beyond the horizon.
        let switch = match sol.first_slope_zero() {
            Some(z) => horizon.min(0.5 * z),
            None => horizon,
        };

        let log_decay = CumulativeIntegral::new(|s| cs.c.eval(s) - 2.0 * cs.d.eval(s), 0.0, horizon, qtol * 1e-2)?;
        let decay = |s: f64| (-log_decay.eval(s)).exp();
        let forcing = |s: f64| {
            let v = cs.values(s);
            v.f - v.d * v.g / v.a
        };
        let source = CumulativeIntegral::new(
            |s| {
                let v = cs.values(s);
                let [mu, mu_p, _] = sol.eval(s);
                ((v.f - v.d * v.g / v.a) * mu + v.g * mu_p / (2.0 * v.a)) / decay(s)
            },
            0.0,
            horizon,
            qtol * 1e-2,
        )?;
        // μ δ = E · U.
        let mu_delta = |s: f64| decay(s) * source.eval(s);
        let a_sigma = |s: f64| -> f64 {
            let (_, sigma) = cs.tau_sigma(s).unwrap_or((f64::NAN, f64::NAN));
            cs.a.eval(s) * sigma
        };
        let slope = |s: f64| sol.mu_prime(s);

        let gamma_int = CumulativeIntegral::new(
            |s| 4.0 * a_sigma(s) * decay(s).powi(2) / slope(s).powi(2),
            0.0,
            switch,
            qtol,
        )?;
        let eps_sigma = CumulativeIntegral::new(
            |s| 8.0 * a_sigma(s) * decay(s) * mu_delta(s) / slope(s).powi(2),
            0.0,
            switch,
            qtol,
        )?;
        let eps_force = CumulativeIntegral::new(
            |s| 2.0 * cs.a.eval(s) / slope(s) * decay(s) * forcing(s),
            0.0,
            switch,
            qtol,
        )?;
        let kappa_sigma = CumulativeIntegral::new(
            |s| 4.0 * a_sigma(s) * mu_delta(s).powi(2) / slope(s).powi(2),
            0.0,
            switch,
            qtol,
        )?;
        let kappa_force = CumulativeIntegral::new(
            |s| 2.0 * cs.a.eval(s) / slope(s) * mu_delta(s) * forcing(s),
            0.0,
            switch,
            qtol,
        )?;
        let mut engine = PhaseEngine {
            cs,
            sol,
            qtol,
            horizon,
            window,
            switch,
            log_decay,
            source,
            gamma_int,
            eps_sigma,
            eps_force,
            kappa_sigma,
            kappa_force,
            anchor: None,
        };
        if switch < horizon {
            engine.anchor = Some(engine.integrated_by_parts(switch)?);
        }
        Ok(engine)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// End of the time interval on which the Green function is defined:
    /// the first focal time, or the end of the characteristic solution.
    pub fn window(&self) -> f64 {
        self.window
    }

    /// `E(t) = exp(−∫₀ᵗ (c − 2d))`.
    pub fn decay(&self, t: f64) -> f64 {
        (-self.log_decay.eval(t)).exp()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t > 0.0) || t > self.horizon {
            return Err(Error::OutsideValidityWindow { t, window: self.horizon.min(self.window) });
        }
        Ok(())
    }

    fn alpha_beta_delta(&self, t: f64) -> (f64, f64, f64) {
        let v = self.cs.values(t);
        let [mu, mu_p, _] = self.sol.eval(t);
        let e = self.decay(t);
        let alpha = mu_p / (4.0 * v.a * mu) - v.d / (2.0 * v.a);
        let beta = -e / mu;
        let delta = e * self.source.eval(t) / mu;
        (alpha, beta, delta)
    }

    fn integrated_by_parts(&self, t: f64) -> Result<QuadraticPhase> {
        let (alpha, beta, delta) = self.alpha_beta_delta(t);
        let a = self.cs.a.eval(t);
        let [mu, mu_p, _] = self.sol.eval(t);
        let e = self.decay(t);
        let gamma = a * e * e / (mu * mu_p) - self.gamma_int.eval(t);
        let epsilon = -2.0 * a * delta * e / mu_p + self.eps_sigma.eval(t) + self.eps_force.eval(t);
        let kappa = a * mu * delta * delta / mu_p - self.kappa_sigma.eval(t) - self.kappa_force.eval(t);
        let phase = QuadraticPhase { t, alpha, beta, gamma, delta, epsilon, kappa };
        if phase.as_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::CoefficientEvaluation {
                t,
                reason: "non-finite phase coefficient".into(),
            });
        }
        Ok(phase)
    }

    /// Phase coefficients at `t ∈ (0, horizon]`.
    pub fn phase(&self, t: f64) -> Result<QuadraticPhase> {
        self.check_time(t)?;
        if t <= self.switch {
            return self.integrated_by_parts(t);
        }
        let anchor = self.anchor.expect("anchor is set whenever switch < horizon");
        let (alpha, beta, delta) = self.alpha_beta_delta(t);
        let cs = self.cs;
        let beta_delta = |s: f64| {
            let (_, b, d) = self.alpha_beta_delta(s);
            (cs.a.eval(s), cs.g.eval(s), b, d)
        };
        let tol = self.qtol;
        let d_gamma = integrate(
            |s| {
                let (a, _, b, _) = beta_delta(s);
                -a * b * b
            },
            self.switch,
            t,
            tol,
        )?;
        let d_eps = integrate(
            |s| {
                let (a, g, b, d) = beta_delta(s);
                (g - 2.0 * a * d) * b
            },
            self.switch,
            t,
            tol,
        )?;
        let d_kappa = integrate(
            |s| {
                let (a, g, _, d) = beta_delta(s);
                g * d - a * d * d
            },
            self.switch,
            t,
            tol,
        )?;
        Ok(QuadraticPhase {
            t,
            alpha,
            beta,
            gamma: anchor.gamma + d_gamma,
            delta,
            epsilon: anchor.epsilon + d_eps,
            kappa: anchor.kappa + d_kappa,
        })
    }

    /// Green function at `t` on the default branch.
    pub fn green(&self, t: f64) -> Result<Green1D> {
        let phase = self.phase(t)?;
        Ok(Green1D::new(self.sol.mu(t), phase))
    }
}

/// End of the interval on which `μ > 0`: the first focal time, or the end of
/// the solved domain.
pub fn validity_window(sol: &CharacteristicSolution) -> f64 {
    sol.first_focal_time().unwrap_or(sol.t_end())
}

/// Phase coefficients at a single time.
pub fn phase_coefficients(
    cs: &CoefficientSet,
    sol: &CharacteristicSolution,
    t: f64,
    qtol: f64,
) -> Result<QuadraticPhase> {
    let window = validity_window(sol);
    if !(t > 0.0) || t > sol.t_end() || (sol.first_focal_time().is_some() && t >= window) {
        return Err(Error::OutsideValidityWindow { t, window });
    }
    PhaseEngine::new(cs, sol, t, qtol)?.phase(t)
}

const RESIDUAL_STEP: f64 = 1e-3;
const RESIDUAL_QTOL: f64 = 1e-12;

/// Absolute residuals of the six first-order equations
///
/// ```text
/// α′ + b + 2cα + 4aα² = 0          β′ + (c + 4aα) β = 0
/// γ′ + aβ² = 0                     δ′ + (c + 4aα) δ = f + 2αg
/// ε′ = (g − 2aδ) β                 κ′ = gδ − aδ²
/// ```
///
/// with time derivatives from fourth-order central differences (step 1e-3).
pub fn system_residuals(cs: &CoefficientSet, sol: &CharacteristicSolution, t: f64) -> Result<[f64; 6]> {
    let h = RESIDUAL_STEP;
    let window = validity_window(sol);
    if t - 2.0 * h <= 0.0 || t + 2.0 * h >= window || t + 2.0 * h > sol.t_end() {
        return Err(Error::StencilDomain(format!(
            "t = {t} needs [t - {}, t + {}] inside (0, {window})",
            2.0 * h,
            2.0 * h
        )));
    }
    let engine = PhaseEngine::new(cs, sol, t + 2.0 * h, RESIDUAL_QTOL)?;
    let p = [
        engine.phase(t - 2.0 * h)?.as_array(),
        engine.phase(t - h)?.as_array(),
        engine.phase(t + h)?.as_array(),
        engine.phase(t + 2.0 * h)?.as_array(),
    ];
    let centre = engine.phase(t)?;
    let mut deriv = [0.0; 6];
    for (k, d) in deriv.iter_mut().enumerate() {
        *d = (p[0][k] - 8.0 * p[1][k] + 8.0 * p[2][k] - p[3][k]) / (12.0 * h);
    }
    let v = cs.values(t);
    let QuadraticPhase { alpha, beta, delta, .. } = centre;
    let drift = v.c + 4.0 * v.a * alpha;
    Ok([
        (deriv[0] + v.b + 2.0 * v.c * alpha + 4.0 * v.a * alpha * alpha).abs(),
        (deriv[1] + drift * beta).abs(),
        (deriv[2] + v.a * beta * beta).abs(),
        (deriv[3] + drift * delta - v.f - 2.0 * alpha * v.g).abs(),
        (deriv[4] - (v.g - 2.0 * v.a * delta) * beta).abs(),
        (deriv[5] - v.g * delta + v.a * delta * delta).abs(),
    ])
}

/// Finite-difference defect of the linear equation for a kernel `ψ(x, t)`:
/// `iψ_t + aψ_xx − bx²ψ + i(cxψ_x + dψ) + fxψ − igψ_x`, second-order
/// central differences.
pub fn pde_residual<K>(cs: &CoefficientSet, kernel: K, x: f64, t: f64, h_x: f64, h_t: f64) -> Result<Complex64>
where
    K: Fn(f64, f64) -> Result<Complex64>,
{
    if !(h_x > 0.0 && h_t > 0.0) || t - h_t <= 0.0 {
        return Err(Error::StencilDomain(format!(
            "steps must be positive and t - h_t > 0 (t = {t}, h_x = {h_x}, h_t = {h_t})"
        )));
    }
    let i = Complex64::i();
    let psi = kernel(x, t)?;
    let psi_t = (kernel(x, t + h_t)? - kernel(x, t - h_t)?) / (2.0 * h_t);
    let right = kernel(x + h_x, t)?;
    let left = kernel(x - h_x, t)?;
    let psi_x = (right - left) / (2.0 * h_x);
    let psi_xx = (right - 2.0 * psi + left) / (h_x * h_x);
    let v = cs.values(t);
    Ok(i * psi_t + v.a * psi_xx - v.b * x * x * psi + i * (v.c * x * psi_x + v.d * psi) + v.f * x * psi
        - i * v.g * psi_x)
}

/// [`pde_residual`] for the engine-built kernel with source point `y`.
pub fn pde_residual_green(
    cs: &CoefficientSet,
    engine: &PhaseEngine<'_>,
    x: f64,
    y: f64,
    t: f64,
    h_x: f64,
    h_t: f64,
) -> Result<Complex64> {
    if t + h_t > engine.horizon() {
        return Err(Error::StencilDomain(format!(
            "t + h_t = {} exceeds the engine horizon {}",
            t + h_t,
            engine.horizon()
        )));
    }
    pde_residual(cs, |x, t| engine.green(t)?.eval(x, y), x, t, h_x, h_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristic::solve_characteristic;
    use crate::coefficients::make_preset;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn free_phase_at_unit_time() {
        let cs = make_preset("free", &[]).unwrap();
        let sol = solve_characteristic(&cs, 2.0, 1e-10).unwrap();
        let p = phase_coefficients(&cs, &sol, 1.0, 1e-10).unwrap();
        assert!(close(p.alpha, 0.5, 1e-9) && close(p.beta, -1.0, 1e-9) && close(p.gamma, 0.5, 1e-9));
        assert!(p.delta.abs() < 1e-12 && p.epsilon.abs() < 1e-12 && p.kappa.abs() < 1e-12);
    }

    #[test]
    fn sho_phase_at_eighth_period() {
        let cs = make_preset("sho", &[1.0]).unwrap();
        let sol = solve_characteristic(&cs, 3.0, 1e-10).unwrap();
        let p = phase_coefficients(&cs, &sol, FRAC_PI_4, 1e-10).unwrap();
        assert!(close(p.alpha, 0.5, 1e-9), "{p:?}");
        assert!(close(p.gamma, 0.5, 1e-9), "{p:?}");
        assert!(close(p.beta, -SQRT_2, 1e-9), "{p:?}");
    }

    #[test]
    fn sho_green_at_quarter_period() {
        // Past the first zero of μ′ the continuation path is used.
        let cs = make_preset("sho", &[1.0]).unwrap();
        let sol = solve_characteristic(&cs, 3.0, 1e-10).unwrap();
        let engine = PhaseEngine::new(&cs, &sol, 2.5, 1e-10).unwrap();
        let g = engine.green(FRAC_PI_2).unwrap();
        let expected = Complex64::new(0.0, 2.0 * PI).sqrt().inv();
        assert!((g.eval(1.0, 0.0).unwrap() - expected).norm() < 1e-8);
        for t in [1.7, 2.2, 2.5] {
            let p = engine.phase(t).unwrap();
            let cot = 0.5 / t.tan();
            assert!(close(p.gamma, cot, 1e-8), "t={t}: {} vs {cot}", p.gamma);
        }
    }

    #[test]
    fn constant_force_linear_terms() {
        let cs = make_preset("constant_force", &[1.0]).unwrap();
        let sol = solve_characteristic(&cs, 2.0, 1e-10).unwrap();
        let p = phase_coefficients(&cs, &sol, 1.0, 1e-10).unwrap();
        assert!(close(p.delta, 0.5, 1e-9));
        assert!(close(p.epsilon, 0.5, 1e-9));
        assert!(close(p.kappa, -1.0 / 24.0, 1e-9));
    }

    #[test]
    fn free_green_modulus_and_phase() {
        let cs = make_preset("free", &[]).unwrap();
        let sol = solve_characteristic(&cs, 2.0, 1e-10).unwrap();
        let engine = PhaseEngine::new(&cs, &sol, 1.0, 1e-10).unwrap();
        let g = eval_green(&engine.green(1.0).unwrap(), 0.3, 0.3).unwrap();
        assert!(close(g.norm(), (2.0 * PI).powf(-0.5), 1e-10));
        assert!(close(g.arg(), -FRAC_PI_4, 1e-9));
    }

    #[test]
    fn window_is_enforced() {
        let cs = make_preset("sho", &[1.0]).unwrap();
        let sol = solve_characteristic(&cs, 4.0, 1e-10).unwrap();
        let err = phase_coefficients(&cs, &sol, 3.5, 1e-10).unwrap_err();
        assert_eq!(err.code(), "OUTSIDE_VALIDITY_WINDOW");
        assert!(phase_coefficients(&cs, &sol, 0.0, 1e-10).is_err());
    }

    #[test]
    fn residuals_small_for_free_and_force() {
        for (name, params) in [("free", vec![]), ("constant_force", vec![1.0])] {
            let cs = make_preset(name, &params).unwrap();
            let sol = solve_characteristic(&cs, 2.0, 1e-10).unwrap();
            let r = system_residuals(&cs, &sol, 1.0).unwrap();
            assert!(r.iter().all(|v| *v < 1e-8), "{name}: {r:?}");
        }
    }

    #[test]
    fn caustic_amplitude_is_an_error() {
        let phase = QuadraticPhase { t: 1.0, alpha: 0.0, beta: 0.0, gamma: 0.0, delta: 0.0, epsilon: 0.0, kappa: 0.0 };
        let g = Green1D::new(0.0, phase);
        assert_eq!(g.eval(0.0, 0.0).unwrap_err().code(), "CAUSTIC");
    }
}
