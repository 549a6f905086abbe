//! Charged spinning particle in a uniform field `H(t) e_z` with a
//! perpendicular electric force `F(t)` along `y`.
//!
//! Separating `x` and `z` leaves a driven oscillator in `y` whose kernel is
//! the one-dimensional Green function in the scaled coordinate
//! `η = (y − y₀(t))/a_H(t)`. The phase of that kernel is a quadratic in the
//! conserved momentum `p_x`, so the `p_x` integral is a Fresnel–Gauss
//! integral done in closed form:
//!
//! ```text
//! S_H = S2(y, y′) + p_x S1(y, y′) + p_x² S0
//! G = G₀(z − z′) / (2πħ a_H(0)) · √(πi/S0) / √(2πi μ_H)
//!     · exp(iμσ/(ħs) ∫H) · exp(X²/(4iħ²S0) + Q/(4iS0) + S1 X/(2iħ S0))
//! ```
//!
//! with `X = x − x′ − (c/e) ∫F/H` and `Q = S1² − 4 S0 S2`.
//!
//! Units are explicit here; the defaults are `m = c = ħ = 1`, `e = −1`.

pub mod bessel;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::characteristic::{solve_with_system, CharacteristicSolution};
use crate::coefficients::{CoefficientSet, TimeFunction, UnitsMode};
use crate::error::{Error, Result};
use crate::green1d::QuadraticPhase;
use crate::quadrature::CumulativeIntegral;

pub use bessel::{bessel_j, bessel_j_prime};

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalConstants {
    pub m: f64,
    /// Signed charge.
    pub e: f64,
    pub c: f64,
    pub hbar: f64,
    /// Magnetic moment `μ` in `μ̂ = μ ŝ/s`.
    pub mu_spin: f64,
    pub s: f64,
    /// Conserved `s_z` eigenvalue.
    pub sigma: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            m: 1.0,
            e: -1.0,
            c: 1.0,
            hbar: 1.0,
            mu_spin: 1.0,
            s: 0.5,
            sigma: 0.5,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let positive = [("m", self.m), ("c", self.c), ("hbar", self.hbar)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.e == 0.0 || !self.e.is_finite() {
            return Err(Error::InvalidParameter("charge e must be nonzero".into()));
        }
        if !(self.s >= 0.0) || self.sigma.abs() > self.s + 1e-12 || ((self.sigma - self.s).round() - (self.sigma - self.s)).abs() > 1e-12
        {
            return Err(Error::InvalidParameter(format!(
                "spin projection sigma = {} is not one of -s, ..., s for s = {}",
                self.sigma, self.s
            )));
        }
        Ok(())
    }

    /// `e/|e|`.
    pub fn charge_sign(&self) -> f64 {
        self.e.signum()
    }

    /// `μσ/s`, zero for a spinless particle.
    pub fn spin_coupling(&self) -> f64 {
        if self.s == 0.0 {
            0.0
        } else {
            self.mu_spin * self.sigma / self.s
        }
    }
}

/// Field magnitude `H(t)`, electric force `F(t)` and constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldProfile {
    #[serde(rename = "H")]
    pub field: TimeFunction,
    #[serde(rename = "F", default = "TimeFunction::zero")]
    pub force: TimeFunction,
    #[serde(default)]
    pub constants: PhysicalConstants,
}

/// Derived quantities at one instant for a fixed `p_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticAux {
    pub omega_h: f64,
    pub y0: f64,
    pub a_h: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

impl FieldProfile {
    pub fn new(field: TimeFunction, force: TimeFunction, constants: PhysicalConstants) -> Result<Self> {
        constants.validate()?;
        let h0 = field.eval(0.0);
        if !(h0 > 0.0) || !h0.is_finite() {
            return Err(Error::FieldSignChange { t: 0.0 });
        }
        Ok(FieldProfile { field, force, constants })
    }

    /// `H ≡ h0`, `F ≡ f0`.
    pub fn constant(h0: f64, f0: f64, constants: PhysicalConstants) -> Result<Self> {
        Self::new(TimeFunction::constant(h0), TimeFunction::constant(f0), constants)
    }

    /// `H = h0 + h1 t`, `F ≡ f0`.
    pub fn linear(h0: f64, h1: f64, f0: f64, constants: PhysicalConstants) -> Result<Self> {
        Self::new(TimeFunction::linear(h0, h1), TimeFunction::constant(f0), constants)
    }

    /// Cyclotron frequency `|e| H/(m c)`.
    pub fn omega(&self, t: f64) -> f64 {
        let k = &self.constants;
        k.e.abs() * self.field.eval(t) / (k.m * k.c)
    }

    /// Oscillator length `√(ħ/(m ω_H))`.
    pub fn a_h(&self, t: f64) -> f64 {
        let k = &self.constants;
        (k.hbar / (k.m * self.omega(t))).sqrt()
    }

    /// Orbit centre `−c p_x/(e H)`.
    pub fn y0(&self, t: f64, p_x: f64) -> f64 {
        let k = &self.constants;
        -k.c * p_x / (k.e * self.field.eval(t))
    }

    pub fn aux(&self, t: f64, p_x: f64) -> MagneticAux {
        let k = &self.constants;
        let field = self.field.eval(t);
        let field_p = self.field.derivative(t);
        let a_h = self.a_h(t);
        MagneticAux {
            omega_h: self.omega(t),
            y0: self.y0(t, p_x),
            a_h,
            f: a_h * self.force.eval(t) / k.hbar,
            g: k.c * p_x * field_p / (k.e * field * field) / a_h,
            h: -0.5 * field_p / field,
        }
    }

    /// First time in `[0, T]` where `H ≤ 0`, located by sampling and
    /// bisection.
    pub fn field_sign_change(&self, t_end: f64) -> Option<f64> {
        let samples = 4096;
        let mut prev = 0.0;
        for k in 0..=samples {
            let t = t_end * k as f64 / samples as f64;
            let v = self.field.eval(t);
            if !(v > 0.0) {
                if k == 0 {
                    return Some(0.0);
                }
                let (mut lo, mut hi) = (prev, t);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.field.eval(mid) > 0.0 {
                        lo = mid
                    } else {
                        hi = mid
                    }
                    if hi - lo < 1e-14 * t_end.max(1.0) {
                        break;
                    }
                }
                return Some(hi);
            }
            prev = t;
        }
        None
    }

    fn check_field(&self, t_end: f64) -> Result<()> {
        match self.field_sign_change(t_end) {
            Some(t) => Err(Error::FieldSignChange { t }),
            None => Ok(()),
        }
    }
}

/// Solves `μ_H″ + ω_H² μ_H = 0`, `μ_H(0) = 0`, `μ_H′(0) = ω_H(0)`.
pub fn solve_mu_h(profile: &FieldProfile, t_end: f64, tol: f64) -> Result<CharacteristicSolution> {
    profile.constants.validate()?;
    profile.check_field(t_end)?;
    let system = |t: f64| -> Result<(f64, f64)> {
        let w = profile.omega(t);
        Ok((0.0, 0.25 * w * w))
    };
    solve_with_system(&system, profile.omega(0.0), t_end, tol)
}

/// `μ_H` and `μ_H′` for `H = H₀ + H₁ t` from the Bessel-function solution
/// of orders `±1/4`, `±3/4` with argument `|e| H²/(2mcH₁)`.
///
/// For `H₁ < 0` the argument is negative; the quarter-order phases cancel
/// pairwise, leaving the same combination of `J(|z|)` with the sign of
/// `μ_H′` flipped.
pub fn linear_field_mu(h0: f64, h1: f64, constants: &PhysicalConstants, t: f64) -> Result<(f64, f64)> {
    constants.validate()?;
    if h1 == 0.0 {
        return Err(Error::InvalidParameter("linear-field closed form needs H1 != 0".into()));
    }
    let field = h0 + h1 * t;
    if !(field > 0.0) || !(h0 > 0.0) {
        return Err(Error::FieldSignChange { t: if h0 > 0.0 { -h0 / h1 } else { 0.0 } });
    }
    let PhysicalConstants { m, e, c, .. } = *constants;
    let scale = e.abs() / (2.0 * m * c * h1.abs());
    let z0 = scale * h0 * h0;
    let z = scale * field * field;
    let j = |nu: f64, x: f64| bessel_j(nu, x);
    let mu = PI * e.abs() * h0.powf(1.5) / (2.0_f64.powf(1.5) * m * c * h1)
        * field.sqrt()
        * (j(-0.25, z0)? * j(0.25, z)? - j(0.25, z0)? * j(-0.25, z)?);
    let mu_p = PI * e * e / (m * m * c * c * h1)
        * (0.5 * h0 * field).powf(1.5)
        * (j(0.25, z0)? * j(0.75, z)? + j(-0.25, z0)? * j(-0.75, z)?);
    Ok((mu, if h1 > 0.0 { mu_p } else { -mu_p }))
}

/// End of the interval on which the ladder's integrated-by-parts forms are
/// regular: the first zero of `μ_H` or `μ_H′`, or the end of the solution.
pub fn ladder_window(sol: &CharacteristicSolution) -> f64 {
    let mut w = sol.t_end();
    if let Some(t) = sol.first_focal_time() {
        w = w.min(t);
    }
    if let Some(t) = sol.first_slope_zero() {
        w = w.min(t);
    }
    w
}

/// The magnetic phase ladder at time `t`. The `p_x`-independent pieces
/// combine as
///
/// ```text
/// δ_H = a_H(t)/(ħ μ_H) (δF0 + p δH1)
/// ε_H = (εF0 + p εH1)/(m a_H(0))
/// κ_H = (κF0 + p κF1 + p² κH2)/(2ħm)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticPhase {
    pub t: f64,
    pub mu_h: f64,
    pub a_h: f64,
    pub a_h0: f64,
    pub field: f64,
    pub field0: f64,
    pub alpha_h: f64,
    pub beta_h: f64,
    pub gamma_h: f64,
    pub delta_f0: f64,
    pub delta_h1: f64,
    pub eps_f0: f64,
    pub eps_h1: f64,
    pub kappa_f0: f64,
    pub kappa_f1: f64,
    pub kappa_h2: f64,
}

impl MagneticPhase {
    /// The η-space phase `(α_H, …, κ_H)` at a fixed momentum.
    pub fn at_momentum(&self, constants: &PhysicalConstants, p_x: f64) -> QuadraticPhase {
        let PhysicalConstants { m, hbar, .. } = *constants;
        QuadraticPhase {
            t: self.t,
            alpha: self.alpha_h,
            beta: self.beta_h,
            gamma: self.gamma_h,
            delta: self.a_h / (hbar * self.mu_h) * (self.delta_f0 + p_x * self.delta_h1),
            epsilon: (self.eps_f0 + p_x * self.eps_h1) / (m * self.a_h0),
            kappa: (self.kappa_f0 + p_x * self.kappa_f1 + p_x * p_x * self.kappa_h2) / (2.0 * hbar * m),
        }
    }
}

/// Running integrals of the ladder on `[0, horizon]`.
pub struct MagneticEngine<'a> {
    profile: &'a FieldProfile,
    sol: &'a CharacteristicSolution,
    horizon: f64,
    delta_f0: CumulativeIntegral,
    // ∫ μ′ H′/H², without the mc/e factor.
    delta_h1: CumulativeIntegral,
    gamma: CumulativeIntegral,
    eps_force: CumulativeIntegral,
    eps_f0: CumulativeIntegral,
    eps_h1: CumulativeIntegral,
    kappa_f0: CumulativeIntegral,
    kappa_f0_force: CumulativeIntegral,
    kappa_f1: CumulativeIntegral,
    kappa_f1_force: CumulativeIntegral,
    kappa_h2: CumulativeIntegral,
    mu_field: CumulativeIntegral,
    drift: CumulativeIntegral,
    spin: CumulativeIntegral,
}

impl<'a> MagneticEngine<'a> {
    pub fn new(profile: &'a FieldProfile, sol: &'a CharacteristicSolution, horizon: f64, qtol: f64) -> Result<Self> {
        profile.constants.validate()?;
        if !(qtol > 0.0) {
            return Err(Error::InvalidParameter(format!("qtol must be positive, got {qtol}")));
        }
        let window = ladder_window(sol);
        let past_window = window < sol.t_end() && horizon >= window;
        if !(horizon > 0.0) || horizon > sol.t_end() || past_window {
            return Err(Error::OutsideValidityWindow { t: horizon, window });
        }
        profile.check_field(horizon)?;
        let k = profile.constants;
        let h1_scale = k.m * k.c / k.e;
        let w2 = |s: f64| {
            let w = profile.omega(s);
            w * w
        };
        let mp = |s: f64| sol.mu_prime(s);
        let force = |s: f64| profile.force.eval(s);
        let cum = |f: &mut dyn FnMut(f64) -> f64| CumulativeIntegral::new(f, 0.0, horizon, qtol);

        let delta_f0 = cum(&mut |s| sol.mu(s) * force(s))?;
        let delta_h1 = cum(&mut |s| {
            let field = profile.field.eval(s);
            mp(s) * profile.field.derivative(s) / (field * field)
        })?;
        let df0 = |s: f64| delta_f0.eval(s);
        let dh1 = |s: f64| h1_scale * delta_h1.eval(s);
        let gamma = cum(&mut |s| w2(s) / (mp(s) * mp(s)))?;
        let eps_force = cum(&mut |s| force(s) / mp(s))?;
        let eps_f0 = cum(&mut |s| w2(s) * df0(s) / (mp(s) * mp(s)))?;
        let eps_h1 = cum(&mut |s| w2(s) * dh1(s) / (mp(s) * mp(s)))?;
        let kappa_f0 = cum(&mut |s| w2(s) * df0(s) * df0(s) / (mp(s) * mp(s)))?;
        let kappa_f0_force = cum(&mut |s| force(s) * df0(s) / mp(s))?;
        let kappa_f1 = cum(&mut |s| w2(s) * df0(s) * dh1(s) / (mp(s) * mp(s)))?;
        let kappa_f1_force = cum(&mut |s| force(s) * dh1(s) / mp(s))?;
        let kappa_h2 = cum(&mut |s| w2(s) * dh1(s) * dh1(s) / (mp(s) * mp(s)))?;
        let mu_field = cum(&mut |s| sol.mu(s) * profile.field.eval(s))?;
        let drift = cum(&mut |s| force(s) / profile.field.eval(s))?;
        let spin = cum(&mut |s| profile.field.eval(s))?;
        Ok(MagneticEngine {
            profile,
            sol,
            horizon,
            delta_f0,
            delta_h1,
            gamma,
            eps_force,
            eps_f0,
            eps_h1,
            kappa_f0,
            kappa_f0_force,
            kappa_f1,
            kappa_f1_force,
            kappa_h2,
            mu_field,
            drift,
            spin,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t > 0.0) || t > self.horizon {
            return Err(Error::OutsideValidityWindow { t, window: self.horizon });
        }
        Ok(())
    }

    pub fn phase(&self, t: f64) -> Result<MagneticPhase> {
        self.check_time(t)?;
        let k = &self.profile.constants;
        let [mu, mu_p, _] = self.sol.eval(t);
        if mu == 0.0 {
            return Err(Error::Caustic { t });
        }
        let omega = self.profile.omega(t);
        let omega0 = self.profile.omega(0.0);
        let a_h = self.profile.a_h(t);
        let a_h0 = self.profile.a_h(0.0);
        let mm = mu * mu_p;
        let df0 = self.delta_f0.eval(t);
        let dh1 = k.m * k.c / k.e * self.delta_h1.eval(t);
        let phase = MagneticPhase {
            t,
            mu_h: mu,
            a_h,
            a_h0,
            field: self.profile.field.eval(t),
            field0: self.profile.field.eval(0.0),
            alpha_h: mu_p / (2.0 * omega * mu),
            beta_h: -a_h / (a_h0 * mu),
            gamma_h: 0.5 * omega0 * (1.0 / mm - self.gamma.eval(t)),
            delta_f0: df0,
            delta_h1: dh1,
            eps_f0: self.eps_force.eval(t) - df0 / mm + self.eps_f0.eval(t),
            eps_h1: -dh1 / mm + self.eps_h1.eval(t),
            kappa_f0: df0 * df0 / mm - self.kappa_f0.eval(t) - 2.0 * self.kappa_f0_force.eval(t),
            kappa_f1: 2.0 * (df0 * dh1 / mm - self.kappa_f1.eval(t) - self.kappa_f1_force.eval(t)),
            kappa_h2: dh1 * dh1 / mm - self.kappa_h2.eval(t),
        };
        let values = [
            phase.alpha_h,
            phase.beta_h,
            phase.gamma_h,
            phase.eps_f0,
            phase.eps_h1,
            phase.kappa_f0,
            phase.kappa_f1,
            phase.kappa_h2,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::CoefficientEvaluation {
                t,
                reason: "non-finite magnetic phase coefficient".into(),
            });
        }
        Ok(phase)
    }

    /// `δH1` from its integrated-by-parts form
    /// `e/|e| − mc μ_H′/(eH) − (e/(mc)) ∫ μ_H H`, used as a cross-check.
    pub fn delta_h1_by_parts(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let k = &self.profile.constants;
        let field = self.profile.field.eval(t);
        Ok(k.charge_sign() - k.m * k.c * self.sol.mu_prime(t) / (k.e * field) - k.e / (k.m * k.c) * self.mu_field.eval(t))
    }

    /// `∫₀ᵗ F/H`.
    pub fn drift_integral(&self, t: f64) -> f64 {
        self.drift.eval(t)
    }

    /// `∫₀ᵗ H`.
    pub fn spin_integral(&self, t: f64) -> f64 {
        self.spin.eval(t)
    }

    /// Every coefficient needed by [`eval_green3d`] at time `t`.
    pub fn propagator_coeffs(&self, t: f64) -> Result<Propagator3DCoeffs> {
        let phase = self.phase(t)?;
        let s = s_polynomials(&phase, self.profile, t)?;
        let q = discriminant_direct(&s);
        Ok(Propagator3DCoeffs {
            t,
            mu_h: phase.mu_h,
            a_h0: phase.a_h0,
            phase,
            s,
            q,
            drift_integral: self.drift_integral(t),
            spin_phase_integral: self.spin_integral(t),
        })
    }
}

/// Ladder at a single time.
pub fn magnetic_phase(
    profile: &FieldProfile,
    sol: &CharacteristicSolution,
    t: f64,
    qtol: f64,
) -> Result<MagneticPhase> {
    MagneticEngine::new(profile, sol, t, qtol)?.phase(t)
}

/// Coefficients of `S_H = S2 + p S1 + p² S0` in the physical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SPolynomials {
    pub s0: f64,
    /// `[y, y′, 1]` coefficients.
    pub s1: [f64; 3],
    /// `[y², y y′, y′², y, y′, 1]` coefficients.
    pub s2: [f64; 6],
}

impl SPolynomials {
    pub fn s1_at(&self, y: f64, yp: f64) -> f64 {
        self.s1[0] * y + self.s1[1] * yp + self.s1[2]
    }

    pub fn s2_at(&self, y: f64, yp: f64) -> f64 {
        let c = &self.s2;
        c[0] * y * y + c[1] * y * yp + c[2] * yp * yp + c[3] * y + c[4] * yp + c[5]
    }
}

/// Splits the η-space phase into powers of `p_x`.
pub fn s_polynomials(phase: &MagneticPhase, profile: &FieldProfile, t: f64) -> Result<SPolynomials> {
    if (phase.t - t).abs() > 1e-12 * t.abs().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "magnetic phase was computed at t = {}, not {t}",
            phase.t
        )));
    }
    let PhysicalConstants { m, e, c, hbar, .. } = profile.constants;
    let MagneticPhase {
        mu_h: mu,
        a_h: at,
        a_h0: a0,
        field: ht,
        field0: h0,
        alpha_h: al,
        beta_h: be,
        gamma_h: ga,
        delta_f0: df,
        delta_h1: dh,
        eps_f0: ef,
        eps_h1: eh,
        kappa_f0: kf0,
        kappa_f1: kf1,
        kappa_h2: kh,
        ..
    } = *phase;
    let s0 = c * c * al / (e * e * at * at * ht * ht)
        + c * c * be / (e * e * at * a0 * ht * h0)
        + c * c * ga / (e * e * a0 * a0 * h0 * h0)
        + c * dh / (hbar * e * mu * ht)
        + c * eh / (m * e * a0 * a0 * h0)
        + kh / (2.0 * hbar * m);
    let s1 = [
        2.0 * c * al / (e * at * at * ht) + c * be / (e * at * a0 * h0) + dh / (hbar * mu),
        c * be / (e * at * a0 * ht) + 2.0 * c * ga / (e * a0 * a0 * h0) + eh / (m * a0 * a0),
        c * df / (hbar * e * mu * ht) + c * ef / (m * e * a0 * a0 * h0) + kf1 / (2.0 * hbar * m),
    ];
    let s2 = [
        al / (at * at),
        be / (at * a0),
        ga / (a0 * a0),
        df / (hbar * mu),
        ef / (m * a0 * a0),
        kf0 / (2.0 * hbar * m),
    ];
    Ok(SPolynomials { s0, s1, s2 })
}

/// Coefficients of `Q = A y² + B y y′ + C y′² + D y + E y′ + L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discriminant {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub l: f64,
}

impl Discriminant {
    pub const NAMES: [&'static str; 6] = ["A", "B", "C", "D", "E", "L"];

    pub fn as_array(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.l]
    }

    pub fn at(&self, y: f64, yp: f64) -> f64 {
        self.a * y * y + self.b * y * yp + self.c * yp * yp + self.d * y + self.e * yp + self.l
    }
}

/// `S1² − 4 S0 S2` expanded from the S-polynomial coefficients.
pub fn discriminant_direct(s: &SPolynomials) -> Discriminant {
    let [p, r, k] = s.s1;
    let [a2, b2, c2, d2, e2, f2] = s.s2;
    let four_s0 = 4.0 * s.s0;
    Discriminant {
        a: p * p - four_s0 * a2,
        b: 2.0 * p * r - four_s0 * b2,
        c: r * r - four_s0 * c2,
        d: 2.0 * p * k - four_s0 * d2,
        e: 2.0 * r * k - four_s0 * e2,
        l: k * k - four_s0 * f2,
    }
}

/// Which version of the closed-form discriminant to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscriminantReading {
    /// Exactly as typeset. `B` carries `H(0)` where the expansion gives
    /// `H(t)` in its first two terms, and the last term of `E` carries
    /// `δF0 δH1` where the expansion gives `εF0 εH1`.
    AsPrinted,
    /// With those three factors replaced by what the expansion produces.
    Corrected,
}

/// Closed-form `A … L` in terms of the ladder.
pub fn discriminant_closed_form(
    phase: &MagneticPhase,
    constants: &PhysicalConstants,
    reading: DiscriminantReading,
) -> Discriminant {
    let PhysicalConstants { m, e, c, hbar: hb, .. } = *constants;
    let MagneticPhase {
        mu_h: mu,
        a_h: at,
        a_h0: a0,
        field: ht,
        field0: h0,
        alpha_h: al,
        beta_h: be,
        gamma_h: ga,
        delta_f0: df,
        delta_h1: dh,
        eps_f0: ef,
        eps_h1: eh,
        kappa_f0: kf0,
        kappa_f1: kf1,
        kappa_h2: kh,
        ..
    } = *phase;
    let x = be * be - 4.0 * al * ga;
    let corrected = reading == DiscriminantReading::Corrected;
    let (b_first_h, b_second_h) = if corrected { (ht * h0, ht) } else { (h0 * h0, h0) };
    let e_last = if corrected { ef * eh } else { df * dh };

    let a = c * c * x / (e * e * at * at * a0 * a0 * h0 * h0)
        + 2.0 * c * be * dh / (hb * e * mu * at * a0 * h0)
        + dh * dh / (hb * hb * mu * mu)
        - 4.0 * c * al * eh / (m * e * at * at * a0 * a0 * h0)
        - 2.0 * al * kh / (hb * m * at * at);
    let b = -2.0 * c * c * x / (e * e * at * at * a0 * a0 * b_first_h)
        - 2.0 * c * be * dh / (hb * e * mu * at * a0 * b_second_h)
        + 4.0 * c * al * eh / (m * e * at * at * a0 * a0 * ht)
        + 4.0 * c * ga * dh / (hb * e * mu * a0 * a0 * h0)
        + 2.0 * dh * eh / (hb * m * mu * a0 * a0)
        - 2.0 * c * be * eh / (m * e * at * a0.powi(3) * h0)
        - 2.0 * be * kh / (hb * m * at * a0);
    let cc = c * c * x / (e * e * at * at * a0 * a0 * ht * ht)
        + 2.0 * c * be * eh / (m * e * at * a0.powi(3) * ht)
        + eh * eh / (m * m * a0.powi(4))
        - 4.0 * c * ga * dh / (hb * e * mu * a0 * a0 * ht)
        - 4.0 * ga * kh / (2.0 * hb * m * a0 * a0);
    let d = 4.0 * c * c * al * ef / (m * e * e * at * at * a0 * a0 * ht * h0)
        + 2.0 * c * c * be * ef / (m * e * e * at * a0.powi(3) * h0 * h0)
        + 2.0 * c * (dh * ef - 2.0 * df * eh) / (hb * m * e * mu * a0 * a0 * h0)
        + 2.0 * c * al * kf1 / (hb * m * e * at * at * ht)
        + c * be * kf1 / (hb * m * e * at * a0 * h0)
        + (dh * kf1 - 2.0 * df * kh) / (hb * hb * m * mu)
        - 2.0 * c * c * be * df / (hb * e * e * mu * at * a0 * ht * h0)
        - 4.0 * c * c * ga * df / (hb * e * e * mu * a0 * a0 * h0 * h0)
        - 2.0 * c * df * dh / (hb * hb * e * mu * mu * ht);
    let ee = 2.0 * c * c * be * df / (hb * e * e * mu * at * a0 * ht * ht)
        + 4.0 * c * c * ga * df / (hb * e * e * mu * a0 * a0 * ht * h0)
        + 2.0 * c * (df * eh - 2.0 * dh * ef) / (hb * m * e * mu * a0 * a0 * ht)
        + c * be * kf1 / (hb * m * e * at * a0 * ht)
        + 2.0 * c * ga * kf1 / (hb * m * e * a0 * a0 * h0)
        + (eh * kf1 - 2.0 * ef * kh) / (hb * m * m * a0 * a0)
        - 4.0 * c * c * al * ef / (m * e * e * at * at * a0 * a0 * ht * ht)
        - 2.0 * c * c * be * ef / (m * e * e * at * a0.powi(3) * ht * h0)
        - 2.0 * c * e_last / (m * m * e * a0.powi(4) * h0);
    let l = c * c * df * df / (hb * hb * e * e * mu * mu * ht * ht)
        + c * c * ef * ef / (m * m * e * e * a0.powi(4) * h0 * h0)
        + kf1 * kf1 / (4.0 * hb * hb * m * m)
        + 2.0 * c * c * df * ef / (hb * m * e * e * mu * a0 * a0 * ht * h0)
        + c * df * kf1 / (hb * hb * m * e * mu * ht)
        + c * ef * kf1 / (hb * m * m * e * a0 * a0 * h0)
        - 2.0 * c * c * al * kf0 / (hb * m * e * e * at * at * ht * ht)
        - 2.0 * c * c * be * kf0 / (hb * m * e * e * at * a0 * ht * h0)
        - 2.0 * c * c * ga * kf0 / (hb * m * e * e * a0 * a0 * h0 * h0)
        - 2.0 * c * dh * kf0 / (hb * hb * m * e * mu * ht)
        - 2.0 * c * eh * kf0 / (hb * m * m * e * a0 * a0 * h0)
        - kf0 * kh / (hb * hb * m * m);
    Discriminant { a, b, c: cc, d, e: ee, l }
}

/// Per-coefficient comparison of a closed form against the expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantComparison {
    pub reading: DiscriminantReading,
    pub direct: Discriminant,
    pub closed_form: Discriminant,
    /// `|closed − direct| / max(|direct_i|, max_j |direct_j|, tiny)` per coefficient.
    pub relative_errors: [f64; 6],
}

impl DiscriminantComparison {
    pub fn max_error(&self) -> f64 {
        self.relative_errors.iter().copied().fold(0.0, f64::max)
    }

    /// Names of the coefficients whose error exceeds `tol`.
    pub fn failures(&self, tol: f64) -> Vec<&'static str> {
        Discriminant::NAMES
            .iter()
            .zip(&self.relative_errors)
            .filter(|(_, &err)| !(err <= tol))
            .map(|(n, _)| *n)
            .collect()
    }
}

pub fn compare_discriminants(
    s: &SPolynomials,
    phase: &MagneticPhase,
    constants: &PhysicalConstants,
    reading: DiscriminantReading,
) -> DiscriminantComparison {
    let direct = discriminant_direct(s);
    let closed_form = discriminant_closed_form(phase, constants, reading);
    let d = direct.as_array();
    let cf = closed_form.as_array();
    let norm = d.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1e-300);
    let mut relative_errors = [0.0; 6];
    for i in 0..6 {
        relative_errors[i] = (cf[i] - d[i]).abs() / norm;
    }
    DiscriminantComparison {
        reading,
        direct,
        closed_form,
        relative_errors,
    }
}

/// Both evaluation paths for `A … L`. Returns the direct expansion; fails
/// if the corrected closed form disagrees with it beyond `tol`.
pub fn discriminant_coeffs(
    s: &SPolynomials,
    phase: &MagneticPhase,
    constants: &PhysicalConstants,
    tol: f64,
) -> Result<Discriminant> {
    let cmp = compare_discriminants(s, phase, constants, DiscriminantReading::Corrected);
    let d = cmp.direct.as_array();
    let cf = cmp.closed_form.as_array();
    for i in 0..6 {
        if !(cmp.relative_errors[i] <= tol) {
            return Err(Error::DiscriminantMismatch {
                coefficient: Discriminant::NAMES[i].into(),
                closed_form: cf[i],
                expansion: d[i],
            });
        }
    }
    Ok(cmp.direct)
}

/// Everything needed to evaluate the 3D kernel at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Propagator3DCoeffs {
    pub t: f64,
    pub mu_h: f64,
    pub a_h0: f64,
    pub phase: MagneticPhase,
    pub s: SPolynomials,
    pub q: Discriminant,
    /// `∫₀ᵗ F/H`.
    pub drift_integral: f64,
    /// `∫₀ᵗ H`.
    pub spin_phase_integral: f64,
}

/// Free propagator along the field, `√(m/(2πiħt)) exp(im Δz²/(2ħt))`.
pub fn free_z_propagator(dz: f64, t: f64, m: f64, hbar: f64) -> Complex64 {
    let amp = (Complex64::new(0.0, 2.0 * PI * hbar * t) / m).sqrt().inv();
    amp * Complex64::cis(m * dz * dz / (2.0 * hbar * t))
}

/// `G(r, r′, t)` from the assembled coefficients.
pub fn eval_green3d(
    coeffs: &Propagator3DCoeffs,
    r: [f64; 3],
    r_prime: [f64; 3],
    t: f64,
    profile: &FieldProfile,
) -> Result<Complex64> {
    if (coeffs.t - t).abs() > 1e-12 * t.abs().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "coefficients were computed at t = {}, not {t}",
            coeffs.t
        )));
    }
    let k = &profile.constants;
    let s0 = coeffs.s.s0;
    if s0 == 0.0 || !s0.is_finite() {
        return Err(Error::DegenerateGaussian { t, s0 });
    }
    if coeffs.mu_h == 0.0 {
        return Err(Error::Caustic { t });
    }
    let i = Complex64::i();
    let (y, yp) = (r[1], r_prime[1]);
    let shift = r[0] - r_prime[0] - k.c / k.e * coeffs.drift_integral;
    let s1 = coeffs.s.s1_at(y, yp);
    let q = coeffs.q.at(y, yp);
    let hb = k.hbar;
    let z_factor = free_z_propagator(r[2] - r_prime[2], t, k.m, hb);
    let gauss = (Complex64::new(0.0, PI) / s0).sqrt();
    let kernel_amp = (Complex64::new(0.0, 2.0 * PI) * coeffs.mu_h).sqrt().inv();
    let exponent = i * (k.spin_coupling() * coeffs.spin_phase_integral / hb)
        + shift * shift / (4.0 * i * hb * hb * s0)
        + q / (4.0 * i * s0)
        + s1 * shift / (2.0 * i * hb * s0);
    Ok(z_factor / (2.0 * PI * hb * coeffs.a_h0) * gauss * kernel_amp * exponent.exp())
}

/// The `η`-equation as a general coefficient set:
/// `a = b = ω_H/2`, `c = H′/(2H)`, `d = 0`, `f = a_H F/ħ`, `g = y₀′/a_H`.
pub fn reduce_to_1d(profile: &FieldProfile, p_x: f64) -> Result<CoefficientSet> {
    profile.constants.validate()?;
    let PhysicalConstants { m, e, c, hbar, .. } = profile.constants;
    let field = profile.field.clone();
    let half_omega = field.clone().scaled(e.abs() / (2.0 * m * c));
    let drift = TimeFunction::Product(vec![
        TimeFunction::constant(0.5),
        field.clone().derivative_fn(),
        field.clone().powf(-1.0),
    ]);
    let force = if profile.force.is_identically_zero() {
        TimeFunction::zero()
    } else {
        TimeFunction::Product(vec![
            TimeFunction::constant((hbar * c / e.abs()).sqrt() / hbar),
            field.clone().powf(-0.5),
            profile.force.clone(),
        ])
    };
    let shear = if p_x == 0.0 {
        TimeFunction::zero()
    } else {
        TimeFunction::Product(vec![
            TimeFunction::constant(c * p_x / e * (e.abs() / (hbar * c)).sqrt()),
            field.clone().derivative_fn(),
            field.clone().powf(-1.5),
        ])
    };
    let t_max = profile.field_sign_change(1e3).unwrap_or(f64::INFINITY);
    let set = CoefficientSet {
        a: half_omega.clone(),
        b: half_omega,
        c: drift,
        d: TimeFunction::zero(),
        f: force,
        g: shear,
        h: None,
        t_max,
        units_mode: UnitsMode::Physical,
    };
    set.validate()?;
    Ok(set)
}

/// Finite-difference defect `iħ G_t − Ĥ G` of a 3D kernel at `(r, t)`,
/// with `Ĥ = (p_x + eHy/c)²/2m + p_y²/2m + p_z²/2m − (μσ/s) H − yF`.
pub fn pde_residual_3d<K>(profile: &FieldProfile, kernel: K, r: [f64; 3], t: f64, h: f64) -> Result<Complex64>
where
    K: Fn([f64; 3], f64) -> Result<Complex64>,
{
    if !(h > 0.0) || t - h <= 0.0 {
        return Err(Error::StencilDomain(format!("need h > 0 and t - h > 0 (t = {t}, h = {h})")));
    }
    let k = &profile.constants;
    let i = Complex64::i();
    let g = kernel(r, t)?;
    let g_t = (kernel(r, t + h)? - kernel(r, t - h)?) / (2.0 * h);
    let mut lap = Complex64::new(0.0, 0.0);
    let mut g_x = Complex64::new(0.0, 0.0);
    for axis in 0..3 {
        let mut plus = r;
        let mut minus = r;
        plus[axis] += h;
        minus[axis] -= h;
        let (gp, gm) = (kernel(plus, t)?, kernel(minus, t)?);
        lap += (gp - 2.0 * g + gm) / (h * h);
        if axis == 0 {
            g_x = (gp - gm) / (2.0 * h);
        }
    }
    let field = profile.field.eval(t);
    let force = profile.force.eval(t);
    let y = r[1];
    let vec_pot = k.e * field * y / k.c;
    let h_g = -k.hbar * k.hbar / (2.0 * k.m) * lap - i * k.hbar * vec_pot / k.m * g_x
        + vec_pot * vec_pot / (2.0 * k.m) * g
        - k.spin_coupling() * field * g
        - y * force * g;
    Ok(i * k.hbar * g_t - h_g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_constants() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn constant_field_ladder() {
        let profile = FieldProfile::constant(1.0, 0.0, unit_constants()).unwrap();
        let sol = solve_mu_h(&profile, 1.5, 1e-12).unwrap();
        let t = 0.7;
        let p = magnetic_phase(&profile, &sol, t, 1e-12).unwrap();
        let cot = 1.0 / t.tan();
        assert!((p.alpha_h - 0.5 * cot).abs() < 1e-9);
        assert!((p.gamma_h - 0.5 * cot).abs() < 1e-9);
        assert!((p.beta_h + 1.0 / t.sin()).abs() < 1e-9);
        for v in [p.delta_f0, p.delta_h1, p.eps_f0, p.eps_h1, p.kappa_f0, p.kappa_f1, p.kappa_h2] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_force_delta() {
        let profile = FieldProfile::constant(1.0, 0.8, unit_constants()).unwrap();
        let sol = solve_mu_h(&profile, 1.5, 1e-12).unwrap();
        let t = 1.1;
        let p = magnetic_phase(&profile, &sol, t, 1e-12).unwrap();
        assert!((p.delta_f0 - 0.8 * (1.0 - t.cos())).abs() < 1e-9);
    }

    #[test]
    fn constant_field_s_polynomials() {
        let k = PhysicalConstants { hbar: 0.7, m: 1.3, ..unit_constants() };
        let profile = FieldProfile::constant(2.0, 0.0, k).unwrap();
        let w = profile.omega(0.0);
        let sol = solve_mu_h(&profile, 1.0, 1e-12).unwrap();
        let t = 0.4 / w;
        let p = magnetic_phase(&profile, &sol, t, 1e-12).unwrap();
        let s = s_polynomials(&p, &profile, t).unwrap();
        let tan = (0.5 * w * t).tan();
        assert!((s.s0 + tan / (k.m * k.hbar * w)).abs() < 1e-9);
        assert!((s.s1[0] - s.s1[1]).abs() < 1e-9);
        assert!((s.s1[0] + k.charge_sign() * tan / k.hbar).abs() < 1e-9);
        assert_eq!(s.s1[2], 0.0);
        let q = discriminant_direct(&s);
        let inv = 1.0 / (k.hbar * k.hbar);
        assert!((q.a - inv).abs() < 1e-9 && (q.b + 2.0 * inv).abs() < 1e-9 && (q.c - inv).abs() < 1e-9);
    }

    // Brute-force check of the S-split: substitute η, η′ into the
    // quadratic phase at three momenta and recover the p-polynomial.
    #[test]
    fn s_polynomials_match_substitution() {
        let k = PhysicalConstants { e: 1.7, hbar: 0.8, ..unit_constants() };
        let profile = FieldProfile::linear(1.0, 0.4, 0.6, k).unwrap();
        let sol = solve_mu_h(&profile, 1.0, 1e-12).unwrap();
        let t = 0.6;
        let p = magnetic_phase(&profile, &sol, t, 1e-12).unwrap();
        let s = s_polynomials(&p, &profile, t).unwrap();
        let (y, yp) = (0.37, -0.81);
        let action = |px: f64| {
            let q = p.at_momentum(&k, px);
            let eta = (y - profile.y0(t, px)) / profile.a_h(t);
            let eta_p = (yp - profile.y0(0.0, px)) / profile.a_h(0.0);
            q.action(eta, eta_p)
        };
        for px in [-1.3, 0.0, 2.1] {
            let poly = s.s2_at(y, yp) + px * s.s1_at(y, yp) + px * px * s.s0;
            assert!((poly - action(px)).abs() < 1e-10 * (1.0 + poly.abs()), "p = {px}");
        }
    }

    #[test]
    fn corrected_closed_form_matches_expansion() {
        let k = PhysicalConstants { e: -1.3, hbar: 0.9, m: 1.1, c: 1.2, ..unit_constants() };
        let profile = FieldProfile::new(
            TimeFunction::linear(1.0, 0.5),
            TimeFunction::cosine(0.3, 0.5, 1.0),
            k,
        )
        .unwrap();
        let sol = solve_mu_h(&profile, 1.0, 1e-12).unwrap();
        let p = magnetic_phase(&profile, &sol, 0.5, 1e-12).unwrap();
        let s = s_polynomials(&p, &profile, 0.5).unwrap();
        let cmp = compare_discriminants(&s, &p, &k, DiscriminantReading::Corrected);
        assert!(cmp.max_error() < 1e-12, "{:?}", cmp.relative_errors);
        assert!(discriminant_coeffs(&s, &p, &k, 1e-10).is_ok());
        let printed = compare_discriminants(&s, &p, &k, DiscriminantReading::AsPrinted);
        assert_eq!(printed.failures(1e-7), vec!["B", "E"]);
    }

    #[test]
    fn delta_h1_forms_agree() {
        let profile = FieldProfile::linear(1.0, 0.5, 0.0, unit_constants()).unwrap();
        let sol = solve_mu_h(&profile, 1.0, 1e-12).unwrap();
        let engine = MagneticEngine::new(&profile, &sol, 0.9, 1e-12).unwrap();
        for t in [0.2, 0.5, 0.9] {
            let direct = engine.phase(t).unwrap().delta_h1;
            let parts = engine.delta_h1_by_parts(t).unwrap();
            assert!((direct - parts).abs() < 1e-8, "t = {t}: {direct} vs {parts}");
        }
    }

    #[test]
    fn linear_field_closed_form_matches_integration() {
        for (h0, h1) in [(1.0, 0.5), (1.0, -0.3), (2.0, 1.5)] {
            let k = unit_constants();
            let profile = FieldProfile::linear(h0, h1, 0.0, k).unwrap();
            let sol = solve_mu_h(&profile, 1.0, 1e-12).unwrap();
            let (mu0, mu0p) = linear_field_mu(h0, h1, &k, 0.0).unwrap();
            assert!(mu0.abs() < 1e-12);
            assert!((mu0p - profile.omega(0.0)).abs() < 1e-12);
            for i in 1..=10 {
                let t = i as f64 / 10.0;
                let (mu, mu_p) = linear_field_mu(h0, h1, &k, t).unwrap();
                assert!((mu - sol.mu(t)).abs() < 1e-9, "H1 = {h1}, t = {t}");
                assert!((mu_p - sol.mu_prime(t)).abs() < 1e-9, "H1 = {h1}, t = {t}");
            }
        }
    }

    #[test]
    fn reduced_set_has_flat_tau() {
        let profile = FieldProfile::linear(1.0, 0.5, 0.3, unit_constants()).unwrap();
        let cs = reduce_to_1d(&profile, 0.7).unwrap();
        for t in [0.0, 0.3, 0.9] {
            let (tau, sigma) = cs.tau_sigma(t).unwrap();
            let w = profile.omega(t);
            assert!(tau.abs() < 1e-13);
            assert!((4.0 * sigma - w * w).abs() < 1e-12);
        }
        let constant = FieldProfile::constant(1.0, 0.0, unit_constants()).unwrap();
        let cs = reduce_to_1d(&constant, 0.7).unwrap();
        assert_eq!(cs.c.eval(0.4), 0.0);
        assert_eq!(cs.g.eval(0.4), 0.0);
    }

    #[test]
    fn field_must_stay_positive() {
        let profile = FieldProfile::linear(1.0, -1.0, 0.0, unit_constants()).unwrap();
        let err = solve_mu_h(&profile, 2.0, 1e-10).unwrap_err();
        assert_eq!(err.code(), "FIELD_SIGN_CHANGE");
    }

    #[test]
    fn z_factor_modulus() {
        let g = free_z_propagator(0.0, 1.0, 1.0, 1.0);
        assert!((g.norm() - (2.0 * PI).powf(-0.5)).abs() < 1e-15);
    }
}
