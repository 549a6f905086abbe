//! Closed-form propagators used as references. Nothing here touches the
//! characteristic solver or the phase engine.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::magnetic3d::PhysicalConstants;

/// Reference kernels with their parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum OracleKernel {
    FreeSp1 { hbar: f64, m: f64 },
    ConstantForceSp2 { force: f64, hbar: f64, m: f64 },
    ShoSp3 { omega: f64, hbar: f64, m: f64 },
    ModifiedOscSp7,
    MagneticConstCmf4 { field: f64, constants: PhysicalConstants },
}

impl OracleKernel {
    pub fn id(&self) -> &'static str {
        match self {
            OracleKernel::FreeSp1 { .. } => "free_sp1",
            OracleKernel::ConstantForceSp2 { .. } => "constant_force_sp2",
            OracleKernel::ShoSp3 { .. } => "sho_sp3",
            OracleKernel::ModifiedOscSp7 => "modified_osc_sp7",
            OracleKernel::MagneticConstCmf4 { .. } => "magnetic_const_cmf4",
        }
    }
}

/// Evaluation point: `(x, y, t)` on the line or `(r, r′, t)` in space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleArgs {
    Line { x: f64, y: f64, t: f64 },
    Space { r: [f64; 3], r_prime: [f64; 3], t: f64 },
}

pub fn eval_oracle(kernel: &OracleKernel, args: OracleArgs) -> Result<Complex64> {
    match (*kernel, args) {
        (OracleKernel::FreeSp1 { hbar, m }, OracleArgs::Line { x, y, t }) => free_sp1(x, y, t, hbar, m),
        (OracleKernel::ConstantForceSp2 { force, hbar, m }, OracleArgs::Line { x, y, t }) => {
            constant_force_sp2(x, y, t, force, hbar, m)
        }
        (OracleKernel::ShoSp3 { omega, hbar, m }, OracleArgs::Line { x, y, t }) => sho_sp3(x, y, t, omega, hbar, m),
        (OracleKernel::ModifiedOscSp7, OracleArgs::Line { x, y, t }) => modified_osc_sp7(x, y, t),
        (OracleKernel::MagneticConstCmf4 { field, constants }, OracleArgs::Space { r, r_prime, t }) => {
            magnetic_const_cmf4(r, r_prime, t, field, &constants)
        }
        (k, _) => Err(Error::InvalidParameter(format!(
            "oracle {} called with the wrong argument kind",
            k.id()
        ))),
    }
}

fn positive_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("oracle time must be positive, got {t}")))
    }
}

fn inv_sqrt_i(re_scale: f64) -> Complex64 {
    // 1/√(i·s) for s > 0.
    Complex64::from_polar(re_scale.sqrt().recip(), -PI / 4.0)
}

/// `√(m/(2πiħt)) exp(im(x − y)²/(2ħt))`.
pub fn free_sp1(x: f64, y: f64, t: f64, hbar: f64, m: f64) -> Result<Complex64> {
    positive_time(t)?;
    let amp = inv_sqrt_i(2.0 * PI * hbar * t / m);
    Ok(amp * Complex64::cis(m * (x - y) * (x - y) / (2.0 * hbar * t)))
}

/// Free kernel times `exp(iF(x + y)t/(2ħ) − iF²t³/(24ħm))`.
pub fn constant_force_sp2(x: f64, y: f64, t: f64, force: f64, hbar: f64, m: f64) -> Result<Complex64> {
    let free = free_sp1(x, y, t, hbar, m)?;
    let extra = force * (x + y) * t / (2.0 * hbar) - force * force * t.powi(3) / (24.0 * hbar * m);
    Ok(free * Complex64::cis(extra))
}

/// Mehler kernel
/// `√(mω/(2πiħ sin ωt)) exp(imω((x² + y²) cos ωt − 2xy)/(2ħ sin ωt))`.
pub fn sho_sp3(x: f64, y: f64, t: f64, omega: f64, hbar: f64, m: f64) -> Result<Complex64> {
    positive_time(t)?;
    let (s, c) = (omega * t).sin_cos();
    if s.abs() < 1e-14 {
        return Err(Error::Caustic { t });
    }
    let amp = (Complex64::new(0.0, 2.0 * PI * hbar * s) / (m * omega)).sqrt().inv();
    Ok(amp * Complex64::cis(m * omega * ((x * x + y * y) * c - 2.0 * x * y) / (2.0 * hbar * s)))
}

/// Kernel of the modified oscillator,
/// `(2πiμ)^(−1/2) exp(((x² − y²) sin t sinh t + 2xy − (x² + y²) cos t cosh t)/(2iμ))`
/// with `μ = cos t sinh t + sin t cosh t`.
pub fn modified_osc_sp7(x: f64, y: f64, t: f64) -> Result<Complex64> {
    positive_time(t)?;
    let (s, c) = t.sin_cos();
    let (sh, ch) = (t.sinh(), t.cosh());
    let mu = c * sh + s * ch;
    if mu.abs() < 1e-14 {
        return Err(Error::Caustic { t });
    }
    let amp = (Complex64::new(0.0, 2.0 * PI * mu)).sqrt().inv();
    let num = (x * x - y * y) * s * sh + 2.0 * x * y - (x * x + y * y) * c * ch;
    // exp(num/(2iμ)) = exp(−i num/(2μ)).
    Ok(amp * Complex64::cis(-num / (2.0 * mu)))
}

/// Constant-field 3D kernel
/// `G₀(z − z′) exp(iμσHt/(ħs)) mω/(4πiħ sin(ωt/2))
///  exp((imω/4ħ)(((x−x′)² + (y−y′)²) cot(ωt/2) − 2(e/|e|)(x−x′)(y+y′)))`.
pub fn magnetic_const_cmf4(
    r: [f64; 3],
    r_prime: [f64; 3],
    t: f64,
    field: f64,
    k: &PhysicalConstants,
) -> Result<Complex64> {
    positive_time(t)?;
    let omega = k.e.abs() * field / (k.m * k.c);
    let half = 0.5 * omega * t;
    let s = half.sin();
    if s.abs() < 1e-14 {
        return Err(Error::Caustic { t });
    }
    let cot = half.cos() / s;
    let [dx, dy, dz] = [r[0] - r_prime[0], r[1] - r_prime[1], r[2] - r_prime[2]];
    let z_amp = inv_sqrt_i(2.0 * PI * k.hbar * t / k.m);
    let z_part = z_amp * Complex64::cis(k.m * dz * dz / (2.0 * k.hbar * t));
    let spin = if k.s == 0.0 { 0.0 } else { k.mu_spin * k.sigma * field * t / (k.hbar * k.s) };
    let plane_amp = Complex64::new(0.0, -k.m * omega / (4.0 * PI * k.hbar * s));
    let sign = k.e.signum();
    let plane_phase = k.m * omega / (4.0 * k.hbar) * ((dx * dx + dy * dy) * cot - 2.0 * sign * dx * (r[1] + r_prime[1]));
    Ok(z_part * Complex64::cis(spin) * plane_amp * Complex64::cis(plane_phase))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_modulus() {
        let g = free_sp1(0.3, 0.3, 1.0, 1.0, 1.0).unwrap();
        assert!((g.norm() - (2.0 * PI).powf(-0.5)).abs() < 1e-15);
        assert!((g.arg() + PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn sho_quarter_period() {
        let g = sho_sp3(1.0, 1.0, PI / 2.0, 1.0, 1.0, 1.0).unwrap();
        let expected = Complex64::new(0.0, 2.0 * PI).sqrt().inv() * Complex64::cis(-1.0);
        assert!((g - expected).norm() < 1e-14);
    }

    #[test]
    fn modified_oscillator_origin() {
        let t = 0.5_f64;
        let mu = t.cos() * t.sinh() + t.sin() * t.cosh();
        let g = modified_osc_sp7(0.0, 0.0, t).unwrap();
        let expected = Complex64::new(0.0, 2.0 * PI * mu).sqrt().inv();
        assert!((g - expected).norm() < 1e-15);
    }

    #[test]
    fn focal_times_are_rejected() {
        assert_eq!(sho_sp3(0.0, 0.0, PI, 1.0, 1.0, 1.0).unwrap_err().code(), "CAUSTIC");
        let k = PhysicalConstants::default();
        assert!(magnetic_const_cmf4([0.0; 3], [0.0; 3], 2.0 * PI, 1.0, &k).is_err());
    }

    #[test]
    fn wrong_argument_kind() {
        let k = OracleKernel::ModifiedOscSp7;
        let args = OracleArgs::Space { r: [0.0; 3], r_prime: [0.0; 3], t: 1.0 };
        assert!(eval_oracle(&k, args).is_err());
    }
}
