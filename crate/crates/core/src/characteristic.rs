//! The characteristic function `μ(t)`: solution of
//! `μ″ − τ(t) μ′ + 4σ(t) μ = 0` with `μ(0) = 0`, `μ′(0) = 2a(0)`.

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientSet, Preset};
use crate::error::{Error, Result};
use crate::ode::{integrate_second_order, DenseTrajectory, OdeOptions, SecondOrderSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Numeric,
    ClosedForm,
}

/// Exact characteristic functions of the presets, in natural units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    /// `μ = slope · t`.
    Linear { slope: f64 },
    /// `μ = sin(ω t)/ω`.
    Sine { omega: f64 },
    /// `μ = cos t sinh t + sin t cosh t`.
    ModifiedOscillator,
}

impl ClosedForm {
    pub fn eval(self, t: f64) -> [f64; 3] {
        match self {
            ClosedForm::Linear { slope } => [slope * t, slope, 0.0],
            ClosedForm::Sine { omega } => {
                let (s, c) = (omega * t).sin_cos();
                [s / omega, c, -omega * s]
            }
            ClosedForm::ModifiedOscillator => {
                let (s, c) = t.sin_cos();
                let (sh, ch) = (t.sinh(), t.cosh());
                [c * sh + s * ch, 2.0 * c * ch, 2.0 * (c * sh - s * ch)]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Numeric(DenseTrajectory),
    Closed(ClosedForm),
}

/// Dense `μ`, `μ′` on `[0, T]` with the zeros of `μ` (focal times) and of
/// `μ′`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicSolution {
    t_end: f64,
    focal_times: Vec<f64>,
    slope_zeros: Vec<f64>,
    source: Source,
    repr: Repr,
}

impl CharacteristicSolution {
    pub fn domain(&self) -> (f64, f64) {
        (0.0, self.t_end)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn focal_times(&self) -> &[f64] {
        &self.focal_times
    }

    /// Zeros of `μ′` in `(0, T]`.
    pub fn slope_zeros(&self) -> &[f64] {
        &self.slope_zeros
    }

    /// `(μ, μ′, μ″)` at `t`.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        match &self.repr {
            Repr::Numeric(traj) => traj.eval(t),
            Repr::Closed(cf) => cf.eval(t),
        }
    }

    pub fn mu(&self, t: f64) -> f64 {
        self.eval(t)[0]
    }

    pub fn mu_prime(&self, t: f64) -> f64 {
        self.eval(t)[1]
    }

    pub fn mu_second(&self, t: f64) -> f64 {
        self.eval(t)[2]
    }

    pub fn first_focal_time(&self) -> Option<f64> {
        self.focal_times.first().copied()
    }

    pub fn first_slope_zero(&self) -> Option<f64> {
        self.slope_zeros.first().copied()
    }

    /// Right end of the interval `(0, window)` on which `μ ≠ 0`.
    pub fn focal_window(&self) -> f64 {
        self.first_focal_time().unwrap_or(self.t_end)
    }

    /// Number of accepted integration steps (zero for closed forms).
    pub fn step_count(&self) -> usize {
        match &self.repr {
            Repr::Numeric(traj) => traj.nodes().len() - 1,
            Repr::Closed(_) => 0,
        }
    }
}

/// Solves the characteristic equation of `cs` on `[0, T]`.
///
/// Fails when `a(t)` vanishes inside `[0, T]` (use [`characteristic_horizon`]
/// to cap `T` first) or when the integrator cannot make progress.
pub fn solve_characteristic(cs: &CoefficientSet, t_end: f64, tol: f64) -> Result<CharacteristicSolution> {
    if !(t_end > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "characteristic solve needs T > 0 and tol > 0 (T = {t_end}, tol = {tol})"
        )));
    }
    if t_end > cs.t_max {
        return Err(Error::OutsideDomain { t: t_end, t_max: cs.t_max });
    }
    if let Some(ts) = cs.first_singularity(t_end) {
        return Err(Error::CoefficientEvaluation {
            t: ts,
            reason: "a(t) vanishes, so tau(t) has a pole inside [0, T]".into(),
        });
    }
    let a0 = cs.a.eval(0.0);
    let system = |t: f64| cs.tau_sigma(t);
    solve_with_system(&system, 2.0 * a0, t_end, tol)
}

/// Solves `μ″ − τ μ′ + 4σ μ = 0`, `μ(0) = 0`, `μ′(0) = initial_slope` for an
/// arbitrary coefficient source.
pub fn solve_with_system<S: SecondOrderSystem>(
    system: &S,
    initial_slope: f64,
    t_end: f64,
    tol: f64,
) -> Result<CharacteristicSolution> {
    let opts = OdeOptions {
        tol,
        max_step: (t_end / 20.0).min(0.05),
        ..OdeOptions::default()
    };
    let traj = integrate_second_order(system, 0.0, initial_slope, t_end, opts)?;
    let focal_times = traj.zeros();
    let slope_zeros = traj.derivative_zeros();
    Ok(CharacteristicSolution {
        t_end,
        focal_times,
        slope_zeros,
        source: Source::Numeric,
        repr: Repr::Numeric(traj),
    })
}

/// Largest `T' ≤ T` free of coefficient singularities: stops just short of
/// the first zero of `a(t)`.
pub fn characteristic_horizon(cs: &CoefficientSet, t_end: f64) -> f64 {
    let t_end = t_end.min(cs.t_max);
    match cs.first_singularity(t_end) {
        Some(ts) => ts * (1.0 - 1e-6),
        None => t_end,
    }
}

/// Exact characteristic function of a preset on `[0, T]`.
pub fn closed_form_characteristic(preset: Preset, params: &[f64], t_end: f64) -> Result<CharacteristicSolution> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidParameter(format!("T must be positive, got {t_end}")));
    }
    // Validates the parameters exactly as the preset constructor does.
    let cs = crate::coefficients::preset_set(preset, params)?;
    let form = match preset {
        Preset::Free | Preset::ConstantForce => ClosedForm::Linear { slope: 2.0 * cs.a.eval(0.0) },
        Preset::Sho => ClosedForm::Sine { omega: params.first().copied().unwrap_or(1.0) },
        Preset::ModifiedOscillator => ClosedForm::ModifiedOscillator,
        Preset::Custom => return Err(Error::NoClosedForm(preset.name().into())),
    };
    let (focal_times, slope_zeros) = match form {
        ClosedForm::Linear { .. } => (Vec::new(), Vec::new()),
        ClosedForm::Sine { omega } => {
            let period = std::f64::consts::PI / omega;
            let focal = (1..).map(|k| k as f64 * period).take_while(|&t| t <= t_end).collect();
            let slope = (0..)
                .map(|k| (k as f64 + 0.5) * period)
                .take_while(|&t| t <= t_end)
                .collect();
            (focal, slope)
        }
        ClosedForm::ModifiedOscillator => (
            bracket_roots(|t| form.eval(t)[0], |t| form.eval(t)[1], t_end),
            bracket_roots(|t| form.eval(t)[1], |t| form.eval(t)[2], t_end),
        ),
    };
    Ok(CharacteristicSolution {
        t_end,
        focal_times,
        slope_zeros,
        source: Source::ClosedForm,
        repr: Repr::Closed(form),
    })
}

/// Smallest zero of `μ` in `(0, T]`, if any.
pub fn first_focal_time(sol: &CharacteristicSolution) -> Option<f64> {
    sol.first_focal_time()
}

fn bracket_roots(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, t_end: f64) -> Vec<f64> {
    let samples = 4096;
    let mut roots = Vec::new();
    let mut prev_t = t_end * 1e-6;
    let mut prev = f(prev_t);
    for k in 1..=samples {
        let t = t_end * k as f64 / samples as f64;
        let v = f(t);
        if v == 0.0 {
            roots.push(t);
        } else if prev != 0.0 && v.signum() != prev.signum() {
            let (mut lo, mut hi) = (prev_t, t);
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if f(mid).signum() == prev.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut root = 0.5 * (lo + hi);
            let slope = df(root);
            if slope != 0.0 {
                root -= f(root) / slope;
            }
            roots.push(root);
        }
        prev_t = t;
        prev = v;
    }
    roots
}
