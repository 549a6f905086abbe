//! Initial value problems: convolution with the Green function, and an
//! independent Crank–Nicolson integrator used as a cross-check.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characteristic::CharacteristicSolution;
use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::green1d::PhaseEngine;
use crate::quadrature::gauss_legendre;

pub const MIN_POINTS: usize = 16;
/// Largest edge modulus, relative to the peak, accepted by [`propagate`].
pub const EDGE_DECAY_LIMIT: f64 = 1e-12;

/// Complex samples on a uniform grid `x_min = x_0 < … < x_{N−1} = x_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveFunction1D {
    pub x_min: f64,
    pub x_max: f64,
    pub values: Vec<Complex64>,
    pub t: f64,
}

impl WaveFunction1D {
    pub fn new(x_min: f64, x_max: f64, values: Vec<Complex64>, t: f64) -> Result<Self> {
        if values.len() < MIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "wave function needs at least {MIN_POINTS} points, got {}",
                values.len()
            )));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidParameter(format!("invalid grid [{x_min}, {x_max}]")));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidParameter("wave function values must be finite".into()));
        }
        Ok(WaveFunction1D { x_min, x_max, values, t })
    }

    /// Samples `f` on `n` uniform points.
    pub fn from_fn<F: Fn(f64) -> Complex64>(x_min: f64, x_max: f64, n: usize, t: f64, f: F) -> Result<Self> {
        let h = (x_max - x_min) / (n.max(2) - 1) as f64;
        let values = (0..n).map(|i| f(x_min + i as f64 * h)).collect();
        Self::new(x_min, x_max, values, t)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.values.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    /// Trapezoid-rule L² norm.
    pub fn norm(&self) -> f64 {
        trapezoid_norm_sqr(self.values.iter().map(|v| v.norm_sqr()), self.len(), self.dx()).sqrt()
    }

    fn same_grid(&self, other: &WaveFunction1D) -> Result<()> {
        let scale = self.x_max.abs().max(self.x_min.abs()).max(1.0);
        if self.len() != other.len()
            || (self.x_min - other.x_min).abs() > 1e-12 * scale
            || (self.x_max - other.x_max).abs() > 1e-12 * scale
        {
            return Err(Error::GridMismatch(format!(
                "[{}, {}] x {} vs [{}, {}] x {}",
                self.x_min,
                self.x_max,
                self.len(),
                other.x_min,
                other.x_max,
                other.len()
            )));
        }
        if (self.t - other.t).abs() > 1e-12 * self.t.abs().max(1.0) {
            return Err(Error::GridMismatch(format!("times differ: {} vs {}", self.t, other.t)));
        }
        Ok(())
    }
}

fn trapezoid_norm_sqr(sq: impl Iterator<Item = f64>, n: usize, h: f64) -> f64 {
    sq.enumerate()
        .map(|(i, v)| if i == 0 || i + 1 == n { 0.5 * v } else { v })
        .sum::<f64>()
        * h
}

/// Trapezoid-rule `‖u − v‖₂`. Grids and times must match.
pub fn l2_error(u: &WaveFunction1D, v: &WaveFunction1D) -> Result<f64> {
    u.same_grid(v)?;
    let sq = u.values.iter().zip(&v.values).map(|(a, b)| (a - b).norm_sqr());
    Ok(trapezoid_norm_sqr(sq, u.len(), u.dx()).sqrt())
}

/// Diagnostics of one convolution run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub norm_initial: f64,
    pub norm_final: f64,
    /// Crude bound `|G| · edge modulus · domain length` on the error from
    /// cutting the integral at the grid edges.
    pub truncation_bound: f64,
    /// Largest number of sub-panels used on one grid cell.
    pub max_subpanels: usize,
}

const NODES_PER_PANEL: usize = 12;
// Panels span at most this many oscillations, giving ≥ 8 nodes per period.
const OSCILLATIONS_PER_PANEL: f64 = NODES_PER_PANEL as f64 / 8.0;

/// `ψ(x, t) = ∫ G(x, y, t) ψ₀(y) dy` on the grid of `psi0`.
pub fn propagate(
    cs: &CoefficientSet,
    sol: &CharacteristicSolution,
    psi0: &WaveFunction1D,
    t: f64,
    qtol: f64,
) -> Result<WaveFunction1D> {
    propagate_with_report(cs, sol, psi0, t, qtol).map(|(psi, _)| psi)
}

/// [`propagate`] plus run diagnostics.
pub fn propagate_with_report(
    cs: &CoefficientSet,
    sol: &CharacteristicSolution,
    psi0: &WaveFunction1D,
    t: f64,
    qtol: f64,
) -> Result<(WaveFunction1D, PropagationReport)> {
    let n = psi0.len();
    let peak = psi0.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let edge = psi0.values[0].norm().max(psi0.values[n - 1].norm());
    let limit = EDGE_DECAY_LIMIT * peak;
    if edge > limit {
        return Err(Error::InsufficientDecay { edge, limit });
    }
    let engine = PhaseEngine::new(cs, sol, t, qtol)?;
    let green = engine.green(t)?;
    let amp = green.amplitude()?;
    let p = green.phase;

    let h = psi0.dx();
    let vals = &psi0.values;
    let support = support_range(vals, peak);
    let (nodes, weights) = gauss_legendre(NODES_PER_PANEL);
    // Nodes and weights on [0, 1].
    let unit: Vec<(f64, f64)> = nodes.iter().zip(&weights).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
    let unit_lagrange: Vec<[f64; 4]> = unit.iter().map(|&(u, _)| lagrange4(u)).collect();
    let sample = |j: isize| -> Complex64 {
        if j < 0 || j as usize >= n {
            Complex64::new(0.0, 0.0)
        } else {
            vals[j as usize]
        }
    };

    let results: Vec<(Complex64, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = psi0.x(i);
            let lin = p.beta * x + p.epsilon;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut max_m = 0;
            let Some((lo, hi)) = support else {
                return (acc, 0);
            };
            for j in lo..hi {
                let y0 = psi0.x_min + j as f64 * h;
                let k0 = (lin + 2.0 * p.gamma * y0).abs();
                let k1 = (lin + 2.0 * p.gamma * (y0 + h)).abs();
                let cycles = k0.max(k1) * h / (2.0 * std::f64::consts::PI);
                let m = ((cycles / OSCILLATIONS_PER_PANEL).ceil() as usize).max(1);
                max_m = max_m.max(m);
                let ji = j as isize;
                let pts = [sample(ji - 1), sample(ji), sample(ji + 1), sample(ji + 2)];
                let mut cell = Complex64::new(0.0, 0.0);
                for s in 0..m {
                    for (k, &(uk, wk)) in unit.iter().enumerate() {
                        let (u, lw) = if m == 1 {
                            (uk, unit_lagrange[k])
                        } else {
                            let u = (s as f64 + uk) / m as f64;
                            (u, lagrange4(u))
                        };
                        let psi = pts[0] * lw[0] + pts[1] * lw[1] + pts[2] * lw[2] + pts[3] * lw[3];
                        let y = y0 + u * h;
                        cell += psi * Complex64::cis(lin * y + p.gamma * y * y) * wk;
                    }
                }
                acc += cell * (h / m as f64);
            }
            let outer = Complex64::cis(p.alpha * x * x + p.delta * x + p.kappa);
            (amp * outer * acc, max_m)
        })
        .collect();

    let max_subpanels = results.iter().map(|r| r.1).max().unwrap_or(0);
    let values: Vec<Complex64> = results.into_iter().map(|r| r.0).collect();
    let psi = WaveFunction1D::new(psi0.x_min, psi0.x_max, values, t)?;
    let report = PropagationReport {
        norm_initial: psi0.norm(),
        norm_final: psi.norm(),
        truncation_bound: amp.norm() * edge * (psi0.x_max - psi0.x_min),
        max_subpanels,
    };
    Ok((psi, report))
}

// Cells [lo, hi) whose stencils touch non-negligible samples.
fn support_range(vals: &[Complex64], peak: f64) -> Option<(usize, usize)> {
    let cut = 1e-16 * peak;
    let first = vals.iter().position(|v| v.norm() > cut)?;
    let last = vals.iter().rposition(|v| v.norm() > cut)?;
    Some((first.saturating_sub(2), (last + 2).min(vals.len() - 1)))
}

// Cubic Lagrange weights for nodes at -1, 0, 1, 2 evaluated at u ∈ [0, 1].
fn lagrange4(u: f64) -> [f64; 4] {
    [
        -u * (u - 1.0) * (u - 2.0) / 6.0,
        (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
        -(u + 1.0) * u * (u - 2.0) / 2.0,
        (u + 1.0) * u * (u - 1.0) / 6.0,
    ]
}

/// Crank–Nicolson integration of the linear equation from `psi0.t` to
/// `psi0.t + t` with zero Dirichlet edges. The drift term is discretized
/// as `−i c (x ∂x + ½) − i (d − c/2)`, which keeps the scheme unitary
/// whenever `d = c/2`.
pub fn crank_nicolson(cs: &CoefficientSet, psi0: &WaveFunction1D, t: f64, dt: f64) -> Result<WaveFunction1D> {
    if !(dt > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("need dt > 0 and t >= 0 (dt = {dt}, t = {t})")));
    }
    let n = psi0.len();
    let h = psi0.dx();
    let xs = psi0.grid();
    let steps = (t / dt).ceil().max(1.0) as usize;
    let tau = t / steps as f64;
    let i = Complex64::i();
    let mut psi = psi0.values.clone();
    psi[0] = Complex64::new(0.0, 0.0);
    psi[n - 1] = Complex64::new(0.0, 0.0);
    let m = n - 2;
    let mut lower = vec![Complex64::new(0.0, 0.0); m];
    let mut diag = vec![Complex64::new(0.0, 0.0); m];
    let mut upper = vec![Complex64::new(0.0, 0.0); m];
    let mut rhs = vec![Complex64::new(0.0, 0.0); m];
    let mut scratch = vec![Complex64::new(0.0, 0.0); m];

    for step in 0..steps {
        let tm = psi0.t + (step as f64 + 0.5) * tau;
        let v = cs.values(tm);
        // Rows of the discrete Hamiltonian H (i ψ_t = H ψ), interior only.
        for r in 0..m {
            let j = r + 1;
            let x = xs[j];
            let hl = -v.a / (h * h) + i * v.c * (x + xs[j - 1]) / (4.0 * h) - i * v.g / (2.0 * h);
            let hd = 2.0 * v.a / (h * h) + v.b * x * x - i * (v.d - 0.5 * v.c) - v.f * x;
            let hu = -v.a / (h * h) - i * v.c * (x + xs[j + 1]) / (4.0 * h) + i * v.g / (2.0 * h);
            let half = i * (0.5 * tau);
            lower[r] = half * hl;
            diag[r] = 1.0 + half * hd;
            upper[r] = half * hu;
            rhs[r] = (1.0 - half * hd) * psi[j] - half * hl * psi[j - 1] - half * hu * psi[j + 1];
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs, &mut scratch)?;
        psi[1..n - 1].copy_from_slice(&rhs);
    }
    WaveFunction1D::new(psi0.x_min, psi0.x_max, psi, psi0.t + t)
}

// Thomas algorithm; `rhs` is overwritten with the solution.
fn solve_tridiagonal(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &mut [Complex64],
    scratch: &mut [Complex64],
) -> Result<()> {
    let m = diag.len();
    let mut pivot = diag[0];
    if pivot.norm() == 0.0 {
        return Err(Error::SingularSystem { row: 0 });
    }
    scratch[0] = upper[0] / pivot;
    rhs[0] /= pivot;
    for r in 1..m {
        pivot = diag[r] - lower[r] * scratch[r - 1];
        if pivot.norm() == 0.0 {
            return Err(Error::SingularSystem { row: r });
        }
        scratch[r] = upper[r] / pivot;
        rhs[r] = (rhs[r] - lower[r] * rhs[r - 1]) / pivot;
    }
    for r in (0..m - 1).rev() {
        let next = rhs[r + 1];
        rhs[r] -= scratch[r] * next;
    }
    Ok(())
}

/// Normalized Gaussian `π^(−1/4) exp(−(x − x0)²/2 + i k0 x)`.
pub fn gaussian(x: f64, x0: f64, k0: f64) -> Complex64 {
    let amp = std::f64::consts::PI.powf(-0.25) * (-(x - x0) * (x - x0) / 2.0).exp();
    Complex64::from_polar(amp, k0 * x)
}
