//! Dormand–Prince 5(4) integration of linear second-order equations
//! `y″ = τ(t) y′ − 4σ(t) y` with quintic Hermite dense output.

use crate::error::{Error, Result};

/// Coefficients of a linear second-order equation `y″ − τ y′ + 4σ y = 0`.
pub trait SecondOrderSystem {
    /// `(τ(t), σ(t))`.
    fn tau_sigma(&self, t: f64) -> Result<(f64, f64)>;
}

impl<F> SecondOrderSystem for F
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    fn tau_sigma(&self, t: f64) -> Result<(f64, f64)> {
        self(t)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            tol: 1e-10,
            max_step: 0.05,
            max_steps: 1_000_000,
        }
    }
}

/// Accepted step end: `t`, `y`, `y′`, `y″`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub t: f64,
    pub y: f64,
    pub dy: f64,
    pub ddy: f64,
}

/// Piecewise quintic Hermite interpolant through accepted steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTrajectory {
    nodes: Vec<Node>,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y″ = τ y′ − 4σ y` from `(0, y0, dy0)` to `t_end`.
pub fn integrate_second_order<S: SecondOrderSystem>(
    system: &S,
    y0: f64,
    dy0: f64,
    t_end: f64,
    opts: OdeOptions,
) -> Result<DenseTrajectory> {
    if !(opts.tol > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ODE needs tol > 0 and t_end > 0 (tol = {}, t_end = {t_end})",
            opts.tol
        )));
    }
    let rhs = |t: f64, y: [f64; 2]| -> Result<[f64; 2]> {
        let (tau, sigma) = system.tau_sigma(t)?;
        Ok([y[1], tau * y[1] - 4.0 * sigma * y[0]])
    };

    let mut t = 0.0;
    let mut y = [y0, dy0];
    let mut k1 = rhs(t, y)?;
    let mut nodes = vec![Node { t, y: y[0], dy: y[1], ddy: k1[1] }];

    // Initial step from the usual scale heuristic.
    let scale = |v: [f64; 2]| [opts.tol + opts.tol * v[0].abs(), opts.tol + opts.tol * v[1].abs()];
    let sc = scale(y);
    let d0 = rms(y, sc);
    let d1 = rms(k1, sc);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(opts.max_step).min(t_end);

    let h_min = 1e-14 * t_end.max(1.0);
    let mut steps = 0;
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        steps += 1;
        if t + h > t_end {
            h = t_end - t;
        }
        let stage = |c: f64, w: [f64; 2]| -> Result<[f64; 2]> { rhs(t + c * h, w) };
        let add = |ks: &[([f64; 2], f64)]| -> [f64; 2] {
            let mut out = y;
            for (k, a) in ks {
                out[0] += h * a * k[0];
                out[1] += h * a * k[1];
            }
            out
        };
        let k2 = stage(C2, add(&[(k1, A21)]))?;
        let k3 = stage(C3, add(&[(k1, A31), (k2, A32)]))?;
        let k4 = stage(C4, add(&[(k1, A41), (k2, A42), (k3, A43)]))?;
        let k5 = stage(C5, add(&[(k1, A51), (k2, A52), (k3, A53), (k4, A54)]))?;
        let k6 = stage(1.0, add(&[(k1, A61), (k2, A62), (k3, A63), (k4, A64), (k5, A65)]))?;
        let y_new = add(&[(k1, B1), (k3, B3), (k4, B4), (k5, B5), (k6, B6)]);
        let k7 = rhs(t + h, y_new)?;
        let mut err = [0.0; 2];
        for i in 0..2 {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let sc = [
            opts.tol + opts.tol * y[0].abs().max(y_new[0].abs()),
            opts.tol + opts.tol * y[1].abs().max(y_new[1].abs()),
        ];
        let err_norm = rms(err, sc);
        if !err_norm.is_finite() {
            h *= 0.2;
            if h < h_min {
                return Err(Error::StepSizeUnderflow { t, h });
            }
            continue;
        }
        if err_norm <= 1.0 {
            t = if (t_end - (t + h)).abs() <= 1e-15 * t_end { t_end } else { t + h };
            y = y_new;
            k1 = k7;
            nodes.push(Node { t, y: y[0], dy: y[1], ddy: k1[1] });
        }
        let factor = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(opts.max_step);
        if h < h_min && t < t_end {
            return Err(Error::StepSizeUnderflow { t, h });
        }
    }
    Ok(DenseTrajectory { nodes })
}

fn rms(v: [f64; 2], sc: [f64; 2]) -> f64 {
    (((v[0] / sc[0]).powi(2) + (v[1] / sc[1]).powi(2)) / 2.0).sqrt()
}

impl DenseTrajectory {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn t_end(&self) -> f64 {
        self.nodes.last().map_or(0.0, |n| n.t)
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.nodes.len();
        self.nodes
            .partition_point(|node| node.t <= t)
            .saturating_sub(1)
            .min(n.saturating_sub(2))
    }

    /// `(y, y′, y″)` at `t` from the quintic Hermite interpolant.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        if self.nodes.len() == 1 {
            let n = self.nodes[0];
            return [n.y, n.dy, n.ddy];
        }
        let i = self.segment(t);
        hermite5(&self.nodes[i], &self.nodes[i + 1], t)
    }

    /// Zeros of `y` in `(0, t_end]` (excluding a zero at the left end), each
    /// refined by bisection on the dense output to `1e-12` and one Newton
    /// step.
    pub fn zeros(&self) -> Vec<f64> {
        self.sign_changes(0)
    }

    /// Zeros of `y′` in `(0, t_end]`.
    pub fn derivative_zeros(&self) -> Vec<f64> {
        self.sign_changes(1)
    }

    fn sign_changes(&self, component: usize) -> Vec<f64> {
        let value = |n: &Node| if component == 0 { n.y } else { n.dy };
        let mut out = Vec::new();
        for w in self.nodes.windows(2) {
            let (l, r) = (&w[0], &w[1]);
            let (vl, vr) = (value(l), value(r));
            if l.t == 0.0 && component == 0 {
                // y(0) = 0 is the initial condition, not a focal point; look
                // for a sign change strictly inside the first step.
                let mid = 0.5 * (l.t + r.t);
                let vm = self.eval(mid)[component];
                if vm.signum() != vr.signum() && vr != 0.0 {
                    out.push(self.refine(component, mid, r.t));
                }
                continue;
            }
            if vr == 0.0 {
                out.push(r.t);
            } else if vl != 0.0 && vl.signum() != vr.signum() {
                out.push(self.refine(component, l.t, r.t));
            }
        }
        // A zero that lands on the right end may leave a tiny residue of
        // either sign; accept it when one Newton step reaches the end.
        if let Some(last) = self.nodes.last() {
            let (v, slope) = if component == 0 { (last.y, last.dy) } else { (last.dy, last.ddy) };
            let scale = self.nodes.iter().map(|n| value(n).abs()).fold(0.0, f64::max);
            let fresh = out.last().is_none_or(|s| (s - last.t).abs() >= 1e-8);
            if fresh && v != 0.0 && slope != 0.0 && v.abs() <= 1e-8 * scale {
                let root = last.t - v / slope;
                if (root - last.t).abs() <= 1e-8 * last.t.max(1.0) {
                    out.push(root.min(last.t));
                }
            }
        }
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        out
    }

    fn refine(&self, component: usize, mut lo: f64, mut hi: f64) -> f64 {
        let f = |t: f64| self.eval(t)[component];
        let flo = f(lo).signum();
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == flo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        let slope = self.eval(root)[component + 1];
        if slope != 0.0 {
            let polished = root - f(root) / slope;
            if (polished - root).abs() <= 1e-12 {
                return polished;
            }
        }
        root
    }
}

fn hermite5(l: &Node, r: &Node, t: f64) -> [f64; 3] {
    let h = r.t - l.t;
    let s = (t - l.t) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    // Basis functions and their first two derivatives in s.
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    let h3 = 0.5 * s3 - s4 + 0.5 * s5;
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;

    let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d2 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
    let d3 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
    let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;

    let e0 = -60.0 * s + 180.0 * s2 - 120.0 * s3;
    let e1 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
    let e2 = 1.0 - 9.0 * s + 18.0 * s2 - 10.0 * s3;
    let e3 = 3.0 * s - 12.0 * s2 + 10.0 * s3;
    let e4 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
    let e5 = 60.0 * s - 180.0 * s2 + 120.0 * s3;

    let (y0, p0, q0) = (l.y, h * l.dy, h * h * l.ddy);
    let (y1, p1, q1) = (r.y, h * r.dy, h * h * r.ddy);
    let y = h0 * y0 + h1 * p0 + h2 * q0 + h3 * q1 + h4 * p1 + h5 * y1;
    let dy = (d0 * y0 + d1 * p0 + d2 * q0 + d3 * q1 + d4 * p1 + d5 * y1) / h;
    let ddy = (e0 * y0 + e1 * p0 + e2 * q0 + e3 * q1 + e4 * p1 + e5 * y1) / (h * h);
    [y, dy, ddy]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_quintics() {
        let p = |t: f64| 1.0 - 2.0 * t + 0.5 * t.powi(3) + 0.25 * t.powi(5);
        let dp = |t: f64| -2.0 + 1.5 * t * t + 1.25 * t.powi(4);
        let ddp = |t: f64| 3.0 * t + 5.0 * t.powi(3);
        let node = |t: f64| Node { t, y: p(t), dy: dp(t), ddy: ddp(t) };
        let (l, r) = (node(0.3), node(1.1));
        for k in 0..=20 {
            let t = 0.3 + 0.04 * k as f64;
            let [y, dy, ddy] = hermite5(&l, &r, t);
            assert!((y - p(t)).abs() < 1e-13);
            assert!((dy - dp(t)).abs() < 1e-12);
            assert!((ddy - ddp(t)).abs() < 1e-11);
        }
    }

    #[test]
    fn harmonic_oscillator_trajectory() {
        let sys = |_t: f64| Ok((0.0, 0.25));
        let traj = integrate_second_order(&sys, 0.0, 1.0, 7.0, OdeOptions::default()).unwrap();
        for k in 0..=700 {
            let t = 0.01 * k as f64;
            let [y, dy, ddy] = traj.eval(t);
            assert!((y - t.sin()).abs() < 1e-9, "t={t}");
            assert!((dy - t.cos()).abs() < 1e-9, "t={t}");
            assert!((ddy + t.sin()).abs() < 1e-7, "t={t}");
        }
        let zeros = traj.zeros();
        assert_eq!(zeros.len(), 2);
        assert!((zeros[0] - std::f64::consts::PI).abs() < 1e-10);
        assert!((zeros[1] - 2.0 * std::f64::consts::PI).abs() < 1e-10);
        let dz = traj.derivative_zeros();
        assert!((dz[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn failing_coefficients_propagate() {
        let sys = |t: f64| {
            if t > 0.5 {
                Err(Error::DegenerateDiffusion { t })
            } else {
                Ok((0.0, 0.0))
            }
        };
        let err = integrate_second_order(&sys, 0.0, 1.0, 1.0, OdeOptions::default()).unwrap_err();
        assert_eq!(err.code(), "DEGENERATE_DIFFUSION");
    }
}
