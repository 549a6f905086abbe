//! Quadrature rules: adaptive Gauss–Kronrod, Gauss–Legendre nodes, and
//! piecewise-Chebyshev cumulative integrals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_226_126,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Weights of the embedded 10-point Gauss rule (nodes XGK[1], XGK[3], ...).
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One 21-point Gauss–Kronrod panel: `(estimate, error estimate)`.
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut abs_sum = WGK[10] * fc.abs();
    let mut fv = [(0.0, 0.0); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
        fv[j] = (f1, f2);
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let result = kronrod * half;
    let resasc = asc * half.abs();
    let resabs = abs_sum * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

const MAX_PANELS: usize = 4000;

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]` to
/// absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (value, err) = gk21(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, err });
    let mut total = value;
    let mut total_err = err;
    let mut count = 1;
    while total_err > tol {
        if count >= MAX_PANELS || !total.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                a,
                b,
                estimate: total_err,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            return Err(Error::QuadratureNonConvergence {
                a,
                b,
                estimate: total_err,
            });
        }
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
        count += 1;
        // Re-sum occasionally so cancellation in the running totals cannot drift.
        if count % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.err).sum();
        }
    }
    Ok(heap.iter().map(|p| p.value).sum())
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed Gauss–Legendre rule mapped onto arbitrary intervals.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Mapped `(node, weight)` pairs on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

const CHEB_N: usize = 32;
const MAX_DEPTH: u32 = 48;
const MAX_CHEB_PANELS: usize = 100_000;
// Tail coefficients below this multiple of eps · (coefficient sum) are
// evaluation noise; interpolated integrands sit well above 8 eps.
const NOISE_FLOOR: f64 = 1024.0 * f64::EPSILON;

#[derive(Debug, Clone)]
struct ChebPanel {
    a: f64,
    b: f64,
    offset: f64,
    // Chebyshev coefficients of the antiderivative on the panel, in the
    // reference variable, vanishing at the left edge.
    anti: Vec<f64>,
}

/// Running integral `s ↦ ∫_a^s f` on `[a, b]`, built once from adaptive
/// Chebyshev panels and then evaluated in O(panel degree) per query.
#[derive(Debug, Clone)]
pub struct CumulativeIntegral {
    a: f64,
    b: f64,
    panels: Vec<ChebPanel>,
}

impl CumulativeIntegral {
    /// Builds the running integral of `f` over `[a, b]` to absolute
    /// tolerance `tol` on the whole interval.
    pub fn new<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Self> {
        if !(b >= a) {
            return Err(Error::InvalidParameter(format!(
                "cumulative integral needs a <= b, got [{a}, {b}]"
            )));
        }
        if a == b {
            return Ok(CumulativeIntegral { a, b, panels: Vec::new() });
        }
        let len = b - a;
        let mut panels = Vec::new();
        let mut stack = vec![(a, b, 0u32)];
        let mut worst = 0.0_f64;
        while let Some((pa, pb, depth)) = stack.pop() {
            let coeffs = chebyshev_coefficients(&mut f, pa, pb);
            let scale: f64 = coeffs.iter().map(|c| c.abs()).sum();
            let tail: f64 = coeffs[CHEB_N - 3..].iter().map(|c| c.abs()).sum();
            let half = 0.5 * (pb - pa);
            let est = tail * half;
            let budget = (tol * (pb - pa) / len).max(NOISE_FLOOR * scale * half);
            if !scale.is_finite() {
                return Err(Error::QuadratureNonConvergence { a: pa, b: pb, estimate: f64::INFINITY });
            }
            if est <= budget || depth >= MAX_DEPTH {
                if est > budget {
                    worst = worst.max(est);
                    if est > tol {
                        return Err(Error::QuadratureNonConvergence { a: pa, b: pb, estimate: est });
                    }
                }
                panels.push(ChebPanel {
                    a: pa,
                    b: pb,
                    offset: 0.0,
                    anti: antiderivative(&coeffs, half),
                });
            } else {
                if panels.len() + stack.len() >= MAX_CHEB_PANELS {
                    return Err(Error::QuadratureNonConvergence { a: pa, b: pb, estimate: est });
                }
                let mid = 0.5 * (pa + pb);
                // Right half first so the left half is processed next.
                stack.push((mid, pb, depth + 1));
                stack.push((pa, mid, depth + 1));
            }
        }
        let mut acc = 0.0;
        for p in &mut panels {
            p.offset = acc;
            acc += clenshaw(&p.anti, 1.0);
        }
        let _ = worst;
        Ok(CumulativeIntegral { a, b, panels })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// `∫_a^s f`. Queries slightly outside the domain extrapolate the end
    /// panel's polynomial.
    pub fn eval(&self, s: f64) -> f64 {
        if self.panels.is_empty() {
            return 0.0;
        }
        let i = self
            .panels
            .partition_point(|p| p.b < s)
            .min(self.panels.len() - 1);
        let p = &self.panels[i];
        let x = (2.0 * s - p.a - p.b) / (p.b - p.a);
        p.offset + clenshaw(&p.anti, x)
    }

    pub fn total(&self) -> f64 {
        self.eval(self.b)
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }
}

fn chebyshev_coefficients<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Vec<f64> {
    let n = CHEB_N;
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let values: Vec<f64> = (0..n)
        .map(|k| {
            let theta = PI * (k as f64 + 0.5) / n as f64;
            f(c + h * theta.cos())
        })
        .collect();
    (0..n)
        .map(|j| {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(k, v)| v * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                .sum();
            let c = 2.0 * s / n as f64;
            if j == 0 {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

// Antiderivative in the reference variable, scaled by the panel half-width,
// normalized to vanish at x = -1. Input uses f = Σ c_j T_j (c_0 halved).
fn antiderivative(coeffs: &[f64], half: f64) -> Vec<f64> {
    let n = coeffs.len();
    let get = |j: usize| -> f64 {
        if j == 0 {
            2.0 * coeffs[0]
        } else if j < n {
            coeffs[j]
        } else {
            0.0
        }
    };
    let mut anti = vec![0.0; n + 1];
    for (j, slot) in anti.iter_mut().enumerate().skip(1) {
        *slot = half * (get(j - 1) - get(j + 1)) / (2.0 * j as f64);
    }
    // Value at -1 is Σ C_j (-1)^j; choose C_0 to cancel it.
    let at_minus_one: f64 = anti
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, c)| if j % 2 == 0 { *c } else { -*c })
        .sum();
    anti[0] = -at_minus_one;
    anti
}

fn clenshaw(coeffs: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + x * b1 - b2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 12, 20] {
            let rule = GaussRule::new(n);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
                let got = rule.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                assert!((got - exact).abs() < 1e-14, "n={n} deg={deg}: {got}");
            }
        }
    }

    #[test]
    fn adaptive_integration_of_peaked_and_oscillatory() {
        let v = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0_f64 / 1e-2).atan();
        assert!((v - exact).abs() < 1e-8 * exact);
        let v = integrate(|x| (50.0 * x).cos(), 0.0, 3.0, 1e-12).unwrap();
        assert!((v - (150.0_f64).sin() / 50.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_integration_reports_divergence() {
        let err = integrate(|x| 1.0 / x, 0.0, 1.0, 1e-10).unwrap_err();
        assert_eq!(err.code(), "QUADRATURE_NON_CONVERGENCE");
    }

    #[test]
    fn cumulative_integral_matches_antiderivative() {
        let ci = CumulativeIntegral::new(|x| (3.0 * x).cos() * (-x).exp(), 0.0, 4.0, 1e-13).unwrap();
        let anti = |x: f64| ((-x).exp() * (3.0 * (3.0 * x).sin() - (3.0 * x).cos()) + 1.0) / 10.0;
        for k in 0..=400 {
            let s = 0.01 * k as f64;
            assert!((ci.eval(s) - anti(s)).abs() < 1e-13, "s={s}");
        }
        assert_eq!(ci.eval(0.0).abs() < 1e-16, true);
    }

    #[test]
    fn cumulative_integral_refines_near_steep_features() {
        let ci = CumulativeIntegral::new(|x| 1.0 / (1e-3 + x * x), -1.0, 1.0, 1e-10).unwrap();
        let exact = |s: f64| ((s / 1e-3_f64.sqrt()).atan() + (1.0 / 1e-3_f64.sqrt()).atan()) / 1e-3_f64.sqrt();
        for s in [-0.5, 0.0, 0.01, 0.7, 1.0] {
            assert!((ci.eval(s) - exact(s)).abs() < 1e-9, "s={s}");
        }
        assert!(ci.panel_count() > 2);
    }
}
