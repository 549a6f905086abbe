//! Bessel functions `J_ν(x)` of the quarter orders `±1/4`, `±3/4`.
//!
//! The power series is summed in double-double arithmetic up to
//! `x = 25`, where plain `f64` summation would lose about `log10(max term)`
//! digits to cancellation. Beyond that the Hankel expansion, truncated at
//! its smallest term, is accurate to well below 1e-15.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const GAMMA_QUARTER: f64 = 3.625_609_908_221_908_3;
const GAMMA_THREE_QUARTERS: f64 = 1.225_416_702_465_177_6;
const SERIES_LIMIT: f64 = 25.0;
const MAX_TERMS: usize = 200;

/// `Γ(ν + 1)` for the supported orders.
fn gamma_shifted(nu: f64) -> Option<f64> {
    const ORDERS: [(f64, f64); 4] = [
        (0.25, GAMMA_QUARTER / 4.0),
        (-0.25, GAMMA_THREE_QUARTERS),
        (0.75, 0.75 * GAMMA_THREE_QUARTERS),
        (-0.75, GAMMA_QUARTER),
    ];
    ORDERS.iter().find(|(n, _)| *n == nu).map(|&(_, g)| g)
}

/// `J_ν(x)` for `ν ∈ {±1/4, ±3/4}` and `x > 0`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    let Some(gamma) = gamma_shifted(nu) else {
        return Err(Error::InvalidParameter(format!(
            "Bessel order must be one of ±1/4, ±3/4, got {nu}"
        )));
    };
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!("Bessel argument must be positive, got {x}")));
    }
    if x <= SERIES_LIMIT {
        series(nu, gamma, x)
    } else {
        hankel(nu, x)
    }
}

/// `dJ_ν/dx = −J_{ν+1} + (ν/x) J_ν` for `ν ∈ {−3/4, −1/4}` and
/// `J_{ν−1} − (ν/x) J_ν` for `ν ∈ {1/4, 3/4}`; both stay within the
/// supported orders.
pub fn bessel_j_prime(nu: f64, x: f64) -> Result<f64> {
    let value = bessel_j(nu, x)?;
    if nu < 0.0 {
        Ok(-bessel_j(nu + 1.0, x)? + nu / x * value)
    } else {
        Ok(bessel_j(nu - 1.0, x)? - nu / x * value)
    }
}

fn series(nu: f64, gamma: f64, x: f64) -> Result<f64> {
    let half = 0.5 * x;
    let q = DoubleDouble::square(half).neg();
    let mut term = DoubleDouble::from(1.0);
    let mut sum = term;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term = term.mul(q).div(kf * (kf + nu));
        sum = sum.add(term);
        if term.hi.abs() < 1e-34 * sum.hi.abs().max(1e-300) && kf > half {
            return Ok(half.powf(nu) / gamma * sum.to_f64());
        }
    }
    Err(Error::BesselNonConvergence { order: nu, x })
}

fn hankel(nu: f64, x: f64) -> Result<f64> {
    let mu = 4.0 * nu * nu;
    let mut p = 0.0_f64;
    let mut q = 0.0_f64;
    let mut term = 1.0_f64;
    let mut previous = f64::INFINITY;
    // Summed until the terms start growing or drop below roundoff.
    for k in 0..MAX_TERMS {
        if term.abs() > previous || term.abs() < 1e-17 * p.abs() {
            break;
        }
        let signed = if k % 4 < 2 { term } else { -term };
        if k % 2 == 0 {
            p += signed
        } else {
            q += signed
        }
        previous = term.abs();
        let odd = (2 * k + 1) as f64;
        term *= (mu - odd * odd) / ((k + 1) as f64 * 8.0 * x);
    }
    if !(p.is_finite() && q.is_finite()) {
        return Err(Error::BesselNonConvergence { order: nu, x });
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    Ok((2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin()))
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl From<f64> for DoubleDouble {
    fn from(hi: f64) -> Self {
        DoubleDouble { hi, lo: 0.0 }
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    fn renorm(hi: f64, lo: f64) -> Self {
        let (s, e) = two_sum(hi, lo);
        DoubleDouble { hi: s, lo: e }
    }

    fn square(a: f64) -> Self {
        let (p, e) = two_prod(a, a);
        DoubleDouble { hi: p, lo: e }
    }

    fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }

    fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        Self::renorm(s, e + self.lo + o.lo)
    }

    fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        Self::renorm(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn div(self, d: f64) -> Self {
        let q = self.hi / d;
        let (p, e) = two_prod(q, d);
        let r = (self.hi - p - e + self.lo) / d;
        Self::renorm(q, r)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // 40-digit reference values.
    const REFERENCE: [(f64, [f64; 7]); 4] = [
        (
            0.25,
            [
                0.741_656_570_157_146_06,
                0.270_337_464_516_051_69,
                -0.280_972_065_761_376_01,
                -0.064_236_853_713_884_239,
                -0.018_643_002_051_005_340,
                0.178_298_338_534_274_90,
                0.054_911_752_342_599_732,
            ],
        ),
        (
            -0.25,
            [
                1.059_599_593_527_523_2,
                -0.129_479_117_443_058_36,
                -0.043_874_518_227_060_090,
                0.111_638_288_051_598_08,
                0.148_422_354_667_163_34,
                0.130_154_010_426_903_48,
                -0.041_481_122_770_854_005,
            ],
        ),
        (
            0.75,
            [
                0.371_105_519_878_429_20,
                0.505_942_578_959_715_49,
                -0.356_900_309_108_274_07,
                -0.200_276_289_790_660_12,
                -0.171_839_433_374_114_66,
                0.123_651_813_996_719_54,
                0.118_885_845_312_303_83,
            ],
        ),
        (
            -0.75,
            [
                0.589_924_225_090_266_70,
                -0.488_843_759_075_749_83,
                0.233_561_208_633_274_78,
                0.223_608_748_855_738_93,
                0.229_072_977_097_133_82,
                0.003_541_918_608_971_808_1,
                -0.113_924_685_289_724_73,
            ],
        ),
    ];
    const ARGS: [f64; 7] = [0.5, 2.25, 5.0, 11.9, 12.1, 20.0, 40.0];

    #[test]
    fn matches_reference_values() {
        for (nu, values) in REFERENCE {
            for (x, expected) in ARGS.iter().zip(values) {
                let got = bessel_j(nu, *x).unwrap();
                assert!((got - expected).abs() < 1e-14, "J_{nu}({x}) = {got}, expected {expected}");
            }
        }
    }

    #[test]
    fn series_and_asymptotic_agree_at_the_switch() {
        for nu in [0.25, -0.25, 0.75, -0.75] {
            let g = gamma_shifted(nu).unwrap();
            for x in [25.0, 30.0] {
                let s = series(nu, g, x).unwrap();
                let h = hankel(nu, x).unwrap();
                assert!((s - h).abs() < 1e-13, "nu = {nu}, x = {x}: {s} vs {h}");
            }
        }
    }

    #[test]
    fn small_argument_leading_term() {
        let x = 1e-6;
        let lead = (x / 2.0_f64).powf(0.25) / gamma_shifted(0.25).unwrap();
        assert!((bessel_j(0.25, x).unwrap() / lead - 1.0).abs() < 1e-6);
    }

    #[test]
    fn wronskian() {
        for x in [0.1, 1.0, 3.7, 11.0, 18.0, 33.0] {
            let w = bessel_j(0.25, x).unwrap() * bessel_j_prime(-0.25, x).unwrap()
                - bessel_j(-0.25, x).unwrap() * bessel_j_prime(0.25, x).unwrap();
            let expected = -2.0 * (PI / 4.0).sin() / (PI * x);
            assert!((w - expected).abs() < 1e-13 * (1.0 + expected.abs()), "x = {x}");
        }
    }

    #[test]
    fn unsupported_orders_are_rejected() {
        assert!(bessel_j(0.5, 1.0).is_err());
        assert!(bessel_j(0.25, 0.0).is_err());
    }
}
