use proptest::prelude::*;

use quadprop::characteristic::solve_characteristic;
use quadprop::coefficients::make_preset;
use quadprop::green1d::phase_coefficients;
use quadprop::magnetic3d::bessel::{bessel_j, bessel_j_prime};
use quadprop::magnetic3d::{
    compare_discriminants, magnetic_phase, s_polynomials, solve_mu_h, DiscriminantReading, FieldProfile,
    PhysicalConstants,
};
use quadprop::nls::{blowup_time, nls_kernel_solution, nls_simple_solution, xi_s, NLSParams};
use quadprop::oracles::{free_sp1, sho_sp3};
use quadprop::Complex64;

fn nls_params() -> impl Strategy<Value = NLSParams> {
    (0.0..3.0f64, -2.0..2.0f64, 0.1..3.0f64, -2.0..2.0f64, prop::array::uniform6(-2.0..2.0f64)).prop_map(
        |(s, h, mu0, mu1, [beta0, gamma0, delta0, eps0, kappa0, y])| NLSParams {
            s,
            h,
            mu0,
            mu1,
            beta0,
            gamma0,
            delta0,
            eps0,
            kappa0,
            phi: 0.3,
            y,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simple_solution_modulus(p in nls_params(), frac in 0.0..0.99f64, x in -5.0..5.0f64) {
        let t = frac * blowup_time(&p).unwrap_or(4.0).min(4.0);
        let got = nls_simple_solution(&p, x, t).unwrap().norm();
        let expected = p.mu(t).powf(-0.5);
        prop_assert!((got - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn blowup_time_is_where_mu_vanishes(mu0 in 0.1..5.0f64, mu1 in -5.0..-0.01f64) {
        let p = NLSParams { mu0, mu1, ..NLSParams::default() };
        let t0 = blowup_time(&p).unwrap();
        prop_assert!((mu0 + t0 * mu1).abs() <= 1e-14 * mu0);
        prop_assert!(nls_simple_solution(&p, 0.0, t0).is_err());
    }

    #[test]
    fn xi_vanishes_at_origin_and_is_monotone(p in nls_params()) {
        prop_assert_eq!(xi_s(&p, 0.0).unwrap(), 0.0);
        let t_max = blowup_time(&p).unwrap_or(4.0).min(4.0);
        let (a, b) = (xi_s(&p, 0.3 * t_max).unwrap(), xi_s(&p, 0.6 * t_max).unwrap());
        // dξ/dt = μ₁ μ^{−s}, so ξ moves monotonically with the sign of μ₁.
        prop_assert!(p.mu1 == 0.0 || (b - a) * p.mu1 > 0.0);
    }

    #[test]
    fn kernel_modulus_ignores_nonlinearity(eps in 0.01..2.0f64, h in -3.0..3.0f64, s in 0.0..3.0f64,
                                           x in -3.0..3.0f64, t in 0.0..3.0f64) {
        let g = nls_kernel_solution(eps, h, s, x, 0.0, t).unwrap();
        let expected = (2.0 * std::f64::consts::PI * (t + eps)).powf(-0.5);
        prop_assert!((g.norm() - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn oracle_kernels_are_symmetric(x in -3.0..3.0f64, y in -3.0..3.0f64, t in 0.05..3.0f64) {
        let a = free_sp1(x, y, t, 1.0, 1.0).unwrap();
        let b = free_sp1(y, x, t, 1.0, 1.0).unwrap();
        prop_assert!((a - b).norm() <= 1e-15);
        let a = sho_sp3(x, y, t, 1.0, 1.0, 1.0).unwrap();
        let b = sho_sp3(y, x, t, 1.0, 1.0, 1.0).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn bessel_wronskian(x in 0.05..60.0f64) {
        let w = bessel_j(0.75, x).unwrap() * bessel_j_prime(-0.75, x).unwrap()
            - bessel_j(-0.75, x).unwrap() * bessel_j_prime(0.75, x).unwrap();
        let expected = -2.0 * (0.75 * std::f64::consts::PI).sin() / (std::f64::consts::PI * x);
        prop_assert!((w - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // Symmetric Hamiltonians give α = γ.
    #[test]
    fn sho_phase_is_symmetric(omega in 0.3..2.0f64, frac in 0.05..0.95f64) {
        let cs = make_preset("sho", &[omega]).unwrap();
        let focal = std::f64::consts::PI / omega;
        let sol = solve_characteristic(&cs, focal * 0.99, 1e-12).unwrap();
        let p = phase_coefficients(&cs, &sol, frac * focal * 0.99, 1e-12).unwrap();
        prop_assert!((p.alpha - p.gamma).abs() <= 1e-8 * p.alpha.abs().max(1.0));
    }

    #[test]
    fn corrected_discriminant_matches_expansion(h0 in 0.5..2.0f64, h1 in -0.2..0.8f64, f0 in -1.0..1.0f64,
                                                frac in 0.1..0.9f64) {
        let k = PhysicalConstants::default();
        let profile = FieldProfile::linear(h0, h1, f0, k).unwrap();
        let sol = solve_mu_h(&profile, 1.0, 1e-12).unwrap();
        let window = quadprop::magnetic3d::ladder_window(&sol);
        let t = frac * window;
        let phase = magnetic_phase(&profile, &sol, t, 1e-12).unwrap();
        let s = s_polynomials(&phase, &profile, t).unwrap();
        let cmp = compare_discriminants(&s, &phase, &k, DiscriminantReading::Corrected);
        prop_assert!(cmp.max_error() <= 1e-9, "{:?}", cmp.relative_errors);
    }
}

#[test]
fn complex_reexport_is_usable() {
    assert_eq!(Complex64::new(1.0, 0.0).norm(), 1.0);
}
