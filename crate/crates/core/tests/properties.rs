use std::f64::consts::PI;
use std::sync::OnceLock;

use frac_wear::evolution::{load, LoadParams};
use frac_wear::special_functions::{FracOrder, MittagLeffler};
use frac_wear::spectral::{build_basis, semicircle, ModelParams, SpectralBasis};
use frac_wear::stationary::{
    amplitude_phase, rate_fit, stationary_pressure, stationary_state, FitMode,
};
use proptest::prelude::*;

fn basis() -> &'static SpectralBasis {
    static B: OnceLock<SpectralBasis> = OnceLock::new();
    B.get_or_init(|| {
        build_basis(&ModelParams::reference(1.0).unwrap(), 16, 256)
            .unwrap()
            .project_initial(semicircle(1.0, 6.0), 6.0)
            .unwrap()
    })
}

proptest! {
    #[test]
    fn amplitude_phase_reproduces_harmonic(
        w1 in -10.0..10.0f64,
        w2 in -10.0..10.0f64,
        theta in 0.0..(2.0 * PI),
    ) {
        let (w0, psi) = amplitude_phase(w1, w2);
        prop_assert!(w0 >= 0.0);
        prop_assert!(psi > -PI - 1e-15 && psi <= PI);
        let lhs = w0 * (theta - psi).cos();
        let rhs = w1 * theta.cos() + w2 * theta.sin();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + w0));
    }

    #[test]
    fn load_is_periodic_and_bounded(
        p0 in 0.5..20.0f64,
        frac in 0.0..0.5f64,
        omega in 0.1..10.0f64,
        t in 0.0..100.0f64,
    ) {
        let lp = LoadParams::new(p0, frac * p0, omega).unwrap();
        let p = load(t, &lp);
        prop_assert!(p <= p0 * (1.0 + 1e-15));
        prop_assert!(p >= p0 - 2.0 * lp.p_delta() - 1e-12 * p0);
        prop_assert!((load(t + lp.period(), &lp) - p).abs() <= 1e-11 * p0);
    }

    #[test]
    fn rate_fit_recovers_exponentials(
        rate in -3.0..-0.01f64,
        scale in 1e-3..1e3f64,
        t0 in 0.0..5.0f64,
    ) {
        let times: Vec<f64> = (0..40).map(|j| t0 + 0.25 * j as f64).collect();
        let norms: Vec<f64> = times.iter().map(|t| scale * (rate * t).exp()).collect();
        let fit = rate_fit(&times, &norms, FitMode::Exponential, None).unwrap();
        prop_assert!((fit.rate - rate).abs() <= 1e-9);
        prop_assert_eq!(fit.samples.len(), 40);
    }

    #[test]
    fn rate_fit_recovers_power_laws(
        slope in -3.0..-0.1f64,
        scale in 1e-3..1e3f64,
        t0 in 0.1..10.0f64,
    ) {
        let times: Vec<f64> = (0..30).map(|j| t0 * 1.2f64.powi(j)).collect();
        let norms: Vec<f64> = times.iter().map(|t| scale * t.powf(slope)).collect();
        let fit = rate_fit(&times, &norms, FitMode::Algebraic, None).unwrap();
        prop_assert!((fit.rate - slope).abs() <= 1e-9);
    }

    #[test]
    fn mittag_leffler_relaxation_is_monotone(alpha in 0.2..=1.0f64, x in 0.0..50.0f64) {
        let m = MittagLeffler::new(FracOrder::new(alpha).unwrap());
        let e = m.e_neg(x).unwrap();
        let e_next = m.e_neg(x * 1.01 + 1e-3).unwrap();
        prop_assert!(e > 0.0 && e <= 1.0);
        prop_assert!(e_next < e);
    }

    #[test]
    fn unit_order_is_exponential(x in 0.0..30.0f64) {
        let m = MittagLeffler::new(FracOrder::new(1.0).unwrap());
        let e = m.e_neg(x).unwrap();
        prop_assert!((e - (-x).exp()).abs() <= 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stationary_state_is_periodic_and_balanced(
        alpha in 0.5..1.9f64,
        mu in 0.2..2.0f64,
        t in 0.0..20.0f64,
    ) {
        let b = basis();
        let p = ModelParams::reference(alpha).unwrap().with_mu(mu).unwrap();
        let lp = LoadParams::reference();
        let state = stationary_state(b, &p, &lp, b.grid().nodes()).unwrap();
        let now = stationary_pressure(&state, t);
        let later = stationary_pressure(&state, t + lp.period());
        for (x, y) in now.iter().zip(&later) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        let force = b.grid().integrate(&now);
        prop_assert!((force - load(t, &lp)).abs() <= 1e-8 * lp.p0_total());
    }
}
