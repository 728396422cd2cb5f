//! Transient solution: load, modal coefficients, pressure field, wear term
//! and the displacement balance.

// Oracle values are pasted with all the digits the oracle printed.
#![allow(clippy::excessive_precision)]

use frac_wear::evolution::{
    displacement_residual, load, load_convolution, modal_coefficient, modal_coefficient_unit_order,
    modal_coefficient_with, modal_coefficients, pressure, residual_flatness, wear_term, LoadParams,
    PressureHistory, TimeResolution,
};
use frac_wear::quad::adaptive;
use frac_wear::special_functions::{FracOrder, MittagLeffler};
use frac_wear::spectral::{
    build_basis, build_basis_unchecked, semicircle, ModelParams, SpectralBasis,
};
use frac_wear::WearError;
use std::f64::consts::PI;

fn basis_for(params: &ModelParams, n_modes: usize, n_grid: usize) -> SpectralBasis {
    build_basis(params, n_modes, n_grid)
        .unwrap()
        .project_initial(semicircle(params.a(), 6.0), 6.0)
        .unwrap()
}

fn reference(alpha: f64) -> (ModelParams, SpectralBasis) {
    let p = ModelParams::reference(alpha).unwrap();
    let b = basis_for(&p, 60, 512);
    (p, b)
}

#[test]
fn load_examples() {
    let lp = LoadParams::reference();
    assert_eq!(load(0.0, &lp), 6.0);
    assert!((load(PI / 1.5, &lp) - 5.0).abs() < 1e-14);
    assert!((load(2.0 * PI / 1.5, &lp) - 6.0).abs() < 1e-14);
    assert!((lp.period() - 4.188_790_204_786_391).abs() < 1e-12);
}

#[test]
fn load_validation() {
    assert!(LoadParams::new(6.0, 3.0, 1.5).is_ok());
    let err = LoadParams::new(6.0, 3.5, 1.5).unwrap_err();
    assert!(matches!(
        err,
        WearError::InvalidParameter {
            field: "p_delta",
            ..
        }
    ));
    assert!(LoadParams::allow_negative_load(6.0, 3.5, 1.5).is_ok());
    assert!(LoadParams::new(0.0, 0.0, 1.5).is_err());
    assert!(LoadParams::new(6.0, 0.5, 0.0).is_err());
}

#[test]
fn convolution_matches_extended_precision_oracle() {
    // tests/oracle/conv_oracle.py
    let lp = LoadParams::reference();
    let cases = [
        (0.8, 2.5, 10.0, 0.250_853_885_281_844_643_41),
        (0.8, 4.0, 3.0, 0.176_565_416_121_979_898_03),
        (1.8, 1.7, 10.0, 0.315_139_961_442_782_884_69),
    ];
    for (alpha, b, t, want) in cases {
        let ml = MittagLeffler::new(FracOrder::new(alpha).unwrap());
        let got = load_convolution(&ml, b, t, &lp, TimeResolution::default());
        assert!(
            (got - want).abs() < 1e-11 * want.abs(),
            "alpha={alpha} b={b} t={t}: {got} vs {want}"
        );
    }
}

#[test]
fn coefficient_at_time_zero_is_initial_projection() {
    let (p, b) = reference(0.8);
    let lp = LoadParams::reference();
    for k in [1, 2, 17, 60] {
        assert_eq!(
            modal_coefficient(k, 0.0, &b, &p, &lp).unwrap(),
            b.d0()[k - 1]
        );
    }
    assert!(matches!(
        modal_coefficient(61, 1.0, &b, &p, &lp),
        Err(WearError::ModeIndex {
            index: 61,
            n_modes: 60
        })
    ));
    assert!(matches!(
        modal_coefficient(0, 1.0, &b, &p, &lp),
        Err(WearError::ModeIndex { .. })
    ));
    assert!(modal_coefficient(1, -1.0, &b, &p, &lp).is_err());
}

#[test]
fn constant_load_archard_limit_is_exponential() {
    let p = ModelParams::reference(1.0).unwrap().with_mu(0.0).unwrap();
    let b = basis_for(&p, 20, 256);
    let lp = LoadParams::reference().with_p_delta(0.0).unwrap();
    for k in [2, 4, 10] {
        for t in [0.3, 2.0, 11.0] {
            let rate = p.nu() / (p.eta() + b.sigma()[k - 1]);
            let want = b.d0()[k - 1] * (-rate * t).exp();
            let got = modal_coefficient(k, t, &b, &p, &lp).unwrap();
            assert!((got - want).abs() < 1e-14, "k={k} t={t}: {got} vs {want}");
        }
    }
}

#[test]
fn unit_order_paths_agree() {
    let (p, b) = reference(1.0);
    let lp = LoadParams::reference();
    let times = [0.0, 0.25, 1.0, 5.0, 10.0, 50.0, 100.0];
    let batch = modal_coefficients(&times, &b, &p, &lp, TimeResolution::default()).unwrap();
    for (j, &t) in times.iter().enumerate() {
        for k in 1..=60 {
            let closed = modal_coefficient_unit_order(k, t, &b, &p, &lp).unwrap();
            let direct = modal_coefficient(k, t, &b, &p, &lp).unwrap();
            let scale = closed.abs().max(1e-3);
            assert!((direct - closed).abs() < 1e-10 * scale, "k={k} t={t}");
            assert!(
                (batch[j][k - 1] - closed).abs() < 1e-10 * scale,
                "batch k={k} t={t}"
            );
        }
    }
    let p8 = p.with_alpha(0.8).unwrap();
    assert!(matches!(
        modal_coefficient_unit_order(1, 1.0, &b, &p8, &lp),
        Err(WearError::UnsupportedLimit(_))
    ));
}

/// d_k(t) with the convolution done by adaptive Gauss-Kronrod after
/// s = t·w^{1/α}; independent of the panel layout used in the library.
fn adaptive_coefficient(
    k: usize,
    t: f64,
    b: &SpectralBasis,
    p: &ModelParams,
    lp: &LoadParams,
) -> f64 {
    let alpha = p.alpha().value();
    let ml = MittagLeffler::new(p.alpha());
    let s = p.eta() + b.sigma()[k - 1];
    let beta = p.beta(b.sigma()[k - 1]);
    let rate = beta.powf(1.0 / alpha);
    let a = p.a();
    let c = 2.0 * a * b.l()[k - 1];
    let g = p.nu() / (p.mu() * s + p.nu());
    let f = |w: f64| {
        if w == 0.0 {
            return 0.0;
        }
        let lag = t * w.powf(1.0 / alpha);
        let jac = t / alpha * w.powf(1.0 / alpha - 1.0);
        ml.kernel(rate * lag) * (load(t - lag, lp) - load(0.0, lp)) * jac
    };
    let conv = adaptive(f, 0.0, 1.0, 1e-13, 1e-16).value;
    b.d0()[k - 1] * (1.0 + g * (ml.relax(rate * t) - 1.0))
        - c * (load(t, lp) - load(0.0, lp)) / (2.0 * a * s)
        - p.nu() * c / (2.0 * a * s * s) * beta.powf(1.0 / alpha - 1.0) * conv
}

#[test]
fn fractional_coefficient_matches_adaptive_oracle() {
    let (p, b) = reference(0.8);
    let lp = LoadParams::reference();
    for k in [2, 6, 30] {
        let got = modal_coefficient(k, 10.0, &b, &p, &lp).unwrap();
        let want = adaptive_coefficient(k, 10.0, &b, &p, &lp);
        assert!(
            (got - want).abs() < 1e-6 * want.abs(),
            "k={k}: {got} vs {want}"
        );
        assert!(
            (got - want).abs() < 1e-11 * want.abs(),
            "k={k}: {got} vs {want}"
        );
    }
}

#[test]
fn convolution_quadrature_self_convergence() {
    let lp = LoadParams::reference();
    for alpha in [0.8, 1.8] {
        let (p, b) = reference(alpha);
        for t in [0.5, 3.0, 10.0, 40.0, 100.0] {
            for k in [2, 10, 60] {
                let base = modal_coefficient(k, t, &b, &p, &lp).unwrap();
                let fine =
                    modal_coefficient_with(k, t, &b, &p, &lp, TimeResolution::default().doubled())
                        .unwrap();
                assert!(
                    (base - fine).abs() <= 1e-6 * fine.abs(),
                    "alpha={alpha} t={t} k={k}"
                );
            }
        }
    }
}

#[test]
fn pressure_reproduces_initial_data_with_full_basis() {
    let p = ModelParams::reference(0.8).unwrap();
    let b = build_basis_unchecked(&p, 255, 256)
        .unwrap()
        .project_initial(semicircle(1.0, 6.0), 6.0)
        .unwrap();
    let xs: Vec<f64> = (0..41).map(|i| -0.95 + 1.9 * i as f64 / 40.0).collect();
    let field = pressure(&xs, &[0.0], &b, &p, &LoadParams::reference()).unwrap();
    let exact = semicircle(1.0, 6.0);
    for (x, v) in xs.iter().zip(&field.values[0]) {
        assert!((v - exact(*x)).abs() < 1e-4, "x={x}: {v} vs {}", exact(*x));
    }
}

#[test]
fn force_equilibrium_at_output_times() {
    let (p, b) = reference(0.8);
    let lp = LoadParams::reference();
    let times: Vec<f64> = (0..30).map(|i| i as f64 * 0.7).collect();
    let field = pressure(b.grid().nodes(), &times, &b, &p, &lp).unwrap();
    for (j, &t) in times.iter().enumerate() {
        let total = b.grid().integrate(&field.values[j]);
        assert!((total - load(t, &lp)).abs() <= 1e-8 * 6.0, "t={t}: {total}");
    }
    assert_eq!(field.n_modes, 60);
    assert!(pressure(&[1.5], &[0.0], &b, &p, &lp).is_err());
    assert!(pressure(&[0.0], &[1.0, 0.5], &b, &p, &lp).is_err());
}

#[test]
fn wear_term_constant_pressure() {
    let xs = [0.0, 0.4];
    // μ = 0, α = 1: limit ν∫p of the general definition (ℰ₁(0) = −1).
    let p = ModelParams::reference(1.0).unwrap().with_mu(0.0).unwrap();
    let h = PressureHistory::from_fn(&xs, 3.0, &p, 1.5, TimeResolution::default(), |_| {
        vec![1.0, 2.0]
    })
    .unwrap();
    let w = wear_term(&h, &p).unwrap();
    assert!((w[0] - 2.0 * 3.0).abs() < 1e-12);
    assert!((w[1] - 2.0 * 3.0 * 2.0).abs() < 1e-12);
    // μ = 1.2, α = 1: ν(1 − e^{−μt})/μ.
    let p = ModelParams::reference(1.0).unwrap();
    let h = PressureHistory::from_fn(&xs, 3.0, &p, 1.5, TimeResolution::default(), |_| {
        vec![1.0, 1.0]
    })
    .unwrap();
    let w = wear_term(&h, &p).unwrap();
    let want = 2.0 * (1.0 - (-1.2f64 * 3.0).exp()) / 1.2;
    assert!((w[0] - want).abs() < 1e-12, "{} vs {want}", w[0]);
    // μ = 1.2, α = 0.8: ν μ^{1/α−1} ∫₀^t (−ℰ) = −ν μ^{1/α−1}[E_α(−μt^α) − 1]/μ^{1/α}.
    let p = ModelParams::reference(0.8).unwrap();
    let h = PressureHistory::from_fn(&xs, 3.0, &p, 1.5, TimeResolution::default(), |_| {
        vec![1.0, 1.0]
    })
    .unwrap();
    let w = wear_term(&h, &p).unwrap();
    let ml = MittagLeffler::new(p.alpha());
    let want = -2.0 * 1.2f64.powf(1.25 - 1.0) * ml.primitive(1.2, 3.0).unwrap();
    assert!((w[0] - want).abs() < 1e-10 * want, "{} vs {want}", w[0]);
}

#[test]
fn wear_term_rejects_unsupported_limit() {
    let p = ModelParams::reference(0.8).unwrap().with_mu(0.0).unwrap();
    let h = PressureHistory::from_fn(&[0.0], 1.0, &p, 1.5, TimeResolution::default(), |_| {
        vec![1.0]
    })
    .unwrap();
    assert!(matches!(
        wear_term(&h, &p),
        Err(WearError::UnsupportedLimit(_))
    ));
}

#[test]
fn archard_limit_is_continuous_in_mu() {
    // The μ → 0 wear of a time-dependent pressure approaches ν∫p.
    let xs = [0.0];
    let f = |tau: f64| vec![1.0 + 0.5 * (2.0 * tau).sin()];
    let t: f64 = 4.0;
    let exact = 2.0 * (t + 0.25 * (1.0 - (2.0 * t).cos()));
    let p0 = ModelParams::reference(1.0).unwrap().with_mu(0.0).unwrap();
    let h0 = PressureHistory::from_fn(&xs, t, &p0, 2.0, TimeResolution::default(), f).unwrap();
    assert!((wear_term(&h0, &p0).unwrap()[0] - exact).abs() < 1e-12);
    let small = p0.with_mu(1e-7).unwrap();
    let h = PressureHistory::from_fn(&xs, t, &small, 2.0, TimeResolution::default(), f).unwrap();
    assert!((wear_term(&h, &small).unwrap()[0] - exact).abs() < 1e-5);
}

#[test]
fn balance_holds_exactly_at_constant_load() {
    // With P_Δ = 0 the truncated solution satisfies the balance mode by mode,
    // so the residual is flat to rounding for any α.
    let lp = LoadParams::reference().with_p_delta(0.0).unwrap();
    for alpha in [0.8, 1.0, 1.8] {
        let p = ModelParams::reference(alpha).unwrap();
        let b = basis_for(&p, 30, 256);
        let flat = residual_flatness(3.0, &b, &p, &lp).unwrap();
        assert!(flat < 1e-9, "alpha={alpha}: {flat}");
    }
}

#[test]
fn residual_lies_outside_retained_modes() {
    // Under oscillatory load, what remains is the truncated part of the
    // K₁ coupling; every retained modal component of R vanishes.
    let lp = LoadParams::reference();
    for (alpha, a) in [(1.0, 1.0), (1.0, 0.7), (0.8, 1.3)] {
        let p = ModelParams::new(a, 1.0, 2.0, 1.2, alpha, 5f64.ln()).unwrap();
        let b = basis_for(&p, 30, 256);
        let r = displacement_residual(5.0, &b, &p, &lp, TimeResolution::default()).unwrap();
        for k in 0..30 {
            let prod: Vec<f64> = r.iter().zip(b.phi(k)).map(|(x, y)| x * y).collect();
            let rk = b.grid().integrate(&prod);
            assert!(rk.abs() < 1e-9, "alpha={alpha} a={a} k={k}: {rk}");
        }
    }
}

#[test]
fn residual_is_zero_at_start_and_decreases_with_modes() {
    let (p, b) = reference(1.0);
    let lp = LoadParams::reference();
    assert!(residual_flatness(0.0, &b, &p, &lp).unwrap() < 1e-12);
    let coarse = residual_flatness(5.0, &b.truncated(30).unwrap(), &p, &lp).unwrap();
    let fine = residual_flatness(5.0, &b, &p, &lp).unwrap();
    assert!(fine < coarse, "{fine} vs {coarse}");
}
