//! Mittag-Leffler function E_α(−x) and the relaxation kernel ℰ_α(x).
//!
//! With z ≥ 0 the "time-like" variable, both functions are evaluated through
//!
//! ```text
//! F(z) = E_α(−z^α)              ℰ_α(z) = F'(z)
//!      = Σ_k (−1)^k z^{αk} / Γ(αk+1)
//! ```
//!
//! Three regimes are used:
//!
//! * `z ≤ SERIES_LIMIT`: the defining power series with compensated summation;
//! * `z ≥ ASYMPTOTIC_LIMIT`: the algebraic large-argument expansion
//!   `−Σ (−z^α)^{−k} / Γ(1−αk)`, plus for α ∈ (1,2) the exponentially damped
//!   oscillation `(2/α) Re exp(z e^{iπ/α})` coming from the two poles of the
//!   Laplace transform;
//! * in between: the real-line Laplace representation
//!   `F(z) = ∫₀^∞ e^{−rz} ρ_α(r) dr (+ pole term)` with the spectral density
//!   `ρ_α(r) = sin(απ)/π · r^{α−1} / (r^{2α} + 2 r^α cos(απ) + 1)`,
//!   integrated adaptively after the substitution `u = r^α`.
//!
//! α = 1 dispatches to closed-form exponentials everywhere.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma as gamma_pos, ln_gamma};

use crate::error::{Result, WearError};
use crate::quad;

/// Upper end of the power-series regime in the variable z = x^{1/α}.
pub const SERIES_LIMIT: f64 = 1.5;
/// Lower end of the asymptotic regime in the variable z = x^{1/α}.
pub const ASYMPTOTIC_LIMIT: f64 = 40.0;

const MAX_TERMS: usize = 300;
const BRIDGE_REL_TOL: f64 = 1e-14;

/// Fractional order α ∈ (0, 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder {
    alpha: f64,
    unit: bool,
}

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(WearError::Domain(format!(
                "fractional order alpha = {alpha} must lie in (0, 2)"
            )));
        }
        Ok(Self {
            alpha,
            unit: alpha == 1.0,
        })
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.alpha
    }

    /// α is exactly 1; closed-form exponentials apply.
    #[inline]
    pub fn is_unit(&self) -> bool {
        self.unit
    }
}

/// sin(πx) with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).round();
    if r == r.round() {
        return 0.0;
    }
    let r = if r > 0.5 {
        1.0 - r
    } else if r < -0.5 {
        -1.0 - r
    } else {
        r
    };
    (PI * r).sin()
}

/// Γ(x) via the Lanczos approximation, with the reflection formula below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x >= 0.5 {
        gamma_pos(x)
    } else {
        PI / (sin_pi(x) * gamma_pos(1.0 - x))
    }
}

/// 1/Γ(x), exactly zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if x >= 0.5 {
        if x > 170.0 {
            (-ln_gamma(x)).exp()
        } else {
            1.0 / gamma_pos(x)
        }
    } else {
        sin_pi(x) * gamma_pos(1.0 - x) / PI
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Which algorithm evaluated a point; exposed for diagnostics and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Closed,
    Series,
    Bridge,
    Asymptotic,
}

/// Precomputed evaluator for E_α(−x), ℰ_α(x) at a fixed order.
#[derive(Debug, Clone)]
pub struct MittagLeffler {
    order: FracOrder,
    /// ln Γ(αk+1), k = 0..MAX_TERMS.
    ln_gamma_series: Vec<f64>,
    /// For the asymptotic terms 1/Γ(1−αk) = sin(π(1−αk)) Γ(αk) / π:
    /// (sin(π(1−αk))/π, ln Γ(αk)), k = 1..=MAX_TERMS.
    asym: Vec<(f64, f64)>,
    sin_pi_alpha: f64,
    cos_pi_alpha: f64,
    /// e^{iπ/α} components for the pole term (α > 1).
    pole_re: f64,
    pole_im: f64,
}

impl MittagLeffler {
    pub fn new(order: FracOrder) -> Self {
        let alpha = order.value();
        let ln_gamma_series = (0..=MAX_TERMS)
            .map(|k| ln_gamma(alpha * k as f64 + 1.0))
            .collect();
        let asym = (1..=MAX_TERMS)
            .map(|k| {
                let ak = alpha * k as f64;
                (sin_pi(1.0 - ak) / PI, ln_gamma(ak))
            })
            .collect();
        Self {
            order,
            ln_gamma_series,
            asym,
            sin_pi_alpha: sin_pi(alpha),
            cos_pi_alpha: (PI * alpha).cos(),
            pole_re: (PI / alpha).cos(),
            pole_im: (PI / alpha).sin(),
        }
    }

    pub fn order(&self) -> FracOrder {
        self.order
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.order.value()
    }

    pub fn regime(&self, z: f64) -> Regime {
        if self.order.is_unit() {
            Regime::Closed
        } else if z <= SERIES_LIMIT {
            Regime::Series
        } else if z >= ASYMPTOTIC_LIMIT {
            Regime::Asymptotic
        } else {
            Regime::Bridge
        }
    }

    /// E_α(−x) for x ≥ 0.
    pub fn e_neg(&self, x: f64) -> Result<f64> {
        check_nonnegative("x", x)?;
        if self.order.is_unit() {
            return Ok((-x).exp());
        }
        Ok(self.relax(x.powf(1.0 / self.alpha())))
    }

    /// ℰ_α(x) for x > 0.
    pub fn cal_e(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(WearError::Domain(format!("cal_e requires x > 0, got {x}")));
        }
        Ok(self.kernel(x))
    }

    /// λ^{−1/α} [E_α(−λ x0^α) − 1] = ∫₀^{x0} ℰ_α(λ^{1/α} x) dx.
    pub fn primitive(&self, lambda: f64, x0: f64) -> Result<f64> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(WearError::Domain(format!(
                "primitive requires lambda > 0, got {lambda}"
            )));
        }
        if !(x0 > 0.0) || !x0.is_finite() {
            return Err(WearError::Domain(format!(
                "primitive requires x0 > 0, got {x0}"
            )));
        }
        let b = lambda.powf(1.0 / self.alpha());
        Ok(self.relax_m1(b * x0) / b)
    }

    /// F(z) = E_α(−z^α), z ≥ 0. No argument checking.
    pub fn relax(&self, z: f64) -> f64 {
        if self.order.is_unit() {
            return (-z).exp();
        }
        if z == 0.0 {
            return 1.0;
        }
        match self.regime(z) {
            Regime::Series => 1.0 + self.series_m1(z),
            Regime::Bridge => self.bridge(z, false),
            _ => self.asymptotic(z, false),
        }
    }

    /// F(z) − 1 without cancellation for small z.
    pub fn relax_m1(&self, z: f64) -> f64 {
        if self.order.is_unit() {
            return (-z).exp_m1();
        }
        if z == 0.0 {
            return 0.0;
        }
        match self.regime(z) {
            Regime::Series => self.series_m1(z),
            _ => self.relax(z) - 1.0,
        }
    }

    /// ℰ_α(z) = F'(z), z > 0. No argument checking.
    pub fn kernel(&self, z: f64) -> f64 {
        if self.order.is_unit() {
            return -(-z).exp();
        }
        match self.regime(z) {
            Regime::Series => self.series_kernel(z),
            Regime::Bridge => self.bridge(z, true),
            _ => self.asymptotic(z, true),
        }
    }

    /// Σ_{k≥1} (−1)^k z^{αk}/Γ(αk+1).
    fn series_m1(&self, z: f64) -> f64 {
        let alpha = self.alpha();
        let lz = z.ln();
        let mut acc = CompensatedSum::default();
        for k in 1..=MAX_TERMS {
            let mag = (alpha * k as f64 * lz - self.ln_gamma_series[k]).exp();
            let term = if k % 2 == 0 { mag } else { -mag };
            acc.add(term);
            if mag < 1e-18 * acc.value().abs().max(1e-300) && k > 2 {
                break;
            }
        }
        acc.value()
    }

    /// (α/z) Σ_{k≥1} (−1)^k k z^{αk}/Γ(αk+1).
    fn series_kernel(&self, z: f64) -> f64 {
        let alpha = self.alpha();
        let lz = z.ln();
        let mut acc = CompensatedSum::default();
        for k in 1..=MAX_TERMS {
            let mag = k as f64 * (alpha * k as f64 * lz - self.ln_gamma_series[k]).exp();
            let term = if k % 2 == 0 { mag } else { -mag };
            acc.add(term);
            if mag < 1e-18 * acc.value().abs().max(1e-300) && k > 2 {
                break;
            }
        }
        alpha / z * acc.value()
    }

    /// Large-z expansion, optimally truncated. `derivative` selects ℰ_α.
    fn asymptotic(&self, z: f64, derivative: bool) -> f64 {
        let alpha = self.alpha();
        let lz = z.ln();
        let mut acc = CompensatedSum::default();
        let mut previous = f64::INFINITY;
        for (i, &(s, lg)) in self.asym.iter().enumerate() {
            let k = (i + 1) as f64;
            let mag = (lg - alpha * k * lz).exp();
            if mag > previous {
                break;
            }
            previous = mag;
            if s == 0.0 {
                continue;
            }
            // F: −(−1)^k s Γ(αk) z^{−αk};  F': (−1)^k αk s Γ(αk) z^{−αk−1}.
            let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
            let term = if derivative {
                sign * alpha * k * s * mag / z
            } else {
                -sign * s * mag
            };
            acc.add(term);
            if mag < 1e-18 * acc.value().abs() {
                break;
            }
        }
        acc.value() + self.pole_term(z, derivative)
    }

    /// (2/α) Re exp(z e^{iπ/α}) or its z-derivative; zero for α ≤ 1.
    fn pole_term(&self, z: f64, derivative: bool) -> f64 {
        if self.alpha() <= 1.0 {
            return 0.0;
        }
        let amp = 2.0 / self.alpha() * (z * self.pole_re).exp();
        let (c, s) = ((z * self.pole_im).cos(), (z * self.pole_im).sin());
        if derivative {
            amp * (self.pole_re * c - self.pole_im * s)
        } else {
            amp * c
        }
    }

    /// Laplace representation in u = r^α:
    /// F(z) = sin(απ)/(απ) ∫₀^∞ e^{−z u^{1/α}} / (u² + 2u cos απ + 1) du,
    /// F'(z) = −sin(απ)/(απ) ∫₀^∞ u^{1/α} e^{−z u^{1/α}} / (…) du.
    fn bridge(&self, z: f64, derivative: bool) -> f64 {
        let alpha = self.alpha();
        let inv = 1.0 / alpha;
        let c = self.cos_pi_alpha;
        let integrand = |u: f64| {
            let r = u.powf(inv);
            let e = (-z * r).exp() / (u * u + 2.0 * u * c + 1.0);
            if derivative {
                r * e
            } else {
                e
            }
        };
        let upper = (60.0 / z).powf(alpha);
        let mut cuts = vec![0.0];
        // Split at the peak of the denominator and at u = 1.
        for p in [-c, 1.0] {
            if p > 0.0 && p < upper && cuts.iter().all(|&q| (q - p).abs() > 1e-12) {
                cuts.push(p);
            }
        }
        cuts.push(upper);
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += quad::adaptive(integrand, w[0], w[1], BRIDGE_REL_TOL, 1e-300).value;
        }
        let pref = self.sin_pi_alpha / (alpha * PI);
        let integral = if derivative {
            -pref * total
        } else {
            pref * total
        };
        integral + self.pole_term(z, derivative)
    }

    /// Coefficients (c_k, p_k) of the large-argument expansion
    /// ℰ_α(z) ≈ Σ_k c_k z^{−p_k}, excluding the pole term; used for analytic tails.
    pub fn kernel_tail_terms(&self, z_min: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        if self.order.is_unit() {
            return out;
        }
        let alpha = self.alpha();
        let lz = z_min.ln();
        let mut previous = f64::INFINITY;
        for (i, &(s, lg)) in self.asym.iter().enumerate() {
            let k = (i + 1) as f64;
            let mag = (lg - alpha * k * lz).exp();
            if mag > previous || mag < 1e-22 {
                break;
            }
            previous = mag;
            if s == 0.0 {
                continue;
            }
            let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
            // c_k = (−1)^k αk / Γ(1−αk); Γ(αk) is bounded here since αk stays modest.
            let coef = sign * alpha * k * s * lg.exp();
            out.push((coef, alpha * k + 1.0));
        }
        out
    }

    /// Complex rate e^{iπ/α} of the pole term and its amplitude 2/α (α > 1 only).
    pub fn pole(&self) -> Option<(f64, f64, f64)> {
        (self.alpha() > 1.0).then(|| (2.0 / self.alpha(), self.pole_re, self.pole_im))
    }
}

fn check_nonnegative(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(WearError::Domain(format!(
            "{name} must be finite and >= 0, got {x}"
        )))
    }
}

/// E_α(−x) for x ≥ 0.
pub fn mittag_leffler_neg(alpha: FracOrder, x: f64) -> Result<f64> {
    MittagLeffler::new(alpha).e_neg(x)
}

/// ℰ_α(x) for x > 0.
pub fn cal_e(alpha: FracOrder, x: f64) -> Result<f64> {
    MittagLeffler::new(alpha).cal_e(x)
}

/// λ^{−1/α}[E_α(−λ x0^α) − 1], the exact value of ∫₀^{x0} ℰ_α(λ^{1/α} x) dx.
pub fn cal_e_primitive(alpha: FracOrder, lambda: f64, x0: f64) -> Result<f64> {
    MittagLeffler::new(alpha).primitive(lambda, x0)
}
