//! Transient solution: load history, modal coefficients d_k(t), the pressure
//! field, the wear operator and the a-posteriori displacement-balance check.
//!
//! d_k(t) = d_k⁰[1 + g_k(E_α(−β_k t^α) − 1)] − c_k(P(t) − P₀)/(2a s_k)
//!          − (ν c_k/(2a s_k²)) β_k^{1/α−1} ∫₀^t ℰ_α(b_k(t−τ))[P(τ) − P₀] dτ
//!
//! with s_k = η + σ_k, β_k = μ + ν/s_k, b_k = β_k^{1/α}, g_k = ν/(μ s_k + ν)
//! and load coupling c_k = ∫K₁φ_k = 2a·l_k. Projecting the displacement
//! balance onto φ_k gives s_k d_k + P(t)·2a l_k/(2a) + w_k = const, so the
//! coupling is 2a·l_k, not l_k; the residual check pins this down.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, WearError};
use crate::quad::{graded_panels, GaussLegendre, Panel};
use crate::special_functions::MittagLeffler;
use crate::spectral::{ModelParams, SpectralBasis};

/// Oscillatory load P(t) = P₀ − P_Δ + P_Δ cos ωt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadParams {
    p0_total: f64,
    p_delta: f64,
    omega: f64,
}

impl LoadParams {
    /// Validated load; requires P_Δ ≤ P₀/2 so that P(t) stays nonnegative.
    pub fn new(p0_total: f64, p_delta: f64, omega: f64) -> Result<Self> {
        let lp = Self::allow_negative_load(p0_total, p_delta, omega)?;
        if p_delta > 0.5 * p0_total {
            return Err(WearError::invalid(
                "p_delta",
                p_delta,
                format!(
                    "P_Δ ≤ P₀/2 = {} keeps the total load nonnegative (override with --allow-negative-load)",
                    0.5 * p0_total
                ),
            ));
        }
        Ok(lp)
    }

    /// Like [`LoadParams::new`] without the P_Δ ≤ P₀/2 admissibility rule.
    pub fn allow_negative_load(p0_total: f64, p_delta: f64, omega: f64) -> Result<Self> {
        if !(p0_total > 0.0 && p0_total.is_finite()) {
            return Err(WearError::invalid(
                "p0_total",
                p0_total,
                "P₀ > 0 is required",
            ));
        }
        if !(p_delta >= 0.0 && p_delta.is_finite()) {
            return Err(WearError::invalid(
                "p_delta",
                p_delta,
                "P_Δ ≥ 0 is required",
            ));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(WearError::invalid("omega", omega, "ω > 0 is required"));
        }
        Ok(Self {
            p0_total,
            p_delta,
            omega,
        })
    }

    /// P₀ = 6, P_Δ = 0.5, ω = 1.5.
    pub fn reference() -> Self {
        Self {
            p0_total: 6.0,
            p_delta: 0.5,
            omega: 1.5,
        }
    }

    pub fn with_p_delta(self, p_delta: f64) -> Result<Self> {
        Self::allow_negative_load(self.p0_total, p_delta, self.omega)
    }

    pub fn p0_total(&self) -> f64 {
        self.p0_total
    }
    pub fn p_delta(&self) -> f64 {
        self.p_delta
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }
}

pub fn load(t: f64, lp: &LoadParams) -> f64 {
    lp.p0_total - lp.p_delta + lp.p_delta * (lp.omega * t).cos()
}

/// Resolution of the time quadratures (convolutions and tails).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeResolution {
    /// Gauss-Legendre order per panel.
    pub order: usize,
    /// Panels per characteristic time scale min(2π/ω, 2π/b).
    pub panels_per_scale: f64,
    /// Width of the singular first panel relative to the shortest time scale.
    pub first_panel: f64,
}

impl Default for TimeResolution {
    fn default() -> Self {
        Self {
            order: 20,
            panels_per_scale: 3.0,
            first_panel: 1e-3,
        }
    }
}

impl TimeResolution {
    /// Twice as many panels and a first panel half as wide.
    pub fn doubled(self) -> Self {
        Self {
            order: self.order,
            panels_per_scale: 2.0 * self.panels_per_scale,
            first_panel: 0.5 * self.first_panel,
        }
    }

    pub(crate) fn max_width(&self, b: f64, omega: f64) -> f64 {
        let scale = (2.0 * PI / omega).min(if b > 0.0 { 2.0 * PI / b } else { f64::INFINITY });
        scale / self.panels_per_scale
    }

    pub(crate) fn first_width(&self, b: f64, omega: f64) -> f64 {
        let scale = (1.0 / omega).min(if b > 0.0 { 1.0 / b } else { f64::INFINITY });
        scale * self.first_panel
    }
}

/// Quadrature nodes and weights for the panels; a singular panel [0, ε] uses
/// s = ε w^{1/α} so that integrands behaving like s^{α−1} become smooth in w.
pub(crate) fn panel_nodes(panels: &[Panel], alpha: f64, rule: &GaussLegendre) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(panels.len() * rule.len());
    for p in panels {
        if p.b <= p.a {
            continue;
        }
        if p.singular {
            debug_assert!(p.a == 0.0);
            let eps = p.b;
            for (w, lam) in rule.mapped(0.0, 1.0) {
                let s = eps * w.powf(1.0 / alpha);
                let jac = eps / alpha * w.powf(1.0 / alpha - 1.0);
                out.push((s, lam * jac));
            }
        } else {
            out.extend(rule.mapped(p.a, p.b));
        }
    }
    out
}

/// Per-mode constants of the solution formula.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Mode {
    pub s: f64,
    pub b: f64,
    pub g: f64,
    pub d0: f64,
    /// Load coupling c = 2a·l.
    pub c: f64,
    /// ν c/(2a s²) β^{1/α−1}: prefactor of the convolution term.
    pub conv: f64,
}

impl Mode {
    pub(crate) fn new(k: usize, basis: &SpectralBasis, params: &ModelParams) -> Self {
        let alpha = params.alpha().value();
        let s = params.eta() + basis.sigma()[k];
        let beta = params.beta(basis.sigma()[k]);
        let a = params.a();
        let c = 2.0 * a * basis.l()[k];
        Self {
            s,
            b: beta.powf(1.0 / alpha),
            g: params.nu() / (params.mu() * s + params.nu()),
            d0: basis.d0()[k],
            c,
            conv: params.nu() * c / (2.0 * a * s * s) * beta.powf(1.0 / alpha - 1.0),
        }
    }

    fn assemble(&self, a: f64, relax: f64, dp: f64, convolution: f64) -> f64 {
        self.d0 * (1.0 + self.g * (relax - 1.0))
            - self.c * dp / (2.0 * a * self.s)
            - self.conv * convolution
    }
}

pub(crate) fn check_mode(k: usize, basis: &SpectralBasis) -> Result<usize> {
    if k == 0 || k > basis.n_modes() {
        return Err(WearError::ModeIndex {
            index: k,
            n_modes: basis.n_modes(),
        });
    }
    Ok(k - 1)
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(WearError::Domain(format!(
            "time must be finite and >= 0, got {t}"
        )))
    }
}

pub(crate) fn prepare(basis: &SpectralBasis, params: &ModelParams) -> Result<()> {
    basis.require_projected()?;
    basis.check_params(params)
}

/// d_k(t) for 1-based `k`, evaluating the convolution by direct quadrature in
/// the lag variable s = t − τ.
pub fn modal_coefficient(
    k: usize,
    t: f64,
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
) -> Result<f64> {
    modal_coefficient_with(k, t, basis, params, lp, TimeResolution::default())
}

pub fn modal_coefficient_with(
    k: usize,
    t: f64,
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
    res: TimeResolution,
) -> Result<f64> {
    prepare(basis, params)?;
    let idx = check_mode(k, basis)?;
    check_time(t)?;
    let mode = Mode::new(idx, basis, params);
    if t == 0.0 {
        return Ok(mode.d0);
    }
    let ml = MittagLeffler::new(params.alpha());
    let p0 = load(0.0, lp);
    let convolution = load_convolution(&ml, mode.b, t, lp, res);
    Ok(mode.assemble(
        params.a(),
        ml.relax(mode.b * t),
        load(t, lp) - p0,
        convolution,
    ))
}

/// ∫₀^t ℰ_α(b s)[P(t − s) − P₀] ds by graded quadrature in the lag s.
pub fn load_convolution(
    ml: &MittagLeffler,
    b: f64,
    t: f64,
    lp: &LoadParams,
    res: TimeResolution,
) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let panels = graded_panels(
        t,
        res.first_width(b, lp.omega).min(t),
        res.max_width(b, lp.omega),
    );
    let rule = GaussLegendre::new(res.order);
    let p0 = load(0.0, lp);
    panel_nodes(&panels, ml.alpha(), &rule)
        .into_iter()
        .map(|(s, w)| w * ml.kernel(b * s) * (load(t - s, lp) - p0))
        .sum()
}

/// d_k(t) for α = 1 from exponentials only:
/// ∫₀^t e^{−βs}(cos ω(t−s) − 1) ds
///   = (β cos ωt + ω sin ωt − β e^{−βt})/(β² + ω²) − (1 − e^{−βt})/β.
pub fn modal_coefficient_unit_order(
    k: usize,
    t: f64,
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
) -> Result<f64> {
    prepare(basis, params)?;
    if !params.alpha().is_unit() {
        return Err(WearError::UnsupportedLimit(format!(
            "exponential closed form needs α = 1, got {}",
            params.alpha().value()
        )));
    }
    let idx = check_mode(k, basis)?;
    check_time(t)?;
    let a = params.a();
    let sigma = basis.sigma()[idx];
    let s = params.eta() + sigma;
    let beta = params.mu() + params.nu() / s;
    let g = params.nu() / (params.mu() * s + params.nu());
    let (d0, c) = (basis.d0()[idx], 2.0 * a * basis.l()[idx]);
    let w = lp.omega;
    let decay = (-beta * t).exp();
    let trig = (beta * (w * t).cos() + w * (w * t).sin() - beta * decay) / (beta * beta + w * w);
    let ramp = -(-beta * t).exp_m1() / beta;
    // ℰ₁ = −e^{−z}, so the convolution is −P_Δ(trig − ramp).
    let convolution = -lp.p_delta * (trig - ramp);
    Ok(d0 * (1.0 + g * (decay - 1.0))
        - c * lp.p_delta * ((w * t).cos() - 1.0) / (2.0 * a * s)
        - params.nu() * c / (2.0 * a * s * s) * convolution)
}

/// Cumulative ∫₀^{t_j} ℰ_α(b s) e^{iωs} ds at nondecreasing `times`.
pub(crate) fn cumulative_oscillatory(
    ml: &MittagLeffler,
    b: f64,
    omega: f64,
    times: &[f64],
    res: TimeResolution,
) -> Vec<Complex64> {
    let t_max = times.last().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(times.len());
    if t_max <= 0.0 {
        out.resize(times.len(), Complex64::new(0.0, 0.0));
        return out;
    }
    let alpha = ml.alpha();
    let first_time = times.iter().copied().find(|&t| t > 0.0).unwrap_or(t_max);
    let eps = res.first_width(b, omega).min(first_time);
    let layout = graded_panels(t_max, eps, res.max_width(b, omega));
    // Panel breakpoints merged with the output times.
    let mut cuts: Vec<f64> = layout.iter().map(|p| p.b).collect();
    cuts.extend(times.iter().copied().filter(|&t| t > 0.0));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let rule = GaussLegendre::new(res.order);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut lo = 0.0;
    let mut next = 0;
    let integrate = |a: f64, b_: f64| -> Complex64 {
        let panel = Panel {
            a,
            b: b_,
            singular: a == 0.0,
        };
        panel_nodes(&[panel], alpha, &rule)
            .into_iter()
            .map(|(s, w)| Complex64::from_polar(w * ml.kernel(b * s), omega * s))
            .sum()
    };
    for &t in times {
        while next < cuts.len() && cuts[next] <= t {
            acc += integrate(lo, cuts[next]);
            lo = cuts[next];
            next += 1;
        }
        out.push(acc);
    }
    out
}

/// d_k(t) for all retained modes at nondecreasing `times`; result[j][k].
pub fn modal_coefficients(
    times: &[f64],
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
    res: TimeResolution,
) -> Result<Vec<Vec<f64>>> {
    prepare(basis, params)?;
    check_times(times)?;
    let ml = MittagLeffler::new(params.alpha());
    let a = params.a();
    let p0 = load(0.0, lp);
    let omega = lp.omega;
    let columns: Vec<Vec<f64>> = (0..basis.n_modes())
        .into_par_iter()
        .map(|k| {
            let mode = Mode::new(k, basis, params);
            let osc = cumulative_oscillatory(&ml, mode.b, omega, times, res);
            times
                .iter()
                .zip(&osc)
                .map(|(&t, i)| {
                    if t == 0.0 {
                        return mode.d0;
                    }
                    // ∫₀^t ℰ(bs)[P(t−s) − P₀]ds = P_Δ[cos ωt·Ic + sin ωt·Is − I₁].
                    let i1 = ml.relax_m1(mode.b * t) / mode.b;
                    let conv =
                        lp.p_delta * ((omega * t).cos() * i.re + (omega * t).sin() * i.im - i1);
                    mode.assemble(a, ml.relax(mode.b * t), load(t, lp) - p0, conv)
                })
                .collect()
        })
        .collect();
    Ok((0..times.len())
        .map(|j| columns.iter().map(|c| c[j]).collect())
        .collect())
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    for &t in times {
        check_time(t)?;
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(WearError::Input("time grid must be nondecreasing".into()));
    }
    Ok(())
}

/// p(x, t) sampled on an x/t grid.
#[derive(Debug, Clone)]
pub struct PressureField {
    pub x_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// values[j][i] = p(x_i, t_j).
    pub values: Vec<Vec<f64>>,
    /// coeffs[j][k] = d_{k+1}(t_j).
    pub coeffs: Vec<Vec<f64>>,
    pub n_modes: usize,
}

/// Evaluates p(x,t) = P(t)/2a + Σ_k d_k(t) φ_k(x).
pub fn pressure(
    x_grid: &[f64],
    t_grid: &[f64],
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
) -> Result<PressureField> {
    pressure_with(x_grid, t_grid, basis, params, lp, TimeResolution::default())
}

pub fn pressure_with(
    x_grid: &[f64],
    t_grid: &[f64],
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
    res: TimeResolution,
) -> Result<PressureField> {
    let a = params.a();
    if let Some(&x) = x_grid.iter().find(|x| !(x.abs() <= a)) {
        return Err(WearError::Domain(format!(
            "x = {x} lies outside [-a, a] with a = {a}"
        )));
    }
    let coeffs = modal_coefficients(t_grid, basis, params, lp, res)?;
    let phi: Vec<Vec<f64>> = x_grid.iter().map(|&x| basis.modes_at(x)).collect();
    let means: Vec<f64> = (0..basis.n_modes())
        .map(|k| basis.grid().integrate(basis.phi(k)))
        .collect();
    let p0 = lp.p0_total;
    let mut values = Vec::with_capacity(t_grid.len());
    for (&t, d) in t_grid.iter().zip(&coeffs) {
        let total = load(t, lp);
        let force = total + d.iter().zip(&means).map(|(d, m)| d * m).sum::<f64>();
        if (force - total).abs() > 1e-8 * p0 {
            return Err(WearError::Consistency(format!(
                "force equilibrium violated at t = {t}: ∫p = {force}, P(t) = {total}"
            )));
        }
        values.push(
            phi.iter()
                .map(|f| total / (2.0 * a) + f.iter().zip(d).map(|(f, d)| f * d).sum::<f64>())
                .collect(),
        );
    }
    Ok(PressureField {
        x_grid: x_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        values,
        coeffs,
        n_modes: basis.n_modes(),
    })
}

/// Pressure snapshots p(x, t − s_j) at the lag nodes of the wear convolution
/// ending at time `t`, with their quadrature weights.
#[derive(Debug, Clone)]
pub struct PressureHistory {
    pub x_grid: Vec<f64>,
    pub t: f64,
    /// Lags s_j = t − τ_j, increasing.
    pub lags: Vec<f64>,
    pub weights: Vec<f64>,
    /// snapshots[j][i] = p(x_i, t − s_j).
    pub snapshots: Vec<Vec<f64>>,
}

/// Lag nodes on [0, t]: singular grading at s = 0 (the kernel), geometric
/// grading towards s = t (the start of the load history).
fn lag_rule(t: f64, alpha: f64, b: f64, omega: f64, res: TimeResolution) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(res.order);
    let first = res.first_width(b, omega);
    let width = res.max_width(b, omega);
    let half = 0.5 * t;
    let mut nodes = panel_nodes(&graded_panels(half, first.min(half), width), alpha, &rule);
    let far: Vec<Panel> = graded_panels(half, first.min(half), width)
        .into_iter()
        .map(|p| Panel {
            a: t - p.b,
            b: t - p.a,
            singular: false,
        })
        .collect();
    let mut tail = panel_nodes(&far, alpha, &rule);
    tail.sort_by(|x, y| x.0.total_cmp(&y.0));
    nodes.extend(tail);
    nodes
}

fn wear_rate(params: &ModelParams) -> f64 {
    if params.mu() > 0.0 {
        params.mu().powf(1.0 / params.alpha().value())
    } else {
        0.0
    }
}

impl PressureHistory {
    /// Samples `f(τ)` (pressure on `x_grid` at time τ) at the lag nodes.
    /// `omega` sets the time resolution of the pressure's own oscillation.
    pub fn from_fn<F>(
        x_grid: &[f64],
        t: f64,
        params: &ModelParams,
        omega: f64,
        res: TimeResolution,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64>,
    {
        check_time(t)?;
        let nodes = lag_rule(t, params.alpha().value(), wear_rate(params), omega, res);
        let snapshots = nodes.iter().map(|&(s, _)| f(t - s)).collect();
        Ok(Self {
            x_grid: x_grid.to_vec(),
            t,
            lags: nodes.iter().map(|n| n.0).collect(),
            weights: nodes.iter().map(|n| n.1).collect(),
            snapshots,
        })
    }

    /// History of the spectral solution itself.
    pub fn from_solution(
        x_grid: &[f64],
        t: f64,
        basis: &SpectralBasis,
        params: &ModelParams,
        lp: &LoadParams,
        res: TimeResolution,
    ) -> Result<Self> {
        check_time(t)?;
        let nodes = lag_rule(t, params.alpha().value(), wear_rate(params), lp.omega, res);
        // Times t − s_j in increasing order for the batched evaluation.
        let times: Vec<f64> = nodes.iter().rev().map(|&(s, _)| (t - s).max(0.0)).collect();
        let field = pressure_with(x_grid, &times, basis, params, lp, res)?;
        let mut snapshots = field.values;
        snapshots.reverse();
        Ok(Self {
            x_grid: x_grid.to_vec(),
            t,
            lags: nodes.iter().map(|n| n.0).collect(),
            weights: nodes.iter().map(|n| n.1).collect(),
            snapshots,
        })
    }
}

/// w[p](x,t) = −ν μ^{1/α−1} ∫₀^t ℰ_α(μ^{1/α}(t−τ)) p(x,τ) dτ.
///
/// For μ = 0, α = 1 this is the μ → 0 limit +ν∫₀^t p dτ (ℰ₁(0) = −1).
/// μ = 0 with α ≠ 1 has no finite limit and is rejected.
pub fn wear_term(history: &PressureHistory, params: &ModelParams) -> Result<Vec<f64>> {
    let alpha = params.alpha().value();
    let nu = params.nu();
    let mu = params.mu();
    let kernel: Box<dyn Fn(f64) -> f64> = if mu == 0.0 {
        if !params.alpha().is_unit() {
            return Err(WearError::UnsupportedLimit(format!(
                "wear term with μ = 0 is defined only for α = 1 (got α = {alpha})"
            )));
        }
        Box::new(|_| -1.0)
    } else {
        let ml = MittagLeffler::new(params.alpha());
        let b = mu.powf(1.0 / alpha);
        Box::new(move |s: f64| if s > 0.0 { ml.kernel(b * s) } else { 0.0 })
    };
    let pref = if mu == 0.0 {
        1.0
    } else {
        mu.powf(1.0 / alpha - 1.0)
    };
    let mut out = vec![0.0; history.x_grid.len()];
    for ((&s, &w), snap) in history
        .lags
        .iter()
        .zip(&history.weights)
        .zip(&history.snapshots)
    {
        let kw = w * kernel(s);
        for (o, p) in out.iter_mut().zip(snap) {
            *o += kw * p;
        }
    }
    out.iter_mut().for_each(|v| *v *= -nu * pref);
    Ok(out)
}

/// R(x,t) = η[p(x,t) − p(x,0)] + K[p(·,t) − p(·,0)](x) + w[p](x,t) on the
/// basis grid nodes. The displacement balance makes R independent of x.
pub fn displacement_residual(
    t: f64,
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
    res: TimeResolution,
) -> Result<Vec<f64>> {
    let nodes = basis.grid().nodes();
    let field = pressure_with(nodes, &[0.0, t], basis, params, lp, res)?;
    let history = PressureHistory::from_solution(nodes, t, basis, params, lp, res)?;
    let wear = wear_term(&history, params)?;
    let diff: Vec<f64> = field.values[1]
        .iter()
        .zip(&field.values[0])
        .map(|(p, q)| p - q)
        .collect();
    let kdiff = basis.apply_kernel(&diff);
    Ok(diff
        .iter()
        .zip(&kdiff)
        .zip(&wear)
        .map(|((d, k), w)| params.eta() * d + k + w)
        .collect())
}

/// max_x R − min_x R of [`displacement_residual`]; ≈ 0 for a correct solution.
pub fn residual_flatness(
    t: f64,
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
) -> Result<f64> {
    let r = displacement_residual(t, basis, params, lp, TimeResolution::default())?;
    let (lo, hi) = r
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    Ok(hi - lo)
}
