//! Time-harmonic stationary state and the convergence of the transient
//! solution toward it.
//!
//! With the same modal constants as the transient solution (s_k, β_k, b_k, g_k
//! and load coupling c_k = 2a·l_k), letting t → ∞ in d_k(t) gives
//!
//! p_∞(x,t) = p̃_∞(x) − W₁(x) cos ωt − W₂(x) sin ωt = p̃_∞(x) − W₀(x) cos(ωt − ψ(x)),
//!
//! p̃_∞ = (P₀ − P_Δ)/2a + Σ_k [d_k⁰ μs_k/(μs_k + ν) + P_Δ μ c_k/(2a(μs_k + ν))] φ_k,
//! W₁  = −P_Δ/2a + (P_Δ/2a) Σ_k (c_k/s_k)[β_k^{1/α−1}(ν/s_k) C_k^c + 1] φ_k,
//! W₂  = (P_Δ/2a) Σ_k (ν c_k/s_k²) β_k^{1/α−1} C_k^s φ_k,
//!
//! where C_k^c + i C_k^s = ∫₀^∞ ℰ_α(b_k τ) e^{iωτ} dτ. The deviation
//! δ_p = p − p_∞ = Σ_k r_k(t) φ_k has
//!
//! r_k(t) = g_k E_α(−β_k t^α)(d_k⁰ + P_Δ c_k/(2a s_k))
//!          + (ν c_k P_Δ/(2a s_k²)) β_k^{1/α−1} ∫_t^∞ ℰ_α(b_k τ) cos(ω(t − τ)) dτ.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, WearError};
use crate::evolution::{
    check_mode, check_times, cumulative_oscillatory, load, modal_coefficients, panel_nodes,
    prepare, LoadParams, Mode, TimeResolution,
};
use crate::quad::{graded_panels, GaussLegendre, Panel};
use crate::special_functions::MittagLeffler;
use crate::spectral::{ModelParams, SpectralBasis};

/// Cutoff T = max(50/b, 20·2π/ω) beyond which the improper integrals are
/// replaced by their analytic tails.
pub fn moment_cutoff(b: f64, omega: f64) -> f64 {
    (50.0 / b).max(20.0 * 2.0 * PI / omega)
}

/// ∫_T^∞ s^{−m} e^{iωs} ds by repeated integration by parts,
/// −e^{iωT} Σ_j (m)_j T^{−m−j} / (iω)^{j+1}, truncated at its smallest term.
fn power_oscillatory_tail(m: f64, t: f64, omega: f64) -> Complex64 {
    let iw = Complex64::new(0.0, omega);
    let mut term = t.powf(-m) / iw;
    let mut sum = term;
    for j in 0..60 {
        let next = term * ((m + j as f64) / t) / iw;
        if next.norm() >= term.norm() || next.norm() < 1e-20 * sum.norm() {
            break;
        }
        term = next;
        sum += term;
    }
    -Complex64::from_polar(1.0, omega * t) * sum
}

/// Analytic ∫_T^∞ ℰ_α(b s) e^{iωs} ds; requires b·T in the asymptotic range.
pub(crate) fn analytic_tail(ml: &MittagLeffler, b: f64, omega: f64, t: f64) -> Complex64 {
    let iw = Complex64::new(0.0, omega);
    if ml.order().is_unit() {
        // ℰ₁(z) = −e^{−z}.
        return -((iw - b) * t).exp() / (b - iw);
    }
    let mut sum: Complex64 = ml
        .kernel_tail_terms(b * t)
        .into_iter()
        .map(|(coef, p)| coef * b.powf(-p) * power_oscillatory_tail(p, t, omega))
        .sum();
    if let Some((amp, re, im)) = ml.pole() {
        // (2/α) Re[q e^{bqs}] = (1/α)(q e^{bqs} + q̄ e^{bq̄s}) with q = e^{iπ/α}.
        for q in [Complex64::new(re, im), Complex64::new(re, -im)] {
            let rate = b * q + iw;
            sum += -0.5 * amp * q * (rate * t).exp() / rate;
        }
    }
    sum
}

/// C^c + iC^s = ∫₀^∞ ℰ_α(b τ) e^{iωτ} dτ: graded quadrature to the cutoff plus the analytic tail.
pub(crate) fn moment(
    ml: &MittagLeffler,
    b: f64,
    omega: f64,
    res: TimeResolution,
    cutoff_scale: f64,
) -> Complex64 {
    let cutoff = cutoff_scale * moment_cutoff(b, omega);
    cumulative_oscillatory(ml, b, omega, &[cutoff], res)[0] + analytic_tail(ml, b, omega, cutoff)
}

/// (C_k^c, C_k^s) for 1-based mode `k`.
pub fn oscillatory_moments(
    k: usize,
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
) -> Result<(f64, f64)> {
    oscillatory_moments_with(k, basis, params, lp, TimeResolution::default(), 1.0)
}

/// As [`oscillatory_moments`] with explicit resolution and cutoff multiplier.
pub fn oscillatory_moments_with(
    k: usize,
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
    res: TimeResolution,
    cutoff_scale: f64,
) -> Result<(f64, f64)> {
    basis.check_params(params)?;
    let idx = check_mode(k, basis)?;
    if !(cutoff_scale >= 1.0) {
        return Err(WearError::Domain(format!(
            "cutoff scale must be >= 1, got {cutoff_scale}"
        )));
    }
    let mode = Mode::new(idx, basis, params);
    let ml = MittagLeffler::new(params.alpha());
    let c = moment(&ml, mode.b, lp.omega(), res, cutoff_scale);
    Ok((c.re, c.im))
}

/// ∫_{t_j}^∞ ℰ_α(b s) e^{iωs} ds at nondecreasing `times`, accumulated
/// backward from the analytic tail so small late-time values keep their
/// relative accuracy.
pub(crate) fn oscillatory_tails(
    ml: &MittagLeffler,
    b: f64,
    omega: f64,
    times: &[f64],
    res: TimeResolution,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); times.len()];
    let Some(&t_last) = times.last() else {
        return out;
    };
    let end = t_last + moment_cutoff(b, omega);
    let t_first = times[0];
    let eps = res.first_width(b, omega);
    let mut cuts: Vec<f64> = graded_panels(end, eps, res.max_width(b, omega))
        .iter()
        .map(|p| p.a)
        .filter(|&a| a > t_first)
        .collect();
    cuts.extend_from_slice(times);
    cuts.push(end);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let rule = GaussLegendre::new(res.order);
    let alpha = ml.alpha();
    let integrate = |lo: f64, hi: f64| -> Complex64 {
        let panel = Panel {
            a: lo,
            b: hi,
            singular: lo == 0.0,
        };
        panel_nodes(&[panel], alpha, &rule)
            .into_iter()
            .map(|(s, w)| Complex64::from_polar(w * ml.kernel(b * s), omega * s))
            .sum()
    };
    let mut acc = analytic_tail(ml, b, omega, end);
    let mut hi = end;
    let mut j = times.len();
    for &cut in cuts.iter().rev().skip(1) {
        acc += integrate(cut, hi);
        hi = cut;
        while j > 0 && times[j - 1] == cut {
            j -= 1;
            out[j] = acc;
        }
    }
    out
}

/// Stationary state sampled on `x_grid`, plus the modal data needed to
/// evaluate it anywhere in [−a, a].
#[derive(Debug, Clone)]
pub struct StationaryState {
    pub x_grid: Vec<f64>,
    pub p_tilde: Vec<f64>,
    /// Amplitude W₀ = √(W₁² + W₂²).
    pub w0: Vec<f64>,
    /// Phase ψ ∈ (−π, π].
    pub psi: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    /// C_k^{c,ω} per mode.
    pub cc: Vec<f64>,
    /// C_k^{s,ω} per mode.
    pub cs: Vec<f64>,
    pub omega: f64,
    modal: Modal,
}

/// Constant parts and mode coefficients of p̃_∞, W₁, W₂.
#[derive(Debug, Clone)]
struct Modal {
    mean: f64,
    w1_const: f64,
    tilde: Vec<f64>,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl Modal {
    fn fields(&self, phi: &[f64]) -> (f64, f64, f64) {
        let dot = |c: &[f64]| c.iter().zip(phi).map(|(c, f)| c * f).sum::<f64>();
        (
            self.mean + dot(&self.tilde),
            self.w1_const + dot(&self.w1),
            dot(&self.w2),
        )
    }
}

/// W₀ and ψ = sign(W₂)·arccos(W₁/W₀), with sign(0) = +1 and ψ = 0 where W₀ = 0.
pub fn amplitude_phase(w1: f64, w2: f64) -> (f64, f64) {
    let w0 = w1.hypot(w2);
    if w0 == 0.0 {
        return (0.0, 0.0);
    }
    let psi = (w1 / w0).clamp(-1.0, 1.0).acos();
    (w0, if w2 < 0.0 { -psi } else { psi })
}

pub fn stationary_state(
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
    x_grid: &[f64],
) -> Result<StationaryState> {
    stationary_state_with(basis, params, lp, x_grid, TimeResolution::default())
}

pub fn stationary_state_with(
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
    x_grid: &[f64],
    res: TimeResolution,
) -> Result<StationaryState> {
    prepare(basis, params)?;
    let a = params.a();
    if let Some(&x) = x_grid.iter().find(|x| !(x.abs() <= a)) {
        return Err(WearError::Domain(format!(
            "x = {x} lies outside [-a, a] with a = {a}"
        )));
    }
    let ml = MittagLeffler::new(params.alpha());
    let (mu, nu) = (params.mu(), params.nu());
    let pd = lp.p_delta();
    let omega = lp.omega();
    let modes: Vec<Mode> = (0..basis.n_modes())
        .map(|k| Mode::new(k, basis, params))
        .collect();
    let moments: Vec<Complex64> = modes
        .par_iter()
        .map(|m| moment(&ml, m.b, omega, res, 1.0))
        .collect();
    let mut modal = Modal {
        mean: (lp.p0_total() - pd) / (2.0 * a),
        w1_const: -pd / (2.0 * a),
        tilde: Vec::with_capacity(modes.len()),
        w1: Vec::with_capacity(modes.len()),
        w2: Vec::with_capacity(modes.len()),
    };
    for (m, c) in modes.iter().zip(&moments) {
        let denom = mu * m.s + nu;
        modal
            .tilde
            .push(m.d0 * mu * m.s / denom + pd * mu * m.c / (2.0 * a * denom));
        // m.conv = ν c/(2a s²) β^{1/α−1}.
        modal.w1.push(pd * (m.conv * c.re + m.c / (2.0 * a * m.s)));
        modal.w2.push(pd * m.conv * c.im);
    }
    let n = x_grid.len();
    let mut state = StationaryState {
        x_grid: x_grid.to_vec(),
        p_tilde: Vec::with_capacity(n),
        w0: Vec::with_capacity(n),
        psi: Vec::with_capacity(n),
        w1: Vec::with_capacity(n),
        w2: Vec::with_capacity(n),
        cc: moments.iter().map(|c| c.re).collect(),
        cs: moments.iter().map(|c| c.im).collect(),
        omega,
        modal,
    };
    for &x in x_grid {
        let (pt, w1, w2) = state.modal.fields(&basis.modes_at(x));
        let (w0, psi) = amplitude_phase(w1, w2);
        state.p_tilde.push(pt);
        state.w1.push(w1);
        state.w2.push(w2);
        state.w0.push(w0);
        state.psi.push(psi);
    }
    Ok(state)
}

impl StationaryState {
    /// Lower and upper envelope p̃_∞ ∓ W₀.
    pub fn envelope(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self
            .p_tilde
            .iter()
            .zip(&self.w0)
            .map(|(p, w)| p - w)
            .collect();
        let hi = self
            .p_tilde
            .iter()
            .zip(&self.w0)
            .map(|(p, w)| p + w)
            .collect();
        (lo, hi)
    }

    /// p_∞ at nodes with mode values `phi[i][k]` (not tied to `x_grid`).
    fn pressure_from_modes(&self, phi: &[Vec<f64>], t: f64) -> Vec<f64> {
        let (c, s) = ((self.omega * t).cos(), (self.omega * t).sin());
        phi.iter()
            .map(|f| {
                let (pt, w1, w2) = self.modal.fields(f);
                pt - w1 * c - w2 * s
            })
            .collect()
    }

    /// Coefficients of p̃_∞, W₁, W₂ on the retained modes.
    pub fn modal_coefficients(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.modal.tilde, &self.modal.w1, &self.modal.w2)
    }
}

/// p_∞(x, t) = p̃_∞(x) − W₀(x) cos(ωt − ψ(x)) on the state's grid.
pub fn stationary_pressure(state: &StationaryState, t: f64) -> Vec<f64> {
    state
        .p_tilde
        .iter()
        .zip(&state.w0)
        .zip(&state.psi)
        .map(|((p, w0), psi)| p - w0 * (state.omega * t - psi).cos())
        .collect()
}

/// Norms of δ_p = p − p_∞ at one time, with the discrepancy between the two
/// evaluation routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub t: f64,
    /// ‖δ_p‖_{L²} = (Σ_k r_k²)^{1/2}.
    pub l2: f64,
    /// max |δ_p| over the quadrature nodes.
    pub linf: f64,
    /// ‖δ_p(r_k route) − (p − p_∞)‖_{L²}.
    pub path_difference: f64,
    /// Rounding floor of the p − p_∞ route: it subtracts two fields of size ‖p_∞‖.
    pub path_floor: f64,
}

impl Deviation {
    pub fn relative_path_difference(&self) -> f64 {
        self.path_difference / self.l2
    }
}

/// Relative tolerance between the two deviation routes.
pub const PATH_TOLERANCE: f64 = 1e-5;

/// δ_p at one time; fails if the r_k route and p − p_∞ disagree.
pub fn deviation(
    t: f64,
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
    state: &StationaryState,
) -> Result<Deviation> {
    Ok(deviation_series(&[t], basis, params, lp, state, TimeResolution::default())?[0])
}

/// δ_p at nondecreasing `times`, each checked for route consistency.
pub fn deviation_series(
    times: &[f64],
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
    state: &StationaryState,
    res: TimeResolution,
) -> Result<Vec<Deviation>> {
    let out = deviation_paths(times, basis, params, lp, state, res)?;
    for d in &out {
        if !(d.path_difference <= PATH_TOLERANCE * d.l2 + d.path_floor) {
            return Err(WearError::Consistency(format!(
                "deviation routes disagree at t = {}: |difference| = {:e}, |δ_p| = {:e}",
                d.t, d.path_difference, d.l2
            )));
        }
    }
    Ok(out)
}

/// r_k(t_j) for all modes; result[j][k].
pub fn deviation_coefficients(
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
    let (pd, omega) = (lp.p_delta(), lp.omega());
    let columns: Vec<Vec<f64>> = (0..basis.n_modes())
        .into_par_iter()
        .map(|k| {
            let m = Mode::new(k, basis, params);
            let transient = m.g * (m.d0 + pd * m.c / (2.0 * a * m.s));
            let tails = if m.conv == 0.0 || pd == 0.0 {
                vec![Complex64::new(0.0, 0.0); times.len()]
            } else {
                oscillatory_tails(&ml, m.b, omega, times, res)
            };
            times
                .iter()
                .zip(&tails)
                .map(|(&t, tail)| {
                    // ∫_t^∞ ℰ(bτ) cos(ω(t − τ)) dτ = Re[e^{iωt} conj(tail)].
                    let lagged = (Complex64::from_polar(1.0, omega * t) * tail.conj()).re;
                    transient * ml.relax(m.b * t) + pd * m.conv * lagged
                })
                .collect()
        })
        .collect();
    Ok((0..times.len())
        .map(|j| columns.iter().map(|c| c[j]).collect())
        .collect())
}

/// Both deviation routes without the consistency check.
pub fn deviation_paths(
    times: &[f64],
    basis: &SpectralBasis,
    params: &ModelParams,
    lp: &LoadParams,
    state: &StationaryState,
    res: TimeResolution,
) -> Result<Vec<Deviation>> {
    if state.modal.tilde.len() != basis.n_modes() {
        return Err(WearError::Input(format!(
            "stationary state has {} modes, basis has {}",
            state.modal.tilde.len(),
            basis.n_modes()
        )));
    }
    let r = deviation_coefficients(times, basis, params, lp, res)?;
    let d = modal_coefficients(times, basis, params, lp, res)?;
    let grid = basis.grid();
    let n_modes = basis.n_modes();
    let phi: Vec<Vec<f64>> = (0..grid.len())
        .map(|i| (0..n_modes).map(|k| basis.phi(k)[i]).collect())
        .collect();
    let a = params.a();
    let l2_on_grid = |v: &[f64]| {
        grid.integrate(&v.iter().map(|x| x * x).collect::<Vec<_>>())
            .sqrt()
    };
    Ok(times
        .iter()
        .zip(r.iter().zip(&d))
        .map(|(&t, (r, d))| {
            let dot = |c: &[f64], f: &[f64]| c.iter().zip(f).map(|(c, f)| c * f).sum::<f64>();
            let direct: Vec<f64> = phi.iter().map(|f| dot(r, f)).collect();
            let p_inf = state.pressure_from_modes(&phi, t);
            let mean = load(t, lp) / (2.0 * a);
            let diff: Vec<f64> = phi
                .iter()
                .zip(&p_inf)
                .zip(&direct)
                .map(|((f, q), x)| x - (mean + dot(d, f) - q))
                .collect();
            Deviation {
                t,
                l2: r.iter().map(|x| x * x).sum::<f64>().sqrt(),
                linf: direct.iter().fold(0.0, |m, x| m.max(x.abs())),
                path_difference: l2_on_grid(&diff),
                path_floor: 64.0 * f64::EPSILON * l2_on_grid(&p_inf),
            }
        })
        .collect())
}

/// Coordinates for the decay-rate fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// log‖δ‖ against log t: slope −α for algebraic decay.
    Algebraic,
    /// log‖δ‖ against t: slope −β for exponential decay.
    Exponential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    /// (t, norm) pairs that entered the fit.
    pub samples: Vec<(f64, f64)>,
}

/// Minimum number of samples entering a fit.
pub const MIN_FIT_SAMPLES: usize = 8;

/// Largest norm in each full window [t₀ + mT, t₀ + (m+1)T), with its time.
pub fn per_period_maxima(times: &[f64], norms: &[f64], period: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let (Some(&t0), Some(&t_end)) = (times.first(), times.last()) else {
        return out;
    };
    let n_windows = ((t_end - t0) / period * (1.0 + 1e-12)).floor() as usize;
    for m in 0..n_windows {
        let (lo, hi) = (t0 + m as f64 * period, t0 + (m + 1) as f64 * period);
        let best = times
            .iter()
            .zip(norms)
            .filter(|(&t, _)| t >= lo && t < hi)
            .max_by(|x, y| x.1.total_cmp(y.1));
        if let Some((&t, &n)) = best {
            out.push((t, n));
        }
    }
    out
}

/// Least-squares decay rate of `norms`, optionally reduced to per-period maxima first.
pub fn rate_fit(
    times: &[f64],
    norms: &[f64],
    mode: FitMode,
    period: Option<f64>,
) -> Result<RateFit> {
    if times.len() != norms.len() {
        return Err(WearError::Input(format!(
            "{} times but {} norms",
            times.len(),
            norms.len()
        )));
    }
    if let Some(&n) = norms.iter().find(|n| !(**n > 0.0 && n.is_finite())) {
        return Err(WearError::Domain(format!(
            "norms must be positive and finite, got {n}"
        )));
    }
    if mode == FitMode::Algebraic {
        if let Some(&t) = times.iter().find(|t| !(**t > 0.0)) {
            return Err(WearError::Domain(format!(
                "log-log fit needs t > 0, got {t}"
            )));
        }
    }
    let samples = match period {
        Some(p) if p > 0.0 => per_period_maxima(times, norms, p),
        Some(p) => {
            return Err(WearError::Domain(format!(
                "period must be positive, got {p}"
            )))
        }
        None => times.iter().copied().zip(norms.iter().copied()).collect(),
    };
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(WearError::Input(format!(
            "rate fit needs at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let xs: Vec<f64> = samples
        .iter()
        .map(|&(t, _)| {
            if mode == FitMode::Algebraic {
                t.ln()
            } else {
                t
            }
        })
        .collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, n)| n.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(WearError::Input(
            "rate fit needs distinct sample times".into(),
        ));
    }
    let rate = sxy / sxx;
    Ok(RateFit {
        rate,
        intercept: my - rate * mx,
        samples,
    })
}
