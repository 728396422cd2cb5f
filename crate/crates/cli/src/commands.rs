use std::path::{Path, PathBuf};

use frac_wear::evolution::{pressure_with, residual_flatness, LoadParams, TimeResolution};
use frac_wear::special_functions::{FracOrder, MittagLeffler};
use frac_wear::spectral::{build_basis, ModelParams, SpectralBasis};
use frac_wear::stationary::{
    deviation_series, rate_fit, stationary_pressure, stationary_state_with, FitMode,
};
use frac_wear::WearError;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{ensure_dir, float, write_json, Csv};

/// Model, load and projected basis for one validated configuration.
pub struct Setup {
    pub params: ModelParams,
    pub load: LoadParams,
    pub basis: SpectralBasis,
    pub res: TimeResolution,
}

pub fn setup(cfg: &RunConfig) -> Result<Setup> {
    cfg.validate()?;
    let params = cfg.model_params()?;
    let load = cfg.load_params()?;
    let initial = cfg.initial_pressure()?;
    let basis = build_basis(&params, cfg.numerics.n_modes, cfg.numerics.n_grid)?
        .project_initial(initial, load.p0_total())?;
    Ok(Setup {
        params,
        load,
        basis,
        res: cfg.resolution(),
    })
}

/// Writes `resolved.json` into a fresh output directory.
pub fn prepare_output(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let dir = ensure_dir(out)?;
    write_json(&dir.join("resolved.json"), cfg)?;
    Ok(dir)
}

/// Uniform output grid on [−a, a].
pub fn x_grid(cfg: &RunConfig) -> Vec<f64> {
    let (a, n) = (cfg.model.a, cfg.numerics.n_x);
    (0..n)
        .map(|i| {
            if i + 1 == n {
                a
            } else {
                -a + 2.0 * a * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

pub fn time_grid(cfg: &RunConfig) -> Vec<f64> {
    let (t_max, n) = (cfg.numerics.t_max, cfg.numerics.t_steps);
    (0..=n)
        .map(|j| {
            if j == n {
                t_max
            } else {
                t_max * j as f64 / n as f64
            }
        })
        .collect()
}

pub fn eig(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let s = setup(cfg)?;
    let dir = prepare_output(cfg, out)?;
    let b = &s.basis;
    let mut table = Csv::new(&["k", "sigma_k", "l_k", "d0_k"]);
    for k in 0..b.n_modes() {
        table.row([
            (k + 1).to_string(),
            float(b.sigma()[k]),
            float(b.l()[k]),
            float(b.d0()[k]),
        ]);
    }
    let mut header = vec!["x".to_string(), "weight".to_string()];
    header.extend((1..=b.n_modes()).map(|k| format!("phi_{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut phi = Csv::new(&header);
    for (i, (&x, &w)) in b.grid().nodes().iter().zip(b.grid().weights()).enumerate() {
        let mut row = vec![x, w];
        row.extend((0..b.n_modes()).map(|k| b.phi(k)[i]));
        phi.floats(&row);
    }
    let files = vec![dir.join("eig.csv"), dir.join("phi.csv")];
    table.write(&files[0])?;
    phi.write(&files[1])?;
    Ok(files)
}

pub fn evolve(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let s = setup(cfg)?;
    let dir = prepare_output(cfg, out)?;
    let xs = x_grid(cfg);
    let ts = time_grid(cfg);
    let field = pressure_with(&xs, &ts, &s.basis, &s.params, &s.load, s.res)?;
    let mut p = Csv::new(&["t", "x", "p"]);
    let mut d = Csv::new(&["t", "k", "d_k"]);
    for (j, &t) in ts.iter().enumerate() {
        for (&x, &v) in xs.iter().zip(&field.values[j]) {
            p.floats(&[t, x, v]);
        }
        for (k, &c) in field.coeffs[j].iter().enumerate() {
            d.row([float(t), (k + 1).to_string(), float(c)]);
        }
    }
    let files = vec![dir.join("pressure.csv"), dir.join("coeffs.csv")];
    p.write(&files[0])?;
    d.write(&files[1])?;
    Ok(files)
}

/// Number of p_∞ snapshots written over one load period.
pub const SNAPSHOTS: usize = 8;

fn write_stationary(s: &Setup, cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let xs = x_grid(cfg);
    let state = stationary_state_with(&s.basis, &s.params, &s.load, &xs, s.res)?;
    let (lo, hi) = state.envelope();
    let mut table = Csv::new(&["x", "p_tilde", "w0", "psi", "envelope_lo", "envelope_hi"]);
    for i in 0..xs.len() {
        table.floats(&[
            xs[i],
            state.p_tilde[i],
            state.w0[i],
            state.psi[i],
            lo[i],
            hi[i],
        ]);
    }
    let mut snaps = Csv::new(&["t", "x", "p_inf"]);
    for j in 0..SNAPSHOTS {
        let t = s.load.period() * j as f64 / SNAPSHOTS as f64;
        for (&x, &p) in xs.iter().zip(&stationary_pressure(&state, t)) {
            snaps.floats(&[t, x, p]);
        }
    }
    let files = vec![dir.join("stationary.csv"), dir.join("snapshots.csv")];
    table.write(&files[0])?;
    snaps.write(&files[1])?;
    Ok(files)
}

pub fn stationary(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let s = setup(cfg)?;
    let dir = prepare_output(cfg, out)?;
    write_stationary(&s, cfg, &dir)
}

/// Window of the decay-rate fit.
pub const FIT_WINDOW: [f64; 2] = [10.0, 100.0];
/// Geometric part of the decay grid: 200 points per [0.1, 100] spacing, up to the fit window.
const DECAY_START: f64 = 0.1;
const DECAY_GEOMETRIC_POINTS: usize = 200;
/// Uniform samples per load period inside the fit window.
const SAMPLES_PER_PERIOD: f64 = 32.0;

/// Geometric spacing on [0.1, 10) followed by period/32 spacing on [10, 100].
pub fn decay_times(period: f64) -> Vec<f64> {
    let ratio = (FIT_WINDOW[1] / DECAY_START).powf(1.0 / (DECAY_GEOMETRIC_POINTS - 1) as f64);
    let mut ts: Vec<f64> = (0..)
        .map(|j| DECAY_START * ratio.powi(j))
        .take_while(|&t| t < FIT_WINDOW[0])
        .collect();
    let dt = period / SAMPLES_PER_PERIOD;
    let n = ((FIT_WINDOW[1] - FIT_WINDOW[0]) / dt).floor() as usize;
    ts.extend((0..=n).map(|j| FIT_WINDOW[0] + j as f64 * dt));
    ts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rates {
    pub alpha: f64,
    pub mu: f64,
    /// `exponential` for α = 1, `algebraic` otherwise.
    pub mode: &'static str,
    pub fitted_rate: f64,
    /// −(μ + ν/(η + σ₁)) for α = 1, −α otherwise.
    pub predicted_rate: f64,
    pub window: [f64; 2],
    /// Per-period maxima entering the fit.
    pub samples: usize,
}

fn write_converge(s: &Setup, dir: &Path) -> Result<(Vec<PathBuf>, Rates)> {
    let nodes = s.basis.grid().nodes().to_vec();
    let state = stationary_state_with(&s.basis, &s.params, &s.load, &nodes, s.res)?;
    let ts = decay_times(s.load.period());
    let devs = deviation_series(&ts, &s.basis, &s.params, &s.load, &state, s.res)?;
    let mut table = Csv::new(&["t", "l2", "linf"]);
    for d in &devs {
        table.floats(&[d.t, d.l2, d.linf]);
    }
    let in_window: Vec<(f64, f64)> = devs
        .iter()
        .filter(|d| d.t >= FIT_WINDOW[0] && d.t <= FIT_WINDOW[1])
        .map(|d| (d.t, d.l2))
        .collect();
    let (times, norms): (Vec<f64>, Vec<f64>) = in_window.into_iter().unzip();
    let unit = s.params.alpha().is_unit();
    let mode = if unit {
        FitMode::Exponential
    } else {
        FitMode::Algebraic
    };
    let fit = rate_fit(&times, &norms, mode, Some(s.load.period()))?;
    let alpha = s.params.alpha().value();
    let rates = Rates {
        alpha,
        mu: s.params.mu(),
        mode: if unit { "exponential" } else { "algebraic" },
        fitted_rate: fit.rate,
        predicted_rate: if unit {
            -s.params.beta(s.basis.sigma()[0])
        } else {
            -alpha
        },
        window: FIT_WINDOW,
        samples: fit.samples.len(),
    };
    let files = vec![dir.join("decay.csv"), dir.join("rates.json")];
    table.write(&files[0])?;
    write_json(&files[1], &rates)?;
    Ok((files, rates))
}

pub fn converge(cfg: &RunConfig, out: &Path) -> Result<(Vec<PathBuf>, Rates)> {
    let s = setup(cfg)?;
    let dir = prepare_output(cfg, out)?;
    write_converge(&s, &dir)
}

/// Times at which the displacement-balance residual is reported.
pub const DIAGNOSTIC_TIMES: [f64; 3] = [1.0, 5.0, 20.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatnessSample {
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub residual_flatness: Vec<FlatnessSample>,
    pub note: Option<String>,
}

fn diagnostics(s: &Setup) -> Result<Diagnostics> {
    let mut samples = Vec::new();
    for t in DIAGNOSTIC_TIMES {
        match residual_flatness(t, &s.basis, &s.params, &s.load) {
            Ok(value) => samples.push(FlatnessSample { t, value }),
            Err(WearError::UnsupportedLimit(msg)) => {
                return Ok(Diagnostics {
                    residual_flatness: Vec::new(),
                    note: Some(format!("wear-term diagnostics skipped: {msg}")),
                })
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Diagnostics {
        residual_flatness: samples,
        note: None,
    })
}

pub const SWEEP_ALPHAS: [f64; 3] = [0.8, 1.0, 1.8];
pub const SWEEP_MUS: [f64; 2] = [1.2, 0.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub kind: &'static str,
    pub columns: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseEntry {
    pub name: String,
    pub alpha: f64,
    pub mu: f64,
    pub files: Vec<FileEntry>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Panel {
    pub case: String,
    pub x_scale: &'static str,
    pub y_scale: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureEntry {
    pub kind: &'static str,
    pub mu: f64,
    pub panels: Vec<Panel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub cases: Vec<CaseEntry>,
    pub figures: Vec<FigureEntry>,
}

pub fn case_name(alpha: f64, mu: f64) -> String {
    format!("alpha{alpha}_mu{mu}")
}

fn run_case(
    cfg: &RunConfig,
    basis: &SpectralBasis,
    root: &Path,
    alpha: f64,
    mu: f64,
) -> Result<CaseEntry> {
    let mut case_cfg = cfg.clone();
    case_cfg.model.alpha = alpha;
    case_cfg.model.mu = mu;
    case_cfg.validate()?;
    let s = Setup {
        params: case_cfg.model_params()?,
        load: case_cfg.load_params()?,
        basis: basis.clone(),
        res: case_cfg.resolution(),
    };
    let name = case_name(alpha, mu);
    let dir = prepare_output(&case_cfg, &root.join(&name))?;
    write_stationary(&s, &case_cfg, &dir)?;
    write_converge(&s, &dir)?;
    let diag = diagnostics(&s)?;
    write_json(&dir.join("diagnostics.json"), &diag)?;
    let entry = |file: &str, kind, columns: &[&'static str]| FileEntry {
        path: format!("{name}/{file}"),
        kind,
        columns: columns.to_vec(),
    };
    Ok(CaseEntry {
        files: vec![
            entry(
                "stationary.csv",
                "stationary",
                &["x", "p_tilde", "w0", "psi", "envelope_lo", "envelope_hi"],
            ),
            entry("snapshots.csv", "snapshots", &["t", "x", "p_inf"]),
            entry("decay.csv", "decay", &["t", "l2", "linf"]),
            entry("rates.json", "rates", &[]),
            entry("diagnostics.json", "diagnostics", &[]),
            entry("resolved.json", "config", &[]),
        ],
        notes: diag.note.into_iter().collect(),
        name,
        alpha,
        mu,
    })
}

/// α × μ sweep with per-case outputs and `manifest.json` at the root of `out`.
pub fn figures(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    let root = prepare_output(cfg, out)?;
    // The basis depends on a, C_K and the initial data only.
    let base = setup(cfg)?;
    let pairs: Vec<(f64, f64)> = SWEEP_MUS
        .iter()
        .flat_map(|&mu| SWEEP_ALPHAS.iter().map(move |&alpha| (alpha, mu)))
        .collect();
    let cases = pairs
        .par_iter()
        .map(|&(alpha, mu)| run_case(cfg, &base.basis, &root, alpha, mu))
        .collect::<Result<Vec<_>>>()?;
    let mut figures = Vec::new();
    for mu in SWEEP_MUS {
        for kind in ["stationary-snapshots", "envelope-overlay", "decay"] {
            let panels = SWEEP_ALPHAS
                .iter()
                .map(|&alpha| {
                    let (x_scale, y_scale) = match kind {
                        "decay" if alpha == 1.0 => ("linear", "log"),
                        "decay" => ("log", "log"),
                        _ => ("linear", "linear"),
                    };
                    Panel {
                        case: case_name(alpha, mu),
                        x_scale,
                        y_scale,
                    }
                })
                .collect();
            figures.push(FigureEntry { kind, mu, panels });
        }
    }
    let manifest = Manifest { cases, figures };
    write_json(&root.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// (x, E_α(−x), ℰ_α(x)) on a log-spaced grid.
pub fn mlf_table(alpha: f64, x_min: f64, x_max: f64, n: usize, out: &Path) -> Result<PathBuf> {
    let order = FracOrder::new(alpha)?;
    if !(x_min > 0.0 && x_max > x_min && n >= 2) {
        return Err(WearError::Domain(format!(
            "need 0 < x_min < x_max and n >= 2, got x_min = {x_min}, x_max = {x_max}, n = {n}"
        ))
        .into());
    }
    let ml = MittagLeffler::new(order);
    let mut table = Csv::new(&["x", "e_neg", "cal_e"]);
    let ratio = (x_max / x_min).ln() / (n - 1) as f64;
    for i in 0..n {
        let x = if i + 1 == n {
            x_max
        } else {
            x_min * (ratio * i as f64).exp()
        };
        table.floats(&[x, ml.e_neg(x)?, ml.cal_e(x)?]);
    }
    let dir = ensure_dir(out)?;
    let path = dir.join("mlf_table.csv");
    table.write(&path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_grid_layout() {
        let period = 2.0 * std::f64::consts::PI / 1.5;
        let ts = decay_times(period);
        assert_eq!(ts[0], 0.1);
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
        let inside = ts.iter().filter(|&&t| t >= 10.0).count();
        assert!(inside as f64 >= 90.0 / period * 32.0);
        assert!(*ts.last().unwrap() <= 100.0);
    }

    #[test]
    fn grids_hit_end_points() {
        let cfg = RunConfig::default();
        let xs = x_grid(&cfg);
        assert_eq!((xs[0], xs[100]), (-1.0, 1.0));
        let ts = time_grid(&cfg);
        assert_eq!((ts[0], ts[500], ts.len()), (0.0, 50.0, 501));
    }

    #[test]
    fn case_names() {
        assert_eq!(case_name(0.8, 1.2), "alpha0.8_mu1.2");
        assert_eq!(case_name(1.0, 0.0), "alpha1_mu0");
    }
}
