//! Run configuration: a flat `key = value` file with dotted keys, e.g.
//!
//! ```text
//! # comments run to end of line
//! model.alpha = 0.8
//! load.omega = 1.5
//! initial.kind = semicircle
//! numerics.n_modes = 60
//! ```
//!
//! Missing keys take the reference values; command-line flags override the file.

use std::fs;
use std::path::{Path, PathBuf};

use frac_wear::evolution::{LoadParams, TimeResolution};
use frac_wear::spectral::{semicircle, ModelParams};
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSection {
    pub a: f64,
    pub eta: f64,
    pub nu: f64,
    pub mu: f64,
    pub alpha: f64,
    pub c_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadSection {
    pub p0: f64,
    pub p_delta: f64,
    pub omega: f64,
    pub allow_negative: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    Semicircle,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialSection {
    pub kind: InitialKind,
    /// Two-column `x,p` CSV used when `kind = table`.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericsSection {
    pub n_modes: usize,
    pub n_grid: usize,
    pub t_max: f64,
    pub t_steps: usize,
    /// Points of the uniform output grid on [−a, a].
    pub n_x: usize,
    pub conv_order: usize,
    pub conv_panels: f64,
    pub conv_first_panel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: ModelSection,
    pub load: LoadSection,
    pub initial: InitialSection,
    pub numerics: NumericsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let res = TimeResolution::default();
        Self {
            model: ModelSection {
                a: 1.0,
                eta: 1.0,
                nu: 2.0,
                mu: 1.2,
                alpha: 1.0,
                c_k: 5f64.ln(),
            },
            load: LoadSection {
                p0: 6.0,
                p_delta: 0.5,
                omega: 1.5,
                allow_negative: false,
            },
            initial: InitialSection {
                kind: InitialKind::Semicircle,
                file: None,
            },
            numerics: NumericsSection {
                n_modes: 60,
                n_grid: 512,
                t_max: 50.0,
                t_steps: 500,
                n_x: 101,
                conv_order: res.order,
                conv_panels: res.panels_per_scale,
                conv_first_panel: res.first_panel,
            },
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| CliError::value(key, value, "expected a number"))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| CliError::value(key, value, "expected a nonnegative integer"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(CliError::value(key, value, "expected true or false")),
    }
}

impl RunConfig {
    /// Reads a config file on top of the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Syntax {
                    line: i + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = key.trim();
            if seen.iter().any(|k| k == key) {
                return Err(CliError::Syntax {
                    line: i + 1,
                    message: format!("duplicate key `{key}`"),
                });
            }
            seen.push(key.to_string());
            self.set(key, value.trim())?;
        }
        Ok(())
    }

    /// Sets one dotted key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let f = |v: &mut f64| -> Result<()> {
            *v = parse_f64(key, value)?;
            Ok(())
        };
        match key {
            "model.a" => f(&mut self.model.a),
            "model.eta" => f(&mut self.model.eta),
            "model.nu" => f(&mut self.model.nu),
            "model.mu" => f(&mut self.model.mu),
            "model.alpha" => f(&mut self.model.alpha),
            "model.c_k" => f(&mut self.model.c_k),
            "load.p0" => f(&mut self.load.p0),
            "load.p_delta" => f(&mut self.load.p_delta),
            "load.omega" => f(&mut self.load.omega),
            "load.allow_negative" => {
                self.load.allow_negative = parse_bool(key, value)?;
                Ok(())
            }
            "initial.kind" => {
                self.initial.kind = match value {
                    "semicircle" => InitialKind::Semicircle,
                    "table" => InitialKind::Table,
                    _ => return Err(CliError::value(key, value, "expected semicircle or table")),
                };
                Ok(())
            }
            "initial.file" => {
                self.initial.file = Some(PathBuf::from(value));
                Ok(())
            }
            "numerics.n_modes" => {
                self.numerics.n_modes = parse_usize(key, value)?;
                Ok(())
            }
            "numerics.n_grid" => {
                self.numerics.n_grid = parse_usize(key, value)?;
                Ok(())
            }
            "numerics.t_max" => f(&mut self.numerics.t_max),
            "numerics.t_steps" => {
                self.numerics.t_steps = parse_usize(key, value)?;
                Ok(())
            }
            "numerics.n_x" => {
                self.numerics.n_x = parse_usize(key, value)?;
                Ok(())
            }
            "numerics.conv_order" => {
                self.numerics.conv_order = parse_usize(key, value)?;
                Ok(())
            }
            "numerics.conv_panels" => f(&mut self.numerics.conv_panels),
            "numerics.conv_first_panel" => f(&mut self.numerics.conv_first_panel),
            _ => Err(CliError::UnknownKey(key.to_string())),
        }
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let m = &self.model;
        Ok(ModelParams::new(m.a, m.eta, m.nu, m.mu, m.alpha, m.c_k)?)
    }

    pub fn load_params(&self) -> Result<LoadParams> {
        let l = &self.load;
        Ok(if l.allow_negative {
            LoadParams::allow_negative_load(l.p0, l.p_delta, l.omega)?
        } else {
            LoadParams::new(l.p0, l.p_delta, l.omega)?
        })
    }

    pub fn resolution(&self) -> TimeResolution {
        TimeResolution {
            order: self.numerics.conv_order,
            panels_per_scale: self.numerics.conv_panels,
            first_panel: self.numerics.conv_first_panel,
        }
    }

    /// Checks every section; model and load constraints come from the core types.
    pub fn validate(&self) -> Result<()> {
        self.model_params()?;
        self.load_params()?;
        let n = &self.numerics;
        let bad =
            |key: &str, value: String, message: &str| Err(CliError::value(key, &value, message));
        if n.n_modes == 0 {
            return bad(
                "numerics.n_modes",
                n.n_modes.to_string(),
                "need at least one mode",
            );
        }
        if n.n_grid < 64 || !n.n_grid.is_multiple_of(16) {
            return bad(
                "numerics.n_grid",
                n.n_grid.to_string(),
                "must be a multiple of 16 and at least 64",
            );
        }
        if n.n_grid < 4 * n.n_modes {
            return bad(
                "numerics.n_grid",
                n.n_grid.to_string(),
                "must be at least 4 × numerics.n_modes",
            );
        }
        if !(n.t_max > 0.0 && n.t_max.is_finite()) {
            return bad("numerics.t_max", n.t_max.to_string(), "must be positive");
        }
        if n.t_steps == 0 {
            return bad(
                "numerics.t_steps",
                n.t_steps.to_string(),
                "must be at least 1",
            );
        }
        if n.n_x < 2 {
            return bad("numerics.n_x", n.n_x.to_string(), "must be at least 2");
        }
        if !(2..=64).contains(&n.conv_order) {
            return bad(
                "numerics.conv_order",
                n.conv_order.to_string(),
                "must lie in 2..=64",
            );
        }
        if !(n.conv_panels >= 1.0 && n.conv_panels.is_finite()) {
            return bad(
                "numerics.conv_panels",
                n.conv_panels.to_string(),
                "must be at least 1",
            );
        }
        if !(n.conv_first_panel > 0.0 && n.conv_first_panel <= 1.0) {
            return bad(
                "numerics.conv_first_panel",
                n.conv_first_panel.to_string(),
                "must lie in (0, 1]",
            );
        }
        if self.initial.kind == InitialKind::Table && self.initial.file.is_none() {
            return bad(
                "initial.file",
                String::new(),
                "required when initial.kind = table",
            );
        }
        Ok(())
    }

    /// Initial pressure p(x, 0).
    pub fn initial_pressure(&self) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
        match self.initial.kind {
            InitialKind::Semicircle => Ok(Box::new(semicircle(self.model.a, self.load.p0))),
            InitialKind::Table => {
                let path = self.initial.file.as_ref().ok_or_else(|| {
                    CliError::value("initial.file", "", "required when initial.kind = table")
                })?;
                let table = read_table(path)?;
                Ok(Box::new(move |x| table.eval(x)))
            }
        }
    }
}

/// Piecewise-linear profile through sorted (x, p) samples, constant beyond the ends.
#[derive(Debug, Clone)]
pub struct Table {
    x: Vec<f64>,
    p: Vec<f64>,
}

impl Table {
    pub fn new(mut rows: Vec<(f64, f64)>) -> std::result::Result<Self, String> {
        if rows.len() < 2 {
            return Err("need at least two rows".into());
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if rows.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err("x values must be distinct".into());
        }
        Ok(Self {
            x: rows.iter().map(|r| r.0).collect(),
            p: rows.iter().map(|r| r.1).collect(),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.p[0];
        }
        if x >= self.x[n - 1] {
            return self.p[n - 1];
        }
        let i = self.x.partition_point(|&xi| xi <= x) - 1;
        let w = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.p[i] + w * (self.p[i + 1] - self.p[i])
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Option<(f64, f64)> = line
            .split_once(',')
            .and_then(|(x, p)| Some((x.trim().parse().ok()?, p.trim().parse().ok()?)));
        match parsed {
            Some(row) => rows.push(row),
            // A non-numeric first line is a header.
            None if i == 0 => continue,
            None => {
                return Err(CliError::value(
                    "initial.file",
                    &path.display().to_string(),
                    format!("line {}: expected `x,p`", i + 1),
                ))
            }
        }
    }
    Table::new(rows).map_err(|m| CliError::value("initial.file", &path.display().to_string(), m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_reference_values() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("\n# nothing\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.model.c_k, 5f64.ln());
        assert_eq!(cfg.numerics.n_modes, 60);
        cfg.validate().unwrap();
    }

    #[test]
    fn keys_and_comments() {
        let mut cfg = RunConfig::default();
        cfg.apply_text(
            "model.alpha = 0.8  # order\nload.omega=2\ninitial.kind = table\ninitial.file = p.csv",
        )
        .unwrap();
        assert_eq!(cfg.model.alpha, 0.8);
        assert_eq!(cfg.load.omega, 2.0);
        assert_eq!(cfg.initial.kind, InitialKind::Table);
    }

    #[test]
    fn syntax_errors() {
        let mut cfg = RunConfig::default();
        assert!(matches!(
            cfg.apply_text("model.a 1"),
            Err(CliError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            cfg.apply_text("model.b = 1"),
            Err(CliError::UnknownKey(_))
        ));
        assert!(matches!(
            cfg.apply_text("model.a = x"),
            Err(CliError::Value { .. })
        ));
        assert!(matches!(
            cfg.apply_text("model.a = 1\nmodel.a = 1"),
            Err(CliError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn model_constraints_surface_with_names() {
        let mut cfg = RunConfig::default();
        cfg.set("model.a", "2").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("a ≠ 2"), "{err}");
        assert_eq!(err.exit_code(), 2);

        let mut cfg = RunConfig::default();
        cfg.set("model.c_k", "0").unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("c_k") && err.contains("C_K > log a"), "{err}");
    }

    #[test]
    fn load_admissibility() {
        let mut cfg = RunConfig::default();
        cfg.set("load.p_delta", "4").unwrap();
        assert!(cfg.validate().is_err());
        cfg.set("load.allow_negative", "true").unwrap();
        cfg.validate().unwrap();
    }

    #[test]
    fn numerics_constraints() {
        for (key, value) in [
            ("numerics.n_grid", "100"),
            ("numerics.n_modes", "200"),
            ("numerics.t_max", "0"),
            ("numerics.t_steps", "0"),
            ("numerics.conv_first_panel", "2"),
            ("initial.kind", "table"),
        ] {
            let mut cfg = RunConfig::default();
            cfg.set(key, value).unwrap();
            assert!(cfg.validate().is_err(), "{key} = {value}");
        }
    }

    #[test]
    fn table_interpolates_linearly() {
        let t = Table::new(vec![(1.0, 0.0), (-1.0, 0.0), (0.0, 2.0)]).unwrap();
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(-0.25), 1.5);
        assert_eq!(t.eval(3.0), 0.0);
        assert!(Table::new(vec![(0.0, 1.0)]).is_err());
    }
}
