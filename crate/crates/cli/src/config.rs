//! Flat key=value run configuration.
//!
//! The file format is deliberately plain: one `key = value` pair per line,
//! `#` comments, no sections. Keys and units are listed in `--help`.

use mayer_core::quadrature::QuadratureSpec;
use mayer_core::scale::ScaleModel;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleChoice {
    Exponential,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub scale_kind: ScaleChoice,
    /// Rate a of κ(t) = e^{-a t} (exponential kind).
    pub scale_rate: f64,
    /// Exponent p of κ(t) = (1 - t)^p (power kind).
    pub scale_exponent: f64,
    pub quad_abs_tol: f64,
    pub quad_rel_tol: f64,
    pub quad_max_subdivisions: usize,
    pub flow_steps: usize,
    pub flow_richardson_tol: f64,
    pub flow_overflow_cap: f64,
    pub optimizer_starts: usize,
    pub optimizer_tol: f64,
    pub optimizer_coord_tol: f64,
    pub optimizer_r_max: f64,
    pub csv_output: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scale_kind: ScaleChoice::Exponential,
            scale_rate: 2.0,
            scale_exponent: 2.0,
            quad_abs_tol: 1e-10,
            quad_rel_tol: 1e-10,
            quad_max_subdivisions: 400,
            flow_steps: 2000,
            flow_richardson_tol: 1e-7,
            flow_overflow_cap: 1e12,
            optimizer_starts: 20,
            optimizer_tol: 1e-8,
            optimizer_coord_tol: 1e-6,
            optimizer_r_max: 50.0,
            csv_output: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let parse_f = || -> Result<f64, String> {
                value
                    .parse::<f64>()
                    .map_err(|_| format!("line {}: bad number for {key}", lineno + 1))
            };
            let parse_u = || -> Result<usize, String> {
                value
                    .parse::<usize>()
                    .map_err(|_| format!("line {}: bad integer for {key}", lineno + 1))
            };
            match key {
                "scale.kind" => {
                    cfg.scale_kind = match value {
                        "exponential" => ScaleChoice::Exponential,
                        "power" => ScaleChoice::Power,
                        other => return Err(format!("line {}: unknown scale.kind {other}", lineno + 1)),
                    }
                }
                "scale.rate" => cfg.scale_rate = parse_f()?,
                "scale.exponent" => cfg.scale_exponent = parse_f()?,
                "quad.abs_tol" => cfg.quad_abs_tol = parse_f()?,
                "quad.rel_tol" => cfg.quad_rel_tol = parse_f()?,
                "quad.max_subdivisions" => cfg.quad_max_subdivisions = parse_u()?,
                "flow.steps" => cfg.flow_steps = parse_u()?,
                "flow.richardson_tol" => cfg.flow_richardson_tol = parse_f()?,
                "flow.overflow_cap" => cfg.flow_overflow_cap = parse_f()?,
                "optimizer.starts" => cfg.optimizer_starts = parse_u()?,
                "optimizer.tol" => cfg.optimizer_tol = parse_f()?,
                "optimizer.coord_tol" => cfg.optimizer_coord_tol = parse_f()?,
                "optimizer.r_max" => cfg.optimizer_r_max = parse_f()?,
                "output.format" => {
                    cfg.csv_output = match value {
                        "csv" => true,
                        "json" => false,
                        other => return Err(format!("line {}: unknown output.format {other}", lineno + 1)),
                    }
                }
                other => return Err(format!("line {}: unknown key {other}", lineno + 1)),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("quad.abs_tol", self.quad_abs_tol),
            ("quad.rel_tol", self.quad_rel_tol),
            ("flow.richardson_tol", self.flow_richardson_tol),
            ("flow.overflow_cap", self.flow_overflow_cap),
            ("optimizer.tol", self.optimizer_tol),
            ("optimizer.coord_tol", self.optimizer_coord_tol),
            ("optimizer.r_max", self.optimizer_r_max),
            ("scale.rate", self.scale_rate),
            ("scale.exponent", self.scale_exponent),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.quad_max_subdivisions == 0 {
            return Err("quad.max_subdivisions must be >= 1".into());
        }
        Ok(())
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            abs_tol: self.quad_abs_tol,
            rel_tol: self.quad_rel_tol,
            max_subdivisions: self.quad_max_subdivisions,
        }
    }

    pub fn scale_model(&self, beta: f64) -> Result<ScaleModel, String> {
        match self.scale_kind {
            ScaleChoice::Exponential => ScaleModel::exponential(beta, self.scale_rate),
            ScaleChoice::Power => ScaleModel::power(beta, self.scale_exponent),
        }
        .map_err(|e| format!("scale model: {e}"))
    }
}
