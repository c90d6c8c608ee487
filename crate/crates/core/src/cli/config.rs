use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GridSpec, PlateParameters};
use crate::sweep::{ClassifySettings, SweepConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Vtk,
    #[default]
    Both,
}

impl ExportFormat {
    pub fn csv(self) -> bool {
        matches!(self, ExportFormat::Csv | ExportFormat::Both)
    }

    pub fn vtk(self) -> bool {
        matches!(self, ExportFormat::Vtk | ExportFormat::Both)
    }
}

/// Flat run configuration. Absent keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sigma: f64,
    pub mu: f64,
    pub alpha: f64,
    pub g: f64,
    pub p: f64,
    pub s: f64,
    pub half_width: f64,
    /// x-nodes including both hinged ends.
    pub n1: usize,
    pub m2: usize,
    pub alpha_start: f64,
    pub alpha_end: f64,
    pub alpha_step: f64,
    pub coarse_step: f64,
    pub quad_order: usize,
    pub zero_samples: usize,
    pub zero_threshold: f64,
    pub export_nx: usize,
    pub export_ny: usize,
    pub out_dir: String,
    pub export: ExportFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PlateParameters::default();
        Self {
            sigma: p.sigma,
            mu: p.mu,
            alpha: p.alpha,
            g: p.g_const,
            p: p.p_prestress,
            s: p.s_stretch,
            half_width: p.half_width,
            n1: 14,
            m2: 4,
            alpha_start: 0.0,
            alpha_end: -8000.0,
            alpha_step: 1.0,
            coarse_step: 10.0,
            quad_order: crate::quadrature::DEFAULT_ORDER,
            zero_samples: crate::analysis::DEFAULT_ZERO_SAMPLES,
            zero_threshold: crate::analysis::DEFAULT_ZERO_THRESHOLD,
            export_nx: 101,
            export_ny: 41,
            out_dir: "out".to_string(),
            export: ExportFormat::Both,
        }
    }
}

fn range_error(name: &'static str, reason: String) -> Error {
    Error::InvalidParameter { name, reason }
}

impl RunConfig {
    pub fn params(&self) -> PlateParameters {
        PlateParameters {
            sigma: self.sigma,
            mu: self.mu,
            alpha: self.alpha,
            g_const: self.g,
            p_prestress: self.p,
            s_stretch: self.s,
            half_width: self.half_width,
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.n1, self.m2, self.half_width)
    }

    pub fn sweep_config(&self, coarse: bool) -> Result<SweepConfig> {
        let mut c = SweepConfig::new(self.grid()?, self.params());
        c.alpha_start = self.alpha_start;
        c.alpha_end = self.alpha_end;
        c.alpha_step = if coarse {
            self.coarse_step
        } else {
            self.alpha_step
        };
        c.quad_order = self.quad_order;
        c.classify = ClassifySettings {
            samples: self.zero_samples,
            rel_threshold: self.zero_threshold,
        };
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        if self.n1 < 3 {
            return Err(range_error("n1", format!("{} < 3", self.n1)));
        }
        if self.m2 < 1 {
            return Err(range_error("m2", format!("{} < 1", self.m2)));
        }
        if !(1..=crate::quadrature::MAX_ORDER).contains(&self.quad_order) {
            return Err(range_error(
                "quad_order",
                format!("{} outside 1..=16", self.quad_order),
            ));
        }
        if self.zero_samples < 64 {
            return Err(range_error(
                "zero_samples",
                format!("{} < 64", self.zero_samples),
            ));
        }
        if !(self.zero_threshold > 0.0 && self.zero_threshold < 1.0) {
            return Err(range_error(
                "zero_threshold",
                format!("{} not in (0, 1)", self.zero_threshold),
            ));
        }
        for (name, step) in [
            ("alpha_step", self.alpha_step),
            ("coarse_step", self.coarse_step),
        ] {
            if !(step > 0.0 && step.is_finite()) {
                return Err(range_error(name, format!("{step} must be > 0")));
            }
        }
        if !(self.alpha_start > self.alpha_end) {
            return Err(range_error(
                "alpha_end",
                format!(
                    "{} must be below alpha_start {}",
                    self.alpha_end, self.alpha_start
                ),
            ));
        }
        if self.export_nx < 2 || self.export_ny < 2 {
            return Err(range_error(
                "export_nx",
                format!(
                    "export lattice {}x{} needs at least 2x2",
                    self.export_nx, self.export_ny
                ),
            ));
        }
        Ok(())
    }
}

/// Parses a flat JSON object; an empty or whitespace-only document yields the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = if text.trim().is_empty() {
        RunConfig::default()
    } else {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if !value.is_object() {
            return Err(Error::Config("expected a single flat JSON object".into()));
        }
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}
