use std::fmt;
use std::path::{Path, PathBuf};

use crate::analysis::{
    count_zeros, lift_to_nonlinear, nonlinear_residual, norms, Forcing, ModalityReport, Norms,
};
use crate::assembly::{assemble_system, GramTable};
use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::model::SolutionField;
use crate::quadrature::QuadratureRule;
use crate::solver::lu_solve;
use crate::sweep::{
    detect_thresholds, distinct_modalities, nontrivial_onsets, run_sweep_streaming,
    ModalityInterval, SolverFlag, SPIKE_FACTOR, SPIKE_WINDOW,
};

use super::config::{ExportFormat, RunConfig};
use super::export::{
    read_nodes_csv, write_field_csv, write_nodes_csv, write_thresholds_csv, write_vtk,
    FieldSamples, SweepWriter,
};

pub const FIELD_CSV: &str = "field.csv";
pub const FIELD_VTK: &str = "field.vtk";
pub const NODES_CSV: &str = "nodes.csv";
pub const LIFTED_CSV: &str = "lifted.csv";
pub const LIFTED_VTK: &str = "lifted.vtk";
pub const LIFTED_NODES_CSV: &str = "lifted_nodes.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const THRESHOLDS_CSV: &str = "thresholds.csv";

fn setup(cfg: &RunConfig) -> Result<(BasisSet, GramTable)> {
    cfg.validate()?;
    let basis = BasisSet::new(cfg.grid()?)?;
    let grams = GramTable::new(&basis, &QuadratureRule::gauss(cfg.quad_order)?);
    Ok((basis, grams))
}

/// Writes the lattice samples and the nodal coefficients of `field` under `out`.
/// Returns the paths written.
fn export_field(
    field: &SolutionField,
    cfg: &RunConfig,
    out: &Path,
    format: ExportFormat,
    names: (&str, &str, &str),
    title: &str,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out)?;
    let samples = FieldSamples::sample(field, cfg.export_nx, cfg.export_ny)?;
    let mut written = Vec::new();
    if format.csv() {
        let p = out.join(names.0);
        write_field_csv(&p, &samples)?;
        written.push(p);
    }
    if format.vtk() {
        let p = out.join(names.1);
        write_vtk(&p, &samples, title)?;
        written.push(p);
    }
    let p = out.join(names.2);
    write_nodes_csv(&p, field)?;
    written.push(p);
    Ok(written)
}

#[derive(Debug, Clone)]
pub struct SolveSummary {
    pub alpha: f64,
    pub norms: Norms,
    pub modality: ModalityReport,
    pub residual: f64,
    pub pivot_min: f64,
    pub condition_estimate: Option<f64>,
    pub files: Vec<PathBuf>,
}

impl fmt::Display for SolveSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "alpha={} amplitude={:e} l2={:e} energy={:e} h2={:e} modality={} zeros={} residual={:e}",
            self.alpha,
            self.modality.amplitude,
            self.norms.l2,
            self.norms.energy,
            self.norms.h2_semi,
            self.modality.modality_m,
            self.modality.zero_count,
            self.residual,
        )?;
        if let Some(c) = self.condition_estimate {
            write!(f, " cond~{c:e}")?;
        }
        Ok(())
    }
}

pub fn cmd_solve(cfg: &RunConfig, out: &Path, format: ExportFormat) -> Result<SolveSummary> {
    let (basis, grams) = setup(cfg)?;
    let params = cfg.params();
    let system = assemble_system(&grams, &params, &basis.grid)?;
    let report = lu_solve(&system).map_err(|e| Error::AtAlpha {
        alpha: params.alpha,
        source: Box::new(e),
    })?;
    let field = SolutionField::new(&basis, report.solution)?;
    let modality = count_zeros(&field, cfg.zero_samples, cfg.zero_threshold)?;
    let files = export_field(
        &field,
        cfg,
        out,
        format,
        (FIELD_CSV, FIELD_VTK, NODES_CSV),
        &format!("plate deflection alpha={}", params.alpha),
    )?;
    Ok(SolveSummary {
        alpha: params.alpha,
        norms: norms(&field, &grams, params.sigma),
        modality,
        residual: report.residual_norm,
        pivot_min: report.pivot_min,
        condition_estimate: report.condition_estimate,
        files,
    })
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub records: usize,
    pub modalities: Vec<usize>,
    pub near_singular: usize,
    pub failed: usize,
    pub intervals: Vec<ModalityInterval>,
    pub onsets: Vec<f64>,
    pub sweep_path: PathBuf,
    pub thresholds_path: PathBuf,
}

impl fmt::Display for SweepSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "records={} modalities={:?} intervals={} near_singular={} failed={} onsets={}",
            self.records,
            self.modalities,
            self.intervals.len(),
            self.near_singular,
            self.failed,
            self.onsets.len()
        )
    }
}

/// Runs the alpha sweep, appending each record to the sweep CSV as soon as it is
/// known so an interrupted run leaves a valid prefix behind.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path, coarse: bool) -> Result<SweepSummary> {
    cfg.validate()?;
    let config = cfg.sweep_config(coarse)?;
    std::fs::create_dir_all(out)?;
    let sweep_path = out.join(SWEEP_CSV);
    let thresholds_path = out.join(THRESHOLDS_CSV);
    let mut writer = SweepWriter::create(&sweep_path)?;
    let records = run_sweep_streaming(&config, |r| writer.push(r))?;
    let intervals = detect_thresholds(&records);
    write_thresholds_csv(&thresholds_path, &intervals)?;
    let count = |flag| records.iter().filter(|r| r.flag == flag).count();
    Ok(SweepSummary {
        records: records.len(),
        modalities: distinct_modalities(&records),
        near_singular: count(SolverFlag::NearSingular),
        failed: count(SolverFlag::Failed),
        onsets: nontrivial_onsets(&records, SPIKE_WINDOW, SPIKE_FACTOR),
        intervals,
        sweep_path,
        thresholds_path,
    })
}

#[derive(Debug, Clone)]
pub struct LiftSummary {
    pub bracket_value: f64,
    pub mu: f64,
    pub scale: f64,
    pub implied_g_scale: f64,
    pub residual: f64,
    pub files: Vec<PathBuf>,
}

impl LiftSummary {
    pub fn difference(&self) -> f64 {
        self.bracket_value - self.mu
    }
}

impl fmt::Display for LiftSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "bracket={} mu={} difference={:e} residual={:e} scale={:e} g_scale={:e}",
            self.bracket_value,
            self.mu,
            self.difference(),
            self.residual,
            self.scale,
            self.implied_g_scale
        )
    }
}

/// Lifts the linear solution stored in a nodal coefficient file (as written by
/// `solve`) and checks it against the nonlinear equation with forcing
/// `G / implied_g_scale`.
pub fn cmd_lift(
    cfg: &RunConfig,
    nodes: &Path,
    out: &Path,
    format: ExportFormat,
) -> Result<LiftSummary> {
    let (basis, grams) = setup(cfg)?;
    let params = cfg.params();
    let q = read_nodes_csv(nodes, &basis.grid)?;
    let linear = SolutionField::new(&basis, q)?;
    let lift = lift_to_nonlinear(&linear, &params, &grams)?;
    let forcing = Forcing::Constant(params.g_const / lift.implied_g_scale);
    let residual = nonlinear_residual(&lift.lifted_field, &forcing, &params, &grams);
    let files = export_field(
        &lift.lifted_field,
        cfg,
        out,
        format,
        (LIFTED_CSV, LIFTED_VTK, LIFTED_NODES_CSV),
        &format!("lifted plate deflection alpha={}", params.alpha),
    )?;
    Ok(LiftSummary {
        bracket_value: lift.bracket_value,
        mu: params.mu,
        scale: lift.scale,
        implied_g_scale: lift.implied_g_scale,
        residual,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::parse_config;

    fn small() -> RunConfig {
        parse_config(r#"{"n1": 6, "m2": 2, "alpha": -10, "export_nx": 9, "export_ny": 5}"#).unwrap()
    }

    #[test]
    fn solve_then_lift() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        let s = cmd_solve(&cfg, dir.path(), ExportFormat::Both).unwrap();
        assert_eq!(s.files.len(), 3);
        assert!(s.modality.modality_m >= 1);
        let l = cmd_lift(
            &cfg,
            &dir.path().join(NODES_CSV),
            dir.path(),
            ExportFormat::Csv,
        )
        .unwrap();
        assert!(l.difference().abs() < 1e-10, "{l}");
        assert!(l.residual < 1e-8, "{l}");
    }

    #[test]
    fn lift_rejects_zero_prestress() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        cmd_solve(&cfg, dir.path(), ExportFormat::Csv).unwrap();
        let bad = RunConfig { p: 0.0, ..cfg };
        let err = cmd_lift(
            &bad,
            &dir.path().join(NODES_CSV),
            dir.path(),
            ExportFormat::Csv,
        )
        .unwrap_err();
        assert!(matches!(err, Error::HypothesisViolated { .. }));
        assert!(err.to_string().contains("mu > -P"));
    }
}
