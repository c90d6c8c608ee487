//! Continuation in the flow parameter: solve and classify over a descending
//! sequence of alpha values, then compress the classes into intervals.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{count_zeros, norms, DEFAULT_ZERO_SAMPLES, DEFAULT_ZERO_THRESHOLD};
use crate::assembly::{assemble_system, GramTable, OperatorBlocks};
use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::model::{GridSpec, PlateParameters, SolutionField};
use crate::quadrature::QuadratureRule;
use crate::solver::{LuFactorization, NEAR_SINGULAR_RTOL};

/// Records processed per parallel batch before they are handed to the caller.
const BATCH: usize = 64;

pub const SPIKE_WINDOW: usize = 50;
pub const SPIKE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifySettings {
    pub samples: usize,
    pub rel_threshold: f64,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        Self {
            samples: DEFAULT_ZERO_SAMPLES,
            rel_threshold: DEFAULT_ZERO_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub alpha_start: f64,
    pub alpha_end: f64,
    pub alpha_step: f64,
    pub grid: GridSpec,
    pub params: PlateParameters,
    pub quad_order: usize,
    pub classify: ClassifySettings,
    pub parallel: bool,
}

impl SweepConfig {
    pub fn new(grid: GridSpec, params: PlateParameters) -> Self {
        Self {
            alpha_start: 0.0,
            alpha_end: -8000.0,
            alpha_step: 1.0,
            grid,
            params,
            quad_order: crate::quadrature::DEFAULT_ORDER,
            classify: ClassifySettings::default(),
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_step > 0.0 && self.alpha_step.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha_step",
                reason: format!("{} must be > 0", self.alpha_step),
            });
        }
        if !(self.alpha_start > self.alpha_end) {
            return Err(Error::InvalidParameter {
                name: "alpha_end",
                reason: format!(
                    "alpha_start {} must exceed alpha_end {}",
                    self.alpha_start, self.alpha_end
                ),
            });
        }
        self.params.validate()
    }

    /// `alpha_start - k * alpha_step` for every `k` that stays at or above `alpha_end`.
    pub fn alphas(&self) -> Vec<f64> {
        let span = (self.alpha_start - self.alpha_end) / self.alpha_step;
        let count = (span + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| self.alpha_start - k as f64 * self.alpha_step)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverFlag {
    Ok,
    NearSingular,
    Failed,
}

impl SolverFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverFlag::Ok => "ok",
            SolverFlag::NearSingular => "near_singular",
            SolverFlag::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub alpha: f64,
    #[serde(rename = "modality")]
    pub modality_m: usize,
    pub zero_count: usize,
    pub amplitude: f64,
    pub l2: f64,
    pub energy: f64,
    pub flag: SolverFlag,
}

struct SweepContext {
    basis: BasisSet,
    grams: GramTable,
    blocks: OperatorBlocks,
    symmetric: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl SweepContext {
    fn new(config: &SweepConfig) -> Result<Self> {
        let basis = BasisSet::new(config.grid.clone())?;
        let rule = QuadratureRule::gauss(config.quad_order)?;
        let grams = GramTable::new(&basis, &rule);
        let blocks = OperatorBlocks::new(&grams, config.params.sigma);
        let symmetric = blocks.symmetric_part(config.params.mu);
        let rhs = &blocks.unit_load * config.params.g_const;
        Ok(Self {
            basis,
            grams,
            blocks,
            symmetric,
            rhs,
        })
    }

    fn cached_matrix(&self, alpha: f64) -> DMatrix<f64> {
        let mut m = self.symmetric.clone();
        m -= &self.blocks.transport * alpha;
        m
    }

    fn classify(
        &self,
        alpha: f64,
        matrix: DMatrix<f64>,
        rhs: &DVector<f64>,
        config: &SweepConfig,
    ) -> Result<SweepRecord> {
        let scale = matrix.amax();
        let lu = match LuFactorization::new(matrix) {
            Ok(lu) => lu,
            Err(Error::Singular { .. }) => {
                return Ok(SweepRecord {
                    alpha,
                    modality_m: 0,
                    zero_count: 0,
                    amplitude: f64::NAN,
                    l2: f64::NAN,
                    energy: f64::NAN,
                    flag: SolverFlag::Failed,
                })
            }
            Err(e) => return Err(e),
        };
        let flag = if lu.pivot_min() < NEAR_SINGULAR_RTOL * scale {
            SolverFlag::NearSingular
        } else {
            SolverFlag::Ok
        };
        let field = SolutionField::new(&self.basis, lu.solve(rhs))?;
        let modality = count_zeros(
            &field,
            config.classify.samples,
            config.classify.rel_threshold,
        )?;
        let n = norms(&field, &self.grams, config.params.sigma);
        Ok(SweepRecord {
            alpha,
            modality_m: modality.modality_m,
            zero_count: modality.zero_count,
            amplitude: modality.amplitude,
            l2: n.l2,
            energy: n.energy,
            flag,
        })
    }
}

fn drive(
    config: &SweepConfig,
    rebuild: bool,
    mut on_record: impl FnMut(&SweepRecord) -> Result<()>,
) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let ctx = SweepContext::new(config)?;
    let point = |alpha: f64| -> Result<SweepRecord> {
        if rebuild {
            let params = config.params.with_alpha(alpha);
            let system = assemble_system(&ctx.grams, &params, &config.grid)?;
            ctx.classify(alpha, system.matrix, &system.rhs, config)
        } else {
            ctx.classify(alpha, ctx.cached_matrix(alpha), &ctx.rhs, config)
        }
    };
    let alphas = config.alphas();
    let mut records = Vec::with_capacity(alphas.len());
    for batch in alphas.chunks(BATCH) {
        let done: Vec<SweepRecord> = if config.parallel {
            batch.par_iter().map(|&a| point(a)).collect::<Result<_>>()?
        } else {
            batch.iter().map(|&a| point(a)).collect::<Result<_>>()?
        };
        for r in done {
            on_record(&r)?;
            records.push(r);
        }
    }
    Ok(records)
}

/// Runs the sweep with the symmetric block assembled once.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    drive(config, false, |_| Ok(()))
}

/// Like [`run_sweep`], handing each record to `on_record` in alpha order as soon
/// as its batch completes.
pub fn run_sweep_streaming(
    config: &SweepConfig,
    on_record: impl FnMut(&SweepRecord) -> Result<()>,
) -> Result<Vec<SweepRecord>> {
    drive(config, false, on_record)
}

/// Reassembles the whole system at every alpha; reference path for the cached sweep.
pub fn run_sweep_rebuild(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    drive(config, true, |_| Ok(()))
}

/// Maximal run of records sharing one modality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalityInterval {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub m: usize,
}

pub fn detect_thresholds(records: &[SweepRecord]) -> Vec<ModalityInterval> {
    let mut out: Vec<ModalityInterval> = Vec::new();
    for r in records {
        match out.last_mut() {
            Some(iv) if iv.m == r.modality_m => {
                iv.alpha_lo = iv.alpha_lo.min(r.alpha);
                iv.alpha_hi = iv.alpha_hi.max(r.alpha);
            }
            _ => out.push(ModalityInterval {
                alpha_lo: r.alpha,
                alpha_hi: r.alpha,
                m: r.modality_m,
            }),
        }
    }
    out
}

/// Alphas at which the amplitude exceeds `factor` times the median amplitude of the
/// preceding `window` records.
pub fn nontrivial_onsets(records: &[SweepRecord], window: usize, factor: f64) -> Vec<f64> {
    if window == 0 {
        return Vec::new();
    }
    records
        .windows(window + 1)
        .filter_map(|w| {
            let (prev, cur) = w.split_at(window);
            let mut amps: Vec<f64> = prev
                .iter()
                .map(|r| r.amplitude)
                .filter(|a| a.is_finite())
                .collect();
            if amps.is_empty() {
                return None;
            }
            amps.sort_by(f64::total_cmp);
            let median = amps[amps.len() / 2];
            (cur[0].amplitude > factor * median).then_some(cur[0].alpha)
        })
        .collect()
}

/// Running maximum of the modality along the record sequence.
pub fn running_max_modality(records: &[SweepRecord]) -> Vec<usize> {
    records
        .iter()
        .scan(0usize, |m, r| {
            *m = (*m).max(r.modality_m);
            Some(*m)
        })
        .collect()
}

pub fn distinct_modalities(records: &[SweepRecord]) -> Vec<usize> {
    let mut ms: Vec<usize> = records
        .iter()
        .filter(|r| r.flag != SolverFlag::Failed && r.modality_m > 0)
        .map(|r| r.modality_m)
        .collect();
    ms.sort_unstable();
    ms.dedup();
    ms
}
