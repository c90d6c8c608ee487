//! Field evaluation, norms, modality classification and the lift from linear
//! to nonlinear stationary solutions.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::assembly::{bending_apply, tensor_apply, tensor_form, GramTable};
use crate::error::{Error, Result};
use crate::model::{PlateParameters, SolutionField};

/// Fields whose sampled amplitude is below this are classified as trivial.
pub const AMPLITUDE_FLOOR: f64 = 1e-14;

pub const DEFAULT_ZERO_SAMPLES: usize = 512;
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-3;

/// Value of `d^dx/dx^dx d^dy/dy^dy u_h` at `(x, y)`.
pub fn evaluate_field(field: &SolutionField, x: f64, y: f64, dx: usize, dy: usize) -> Result<f64> {
    if dx > 2 {
        return Err(Error::DerivativeOrder(dx));
    }
    if dy > 2 {
        return Err(Error::DerivativeOrder(dy));
    }
    let grid = field.grid();
    let l = grid.half_width();
    if !(-l..=l).contains(&y) {
        return Err(Error::OutsideDomain {
            coord: "y",
            value: y,
            lo: -l,
            hi: l,
        });
    }
    let psi = field.basis.sine.eval_all(x, dx)?;
    let lag = &field.basis.lagrange;
    let e = lag.locate(y);
    let q = &field.coefficients;
    let mut value = 0.0;
    for j in lag.element_nodes(e) {
        let phi = lag.eval_on_element(j, e, y, dy);
        if phi == 0.0 {
            continue;
        }
        let row: f64 = psi
            .iter()
            .enumerate()
            .map(|(i, p)| q[grid.flat(i, j)] * p)
            .sum();
        value += row * phi;
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    /// Broken `H^2` seminorm.
    pub h2_semi: f64,
    /// `sqrt(a(u, u))`.
    pub energy: f64,
    /// `||u_x||_0`.
    pub l2_ux: f64,
}

fn sqrt_form(v: f64) -> f64 {
    v.max(0.0).sqrt()
}

/// `||u_x||_0^2`.
pub fn ux_norm_sq(q: &DVector<f64>, grams: &GramTable) -> f64 {
    tensor_form(&grams.x11, &grams.y00, q, q)
}

/// `a(u, u)`.
pub fn energy_sq(q: &DVector<f64>, grams: &GramTable, sigma: f64) -> f64 {
    q.dot(&bending_apply(grams, sigma, q))
}

/// `|u|_2^2 = int u_xx^2 + 2 u_xy^2 + u_yy^2`, element-wise in y.
pub fn h2_semi_sq(q: &DVector<f64>, grams: &GramTable) -> f64 {
    tensor_form(&grams.x22, &grams.y00, q, q)
        + 2.0 * tensor_form(&grams.x11, &grams.y11, q, q)
        + tensor_form(&grams.x00, &grams.y22, q, q)
}

pub fn norms(field: &SolutionField, grams: &GramTable, sigma: f64) -> Norms {
    let q = &field.coefficients;
    Norms {
        l2: sqrt_form(tensor_form(&grams.x00, &grams.y00, q, q)),
        h2_semi: sqrt_form(h2_semi_sq(q, grams)),
        energy: sqrt_form(energy_sq(q, grams, sigma)),
        l2_ux: sqrt_form(ux_norm_sq(q, grams)),
    }
}

/// Sign structure of the field along the midline `y = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityReport {
    pub zero_count: usize,
    /// `zero_count + 1`, or 0 for a trivial field.
    pub modality_m: usize,
    /// Largest `|u|` over the sampled x-points on every y-node row.
    pub amplitude: f64,
    /// Signed extremum of each constant-sign run along the midline.
    pub sign_profile: Vec<f64>,
    pub trivial: bool,
}

/// Counts sign changes of `x -> u(x, 0)` at `n_samples` uniform interior points,
/// ignoring samples inside the band `|u| < rel_threshold * amplitude`.
pub fn count_zeros(
    field: &SolutionField,
    n_samples: usize,
    rel_threshold: f64,
) -> Result<ModalityReport> {
    if n_samples < 64 {
        return Err(Error::InvalidParameter {
            name: "zero_samples",
            reason: format!("{n_samples} < 64"),
        });
    }
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::InvalidParameter {
            name: "zero_threshold",
            reason: format!("{rel_threshold} is not in (0, 1)"),
        });
    }
    let xs: Vec<f64> = (1..=n_samples)
        .map(|k| PI * k as f64 / (n_samples + 1) as f64)
        .collect();
    let midline: Vec<f64> = xs
        .iter()
        .map(|&x| evaluate_field(field, x, 0.0, 0, 0))
        .collect::<Result<_>>()?;
    let mut amplitude = midline.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for &y in field.grid().y_nodes() {
        for &x in &xs {
            amplitude = amplitude.max(evaluate_field(field, x, y, 0, 0)?.abs());
        }
    }
    if !(amplitude >= AMPLITUDE_FLOOR) {
        return Ok(ModalityReport {
            zero_count: 0,
            modality_m: 0,
            amplitude,
            sign_profile: Vec::new(),
            trivial: true,
        });
    }
    let band = rel_threshold * amplitude;
    let mut sign_profile: Vec<f64> = Vec::new();
    for &v in midline.iter().filter(|v| v.abs() >= band) {
        match sign_profile.last_mut() {
            Some(last) if last.signum() == v.signum() => {
                if v.abs() > last.abs() {
                    *last = v;
                }
            }
            _ => sign_profile.push(v),
        }
    }
    let zero_count = sign_profile.len().saturating_sub(1);
    Ok(ModalityReport {
        zero_count,
        modality_m: zero_count + 1,
        amplitude,
        sign_profile,
        trivial: false,
    })
}

#[derive(Debug, Clone)]
pub struct LiftResult<'a> {
    pub lifted_field: SolutionField<'a>,
    /// Factor applied to the coefficients of `U`.
    pub scale: f64,
    /// `||U_x||_0 / sqrt((mu + P) / S)`; the nonlinear forcing is `G / implied_g_scale`.
    pub implied_g_scale: f64,
    /// `S ||u_x||_0^2 - P` evaluated on the lifted field.
    pub bracket_value: f64,
}

/// Maps a solution of the linearized problem to one of the nonlinear problem via
/// `u = sqrt((mu + P) / S) U / ||U_x||_0`.
pub fn lift_to_nonlinear<'a>(
    linear: &SolutionField<'a>,
    params: &PlateParameters,
    grams: &GramTable,
) -> Result<LiftResult<'a>> {
    let (mu, p, s) = (params.mu, params.p_prestress, params.s_stretch);
    if !(mu + p > 0.0 && s > 0.0) {
        return Err(Error::HypothesisViolated { mu, p, s });
    }
    let ux = sqrt_form(ux_norm_sq(&linear.coefficients, grams));
    if !(ux > 1e-14) {
        return Err(Error::TrivialInput(ux));
    }
    let amplitude = ((mu + p) / s).sqrt();
    let scale = amplitude / ux;
    let lifted_field = linear.scaled(scale);
    let bracket_value = s * ux_norm_sq(&lifted_field.coefficients, grams) - p;
    Ok(LiftResult {
        lifted_field,
        scale,
        implied_g_scale: ux / amplitude,
        bracket_value,
    })
}

/// Right-hand side of the stationary problem.
#[derive(Debug, Clone)]
pub enum Forcing {
    Constant(f64),
    /// Precomputed load vector `(g, phi_s)`.
    Load(DVector<f64>),
}

impl Forcing {
    pub fn load(&self, grams: &GramTable) -> DVector<f64> {
        match self {
            Forcing::Constant(g) => crate::assembly::unit_load(grams) * *g,
            Forcing::Load(b) => b.clone(),
        }
    }
}

/// Largest discrete residual of the nonlinear weak equation
/// `a(u, v) + [S ||u_x||^2 - P] (u_x, v_x) - alpha (u_y, v) = (g, v)` over the basis,
/// divided by the energy norm of `u`.
pub fn nonlinear_residual(
    field: &SolutionField,
    forcing: &Forcing,
    params: &PlateParameters,
    grams: &GramTable,
) -> f64 {
    let q = &field.coefficients;
    let bracket = params.s_stretch * ux_norm_sq(q, grams) - params.p_prestress;
    let kq = bending_apply(grams, params.sigma, q);
    let energy = sqrt_form(q.dot(&kq));
    let r = kq + tensor_apply(&grams.x11, &grams.y00, q) * bracket
        - tensor_apply(&grams.x00, &grams.y10.transpose(), q) * params.alpha
        - forcing.load(grams);
    let worst = r.amax();
    if energy > 0.0 {
        worst / energy
    } else {
        worst
    }
}
