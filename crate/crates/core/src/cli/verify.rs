//! Self-check suite run by `verify` on a small fixed grid.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{h2_semi_sq, lift_to_nonlinear, nonlinear_residual, Forcing};
use crate::assembly::{
    assemble_oracle, corner_block, laplacian_block, oracle_flow_block, tensor_block, GramTable,
    OperatorBlocks,
};
use crate::basis::BasisSet;
use crate::error::Result;
use crate::model::{GridSpec, PlateParameters, SolutionField};
use crate::quadrature::{QuadratureRule, MAX_ORDER};
use crate::solver::{dense_generalized_eigenvalues, estimate_lambda1, lu_solve};

pub const VERIFY_MODES: usize = 4;
pub const VERIFY_M2: usize = 2;
const SEED: u64 = 0x5eed;

/// Deliberate defects for checking that the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Fault {
    #[default]
    None,
    /// Subtract the `(1 - sigma)` corner block instead of adding it.
    FlipCornerSign,
    /// Use `Y_10^T` in place of `Y_10` when assembling.
    TransposeFlowY,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Self {
            name,
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<22} measured={:e} tolerance={:e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Largest `|a - b| / |b|` over entries with `b != 0`; entries where `b == 0` count
/// relative to `max|b|`.
fn max_rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.amax().max(f64::MIN_POSITIVE);
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / if *y != 0.0 { y.abs() } else { scale })
        .fold(0.0, f64::max)
}

struct Fixture {
    basis: BasisSet,
    grams: GramTable,
    blocks: OperatorBlocks,
    base: PlateParameters,
}

impl Fixture {
    fn new(base: PlateParameters, fault: Fault) -> Result<Self> {
        let grid = GridSpec::with_modes(VERIFY_MODES, VERIFY_M2, base.half_width)?;
        let basis = BasisSet::new(grid)?;
        let grams = GramTable::new(
            &basis,
            &QuadratureRule::gauss(crate::quadrature::DEFAULT_ORDER)?,
        );
        let mut faulty = grams.clone();
        if fault == Fault::TransposeFlowY {
            faulty.y10 = faulty.y10.transpose();
        }
        let mut blocks = OperatorBlocks::new(&faulty, base.sigma);
        if fault == Fault::FlipCornerSign {
            blocks.bending = laplacian_block(&faulty) - corner_block(&faulty) * (1.0 - base.sigma);
        }
        Ok(Self {
            basis,
            grams,
            blocks,
            base,
        })
    }

    fn params(&self, mu: f64, alpha: f64) -> PlateParameters {
        PlateParameters {
            mu,
            alpha,
            ..self.base
        }
    }
}

const MUS: [f64; 3] = [-0.5, 0.0, 1.0];
const ALPHAS: [f64; 3] = [0.0, -10.0, -125.0];

fn assembly_vs_oracle(fx: &Fixture) -> Result<Check> {
    let mut worst = 0.0f64;
    for mu in MUS {
        for alpha in ALPHAS {
            let p = fx.params(mu, alpha);
            let fast = fx.blocks.system(&p);
            let slow = assemble_oracle(&fx.basis, &p)?;
            worst = worst.max(max_rel_diff(&fast.matrix, &slow.matrix));
            let as_col = |v: &DVector<f64>| DMatrix::from_column_slice(v.len(), 1, v.as_slice());
            worst = worst.max(max_rel_diff(&as_col(&fast.rhs), &as_col(&slow.rhs)));
        }
    }
    Ok(Check::at_most("assembly_vs_oracle", worst, 1e-9))
}

/// Worst violation of `a(u, u) >= (1 - sigma)|u|_2^2` and `a(u, u) >= 0`, reported as a
/// shortfall (0 when both hold). Probes are 100 random coefficient vectors plus
/// interpolants of harmonic fields, where `Delta u ~ 0` leaves only the corner term.
fn coercivity(fx: &Fixture) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let n = fx.grams.dof();
    let k = &fx.blocks.bending;
    let mut probes: Vec<DVector<f64>> = (0..100)
        .map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)))
        .collect();
    for m in 1..=2 {
        let m = m as f64;
        probes.push(
            SolutionField::from_fn(&fx.basis, |x, y| (m * x).sin() * (m * y).cosh()).coefficients,
        );
        probes.push(
            SolutionField::from_fn(&fx.basis, |x, y| (m * x).sin() * (m * y).sinh()).coefficients,
        );
    }
    let mut shortfall = 0.0f64;
    for q in &probes {
        let a = q.dot(&(k * q));
        let bound = (1.0 - fx.base.sigma) * h2_semi_sq(q, &fx.grams);
        shortfall = shortfall.max(bound - a).max(-a);
    }
    Check::at_most("coercivity", shortfall, 1e-10)
}

/// The flow block of the assembled stiffness matrix against the oracle's, and its
/// symmetric part against the free-edge boundary term.
fn skew_identity(fx: &Fixture) -> Result<Check> {
    let alpha = -10.0;
    let stiff = |p: &PlateParameters| fx.blocks.system(p).stiffness();
    let fast = (stiff(&fx.params(0.0, alpha)) - stiff(&fx.params(0.0, 0.0))) / (-alpha);
    let slow = oracle_flow_block(&fx.basis)?;
    let scale = slow.amax();
    let vs_oracle = (&fast - &slow).amax() / scale;
    let boundary = tensor_block(&fx.grams.x00, &fx.grams.boundary_matrix());
    let sym = (&fast + fast.transpose() - boundary).amax() / scale;
    Ok(Check::at_most("skew_identity", vs_oracle.max(sym), 1e-12))
}

fn kronecker(fx: &Fixture) -> Result<Check> {
    let sine = &fx.basis.sine;
    let lag = &fx.basis.lagrange;
    let mut worst = 0.0f64;
    for (a, &x) in sine.interior_nodes().iter().enumerate() {
        for (i, v) in sine.eval_all(x, 0)?.into_iter().enumerate() {
            worst = worst.max((v - if i == a { 1.0 } else { 0.0 }).abs());
        }
    }
    for x in [0.0, std::f64::consts::PI] {
        for d in [0, 2] {
            for v in sine.eval_all(x, d)? {
                worst = worst.max(v.abs());
            }
        }
    }
    for (k, &y) in lag.nodes().iter().enumerate() {
        for j in 0..lag.len() {
            worst = worst.max((lag.eval(j, y, 0)? - if j == k { 1.0 } else { 0.0 }).abs());
        }
    }
    let l = fx.base.half_width;
    for s in 0..=40 {
        let y = -l + 2.0 * l * s as f64 / 40.0;
        let mut sum = 0.0;
        let mut cubic = 0.0;
        for (j, &yj) in lag.nodes().iter().enumerate() {
            let phi = lag.eval(j, y, 0)?;
            sum += phi;
            cubic += phi * (yj * yj * yj - 2.0 * yj);
        }
        worst = worst
            .max((sum - 1.0).abs())
            .max((cubic - (y * y * y - 2.0 * y)).abs());
    }
    Ok(Check::at_most("kronecker", worst, 1e-12))
}

/// Every rule of order `n` integrates `x^k` on `[0, 1]` exactly for `k < 2n`.
fn quadrature_exactness() -> Result<Check> {
    let mut worst = 0.0f64;
    for n in 1..=MAX_ORDER {
        let rule = QuadratureRule::gauss(n)?;
        for k in 0..2 * n {
            let exact = 1.0 / (k + 1) as f64;
            let got = rule.integrate(0.0, 1.0, |x| x.powi(k as i32));
            worst = worst.max((got - exact).abs() / exact);
        }
    }
    Ok(Check::at_most("quadrature_exactness", worst, 1e-12))
}

fn lambda1_vs_dense(fx: &Fixture) -> Result<Check> {
    let est = estimate_lambda1(&fx.grams, fx.base.sigma)?;
    let m = tensor_block(&fx.grams.x11, &fx.grams.y00);
    let dense = dense_generalized_eigenvalues(&fx.blocks.bending, &m)?;
    let mut c = Check::at_most(
        "lambda1_vs_dense",
        ((est.lambda1 - dense[0]) / dense[0]).abs(),
        1e-8,
    );
    c.passed &= est.lambda1 > 0.0;
    Ok(c)
}

/// `S ||u_x||^2 - P = mu` and the nonlinear residual of the lifted field, over a grid of
/// `(mu, P, S)`.
fn lift_checks(fx: &Fixture) -> Result<[Check; 2]> {
    let mut identity_worst = 0.0f64;
    let mut residual_worst = 0.0f64;
    for mu in MUS {
        for p in [1.0, 2.0] {
            for s in [0.5, 1.0] {
                let params = PlateParameters {
                    p_prestress: p,
                    s_stretch: s,
                    ..fx.params(mu, -10.0)
                };
                let report = lu_solve(&fx.blocks.system(&params))?;
                let field = SolutionField::new(&fx.basis, report.solution)?;
                let lift = lift_to_nonlinear(&field, &params, &fx.grams)?;
                identity_worst =
                    identity_worst.max((lift.bracket_value - mu).abs() / mu.abs().max(p));
                let forcing = Forcing::Constant(params.g_const / lift.implied_g_scale);
                residual_worst = residual_worst.max(nonlinear_residual(
                    &lift.lifted_field,
                    &forcing,
                    &params,
                    &fx.grams,
                ));
            }
        }
    }
    Ok([
        Check::at_most("lift_identity", identity_worst, 1e-10),
        Check::at_most("lift_residual", residual_worst, 1e-8),
    ])
}

pub fn run_verify(base: &PlateParameters, fault: Fault) -> Result<VerifyReport> {
    let fx = Fixture::new(*base, fault)?;
    let mut checks = vec![
        assembly_vs_oracle(&fx)?,
        coercivity(&fx),
        skew_identity(&fx)?,
        kronecker(&fx)?,
        quadrature_exactness()?,
        lambda1_vs_dense(&fx)?,
    ];
    checks.extend(lift_checks(&fx)?);
    Ok(VerifyReport { checks })
}
