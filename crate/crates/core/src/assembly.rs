//! One-dimensional Gram matrices and tensor assembly of the plate system.
//!
//! Dofs are ordered x-fastest. Two orientations of the same bilinear form
//! `A(u, v) = a(u, v) + mu (u_x, v_x) - alpha (u_y, v)` appear here:
//!
//! * the stiffness matrix `S[s, t] = A(phi_s, phi_t)`, whose flow part is
//!   `-alpha X_00 (x) Y_10` with the y-derivative on the row function;
//! * the Galerkin matrix `S^T`, rows indexed by test functions, which is what
//!   [`LinearSystem`] holds and the solver factors: `sum_t q_t A(phi_t, phi_s) = (g, phi_s)`.
//!
//! Every block except the flow block is symmetric, so the two differ only there.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::basis::{BasisSet, LagrangeBasisY, SineBasis};
use crate::error::{Error, Result};
use crate::model::{GridSpec, PlateParameters};
use crate::quadrature::{uniform_panels, QuadratureRule};

/// Gauss points per x-panel for brute-force quadrature.
pub const ORACLE_X_ORDER: usize = 10;

/// x-direction Grams of the normalized sine basis.
#[derive(Debug, Clone)]
pub struct XGrams {
    pub x00: DMatrix<f64>,
    pub x11: DMatrix<f64>,
    pub x22: DMatrix<f64>,
    pub x20: DMatrix<f64>,
    pub x02: DMatrix<f64>,
    /// `int_0^pi Psi_i dx`.
    pub integrals: DVector<f64>,
}

/// y-direction Grams of the cubic Lagrange basis, element-wise for second derivatives.
#[derive(Debug, Clone)]
pub struct YGrams {
    pub y00: DMatrix<f64>,
    pub y11: DMatrix<f64>,
    pub y22: DMatrix<f64>,
    pub y20: DMatrix<f64>,
    pub y02: DMatrix<f64>,
    pub y10: DMatrix<f64>,
    /// `int_{-l}^{l} Phi_j dy`.
    pub integrals: DVector<f64>,
    /// `Phi_j(-l)`.
    pub boundary_lo: DVector<f64>,
    /// `Phi_j(l)`.
    pub boundary_hi: DVector<f64>,
}

/// The ten 1D pairing matrices from which every 2D block is built.
#[derive(Debug, Clone)]
pub struct GramTable {
    pub x00: DMatrix<f64>,
    pub x11: DMatrix<f64>,
    pub x22: DMatrix<f64>,
    pub x20: DMatrix<f64>,
    pub x02: DMatrix<f64>,
    pub y00: DMatrix<f64>,
    pub y11: DMatrix<f64>,
    pub y22: DMatrix<f64>,
    pub y20: DMatrix<f64>,
    pub y02: DMatrix<f64>,
    pub y10: DMatrix<f64>,
    pub x_integrals: DVector<f64>,
    pub y_integrals: DVector<f64>,
    pub boundary_lo: DVector<f64>,
    pub boundary_hi: DVector<f64>,
}

impl GramTable {
    pub fn from_parts(x: XGrams, y: YGrams) -> Self {
        Self {
            x00: x.x00,
            x11: x.x11,
            x22: x.x22,
            x20: x.x20,
            x02: x.x02,
            y00: y.y00,
            y11: y.y11,
            y22: y.y22,
            y20: y.y20,
            y02: y.y02,
            y10: y.y10,
            x_integrals: x.integrals,
            y_integrals: y.integrals,
            boundary_lo: y.boundary_lo,
            boundary_hi: y.boundary_hi,
        }
    }

    pub fn new(basis: &BasisSet, rule: &QuadratureRule) -> Self {
        Self::from_parts(
            build_gram_x(&basis.sine),
            build_gram_y(&basis.lagrange, rule),
        )
    }

    pub fn n_modes(&self) -> usize {
        self.x00.nrows()
    }

    pub fn n2(&self) -> usize {
        self.y00.nrows()
    }

    pub fn dof(&self) -> usize {
        self.n_modes() * self.n2()
    }

    /// `B_y[j, k] = Phi_j(l) Phi_k(l) - Phi_j(-l) Phi_k(-l)`.
    pub fn boundary_matrix(&self) -> DMatrix<f64> {
        &self.boundary_hi * self.boundary_hi.transpose()
            - &self.boundary_lo * self.boundary_lo.transpose()
    }
}

/// Raw sine Grams are diagonal by orthogonality on `(0, pi)`; the normalized ones
/// follow by congruence with the inverse transfer matrix.
pub fn build_gram_x(basis: &SineBasis) -> XGrams {
    let n = basis.n_modes();
    let c = basis.transfer_inverse();
    let half_pi = 0.5 * PI;
    let diag = |f: &dyn Fn(f64) -> f64| {
        DMatrix::from_diagonal(&DVector::from_fn(n, |k, _| f((k + 1) as f64)))
    };
    let d0 = diag(&|_| half_pi);
    let d1 = diag(&|k| k * k * half_pi);
    let d2 = diag(&|k| k.powi(4) * half_pi);
    let dm = diag(&|k| -k * k * half_pi);
    let congruence = |d: &DMatrix<f64>| {
        let m = c.transpose() * d * c;
        (&m + m.transpose()) * 0.5
    };
    let x20 = congruence(&dm);
    let x02 = x20.transpose();
    let raw_integrals = DVector::from_fn(n, |k, _| {
        if k % 2 == 0 {
            2.0 / (k + 1) as f64
        } else {
            0.0
        }
    });
    XGrams {
        x00: congruence(&d0),
        x11: congruence(&d1),
        x22: congruence(&d2),
        x20,
        x02,
        integrals: c.transpose() * raw_integrals,
    }
}

pub fn build_gram_y(basis: &LagrangeBasisY, rule: &QuadratureRule) -> YGrams {
    let n2 = basis.len();
    let zero = || DMatrix::<f64>::zeros(n2, n2);
    let (mut y00, mut y11, mut y22, mut y20, mut y10) = (zero(), zero(), zero(), zero(), zero());
    let mut integrals = DVector::zeros(n2);
    for e in 0..basis.n_elements() {
        let (a, b) = basis.element(e);
        for (y, w) in rule.mapped(a, b) {
            let vals: [[f64; 4]; 3] = std::array::from_fn(|d| {
                std::array::from_fn(|loc| basis.eval_on_element(3 * e + loc, e, y, d))
            });
            for p in 0..4 {
                let jp = 3 * e + p;
                integrals[jp] += w * vals[0][p];
                for q in 0..4 {
                    let jq = 3 * e + q;
                    y00[(jp, jq)] += w * vals[0][p] * vals[0][q];
                    y11[(jp, jq)] += w * vals[1][p] * vals[1][q];
                    y22[(jp, jq)] += w * vals[2][p] * vals[2][q];
                    y20[(jp, jq)] += w * vals[2][p] * vals[0][q];
                    y10[(jp, jq)] += w * vals[1][p] * vals[0][q];
                }
            }
        }
    }
    let l = basis.nodes()[n2 - 1];
    let mut boundary_lo = DVector::zeros(n2);
    let mut boundary_hi = DVector::zeros(n2);
    for j in 0..n2 {
        boundary_lo[j] = basis.eval_on_element(j, 0, -l, 0);
        boundary_hi[j] = basis.eval_on_element(j, basis.n_elements() - 1, l, 0);
    }
    let y02 = y20.transpose();
    YGrams {
        y00,
        y11,
        y22,
        y20,
        y02,
        y10,
        integrals,
        boundary_lo,
        boundary_hi,
    }
}

/// 2D block with entries `x[i, i'] * y[j, j']` in x-fastest dof order.
pub fn tensor_block(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    y.kronecker(x)
}

/// Vector with entries `x[i] * y[j]` in x-fastest dof order.
pub fn tensor_vector(x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    y.kronecker(x)
}

/// `(X (x) Y) q` without forming the Kronecker product.
pub fn tensor_apply(x: &DMatrix<f64>, y: &DMatrix<f64>, q: &DVector<f64>) -> DVector<f64> {
    let n = x.ncols();
    let qm = DMatrix::from_column_slice(n, q.len() / n, q.as_slice());
    let out = x * qm * y.transpose();
    DVector::from_column_slice(out.as_slice())
}

/// `p^T (X (x) Y) q`.
pub fn tensor_form(x: &DMatrix<f64>, y: &DMatrix<f64>, p: &DVector<f64>, q: &DVector<f64>) -> f64 {
    p.dot(&tensor_apply(x, y, q))
}

/// Action of [`bending_matrix`] on `q`.
pub fn bending_apply(g: &GramTable, sigma: f64, q: &DVector<f64>) -> DVector<f64> {
    let c = 1.0 - sigma;
    tensor_apply(&g.x22, &g.y00, q)
        + tensor_apply(&g.x00, &g.y22, q)
        + tensor_apply(&g.x20, &g.y02, q) * (1.0 - c)
        + tensor_apply(&g.x02, &g.y20, q) * (1.0 - c)
        + tensor_apply(&g.x11, &g.y11, q) * (2.0 * c)
}

/// Block realizing `int Delta u Delta v`.
pub fn laplacian_block(g: &GramTable) -> DMatrix<f64> {
    tensor_block(&g.x22, &g.y00)
        + tensor_block(&g.x20, &g.y02)
        + tensor_block(&g.x02, &g.y20)
        + tensor_block(&g.x00, &g.y22)
}

/// Block realizing `int 2 u_xy v_xy - u_xx v_yy - u_yy v_xx`.
pub fn corner_block(g: &GramTable) -> DMatrix<f64> {
    tensor_block(&g.x11, &g.y11) * 2.0 - tensor_block(&g.x20, &g.y02) - tensor_block(&g.x02, &g.y20)
}

/// Matrix of `a(., .)` alone.
pub fn bending_matrix(g: &GramTable, sigma: f64) -> DMatrix<f64> {
    laplacian_block(g) + corner_block(g) * (1.0 - sigma)
}

/// Matrix of `(u_x, v_x)`.
pub fn stretch_matrix(g: &GramTable) -> DMatrix<f64> {
    tensor_block(&g.x11, &g.y00)
}

/// `X_00 (x) Y_10`: entries `(d_y phi_s, phi_t)`, the flow block of the stiffness matrix.
pub fn flow_matrix(g: &GramTable) -> DMatrix<f64> {
    tensor_block(&g.x00, &g.y10)
}

/// Galerkin-oriented transport block with entries `(d_y phi_t, phi_s)`; the transpose
/// of [`flow_matrix`].
pub fn transport_matrix(g: &GramTable) -> DMatrix<f64> {
    tensor_block(&g.x00, &g.y10.transpose())
}

/// Matrix of `(u, v)`.
pub fn mass_matrix(g: &GramTable) -> DMatrix<f64> {
    tensor_block(&g.x00, &g.y00)
}

/// Load vector for unit constant forcing.
pub fn unit_load(g: &GramTable) -> DVector<f64> {
    tensor_vector(&g.x_integrals, &g.y_integrals)
}

/// Assembled dense Galerkin system `A X = b`; row `s` is the equation tested with `phi_s`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub params: PlateParameters,
}

/// The alpha- and mu-independent pieces of the system, for reuse across a sweep.
#[derive(Debug, Clone)]
pub struct OperatorBlocks {
    pub sigma: f64,
    pub bending: DMatrix<f64>,
    pub stretch: DMatrix<f64>,
    /// See [`transport_matrix`].
    pub transport: DMatrix<f64>,
    pub unit_load: DVector<f64>,
}

impl OperatorBlocks {
    pub fn new(grams: &GramTable, sigma: f64) -> Self {
        Self {
            sigma,
            bending: bending_matrix(grams, sigma),
            stretch: stretch_matrix(grams),
            transport: transport_matrix(grams),
            unit_load: unit_load(grams),
        }
    }

    /// Galerkin matrix `K + mu M_x - alpha F^T`.
    pub fn matrix(&self, mu: f64, alpha: f64) -> DMatrix<f64> {
        let mut m = &self.bending + &self.stretch * mu;
        m -= &self.transport * alpha;
        m
    }

    /// `K + mu M_x`, the symmetric part cached by sweeps.
    pub fn symmetric_part(&self, mu: f64) -> DMatrix<f64> {
        &self.bending + &self.stretch * mu
    }

    pub fn system(&self, params: &PlateParameters) -> LinearSystem {
        LinearSystem {
            matrix: self.matrix(params.mu, params.alpha),
            rhs: &self.unit_load * params.g_const,
            params: *params,
        }
    }
}

fn check_dims(grams: &GramTable, grid: &GridSpec) -> Result<()> {
    if grams.n_modes() != grid.n1_bar() || grams.n2() != grid.n2() {
        return Err(Error::DimensionMismatch(format!(
            "grams are {}x{} but grid has {} interior x-nodes and {} y-nodes",
            grams.n_modes(),
            grams.n2(),
            grid.n1_bar(),
            grid.n2()
        )));
    }
    Ok(())
}

pub fn assemble_system(
    grams: &GramTable,
    params: &PlateParameters,
    grid: &GridSpec,
) -> Result<LinearSystem> {
    check_dims(grams, grid)?;
    Ok(OperatorBlocks::new(grams, params.sigma).system(params))
}

impl LinearSystem {
    /// Stiffness orientation `[A(phi_s, phi_t)]_{s,t}`.
    pub fn stiffness(&self) -> DMatrix<f64> {
        self.matrix.transpose()
    }
}

/// Tabulated values of every basis function and its first two derivatives at the
/// nodes of a composite 2D product rule.
struct PointTables {
    x_weights: Vec<f64>,
    /// `psi[d][q][i]`
    psi: [Vec<Vec<f64>>; 3],
    y_weights: Vec<f64>,
    /// `phi[d][r][j]`
    phi: [Vec<Vec<f64>>; 3],
}

impl PointTables {
    fn new(basis: &BasisSet, y_order: usize) -> Result<Self> {
        let n_modes = basis.sine.n_modes();
        let x_rule = QuadratureRule::gauss(ORACLE_X_ORDER)?;
        let y_rule = QuadratureRule::gauss(y_order)?;
        let mut x_pts = Vec::new();
        let mut x_weights = Vec::new();
        for (a, b) in uniform_panels(0.0, PI, (4 * n_modes).max(4)) {
            for (x, w) in x_rule.mapped(a, b) {
                x_pts.push(x);
                x_weights.push(w);
            }
        }
        let psi = std::array::from_fn(|d| {
            x_pts
                .iter()
                .map(|&x| {
                    (0..n_modes)
                        .map(|i| basis.sine.eval_unchecked(i, x, d))
                        .collect()
                })
                .collect()
        });
        let lag = &basis.lagrange;
        let mut y_pts = Vec::new();
        let mut y_weights = Vec::new();
        for e in 0..lag.n_elements() {
            let (a, b) = lag.element(e);
            for (y, w) in y_rule.mapped(a, b) {
                y_pts.push((e, y));
                y_weights.push(w);
            }
        }
        let phi = std::array::from_fn(|d| {
            y_pts
                .iter()
                .map(|&(e, y)| {
                    (0..lag.len())
                        .map(|j| lag.eval_on_element(j, e, y, d))
                        .collect()
                })
                .collect()
        });
        Ok(Self {
            x_weights,
            psi,
            y_weights,
            phi,
        })
    }
}

/// Builds the system entry by entry with a composite 2D Gauss rule, forming the
/// full integrand pointwise. Intended for verification on small grids.
pub fn assemble_oracle(basis: &BasisSet, params: &PlateParameters) -> Result<LinearSystem> {
    assemble_oracle_with(basis, params, crate::quadrature::DEFAULT_ORDER)
}

pub fn assemble_oracle_with(
    basis: &BasisSet,
    params: &PlateParameters,
    y_order: usize,
) -> Result<LinearSystem> {
    let grid = &basis.grid;
    let tables = PointTables::new(basis, y_order)?;
    let n = grid.dof();
    let corner = 1.0 - params.sigma;
    let mut matrix = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    // derivative set of one basis function at a point: [u, ux, uy, uxx, uyy, uxy]
    let jet = |t: usize, q: usize, r: usize| -> [f64; 6] {
        let (i, j) = grid.unflat(t);
        let (p0, p1, p2) = (
            tables.psi[0][q][i],
            tables.psi[1][q][i],
            tables.psi[2][q][i],
        );
        let (f0, f1, f2) = (
            tables.phi[0][r][j],
            tables.phi[1][r][j],
            tables.phi[2][r][j],
        );
        [p0 * f0, p1 * f0, p0 * f1, p2 * f0, p0 * f2, p1 * f1]
    };
    for (q, wx) in tables.x_weights.iter().enumerate() {
        for (r, wy) in tables.y_weights.iter().enumerate() {
            let w = wx * wy;
            let jets: Vec<[f64; 6]> = (0..n).map(|t| jet(t, q, r)).collect();
            // row s: test function v = phi_s; column t: trial function u = phi_t
            for (s, v) in jets.iter().enumerate() {
                if v.iter().all(|&c| c == 0.0) {
                    continue;
                }
                rhs[s] += w * params.g_const * v[0];
                for (t, u) in jets.iter().enumerate() {
                    let lap = (u[3] + u[4]) * (v[3] + v[4]);
                    let corr = 2.0 * u[5] * v[5] - u[3] * v[4] - u[4] * v[3];
                    let integrand =
                        lap + corner * corr + params.mu * u[1] * v[1] - params.alpha * u[2] * v[0];
                    matrix[(s, t)] += w * integrand;
                }
            }
        }
    }
    Ok(LinearSystem {
        matrix,
        rhs,
        params: *params,
    })
}

/// Pointwise-quadrature flow block in stiffness orientation, entries `(d_y phi_s, phi_t)`.
pub fn oracle_flow_block(basis: &BasisSet) -> Result<DMatrix<f64>> {
    let grid = &basis.grid;
    let tables = PointTables::new(basis, crate::quadrature::DEFAULT_ORDER)?;
    let n = grid.dof();
    let mut out = DMatrix::zeros(n, n);
    for (q, wx) in tables.x_weights.iter().enumerate() {
        for (r, wy) in tables.y_weights.iter().enumerate() {
            let w = wx * wy;
            let vals: Vec<(f64, f64)> = (0..n)
                .map(|t| {
                    let (i, j) = grid.unflat(t);
                    let p = tables.psi[0][q][i];
                    (p * tables.phi[0][r][j], p * tables.phi[1][r][j])
                })
                .collect();
            for (s, &(_, dy_s)) in vals.iter().enumerate() {
                if dy_s == 0.0 {
                    continue;
                }
                for (t, &(v_t, _)) in vals.iter().enumerate() {
                    out[(s, t)] += w * dy_s * v_t;
                }
            }
        }
    }
    Ok(out)
}

/// Load vector `(g, phi_s)` for a general forcing by 2D composite quadrature.
pub fn load_vector_fn(basis: &BasisSet, g: impl Fn(f64, f64) -> f64) -> Result<DVector<f64>> {
    let n_modes = basis.sine.n_modes();
    let x_rule = QuadratureRule::gauss(ORACLE_X_ORDER)?;
    let y_rule = QuadratureRule::gauss(crate::quadrature::DEFAULT_ORDER)?;
    let grid = &basis.grid;
    let lag = &basis.lagrange;
    let mut rhs = DVector::zeros(grid.dof());
    for (a, b) in uniform_panels(0.0, PI, (4 * n_modes).max(4)) {
        for (x, wx) in x_rule.mapped(a, b) {
            let psi: Vec<f64> = (0..n_modes)
                .map(|i| basis.sine.eval_unchecked(i, x, 0))
                .collect();
            for e in 0..lag.n_elements() {
                let (c, d) = lag.element(e);
                for (y, wy) in y_rule.mapped(c, d) {
                    let gv = g(x, y) * wx * wy;
                    for j in lag.element_nodes(e) {
                        let phi = lag.eval_on_element(j, e, y, 0);
                        for (i, p) in psi.iter().enumerate() {
                            rhs[grid.flat(i, j)] += gv * p * phi;
                        }
                    }
                }
            }
        }
    }
    Ok(rhs)
}
