//! One-dimensional basis families.
//!
//! In x the raw modes `sin(k x)`, `k = 1..n`, are recombined through the
//! inverse transfer matrix so that each basis function is one at its own
//! interior node and zero at the others. Every mode and its second
//! derivative vanish at `0` and `pi`, which enforces the hinged condition.
//!
//! In y the basis is the C0 piecewise-cubic Lagrange family on macro-elements
//! of four equispaced nodes. Second derivatives are element-wise only.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::GridSpec;
use crate::solver::LuFactorization;

/// Value of `d^deriv/dx^deriv sin(k x)`.
///
/// Points past `pi/2` are reflected about `pi` so that `x = pi` gives an
/// exact zero for the even derivatives.
#[inline]
pub fn raw_sine(k: usize, x: f64, deriv: usize) -> f64 {
    let kf = k as f64;
    let (s, c) = if x > 0.5 * PI {
        let r = PI - x;
        let (sr, cr) = (kf * r).sin_cos();
        if k % 2 == 1 {
            (sr, -cr)
        } else {
            (-sr, cr)
        }
    } else {
        (kf * x).sin_cos()
    };
    match deriv {
        0 => s,
        1 => kf * c,
        _ => -kf * kf * s,
    }
}

/// Interpolatory sine basis on the interior x-nodes.
#[derive(Debug, Clone)]
pub struct SineBasis {
    interior_nodes: Vec<f64>,
    /// Column `i` holds the raw-mode coefficients of basis function `i`.
    transfer_inverse: DMatrix<f64>,
}

impl SineBasis {
    pub fn new(grid: &GridSpec) -> Result<Self> {
        let nodes = grid.interior_x().to_vec();
        let n = nodes.len();
        let transfer = transfer_matrix(&nodes);
        let lu = LuFactorization::new(transfer.clone())
            .map_err(|_| Error::SingularTransfer { pivot: 0.0 })?;
        let scale = transfer.amax();
        if lu.pivot_min() < 1e-13 * scale {
            return Err(Error::SingularTransfer {
                pivot: lu.pivot_min(),
            });
        }
        let transfer_inverse = lu.inverse();
        let cond = transfer
            .column_iter()
            .map(|c| c.lp_norm(1))
            .fold(0.0, f64::max)
            * transfer_inverse
                .column_iter()
                .map(|c| c.lp_norm(1))
                .fold(0.0, f64::max);
        if cond > 1e10 {
            log::warn!("sine transfer matrix is ill-conditioned (cond_1 ~ {cond:e}) for {n} modes");
        }
        Ok(Self {
            interior_nodes: nodes,
            transfer_inverse,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn interior_nodes(&self) -> &[f64] {
        &self.interior_nodes
    }

    pub fn transfer_inverse(&self) -> &DMatrix<f64> {
        &self.transfer_inverse
    }

    /// Evaluates derivative `deriv` of basis function `i` (zero-based) at `x`.
    pub fn eval(&self, i: usize, x: f64, deriv: usize) -> Result<f64> {
        self.check(i, x, deriv)?;
        Ok(self.eval_unchecked(i, x, deriv))
    }

    pub(crate) fn eval_unchecked(&self, i: usize, x: f64, deriv: usize) -> f64 {
        let col = self.transfer_inverse.column(i);
        col.iter()
            .enumerate()
            .map(|(k, c)| c * raw_sine(k + 1, x, deriv))
            .sum()
    }

    /// All basis functions at `x`.
    pub fn eval_all(&self, x: f64, deriv: usize) -> Result<Vec<f64>> {
        self.check(0, x, deriv)?;
        let n = self.n_modes();
        let raw: Vec<f64> = (1..=n).map(|k| raw_sine(k, x, deriv)).collect();
        Ok((0..n)
            .map(|i| {
                self.transfer_inverse
                    .column(i)
                    .iter()
                    .zip(&raw)
                    .map(|(c, r)| c * r)
                    .sum()
            })
            .collect())
    }

    fn check(&self, i: usize, x: f64, deriv: usize) -> Result<()> {
        if deriv > 2 {
            return Err(Error::DerivativeOrder(deriv));
        }
        if i >= self.n_modes() {
            return Err(Error::IndexOutOfRange {
                i,
                j: 0,
                n1_bar: self.n_modes(),
                n2: 0,
            });
        }
        if !(0.0..=PI).contains(&x) {
            return Err(Error::OutsideDomain {
                coord: "x",
                value: x,
                lo: 0.0,
                hi: PI,
            });
        }
        Ok(())
    }
}

/// `T[a][k] = sin((k + 1) x_a)` over the interior nodes.
pub fn transfer_matrix(interior_nodes: &[f64]) -> DMatrix<f64> {
    let n = interior_nodes.len();
    DMatrix::from_fn(n, n, |a, k| raw_sine(k + 1, interior_nodes[a], 0))
}

const LOCAL_NODES: [f64; 4] = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];

/// Derivative `deriv` of the reference cubic that is one at `LOCAL_NODES[a]`.
/// Result is with respect to the reference coordinate in `[0, 1]`.
fn reference_cubic(a: usize, s: f64, deriv: usize) -> f64 {
    let mut roots = [0.0; 3];
    let mut denom = 1.0;
    let mut r = 0;
    for (b, &nb) in LOCAL_NODES.iter().enumerate() {
        if b != a {
            roots[r] = nb;
            denom *= LOCAL_NODES[a] - nb;
            r += 1;
        }
    }
    let [d0, d1, d2] = roots.map(|root| s - root);
    let num = match deriv {
        0 => d0 * d1 * d2,
        1 => d1 * d2 + d0 * d2 + d0 * d1,
        2 => 2.0 * (d0 + d1 + d2),
        _ => 6.0,
    };
    num / denom
}

/// C0 cubic Lagrange basis in y.
#[derive(Debug, Clone)]
pub struct LagrangeBasisY {
    nodes: Vec<f64>,
    m2: usize,
    half_width: f64,
    element_len: f64,
}

impl LagrangeBasisY {
    pub fn new(grid: &GridSpec) -> Self {
        Self {
            nodes: grid.y_nodes().to_vec(),
            m2: grid.m2(),
            half_width: grid.half_width(),
            element_len: 2.0 * grid.half_width() / grid.m2() as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_elements(&self) -> usize {
        self.m2
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[3 * e], self.nodes[3 * e + 3])
    }

    /// Global indices of the four nodes of macro-element `e`.
    pub fn element_nodes(&self, e: usize) -> std::ops::Range<usize> {
        3 * e..3 * e + 4
    }

    /// Macro-element containing `y`; element boundaries belong to the element on their right,
    /// except `y = l`, which belongs to the last one.
    pub fn locate(&self, y: f64) -> usize {
        let e = ((y + self.half_width) / self.element_len).floor();
        (e.max(0.0) as usize).min(self.m2 - 1)
    }

    /// Derivative `deriv` of basis function `j` at `y`, restricted to element `e`.
    pub fn eval_on_element(&self, j: usize, e: usize, y: f64, deriv: usize) -> f64 {
        let first = 3 * e;
        if j < first || j > first + 3 {
            return 0.0;
        }
        let (y0, _) = self.element(e);
        let s = (y - y0) / self.element_len;
        reference_cubic(j - first, s, deriv) / self.element_len.powi(deriv as i32)
    }

    /// Derivative `deriv` of basis function `j` (zero-based) at `y`.
    ///
    /// Derivatives are taken on the element returned by [`Self::locate`],
    /// so they are one-sided at element boundaries.
    pub fn eval(&self, j: usize, y: f64, deriv: usize) -> Result<f64> {
        if deriv > 2 {
            return Err(Error::DerivativeOrder(deriv));
        }
        if j >= self.len() {
            return Err(Error::IndexOutOfRange {
                i: 0,
                j,
                n1_bar: 0,
                n2: self.len(),
            });
        }
        let l = self.half_width;
        if !(-l..=l).contains(&y) {
            return Err(Error::OutsideDomain {
                coord: "y",
                value: y,
                lo: -l,
                hi: l,
            });
        }
        Ok(self.eval_on_element(j, self.locate(y), y, deriv))
    }
}

/// Grid together with both basis families.
#[derive(Debug, Clone)]
pub struct BasisSet {
    pub grid: GridSpec,
    pub sine: SineBasis,
    pub lagrange: LagrangeBasisY,
}

impl BasisSet {
    pub fn new(grid: GridSpec) -> Result<Self> {
        let sine = SineBasis::new(&grid)?;
        let lagrange = LagrangeBasisY::new(&grid);
        Ok(Self {
            grid,
            sine,
            lagrange,
        })
    }
}
