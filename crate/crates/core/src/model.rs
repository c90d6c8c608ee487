//! Physical parameters, the tensor grid and the coefficient-vector solution.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};

/// Constants of the stationary plate model.
///
/// `mu` is the linearized surrogate of the nonlocal stretching bracket
/// `S ||u_x||^2 - P`; `p_prestress` and `s_stretch` only enter through the
/// lift from linear to nonlinear solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateParameters {
    pub sigma: f64,
    pub mu: f64,
    pub alpha: f64,
    pub g_const: f64,
    pub p_prestress: f64,
    pub s_stretch: f64,
    pub half_width: f64,
}

impl Default for PlateParameters {
    fn default() -> Self {
        Self {
            sigma: 0.2,
            mu: -0.5,
            alpha: 0.0,
            g_const: 1.0,
            p_prestress: 1.0,
            s_stretch: 1.0,
            half_width: 0.2,
        }
    }
}

impl PlateParameters {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.to_string(),
            })
        };
        let finite = [
            ("sigma", self.sigma),
            ("mu", self.mu),
            ("alpha", self.alpha),
            ("g", self.g_const),
            ("p", self.p_prestress),
            ("s", self.s_stretch),
            ("half_width", self.half_width),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return bad(name, "must be finite");
            }
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad("sigma", &format!("{} is not in (0, 1)", self.sigma));
        }
        if self.half_width <= 0.0 {
            return bad("half_width", &format!("{} must be > 0", self.half_width));
        }
        if self.s_stretch < 0.0 {
            return bad("s", &format!("{} must be >= 0", self.s_stretch));
        }
        if self.g_const < 0.0 {
            return bad("g", &format!("{} must be >= 0", self.g_const));
        }
        Ok(())
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

/// Uniform tensor grid on `[0, pi] x [-l, l]`.
///
/// Only the `n1 - 2` interior x-nodes carry unknowns; the hinged edges are
/// eliminated by the sine basis. In y there are `m2` macro-elements of four
/// nodes each, sharing end nodes, so `n2 = 3 m2 + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    n1: usize,
    m2: usize,
    half_width: f64,
    x_nodes: Vec<f64>,
    y_nodes: Vec<f64>,
}

impl GridSpec {
    pub fn new(n1: usize, m2: usize, half_width: f64) -> Result<Self> {
        if n1 < 3 {
            return Err(Error::InvalidGrid(format!(
                "n1 = {n1}: need at least 3 x-nodes for one interior node"
            )));
        }
        if m2 < 1 {
            return Err(Error::InvalidGrid(format!(
                "m2 = {m2}: need at least one y macro-element"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half-width {half_width} must be positive"
            )));
        }
        let hx = PI / (n1 - 1) as f64;
        let mut x_nodes: Vec<f64> = (0..n1).map(|i| i as f64 * hx).collect();
        x_nodes[n1 - 1] = PI;
        let n2 = 3 * m2 + 1;
        let hy = 2.0 * half_width / (n2 - 1) as f64;
        let mut y_nodes: Vec<f64> = (0..n2).map(|j| -half_width + j as f64 * hy).collect();
        y_nodes[n2 - 1] = half_width;
        Ok(Self {
            n1,
            m2,
            half_width,
            x_nodes,
            y_nodes,
        })
    }

    /// Grid with `n_modes` interior x-nodes (i.e. `n1 = n_modes + 2`).
    pub fn with_modes(n_modes: usize, m2: usize, half_width: f64) -> Result<Self> {
        Self::new(n_modes + 2, m2, half_width)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    /// Number of interior x-nodes, equal to the number of sine modes.
    pub fn n1_bar(&self) -> usize {
        self.n1 - 2
    }

    pub fn n2(&self) -> usize {
        3 * self.m2 + 1
    }

    pub fn dof(&self) -> usize {
        self.n1_bar() * self.n2()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// All x-nodes including the hinged ends `0` and `pi`.
    pub fn x_nodes(&self) -> &[f64] {
        &self.x_nodes
    }

    pub fn interior_x(&self) -> &[f64] {
        &self.x_nodes[1..self.n1 - 1]
    }

    pub fn y_nodes(&self) -> &[f64] {
        &self.y_nodes
    }

    /// Zero-based flat index of interior x-node `i` and y-node `j`; x runs fastest.
    #[inline]
    pub fn flat(&self, i: usize, j: usize) -> usize {
        j * self.n1_bar() + i
    }

    /// Inverse of [`GridSpec::flat`].
    #[inline]
    pub fn unflat(&self, t: usize) -> (usize, usize) {
        (t % self.n1_bar(), t / self.n1_bar())
    }

    /// One-based dof label `t = (j - 1) n1_bar + i` for one-based node labels.
    pub fn dof_index(&self, i: usize, j: usize) -> Result<usize> {
        if i == 0 || j == 0 || i > self.n1_bar() || j > self.n2() {
            return Err(Error::IndexOutOfRange {
                i,
                j,
                n1_bar: self.n1_bar(),
                n2: self.n2(),
            });
        }
        Ok(self.flat(i - 1, j - 1) + 1)
    }

    /// Inverse of [`GridSpec::dof_index`].
    pub fn dof_label(&self, t: usize) -> Result<(usize, usize)> {
        if t == 0 || t > self.dof() {
            return Err(Error::IndexOutOfRange {
                i: t,
                j: 0,
                n1_bar: self.n1_bar(),
                n2: self.n2(),
            });
        }
        let (i, j) = self.unflat(t - 1);
        Ok((i + 1, j + 1))
    }

    /// Coordinates of the node carrying zero-based dof `t`.
    pub fn dof_point(&self, t: usize) -> (f64, f64) {
        let (i, j) = self.unflat(t);
        (self.x_nodes[i + 1], self.y_nodes[j])
    }

    /// Macro-element intervals in y.
    pub fn y_elements(&self) -> Vec<(f64, f64)> {
        (0..self.m2)
            .map(|e| (self.y_nodes[3 * e], self.y_nodes[3 * e + 3]))
            .collect()
    }
}

/// Discrete field `u_h = sum_t q_t Psi_i(x) Phi_j(y)`.
///
/// By the Kronecker property of both bases, `q_t` is the value of the field at
/// the node carrying dof `t`.
#[derive(Debug, Clone)]
pub struct SolutionField<'a> {
    pub coefficients: DVector<f64>,
    pub basis: &'a BasisSet,
}

impl<'a> SolutionField<'a> {
    pub fn new(basis: &'a BasisSet, coefficients: DVector<f64>) -> Result<Self> {
        if coefficients.len() != basis.grid.dof() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a grid with {} dof",
                coefficients.len(),
                basis.grid.dof()
            )));
        }
        Ok(Self {
            coefficients,
            basis,
        })
    }

    pub fn zeros(basis: &'a BasisSet) -> Self {
        Self {
            coefficients: DVector::zeros(basis.grid.dof()),
            basis,
        }
    }

    /// Interpolates `f` at the grid nodes.
    pub fn from_fn(basis: &'a BasisSet, f: impl Fn(f64, f64) -> f64) -> Self {
        let grid = &basis.grid;
        let coefficients = DVector::from_fn(grid.dof(), |t, _| {
            let (x, y) = grid.dof_point(t);
            f(x, y)
        });
        Self {
            coefficients,
            basis,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.basis.grid
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coefficients: &self.coefficients * factor,
            basis: self.basis,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_grid() {
        let g = GridSpec::new(3, 1, 0.2).unwrap();
        assert_eq!(g.x_nodes(), &[0.0, PI / 2.0, PI]);
        assert_eq!(g.n2(), 4);
        assert_eq!(g.y_nodes().len(), 4);
        assert_eq!(g.y_nodes()[0], -0.2);
        assert_eq!(g.y_nodes()[3], 0.2);
        assert_eq!(g.dof(), 4);
    }

    #[test]
    fn dof_count() {
        let g = GridSpec::new(8, 2, 0.2).unwrap();
        assert_eq!(g.dof(), 42);
    }

    #[test]
    fn degenerate_grids_rejected() {
        assert!(GridSpec::new(3, 0, 0.2).is_err());
        assert!(GridSpec::new(2, 1, 0.2).is_err());
        assert!(GridSpec::new(3, 1, 0.0).is_err());
        assert!(GridSpec::new(3, 1, -1.0).is_err());
    }

    #[test]
    fn dof_index_examples() {
        let g = GridSpec::new(8, 2, 0.2).unwrap();
        assert_eq!(g.n1_bar(), 6);
        assert_eq!(g.dof_index(1, 1).unwrap(), 1);
        assert_eq!(g.dof_index(2, 3).unwrap(), 14);
        assert!(g.dof_index(7, 1).is_err());
        assert!(g.dof_index(0, 1).is_err());
        assert!(g.dof_index(1, 8).is_err());
    }

    #[test]
    fn nodes_uniform_and_increasing() {
        let g = GridSpec::new(17, 5, 0.2).unwrap();
        for nodes in [g.x_nodes(), g.y_nodes()] {
            let h = nodes[1] - nodes[0];
            for w in nodes.windows(2) {
                assert!(w[1] > w[0]);
                assert!((w[1] - w[0] - h).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn parameter_defaults_valid() {
        let p = PlateParameters::default();
        p.validate().unwrap();
        assert_eq!(p.sigma, 0.2);
        assert_eq!(p.mu, -0.5);
        assert_eq!(p.half_width, 0.2);
        let bad = PlateParameters { sigma: 1.5, ..p };
        match bad.validate() {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "sigma"),
            other => panic!("unexpected {other:?}"),
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn dof_index_roundtrip(n1 in 3usize..20, m2 in 1usize..8, i0 in 0usize..100, j0 in 0usize..100) {
                let g = GridSpec::new(n1, m2, 0.2).unwrap();
                let i = i0 % g.n1_bar() + 1;
                let j = j0 % g.n2() + 1;
                let t = g.dof_index(i, j).unwrap();
                prop_assert!(t >= 1 && t <= g.dof());
                prop_assert_eq!(g.dof_label(t).unwrap(), (i, j));
            }
        }
    }
}
