//! Gauss–Legendre tables and the Lagrange machinery built on their nodes.
//!
//! Coordinates are stored on the reference cell `[-1/2, 1/2]`; every
//! physical quantity (derivative matrix, partial integrals) is already scaled
//! by the cell width the table was built for.

use crate::error::{Error, Result};
use crate::poly::Poly;

/// Maximum number of Gauss nodes used per cell (order 5).
pub const MAX_NODES: usize = 3;

/// Reconstruction order supported by the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    One,
    Three,
    Five,
}

impl Order {
    pub fn from_usize(p: usize) -> Result<Self> {
        match p {
            1 => Ok(Order::One),
            3 => Ok(Order::Three),
            5 => Ok(Order::Five),
            other => Err(Error::UnsupportedOrder(other)),
        }
    }

    pub fn as_usize(self) -> usize {
        match self {
            Order::One => 1,
            Order::Three => 3,
            Order::Five => 5,
        }
    }

    /// Number of candidate stencils `r = (p + 1) / 2`.
    pub fn stencils(self) -> usize {
        (self.as_usize() + 1) / 2
    }

    /// Stencil radius `r - 1`.
    pub fn radius(self) -> usize {
        self.stencils() - 1
    }

    /// Gauss nodes per cell, `(p + 1) / 2`.
    pub fn nodes(self) -> usize {
        self.stencils()
    }
}

/// Gauss–Legendre nodes and weights on `[-1/2, 1/2]`, weights summing to one.
///
/// Nodes come from Newton iteration on the Legendre polynomial, so any `n`
/// works, although the scheme only asks for `n <= 3`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "at least one Gauss node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1, 1] -> [-1/2, 1/2], weights / 2
        nodes[i] = -0.5 * z;
        nodes[n - 1 - i] = 0.5 * z;
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Per-cell quadrature data shared by the reconstruction and the global flux
/// integration.
#[derive(Debug, Clone)]
pub struct QuadratureTable {
    order: Order,
    dx: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `deriv[theta][s] = L'_s(x_theta)`, physical units.
    deriv: Vec<Vec<f64>>,
    /// `partial[q][theta]` = integral of `L_theta` from the left interface to node `q`.
    partial: Vec<Vec<f64>>,
    /// Integral of `L_theta` over the whole cell.
    full: Vec<f64>,
    /// `L_theta(-1/2)` and `L_theta(1/2)`.
    at_left: Vec<f64>,
    at_right: Vec<f64>,
}

impl QuadratureTable {
    pub fn new(order: Order, dx: f64) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidInput(format!("cell width must be positive, got {dx}")));
        }
        let n = order.nodes();
        let (nodes, weights) = gauss_legendre(n);
        let basis: Vec<Poly> = (0..n).map(|t| Poly::lagrange_basis(&nodes, t)).collect();

        let mut deriv = vec![vec![0.0; n]; n];
        for (theta, row) in deriv.iter_mut().enumerate() {
            for (s, entry) in row.iter_mut().enumerate() {
                *entry = basis[s].derivative().eval(nodes[theta]) / dx;
            }
        }

        let anti: Vec<Poly> = basis.iter().map(Poly::antiderivative).collect();
        let mut partial = vec![vec![0.0; n]; n];
        for (q, row) in partial.iter_mut().enumerate() {
            for (theta, entry) in row.iter_mut().enumerate() {
                *entry = dx * (anti[theta].eval(nodes[q]) - anti[theta].eval(-0.5));
            }
        }
        let full = anti.iter().map(|a| dx * (a.eval(0.5) - a.eval(-0.5))).collect();
        let at_left = basis.iter().map(|l| l.eval(-0.5)).collect();
        let at_right = basis.iter().map(|l| l.eval(0.5)).collect();

        Ok(Self { order, dx, nodes, weights, deriv, partial, full, at_left, at_right })
    }

    pub fn build(p: usize, dx: f64) -> Result<Self> {
        Self::new(Order::from_usize(p)?, dx)
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Reference coordinates in `[-1/2, 1/2]`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Unit-cell weights (sum to one).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn deriv(&self) -> &[Vec<f64>] {
        &self.deriv
    }

    pub fn partial(&self) -> &[Vec<f64>] {
        &self.partial
    }

    pub fn full(&self) -> &[f64] {
        &self.full
    }

    pub fn at_left(&self) -> &[f64] {
        &self.at_left
    }

    pub fn at_right(&self) -> &[f64] {
        &self.at_right
    }

    /// Physical coordinates of the nodes of a cell centred at `center`.
    pub fn physical_nodes(&self, center: f64) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().map(move |&xi| center + xi * self.dx)
    }

    /// Cell average of `f` over the cell centred at `center` using this rule.
    pub fn average<F: Fn(f64) -> f64>(&self, center: f64, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&xi, &w)| w * f(center + xi * self.dx))
            .sum()
    }

    /// Evaluates the nodal interpolant at both cell interfaces.
    pub fn lagrange_eval_at_interfaces(&self, samples: &[f64]) -> (f64, f64) {
        debug_assert_eq!(samples.len(), self.n_nodes());
        let left = dot(&self.at_left, samples);
        let right = dot(&self.at_right, samples);
        (left, right)
    }

    /// Derivative of the nodal interpolant at each node.
    pub fn derivative_at_nodes(&self, samples: &[f64]) -> Vec<f64> {
        self.deriv.iter().map(|row| dot(row, samples)).collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
