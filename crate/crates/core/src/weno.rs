//! WENO reconstruction of point values from cell averages.
//!
//! Everything is set up on the reference cell `[-1/2, 1/2]` with unit
//! spacing, so the candidate coefficients, smoothness forms and linear
//! weights are independent of the mesh. A stencil is the window of `2r - 1`
//! cell averages centred on the target cell; candidate `m` uses window
//! entries `m..m + r`.

use crate::error::{Error, Result};
use crate::mesh_state::StateField;
use crate::models::{ModelId, PrimitiveState, Vars, ZERO_VARS};
use crate::poly::{solve_dense, Poly};
use crate::quadrature::{gauss_legendre, Order, QuadratureTable, MAX_NODES};

pub const MAX_R: usize = 3;
pub const MAX_STENCIL: usize = 2 * MAX_R - 1;

/// Default regulariser of the nonlinear weights.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Splitting parameter for points with negative linear weights.
pub const SPLIT_THETA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Smoothness-dependent weights, with positive/negative splitting where
    /// a linear weight is negative.
    Nonlinear,
    /// Optimal linear weights everywhere.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WenoConfig {
    pub order: Order,
    pub epsilon: f64,
    pub mode: WeightMode,
}

impl WenoConfig {
    pub fn new(order: Order) -> Self {
        Self { order, epsilon: DEFAULT_EPSILON, mode: WeightMode::Nonlinear }
    }

    pub fn linear(order: Order) -> Self {
        Self { mode: WeightMode::Linear, ..Self::new(order) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput(format!("WENO epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Split {
    gamma_plus: [f64; MAX_R],
    gamma_minus: [f64; MAX_R],
    sigma_plus: f64,
    sigma_minus: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct PointTable {
    xi: f64,
    /// `cand[m][j]`: weight of window entry `m + j` in candidate `m`.
    cand: [[f64; MAX_R]; MAX_R],
    linear: [f64; MAX_R],
    split: Option<Split>,
}

/// Precomputed reconstruction operator for a fixed set of evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct WenoKernel {
    config: WenoConfig,
    r: usize,
    points: Vec<PointTable>,
    /// `beta[m][j][k]`: quadratic form of the smoothness indicator of
    /// candidate `m` over its own `r` entries.
    beta: [[[f64; MAX_R]; MAX_R]; MAX_R],
}

/// Effective blending weights `omega` at one point; the reconstructed value
/// is `sum_m omega[m] P_m`. They always sum to one; with splitting active
/// individual entries may be negative.
pub type PointWeights = [f64; MAX_R];

impl WenoKernel {
    /// Kernel evaluating at arbitrary reference points.
    pub fn new(config: WenoConfig, points: &[f64]) -> Result<Self> {
        config.validate()?;
        let r = config.order.stencils();
        let tables = points.iter().map(|&xi| point_table(r, xi)).collect::<Result<Vec<_>>>()?;
        Ok(Self { config, r, points: tables, beta: smoothness_forms(r) })
    }

    /// Kernel evaluating at the Gauss nodes of the scheme followed by the
    /// left and right interfaces.
    pub fn for_scheme(config: WenoConfig) -> Result<Self> {
        let (mut pts, _) = gauss_legendre(config.order.nodes());
        pts.push(-0.5);
        pts.push(0.5);
        Self::new(config, &pts)
    }

    pub fn config(&self) -> &WenoConfig {
        &self.config
    }

    /// Stencil width `2r - 1`.
    pub fn width(&self) -> usize {
        2 * self.r - 1
    }

    pub fn radius(&self) -> usize {
        self.r - 1
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn point(&self, k: usize) -> f64 {
        self.points[k].xi
    }

    pub fn linear_weights(&self, k: usize) -> &[f64] {
        &self.points[k].linear[..self.r]
    }

    /// Smoothness indicators of the `r` candidates.
    pub fn smoothness(&self, window: &[f64]) -> [f64; MAX_R] {
        let r = self.r;
        let mut out = [0.0; MAX_R];
        if r == 1 {
            return out;
        }
        for (m, beta) in out.iter_mut().enumerate().take(r) {
            let q = &self.beta[m];
            let v = &window[m..m + r];
            let mut s = 0.0;
            for j in 0..r {
                let mut row = 0.0;
                for k in 0..r {
                    row += q[j][k] * v[k];
                }
                s += v[j] * row;
            }
            *beta = s;
        }
        out
    }

    /// Blending weights at point `k` for the given smoothness indicators.
    pub fn weights(&self, k: usize, beta: &[f64; MAX_R]) -> PointWeights {
        let r = self.r;
        let pt = &self.points[k];
        if r == 1 || self.config.mode == WeightMode::Linear {
            return pt.linear;
        }
        let eps = self.config.epsilon;
        let mut inv = [0.0; MAX_R];
        for m in 0..r {
            let s = eps + beta[m];
            inv[m] = 1.0 / (s * s);
        }
        match &pt.split {
            None => normalized(&pt.linear, &inv, r),
            Some(sp) => {
                let wp = normalized(&sp.gamma_plus, &inv, r);
                let wm = normalized(&sp.gamma_minus, &inv, r);
                let mut w = [0.0; MAX_R];
                for m in 0..r {
                    w[m] = sp.sigma_plus * wp[m] - sp.sigma_minus * wm[m];
                }
                w
            }
        }
    }

    /// Candidate values `P_m(xi_k)`.
    pub fn candidates(&self, k: usize, window: &[f64]) -> [f64; MAX_R] {
        let r = self.r;
        let c = &self.points[k].cand;
        let mut out = [0.0; MAX_R];
        for m in 0..r {
            let mut s = 0.0;
            for j in 0..r {
                s += c[m][j] * window[m + j];
            }
            out[m] = s;
        }
        out
    }

    /// Blends the candidates of `window` at point `k` with given weights.
    pub fn apply(&self, k: usize, weights: &PointWeights, window: &[f64]) -> f64 {
        let p = self.candidates(k, window);
        (0..self.r).map(|m| weights[m] * p[m]).sum()
    }

    /// Reconstructs `window` at every point of the kernel.
    pub fn reconstruct(&self, window: &[f64], out: &mut [f64]) {
        debug_assert_eq!(window.len(), self.width());
        let beta = self.smoothness(window);
        for (k, o) in out.iter_mut().enumerate().take(self.points.len()) {
            let w = self.weights(k, &beta);
            *o = self.apply(k, &w, window);
        }
    }
}

fn normalized(gamma: &[f64; MAX_R], inv: &[f64; MAX_R], r: usize) -> [f64; MAX_R] {
    let mut a = [0.0; MAX_R];
    let mut sum = 0.0;
    for m in 0..r {
        a[m] = gamma[m] * inv[m];
        sum += a[m];
    }
    for v in a.iter_mut().take(r) {
        *v /= sum;
    }
    a
}

/// One-shot reconstruction of a single window at arbitrary reference points.
pub fn reconstruct_scalar(window: &[f64], config: &WenoConfig, points: &[f64]) -> Result<Vec<f64>> {
    let kernel = WenoKernel::new(*config, points)?;
    if window.len() != kernel.width() {
        return Err(Error::InvalidInput(format!(
            "WENO{} needs a window of {} averages, got {}",
            config.order.as_usize(),
            kernel.width(),
            window.len()
        )));
    }
    let mut out = vec![0.0; points.len()];
    kernel.reconstruct(window, &mut out);
    Ok(out)
}

/// Point values of the reconstructed state at one side of a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trace {
    pub eta: f64,
    pub b: f64,
    pub cons: Vars,
    pub prim: PrimitiveState,
}

/// Reconstruction of one cell: values at the Gauss nodes and the traces of
/// the nodal interpolant at both interfaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodalCell {
    pub eta: [f64; MAX_NODES],
    pub b: [f64; MAX_NODES],
    pub cons: [Vars; MAX_NODES],
    pub prim: [PrimitiveState; MAX_NODES],
    pub left: Trace,
    pub right: Trace,
}

/// Blending weights used for the free surface and for the bottom in one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightRecord {
    pub row: usize,
    pub eta: [PointWeights; MAX_NODES],
    pub b: [PointWeights; MAX_NODES],
}

/// Reconstructions for storage rows `lo..lo + cells.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReconstruction {
    pub lo: usize,
    pub n_nodes: usize,
    pub cells: Vec<NodalCell>,
    /// Filled only when requested from [`reconstruct_field`].
    pub weight_log: Vec<WeightRecord>,
}

impl CellReconstruction {
    pub fn hi(&self) -> usize {
        self.lo + self.cells.len()
    }

    pub fn cell(&self, row: usize) -> &NodalCell {
        &self.cells[row - self.lo]
    }
}

/// Reconstructs every storage row that has a full stencil. The free surface
/// `eta = h + b` and the momentum-like components are reconstructed
/// componentwise; the bottom reuses the free-surface weights so that
/// `h = eta - b` keeps a constant free surface exactly.
///
/// `kernel` must evaluate at the nodes of `table`. `bottom` holds the cell
/// averages of `b` on every storage row. Positivity errors carry the storage
/// row of the offending cell.
pub fn reconstruct_field(
    state: &StateField,
    bottom: &[f64],
    model: ModelId,
    kernel: &WenoKernel,
    table: &QuadratureTable,
    record_weights: bool,
) -> Result<CellReconstruction> {
    let nq = table.n_nodes();
    if kernel.n_points() != nq || (0..nq).any(|q| kernel.point(q) != table.nodes()[q]) {
        return Err(Error::InvalidInput("WENO kernel does not match the quadrature nodes".into()));
    }
    let rows = state.rows();
    if bottom.len() != rows.len() {
        return Err(Error::InvalidInput(format!(
            "bottom has {} rows, state has {}",
            bottom.len(),
            rows.len()
        )));
    }
    let m = model.n_vars();
    let rad = kernel.radius();
    let width = kernel.width();
    let lo = rad;
    let hi = rows.len().saturating_sub(rad);
    let mut cells = Vec::with_capacity(hi.saturating_sub(lo));
    let mut weight_log = Vec::new();

    let mut eta_win = [0.0; MAX_STENCIL];
    let mut b_win = [0.0; MAX_STENCIL];
    let mut var_win = [0.0; MAX_STENCIL];
    for j in lo..hi {
        for s in 0..width {
            let row = j + s - rad;
            b_win[s] = bottom[row];
            eta_win[s] = rows[row][0] + bottom[row];
        }
        let beta = kernel.smoothness(&eta_win[..width]);
        let mut cell = NodalCell {
            eta: [0.0; MAX_NODES],
            b: [0.0; MAX_NODES],
            cons: [ZERO_VARS; MAX_NODES],
            prim: [PrimitiveState::new(0.0, 0.0, &[]); MAX_NODES],
            left: empty_trace(),
            right: empty_trace(),
        };
        let mut record = WeightRecord { row: j, eta: [[0.0; MAX_R]; MAX_NODES], b: [[0.0; MAX_R]; MAX_NODES] };
        for q in 0..nq {
            let w = kernel.weights(q, &beta);
            cell.eta[q] = kernel.apply(q, &w, &eta_win[..width]);
            cell.b[q] = kernel.apply(q, &w, &b_win[..width]);
            cell.cons[q][0] = cell.eta[q] - cell.b[q];
            record.eta[q] = w;
            record.b[q] = w;
        }
        for k in 1..m {
            for s in 0..width {
                var_win[s] = rows[j + s - rad][k];
            }
            let beta = kernel.smoothness(&var_win[..width]);
            for q in 0..nq {
                let w = kernel.weights(q, &beta);
                cell.cons[q][k] = kernel.apply(q, &w, &var_win[..width]);
            }
        }
        for q in 0..nq {
            cell.prim[q] = model.to_primitive(&cell.cons[q]).map_err(|e| e.at_cell(j))?;
        }
        let (el, er) = table.lagrange_eval_at_interfaces(&cell.eta[..nq]);
        let (bl, br) = table.lagrange_eval_at_interfaces(&cell.b[..nq]);
        let mut ul = ZERO_VARS;
        let mut ur = ZERO_VARS;
        ul[0] = el - bl;
        ur[0] = er - br;
        for k in 1..m {
            let samples: [f64; MAX_NODES] = std::array::from_fn(|q| cell.cons[q][k]);
            let (l, r) = table.lagrange_eval_at_interfaces(&samples[..nq]);
            ul[k] = l;
            ur[k] = r;
        }
        cell.left = Trace { eta: el, b: bl, cons: ul, prim: model.to_primitive(&ul).map_err(|e| e.at_cell(j))? };
        cell.right = Trace { eta: er, b: br, cons: ur, prim: model.to_primitive(&ur).map_err(|e| e.at_cell(j))? };
        cells.push(cell);
        if record_weights {
            weight_log.push(record);
        }
    }
    Ok(CellReconstruction { lo, n_nodes: nq, cells, weight_log })
}

fn empty_trace() -> Trace {
    Trace { eta: 0.0, b: 0.0, cons: ZERO_VARS, prim: PrimitiveState::new(0.0, 0.0, &[]) }
}

/// Interpolating polynomial, in the reference coordinate, whose averages over
/// the cells at integer `offsets` match unit vector `which`.
fn average_interpolant(offsets: &[i64], which: usize) -> Poly {
    let n = offsets.len();
    let mut a = vec![vec![0.0; n]; n];
    for (row, &o) in a.iter_mut().zip(offsets) {
        let lo = o as f64 - 0.5;
        let hi = o as f64 + 0.5;
        for (k, entry) in row.iter_mut().enumerate() {
            let kf = k as i32 + 1;
            *entry = (hi.powi(kf) - lo.powi(kf)) / kf as f64;
        }
    }
    let mut rhs = vec![0.0; n];
    rhs[which] = 1.0;
    Poly::new(solve_dense(a, rhs).expect("distinct cells give a regular moment system"))
}

fn point_table(r: usize, xi: f64) -> Result<PointTable> {
    let mut cand = [[0.0; MAX_R]; MAX_R];
    let mut linear = [0.0; MAX_R];
    if r == 1 {
        cand[0][0] = 1.0;
        linear[0] = 1.0;
        return Ok(PointTable { xi, cand, linear, split: None });
    }
    let rad = (r - 1) as i64;
    for (m, row) in cand.iter_mut().enumerate().take(r) {
        let offsets: Vec<i64> = (0..r as i64).map(|j| j + m as i64 - rad).collect();
        for (j, c) in row.iter_mut().enumerate().take(r) {
            *c = average_interpolant(&offsets, j).eval(xi);
        }
    }
    let width = 2 * r - 1;
    let offsets: Vec<i64> = (-rad..=rad).collect();
    let high: Vec<f64> = (0..width).map(|j| average_interpolant(&offsets, j).eval(xi)).collect();

    // least squares for sum_m d_m cand_m = high over the window entries
    let mut design = vec![vec![0.0; r]; width];
    for m in 0..r {
        for j in 0..r {
            design[m + j][m] = cand[m][j];
        }
    }
    let mut normal = vec![vec![0.0; r]; r];
    let mut rhs = vec![0.0; r];
    for (row, &hv) in design.iter().zip(&high) {
        for a in 0..r {
            rhs[a] += row[a] * hv;
            for b in 0..r {
                normal[a][b] += row[a] * row[b];
            }
        }
    }
    let singular = || Error::InvalidInput(format!("no linear weights at reference point {xi}"));
    let misfit = |d: &[f64]| -> Vec<f64> {
        design.iter().zip(&high).map(|(row, &hv)| hv - row.iter().zip(d).map(|(a, b)| a * b).sum::<f64>()).collect()
    };
    let mut d = solve_dense(normal.clone(), rhs).ok_or_else(singular)?;
    // one step of iterative refinement recovers the digits lost to the
    // normal equations
    let e = misfit(&d);
    let corr_rhs: Vec<f64> = (0..r).map(|a| design.iter().zip(&e).map(|(row, ev)| row[a] * ev).sum()).collect();
    let corr = solve_dense(normal, corr_rhs).ok_or_else(singular)?;
    for (v, c) in d.iter_mut().zip(corr) {
        *v += c;
    }
    let residual = misfit(&d).into_iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if residual > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "WENO{} has no consistent linear weights at reference point {xi}",
            2 * r - 1
        )));
    }
    linear[..r].copy_from_slice(&d);

    let split = if d.iter().any(|&v| v < 0.0) {
        let mut gp = [0.0; MAX_R];
        let mut gm = [0.0; MAX_R];
        for m in 0..r {
            gp[m] = 0.5 * (d[m] + SPLIT_THETA * d[m].abs());
            gm[m] = gp[m] - d[m];
        }
        let sp: f64 = gp.iter().sum();
        let sm: f64 = gm.iter().sum();
        for m in 0..r {
            gp[m] /= sp;
            gm[m] /= sm;
        }
        Some(Split { gamma_plus: gp, gamma_minus: gm, sigma_plus: sp, sigma_minus: sm })
    } else {
        None
    };
    Ok(PointTable { xi, cand, linear, split })
}

/// `beta_m = sum_{l=1}^{r-1} int_{-1/2}^{1/2} (P_m^{(l)})^2` as quadratic
/// forms in the candidate's own averages.
fn smoothness_forms(r: usize) -> [[[f64; MAX_R]; MAX_R]; MAX_R] {
    let mut out = [[[0.0; MAX_R]; MAX_R]; MAX_R];
    if r == 1 {
        return out;
    }
    let rad = (r - 1) as i64;
    for (m, form) in out.iter_mut().enumerate().take(r) {
        let offsets: Vec<i64> = (0..r as i64).map(|j| j + m as i64 - rad).collect();
        let basis: Vec<Poly> = (0..r).map(|j| average_interpolant(&offsets, j)).collect();
        for l in 1..r {
            let derivs: Vec<Poly> = basis
                .iter()
                .map(|p| (0..l).fold(p.clone(), |acc, _| acc.derivative()))
                .collect();
            for j in 0..r {
                for k in 0..r {
                    form[j][k] += derivs[j].mul(&derivs[k]).integrate(-0.5, 0.5);
                }
            }
        }
    }
    out
}
