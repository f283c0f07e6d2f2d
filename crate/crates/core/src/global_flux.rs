//! The global flux `G = F + R`, where `R` collects the integrals of the
//! bathymetry source, friction and non-conservative products.
//!
//! `R` is accumulated left to right. Inside a cell the integrand is sampled
//! at the Gauss nodes and integrated exactly against the Lagrange basis;
//! across an interface the discontinuity of the reconstruction contributes
//! a jump computed along the straight-line path between the two traces.
//! The scan is seeded with `R = 0` at the left edge of the first
//! reconstructed ghost cell.

use crate::error::Result;
use crate::models::{ModelId, PhysicalParams, PrimitiveState, Vars, ZERO_VARS};
use crate::quadrature::{dot, QuadratureTable, MAX_NODES};
use crate::weno::{CellReconstruction, NodalCell, Trace, WenoKernel, MAX_STENCIL};

/// `R` at nodes and interfaces together with the cell averages of `G`.
/// Every per-cell vector is indexed by `row - lo`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalFluxLayer {
    pub lo: usize,
    pub n_nodes: usize,
    pub r_nodes: Vec<[Vars; MAX_NODES]>,
    /// `R^R` at the left interface of each cell.
    pub r_in: Vec<Vars>,
    /// `R^L` at the right interface of each cell.
    pub r_out: Vec<Vars>,
    /// Jump at the right interface of each cell (zero past the last cell).
    pub jumps: Vec<Vars>,
    pub g_bar: Vec<Vars>,
}

impl GlobalFluxLayer {
    pub fn hi(&self) -> usize {
        self.lo + self.g_bar.len()
    }
}

/// Node integrand `Q` with `R(x) = R(x_l) + int Q - g (b^2/2)|_{x_l}^{x}`
/// on the mean-momentum row.
fn integrand(model: ModelId, cell: &NodalCell, table: &QuadratureTable, p: &PhysicalParams) -> [Vars; MAX_NODES] {
    let nq = table.n_nodes();
    let m = model.n_vars();
    let fr = p.friction_factor();
    let mut out = [ZERO_VARS; MAX_NODES];
    let db = table.derivative_at_nodes(&cell.b[..nq]);
    let mut du = [[0.0; MAX_NODES]; 4];
    if m > 2 {
        for (k, row) in du.iter_mut().enumerate().take(m).skip(2) {
            let samples: [f64; MAX_NODES] = std::array::from_fn(|q| cell.cons[q][k]);
            let d = table.derivative_at_nodes(&samples[..nq]);
            row[..nq].copy_from_slice(&d);
        }
    }
    for (theta, q) in out.iter_mut().enumerate().take(nq) {
        let w = &cell.prim[theta];
        q[1] = p.g * cell.eta[theta] * db[theta];
        if m > 2 {
            let b = model.noncons_matrix(w);
            for k in 2..m {
                let mut s = 0.0;
                for c in 2..m {
                    s += b[k][c] * du[c][theta];
                }
                q[k] = -s;
            }
        }
        if fr != 0.0 {
            let pv = model.friction_vector(w, p);
            for k in 1..m {
                q[k] += fr * pv[k];
            }
        }
    }
    out
}

/// Increment of `R` across an interface between the `left` and `right`
/// traces: bathymetry with the mean free surface on the momentum row and
/// the straight-path integral of `-B dU` on each moment row.
pub fn interface_jump(model: ModelId, left: &Trace, right: &Trace, g: f64) -> Vars {
    let mut j = ZERO_VARS;
    let db = right.b - left.b;
    j[1] = g * 0.5 * (left.eta + right.eta) * db - g * 0.5 * (right.b * right.b - left.b * left.b);
    let m = model.n_vars();
    if m > 2 {
        let bl = model.noncons_matrix(&left.prim);
        let br = model.noncons_matrix(&right.prim);
        for k in 2..m {
            let mut s = 0.0;
            for c in 2..m {
                s += 0.5 * (bl[k][c] + br[k][c]) * (right.cons[c] - left.cons[c]);
            }
            j[k] = -s;
        }
    }
    j
}

/// Runs the `R` scan over all reconstructed cells.
pub fn accumulate_r(
    recon: &CellReconstruction,
    model: ModelId,
    p: &PhysicalParams,
    table: &QuadratureTable,
) -> GlobalFluxLayer {
    let nq = table.n_nodes();
    let m = model.n_vars();
    let n = recon.cells.len();
    let half_g = 0.5 * p.g;
    let mut layer = GlobalFluxLayer {
        lo: recon.lo,
        n_nodes: nq,
        r_nodes: vec![[ZERO_VARS; MAX_NODES]; n],
        r_in: vec![ZERO_VARS; n],
        r_out: vec![ZERO_VARS; n],
        jumps: vec![ZERO_VARS; n],
        g_bar: vec![ZERO_VARS; n],
    };
    let mut r_in = ZERO_VARS;
    for (i, cell) in recon.cells.iter().enumerate() {
        let q_nodes = integrand(model, cell, table, p);
        let bl2 = cell.left.b * cell.left.b;
        for q in 0..nq {
            let row = &table.partial()[q];
            let r = &mut layer.r_nodes[i][q];
            for k in 1..m {
                let samples: [f64; MAX_NODES] = std::array::from_fn(|t| q_nodes[t][k]);
                r[k] = r_in[k] + dot(&row[..nq], &samples[..nq]);
            }
            r[1] -= half_g * (cell.b[q] * cell.b[q] - bl2);
        }
        let mut r_out = r_in;
        for k in 1..m {
            let samples: [f64; MAX_NODES] = std::array::from_fn(|t| q_nodes[t][k]);
            r_out[k] += dot(table.full(), &samples[..nq]);
        }
        r_out[1] -= half_g * (cell.right.b * cell.right.b - bl2);
        layer.r_in[i] = r_in;
        layer.r_out[i] = r_out;
        r_in = r_out;
        if i + 1 < n {
            let jump = interface_jump(model, &cell.right, &recon.cells[i + 1].left, p.g);
            layer.jumps[i] = jump;
            for k in 1..m {
                r_in[k] += jump[k];
            }
        }
    }
    layer
}

/// Fills `g_bar` with the Gauss average of `F + R` in every cell.
pub fn cell_average_g(
    layer: &mut GlobalFluxLayer,
    recon: &CellReconstruction,
    model: ModelId,
    p: &PhysicalParams,
    table: &QuadratureTable,
) {
    let nq = table.n_nodes();
    let m = model.n_vars();
    let w = table.weights();
    for (i, cell) in recon.cells.iter().enumerate() {
        let mut avg = ZERO_VARS;
        for q in 0..nq {
            let f = model.flux(&cell.prim[q], p.g);
            let r = &layer.r_nodes[i][q];
            for k in 0..m {
                avg[k] += w[q] * (f[k] + r[k]);
            }
        }
        layer.g_bar[i] = avg;
    }
}

/// Reconstructs `G` at both sides of the interfaces of `rows` (the cells
/// whose interface values are wanted). `kernel` must evaluate at the left
/// and right interfaces, in that order. Returns `(left, right)` values per
/// requested row.
pub fn reconstruct_g_interfaces(
    layer: &GlobalFluxLayer,
    rows: std::ops::Range<usize>,
    n_vars: usize,
    kernel: &WenoKernel,
) -> Vec<[Vars; 2]> {
    let rad = kernel.radius();
    let width = kernel.width();
    let mut win = [0.0; MAX_STENCIL];
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let base = row - rad - layer.lo;
        let mut lr = [ZERO_VARS; 2];
        for k in 0..n_vars {
            for s in 0..width {
                win[s] = layer.g_bar[base + s][k];
            }
            let mut vals = [0.0; 2];
            kernel.reconstruct(&win[..width], &mut vals);
            lr[0][k] = vals[0];
            lr[1][k] = vals[1];
        }
        out.push(lr);
    }
    out
}

/// Convenience: `R` scan followed by the cell averages.
pub fn assemble(
    recon: &CellReconstruction,
    model: ModelId,
    p: &PhysicalParams,
    table: &QuadratureTable,
) -> Result<GlobalFluxLayer> {
    let mut layer = accumulate_r(recon, model, p, table);
    cell_average_g(&mut layer, recon, model, p, table);
    Ok(layer)
}

/// Trace built directly from a conserved state and bottom elevation.
pub fn trace_from_state(model: ModelId, cons: Vars, b: f64) -> Result<Trace> {
    let prim: PrimitiveState = model.to_primitive(&cons)?;
    Ok(Trace { eta: cons[0] + b, b, cons, prim })
}
