//! Uniform mesh, ghosted cell-average storage, boundary filling and norms.

use crate::error::{Error, Result};
use crate::models::{Vars, ZERO_VARS};

/// Ghost cells per side. The global flux reconstruction at the first
/// interior interface needs cell averages of `G` on a full stencil, and each
/// of those needs a full reconstruction stencil itself: `2 (r - 1) + 1 = 5`
/// for WENO5.
pub const N_GHOST: usize = 5;

/// Errors below this are treated as round-off when estimating orders.
pub const NOISE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    pub x_left: f64,
    pub x_right: f64,
    pub n_cells: usize,
    pub dx: f64,
    pub n_ghost: usize,
}

impl Mesh {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        Self::with_ghosts(x_left, x_right, n_cells, N_GHOST)
    }

    pub fn with_ghosts(x_left: f64, x_right: f64, n_cells: usize, n_ghost: usize) -> Result<Self> {
        if n_cells == 0 || !(x_right > x_left) {
            return Err(Error::InvalidInput(format!(
                "mesh needs x_right > x_left and n_cells > 0 (got [{x_left}, {x_right}], {n_cells})"
            )));
        }
        let dx = (x_right - x_left) / n_cells as f64;
        Ok(Self { x_left, x_right, n_cells, dx, n_ghost })
    }

    /// Rows of a state field including ghosts.
    pub fn n_total(&self) -> usize {
        self.n_cells + 2 * self.n_ghost
    }

    /// Storage rows of the interior cells.
    pub fn interior(&self) -> std::ops::Range<usize> {
        self.n_ghost..self.n_ghost + self.n_cells
    }

    /// Centre of storage row `j` (ghost rows extend the uniform grid).
    pub fn center(&self, j: usize) -> f64 {
        self.x_left + (j as f64 - self.n_ghost as f64 + 0.5) * self.dx
    }

    /// Storage row of the interior cell containing `x`.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if x < self.x_left || x > self.x_right {
            return None;
        }
        let i = (((x - self.x_left) / self.dx).floor() as usize).min(self.n_cells - 1);
        Some(i + self.n_ghost)
    }
}

/// Cell averages, one row per storage cell (ghosts included).
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    n_vars: usize,
    n_ghost: usize,
    rows: Vec<Vars>,
}

impl StateField {
    pub fn zeros(mesh: &Mesh, n_vars: usize) -> Self {
        Self { n_vars, n_ghost: mesh.n_ghost, rows: vec![ZERO_VARS; mesh.n_total()] }
    }

    /// Builds the interior from `f(x_center)`; ghosts are left zero.
    pub fn from_fn<F: FnMut(usize, f64) -> Vars>(mesh: &Mesh, n_vars: usize, mut f: F) -> Self {
        let mut s = Self::zeros(mesh, n_vars);
        for j in mesh.interior() {
            s.rows[j] = f(j, mesh.center(j));
        }
        s
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_ghost(&self) -> usize {
        self.n_ghost
    }

    pub fn n_cells(&self) -> usize {
        self.rows.len() - 2 * self.n_ghost
    }

    pub fn rows(&self) -> &[Vars] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [Vars] {
        &mut self.rows
    }

    pub fn interior(&self) -> &[Vars] {
        &self.rows[self.n_ghost..self.rows.len() - self.n_ghost]
    }

    pub fn interior_mut(&mut self) -> &mut [Vars] {
        let n = self.rows.len();
        &mut self.rows[self.n_ghost..n - self.n_ghost]
    }

    /// Interior values of one component.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.interior().iter().map(|r| r[k]).collect()
    }

    /// Fails unless every interior height is positive and all entries finite.
    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.interior().iter().enumerate() {
            if !(row[0] > 0.0) {
                return Err(Error::NonPositiveHeight { cell: i, h: row[0] });
            }
            if row[..self.n_vars].iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite state in cell {i}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryKind {
    /// Every conserved component prescribed.
    SupercriticalInflow(Vec<f64>),
    /// Discharge and all moments `h alpha_k` prescribed; `h` extrapolated.
    SubcriticalInlet(Vec<f64>),
    /// Height prescribed; discharge and moments extrapolated.
    SubcriticalOutlet(f64),
    Transmissive,
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub left: BoundaryKind,
    pub right: BoundaryKind,
}

impl BoundarySpec {
    pub fn new(left: BoundaryKind, right: BoundaryKind) -> Self {
        Self { left, right }
    }

    pub fn periodic() -> Self {
        Self::new(BoundaryKind::Periodic, BoundaryKind::Periodic)
    }

    pub fn transmissive() -> Self {
        Self::new(BoundaryKind::Transmissive, BoundaryKind::Transmissive)
    }

    pub fn validate(&self, n_vars: usize) -> Result<()> {
        if (self.left == BoundaryKind::Periodic) != (self.right == BoundaryKind::Periodic) {
            return Err(Error::InvalidBoundary("periodic must be set on both sides".into()));
        }
        for kind in [&self.left, &self.right] {
            match kind {
                BoundaryKind::SupercriticalInflow(v) => {
                    if v.len() != n_vars {
                        return Err(Error::InvalidBoundary(format!(
                            "supercritical inflow needs {n_vars} values, got {}",
                            v.len()
                        )));
                    }
                    if !(v[0] > 0.0) {
                        return Err(Error::InvalidBoundary(format!("prescribed height {} <= 0", v[0])));
                    }
                }
                BoundaryKind::SubcriticalInlet(v) => {
                    if v.len() != n_vars - 1 {
                        return Err(Error::InvalidBoundary(format!(
                            "subcritical inlet needs {} values, got {}",
                            n_vars - 1,
                            v.len()
                        )));
                    }
                }
                BoundaryKind::SubcriticalOutlet(h) => {
                    if !(*h > 0.0) {
                        return Err(Error::InvalidBoundary(format!("prescribed height {h} <= 0")));
                    }
                }
                BoundaryKind::Transmissive | BoundaryKind::Periodic => {}
            }
        }
        Ok(())
    }
}

/// Fills the ghost rows of `state` according to `bc`. Extrapolated
/// components are copied from the nearest interior cell.
pub fn fill_ghosts(state: &mut StateField, bc: &BoundarySpec) -> Result<()> {
    let m = state.n_vars;
    bc.validate(m)?;
    let ng = state.n_ghost;
    let n = state.n_cells();
    let rows = &mut state.rows;
    let first = ng;
    let last = ng + n - 1;
    for g in 0..ng {
        // left ghost g mirrors interior offset (ng - g)
        let dst = ng - 1 - g;
        let src = match bc.left {
            BoundaryKind::Periodic => last - g,
            _ => first,
        };
        rows[dst] = ghost_value(&bc.left, &rows[src], m);

        let dst = ng + n + g;
        let src = match bc.right {
            BoundaryKind::Periodic => first + g,
            _ => last,
        };
        rows[dst] = ghost_value(&bc.right, &rows[src], m);
    }
    Ok(())
}

fn ghost_value(kind: &BoundaryKind, interior: &Vars, m: usize) -> Vars {
    let mut v = *interior;
    match kind {
        BoundaryKind::SupercriticalInflow(vals) => v[..m].copy_from_slice(vals),
        BoundaryKind::SubcriticalInlet(vals) => v[1..m].copy_from_slice(vals),
        BoundaryKind::SubcriticalOutlet(h) => v[0] = *h,
        BoundaryKind::Transmissive | BoundaryKind::Periodic => {}
    }
    v
}

/// Per-component grid-function L2 norm `sqrt(sum_i dx (U_i - V_i)^2)` over
/// interior cells.
pub fn l2_error(state: &StateField, reference: &StateField, mesh: &Mesh) -> Vec<f64> {
    let m = state.n_vars.min(reference.n_vars);
    let mut acc = vec![0.0; m];
    for (a, b) in state.interior().iter().zip(reference.interior()) {
        for k in 0..m {
            let d = a[k] - b[k];
            acc[k] += mesh.dx * d * d;
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// Experimental order `log(e_coarse / e_fine) / log(ratio)`; `None` when
/// either error sits at the round-off floor.
pub fn estimated_order(e_coarse: f64, e_fine: f64, ratio: f64) -> Option<f64> {
    if e_coarse < NOISE_FLOOR || e_fine < NOISE_FLOOR || !(ratio > 1.0) {
        return None;
    }
    Some((e_coarse / e_fine).ln() / ratio.ln())
}
