//! Numerical global fluxes, the semi-discrete operator and explicit time
//! stepping.

use crate::bathymetry::{cell_averages, Bathymetry};
use crate::error::{Error, Result};
use crate::global_flux::{assemble, reconstruct_g_interfaces, GlobalFluxLayer};
use crate::mesh_state::{fill_ghosts, BoundaryKind, BoundarySpec, Mesh, StateField};
use crate::models::{mat_mul, mat_vec, ModelId, PhysicalParams, PrimitiveState, Vars, ZERO_MAT, ZERO_VARS};
use crate::quadrature::QuadratureTable;
use crate::weno::{reconstruct_field, CellReconstruction, WenoConfig, WenoKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxKind {
    Upwind,
    Central,
}

impl std::str::FromStr for FluxKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "upwind" => Ok(FluxKind::Upwind),
            "central" => Ok(FluxKind::Central),
            other => Err(Error::Config(format!("unknown flux '{other}'"))),
        }
    }
}

impl std::fmt::Display for FluxKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FluxKind::Upwind => "upwind",
            FluxKind::Central => "central",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Ssprk3,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub flux: FluxKind,
    pub weno: WenoConfig,
    pub cfl: f64,
    pub integrator: Integrator,
    /// A run stops as steady once the residual drops to this level.
    pub steady_tol: f64,
    /// Also stop once the residual, already below `stall_ceiling`, has not
    /// halved for this many steps.
    /// Useful on fine meshes where round-off keeps the residual above
    /// `steady_tol`.
    pub stall_steps: Option<usize>,
    pub stall_ceiling: f64,
    pub max_steps: usize,
}

impl SchemeConfig {
    pub fn new(flux: FluxKind, weno: WenoConfig) -> Self {
        Self {
            flux,
            weno,
            cfl: 0.4,
            integrator: Integrator::Ssprk3,
            steady_tol: 1e-14,
            stall_steps: None,
            stall_ceiling: 1e-9,
            max_steps: 10_000_000,
        }
    }

    pub fn validate(&self, model: ModelId) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidInput(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if self.flux == FluxKind::Upwind && !model.has_left_eigensystem() {
            return Err(Error::Unsupported { model, what: "the upwind global flux" });
        }
        self.weno.validate()
    }
}

/// Outcome of [`Solver::advance`].
#[derive(Debug, Clone)]
pub struct RunResult {
    pub state: StateField,
    pub time: f64,
    pub steps: usize,
    /// The last residual is at or below `steady_tol`.
    pub steady: bool,
    /// The run stopped on residual stagnation.
    pub stalled: bool,
    /// L-infinity norm of `dU/dt` before every step.
    pub residuals: Vec<f64>,
}

impl RunResult {
    pub fn last_residual(&self) -> Option<f64> {
        self.residuals.last().copied()
    }
}

/// Sign projectors `R diag((1 +- sgn lambda) / 2) L` applied to `G^L` and
/// `G^R`.
pub fn numerical_flux_upwind(
    gl: &Vars,
    gr: &Vars,
    wl: &PrimitiveState,
    wr: &PrimitiveState,
    model: ModelId,
    p: &PhysicalParams,
) -> Result<Vars> {
    let star = wl.mean(wr);
    let eig = model.left_eigensystem(&star, p.g)?;
    let n = eig.n;
    let cl = mat_vec(&eig.left, gl, n);
    let cr = mat_vec(&eig.left, gr, n);
    let mut c = ZERO_VARS;
    for k in 0..n {
        let s = eig.values[k].signum() * (eig.values[k] != 0.0) as i32 as f64;
        c[k] = 0.5 * (1.0 + s) * cl[k] + 0.5 * (1.0 - s) * cr[k];
    }
    Ok(mat_vec(&eig.right, &c, n))
}

/// `(G^L + G^R) / 2 - A(U*) (G^R - G^L) / |lambda_max|`.
pub fn numerical_flux_central(
    gl: &Vars,
    gr: &Vars,
    wl: &PrimitiveState,
    wr: &PrimitiveState,
    model: ModelId,
    p: &PhysicalParams,
) -> Result<Vars> {
    let star = wl.mean(wr);
    let lmax = model.spectral_radius(&star, p.g)?;
    if lmax == 0.0 {
        return Err(Error::DegenerateState);
    }
    let n = model.n_vars();
    let a = model.system_matrix(&star, p.g);
    let mut dg = ZERO_VARS;
    for k in 0..n {
        dg[k] = gr[k] - gl[k];
    }
    let ad = mat_vec(&a, &dg, n);
    let mut out = ZERO_VARS;
    for k in 0..n {
        out[k] = 0.5 * (gl[k] + gr[k]) - ad[k] / lmax;
    }
    Ok(out)
}

/// The projector `R diag(+-) L` used by the upwind flux; exposed for tests.
pub fn upwind_projectors(model: ModelId, w: &PrimitiveState, g: f64) -> Result<(crate::models::Mat, crate::models::Mat)> {
    let eig = model.left_eigensystem(w, g)?;
    let n = eig.n;
    let mut dp = ZERO_MAT;
    let mut dm = ZERO_MAT;
    for k in 0..n {
        let s = eig.values[k].signum() * (eig.values[k] != 0.0) as i32 as f64;
        dp[k][k] = 0.5 * (1.0 + s);
        dm[k][k] = 0.5 * (1.0 - s);
    }
    Ok((
        mat_mul(&eig.right, &mat_mul(&dp, &eig.left, n), n),
        mat_mul(&eig.right, &mat_mul(&dm, &eig.left, n), n),
    ))
}

/// Everything needed to evaluate the semi-discrete operator on one mesh.
#[derive(Debug, Clone)]
pub struct Solver {
    pub model: ModelId,
    pub params: PhysicalParams,
    pub scheme: SchemeConfig,
    pub mesh: Mesh,
    pub bc: BoundarySpec,
    pub bathymetry: Bathymetry,
    table: QuadratureTable,
    node_kernel: WenoKernel,
    edge_kernel: WenoKernel,
    bottom: Vec<f64>,
}

/// Intermediate products of one evaluation of the operator.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub reconstruction: CellReconstruction,
    pub layer: GlobalFluxLayer,
    /// `(G^L, G^R)` at interfaces `0..=n_cells`.
    pub interface_g: Vec<[Vars; 2]>,
    pub fluxes: Vec<Vars>,
}

impl Solver {
    pub fn new(
        model: ModelId,
        params: PhysicalParams,
        bathymetry: Bathymetry,
        scheme: SchemeConfig,
        mesh: Mesh,
        bc: BoundarySpec,
    ) -> Result<Self> {
        params.validate()?;
        scheme.validate(model)?;
        bc.validate(model.n_vars())?;
        let order = scheme.weno.order;
        let needed = 2 * order.radius() + 1;
        if mesh.n_ghost < needed {
            return Err(Error::InvalidInput(format!(
                "order {} needs {needed} ghost cells, mesh has {}",
                order.as_usize(),
                mesh.n_ghost
            )));
        }
        let table = QuadratureTable::new(order, mesh.dx)?;
        let node_kernel = WenoKernel::new(scheme.weno, table.nodes())?;
        let edge_kernel = WenoKernel::new(scheme.weno, &[-0.5, 0.5])?;
        let bottom = cell_averages(&bathymetry, &mesh, &table);
        Ok(Self { model, params, scheme, mesh, bc, bathymetry, table, node_kernel, edge_kernel, bottom })
    }

    pub fn table(&self) -> &QuadratureTable {
        &self.table
    }

    /// Cell averages of the bottom on every storage row.
    pub fn bottom(&self) -> &[f64] {
        &self.bottom
    }

    fn check_state(&self, state: &StateField) -> Result<()> {
        if state.n_vars() != self.model.n_vars() || state.rows().len() != self.mesh.n_total() {
            return Err(Error::InvalidInput(format!(
                "state shape ({} vars, {} rows) does not match {} on {} rows",
                state.n_vars(),
                state.rows().len(),
                self.model,
                self.mesh.n_total()
            )));
        }
        Ok(())
    }

    /// Runs the full pipeline and keeps every intermediate product.
    pub fn diagnostics(&self, state: &mut StateField) -> Result<Diagnostics> {
        self.check_state(state)?;
        fill_ghosts(state, &self.bc)?;
        let rec = reconstruct_field(state, &self.bottom, self.model, &self.node_kernel, &self.table, false)?;
        let mut layer = assemble(&rec, self.model, &self.params, &self.table)?;
        let ng = self.mesh.n_ghost;
        let n = self.mesh.n_cells;
        extend_ghost_g(&mut layer, &self.bc, ng, n);
        let m = self.model.n_vars();
        let per_cell = reconstruct_g_interfaces(&layer, ng - 1..ng + n + 1, m, &self.edge_kernel);
        let mut interface_g = Vec::with_capacity(n + 1);
        let mut fluxes = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let gl = per_cell[k][1];
            let gr = per_cell[k + 1][0];
            let wl = rec.cell(ng - 1 + k).right.prim;
            let wr = rec.cell(ng + k).left.prim;
            let f = match self.scheme.flux {
                FluxKind::Upwind => numerical_flux_upwind(&gl, &gr, &wl, &wr, self.model, &self.params),
                FluxKind::Central => numerical_flux_central(&gl, &gr, &wl, &wr, self.model, &self.params),
            }
            .map_err(|e| match e {
                Error::NonPositiveHeight { h, .. } => Error::NonPositiveHeight { cell: ng + k, h },
                other => other,
            })?;
            interface_g.push([gl, gr]);
            fluxes.push(f);
        }
        Ok(Diagnostics { reconstruction: rec, layer, interface_g, fluxes })
    }

    /// `dU/dt` on the interior cells. Fills the ghost rows of `state`.
    pub fn residual(&self, state: &mut StateField, out: &mut Vec<Vars>) -> Result<()> {
        let d = self.diagnostics(state)?;
        let m = self.model.n_vars();
        let inv_dx = 1.0 / self.mesh.dx;
        out.clear();
        for i in 0..self.mesh.n_cells {
            let mut r = ZERO_VARS;
            for k in 0..m {
                r[k] = -(d.fluxes[i + 1][k] - d.fluxes[i][k]) * inv_dx;
            }
            out.push(r);
        }
        Ok(())
    }

    /// Largest spectral radius over the interior cells.
    pub fn max_speed(&self, state: &StateField) -> Result<f64> {
        let mut s: f64 = 0.0;
        for (i, row) in state.interior().iter().enumerate() {
            let w = self.model.to_primitive(row).map_err(|e| e.at_cell(i))?;
            s = s.max(self.model.spectral_radius(&w, self.params.g)?);
        }
        Ok(s)
    }

    /// Advances `state` to `t_end`, stopping early on a steady residual.
    pub fn advance(&self, mut state: StateField, t_end: f64) -> Result<RunResult> {
        self.check_state(&state)?;
        state.validate()?;
        let m = self.model.n_vars();
        let n = self.mesh.n_cells;
        let mut t = 0.0;
        let mut steps = 0;
        let mut residuals = Vec::new();
        // Last residual that halved its predecessor anchor, and its step.
        let mut anchor = f64::INFINITY;
        let mut anchor_step = 0usize;
        let mut k1 = Vec::with_capacity(n);
        let mut k2 = Vec::with_capacity(n);
        let mut k3 = Vec::with_capacity(n);
        let mut k4 = Vec::with_capacity(n);
        let mut stage = state.clone();
        let mut steady = false;
        let mut stalled = false;

        while t < t_end {
            if steps >= self.scheme.max_steps {
                return Err(Error::MaxSteps(self.scheme.max_steps));
            }
            self.residual(&mut state, &mut k1)?;
            let res = k1.iter().flat_map(|r| r[..m].iter()).fold(0.0_f64, |a, v| a.max(v.abs()));
            if !res.is_finite() {
                return Err(Error::NonFinite { step: steps });
            }
            residuals.push(res);
            if res <= self.scheme.steady_tol {
                steady = true;
                break;
            }
            if res < 0.5 * anchor {
                anchor = res;
                anchor_step = steps;
            }
            if let Some(window) = self.scheme.stall_steps {
                if anchor <= self.scheme.stall_ceiling && steps - anchor_step >= window {
                    stalled = true;
                    break;
                }
            }
            let speed = self.max_speed(&state)?;
            if !(speed > 0.0) {
                return Err(Error::DegenerateState);
            }
            let dt = (self.scheme.cfl * self.mesh.dx / speed).min(t_end - t);

            let u0: Vec<Vars> = state.interior().to_vec();
            match self.scheme.integrator {
                Integrator::Ssprk3 => {
                    combine(&mut stage, &u0, &[(1.0, &k1)], dt);
                    self.residual(&mut stage, &mut k2)?;
                    let s1: Vec<Vars> = stage.interior().to_vec();
                    blend(&mut stage, 0.75, &u0, 0.25, &s1, &k2, dt);
                    self.residual(&mut stage, &mut k3)?;
                    let s2: Vec<Vars> = stage.interior().to_vec();
                    blend(&mut state, 1.0 / 3.0, &u0, 2.0 / 3.0, &s2, &k3, dt);
                }
                Integrator::Rk4 => {
                    combine(&mut stage, &u0, &[(0.5, &k1)], dt);
                    self.residual(&mut stage, &mut k2)?;
                    combine(&mut stage, &u0, &[(0.5, &k2)], dt);
                    self.residual(&mut stage, &mut k3)?;
                    combine(&mut stage, &u0, &[(1.0, &k3)], dt);
                    self.residual(&mut stage, &mut k4)?;
                    let w = [(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)];
                    combine(&mut state, &u0, &w, dt);
                }
            }
            steps += 1;
            t = if t_end - t <= dt { t_end } else { t + dt };
            if state.interior().iter().any(|r| r[..m].iter().any(|v| !v.is_finite())) {
                return Err(Error::NonFinite { step: steps });
            }
        }
        Ok(RunResult { state, time: t, steps, steady, stalled, residuals })
    }
}

/// `dst = base + dt * sum_i c_i k_i` on the interior.
fn combine(dst: &mut StateField, base: &[Vars], terms: &[(f64, &Vec<Vars>)], dt: f64) {
    for (i, row) in dst.interior_mut().iter_mut().enumerate() {
        let mut v = base[i];
        for (c, k) in terms {
            for (a, b) in v.iter_mut().zip(k[i].iter()) {
                *a += c * dt * b;
            }
        }
        *row = v;
    }
}

/// `dst = a u0 + b (s + dt k)` on the interior.
fn blend(dst: &mut StateField, a: f64, u0: &[Vars], b: f64, s: &[Vars], k: &[Vars], dt: f64) {
    for (i, row) in dst.interior_mut().iter_mut().enumerate() {
        for c in 0..row.len() {
            row[c] = a * u0[i][c] + b * (s[i][c] + dt * k[i][c]);
        }
    }
}

/// Holds `G` constant across the ghost cells of boundaries whose ghost
/// states are constant. The ghost states of an inflow or a transmissive
/// boundary do not vary, but friction still makes `R` grow across them,
/// which leaves a kink in `G` that the nonlinear weights keep reacting to.
/// An inflow keeps the value of its innermost ghost cell; a transmissive
/// boundary takes the value of the last interior cell.
fn extend_ghost_g(layer: &mut GlobalFluxLayer, bc: &BoundarySpec, ng: usize, n: usize) {
    let lo = layer.lo;
    let len = layer.g_bar.len();
    match bc.left {
        BoundaryKind::Transmissive => {
            let edge = layer.g_bar[ng - lo];
            layer.g_bar[..ng - lo].fill(edge);
        }
        BoundaryKind::SupercriticalInflow(_) => {
            let edge = layer.g_bar[ng - 1 - lo];
            layer.g_bar[..ng - 1 - lo].fill(edge);
        }
        _ => {}
    }
    if bc.right == BoundaryKind::Transmissive {
        let edge = layer.g_bar[ng + n - 1 - lo];
        layer.g_bar[ng + n - lo..len].fill(edge);
    }
}

/// Free-function form of [`Solver::residual`].
pub fn semidiscrete_residual(
    state: &StateField,
    model: ModelId,
    params: PhysicalParams,
    bathymetry: Bathymetry,
    scheme: SchemeConfig,
    mesh: Mesh,
    bc: BoundarySpec,
) -> Result<Vec<Vars>> {
    let solver = Solver::new(model, params, bathymetry, scheme, mesh, bc)?;
    let mut s = state.clone();
    let mut out = Vec::new();
    solver.residual(&mut s, &mut out)?;
    Ok(out)
}
