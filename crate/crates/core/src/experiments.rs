//! Scenario catalogue and the numerical studies built on it: convergence
//! sweeps against exact equilibria, perturbations of equilibria, the
//! eigenvalue report and CSV emission.
//!
//! Every scenario lives on `[0, 25]` over the smooth bump
//! `0.05 sin(x - 12.5) exp(1 - (x - 12.5)^2)` unless a custom bathymetry is
//! requested.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bathymetry::Bathymetry;
use crate::error::{Error, Result};
use crate::mesh_state::{estimated_order, l2_error, BoundaryKind, BoundarySpec, Mesh, StateField};
use crate::models::{ModelId, PhysicalParams, PrimitiveState, Vars, MAX_MOMENTS, ZERO_VARS};
use crate::quadrature::{Order, QuadratureTable};
use crate::solver::{FluxKind, Integrator, RunResult, SchemeConfig, Solver};
use crate::steady_reference::{lake_at_rest, swme1_exact_profile, EquilibriumConstants, Regime};
use crate::weno::WenoConfig;

pub const X_LEFT: f64 = 0.0;
pub const X_RIGHT: f64 = 25.0;
pub const DEFAULT_MESH_SIZES: [usize; 5] = [100, 200, 400, 600, 800];

/// Order of the Gauss rule used to average exact reference profiles.
const REFERENCE_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    LakeAtRest,
    LarPerturbation,
    Supercritical,
    Subcritical,
    SupercriticalFriction,
    PerturbationComparison,
    EigenvalueReport,
    Custom,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::LakeAtRest,
        Scenario::LarPerturbation,
        Scenario::Supercritical,
        Scenario::Subcritical,
        Scenario::SupercriticalFriction,
        Scenario::PerturbationComparison,
        Scenario::EigenvalueReport,
        Scenario::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::LakeAtRest => "lake_at_rest",
            Scenario::LarPerturbation => "lar_perturbation",
            Scenario::Supercritical => "supercritical",
            Scenario::Subcritical => "subcritical",
            Scenario::SupercriticalFriction => "supercritical_friction",
            Scenario::PerturbationComparison => "perturbation_comparison",
            Scenario::EigenvalueReport => "eigenvalue_report",
            Scenario::Custom => "custom",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown scenario '{}'", s.trim())))
    }
}

/// How a steady run is started.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// The scenario's initial data (`h = h0 - b`, zero discharge).
    Rest,
    /// The exact equilibrium, when one is known.
    Reference,
}

impl std::str::FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rest" => Ok(InitKind::Rest),
            "reference" | "ref" => Ok(InitKind::Reference),
            other => Err(Error::Config(format!("unknown init '{other}'"))),
        }
    }
}

/// The equilibrium a scenario is built around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flow {
    /// `eta = eta0`, every velocity moment zero.
    LakeAtRest { eta0: f64 },
    /// Moving equilibrium fed by boundary data. `h` is the height at the
    /// station where it is prescribed (inlet when supercritical, outlet when
    /// subcritical); discharge and moments are prescribed at the inlet.
    Moving { regime: Regime, h: f64, hu: f64, h_alpha: [f64; MAX_MOMENTS] },
}

/// Compact bump `A exp(1 - 1 / (1 - r)^2)` with `r = width (x - center)^2`,
/// zero where `r >= 1`, added to the water height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl Perturbation {
    pub fn new(amplitude: f64) -> Self {
        Self { amplitude, center: 9.5, width: 4.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = self.width * (x - self.center).powi(2);
        if r >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / ((1.0 - r) * (1.0 - r))).exp()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub model: ModelId,
    /// Models of a comparison or eigenvalue report.
    pub models: Vec<ModelId>,
    pub order: Order,
    pub flux: FluxKind,
    pub mesh_sizes: Vec<usize>,
    pub g: f64,
    /// `(nu, lambda)` when friction is on.
    pub friction: Option<(f64, f64)>,
    pub bathymetry: Bathymetry,
    pub flow: Flow,
    pub t_end: f64,
    pub cfl: f64,
    pub integrator: Integrator,
    pub init: InitKind,
    /// Stop at a steady residual. When off, runs go to `t_end`.
    pub until_steady: bool,
    /// Residual at which a run counts as steady; `None` scales it with the
    /// mesh as `1e-13 N`.
    pub steady_tol: Option<f64>,
    /// A perturbation study refuses equilibria whose residual exceeds this.
    pub equilibrium_tol: f64,
    pub perturbation: Perturbation,
    pub snapshot_times: Vec<f64>,
    /// Where the eigenvalue report samples the steady state.
    pub sample_x: f64,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn preset(scenario: Scenario) -> Self {
        let supercritical =
            Flow::Moving { regime: Regime::Supercritical, h: 2.0, hu: 24.0, h_alpha: [-0.5, 0.0] };
        let friction_flow = Flow::Moving { regime: Regime::Supercritical, h: 2.0, hu: 24.0, h_alpha: [-0.5, -0.2] };
        let all_moment_models = vec![ModelId::Swme1, ModelId::Swlme2, ModelId::Hswme2, ModelId::Swme2];
        let mut cfg = Self {
            scenario,
            model: ModelId::Swme1,
            models: vec![ModelId::Swme1],
            order: Order::Five,
            flux: FluxKind::Central,
            mesh_sizes: DEFAULT_MESH_SIZES.to_vec(),
            g: 9.812,
            friction: None,
            bathymetry: Bathymetry::Bump,
            flow: supercritical,
            t_end: 50.0,
            cfl: 0.4,
            integrator: Integrator::Ssprk3,
            init: InitKind::Rest,
            until_steady: true,
            steady_tol: None,
            equilibrium_tol: 1e-8,
            perturbation: Perturbation::new(1e-3),
            snapshot_times: Vec::new(),
            sample_x: 23.0,
            out_dir: None,
        };
        match scenario {
            Scenario::LakeAtRest => {
                cfg.g = 1.0;
                cfg.friction = Some((0.05, 1.0));
                cfg.flow = Flow::LakeAtRest { eta0: 1.0 };
                cfg.t_end = 1.0;
                cfg.until_steady = false;
            }
            Scenario::LarPerturbation => {
                cfg.g = 9.8;
                cfg.friction = Some((0.05, 1.0));
                cfg.flow = Flow::LakeAtRest { eta0: 1.0 };
                cfg.t_end = 2.0;
                cfg.until_steady = false;
                cfg.perturbation = Perturbation::new(1e-1);
                cfg.snapshot_times = vec![0.0, 0.66, 1.33, 2.0];
                cfg.mesh_sizes = vec![100, 200, 800];
            }
            Scenario::Supercritical | Scenario::Custom => {}
            Scenario::Subcritical => {
                cfg.flow = Flow::Moving { regime: Regime::Subcritical, h: 2.0, hu: 4.42, h_alpha: [0.1, 0.0] };
                cfg.t_end = 400.0;
                cfg.steady_tol = Some(3e-12);
            }
            Scenario::SupercriticalFriction => {
                cfg.friction = Some((0.05, 1.0));
                cfg.flow = friction_flow;
                cfg.models = all_moment_models;
                cfg.mesh_sizes = vec![100];
            }
            Scenario::PerturbationComparison => {
                cfg.friction = Some((0.05, 1.0));
                cfg.flow = friction_flow;
                cfg.models = all_moment_models;
                cfg.snapshot_times = vec![0.225, 0.45, 0.675, 0.9];
                cfg.mesh_sizes = vec![100, 200, 800];
            }
            Scenario::EigenvalueReport => {
                cfg.friction = Some((0.05, 1.0));
                cfg.flow = friction_flow;
                cfg.models = all_moment_models;
                cfg.mesh_sizes = vec![100];
            }
        }
        cfg
    }

    /// Parses a flat `key = value` file. `scenario` selects the preset and
    /// every other key overrides it. Blank lines and `#` comments are
    /// ignored.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            pairs.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
        }
        let scenario = pairs
            .iter()
            .find(|(k, _)| k == "scenario")
            .map(|(_, v)| v.parse::<Scenario>())
            .transpose()?
            .ok_or_else(|| Error::Config("missing key 'scenario'".into()))?;
        let mut cfg = Self::preset(scenario);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_key_values(&fs::read_to_string(path)?)
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {key} '{value}': {what}"));
        let real = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("not a number"));
        match key {
            "scenario" => {}
            "model" => {
                self.model = value.parse()?;
                self.models = vec![self.model];
            }
            "models" => {
                self.models = split_list(value).map(str::parse).collect::<Result<_>>()?;
                if let Some(&m) = self.models.first() {
                    self.model = m;
                }
            }
            "order" => {
                self.order = Order::from_usize(value.parse().map_err(|_| bad("not an integer"))?)?;
            }
            "flux" => self.flux = value.parse()?,
            "n_cells" | "mesh_sizes" => {
                self.mesh_sizes = split_list(value)
                    .map(|s| s.parse::<usize>().map_err(|_| bad("not a list of integers")))
                    .collect::<Result<_>>()?;
            }
            "g" => self.g = real(value)?,
            "nu" => {
                let lambda = self.friction.map_or(1.0, |f| f.1);
                self.friction = Some((real(value)?, lambda));
            }
            "lambda" => {
                let nu = self.friction.map_or(0.0, |f| f.0);
                self.friction = Some((nu, real(value)?));
            }
            "friction" => match value.to_ascii_lowercase().as_str() {
                "on" | "true" | "yes" => self.friction = Some(self.friction.unwrap_or((0.05, 1.0))),
                "off" | "false" | "no" => self.friction = None,
                _ => return Err(bad("expected on or off")),
            },
            "bathymetry" => {
                self.bathymetry = match value.to_ascii_lowercase().as_str() {
                    "bump" => Bathymetry::Bump,
                    "flat" => Bathymetry::Flat(0.0),
                    _ => return Err(bad("expected bump or flat")),
                }
            }
            "t_end" => self.t_end = real(value)?,
            "cfl" => self.cfl = real(value)?,
            "integrator" => {
                self.integrator = match value.to_ascii_lowercase().as_str() {
                    "ssprk3" => Integrator::Ssprk3,
                    "rk4" => Integrator::Rk4,
                    _ => return Err(bad("expected ssprk3 or rk4")),
                }
            }
            "init" => self.init = value.parse()?,
            "until_steady" => {
                self.until_steady = value.parse().map_err(|_| bad("expected true or false"))?;
            }
            "steady_tol" => self.steady_tol = Some(real(value)?),
            "equilibrium_tol" => self.equilibrium_tol = real(value)?,
            "perturb_amplitude" => self.perturbation.amplitude = real(value)?,
            "perturb_center" => self.perturbation.center = real(value)?,
            "perturb_width" => self.perturbation.width = real(value)?,
            "snapshot_times" => {
                self.snapshot_times = split_list(value).map(real).collect::<Result<_>>()?;
            }
            "sample_x" => self.sample_x = real(value)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            "eta0" => self.flow = Flow::LakeAtRest { eta0: real(value)? },
            "regime" | "inflow" => {
                let (mut regime, mut h, mut hu, mut h_alpha) = match self.flow {
                    Flow::Moving { regime, h, hu, h_alpha } => (regime, h, hu, h_alpha),
                    Flow::LakeAtRest { eta0 } => (Regime::Subcritical, eta0, 0.0, [0.0; MAX_MOMENTS]),
                };
                if key == "regime" {
                    regime = value.parse()?;
                } else {
                    let vals: Vec<f64> = split_list(value).map(real).collect::<Result<_>>()?;
                    if vals.len() < 2 || vals.len() > 2 + MAX_MOMENTS {
                        return Err(bad("expected h, hu and up to two moments"));
                    }
                    h = vals[0];
                    hu = vals[1];
                    h_alpha = [0.0; MAX_MOMENTS];
                    h_alpha[..vals.len() - 2].copy_from_slice(&vals[2..]);
                }
                self.flow = Flow::Moving { regime, h, hu, h_alpha };
            }
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.mesh_sizes.is_empty() {
            return Err(Error::Config("at least one mesh size is required".into()));
        }
        if self.mesh_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("mesh sizes must be ascending, got {:?}", self.mesh_sizes)));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.snapshot_times.iter().any(|t| !(*t >= 0.0)) || self.snapshot_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("snapshot times must be non-negative and ascending".into()));
        }
        self.physical_params().validate()?;
        for &m in &self.models {
            self.scheme(100).validate(m)?;
        }
        Ok(())
    }

    pub fn physical_params(&self) -> PhysicalParams {
        match self.friction {
            Some((nu, lambda)) => PhysicalParams::with_friction(self.g, nu, lambda),
            None => PhysicalParams::frictionless(self.g),
        }
    }

    pub fn steady_tolerance(&self, n_cells: usize) -> f64 {
        self.steady_tol.unwrap_or(1e-13 * n_cells as f64)
    }

    /// Scheme settings for a steady run on `n_cells` cells.
    pub fn scheme(&self, n_cells: usize) -> SchemeConfig {
        let mut s = SchemeConfig::new(self.flux, WenoConfig::new(self.order));
        s.cfl = self.cfl;
        s.integrator = self.integrator;
        if self.until_steady {
            s.steady_tol = self.steady_tolerance(n_cells);
            s.stall_steps = Some((10 * n_cells).max(1000));
        } else {
            s.steady_tol = 0.0;
        }
        s
    }

    /// True when the scenario studies the evolution of a perturbation.
    pub fn is_perturbation(&self) -> bool {
        matches!(self.scenario, Scenario::LarPerturbation | Scenario::PerturbationComparison)
            || !self.snapshot_times.is_empty()
    }

    fn write_target(&self, name: &str) -> Result<Option<PathBuf>> {
        match &self.out_dir {
            None => Ok(None),
            Some(dir) => {
                fs::create_dir_all(dir)?;
                Ok(Some(dir.join(name)))
            }
        }
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

/// A solver, its starting state and (when known) the exact equilibrium for
/// one model on one mesh.
#[derive(Debug, Clone)]
pub struct Case {
    pub solver: Solver,
    pub initial: StateField,
    /// Exact equilibrium averaged with a 3-point Gauss rule.
    pub reference: Option<StateField>,
}

impl ExperimentConfig {
    pub fn boundary(&self, model: ModelId) -> BoundarySpec {
        let m = model.n_vars();
        let nm = model.n_moments();
        match self.flow {
            Flow::LakeAtRest { eta0 } => BoundarySpec::new(
                BoundaryKind::SubcriticalInlet(vec![0.0; m - 1]),
                BoundaryKind::SubcriticalOutlet(eta0 - self.bathymetry.eval(X_RIGHT)),
            ),
            Flow::Moving { regime: Regime::Supercritical, h, hu, h_alpha } => {
                let mut v = vec![h, hu];
                v.extend_from_slice(&h_alpha[..nm]);
                BoundarySpec::new(BoundaryKind::SupercriticalInflow(v), BoundaryKind::Transmissive)
            }
            Flow::Moving { regime: Regime::Subcritical, h, hu, h_alpha } => {
                let mut v = vec![hu];
                v.extend_from_slice(&h_alpha[..nm]);
                BoundarySpec::new(BoundaryKind::SubcriticalInlet(v), BoundaryKind::SubcriticalOutlet(h))
            }
        }
    }

    /// Builds the case for `model` on `n_cells` cells.
    pub fn case(&self, model: ModelId, n_cells: usize) -> Result<Case> {
        let mesh = Mesh::new(X_LEFT, X_RIGHT, n_cells)?;
        let solver = Solver::new(
            model,
            self.physical_params(),
            self.bathymetry.clone(),
            self.scheme(n_cells),
            mesh,
            self.boundary(model),
        )?;
        let (initial, reference) = match self.flow {
            Flow::LakeAtRest { eta0 } => {
                let s = lake_at_rest(&mesh, &self.bathymetry, eta0, model, solver.table())?;
                (s.clone(), Some(s))
            }
            Flow::Moving { h, h_alpha, .. } => {
                let reference = self.exact_profile(model, &mesh, &QuadratureTable::build(REFERENCE_ORDER, mesh.dx)?)?;
                let initial = match self.init {
                    InitKind::Rest => {
                        let mut s = StateField::zeros(&mesh, model.n_vars());
                        for (j, row) in s.rows_mut().iter_mut().enumerate() {
                            *row = ZERO_VARS;
                            row[0] = h - solver.bottom()[j];
                            row[2..2 + model.n_moments()].copy_from_slice(&h_alpha[..model.n_moments()]);
                        }
                        s
                    }
                    InitKind::Reference => self.exact_profile(model, &mesh, solver.table())?.ok_or_else(|| {
                        Error::Config(format!("no exact equilibrium is known for {model} in this scenario"))
                    })?,
                };
                (initial, reference)
            }
        };
        Ok(Case { solver, initial, reference })
    }

    /// Cell averages of the exact moving equilibrium, available for SWME1
    /// and SWE without friction.
    pub fn exact_profile(&self, model: ModelId, mesh: &Mesh, table: &QuadratureTable) -> Result<Option<StateField>> {
        let Flow::Moving { regime, h, hu, h_alpha } = self.flow else {
            return Ok(None);
        };
        let usable = self.friction.is_none()
            && match model {
                ModelId::Swme1 => h_alpha[1] == 0.0,
                ModelId::Swe => h_alpha == [0.0; MAX_MOMENTS],
                _ => false,
            };
        if !usable {
            return Ok(None);
        }
        let anchor = match regime {
            Regime::Supercritical => X_LEFT,
            Regime::Subcritical => X_RIGHT,
        };
        let consts = EquilibriumConstants::anchored(h, self.bathymetry.eval(anchor), hu, h_alpha[0], self.g)?;
        let profile = swme1_exact_profile(mesh, &self.bathymetry, &consts, self.g, regime, h, table)?;
        if model == ModelId::Swe {
            let mut s = StateField::zeros(mesh, 2);
            for (dst, src) in s.rows_mut().iter_mut().zip(profile.rows()) {
                *dst = [src[0], src[1], 0.0, 0.0];
            }
            return Ok(Some(s));
        }
        Ok(Some(profile))
    }
}

/// One steady run and its errors against the exact equilibrium.
#[derive(Debug, Clone)]
pub struct SteadyRun {
    pub case: Case,
    pub run: RunResult,
    pub errors: Option<Vec<f64>>,
}

/// Advances `model` on `n_cells` cells from the scenario's initial state
/// to `t_end` or to a steady state.
pub fn run_steady(cfg: &ExperimentConfig, model: ModelId, n_cells: usize) -> Result<SteadyRun> {
    let case = cfg.case(model, n_cells)?;
    let run = case.solver.advance(case.initial.clone(), cfg.t_end)?;
    let errors = case.reference.as_ref().map(|r| l2_error(&run.state, r, &case.solver.mesh));
    Ok(SteadyRun { case, run, errors })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n_cells: usize,
    /// Per conserved component.
    pub errors: Vec<f64>,
    /// Against the previous row; `None` on the first row or at round-off.
    pub eoa: Vec<Option<f64>>,
    pub steps: usize,
    pub time: f64,
    pub final_residual: f64,
    /// False when a steady run hit `t_end` without settling.
    pub steady: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub scenario: Scenario,
    pub model: ModelId,
    pub order: Order,
    pub flux: FluxKind,
    pub rows: Vec<ConvergenceRow>,
}

/// Runs `cfg.model` on every mesh size and tabulates errors and orders.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in &cfg.mesh_sizes {
        let out = run_steady(cfg, cfg.model, n)?;
        let errors = out.errors.clone().ok_or_else(|| {
            Error::Config(format!("scenario {} has no exact reference for {}", cfg.scenario, cfg.model))
        })?;
        let eoa = match rows.last() {
            None => vec![None; errors.len()],
            Some(prev) => prev
                .errors
                .iter()
                .zip(&errors)
                .map(|(&c, &f)| estimated_order(c, f, n as f64 / prev.n_cells as f64))
                .collect(),
        };
        if let Some(path) = cfg.write_target(&format!("solution_{}_{}_p{}_{}_N{n}.csv", cfg.scenario, cfg.model, cfg.order.as_usize(), cfg.flux))? {
            write_solution_csv(&path, &out.run.state, &out.case.solver)?;
        }
        rows.push(ConvergenceRow {
            n_cells: n,
            errors,
            eoa,
            steps: out.run.steps,
            time: out.run.time,
            final_residual: out.run.last_residual().unwrap_or(0.0),
            steady: !cfg.until_steady || out.run.steady || out.run.stalled,
        });
    }
    let table = ConvergenceTable { scenario: cfg.scenario, model: cfg.model, order: cfg.order, flux: cfg.flux, rows };
    if let Some(path) = cfg.write_target(&format!("convergence_{}_{}_p{}_{}.csv", cfg.scenario, cfg.model, cfg.order.as_usize(), cfg.flux))? {
        fs::write(path, table.to_csv())?;
    }
    Ok(table)
}

fn moment_labels(n_moments: usize) -> impl Iterator<Item = String> {
    (1..=n_moments).map(|k| format!("ha{k}"))
}

impl ConvergenceTable {
    fn labels(&self) -> Vec<String> {
        let mut v = vec!["h".to_string(), "hu".to_string()];
        v.extend(moment_labels(self.model.n_moments()));
        v
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N_e");
        for l in self.labels() {
            let _ = write!(out, ",err_{l},eoa_{l}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{}", row.n_cells);
            for (e, o) in row.errors.iter().zip(&row.eoa) {
                let _ = write!(out, ",{},{}", fmt17(*e), o.map_or("--".to_string(), fmt17));
            }
            out.push('\n');
        }
        out
    }

    /// Human-readable table.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{} / {} / WENO{} / {} flux\n{:>6}",
            self.scenario,
            self.model,
            self.order.as_usize(),
            self.flux,
            "N_e"
        );
        for l in self.labels() {
            let _ = write!(out, " {:>12} {:>6}", format!("err {l}"), "EOA");
        }
        out.push_str("  residual\n");
        for row in &self.rows {
            let _ = write!(out, "{:>6}", row.n_cells);
            for (e, o) in row.errors.iter().zip(&row.eoa) {
                let _ = write!(out, " {:>12.3e} {:>6}", e, o.map_or("--".to_string(), |v| format!("{v:.2}")));
            }
            let _ = write!(out, "  {:.1e}", row.final_residual);
            if !row.steady {
                out.push_str("  (not steady)");
            }
            out.push('\n');
        }
        out
    }
}

/// Deviation from the equilibrium at one output time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub state: StateField,
    /// `U - U_eq` on the interior cells.
    pub deviation: Vec<Vars>,
}

impl Snapshot {
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.deviation.iter().map(|r| r[k]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.deviation.iter().flat_map(|r| r.iter()).fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

#[derive(Debug, Clone)]
pub struct PerturbationRun {
    pub model: ModelId,
    pub solver: Solver,
    pub equilibrium: StateField,
    /// Residual of the equilibrium before the perturbation is added.
    pub equilibrium_residual: f64,
    pub snapshots: Vec<Snapshot>,
}

impl PerturbationRun {
    /// Cell centres of the interior.
    pub fn centers(&self) -> Vec<f64> {
        let mesh = &self.solver.mesh;
        mesh.interior().map(|j| mesh.center(j)).collect()
    }
}

/// The equilibrium of the scenario for `model`: the lake at rest directly,
/// otherwise the steady state reached from the initial data. Fails with
/// [`Error::NotSteady`] when its residual exceeds `cfg.equilibrium_tol`.
pub fn compute_equilibrium(cfg: &ExperimentConfig, model: ModelId, n_cells: usize) -> Result<(Solver, StateField, f64)> {
    let mut steady_cfg = cfg.clone();
    steady_cfg.until_steady = true;
    let case = steady_cfg.case(model, n_cells)?;
    let state = match cfg.flow {
        Flow::LakeAtRest { .. } => case.initial,
        Flow::Moving { .. } => case.solver.advance(case.initial, steady_cfg.t_end)?.state,
    };
    let mut probe = state.clone();
    let mut k = Vec::new();
    case.solver.residual(&mut probe, &mut k)?;
    let m = model.n_vars();
    let res = k.iter().flat_map(|r| r[..m].iter()).fold(0.0_f64, |a, v| a.max(v.abs()));
    if !(res <= cfg.equilibrium_tol) {
        return Err(Error::NotSteady { residual: res, tol: cfg.equilibrium_tol });
    }
    let mut solver = case.solver;
    solver.scheme.steady_tol = 0.0;
    solver.scheme.stall_steps = None;
    Ok((solver, probe, res))
}

/// Adds the perturbation to the water height of the equilibrium and records
/// the deviation at every snapshot time.
pub fn run_perturbation(cfg: &ExperimentConfig, model: ModelId, n_cells: usize) -> Result<PerturbationRun> {
    cfg.validate()?;
    let (solver, equilibrium, equilibrium_residual) = compute_equilibrium(cfg, model, n_cells)?;
    let mesh = solver.mesh;
    let table = solver.table().clone();
    let mut state = equilibrium.clone();
    for j in mesh.interior() {
        state.rows_mut()[j][0] += table.average(mesh.center(j), |x| cfg.perturbation.eval(x));
    }
    let times = if cfg.snapshot_times.is_empty() { vec![cfg.t_end] } else { cfg.snapshot_times.clone() };
    let mut t = 0.0;
    let mut snapshots = Vec::with_capacity(times.len());
    for &target in &times {
        if target > t {
            state = solver.advance(state, target - t)?.state;
            t = target;
        }
        let deviation = state
            .interior()
            .iter()
            .zip(equilibrium.interior())
            .map(|(a, b)| {
                let mut d = ZERO_VARS;
                for k in 0..model.n_vars() {
                    d[k] = a[k] - b[k];
                }
                d
            })
            .collect();
        let snap = Snapshot { time: target, state: state.clone(), deviation };
        if let Some(path) = cfg.write_target(&format!(
            "perturbation_{}_{}_p{}_N{n_cells}_t{target}.csv",
            cfg.scenario,
            model,
            cfg.order.as_usize()
        ))? {
            write_deviation_csv(&path, &snap, &solver)?;
        }
        snapshots.push(snap);
    }
    Ok(PerturbationRun { model, solver, equilibrium, equilibrium_residual, snapshots })
}

/// Interior cells where `|signal|` has a strict local maximum of at least
/// `rel` times its global maximum.
pub fn wave_features(signal: &[f64], rel: f64) -> Vec<usize> {
    let peak = signal.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if peak == 0.0 {
        return Vec::new();
    }
    let a: Vec<f64> = signal.iter().map(|v| v.abs()).collect();
    (1..a.len().saturating_sub(1))
        .filter(|&i| a[i] >= rel * peak && a[i] > a[i - 1] && a[i] >= a[i + 1])
        .collect()
}

/// Index of the largest `|signal|`.
pub fn peak_index(signal: &[f64]) -> Option<usize> {
    signal
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
}

#[derive(Debug, Clone)]
pub struct EigenRow {
    pub model: ModelId,
    /// Centre of the sampled cell.
    pub x: f64,
    pub state: PrimitiveState,
    /// Descending; an error message when hyperbolicity is lost.
    pub eigenvalues: std::result::Result<Vec<f64>, String>,
    pub equilibrium_residual: f64,
}

impl EigenRow {
    /// Eigenvalues in four table slots, with SWME1's three values placed as
    /// `(l1, l2, --, l3)` and a repeated middle eigenvalue listed once.
    pub fn slots(&self) -> [Option<f64>; 4] {
        let mut out = [None; 4];
        if let Ok(ev) = &self.eigenvalues {
            if ev.len() == 4 {
                for k in 0..4 {
                    out[k] = Some(ev[k]);
                }
                if ev[2] == ev[1] {
                    out[2] = None;
                }
            } else {
                out[0] = ev.first().copied();
                out[1] = ev.get(1).copied();
                out[3] = ev.last().copied();
            }
        }
        out
    }
}

/// Steady state of every model in `cfg.models` on the first mesh size,
/// sampled in the cell containing `cfg.sample_x`.
pub fn run_eigen_report(cfg: &ExperimentConfig) -> Result<Vec<EigenRow>> {
    cfg.validate()?;
    let n = cfg.mesh_sizes[0];
    let mut rows = Vec::new();
    for &model in &cfg.models {
        let (solver, state, res) = compute_equilibrium(cfg, model, n)?;
        let j = solver
            .mesh
            .locate(cfg.sample_x)
            .ok_or_else(|| Error::Config(format!("sample point {} lies outside the domain", cfg.sample_x)))?;
        let w = model.to_primitive(&state.rows()[j])?;
        let eigenvalues = model
            .eigenvalues(&w, cfg.g)
            .map(|ev| ev[..model.n_vars()].to_vec())
            .map_err(|e| e.to_string());
        rows.push(EigenRow { model, x: solver.mesh.center(j), state: w, eigenvalues, equilibrium_residual: res });
        if let Some(path) = cfg.write_target(&format!("solution_{}_{}_N{n}.csv", cfg.scenario, model))? {
            write_solution_csv(&path, &state, &solver)?;
        }
    }
    if let Some(path) = cfg.write_target("eigenvalues.csv")? {
        fs::write(path, eigen_csv(&rows))?;
    }
    Ok(rows)
}

pub fn eigen_csv(rows: &[EigenRow]) -> String {
    let mut out = String::from("model,x,lambda_1,lambda_2,lambda_3,lambda_4\n");
    for r in rows {
        let _ = write!(out, "{},{}", r.model, fmt17(r.x));
        for s in r.slots() {
            let _ = write!(out, ",{}", s.map_or("--".to_string(), fmt17));
        }
        out.push('\n');
    }
    out
}

pub fn render_eigen_table(rows: &[EigenRow]) -> String {
    let mut out = format!("{:<8} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "model", "x", "l1", "l2", "l3", "l4");
    for r in rows {
        let _ = write!(out, "{:<8} {:>8.3}", r.model.to_string(), r.x);
        match &r.eigenvalues {
            Ok(_) => {
                for s in r.slots() {
                    let _ = write!(out, " {:>8}", s.map_or("--".to_string(), |v| format!("{v:.2}")));
                }
            }
            Err(msg) => {
                let _ = write!(out, " {msg}");
            }
        }
        out.push('\n');
    }
    out
}

/// Full double precision (17 significant digits).
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?)
}

/// Header of a solution file for `model`.
pub fn solution_header(model: ModelId) -> Vec<String> {
    let nm = model.n_moments();
    let mut h: Vec<String> = ["x", "b", "h", "eta", "u_m"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=nm).map(|k| format!("alpha_{k}")));
    h.push("hu".into());
    h.extend((1..=nm).map(|k| format!("halpha_{k}")));
    h
}

/// Writes the interior of `state` as `x, b, h, eta, u_m, alpha_k, hu,
/// halpha_k`, with `b` the cell average of the bottom.
pub fn write_solution_csv(path: &Path, state: &StateField, solver: &Solver) -> Result<()> {
    let model = solver.model;
    let nm = model.n_moments();
    let mut w = csv_writer(path)?;
    w.write_record(solution_header(model))?;
    for j in solver.mesh.interior() {
        let row = &state.rows()[j];
        let p = model.to_primitive(row).map_err(|e| e.at_cell(j))?;
        let b = solver.bottom()[j];
        let mut rec = vec![fmt17(solver.mesh.center(j)), fmt17(b), fmt17(row[0]), fmt17(row[0] + b), fmt17(p.u)];
        rec.extend(p.alpha[..nm].iter().map(|v| fmt17(*v)));
        rec.extend(row[1..2 + nm].iter().map(|v| fmt17(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Contents of a solution file.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionData {
    pub model_moments: usize,
    pub x: Vec<f64>,
    pub b: Vec<f64>,
    /// Conserved variables per row.
    pub cons: Vec<Vars>,
}

impl SolutionData {
    /// Places the conserved rows into the interior of a field on `mesh`.
    pub fn to_state(&self, mesh: &Mesh) -> Result<StateField> {
        if self.cons.len() != mesh.n_cells {
            return Err(Error::InvalidInput(format!(
                "file has {} rows, mesh has {} cells",
                self.cons.len(),
                mesh.n_cells
            )));
        }
        let mut s = StateField::zeros(mesh, 2 + self.model_moments);
        s.interior_mut().copy_from_slice(&self.cons);
        Ok(s)
    }
}

pub fn read_solution_csv(path: &Path) -> Result<SolutionData> {
    let mut r = csv::ReaderBuilder::new().from_path(path)?;
    let header = r.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let nm = (1..=MAX_MOMENTS).filter(|k| col(&format!("halpha_{k}")).is_some()).count();
    let need = |name: &str| col(name).ok_or_else(|| Error::InvalidInput(format!("missing column '{name}'")));
    let (ix, ib, ih, ihu) = (need("x")?, need("b")?, need("h")?, need("hu")?);
    let iha: Vec<usize> = (1..=nm).map(|k| need(&format!("halpha_{k}"))).collect::<Result<_>>()?;
    let mut data = SolutionData { model_moments: nm, x: Vec::new(), b: Vec::new(), cons: Vec::new() };
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::InvalidInput(format!("bad number in column {i}")))
        };
        data.x.push(num(ix)?);
        data.b.push(num(ib)?);
        let mut u = ZERO_VARS;
        u[0] = num(ih)?;
        u[1] = num(ihu)?;
        for (k, &i) in iha.iter().enumerate() {
            u[2 + k] = num(i)?;
        }
        data.cons.push(u);
    }
    Ok(data)
}

/// Writes `x, dh, dhu, dhalpha_k` for a snapshot.
pub fn write_deviation_csv(path: &Path, snap: &Snapshot, solver: &Solver) -> Result<()> {
    let nm = solver.model.n_moments();
    let mut w = csv_writer(path)?;
    let mut header = vec!["x".to_string(), "dh".into(), "dhu".into()];
    header.extend((1..=nm).map(|k| format!("dhalpha_{k}")));
    w.write_record(&header)?;
    for (i, j) in solver.mesh.interior().enumerate() {
        let mut rec = vec![fmt17(solver.mesh.center(j))];
        rec.extend(snap.deviation[i][..2 + nm].iter().map(|v| fmt17(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
