//! `gfswme`: runs the scenario catalogue from the command line.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gfswme_core::experiments::{
    peak_index, render_eigen_table, run_convergence, run_eigen_report, run_perturbation, run_steady, wave_features,
    write_solution_csv, ExperimentConfig, InitKind, Scenario,
};
use gfswme_core::solver::FluxKind;
use gfswme_core::{ModelId, Order};

#[derive(Parser)]
#[command(name = "gfswme", version, about = "Well-balanced global-flux WENO schemes for shallow water moment models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a key = value configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Mesh-refinement study against an exact equilibrium.
    Convergence {
        #[arg(long, default_value = "supercritical")]
        scenario: Scenario,
        #[arg(long, default_value = "swme1")]
        model: ModelId,
        #[arg(long, default_value_t = 5)]
        order: usize,
        #[arg(long, default_value = "central")]
        flux: FluxKind,
        /// Comma-separated mesh sizes.
        #[arg(long, value_delimiter = ',')]
        n_cells: Option<Vec<usize>>,
        /// Start from the scenario's initial data (`rest`) or from the exact
        /// equilibrium (`reference`).
        #[arg(long, default_value = "rest")]
        init: InitKind,
        #[arg(long)]
        steady_tol: Option<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Perturb the friction steady state of several models and compare the
    /// waves.
    Compare {
        #[arg(long, value_delimiter = ',', default_value = "swme1,swlme2,hswme2,swme2")]
        models: Vec<ModelId>,
        #[arg(long, value_delimiter = ',')]
        n_cells: Option<Vec<usize>>,
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Eigenvalues of the friction steady states at x = 23.
    Eigen {
        #[arg(long, value_delimiter = ',', default_value = "swme1,swlme2,hswme2,swme2")]
        models: Vec<ModelId>,
        #[arg(long, default_value_t = 100)]
        n_cells: usize,
        #[arg(long, default_value_t = 23.0)]
        x: f64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_file(&config)
                .with_context(|| format!("reading configuration {}", config.display()))?;
            run_config(&cfg)
        }
        Command::Convergence { scenario, model, order, flux, n_cells, init, steady_tol, out_dir } => {
            let mut cfg = ExperimentConfig::preset(scenario);
            cfg.model = model;
            cfg.models = vec![model];
            cfg.order = Order::from_usize(order)?;
            cfg.flux = flux;
            cfg.init = init;
            cfg.steady_tol = steady_tol.or(cfg.steady_tol);
            cfg.out_dir = out_dir;
            if let Some(n) = n_cells {
                cfg.mesh_sizes = n;
            }
            let table = run_convergence(&cfg)?;
            print!("{}", table.render());
            Ok(())
        }
        Command::Compare { models, n_cells, amplitude, out_dir } => {
            let mut cfg = ExperimentConfig::preset(Scenario::PerturbationComparison);
            cfg.models = models;
            cfg.out_dir = out_dir;
            if let Some(n) = n_cells {
                cfg.mesh_sizes = n;
            }
            if let Some(a) = amplitude {
                cfg.perturbation.amplitude = a;
            }
            perturbations(&cfg)
        }
        Command::Eigen { models, n_cells, x, out_dir } => {
            let mut cfg = ExperimentConfig::preset(Scenario::EigenvalueReport);
            cfg.models = models;
            cfg.mesh_sizes = vec![n_cells];
            cfg.sample_x = x;
            cfg.out_dir = out_dir;
            print!("{}", render_eigen_table(&run_eigen_report(&cfg)?));
            Ok(())
        }
    }
}

fn run_config(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.scenario == Scenario::EigenvalueReport {
        print!("{}", render_eigen_table(&run_eigen_report(cfg)?));
        return Ok(());
    }
    if cfg.is_perturbation() {
        return perturbations(cfg);
    }
    let has_reference = cfg.case(cfg.model, cfg.mesh_sizes[0])?.reference.is_some();
    if has_reference && cfg.models.len() == 1 {
        print!("{}", run_convergence(cfg)?.render());
        return Ok(());
    }
    for &model in &cfg.models {
        for &n in &cfg.mesh_sizes {
            let out = run_steady(cfg, model, n)?;
            println!(
                "{model:<7} N={n:<5} t={:<10.4} steps={:<8} residual={:.3e}{}",
                out.run.time,
                out.run.steps,
                out.run.last_residual().unwrap_or(0.0),
                if out.run.steady || out.run.stalled || !cfg.until_steady { "" } else { "  (not steady)" }
            );
            if let Some(dir) = &cfg.out_dir {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("solution_{}_{model}_N{n}.csv", cfg.scenario));
                write_solution_csv(&path, &out.run.state, &out.case.solver)?;
            }
        }
    }
    Ok(())
}

fn perturbations(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.snapshot_times.is_empty() {
        bail!("a perturbation study needs snapshot_times");
    }
    let models = if cfg.scenario == Scenario::PerturbationComparison { cfg.models.clone() } else { vec![cfg.model] };
    for &n in &cfg.mesh_sizes {
        for &model in &models {
            let run = run_perturbation(cfg, model, n)?;
            let x = run.centers();
            println!("{model} N={n} equilibrium residual {:.2e}", run.equilibrium_residual);
            for snap in &run.snapshots {
                let dh = snap.component(0);
                let ha1 = if model.n_moments() > 0 { snap.component(2) } else { vec![0.0; dh.len()] };
                let peak = peak_index(&dh).map_or(f64::NAN, |i| x[i]);
                println!(
                    "  t={:<6} max|dh|={:.3e} peak x={:<8.3} max|dha1|={:.3e} features(ha1)={}",
                    snap.time,
                    dh.iter().fold(0.0_f64, |a, v| a.max(v.abs())),
                    peak,
                    ha1.iter().fold(0.0_f64, |a, v| a.max(v.abs())),
                    wave_features(&ha1, 0.1).len()
                );
            }
        }
    }
    Ok(())
}
