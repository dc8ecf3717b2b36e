//! `bo-lab`: runs the adiabatic and exact pipelines from a JSON config and
//! writes CSV and JSON artifacts.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use bo_lab_core::bo::{adiabatic_residual, assemble_product_state, solve_nuclear};
use bo_lab_core::clamped::scan_pes;
use bo_lab_core::diagnostics::{compare_report, kappa_scaling_study, BoLevel};
use bo_lab_core::eigen::SolverOptions;
use bo_lab_core::exact::{assemble_full_hamiltonian, solve_exact};
use bo_lab_core::model::analytic_normal_modes;
use bo_lab_core::output::{to_json_vec, write_pes_csv, write_scaling_csv, write_theta_csv};
use bo_lab_core::projection::solve_effective;
use clap::{Parser, ValueEnum};
use serde::Serialize;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] bo_lab_core::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_solver_failure() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Potential energy surfaces -> pes.csv
    Pes,
    /// Nuclear levels on every surface -> theta.csv, bo_energies.json
    Bo,
    /// Full diagonalization -> exact_energies.json
    Exact,
    /// Projected Hamiltonian -> heff_energies.json
    Project,
    /// Single-ratio comparison -> report.json
    Compare,
    /// Mass-ratio sweep -> scaling.csv, report.json
    Scaling,
}

#[derive(Debug, Parser)]
#[command(name = "bo-lab", version, about = "Adiabatic separation versus exact diagonalization")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long, env = "BO_LAB_CONFIG")]
    pub config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long, env = "BO_LAB_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "BO_LAB_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Start-vector seed for the iterative eigensolver.
    #[arg(long, env = "BO_LAB_SEED")]
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct ExactArtifact<'a> {
    energies: &'a [f64],
    residuals: &'a [f64],
    analytic: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct HeffArtifact<'a> {
    rank: usize,
    energies: &'a [f64],
    residuals: &'a [f64],
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })
}

fn json<T: Serialize + ?Sized>(v: &T) -> Vec<u8> {
    to_json_vec(v).expect("artifacts contain only serializable data")
}

/// Runs one command and returns the paths written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = RunConfig::load(&cli.config)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).map_err(|e| {
        CliError::Config(format!("output directory {} not writable: {e}", out.display()))
    })?;
    let mut solver = cfg.solver.apply(SolverOptions::default());
    if let Some(seed) = cli.seed {
        solver.seed = seed;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let files = pool.install(|| compute(cli.command, &cfg, solver))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        write_file(&out, name, &bytes)?;
        written.push(out.join(name));
    }
    Ok(written)
}

/// All numerical work; returns file contents for the coordinator to write.
fn compute(
    command: Command,
    cfg: &RunConfig,
    solver: SolverOptions,
) -> Result<Vec<(&'static str, Vec<u8>)>, CliError> {
    let spec = &cfg.model;
    let settings = cfg.settings(solver);
    let opts = &solver;
    Ok(match command {
        Command::Pes => {
            let field = scan_pes(spec, &cfg.grid1, &cfg.grid2, cfg.n_surfaces, opts)?;
            let mut buf = Vec::new();
            write_pes_csv(&mut buf, &field).expect("writing to memory");
            vec![("pes.csv", buf)]
        }
        Command::Bo => {
            let field = scan_pes(spec, &cfg.grid1, &cfg.grid2, cfg.n_surfaces, opts)?;
            let full = assemble_full_hamiltonian(spec, &cfg.grid1, &cfg.grid2)?;
            let mut nuclear = Vec::with_capacity(cfg.n_surfaces);
            let mut levels = Vec::new();
            for a in 0..cfg.n_surfaces {
                let sol = solve_nuclear(&field, spec, a, cfg.nuclear_levels, cfg.born_huang, opts)?;
                let residual_max = adiabatic_residual(&field, a)?.max;
                for (n, lv) in sol.levels.iter().enumerate() {
                    let st = assemble_product_state(&sol, &field, n)?;
                    levels.push(BoLevel {
                        surface: a,
                        level: n,
                        energy: lv.energy,
                        rayleigh_quotient: full.rayleigh_quotient(&st.amplitudes),
                        residual_max,
                    });
                }
                nuclear.push(sol);
            }
            let mut buf = Vec::new();
            write_theta_csv(&mut buf, &nuclear).expect("writing to memory");
            vec![("theta.csv", buf), ("bo_energies.json", json(&levels))]
        }
        Command::Exact => {
            let full = assemble_full_hamiltonian(spec, &cfg.grid1, &cfg.grid2)?;
            let sol = solve_exact(&full, cfg.exact_states, opts)?;
            let analytic = analytic_normal_modes(spec)
                .ok()
                .map(|m| m.lowest_levels(cfg.exact_states));
            let art = ExactArtifact {
                energies: &sol.energies,
                residuals: &sol.residuals,
                analytic,
            };
            vec![("exact_energies.json", json(&art))]
        }
        Command::Project => {
            let field = scan_pes(spec, &cfg.grid1, &cfg.grid2, cfg.n_surfaces, opts)?;
            let k = cfg.exact_states.min(cfg.grid1.n() * cfg.projector_rank);
            let eff = solve_effective(&field, spec, cfg.projector_rank, k, opts)?;
            let art = HeffArtifact {
                rank: eff.rank,
                energies: &eff.energies,
                residuals: &eff.residuals,
            };
            vec![("heff_energies.json", json(&art))]
        }
        Command::Compare => {
            let report = compare_report(spec, &settings)?;
            vec![("report.json", json(&report))]
        }
        Command::Scaling => {
            let sweep = cfg.sweep.as_deref().ok_or_else(|| {
                CliError::Config("`scaling` needs a `sweep` list of mass ratios".into())
            })?;
            let report = kappa_scaling_study(spec, sweep, &settings)?;
            let mut csv = Vec::new();
            write_scaling_csv(&mut csv, &report).expect("writing to memory");
            vec![("scaling.csv", csv), ("report.json", json(&report))]
        }
    })
}
