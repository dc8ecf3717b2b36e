use std::path::{Path, PathBuf};

use bo_lab_core::diagnostics::{HeavySettings, StudySettings};
use bo_lab_core::eigen::SolverOptions;
use bo_lab_core::grid::Grid1D;
use bo_lab_core::model::ModelSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

fn default_surfaces() -> usize {
    3
}

fn default_one() -> usize {
    1
}

fn default_levels() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub grid1: Grid1D,
    pub grid2: Grid1D,
    /// Number of potential energy surfaces `A`.
    #[serde(default = "default_surfaces")]
    pub n_surfaces: usize,
    /// Rank `N` of the slice-state projector.
    #[serde(default = "default_one")]
    pub projector_rank: usize,
    #[serde(default = "default_levels")]
    pub nuclear_levels: usize,
    #[serde(default = "default_levels")]
    pub exact_states: usize,
    #[serde(default)]
    pub heavy: HeavySettings,
    /// Mass ratios `M/m` for `scaling`.
    #[serde(default)]
    pub sweep: Option<Vec<f64>>,
    #[serde(default)]
    pub born_huang: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// Optional eigensolver overrides; unset fields keep the library defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_matvecs: Option<usize>,
    pub dense_threshold: Option<usize>,
}

impl SolverConfig {
    pub fn apply(&self, mut opts: SolverOptions) -> SolverOptions {
        if let Some(v) = self.rel_tol {
            opts.rel_tol = v;
        }
        if let Some(v) = self.abs_tol {
            opts.abs_tol = v;
        }
        if let Some(v) = self.max_matvecs {
            opts.max_matvecs = v;
        }
        if let Some(v) = self.dense_threshold {
            opts.dense_threshold = v;
        }
        opts
    }

    fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(CliError::Config(format!("field `solver.{name}` must be >= 0")));
                }
            }
        }
        if self.rel_tol == Some(0.0) && self.abs_tol == Some(0.0) {
            return Err(CliError::Config("solver tolerances cannot both be 0".into()));
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config(format!(
                "line {} column {}, field `{path}`: {inner}",
                inner.line(),
                inner.column()
            ))
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "field `schema_version`: expected {SCHEMA_VERSION}, got {}",
                cfg.schema_version
            )));
        }
        cfg.solver.validate()?;
        cfg.settings(SolverOptions::default())
            .validate(&cfg.model)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(sweep) = &cfg.sweep {
            if sweep.is_empty()
                || sweep.iter().any(|r| !(r.is_finite() && *r > 0.0))
                || sweep.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(CliError::Config(
                    "field `sweep`: mass ratios must be positive and strictly ascending".into(),
                ));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn settings(&self, solver: SolverOptions) -> StudySettings {
        StudySettings {
            grid1: self.grid1,
            grid2: self.grid2,
            n_surfaces: self.n_surfaces,
            projector_rank: self.projector_rank,
            nuclear_levels: self.nuclear_levels,
            exact_states: self.exact_states,
            heavy: self.heavy,
            born_huang: self.born_huang,
            solver,
        }
    }
}
