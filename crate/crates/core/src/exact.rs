//! Exact diagonalization of the full two-coordinate Hamiltonian on the
//! product grid. This is the reference every adiabatic result is checked
//! against, and shares nothing with the slice-by-slice route beyond the grid
//! and the stencil.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{lowest_eigenpairs, SolverOptions, SymmetricOperator};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, ProductGrid};
use crate::model::ModelSpec;

/// Refuse product grids beyond this many points.
pub const MAX_DIM: usize = 4_000_000;

/// The operator is never materialized densely above this dimension.
pub const DENSE_CEILING: usize = 20_000;

/// Desk-scale cap on the number of exact eigenpairs.
pub const MAX_STATES: usize = 20;

/// Matrix-free `-1/(2M) D1 ⊗ I - 1/(2m) I ⊗ D2 + diag(W)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullHamiltonian {
    spec: ModelSpec,
    grid: ProductGrid,
    /// `W(x1_i, x2_j)` at `grid.index(i, j)`.
    potential: Vec<f64>,
    /// `1 / (2 M h1²)`
    hop1: f64,
    /// `1 / (2 m h2²)`
    hop2: f64,
}

pub fn assemble_full_hamiltonian(
    spec: &ModelSpec,
    grid1: &Grid1D,
    grid2: &Grid1D,
) -> Result<FullHamiltonian> {
    let dim = grid1
        .n()
        .checked_mul(grid2.n())
        .filter(|&d| d <= MAX_DIM)
        .ok_or_else(|| {
            Error::InvalidGrid(format!(
                "product grid {} x {} exceeds {MAX_DIM} points",
                grid1.n(),
                grid2.n()
            ))
        })?;
    let grid = ProductGrid::new(*grid1, *grid2);
    let mut potential = Vec::with_capacity(dim);
    for i in 0..grid1.n() {
        let x1 = grid1.point(i);
        for j in 0..grid2.n() {
            potential.push(spec.potential.evaluate(x1, grid2.point(j)));
        }
    }
    Ok(FullHamiltonian {
        spec: *spec,
        grid,
        potential,
        hop1: 0.5 / (spec.nuclear_mass * grid1.h() * grid1.h()),
        hop2: 0.5 / (spec.electron_mass * grid2.h() * grid2.h()),
    })
}

impl FullHamiltonian {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn grid(&self) -> &ProductGrid {
        &self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Applies only the nuclear kinetic term `-1/(2M) ∂²/∂x1²`.
    pub fn apply_nuclear_kinetic(&self, x: &[f64], y: &mut [f64]) {
        let n1 = self.grid.grid1.n();
        let n2 = self.grid.grid2.n();
        let t = self.hop1;
        y.par_chunks_mut(n2).enumerate().for_each(|(i, row)| {
            let base = i * n2;
            for j in 0..n2 {
                let mut acc = 2.0 * t * x[base + j];
                if i > 0 {
                    acc -= t * x[base - n2 + j];
                }
                if i + 1 < n1 {
                    acc -= t * x[base + n2 + j];
                }
                row[j] = acc;
            }
        });
    }

    /// `<ψ|H|ψ> / <ψ|ψ>` under the product-grid inner product.
    pub fn rayleigh_quotient(&self, psi: &[f64]) -> f64 {
        let mut hpsi = vec![0.0; psi.len()];
        self.apply(psi, &mut hpsi);
        self.grid.dot(psi, &hpsi) / self.grid.dot(psi, psi)
    }
}

impl SymmetricOperator for FullHamiltonian {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n1 = self.grid.grid1.n();
        let n2 = self.grid.grid2.n();
        let (t1, t2) = (self.hop1, self.hop2);
        let diag = 2.0 * (t1 + t2);
        let w = &self.potential;
        y.par_chunks_mut(n2).enumerate().for_each(|(i, row)| {
            let base = i * n2;
            for j in 0..n2 {
                let k = base + j;
                let mut acc = (diag + w[k]) * x[k];
                if i > 0 {
                    acc -= t1 * x[k - n2];
                }
                if i + 1 < n1 {
                    acc -= t1 * x[k + n2];
                }
                if j > 0 {
                    acc -= t2 * x[k - 1];
                }
                if j + 1 < n2 {
                    acc -= t2 * x[k + 1];
                }
                row[j] = acc;
            }
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub energies: Vec<f64>,
    /// `‖H v - E v‖₂` for unit-norm `v`.
    pub residuals: Vec<f64>,
    /// Amplitudes normalized under the product-grid inner product.
    #[serde(skip)]
    pub states: Vec<Vec<f64>>,
}

/// Lowest `k` eigenpairs of the full Hamiltonian.
///
/// Converged when every residual is at most `opts.rel_tol * |E|`. Start
/// vectors come from `opts.seed`, so identical inputs give identical output.
pub fn solve_exact(h: &FullHamiltonian, k: usize, opts: &SolverOptions) -> Result<ExactSolution> {
    if k == 0 || k > MAX_STATES {
        return Err(Error::InvalidArgument(format!(
            "exact solve supports 1..={MAX_STATES} states, got {k}"
        )));
    }
    let opts = SolverOptions {
        dense_threshold: opts.dense_threshold.min(DENSE_CEILING),
        ..*opts
    };
    let pairs = lowest_eigenpairs(h, k, &opts).map_err(|e| e.with_context("exact solve"))?;
    let scale = 1.0 / h.grid.weight().sqrt();
    Ok(ExactSolution {
        energies: pairs.values,
        residuals: pairs.residuals,
        states: pairs
            .vectors
            .into_iter()
            .map(|v| v.into_iter().map(|x| x * scale).collect())
            .collect(),
    })
}
