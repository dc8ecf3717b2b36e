//! Projection of the full Hamiltonian onto the span of the lowest `N`
//! slice states at every nuclear grid point.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::clamped::{clamped_matrix, ElectronicField};
use crate::eigen::{lowest_eigenpairs, SolverOptions, SymmetricOperator};
use crate::error::{Error, Result};
use crate::exact::FullHamiltonian;
use crate::grid::{weighted_dot, ProductGrid};
use crate::model::ModelSpec;

/// `P_N = Σ_i |x1_i><x1_i| ⊗ Σ_{a<N} |ψ_a(x1_i)><ψ_a(x1_i)|`
#[derive(Debug, Clone, Copy)]
pub struct Projector<'a> {
    field: &'a ElectronicField,
    rank: usize,
}

impl<'a> Projector<'a> {
    pub fn new(field: &'a ElectronicField, rank: usize) -> Result<Self> {
        if rank == 0 || rank > field.n_surfaces() {
            return Err(Error::InvalidArgument(format!(
                "projector rank {rank} outside 1..={}",
                field.n_surfaces()
            )));
        }
        Ok(Projector { field, rank })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn grid(&self) -> ProductGrid {
        ProductGrid::new(*self.field.grid1(), *self.field.grid2())
    }

    /// Coefficients `c[i * N + a]` of `x` in the orthonormal basis
    /// `e_i ⊗ ψ_a(x1_i) / sqrt(h1)`.
    pub fn coefficients(&self, x: &[f64]) -> Vec<f64> {
        let g = self.grid();
        let (n1, n2) = (g.grid1.n(), g.grid2.n());
        let (h2, s1) = (g.grid2.h(), g.grid1.h().sqrt());
        let mut c = Vec::with_capacity(n1 * self.rank);
        for i in 0..n1 {
            let row = &x[i * n2..(i + 1) * n2];
            for a in 0..self.rank {
                c.push(s1 * weighted_dot(self.field.psi(a, i), row, h2));
            }
        }
        c
    }

    /// Inverse of [`Projector::coefficients`] on the projected subspace.
    pub fn synthesize(&self, c: &[f64], y: &mut [f64]) {
        let g = self.grid();
        let n2 = g.grid2.n();
        let inv = 1.0 / g.grid1.h().sqrt();
        for (i, row) in y.chunks_mut(n2).enumerate() {
            row.fill(0.0);
            for a in 0..self.rank {
                let w = c[i * self.rank + a] * inv;
                for (r, p) in row.iter_mut().zip(self.field.psi(a, i)) {
                    *r += w * p;
                }
            }
        }
    }
}

impl SymmetricOperator for Projector<'_> {
    fn dim(&self) -> usize {
        self.grid().dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let c = self.coefficients(x);
        self.synthesize(&c, y);
    }
}

/// `P H P` acting on the full product grid.
pub struct ProjectedHamiltonian<'a> {
    pub projector: Projector<'a>,
    pub full: &'a FullHamiltonian,
}

impl SymmetricOperator for ProjectedHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.full.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut px = vec![0.0; x.len()];
        self.projector.apply(x, &mut px);
        let mut hpx = vec![0.0; x.len()];
        self.full.apply(&px, &mut hpx);
        self.projector.apply(&hpx, y);
    }
}

/// `P H P` restricted to its range, in the basis of
/// [`Projector::coefficients`]. Block tridiagonal in the nuclear index.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonian {
    rank: usize,
    /// `N x N` blocks at `(i, i)`.
    diagonal: Vec<DMatrix<f64>>,
    /// `N x N` blocks at `(i, i + 1)`; the `(i + 1, i)` block is the transpose.
    upper: Vec<DMatrix<f64>>,
}

impl EffectiveHamiltonian {
    pub fn build(field: &ElectronicField, spec: &ModelSpec, rank: usize) -> Result<Self> {
        Projector::new(field, rank)?;
        let g1 = field.grid1();
        let g2 = field.grid2();
        let n1 = g1.n();
        let h2 = g2.h();
        let hop = 0.5 / (spec.nuclear_mass * g1.h() * g1.h());
        let mut diagonal = Vec::with_capacity(n1);
        let mut scratch = vec![0.0; g2.n()];
        for i in 0..n1 {
            let slice = clamped_matrix(spec, g2, g1.point(i));
            let mut block = DMatrix::zeros(rank, rank);
            for b in 0..rank {
                slice.apply(field.psi(b, i), &mut scratch);
                for a in 0..rank {
                    block[(a, b)] = weighted_dot(field.psi(a, i), &scratch, h2);
                }
                block[(b, b)] += 2.0 * hop;
            }
            diagonal.push((&block + block.transpose()) * 0.5);
        }
        let upper = (0..n1 - 1)
            .map(|i| DMatrix::from_fn(rank, rank, |a, b| -hop * field.overlap(a, i, b, i + 1)))
            .collect();
        Ok(EffectiveHamiltonian {
            rank,
            diagonal,
            upper,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

impl SymmetricOperator for EffectiveHamiltonian {
    fn dim(&self) -> usize {
        self.diagonal.len() * self.rank
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let r = self.rank;
        let n1 = self.diagonal.len();
        for i in 0..n1 {
            let out = &mut y[i * r..(i + 1) * r];
            for a in 0..r {
                let mut acc = 0.0;
                for b in 0..r {
                    acc += self.diagonal[i][(a, b)] * x[i * r + b];
                    if i + 1 < n1 {
                        acc += self.upper[i][(a, b)] * x[(i + 1) * r + b];
                    }
                    if i > 0 {
                        acc += self.upper[i - 1][(b, a)] * x[(i - 1) * r + b];
                    }
                }
                out[a] = acc;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSolution {
    pub rank: usize,
    pub energies: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Amplitudes on the product grid, normalized there.
    #[serde(skip)]
    pub states: Vec<Vec<f64>>,
}

/// Lowest `k` eigenpairs of `P_N H P_N` on the range of `P_N`.
pub fn solve_effective(
    field: &ElectronicField,
    spec: &ModelSpec,
    rank: usize,
    k: usize,
    opts: &SolverOptions,
) -> Result<EffectiveSolution> {
    let projector = Projector::new(field, rank)?;
    let heff = EffectiveHamiltonian::build(field, spec, rank)?;
    let pairs = lowest_eigenpairs(&heff, k, opts)
        .map_err(|e| e.with_context(format!("effective Hamiltonian, N = {rank}")))?;
    let dim = projector.grid().dim();
    let states = pairs
        .vectors
        .iter()
        .map(|c| {
            let mut y = vec![0.0; dim];
            projector.synthesize(c, &mut y);
            y
        })
        .collect();
    Ok(EffectiveSolution {
        rank,
        energies: pairs.values,
        residuals: pairs.residuals,
        states,
    })
}
