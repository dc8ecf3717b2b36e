//! Uniform Dirichlet grids, the three-point second-derivative stencil and
//! grid-weighted inner products.
//!
//! A grid with `n` interior points on `[x_min, x_max]` has spacing
//! `h = (x_max - x_min) / (n + 1)`; point `i` sits at `x_min + (i + 1) h` and
//! every function is taken to vanish at both end points.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest interior point count accepted by [`Grid1D::new`].
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    h: f64,
}

/// Wire form of a grid: bounds and interior point count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl TryFrom<GridSpec> for Grid1D {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid1D::new(spec.x_min, spec.x_max, spec.n)
    }
}

impl From<Grid1D> for GridSpec {
    fn from(g: Grid1D) -> Self {
        GridSpec {
            x_min: g.x_min,
            x_max: g.x_max,
            n: g.n,
        }
    }
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "bounds must be finite, got [{x_min}, {x_max}]"
            )));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "x_min must be below x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_POINTS} interior points, got {n}"
            )));
        }
        let h = (x_max - x_min) / (n as f64 + 1.0);
        Ok(Grid1D { x_min, x_max, n, h })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Number of interior points.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 1.0) * self.h
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: *self,
            values: (0..self.n).map(|i| f(self.point(i))).collect(),
        }
    }
}

/// Symmetric tridiagonal matrix stored as its diagonal and first off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SymTridiagonal {
            diag: self.diag.iter().map(|d| d * factor).collect(),
            off: self.off.iter().map(|o| o * factor).collect(),
        }
    }

    /// Adds `shift[i]` to the i-th diagonal entry.
    pub fn with_diagonal(mut self, shift: &[f64]) -> Self {
        assert_eq!(shift.len(), self.diag.len());
        for (d, s) in self.diag.iter_mut().zip(shift) {
            *d += s;
        }
        self
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        assert!(x.len() == n && y.len() == n);
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.off[i];
                m[(i + 1, i)] = self.off[i];
            }
        }
        m
    }
}

/// Three-point stencil for d²/dx² with Dirichlet closure: `-2/h²` on the
/// diagonal, `1/h²` beside it. Works for any `n >= 1`.
pub fn second_derivative_stencil(n: usize, h: f64) -> SymTridiagonal {
    let inv_h2 = 1.0 / (h * h);
    SymTridiagonal {
        diag: vec![-2.0 * inv_h2; n],
        off: vec![inv_h2; n.saturating_sub(1)],
    }
}

pub fn second_derivative_matrix(grid: &Grid1D) -> SymTridiagonal {
    second_derivative_stencil(grid.n(), grid.h())
}

/// Real amplitudes sampled on the interior points of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid1D,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.n()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn norm(&self) -> f64 {
        weighted_dot(&self.values, &self.values, self.grid.h()).sqrt()
    }

    pub fn normalize(&mut self) {
        let nrm = self.norm();
        if nrm > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= nrm);
        }
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }
}

/// `h * sum(f_i g_i)`, summed in index order.
#[inline]
pub fn weighted_dot(f: &[f64], g: &[f64], h: f64) -> f64 {
    debug_assert_eq!(f.len(), g.len());
    h * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
}

/// Grid-weighted inner product. Amplitudes are real, so this is also the
/// complex inner product and is symmetric in its arguments.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch(format!(
            "inner product of functions on {:?} and {:?}",
            f.grid, g.grid
        )));
    }
    Ok(weighted_dot(&f.values, &g.values, f.grid.h()))
}

/// Tensor-product grid for the (nuclear, electronic) pair. Amplitudes are
/// stored row-major: `index(i, j) = i * n2 + j` with `i` the nuclear point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductGrid {
    pub grid1: Grid1D,
    pub grid2: Grid1D,
}

impl ProductGrid {
    pub fn new(grid1: Grid1D, grid2: Grid1D) -> Self {
        ProductGrid { grid1, grid2 }
    }

    pub fn dim(&self) -> usize {
        self.grid1.n() * self.grid2.n()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.grid2.n() + j
    }

    pub fn weight(&self) -> f64 {
        self.grid1.h() * self.grid2.h()
    }

    pub fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        weighted_dot(f, g, self.weight())
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.dot(f, f).sqrt()
    }
}
