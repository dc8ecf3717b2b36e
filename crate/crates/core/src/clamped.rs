//! The clamped electronic problem `T2 + W(X, ·)` solved slice by slice over
//! the nuclear grid.
//!
//! Each nuclear grid point `X` gets its own electronic eigenproblem. The scan
//! collects the lowest `A` eigenvalues (potential energy surfaces) and
//! eigenfunctions, then sweeps the slices in order fixing signs so that
//! consecutive eigenfunctions overlap non-negatively.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{lowest_eigenpairs, SolverOptions, SymmetricOperator};
use crate::error::{Error, Result};
use crate::grid::{second_derivative_matrix, weighted_dot, Grid1D, GridFunction, SymTridiagonal};
use crate::model::ModelSpec;

/// Slices of this size or smaller are diagonalized densely.
pub const DENSE_SLICE_LIMIT: usize = 512;

/// Consecutive-slice overlaps below this magnitude are flagged.
pub const LOW_OVERLAP: f64 = 0.5;

/// Relative gap below which two slice eigenvalues count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

impl SymmetricOperator for SymTridiagonal {
    fn dim(&self) -> usize {
        SymTridiagonal::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        SymTridiagonal::apply(self, x, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceSolution {
    pub energies: Vec<f64>,
    pub states: Vec<GridFunction>,
}

/// Matrix of `-1/(2m) d²/dx2² + W(x1, x2)` at fixed `x1`.
pub fn clamped_matrix(spec: &ModelSpec, grid2: &Grid1D, x1: f64) -> SymTridiagonal {
    let potential: Vec<f64> = grid2
        .points()
        .into_iter()
        .map(|x2| spec.potential.evaluate(x1, x2))
        .collect();
    second_derivative_matrix(grid2)
        .scaled(-0.5 / spec.electron_mass)
        .with_diagonal(&potential)
}

fn slice_options(base: &SolverOptions) -> SolverOptions {
    SolverOptions {
        rel_tol: 0.0,
        abs_tol: 1e-10,
        dense_threshold: DENSE_SLICE_LIMIT,
        ..*base
    }
}

/// Lowest `count` eigenpairs of the clamped Hamiltonian at `x1`.
pub fn solve_clamped_slice(
    spec: &ModelSpec,
    grid2: &Grid1D,
    x1: f64,
    count: usize,
    opts: &SolverOptions,
) -> Result<SliceSolution> {
    if count == 0 || count > grid2.n() {
        return Err(Error::InvalidArgument(format!(
            "asked for {count} clamped states on a {}-point grid",
            grid2.n()
        )));
    }
    let matrix = clamped_matrix(spec, grid2, x1);
    let pairs = lowest_eigenpairs(&matrix, count, &slice_options(opts))
        .map_err(|e| e.with_context(format!("clamped slice at x1 = {x1}")))?;
    let scale = 1.0 / grid2.h().sqrt();
    let states = pairs
        .vectors
        .into_iter()
        .map(|v| GridFunction {
            grid: *grid2,
            values: v.into_iter().map(|x| x * scale).collect(),
        })
        .collect();
    Ok(SliceSolution {
        energies: pairs.values,
        states,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlagKind {
    /// `|<ψ_a(x1_{i-1})|ψ_a(x1_i)>|` fell below [`LOW_OVERLAP`]: likely a
    /// surface crossing or an ordering swap between the two slices.
    LowOverlap { overlap: f64 },
    /// `λ_{a+1} - λ_a` at this slice is below the degeneracy tolerance.
    NearDegenerate { gap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceFlag {
    pub slice: usize,
    pub surface: usize,
    #[serde(flatten)]
    pub kind: FlagKind,
}

/// Potential energy surfaces and slice eigenfunctions over the nuclear grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectronicField {
    grid1: Grid1D,
    grid2: Grid1D,
    n_surfaces: usize,
    /// `lambdas[a * n1 + i]`
    lambdas: Vec<f64>,
    /// `psi[(a * n1 + i) * n2 + j]`, each slice normalized on grid2.
    psi: Vec<f64>,
    pub flags: Vec<SliceFlag>,
}

impl ElectronicField {
    /// Builds a field from explicit surfaces `lambdas[a][i]` and slice states
    /// `psi[a][i][j]`. No phase fixing is applied.
    pub fn from_parts(
        grid1: Grid1D,
        grid2: Grid1D,
        lambdas: Vec<Vec<f64>>,
        psi: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let a_count = lambdas.len();
        let (n1, n2) = (grid1.n(), grid2.n());
        let ok = a_count > 0
            && psi.len() == a_count
            && lambdas.iter().all(|l| l.len() == n1)
            && psi
                .iter()
                .all(|s| s.len() == n1 && s.iter().all(|v| v.len() == n2));
        if !ok {
            return Err(Error::GridMismatch(
                "surface or slice-state shapes do not match the grids".into(),
            ));
        }
        Ok(ElectronicField {
            grid1,
            grid2,
            n_surfaces: a_count,
            lambdas: lambdas.into_iter().flatten().collect(),
            psi: psi.into_iter().flatten().flatten().collect(),
            flags: Vec::new(),
        })
    }

    pub fn grid1(&self) -> &Grid1D {
        &self.grid1
    }

    pub fn grid2(&self) -> &Grid1D {
        &self.grid2
    }

    pub fn n_surfaces(&self) -> usize {
        self.n_surfaces
    }

    #[inline]
    pub fn lambda(&self, a: usize, i: usize) -> f64 {
        self.lambdas[a * self.grid1.n() + i]
    }

    /// Surface `a` over all nuclear grid points.
    pub fn surface(&self, a: usize) -> &[f64] {
        let n1 = self.grid1.n();
        &self.lambdas[a * n1..(a + 1) * n1]
    }

    #[inline]
    pub fn psi(&self, a: usize, i: usize) -> &[f64] {
        let n2 = self.grid2.n();
        let start = (a * self.grid1.n() + i) * n2;
        &self.psi[start..start + n2]
    }

    fn psi_mut(&mut self, a: usize, i: usize) -> &mut [f64] {
        let n2 = self.grid2.n();
        let start = (a * self.grid1.n() + i) * n2;
        &mut self.psi[start..start + n2]
    }

    pub fn psi_function(&self, a: usize, i: usize) -> GridFunction {
        GridFunction {
            grid: self.grid2,
            values: self.psi(a, i).to_vec(),
        }
    }

    /// `<ψ_a(x1_i)|ψ_b(x1_k)>` on grid2.
    pub fn overlap(&self, a: usize, i: usize, b: usize, k: usize) -> f64 {
        weighted_dot(self.psi(a, i), self.psi(b, k), self.grid2.h())
    }

    /// Largest `|<ψ_a|ψ_b> - δ_ab|` over all slices.
    pub fn max_orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.grid1.n() {
            for a in 0..self.n_surfaces {
                for b in 0..=a {
                    let target = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((self.overlap(a, i, b, i) - target).abs());
                }
            }
        }
        worst
    }

    /// Sign and subspace alignment sweep over slices in ascending order.
    ///
    /// Slice 0 takes the convention that each state's largest-magnitude entry
    /// is positive. Every later slice is aligned to its predecessor: isolated
    /// states are sign-flipped to make the overlap non-negative, and blocks of
    /// near-degenerate states are rotated by the orthogonal Procrustes
    /// solution that best matches the previous block. Running the sweep on an
    /// already aligned field changes nothing.
    pub fn fix_phases(&mut self) {
        let n1 = self.grid1.n();
        let a_count = self.n_surfaces;
        let mut flags = Vec::new();

        for a in 0..a_count {
            crate::eigen::fix_sign(self.psi_mut(a, 0));
        }
        for i in 0..n1 {
            for (lo, hi) in self.degenerate_blocks(i) {
                if hi > lo + 1 {
                    for a in lo..hi - 1 {
                        flags.push(SliceFlag {
                            slice: i,
                            surface: a,
                            kind: FlagKind::NearDegenerate {
                                gap: self.lambda(a + 1, i) - self.lambda(a, i),
                            },
                        });
                    }
                }
                if i == 0 {
                    continue;
                }
                if hi == lo + 1 {
                    let o = self.overlap(lo, i - 1, lo, i);
                    if o < 0.0 {
                        self.psi_mut(lo, i).iter_mut().for_each(|x| *x = -*x);
                    }
                } else {
                    self.align_block(i, lo, hi);
                }
                for a in lo..hi {
                    let o = self.overlap(a, i - 1, a, i);
                    if o.abs() < LOW_OVERLAP {
                        flags.push(SliceFlag {
                            slice: i,
                            surface: a,
                            kind: FlagKind::LowOverlap { overlap: o },
                        });
                    }
                }
            }
        }
        self.flags = flags;
    }

    /// Half-open ranges `[lo, hi)` of surfaces that are mutually degenerate at slice `i`.
    fn degenerate_blocks(&self, i: usize) -> Vec<(usize, usize)> {
        let mut blocks = Vec::new();
        let mut lo = 0;
        for a in 1..=self.n_surfaces {
            let split = a == self.n_surfaces || {
                let (l0, l1) = (self.lambda(a - 1, i), self.lambda(a, i));
                l1 - l0 >= DEGENERACY_TOL * l0.abs().max(l1.abs()).max(1.0)
            };
            if split {
                blocks.push((lo, a));
                lo = a;
            }
        }
        blocks
    }

    fn align_block(&mut self, i: usize, lo: usize, hi: usize) {
        let size = hi - lo;
        // s[(p, q)] = <ψ_{lo+p}(i) | ψ_{lo+q}(i-1)>
        let s = DMatrix::from_fn(size, size, |p, q| self.overlap(lo + p, i, lo + q, i - 1));
        let svd = s.svd(true, true);
        let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
            return;
        };
        let rot = u * vt;
        if (&rot - DMatrix::identity(size, size)).amax() < 1e-12 {
            return;
        }
        let n2 = self.grid2.n();
        let old: Vec<Vec<f64>> = (lo..hi).map(|a| self.psi(a, i).to_vec()).collect();
        for q in 0..size {
            let target = self.psi_mut(lo + q, i);
            for j in 0..n2 {
                target[j] = (0..size).map(|p| rot[(p, q)] * old[p][j]).sum();
            }
        }
    }
}

/// Solves every slice of `grid1` and assembles a phase-continuous field.
///
/// Slices run in parallel when called inside a rayon pool; results are
/// gathered in slice order and the phase sweep is sequential, so the output
/// does not depend on the worker count.
pub fn scan_pes(
    spec: &ModelSpec,
    grid1: &Grid1D,
    grid2: &Grid1D,
    n_surfaces: usize,
    opts: &SolverOptions,
) -> Result<ElectronicField> {
    if n_surfaces == 0 || n_surfaces > grid2.n() {
        return Err(Error::InvalidArgument(format!(
            "{n_surfaces} surfaces requested on a {}-point electronic grid",
            grid2.n()
        )));
    }
    let slices: Vec<SliceSolution> = grid1
        .points()
        .into_par_iter()
        .enumerate()
        .map(|(i, x1)| {
            solve_clamped_slice(spec, grid2, x1, n_surfaces, opts)
                .map_err(|e| e.with_context(format!("slice {i}")))
        })
        .collect::<Result<_>>()?;

    let n1 = grid1.n();
    let n2 = grid2.n();
    let mut lambdas = vec![0.0; n_surfaces * n1];
    let mut psi = vec![0.0; n_surfaces * n1 * n2];
    for (i, slice) in slices.iter().enumerate() {
        for a in 0..n_surfaces {
            lambdas[a * n1 + i] = slice.energies[a];
            let start = (a * n1 + i) * n2;
            psi[start..start + n2].copy_from_slice(&slice.states[a].values);
        }
    }
    let mut field = ElectronicField {
        grid1: *grid1,
        grid2: *grid2,
        n_surfaces,
        lambdas,
        psi,
        flags: Vec::new(),
    };
    field.fix_phases();
    Ok(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavyReport {
    pub region: [f64; 2],
    pub slices_in_region: usize,
    pub t1_scale: f64,
    /// `min |λ_{a+1}(x1) - λ_a(x1')|` over adjacent surfaces and all slice
    /// pairs inside the region.
    pub min_gap: f64,
    pub ratio: f64,
    pub threshold: f64,
    pub heavy_ok: bool,
}

/// Compares inter-surface gaps inside `[alpha, beta]` with a nuclear
/// kinetic-energy scale.
pub fn heavy_gap_report(
    field: &ElectronicField,
    region: (f64, f64),
    t1_scale: f64,
    threshold: f64,
) -> Result<HeavyReport> {
    let (alpha, beta) = region;
    let g = field.grid1();
    if alpha.partial_cmp(&beta) != Some(std::cmp::Ordering::Less) || !g.contains(alpha) || !g.contains(beta) {
        return Err(Error::InvalidArgument(format!(
            "region [{alpha}, {beta}] must be a proper interval inside [{}, {}]",
            g.x_min(),
            g.x_max()
        )));
    }
    if !(t1_scale > 0.0 && t1_scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("t1_scale must be > 0, got {t1_scale}")));
    }
    if field.n_surfaces() < 2 {
        return Err(Error::InvalidArgument("gaps need at least two surfaces".into()));
    }
    let inside: Vec<usize> = (0..g.n())
        .filter(|&i| {
            let x = g.point(i);
            x >= alpha && x <= beta
        })
        .collect();
    if inside.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "region [{alpha}, {beta}] contains no grid points"
        )));
    }
    let mut min_gap = f64::INFINITY;
    for a in 0..field.n_surfaces() - 1 {
        for &i in &inside {
            let upper = field.lambda(a + 1, i);
            for &k in &inside {
                min_gap = min_gap.min((upper - field.lambda(a, k)).abs());
            }
        }
    }
    let ratio = min_gap / t1_scale;
    Ok(HeavyReport {
        region: [alpha, beta],
        slices_in_region: inside.len(),
        t1_scale,
        min_gap,
        ratio,
        threshold,
        heavy_ok: ratio >= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Potential;
    use approx::assert_abs_diff_eq;

    fn harmonic(big: f64) -> ModelSpec {
        ModelSpec::new(big, 1.0, Potential::HarmonicCoupling { k1: 1.0, k2: 1.0 }).unwrap()
    }

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    /// Oscillator level (unit mass and frequency) seen through the
    /// three-point stencil, to second order in the spacing.
    fn stencil_level(n: usize, h: f64) -> f64 {
        let n = n as f64;
        n + 0.5 - h * h / 32.0 * (2.0 * n * n + 2.0 * n + 1.0)
    }

    #[test]
    fn harmonic_slice_ladder() {
        let g2 = Grid1D::new(-10.0, 10.0, 399).unwrap();
        let s = solve_clamped_slice(&harmonic(1.0), &g2, 0.0, 2, &opts()).unwrap();
        let h = g2.h();
        assert_abs_diff_eq!(s.energies[0], stencil_level(0, h), epsilon = 1e-5);
        assert_abs_diff_eq!(s.energies[1], stencil_level(1, h), epsilon = 1e-5);
        for st in &s.states {
            assert!(st.is_normalized(1e-12));
        }
        let shifted = solve_clamped_slice(&harmonic(1.0), &g2, 2.0, 1, &opts()).unwrap();
        assert_abs_diff_eq!(shifted.energies[0], 2.0 + stencil_level(0, h), epsilon = 1e-5);
    }

    #[test]
    fn slice_count_checked() {
        let g2 = Grid1D::new(-1.0, 1.0, 10).unwrap();
        assert!(solve_clamped_slice(&harmonic(1.0), &g2, 0.0, 11, &opts()).is_err());
        let g1 = Grid1D::new(-1.0, 1.0, 10).unwrap();
        assert!(scan_pes(&harmonic(1.0), &g1, &g2, 0, &opts()).is_err());
    }

    #[test]
    fn iterative_slices_above_dense_limit() {
        let g2 = Grid1D::new(-12.0, 12.0, 767).unwrap();
        let s = solve_clamped_slice(&harmonic(1.0), &g2, 0.5, 2, &opts()).unwrap();
        let h = g2.h();
        assert_abs_diff_eq!(s.energies[0], 0.125 + stencil_level(0, h), epsilon = 1e-5);
        assert_abs_diff_eq!(s.energies[1], 0.125 + stencil_level(1, h), epsilon = 1e-5);
    }

    #[test]
    fn harmonic_surfaces_and_orthonormality() {
        let g1 = Grid1D::new(-2.0, 2.0, 39).unwrap();
        let g2 = Grid1D::new(-8.0, 8.0, 319).unwrap();
        let field = scan_pes(&harmonic(2000.0), &g1, &g2, 3, &opts()).unwrap();
        let mut worst = 0.0f64;
        for i in 0..g1.n() {
            let x = g1.point(i);
            for a in 0..3 {
                let exact = 0.5 * x * x + stencil_level(a, g2.h());
                worst = worst.max((field.lambda(a, i) - exact).abs());
            }
            // ladder spacing is the same at every slice
            let g01 = field.lambda(1, i) - field.lambda(0, i);
            let g12 = field.lambda(2, i) - field.lambda(1, i);
            assert_abs_diff_eq!(g01, field.lambda(1, 0) - field.lambda(0, 0), epsilon = 1e-6);
            assert_abs_diff_eq!(g12, field.lambda(2, 0) - field.lambda(1, 0), epsilon = 1e-6);
            for a in 0..2 {
                assert!(field.lambda(a, i) <= field.lambda(a + 1, i));
            }
        }
        assert!(worst <= 1e-4, "{worst}");
        assert!(field.max_orthonormality_error() <= 1e-8);
        for i in 1..g1.n() {
            for a in 0..3 {
                assert!(field.overlap(a, i - 1, a, i) >= 0.0);
            }
        }
        assert!(field.flags.is_empty(), "{:?}", field.flags);
    }

    #[test]
    fn phase_sweep_is_idempotent() {
        let g1 = Grid1D::new(-2.0, 2.0, 24).unwrap();
        let g2 = Grid1D::new(-7.0, 7.0, 80).unwrap();
        let spec =
            ModelSpec::new(50.0, 1.0, Potential::SoftCoulomb { z: 1.0, s: 1.0, k1: 1.0 }).unwrap();
        let field = scan_pes(&spec, &g1, &g2, 3, &opts()).unwrap();
        let mut again = field.clone();
        again.fix_phases();
        assert_eq!(field, again);
    }

    #[test]
    fn separable_slices_are_identical() {
        let g1 = Grid1D::new(-3.0, 3.0, 30).unwrap();
        let g2 = Grid1D::new(-6.0, 6.0, 70).unwrap();
        let spec = ModelSpec::new(10.0, 1.0, Potential::Separable { k1: 0.8, k2: 1.3 }).unwrap();
        let field = scan_pes(&spec, &g1, &g2, 3, &opts()).unwrap();
        for a in 0..3 {
            let base = field.lambda(a, 0) - 0.4 * g1.point(0).powi(2);
            for i in 0..g1.n() {
                let shifted = field.lambda(a, i) - 0.4 * g1.point(i).powi(2);
                assert!((shifted - base).abs() <= 1e-10);
                let diff = field
                    .psi(a, i)
                    .iter()
                    .zip(field.psi(a, 0))
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                assert!(diff <= 1e-10, "surface {a} slice {i}: {diff}");
            }
        }
    }

    #[test]
    fn enlarging_box_does_not_raise_ground_energy() {
        let spec =
            ModelSpec::new(1.0, 1.0, Potential::SoftCoulomb { z: 1.0, s: 1.0, k1: 0.0 }).unwrap();
        // same spacing, wider box
        let small = Grid1D::new(-8.0, 8.0, 159).unwrap();
        let large = Grid1D::new(-16.0, 16.0, 319).unwrap();
        let e_small = solve_clamped_slice(&spec, &small, 0.0, 1, &opts()).unwrap().energies[0];
        let e_large = solve_clamped_slice(&spec, &large, 0.0, 1, &opts()).unwrap().energies[0];
        assert!(e_large <= e_small + 1e-12, "{e_large} vs {e_small}");
    }

    #[test]
    fn degenerate_blocks_are_flagged_and_aligned() {
        // two degenerate surfaces whose slice bases rotate from one slice to the next
        let g1 = Grid1D::new(0.0, 1.0, 8).unwrap();
        let g2 = Grid1D::new(0.0, 1.0, 8).unwrap();
        let norm = 1.0 / g2.h().sqrt();
        let e = |k: usize| -> Vec<f64> {
            let mut v = vec![0.0; 8];
            v[k] = norm;
            v
        };
        let mut psi = vec![Vec::new(), Vec::new()];
        for i in 0..8 {
            let t = 0.3 * i as f64;
            let (c, s) = (t.cos(), t.sin());
            let (u, w) = (e(0), e(1));
            psi[0].push(u.iter().zip(&w).map(|(a, b)| c * a + s * b).collect());
            psi[1].push(u.iter().zip(&w).map(|(a, b)| -s * a + c * b).collect());
        }
        let lambdas = vec![vec![1.0; 8], vec![1.0; 8]];
        let mut field = ElectronicField::from_parts(g1, g2, lambdas, psi).unwrap();
        field.fix_phases();
        assert!(field
            .flags
            .iter()
            .any(|f| matches!(f.kind, FlagKind::NearDegenerate { .. })));
        for i in 1..8 {
            for a in 0..2 {
                assert_abs_diff_eq!(field.overlap(a, i - 1, a, i), 1.0, epsilon = 1e-12);
            }
        }
        let snapshot = field.clone();
        field.fix_phases();
        assert_eq!(field, snapshot);
    }

    #[test]
    fn low_overlap_swap_is_flagged() {
        let g1 = Grid1D::new(0.0, 1.0, 8).unwrap();
        let g2 = Grid1D::new(0.0, 1.0, 8).unwrap();
        let norm = 1.0 / g2.h().sqrt();
        let e = |k: usize| -> Vec<f64> {
            let mut v = vec![0.0; 8];
            v[k] = norm;
            v
        };
        // the two states trade places at slice 4
        let psi = vec![
            (0..8).map(|i| if i < 4 { e(0) } else { e(1) }).collect(),
            (0..8).map(|i| if i < 4 { e(1) } else { e(0) }).collect(),
        ];
        let lambdas = vec![vec![0.0; 8], vec![1.0; 8]];
        let mut field = ElectronicField::from_parts(g1, g2, lambdas, psi).unwrap();
        field.fix_phases();
        let low: Vec<_> = field
            .flags
            .iter()
            .filter(|f| matches!(f.kind, FlagKind::LowOverlap { .. }))
            .collect();
        assert_eq!(low.len(), 2);
        assert!(low.iter().all(|f| f.slice == 4));
    }

    fn synthetic(lower: impl Fn(f64) -> f64, upper: impl Fn(f64) -> f64) -> ElectronicField {
        let g1 = Grid1D::new(-1.0, 1.0, 9).unwrap();
        let g2 = Grid1D::new(-1.0, 1.0, 8).unwrap();
        let psi = vec![vec![vec![0.0; 8]; 9]; 2];
        let lambdas = vec![
            g1.points().into_iter().map(&lower).collect(),
            g1.points().into_iter().map(&upper).collect(),
        ];
        ElectronicField::from_parts(g1, g2, lambdas, psi).unwrap()
    }

    #[test]
    fn heavy_limits() {
        let field = synthetic(|x| x * x, |x| 2.0 - x * x);
        let rep = heavy_gap_report(&field, (-0.5, 0.5), 1e-12, 10.0).unwrap();
        assert!(rep.heavy_ok);
        assert!(rep.min_gap > 0.0);
        // surfaces touch at x1 = 0, which is a grid point
        let touching = synthetic(|x| x * x, |x| 2.0 * x * x);
        let rep = heavy_gap_report(&touching, (-0.5, 0.5), 1e-12, 10.0).unwrap();
        assert_eq!(rep.min_gap, 0.0);
        assert!(!rep.heavy_ok);
    }

    #[test]
    fn heavy_cross_slice_gap() {
        // the same-slice gap is 2 - 2x², but the cross-slice minimum pairs the
        // upper surface at one edge with the lower surface at the other
        let field = synthetic(|x| x * x, |x| 2.0 - x * x);
        let g1 = *field.grid1();
        let rep = heavy_gap_report(&field, (-0.45, 0.45), 0.1, 10.0).unwrap();
        let edge = g1.point(2).abs().max(g1.point(6).abs());
        assert_abs_diff_eq!(rep.min_gap, 2.0 - 2.0 * edge * edge, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.ratio, rep.min_gap / 0.1, epsilon = 1e-12);
        assert!(rep.heavy_ok);
        assert_eq!(rep.slices_in_region, 5);
    }

    #[test]
    fn heavy_rejects_bad_regions() {
        let field = synthetic(|x| x * x, |x| 2.0 - x * x);
        assert!(heavy_gap_report(&field, (0.5, -0.5), 0.1, 10.0).is_err());
        assert!(heavy_gap_report(&field, (-2.0, 0.5), 0.1, 10.0).is_err());
        assert!(heavy_gap_report(&field, (0.01, 0.02), 0.1, 10.0).is_err());
        assert!(heavy_gap_report(&field, (-0.5, 0.5), 0.0, 10.0).is_err());
    }
}
