//! Nuclear motion on a single potential energy surface and the adiabatic
//! product states `Ψ(x1, x2) = θ(x1) ψ_a(x1; x2)` built from it.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::clamped::ElectronicField;
use crate::eigen::{lowest_eigenpairs, SolverOptions};
use crate::error::{Error, Result};
use crate::grid::{second_derivative_matrix, weighted_dot, GridFunction, ProductGrid};
use crate::model::ModelSpec;

/// Nuclear grids up to this size are diagonalized densely.
pub const DENSE_NUCLEAR_LIMIT: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct NuclearLevel {
    pub energy: f64,
    /// Normalized on grid1; largest-magnitude entry positive.
    pub theta: GridFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NuclearSolution {
    pub surface: usize,
    pub levels: Vec<NuclearLevel>,
    /// Whether the diagonal adiabatic correction was added to the surface.
    pub born_huang: bool,
}

/// `(1/2M) ‖∂ψ_a/∂x1‖²` at every nuclear grid point, using central
/// differences inside the grid and one-sided ones at its two ends.
pub fn born_huang_correction(field: &ElectronicField, a: usize, nuclear_mass: f64) -> Vec<f64> {
    let g1 = field.grid1();
    let n1 = g1.n();
    let h2 = field.grid2().h();
    (0..n1)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n1 - 1));
            let step = (hi - lo) as f64 * g1.h();
            let d: Vec<f64> = field
                .psi(a, hi)
                .iter()
                .zip(field.psi(a, lo))
                .map(|(p, q)| (p - q) / step)
                .collect();
            weighted_dot(&d, &d, h2) / (2.0 * nuclear_mass)
        })
        .collect()
}

/// Lowest `n_levels` eigenpairs of `-1/(2M) d²/dx1² + λ_a(x1)`.
pub fn solve_nuclear(
    field: &ElectronicField,
    spec: &ModelSpec,
    a: usize,
    n_levels: usize,
    born_huang: bool,
    opts: &SolverOptions,
) -> Result<NuclearSolution> {
    let g1 = *field.grid1();
    if a >= field.n_surfaces() {
        return Err(Error::InvalidArgument(format!(
            "surface {a} requested, field has {}",
            field.n_surfaces()
        )));
    }
    if n_levels == 0 || n_levels > g1.n() {
        return Err(Error::InvalidArgument(format!(
            "{n_levels} nuclear levels requested on a {}-point grid",
            g1.n()
        )));
    }
    let mut surface = field.surface(a).to_vec();
    if born_huang {
        for (s, c) in surface
            .iter_mut()
            .zip(born_huang_correction(field, a, spec.nuclear_mass))
        {
            *s += c;
        }
    }
    let matrix = second_derivative_matrix(&g1)
        .scaled(-0.5 / spec.nuclear_mass)
        .with_diagonal(&surface);
    let opts = SolverOptions {
        rel_tol: 0.0,
        abs_tol: 1e-10,
        dense_threshold: DENSE_NUCLEAR_LIMIT,
        ..*opts
    };
    let pairs = lowest_eigenpairs(&matrix, n_levels, &opts)
        .map_err(|e| e.with_context(format!("nuclear equation on surface {a}")))?;
    let scale = 1.0 / g1.h().sqrt();
    let levels = pairs
        .values
        .into_iter()
        .zip(pairs.vectors)
        .map(|(energy, v)| NuclearLevel {
            energy,
            theta: GridFunction {
                grid: g1,
                values: v.into_iter().map(|x| x * scale).collect(),
            },
        })
        .collect();
    Ok(NuclearSolution {
        surface: a,
        levels,
        born_huang,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    pub grid: ProductGrid,
    /// Row-major amplitudes `Ψ(x1_i, x2_j)`, see [`ProductGrid::index`].
    pub amplitudes: Vec<f64>,
    /// `(surface, nuclear level)`
    pub label: (usize, usize),
}

impl ProductState {
    pub fn norm(&self) -> f64 {
        self.grid.norm(&self.amplitudes)
    }
}

/// `Ψ(x1_i, x2_j) = θ(x1_i) ψ_a(x1_i; x2_j)`, renormalized.
pub fn assemble_product_state(
    sol: &NuclearSolution,
    field: &ElectronicField,
    n: usize,
) -> Result<ProductState> {
    let level = sol.levels.get(n).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "level {n} requested, solution has {}",
            sol.levels.len()
        ))
    })?;
    if level.theta.grid != *field.grid1() {
        return Err(Error::GridMismatch(
            "nuclear solution and electronic field use different nuclear grids".into(),
        ));
    }
    if sol.surface >= field.n_surfaces() {
        return Err(Error::InvalidArgument(format!(
            "surface {} not present in the field",
            sol.surface
        )));
    }
    let grid = ProductGrid::new(*field.grid1(), *field.grid2());
    let mut amplitudes = Vec::with_capacity(grid.dim());
    for (i, &t) in level.theta.values.iter().enumerate() {
        amplitudes.extend(field.psi(sol.surface, i).iter().map(|p| t * p));
    }
    let nrm = grid.norm(&amplitudes);
    amplitudes.iter_mut().for_each(|x| *x /= nrm);
    Ok(ProductState {
        grid,
        amplitudes,
        label: (sol.surface, n),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticResidual {
    pub surface: usize,
    /// Nuclear positions of the interior slices `1..n1-1`.
    pub x1: Vec<f64>,
    /// `‖(ψ_a(x1_{i+1}) - ψ_a(x1_{i-1})) / (2 h1)‖` on grid2.
    pub norms: Vec<f64>,
    pub max: f64,
    pub mean: f64,
}

pub fn adiabatic_residual(field: &ElectronicField, a: usize) -> Result<AdiabaticResidual> {
    let g1 = field.grid1();
    let n1 = g1.n();
    if n1 < 3 {
        return Err(Error::InvalidArgument("need at least three slices".into()));
    }
    if a >= field.n_surfaces() {
        return Err(Error::InvalidArgument(format!("surface {a} not present in the field")));
    }
    let h2 = field.grid2().h();
    let two_h = 2.0 * g1.h();
    let mut x1 = Vec::with_capacity(n1 - 2);
    let mut norms = Vec::with_capacity(n1 - 2);
    for i in 1..n1 - 1 {
        let d: Vec<f64> = field
            .psi(a, i + 1)
            .iter()
            .zip(field.psi(a, i - 1))
            .map(|(p, q)| (p - q) / two_h)
            .collect();
        x1.push(g1.point(i));
        norms.push(weighted_dot(&d, &d, h2).sqrt());
    }
    let max = norms.iter().copied().fold(0.0, f64::max);
    let mean = norms.iter().sum::<f64>() / norms.len() as f64;
    Ok(AdiabaticResidual {
        surface: a,
        x1,
        norms,
        max,
        mean,
    })
}

/// Matrix elements `<θ_b ψ_b | T1 | θ_a ψ_a>` split into the three terms of
/// the product rule for `∂²/∂x1² (θ ψ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct T1Coupling {
    /// `(surface, level)` of each row and column.
    pub labels: Vec<(usize, usize)>,
    pub total: DMatrix<f64>,
    /// From `θ'' ψ`.
    pub nuclear_curvature: DMatrix<f64>,
    /// From `2 θ' ψ'`.
    pub cross: DMatrix<f64>,
    /// From `θ ψ''`.
    pub electronic_curvature: DMatrix<f64>,
}

impl T1Coupling {
    /// Largest `|entry|` between states on different surfaces.
    pub fn max_inter_surface(&self) -> f64 {
        let k = self.labels.len();
        let mut worst = 0.0f64;
        for r in 0..k {
            for c in 0..k {
                if self.labels[r].0 != self.labels[c].0 {
                    worst = worst.max(self.total[(r, c)].abs());
                }
            }
        }
        worst
    }

    /// Largest `|T - Tᵀ|` entry.
    pub fn asymmetry(&self) -> f64 {
        (&self.total - self.total.transpose()).amax()
    }
}

/// Builds the three product-rule pieces for one state on the product grid.
///
/// The first difference is taken one-sided on both sides and averaged,
/// `2θ'ψ' ≈ [Δ₊θ Δ₊ψ + Δ₋θ Δ₋ψ] / h²`, so that the three pieces add up
/// exactly to the three-point second difference of the product. With
/// Dirichlet ends `θ` vanishes outside the grid, where `ψ` is continued by
/// its end slice (any continuation gives the same sum).
fn product_rule_terms(
    field: &ElectronicField,
    a: usize,
    theta: &[f64],
) -> [Vec<f64>; 3] {
    let n1 = field.grid1().n();
    let n2 = field.grid2().n();
    let inv_h2 = 1.0 / (field.grid1().h() * field.grid1().h());
    let th = |i: isize| -> f64 {
        if i < 0 || i as usize >= n1 {
            0.0
        } else {
            theta[i as usize]
        }
    };
    let ps = |i: isize| -> &[f64] { field.psi(a, i.clamp(0, n1 as isize - 1) as usize) };
    let mut curv = vec![0.0; n1 * n2];
    let mut cross = vec![0.0; n1 * n2];
    let mut elec = vec![0.0; n1 * n2];
    for i in 0..n1 as isize {
        let (tm, t0, tp) = (th(i - 1), th(i), th(i + 1));
        let (pm, p0, pp) = (ps(i - 1), ps(i), ps(i + 1));
        let theta_dd = (tp - 2.0 * t0 + tm) * inv_h2;
        let base = i as usize * n2;
        for j in 0..n2 {
            curv[base + j] = theta_dd * p0[j];
            cross[base + j] = ((tp - t0) * (pp[j] - p0[j]) + (tm - t0) * (pm[j] - p0[j])) * inv_h2;
            elec[base + j] = t0 * (pp[j] - 2.0 * p0[j] + pm[j]) * inv_h2;
        }
    }
    [curv, cross, elec]
}

/// `<θ_b ψ_b | -1/(2M) ∂²/∂x1² | θ_a ψ_a>` for every pair in `selection`.
pub fn t1_coupling_matrix(
    field: &ElectronicField,
    nuclear: &[NuclearSolution],
    selection: &[(usize, usize)],
    spec: &ModelSpec,
) -> Result<T1Coupling> {
    let grid = ProductGrid::new(*field.grid1(), *field.grid2());
    let mut products = Vec::with_capacity(selection.len());
    let mut pieces = Vec::with_capacity(selection.len());
    for &(a, n) in selection {
        let sol = nuclear.iter().find(|s| s.surface == a).ok_or_else(|| {
            Error::InvalidArgument(format!("no nuclear solution for surface {a}"))
        })?;
        let state = assemble_product_state(sol, field, n)?;
        pieces.push(product_rule_terms(field, a, &sol.levels[n].theta.values));
        products.push(state.amplitudes);
    }
    let k = selection.len();
    let factor = -0.5 / spec.nuclear_mass;
    let mut mats = [DMatrix::zeros(k, k), DMatrix::zeros(k, k), DMatrix::zeros(k, k)];
    for (col, terms) in pieces.iter().enumerate() {
        for (row, bra) in products.iter().enumerate() {
            for (m, term) in mats.iter_mut().zip(terms) {
                m[(row, col)] = factor * grid.dot(bra, term);
            }
        }
    }
    let [nuclear_curvature, cross, electronic_curvature] = mats;
    let total = &nuclear_curvature + &cross + &electronic_curvature;
    Ok(T1Coupling {
        labels: selection.to_vec(),
        total,
        nuclear_curvature,
        cross,
        electronic_curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clamped::scan_pes;
    use crate::eigen::SymmetricOperator;
    use crate::exact::assemble_full_hamiltonian;
    use crate::grid::Grid1D;
    use crate::model::Potential;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    /// Grids with equal spacing and aligned points, so slice states on the
    /// harmonic model are exact translates of one another.
    fn aligned_grids() -> (Grid1D, Grid1D) {
        (
            Grid1D::new(-2.0, 2.0, 79).unwrap(),
            Grid1D::new(-9.0, 9.0, 359).unwrap(),
        )
    }

    #[test]
    fn harmonic_nuclear_ladder() {
        let spec =
            ModelSpec::new(200.0, 1.0, Potential::HarmonicCoupling { k1: 1.0, k2: 1.0 }).unwrap();
        let g1 = Grid1D::new(-1.5, 1.5, 149).unwrap();
        let g2 = Grid1D::new(-8.0, 8.0, 319).unwrap();
        let field = scan_pes(&spec, &g1, &g2, 1, &opts()).unwrap();
        let sol = solve_nuclear(&field, &spec, 0, 3, false, &opts()).unwrap();
        // λ0 = ½x² + const, so the levels are const + (n + ½) sqrt(k1 / M)
        // less the stencil shift h² k1 (2n² + 2n + 1) / 32
        let w = (1.0f64 / 200.0).sqrt();
        let h = g1.h();
        for (n, lv) in sol.levels.iter().enumerate() {
            let q = n as f64;
            let closed = field.lambda(0, 74) + (q + 0.5) * w
                - h * h * (2.0 * q * q + 2.0 * q + 1.0) / 32.0;
            assert_abs_diff_eq!(lv.energy, closed, epsilon = 1e-6);
            assert!(lv.theta.is_normalized(1e-12));
        }
        assert!(sol.levels.windows(2).all(|w| w[0].energy < w[1].energy));
    }

    #[test]
    fn particle_in_a_box_on_flat_surface() {
        let g1 = Grid1D::new(0.0, 2.0, 199).unwrap();
        let g2 = Grid1D::new(-1.0, 1.0, 10).unwrap();
        let c = -0.3;
        let field = ElectronicField::from_parts(
            g1,
            g2,
            vec![vec![c; 199]],
            vec![vec![vec![0.0; 10]; 199]],
        )
        .unwrap();
        let big = 5.0;
        let spec = ModelSpec::new(big, 1.0, Potential::Separable { k1: 0.0, k2: 0.0 }).unwrap();
        let sol = solve_nuclear(&field, &spec, 0, 3, false, &opts()).unwrap();
        for (k, lv) in sol.levels.iter().enumerate() {
            let n = (k + 1) as f64;
            let h = g1.h();
            let e = c + (1.0 - (n * PI * h / 2.0).cos()) / (big * h * h);
            assert_abs_diff_eq!(lv.energy, e, epsilon = 1e-12);
            let continuum = c + (n * PI / 2.0).powi(2) / (2.0 * big);
            assert!((lv.energy - continuum).abs() <= 1e-3 * continuum.abs());
        }
    }

    #[test]
    fn theta_sign_convention() {
        let spec =
            ModelSpec::new(50.0, 1.0, Potential::SoftCoulomb { z: 1.0, s: 1.0, k1: 1.0 }).unwrap();
        let g1 = Grid1D::new(-1.5, 1.5, 40).unwrap();
        let g2 = Grid1D::new(-8.0, 8.0, 90).unwrap();
        let field = scan_pes(&spec, &g1, &g2, 2, &opts()).unwrap();
        let sol = solve_nuclear(&field, &spec, 0, 3, false, &opts()).unwrap();
        for lv in &sol.levels {
            let big = lv.theta.values.iter().fold(0.0f64, |m, v| if v.abs() > m.abs() { *v } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn separable_product_is_tensor_product() {
        let g1 = Grid1D::new(-3.0, 3.0, 30).unwrap();
        let g2 = Grid1D::new(-5.0, 5.0, 40).unwrap();
        let spec = ModelSpec::new(10.0, 1.0, Potential::Separable { k1: 1.0, k2: 2.0 }).unwrap();
        let field = scan_pes(&spec, &g1, &g2, 2, &opts()).unwrap();
        let sol = solve_nuclear(&field, &spec, 1, 2, false, &opts()).unwrap();
        let st = assemble_product_state(&sol, &field, 1).unwrap();
        assert_abs_diff_eq!(st.norm(), 1.0, epsilon = 1e-12);
        let theta = &sol.levels[1].theta.values;
        let psi = field.psi(1, 0);
        for i in 0..30 {
            for j in 0..40 {
                let t = theta[i] * psi[j];
                assert!((st.amplitudes[st.grid.index(i, j)] - t).abs() <= 1e-10);
            }
        }
        assert_eq!(st.label, (1, 1));
    }

    #[test]
    fn assembly_errors() {
        let g1 = Grid1D::new(-3.0, 3.0, 30).unwrap();
        let g2 = Grid1D::new(-5.0, 5.0, 40).unwrap();
        let spec = ModelSpec::new(10.0, 1.0, Potential::Separable { k1: 1.0, k2: 2.0 }).unwrap();
        let field = scan_pes(&spec, &g1, &g2, 2, &opts()).unwrap();
        let sol = solve_nuclear(&field, &spec, 0, 2, false, &opts()).unwrap();
        assert!(assemble_product_state(&sol, &field, 2).is_err());
        let other = scan_pes(&spec, &Grid1D::new(-3.0, 3.0, 31).unwrap(), &g2, 2, &opts()).unwrap();
        assert!(matches!(
            assemble_product_state(&sol, &other, 0),
            Err(Error::GridMismatch(_))
        ));
        assert!(solve_nuclear(&field, &spec, 2, 1, false, &opts()).is_err());
        assert!(solve_nuclear(&field, &spec, 0, 31, false, &opts()).is_err());
    }

    #[test]
    fn harmonic_adiabatic_residual_is_gaussian_derivative_norm() {
        let spec =
            ModelSpec::new(2000.0, 1.0, Potential::HarmonicCoupling { k1: 1.0, k2: 1.0 }).unwrap();
        let (g1, g2) = aligned_grids();
        let field = scan_pes(&spec, &g1, &g2, 1, &opts()).unwrap();
        let res = adiabatic_residual(&field, 0).unwrap();
        // ‖∂ψ0/∂x1‖ = sqrt(m ω2 / 2) with ω2 = sqrt(k2/m) = 1
        let expected = 0.5f64.sqrt();
        assert!((res.max - expected).abs() <= 1e-3, "{}", res.max);
        let spread = res.norms.iter().fold(0.0f64, |m, r| m.max((r - res.norms[0]).abs()));
        assert!(spread <= 1e-6, "{spread}");
        assert_eq!(res.norms.len(), g1.n() - 2);
    }

    #[test]
    fn separable_residual_and_couplings_vanish() {
        let g1 = Grid1D::new(-3.0, 3.0, 40).unwrap();
        let g2 = Grid1D::new(-5.0, 5.0, 50).unwrap();
        let spec = ModelSpec::new(30.0, 1.0, Potential::Separable { k1: 1.0, k2: 1.0 }).unwrap();
        let field = scan_pes(&spec, &g1, &g2, 3, &opts()).unwrap();
        for a in 0..3 {
            assert!(adiabatic_residual(&field, a).unwrap().max <= 1e-10);
        }
        let nuclear: Vec<_> = (0..3)
            .map(|a| solve_nuclear(&field, &spec, a, 1, false, &opts()).unwrap())
            .collect();
        let sel = [(0, 0), (1, 0), (2, 0)];
        let t1 = t1_coupling_matrix(&field, &nuclear, &sel, &spec).unwrap();
        assert!(t1.max_inter_surface() <= 1e-10);
        // diagonal is the bare nuclear kinetic expectation
        let d1 = second_derivative_matrix(&g1).scaled(-0.5 / 30.0);
        for (r, sol) in nuclear.iter().enumerate() {
            let th = &sol.levels[0].theta.values;
            let mut out = vec![0.0; th.len()];
            d1.apply(th, &mut out);
            let bare = weighted_dot(th, &out, g1.h());
            assert!((t1.total[(r, r)] - bare).abs() <= 1e-10);
        }
    }

    #[test]
    fn coupling_matches_full_kinetic_operator() {
        let spec =
            ModelSpec::new(20.0, 1.0, Potential::SoftCoulomb { z: 1.0, s: 1.0, k1: 1.0 }).unwrap();
        let g1 = Grid1D::new(-2.0, 2.0, 30).unwrap();
        let g2 = Grid1D::new(-8.0, 8.0, 60).unwrap();
        let field = scan_pes(&spec, &g1, &g2, 2, &opts()).unwrap();
        let nuclear: Vec<_> = (0..2)
            .map(|a| solve_nuclear(&field, &spec, a, 2, false, &opts()).unwrap())
            .collect();
        let sel = [(0, 0), (0, 1), (1, 0), (1, 1)];
        let t1 = t1_coupling_matrix(&field, &nuclear, &sel, &spec).unwrap();
        assert!(t1.asymmetry() <= 1e-8 * t1.total.amax());
        let h = assemble_full_hamiltonian(&spec, &g1, &g2).unwrap();
        let states: Vec<_> = sel
            .iter()
            .map(|&(a, n)| assemble_product_state(&nuclear[a], &field, n).unwrap())
            .collect();
        for (c, sc) in states.iter().enumerate() {
            let mut t = vec![0.0; h.dim()];
            h.apply_nuclear_kinetic(&sc.amplitudes, &mut t);
            for (r, sr) in states.iter().enumerate() {
                let direct = h.grid().dot(&sr.amplitudes, &t);
                assert_abs_diff_eq!(t1.total[(r, c)], direct, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn born_huang_toggle_raises_levels() {
        let spec =
            ModelSpec::new(100.0, 1.0, Potential::HarmonicCoupling { k1: 1.0, k2: 1.0 }).unwrap();
        let (g1, g2) = aligned_grids();
        let field = scan_pes(&spec, &g1, &g2, 1, &opts()).unwrap();
        let plain = solve_nuclear(&field, &spec, 0, 1, false, &opts()).unwrap();
        let corrected = solve_nuclear(&field, &spec, 0, 1, true, &opts()).unwrap();
        // the correction is m ω2 / (4 M) for the harmonic model
        let shift = corrected.levels[0].energy - plain.levels[0].energy;
        assert_abs_diff_eq!(shift, 0.25 / 100.0, epsilon = 1e-5);
        assert!(corrected.born_huang);
    }
}
