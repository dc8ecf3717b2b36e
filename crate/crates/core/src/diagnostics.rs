//! Uncertainty products, mass-ratio sweeps and the consolidated adiabatic
//! versus exact comparison.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::bo::{
    adiabatic_residual, assemble_product_state, born_huang_correction, solve_nuclear,
    t1_coupling_matrix, NuclearSolution, ProductState,
};
use crate::clamped::{heavy_gap_report, scan_pes, ElectronicField, HeavyReport};
use crate::eigen::SolverOptions;
use crate::error::{Error, Result};
use crate::exact::{assemble_full_hamiltonian, solve_exact};
use crate::grid::{second_derivative_matrix, weighted_dot, Grid1D, GridFunction, ProductGrid};
use crate::model::{analytic_normal_modes, kappa, ModelSpec, Potential};
use crate::projection::solve_effective;

/// Inputs accepted by [`uncertainty_product`] must have norm 1 to this
/// tolerance.
pub const NORM_TOL: f64 = 1e-8;

/// Slack on `σ_x σ_p ≥ ½` for [`UncertaintyResult::bound_ok`].
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyResult {
    pub sigma_x: f64,
    /// From the sine-series momentum moments.
    pub sigma_p: f64,
    pub product: f64,
    pub bound_ok: bool,
    /// `σ_x σ_p` with `<p²>` from the three-point stencil instead. Reported
    /// only as a cross-check; it underestimates `<p²>` at finite spacing.
    pub stencil_product: f64,
}

impl UncertaintyResult {
    fn from_moments(var_x: f64, p2: f64, p2_stencil: f64) -> Self {
        let sigma_x = var_x.max(0.0).sqrt();
        let sigma_p = p2.max(0.0).sqrt();
        let product = sigma_x * sigma_p;
        UncertaintyResult {
            sigma_x,
            sigma_p,
            product,
            bound_ok: product >= 0.5 - BOUND_SLACK,
            stencil_product: sigma_x * p2_stencil.max(0.0).sqrt(),
        }
    }
}

/// `<p²>` of grid samples read as the sine series that interpolates them,
/// which is the exact kinetic moment of a function vanishing at both walls.
struct SineMoments {
    fft: Arc<dyn Fft<f64>>,
    grid: Grid1D,
}

impl SineMoments {
    fn new(grid: Grid1D) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (grid.n() + 1));
        SineMoments { fft, grid }
    }

    /// `h Σ_k a_k² (kπ/L)²` with `a_k` the orthonormal DST-I coefficients.
    fn p2(&self, values: &[f64]) -> f64 {
        let n = self.grid.n();
        let len = 2 * (n + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); len];
        for (j, &v) in values.iter().enumerate() {
            buf[j + 1].re = v;
            buf[len - 1 - j].re = -v;
        }
        self.fft.process(&mut buf);
        let h = self.grid.h();
        let wave = std::f64::consts::PI / ((n + 1) as f64 * h);
        let norm = 2.0 / (n + 1) as f64;
        let sum: f64 = (1..=n)
            .map(|k| {
                let s = 0.5 * buf[k].im;
                norm * s * s * (k as f64 * wave).powi(2)
            })
            .sum();
        h * sum
    }
}

fn stencil_p2(values: &[f64], grid: &Grid1D) -> f64 {
    let mut d2 = vec![0.0; values.len()];
    second_derivative_matrix(grid).apply(values, &mut d2);
    -weighted_dot(values, &d2, grid.h())
}

fn position_variance(density: &[f64], grid: &Grid1D) -> f64 {
    let h = grid.h();
    let xs = grid.points();
    let mean = h * xs.iter().zip(density).map(|(x, d)| x * d).sum::<f64>();
    h * xs
        .iter()
        .zip(density)
        .map(|(x, d)| (x - mean) * (x - mean) * d)
        .sum::<f64>()
}

fn check_norm(norm2: f64) -> Result<()> {
    if (norm2 - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidArgument(format!(
            "uncertainty needs a normalized state, squared norm is {norm2}"
        )));
    }
    Ok(())
}

/// `σ_x σ_p` for a pure real state. `<p> = 0` for real amplitudes.
pub fn uncertainty_product(f: &GridFunction) -> Result<UncertaintyResult> {
    let g = f.grid;
    let density: Vec<f64> = f.values.iter().map(|v| v * v).collect();
    check_norm(g.h() * density.iter().sum::<f64>())?;
    let p2 = SineMoments::new(g).p2(&f.values);
    Ok(UncertaintyResult::from_moments(
        position_variance(&density, &g),
        p2,
        stencil_p2(&f.values, &g),
    ))
}

/// `σ_x1 σ_p1` of the nuclear reduced density `ρ(x1, x1') = ∫ Ψ(x1, x2)
/// Ψ(x1', x2) dx2`, a mixed state in general.
pub fn nuclear_marginal_uncertainty(grid: &ProductGrid, amplitudes: &[f64]) -> Result<UncertaintyResult> {
    let (g1, g2) = (grid.grid1, grid.grid2);
    let (n1, n2) = (g1.n(), g2.n());
    if amplitudes.len() != n1 * n2 {
        return Err(Error::GridMismatch(format!(
            "{} amplitudes for a {n1} x {n2} grid",
            amplitudes.len()
        )));
    }
    let density: Vec<f64> = amplitudes
        .chunks(n2)
        .map(|row| weighted_dot(row, row, g2.h()))
        .collect();
    check_norm(g1.h() * density.iter().sum::<f64>())?;
    let sine = SineMoments::new(g1);
    let mut column = vec![0.0; n1];
    let (mut p2, mut p2s) = (0.0, 0.0);
    for j in 0..n2 {
        for (i, c) in column.iter_mut().enumerate() {
            *c = amplitudes[i * n2 + j];
        }
        p2 += sine.p2(&column);
        p2s += stencil_p2(&column, &g1);
    }
    Ok(UncertaintyResult::from_moments(
        position_variance(&density, &g1),
        g2.h() * p2,
        g2.h() * p2s,
    ))
}

pub fn product_state_uncertainty(state: &ProductState) -> Result<UncertaintyResult> {
    nuclear_marginal_uncertainty(&state.grid, &state.amplitudes)
}

/// Nuclear kinetic scale the surface gap is compared with.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub enum T1Scale {
    /// `sqrt(k1 / M)`, the harmonic nuclear level spacing. Harmonic models
    /// only.
    #[default]
    Auto,
    /// `E_{0,1} - E_{0,0}` from the solved nuclear levels.
    NuclearSpacing,
    Fixed(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum T1ScaleWire {
    Named(String),
    Fixed(f64),
}

impl Serialize for T1Scale {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            T1Scale::Auto => s.serialize_str("auto"),
            T1Scale::NuclearSpacing => s.serialize_str("nuclear_spacing"),
            T1Scale::Fixed(v) => s.serialize_f64(v),
        }
    }
}

impl<'de> Deserialize<'de> for T1Scale {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match T1ScaleWire::deserialize(d)? {
            T1ScaleWire::Named(s) if s == "auto" => Ok(T1Scale::Auto),
            T1ScaleWire::Named(s) if s == "nuclear_spacing" => Ok(T1Scale::NuclearSpacing),
            T1ScaleWire::Named(s) => Err(D::Error::custom(format!(
                "t1_scale must be \"auto\", \"nuclear_spacing\" or a number, got \"{s}\""
            ))),
            T1ScaleWire::Fixed(v) if v.is_finite() && v > 0.0 => Ok(T1Scale::Fixed(v)),
            T1ScaleWire::Fixed(v) => Err(D::Error::custom(format!("t1_scale must be > 0, got {v}"))),
        }
    }
}

fn default_threshold() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeavySettings {
    /// Nuclear interval to inspect; `None` takes `<x1> ± 2σ` of the nuclear
    /// ground state, clipped to the grid.
    #[serde(default)]
    pub region: Option<[f64; 2]>,
    #[serde(default)]
    pub t1_scale: T1Scale,
    #[serde(default = "default_threshold")]
    pub ratio_threshold: f64,
}

impl Default for HeavySettings {
    fn default() -> Self {
        HeavySettings {
            region: None,
            t1_scale: T1Scale::Auto,
            ratio_threshold: default_threshold(),
        }
    }
}

impl HeavySettings {
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.t1_scale == T1Scale::Auto && !spec.is_harmonic() {
            return Err(Error::InvalidArgument(
                "t1_scale \"auto\" is only defined for the harmonic-coupling model".into(),
            ));
        }
        if !(self.ratio_threshold.is_finite() && self.ratio_threshold > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ratio_threshold must be > 0, got {}",
                self.ratio_threshold
            )));
        }
        Ok(())
    }
}

/// Half-width of the automatic Heavy region in nuclear standard deviations.
pub const AUTO_REGION_SIGMAS: f64 = 2.0;

fn auto_region(theta: &GridFunction) -> (f64, f64) {
    let g = theta.grid;
    let density: Vec<f64> = theta.values.iter().map(|v| v * v).collect();
    let h = g.h();
    let mean = h * g.points().iter().zip(&density).map(|(x, d)| x * d).sum::<f64>();
    let sigma = position_variance(&density, &g).sqrt();
    let lo = g.point(0);
    let hi = g.point(g.n() - 1);
    (
        (mean - AUTO_REGION_SIGMAS * sigma).clamp(lo, hi),
        (mean + AUTO_REGION_SIGMAS * sigma).clamp(lo, hi),
    )
}

fn resolve_t1_scale(scale: T1Scale, spec: &ModelSpec, ground: &NuclearSolution) -> Result<f64> {
    match scale {
        T1Scale::Auto => match spec.potential {
            Potential::HarmonicCoupling { k1, .. } if k1 > 0.0 => Ok((k1 / spec.nuclear_mass).sqrt()),
            _ => Err(Error::InvalidArgument(
                "t1_scale \"auto\" needs the harmonic-coupling model with k1 > 0".into(),
            )),
        },
        T1Scale::NuclearSpacing => match ground.levels.as_slice() {
            [a, b, ..] => Ok(b.energy - a.energy),
            _ => Err(Error::InvalidArgument(
                "t1_scale \"nuclear_spacing\" needs at least two nuclear levels".into(),
            )),
        },
        T1Scale::Fixed(v) => Ok(v),
    }
}

/// Heavy check on the ground surface pair; `None` with a single surface.
pub fn heavy_check(
    field: &ElectronicField,
    spec: &ModelSpec,
    ground: &NuclearSolution,
    settings: &HeavySettings,
) -> Result<Option<HeavyReport>> {
    if field.n_surfaces() < 2 {
        return Ok(None);
    }
    let region = match settings.region {
        Some([a, b]) => (a, b),
        None => auto_region(&ground.levels[0].theta),
    };
    let scale = resolve_t1_scale(settings.t1_scale, spec, ground)?;
    heavy_gap_report(field, region, scale, settings.ratio_threshold).map(Some)
}

/// Everything a study needs besides the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudySettings {
    pub grid1: Grid1D,
    pub grid2: Grid1D,
    pub n_surfaces: usize,
    pub projector_rank: usize,
    pub nuclear_levels: usize,
    pub exact_states: usize,
    pub heavy: HeavySettings,
    pub born_huang: bool,
    pub solver: SolverOptions,
}

impl StudySettings {
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidArgument(what));
        if self.n_surfaces == 0 || self.n_surfaces > self.grid2.n() {
            return bad(format!(
                "n_surfaces must be in 1..={}, got {}",
                self.grid2.n(),
                self.n_surfaces
            ));
        }
        if self.projector_rank == 0 || self.projector_rank > self.n_surfaces {
            return bad(format!(
                "projector_rank must be in 1..={}, got {}",
                self.n_surfaces, self.projector_rank
            ));
        }
        if self.nuclear_levels == 0 || self.nuclear_levels > self.grid1.n() {
            return bad(format!(
                "nuclear_levels must be in 1..={}, got {}",
                self.grid1.n(),
                self.nuclear_levels
            ));
        }
        if self.exact_states == 0 || self.exact_states > crate::exact::MAX_STATES {
            return bad(format!(
                "exact_states must be in 1..={}, got {}",
                crate::exact::MAX_STATES,
                self.exact_states
            ));
        }
        if self.heavy.t1_scale == T1Scale::NuclearSpacing && self.nuclear_levels < 2 {
            return bad("t1_scale \"nuclear_spacing\" needs nuclear_levels >= 2".into());
        }
        self.heavy.validate(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledUncertainty {
    /// `theta`, `nuclear_marginal` or `exact_nuclear_marginal`.
    pub kind: String,
    pub surface: usize,
    pub level: usize,
    #[serde(flatten)]
    pub result: UncertaintyResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceUncertainty {
    pub count: usize,
    pub min_product: f64,
    pub all_bound_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub surface: usize,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub mass_ratio: f64,
    pub kappa: f64,
    /// `E_{0,0}` from the nuclear equation on the ground surface.
    pub bo_energy: f64,
    pub exact_energy: f64,
    /// Closed-form ground energy, harmonic model only.
    pub analytic_energy: Option<f64>,
    /// `<Ψ_{0,0}|H|Ψ_{0,0}>` of the assembled adiabatic product.
    pub rayleigh_quotient: f64,
    /// `|rayleigh_quotient - exact_energy| / |exact_energy|`
    pub relative_error: f64,
    pub heavy: Option<HeavyReport>,
    pub uncertainty: Vec<LabeledUncertainty>,
    pub slice_uncertainty: SliceUncertainty,
    pub min_uncertainty_product: f64,
    pub residuals: Vec<ResidualSummary>,
    /// Number of low-overlap or near-degenerate slice flags.
    pub slice_flags: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoLevel {
    pub surface: usize,
    pub level: usize,
    pub energy: f64,
    pub rayleigh_quotient: f64,
    /// Largest adiabatic residual on this level's surface.
    pub residual_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeffSummary {
    pub rank: usize,
    pub energies: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Relative deviation of the lowest eigenvalue from the exact ground.
    pub ground_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    /// `(surface, level)` of each row and column of the coupling matrix.
    pub labels: Vec<(usize, usize)>,
    pub max_inter_surface: f64,
    /// Smallest `λ_{a+1} - λ_a` over all slices and adjacent surfaces.
    pub min_adjacent_gap: f64,
    pub ratio: f64,
    pub asymmetry: f64,
    /// Diagonal of the `2θ'ψ'` and `θψ''` terms: the part of `<T1>` that the
    /// nuclear equation leaves out.
    pub diagonal_correction: Vec<f64>,
    /// `<θ|(1/2M)‖∂ψ/∂x1‖²|θ>` per state for comparison.
    pub born_huang_expectation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub model: ModelSpec,
    pub grid1: Grid1D,
    pub grid2: Grid1D,
    pub n_surfaces: usize,
    pub projector_rank: usize,
    pub born_huang: bool,
    pub mass_ratios: Vec<f64>,
    pub rows: Vec<RatioRow>,
    /// Least-squares slope of `ln(relative_error)` against `ln(kappa)`.
    pub kappa_slope: Option<f64>,
    pub bo_levels: Vec<BoLevel>,
    pub heff: Option<HeffSummary>,
    pub coupling: Option<CouplingSummary>,
    pub warnings: Vec<String>,
}

impl ComparisonReport {
    pub fn min_uncertainty_product(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.min_uncertainty_product)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Pieces shared by the single-ratio report and each sweep row.
struct Pipeline {
    field: ElectronicField,
    nuclear: Vec<NuclearSolution>,
    row: RatioRow,
    full: crate::exact::FullHamiltonian,
    exact: crate::exact::ExactSolution,
    states: Vec<ProductState>,
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn run_pipeline(spec: &ModelSpec, s: &StudySettings, all_surfaces: bool) -> Result<Pipeline> {
    let opts = &s.solver;
    let field = scan_pes(spec, &s.grid1, &s.grid2, s.n_surfaces, opts)?;
    let surfaces = if all_surfaces { s.n_surfaces } else { 1 };
    let nuclear = (0..surfaces)
        .map(|a| solve_nuclear(&field, spec, a, s.nuclear_levels, s.born_huang, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut states = Vec::new();
    for sol in &nuclear {
        for n in 0..sol.levels.len() {
            states.push(assemble_product_state(sol, &field, n)?);
        }
    }
    let full = assemble_full_hamiltonian(spec, &s.grid1, &s.grid2)?;
    let exact = solve_exact(&full, s.exact_states, opts)?;
    let rq = full.rayleigh_quotient(&states[0].amplitudes);
    let exact_energy = exact.energies[0];

    let mut uncertainty = Vec::new();
    for sol in &nuclear {
        for (n, lv) in sol.levels.iter().enumerate() {
            uncertainty.push(LabeledUncertainty {
                kind: "theta".into(),
                surface: sol.surface,
                level: n,
                result: uncertainty_product(&lv.theta)?,
            });
        }
    }
    for st in &states {
        uncertainty.push(LabeledUncertainty {
            kind: "nuclear_marginal".into(),
            surface: st.label.0,
            level: st.label.1,
            result: product_state_uncertainty(st)?,
        });
    }
    for (k, v) in exact.states.iter().enumerate() {
        uncertainty.push(LabeledUncertainty {
            kind: "exact_nuclear_marginal".into(),
            surface: 0,
            level: k,
            result: nuclear_marginal_uncertainty(full.grid(), v)?,
        });
    }
    let slice_uncertainty = slice_uncertainty(&field)?;
    let min_uncertainty_product = uncertainty
        .iter()
        .map(|u| u.result.product)
        .fold(slice_uncertainty.min_product, f64::min);

    let residuals = (0..s.n_surfaces)
        .map(|a| {
            adiabatic_residual(&field, a).map(|r| ResidualSummary {
                surface: a,
                max: r.max,
                mean: r.mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let heavy = heavy_check(&field, spec, &nuclear[0], &s.heavy)?;
    let analytic_energy = analytic_normal_modes(spec).ok().map(|m| m.ground_energy);
    let row = RatioRow {
        mass_ratio: spec.mass_ratio(),
        kappa: kappa(spec),
        bo_energy: nuclear[0].levels[0].energy,
        exact_energy,
        analytic_energy,
        rayleigh_quotient: rq,
        relative_error: relative(rq, exact_energy),
        heavy,
        uncertainty,
        slice_uncertainty,
        min_uncertainty_product,
        residuals,
        slice_flags: field.flags.len(),
    };
    Ok(Pipeline {
        field,
        nuclear,
        row,
        full,
        exact,
        states,
    })
}

fn slice_uncertainty(field: &ElectronicField) -> Result<SliceUncertainty> {
    let mut count = 0;
    let mut min_product = f64::INFINITY;
    for a in 0..field.n_surfaces() {
        for i in 0..field.grid1().n() {
            let u = uncertainty_product(&field.psi_function(a, i))?;
            min_product = min_product.min(u.product);
            count += 1;
        }
    }
    Ok(SliceUncertainty {
        count,
        min_product,
        all_bound_ok: min_product >= 0.5 - BOUND_SLACK,
    })
}

fn row_warnings(row: &RatioRow, out: &mut Vec<String>) {
    let r = row.mass_ratio;
    if let Some(h) = &row.heavy {
        if !h.heavy_ok {
            out.push(format!(
                "M/m = {r}: gap / T1 ratio {:.3} below threshold {}",
                h.ratio, h.threshold
            ));
        }
    }
    if row.slice_flags > 0 {
        out.push(format!("M/m = {r}: {} slice flags raised", row.slice_flags));
    }
    if row.min_uncertainty_product < 0.5 - BOUND_SLACK {
        out.push(format!(
            "M/m = {r}: uncertainty product {} below 1/2",
            row.min_uncertainty_product
        ));
    }
    if row.rayleigh_quotient < row.exact_energy - 1e-10 * row.exact_energy.abs() {
        out.push(format!("M/m = {r}: Rayleigh quotient below the exact ground energy"));
    }
}

/// Single-ratio report with every surface, the projected Hamiltonian and the
/// `T1` couplings.
pub fn compare_report(spec: &ModelSpec, settings: &StudySettings) -> Result<ComparisonReport> {
    settings.validate(spec)?;
    let p = run_pipeline(spec, settings, true)?;
    let mut bo_levels = Vec::new();
    for sol in &p.nuclear {
        let residual_max = p.row.residuals[sol.surface].max;
        for (n, lv) in sol.levels.iter().enumerate() {
            let st = p
                .states
                .iter()
                .find(|s| s.label == (sol.surface, n))
                .expect("state assembled for every level");
            bo_levels.push(BoLevel {
                surface: sol.surface,
                level: n,
                energy: lv.energy,
                rayleigh_quotient: p.full.rayleigh_quotient(&st.amplitudes),
                residual_max,
            });
        }
    }

    let k = settings.exact_states.min(settings.grid1.n() * settings.projector_rank);
    let eff = solve_effective(&p.field, spec, settings.projector_rank, k, &settings.solver)?;
    let heff = HeffSummary {
        rank: eff.rank,
        ground_relative_error: relative(eff.energies[0], p.exact.energies[0]),
        energies: eff.energies,
        residuals: eff.residuals,
    };

    let coupling = if settings.n_surfaces >= 2 {
        let labels: Vec<(usize, usize)> = p.states.iter().map(|s| s.label).collect();
        let t1 = t1_coupling_matrix(&p.field, &p.nuclear, &labels, spec)?;
        let mut min_gap = f64::INFINITY;
        for a in 0..settings.n_surfaces - 1 {
            for i in 0..settings.grid1.n() {
                min_gap = min_gap.min(p.field.lambda(a + 1, i) - p.field.lambda(a, i));
            }
        }
        let max_inter = t1.max_inter_surface();
        let diagonal_correction = (0..labels.len())
            .map(|r| t1.cross[(r, r)] + t1.electronic_curvature[(r, r)])
            .collect();
        let born_huang_expectation = labels
            .iter()
            .map(|&(a, n)| {
                let bh = born_huang_correction(&p.field, a, spec.nuclear_mass);
                let th = &p.nuclear[a].levels[n].theta.values;
                let weighted: Vec<f64> = th.iter().zip(&bh).map(|(t, c)| t * c).collect();
                weighted_dot(th, &weighted, settings.grid1.h())
            })
            .collect();
        Some(CouplingSummary {
            labels,
            max_inter_surface: max_inter,
            min_adjacent_gap: min_gap,
            ratio: max_inter / min_gap,
            asymmetry: t1.asymmetry(),
            diagonal_correction,
            born_huang_expectation,
        })
    } else {
        None
    };

    let mut warnings = Vec::new();
    row_warnings(&p.row, &mut warnings);
    for f in &p.field.flags {
        warnings.push(format!(
            "slice {} surface {}: {:?}",
            f.slice, f.surface, f.kind
        ));
    }
    Ok(ComparisonReport {
        model: *spec,
        grid1: settings.grid1,
        grid2: settings.grid2,
        n_surfaces: settings.n_surfaces,
        projector_rank: settings.projector_rank,
        born_huang: settings.born_huang,
        mass_ratios: vec![spec.mass_ratio()],
        rows: vec![p.row],
        kappa_slope: None,
        bo_levels,
        heff: Some(heff),
        coupling,
        warnings,
    })
}

/// One [`RatioRow`] per mass ratio, with `M = ratio * m`.
pub fn kappa_scaling_study(
    spec: &ModelSpec,
    mass_ratios: &[f64],
    settings: &StudySettings,
) -> Result<ComparisonReport> {
    if mass_ratios.is_empty() {
        return Err(Error::InvalidArgument("mass_ratios is empty".into()));
    }
    if mass_ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidArgument("mass ratios must be finite and > 0".into()));
    }
    if mass_ratios.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("mass ratios must be strictly ascending".into()));
    }
    settings.validate(spec)?;
    let rows = mass_ratios
        .par_iter()
        .map(|&r| {
            let s = spec.with_mass_ratio(r)?;
            run_pipeline(&s, settings, false)
                .map(|p| p.row)
                .map_err(|e| match e {
                    Error::NoConvergence {
                        context,
                        iterations,
                        residuals,
                    } => Error::NoConvergence {
                        context: format!("M/m = {r}: {context}"),
                        iterations,
                        residuals,
                    },
                    other => other,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut warnings = Vec::new();
    for row in &rows {
        row_warnings(row, &mut warnings);
    }
    let kappa_slope = log_log_slope(
        &rows.iter().map(|r| r.kappa).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.relative_error).collect::<Vec<_>>(),
    );
    Ok(ComparisonReport {
        model: *spec,
        grid1: settings.grid1,
        grid2: settings.grid2,
        n_surfaces: settings.n_surfaces,
        projector_rank: settings.projector_rank,
        born_huang: settings.born_huang,
        mass_ratios: mass_ratios.to_vec(),
        rows,
        kappa_slope,
        bo_levels: Vec::new(),
        heff: None,
        coupling: None,
        warnings,
    })
}

/// Least-squares slope of `ln y` on `ln x`; `None` with fewer than two
/// usable points.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
