//! Model molecules: one nuclear coordinate `x1` with mass `M`, one electronic
//! coordinate `x2` with mass `m`, and an interaction `W(x1, x2)`.
//!
//! Units have ħ = 1. The Hamiltonian is
//! `H = -1/(2M) ∂²/∂x1² - 1/(2m) ∂²/∂x2² + W(x1, x2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    /// `½ k1 x1² + ½ k2 (x2 - x1)²`: an electron bound harmonically to a
    /// harmonically trapped nucleus. Exactly solvable by normal modes.
    HarmonicCoupling { k1: f64, k2: f64 },
    /// `½ k1 x1² - z / sqrt((x2 - x1)² + s²)`: softened one-dimensional
    /// Coulomb attraction with a bound spectrum and a box-discretized
    /// continuum above it.
    SoftCoulomb {
        #[serde(default = "one")]
        z: f64,
        #[serde(default = "one")]
        s: f64,
        k1: f64,
    },
    /// `½ k1 x1² + ½ k2 x2²`: no coupling at all, so the adiabatic product is
    /// exact. `k1 = k2 = 0` gives the free two-particle box.
    Separable { k1: f64, k2: f64 },
}

fn one() -> f64 {
    1.0
}

impl Potential {
    #[inline]
    pub fn evaluate(&self, x1: f64, x2: f64) -> f64 {
        match *self {
            Potential::HarmonicCoupling { k1, k2 } => {
                let d = x2 - x1;
                0.5 * k1 * x1 * x1 + 0.5 * k2 * d * d
            }
            Potential::SoftCoulomb { z, s, k1 } => {
                let d = x2 - x1;
                0.5 * k1 * x1 * x1 - z / (d * d + s * s).sqrt()
            }
            Potential::Separable { k1, k2 } => 0.5 * k1 * x1 * x1 + 0.5 * k2 * x2 * x2,
        }
    }

    fn validate(&self) -> Result<()> {
        let finite_nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        match *self {
            Potential::HarmonicCoupling { k1, k2 } => {
                finite_nonneg("k1", k1)?;
                positive("k2", k2)
            }
            Potential::SoftCoulomb { z, s, k1 } => {
                positive("z", z)?;
                positive("s", s)?;
                finite_nonneg("k1", k1)
            }
            Potential::Separable { k1, k2 } => {
                finite_nonneg("k1", k1)?;
                finite_nonneg("k2", k2)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSpec")]
pub struct ModelSpec {
    pub nuclear_mass: f64,
    pub electron_mass: f64,
    pub potential: Potential,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModelSpec {
    nuclear_mass: f64,
    electron_mass: f64,
    potential: Potential,
}

impl TryFrom<RawModelSpec> for ModelSpec {
    type Error = Error;

    fn try_from(raw: RawModelSpec) -> Result<Self> {
        ModelSpec::new(raw.nuclear_mass, raw.electron_mass, raw.potential)
    }
}

impl ModelSpec {
    pub fn new(nuclear_mass: f64, electron_mass: f64, potential: Potential) -> Result<Self> {
        for (name, v) in [("nuclear_mass", nuclear_mass), ("electron_mass", electron_mass)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        potential.validate()?;
        Ok(ModelSpec {
            nuclear_mass,
            electron_mass,
            potential,
        })
    }

    /// Same potential and electron mass with `M = ratio * m`.
    pub fn with_mass_ratio(&self, ratio: f64) -> Result<Self> {
        ModelSpec::new(ratio * self.electron_mass, self.electron_mass, self.potential)
    }

    pub fn mass_ratio(&self) -> f64 {
        self.nuclear_mass / self.electron_mass
    }

    pub fn is_harmonic(&self) -> bool {
        matches!(self.potential, Potential::HarmonicCoupling { .. })
    }
}

pub fn evaluate_potential(spec: &ModelSpec, x1: f64, x2: f64) -> f64 {
    spec.potential.evaluate(x1, x2)
}

/// Adiabatic small parameter `(m/M)^(1/4)`.
pub fn kappa(spec: &ModelSpec) -> f64 {
    (spec.electron_mass / spec.nuclear_mass).powf(0.25)
}

/// Closed-form spectrum of the harmonic-coupling model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalModes {
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub ground_energy: f64,
}

impl NormalModes {
    /// `(n_plus + ½) Ω₊ + (n_minus + ½) Ω₋`.
    pub fn level(&self, n_plus: u32, n_minus: u32) -> f64 {
        (n_plus as f64 + 0.5) * self.omega_plus + (n_minus as f64 + 0.5) * self.omega_minus
    }

    /// The `count` lowest levels in ascending order.
    pub fn lowest_levels(&self, count: usize) -> Vec<f64> {
        let cap = count as u32 + 1;
        let mut all: Vec<f64> = (0..cap)
            .flat_map(|a| (0..cap).map(move |b| (a, b)))
            .map(|(a, b)| self.level(a, b))
            .collect();
        all.sort_by(f64::total_cmp);
        all.truncate(count);
        all
    }
}

/// Normal-mode frequencies from the mass-weighted stiffness matrix
/// `[[(k1+k2)/M, -k2/sqrt(Mm)], [-k2/sqrt(Mm), k2/m]]`.
pub fn analytic_normal_modes(spec: &ModelSpec) -> Result<NormalModes> {
    let (k1, k2) = match spec.potential {
        Potential::HarmonicCoupling { k1, k2 } => (k1, k2),
        other => {
            return Err(Error::InvalidModel(format!(
                "normal modes need the harmonic-coupling potential, got {other:?}"
            )))
        }
    };
    if k1 <= 0.0 {
        return Err(Error::InvalidModel(
            "normal modes need k1 > 0 (k1 = 0 leaves a free centre-of-mass mode)".into(),
        ));
    }
    let (big, small) = (spec.nuclear_mass, spec.electron_mass);
    let a = (k1 + k2) / big;
    let b = -k2 / (big * small).sqrt();
    let d = k2 / small;
    let half_trace = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let upper = half_trace + disc;
    // product form avoids cancellation in the soft mode
    let lower = (a * d - b * b) / upper;
    let omega_plus = upper.sqrt();
    let omega_minus = lower.sqrt();
    Ok(NormalModes {
        omega_plus,
        omega_minus,
        ground_energy: 0.5 * (omega_plus + omega_minus),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Matrix2, SymmetricEigen};

    fn harmonic(big: f64, small: f64, k1: f64, k2: f64) -> ModelSpec {
        ModelSpec::new(big, small, Potential::HarmonicCoupling { k1, k2 }).unwrap()
    }

    #[test]
    fn potential_values() {
        let h = harmonic(1.0, 1.0, 1.0, 1.0);
        assert_eq!(evaluate_potential(&h, 0.0, 0.0), 0.0);
        assert_eq!(evaluate_potential(&h, 1.0, 0.0), 1.0);
        let sc = ModelSpec::new(1.0, 1.0, Potential::SoftCoulomb { z: 1.0, s: 1.0, k1: 0.0 })
            .unwrap();
        assert_eq!(evaluate_potential(&sc, 0.7, 0.7), -1.0);
    }

    #[test]
    fn harmonic_depends_on_separation() {
        let h = harmonic(3.0, 1.0, 0.7, 1.3);
        for &x1 in &[-2.0, -0.25, 0.0, 0.5, 1.75] {
            for &d in &[-1.0, 0.0, 0.5, 2.0] {
                let lhs = evaluate_potential(&h, x1, x1 + d);
                let rhs = evaluate_potential(&h, 0.0, d) + 0.5 * 0.7 * x1 * x1;
                // x1 + d - x1 may round away from d
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-14);
            }
        }
        // exact when the separation is representable
        assert_eq!(
            evaluate_potential(&h, 0.5, 1.5),
            evaluate_potential(&h, 0.0, 1.0) + 0.5 * 0.7 * 0.25
        );
    }

    #[test]
    fn kappa_values() {
        let k = kappa(&harmonic(2000.0, 1.0, 1.0, 1.0));
        assert!((0.1494..=0.1496).contains(&k), "{k}");
        assert_eq!(kappa(&harmonic(1.0, 1.0, 1.0, 1.0)), 1.0);
        assert_abs_diff_eq!(kappa(&harmonic(16.0, 1.0, 1.0, 1.0)), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn normal_modes_equal_masses() {
        let nm = analytic_normal_modes(&harmonic(1.0, 1.0, 1.0, 1.0)).unwrap();
        let s5 = 5f64.sqrt();
        assert_abs_diff_eq!(nm.omega_plus, ((3.0 + s5) / 2.0).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(nm.omega_minus, ((3.0 - s5) / 2.0).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(nm.omega_plus, 1.6180, epsilon = 1e-4);
        assert_abs_diff_eq!(nm.omega_minus, 0.6180, epsilon = 1e-4);
        assert_abs_diff_eq!(nm.ground_energy, 1.1180, epsilon = 1e-4);
        assert_abs_diff_eq!(nm.level(1, 0), nm.ground_energy + nm.omega_plus, epsilon = 1e-14);
    }

    #[test]
    fn normal_modes_decouple() {
        let k2 = 1e-8;
        let nm = analytic_normal_modes(&harmonic(1.0, 1.0, 1.0, k2)).unwrap();
        assert_abs_diff_eq!(nm.omega_plus, 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(nm.omega_minus, k2.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn normal_modes_match_brute_force_two_by_two() {
        let (big, small) = (2000.0, 1.0);
        let nm = analytic_normal_modes(&harmonic(big, small, 1.0, 1.0)).unwrap();
        let off = -1.0 / (big * small).sqrt();
        let k = Matrix2::new(2.0 / big, off, off, 1.0 / small);
        let eig = SymmetricEigen::new(k).eigenvalues;
        let brute = 0.5 * (eig[0].sqrt() + eig[1].sqrt());
        assert_abs_diff_eq!(nm.ground_energy, brute, epsilon = 1e-10);
    }

    #[test]
    fn normal_modes_rejects_other_models() {
        let sc = ModelSpec::new(1.0, 1.0, Potential::SoftCoulomb { z: 1.0, s: 1.0, k1: 1.0 })
            .unwrap();
        assert!(analytic_normal_modes(&sc).is_err());
        assert!(analytic_normal_modes(&harmonic(1.0, 1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(ModelSpec::new(0.0, 1.0, Potential::Separable { k1: 0.0, k2: 0.0 }).is_err());
        assert!(ModelSpec::new(1.0, 1.0, Potential::HarmonicCoupling { k1: 1.0, k2: 0.0 }).is_err());
        assert!(ModelSpec::new(1.0, 1.0, Potential::SoftCoulomb { z: 1.0, s: 0.0, k1: 0.0 }).is_err());
        assert!(ModelSpec::new(1.0, 1.0, Potential::Separable { k1: -1.0, k2: 0.0 }).is_err());
    }

    #[test]
    fn json_defaults_and_validation() {
        let spec: ModelSpec = serde_json::from_str(
            r#"{"nuclear_mass": 100, "electron_mass": 1,
                "potential": {"type": "soft_coulomb", "k1": 0.5}}"#,
        )
        .unwrap();
        assert_eq!(spec.potential, Potential::SoftCoulomb { z: 1.0, s: 1.0, k1: 0.5 });
        let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<ModelSpec>(
            r#"{"nuclear_mass": -1, "electron_mass": 1,
                "potential": {"type": "separable", "k1": 0, "k2": 0}}"#
        )
        .is_err());
    }

    #[test]
    fn lowest_levels_sorted() {
        let nm = analytic_normal_modes(&harmonic(2000.0, 1.0, 1.0, 1.0)).unwrap();
        let lv = nm.lowest_levels(5);
        assert_eq!(lv.len(), 5);
        assert!(lv.windows(2).all(|w| w[0] <= w[1]));
        assert_abs_diff_eq!(lv[1] - lv[0], nm.omega_minus, epsilon = 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn kappa_scale_invariant(m in 0.01f64..10.0, r in 1.0f64..1e4, c in 0.01f64..100.0) {
                let a = kappa(&harmonic(r * m, m, 1.0, 1.0));
                let b = kappa(&harmonic(c * r * m, c * m, 1.0, 1.0));
                prop_assert!((a - b).abs() <= 1e-12 * a);
            }

            #[test]
            fn kappa_decreases_in_nuclear_mass(m in 0.1f64..10.0, big in 0.1f64..1e4, f in 1.001f64..10.0) {
                prop_assert!(kappa(&harmonic(f * big, m, 1.0, 1.0)) < kappa(&harmonic(big, m, 1.0, 1.0)));
            }
        }
    }
}
