//! The deformation of the identity adapted to `γ`.
//!
//! `Ψ_t = Φ^{0,t}` is the flow of `X(t, ζ) = c(t, ζ) γ′(t)`. Two choices of
//! `c` are available:
//!
//! * [`FieldVariant::Cutoff`]: `c = η(ζ) ζ/γ(t)`, with `η` vanishing on `A′`
//!   and equal to 1 at distance `≥ ε` from it.
//! * [`FieldVariant::FiniteB`]: for finite `B′`,
//!   `c = Σ_{β₁} η_{β₁}/(η_{β₁} + |ζ − γ(t)/β₁|) · 1/β₁` with
//!   `η_{β₁} = dist(ζ, {0} ∪ A′ ∪ {γ(t)/β₂ : β₂ ≠ β₁})`.
//!
//! Both fix `0` and every `α ∈ A′` and carry `γ(0)/β` to `γ(t)/β`.

mod flow;
pub mod integrator;

pub(crate) use flow::close_pairs;
pub use flow::{flow_contour, is_simple_polygon, ContourSnapshot, FlowMap, FlowedContour};
pub use integrator::{IntegratorSettings, StepStats};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, Path, ProofConstants, SingularSet};

/// Shape of `χ_ε` as a function of `x = min(d/ε, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CutoffProfile {
    /// `χ = x`, Lipschitz with constant `1/ε`.
    Linear,
    /// `χ = x²(3 − 2x)`, C¹ and Lipschitz with constant `3/(2ε)`.
    ///
    /// Near an obstacle the linear profile gives `ζ′ ≈ (ζ − α)·const`,
    /// which squeezes the contour exponentially fast against `α`; the
    /// quadratic vanishing here only squeezes it algebraically.
    #[default]
    Smoothstep,
}

/// `η(ζ) = χ_ε(dist(ζ, obstacles))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffFunction {
    pub epsilon: f64,
    pub obstacles: Vec<Complex64>,
    pub profile: CutoffProfile,
}

impl CutoffFunction {
    pub fn new(epsilon: f64, obstacles: Vec<Complex64>, profile: CutoffProfile) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("ε = {epsilon} must be positive")));
        }
        Ok(CutoffFunction {
            epsilon,
            obstacles,
            profile,
        })
    }

    pub fn distance(&self, z: Complex64) -> f64 {
        self.obstacles
            .iter()
            .map(|a| (z - a).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        let x = (self.distance(z) / self.epsilon).min(1.0);
        match self.profile {
            CutoffProfile::Linear => x,
            CutoffProfile::Smoothstep => x * x * (3.0 - 2.0 * x),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self.profile {
            CutoffProfile::Linear => 1.0 / self.epsilon,
            CutoffProfile::Smoothstep => 1.5 / self.epsilon,
        }
    }
}

/// `χ_ε(dist(ζ, obstacles))`.
pub fn eta_eval(cutoff: &CutoffFunction, z: Complex64) -> f64 {
    cutoff.eval(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FieldVariant {
    #[default]
    Cutoff,
    FiniteB,
}

impl std::str::FromStr for FieldVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cutoff" => Ok(FieldVariant::Cutoff),
            "finiteb" | "finite_b" | "finite-b" => Ok(FieldVariant::FiniteB),
            other => Err(Error::Parse(format!(
                "unknown field variant `{other}` (expected cutoff or finiteb)"
            ))),
        }
    }
}

/// The non-autonomous field `X(t, ζ)`.
#[derive(Debug, Clone)]
pub struct DeformationField {
    variant: FieldVariant,
    path: Path,
    constants: ProofConstants,
    cutoff: CutoffFunction,
    a_prime: Vec<Complex64>,
    b_prime: Vec<Complex64>,
    reach: f64,
}

impl DeformationField {
    /// Build the field for `γ`, `A`, `B`, covering trajectories that start
    /// in the closed disc of radius `ρ`.
    pub fn new(
        variant: FieldVariant,
        path: &Path,
        a_set: &SingularSet,
        b_set: &SingularSet,
        profile: CutoffProfile,
    ) -> Result<Self> {
        let constants = geometry::select_constants(path, a_set, b_set)?;
        Self::with_start_radius(variant, path, a_set, b_set, profile, constants.rho, constants)
    }

    /// As [`DeformationField::new`] for trajectories starting in `|ζ| ≤ r0`.
    pub fn with_start_radius(
        variant: FieldVariant,
        path: &Path,
        a_set: &SingularSet,
        b_set: &SingularSet,
        profile: CutoffProfile,
        r0: f64,
        constants: ProofConstants,
    ) -> Result<Self> {
        let r0 = r0.max(constants.rho);
        let b_prime = match variant {
            FieldVariant::FiniteB => b_set
                .finite_points()
                .ok_or(Error::FiniteBRequired)?
                .into_iter()
                .filter(|b| b.norm() > 0.0)
                .collect::<Vec<_>>(),
            FieldVariant::Cutoff => Vec::new(),
        };
        // Trajectories of the cutoff field obey |Ψ_t(ζ)| ≤ |ζ| exp(∫|γ′|/|γ|);
        // the finite-B field is bounded by |γ′| Σ 1/|β|.
        let reach = match variant {
            FieldVariant::Cutoff => r0 * constants.log_length.exp() * 1.05,
            FieldVariant::FiniteB => {
                let speed: f64 = b_prime.iter().map(|b| 1.0 / b.norm()).sum();
                r0 + path.max_speed() * speed * 1.05
            }
        };
        let obstacle_radius = match variant {
            FieldVariant::Cutoff => reach + constants.epsilon,
            // η_{β₁} ≤ |ζ|, so obstacles beyond 2|ζ| never attain the distance.
            FieldVariant::FiniteB => 2.0 * reach + constants.epsilon,
        };
        let a_prime = a_set.enumerate_nonzero(obstacle_radius);
        let cutoff = CutoffFunction::new(constants.epsilon, a_prime.clone(), profile)?;
        Ok(DeformationField {
            variant,
            path: path.clone(),
            constants,
            cutoff,
            a_prime,
            b_prime,
            reach,
        })
    }

    pub fn variant(&self) -> FieldVariant {
        self.variant
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn constants(&self) -> &ProofConstants {
        &self.constants
    }

    pub fn cutoff(&self) -> &CutoffFunction {
        &self.cutoff
    }

    /// The obstacles `A′` within the working disc.
    pub fn a_prime(&self) -> &[Complex64] {
        &self.a_prime
    }

    pub fn b_prime(&self) -> &[Complex64] {
        &self.b_prime
    }

    /// Bound on `|Ψ_t(ζ)|` for the starting disc the field was built for.
    pub fn reach(&self) -> f64 {
        self.reach
    }

    /// `c(t, ζ)`.
    pub fn coefficient(&self, t: f64, z: Complex64) -> Result<Complex64> {
        let g = self.path.eval(t);
        match self.variant {
            FieldVariant::Cutoff => Ok(z / g * self.cutoff.eval(z)),
            FieldVariant::FiniteB => {
                let pins: Vec<Complex64> = self.b_prime.iter().map(|b| g / b).collect();
                let base = self
                    .a_prime
                    .iter()
                    .map(|a| (z - a).norm())
                    .fold(z.norm(), f64::min);
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, b1) in self.b_prime.iter().enumerate() {
                    let eta = pins
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, p)| (z - p).norm())
                        .fold(base, f64::min);
                    let den = eta + (z - pins[i]).norm();
                    if !(den > 1e-12) {
                        return Err(Error::DegenerateField {
                            t,
                            zeta: z,
                            value: den,
                        });
                    }
                    acc += Complex64::new(eta / den, 0.0) / b1;
                }
                Ok(acc)
            }
        }
    }

    /// `X(t, ζ) = c(t, ζ) γ′(t)`.
    pub fn eval(&self, t: f64, z: Complex64) -> Result<Complex64> {
        let dg = self.path.eval_derivative(t);
        if dg.norm() == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(self.coefficient(t, z)? * dg)
    }

    /// The moving pins `γ(t)/β`.
    pub fn moving_pins(&self, t: f64, betas: &[Complex64]) -> Vec<Complex64> {
        let g = self.path.eval(t);
        betas.iter().map(|b| g / b).collect()
    }
}

/// `X(t, ζ)` for a built field.
pub fn field_eval(field: &DeformationField, t: f64, z: Complex64) -> Result<Complex64> {
    field.eval(t, z)
}
