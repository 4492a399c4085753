//! Implicit midpoint-type time stepping.

mod eos;
mod residual;

pub use eos::Eos;
pub use residual::{StepProblem, Theta};

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::diagnostics::VectorPotentialSolver;
use crate::error::{Error, Result};
use crate::fem::{Family, FeFunction, FeSpace};
use crate::forms::{AuxOperators, CurlSpaces};
use crate::mesh::Mesh;
use crate::quadrature::MeshQuadrature;
use crate::sparse::{NewtonSettings, NewtonSolver};
use crate::vec3::{self, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    BarotropicViscous,
    BarotropicInviscid,
    FullEntropy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Physics {
    pub variant: Variant,
    pub mu: f64,
    pub lambda: f64,
    pub nu: f64,
    pub eos: Eos,
    /// Constant background magnetic field added to the RT0 fluctuation.
    pub background: Vec3,
    /// Gradient of the (linear) gravitational potential.
    pub potential_gradient: Vec3,
    pub upwinding: bool,
    pub upwind_smoothing: f64,
}

impl Physics {
    pub fn barotropic_inviscid(eos: Eos) -> Self {
        Physics {
            variant: Variant::BarotropicInviscid,
            mu: 0.0,
            lambda: 0.0,
            nu: 0.0,
            eos,
            background: [0.0; 3],
            potential_gradient: [0.0; 3],
            upwinding: true,
            upwind_smoothing: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu", self.mu), ("lambda", self.lambda), ("nu", self.nu)] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        if self.mu < 0.0 || self.nu < 0.0 {
            return Err(Error::Config("mu and nu must be nonnegative".into()));
        }
        if self.variant == Variant::BarotropicInviscid && (self.mu != 0.0 || self.lambda != 0.0) {
            return Err(Error::Config(format!(
                "BAROTROPIC_INVISCID requires mu = lambda = 0 (got mu = {}, lambda = {})",
                self.mu, self.lambda
            )));
        }
        if self.variant == Variant::BarotropicViscous && self.mu == 0.0 && self.lambda == 0.0 {
            return Err(Error::Config("BAROTROPIC_VISCOUS requires nonzero viscosity".into()));
        }
        if self.mu > 0.0 && 2.0 * self.mu + 3.0 * self.lambda < 0.0 {
            log::warn!(
                "viscosity coefficients violate 2 mu + 3 lambda >= 0 (mu = {}, lambda = {}); energy may grow",
                self.mu,
                self.lambda
            );
        }
        if !(self.upwind_smoothing > 0.0) {
            return Err(Error::Config("upwind_smoothing must be positive".into()));
        }
        self.eos.validate()
    }

    /// Whether the velocity lives in the continuous space (with a no-slip
    /// condition) rather than in RT0 (with a no-penetration condition).
    pub fn is_viscous(&self) -> bool {
        self.mu != 0.0 || self.lambda != 0.0
    }

    pub fn has_entropy(&self) -> bool {
        self.variant == Variant::FullEntropy
    }

    pub fn potential(&self, x: &Vec3) -> f64 {
        vec3::dot(&self.potential_gradient, x)
    }
}

/// Spaces and precomputed operators for one mesh and physics setup.
pub struct Discretization {
    pub mesh: Arc<Mesh>,
    pub quadrature: Arc<MeshQuadrature>,
    pub velocity: Arc<FeSpace>,
    pub scalar: Arc<FeSpace>,
    pub aux: AuxOperators,
    potential: OnceLock<Result<VectorPotentialSolver, String>>,
}

impl Discretization {
    pub fn new(mesh: Arc<Mesh>, physics: &Physics) -> Result<Self> {
        let quadrature = Arc::new(MeshQuadrature::new(&mesh));
        let vfam = if physics.is_viscous() { Family::Cg1Vector } else { Family::Rt0 };
        let rt = FeSpace::with_quadrature(mesh.clone(), Family::Rt0, quadrature.clone())?;
        let velocity = if vfam == Family::Rt0 {
            rt.clone()
        } else {
            FeSpace::with_quadrature(mesh.clone(), vfam, quadrature.clone())?
        };
        let scalar = FeSpace::with_quadrature(mesh.clone(), Family::Dg0, quadrature.clone())?;
        let spaces = CurlSpaces::new(rt)?;
        let aux = AuxOperators::new(spaces, velocity.clone(), physics.background);
        Ok(Discretization {
            mesh,
            quadrature,
            velocity,
            scalar,
            aux,
            potential: OnceLock::new(),
        })
    }

    pub fn rt(&self) -> &Arc<FeSpace> {
        &self.aux.spaces.rt
    }

    pub fn background(&self) -> Vec3 {
        self.aux.background
    }

    /// Factorized vector-potential system (3D only), built on first use.
    pub fn vector_potential_solver(&self) -> Result<&VectorPotentialSolver> {
        if self.mesh.dim() != 3 {
            return Err(Error::UnsupportedDimension {
                dim: self.mesh.dim(),
                what: "vector potential",
            });
        }
        self.potential
            .get_or_init(|| VectorPotentialSolver::new(&self.aux.spaces).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::InvalidState(e.clone()))
    }

    /// Number of unknowns of one step.
    pub fn num_unknowns(&self, physics: &Physics) -> usize {
        let n = self.velocity.ndofs() + self.scalar.ndofs() + self.rt().ndofs();
        if physics.has_entropy() {
            n + self.scalar.ndofs()
        } else {
            n
        }
    }
}

/// Discrete unknowns at one time level. `b` is the fluctuation about the
/// background field.
#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub u: FeFunction,
    pub rho: FeFunction,
    pub s: Option<FeFunction>,
    pub b: FeFunction,
}

impl State {
    /// Rejects states with non-positive densities.
    pub fn validate(&self) -> Result<()> {
        if let Some((c, r)) = self.rho.coeffs().iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
            return Err(Error::InvalidState(format!("density {r} in cell {c}")));
        }
        Ok(())
    }

    /// Packs the unknowns as `[u | rho | s | b]`.
    pub fn pack(&self) -> Vec<f64> {
        let mut x = Vec::new();
        x.extend_from_slice(self.u.coeffs());
        x.extend_from_slice(self.rho.coeffs());
        if let Some(s) = &self.s {
            x.extend_from_slice(s.coeffs());
        }
        x.extend_from_slice(self.b.coeffs());
        x
    }
}

/// Outcome of an accepted step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub state: State,
    pub iterations: usize,
    pub residual: f64,
    pub jacobians: usize,
    /// 1 for a regular step, 2 when the step was split after a failure.
    pub substeps: usize,
}

pub struct Stepper {
    disc: Arc<Discretization>,
    physics: Physics,
    newton: NewtonSolver,
    jacobian_dt: Option<f64>,
    /// Check the discrete energy identity after every step.
    pub debug_checks: bool,
}

impl Stepper {
    pub fn new(disc: Arc<Discretization>, physics: Physics, settings: NewtonSettings) -> Result<Self> {
        physics.validate()?;
        settings.validate()?;
        Ok(Stepper {
            disc,
            physics,
            newton: NewtonSolver::new(settings),
            jacobian_dt: None,
            debug_checks: false,
        })
    }

    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn physics(&self) -> &Physics {
        &self.physics
    }

    pub fn settings(&self) -> &NewtonSettings {
        self.newton.settings()
    }

    /// Advances `state` by `dt`. A failed solve is retried once as two
    /// half steps.
    pub fn step(&mut self, state: &State, dt: f64) -> Result<StepReport> {
        match self.solve_step(state, dt) {
            Ok(r) => Ok(r),
            Err(e) if e.is_solver_failure() => {
                log::warn!("step at t = {} failed ({e}); retrying with dt/2", state.t);
                let first = self.solve_step(state, 0.5 * dt).map_err(|e| Error::StepFailed {
                    t: state.t,
                    source: Box::new(e),
                })?;
                let second = self.solve_step(&first.state, 0.5 * dt).map_err(|e| Error::StepFailed {
                    t: first.state.t,
                    source: Box::new(e),
                })?;
                Ok(StepReport {
                    iterations: first.iterations + second.iterations,
                    residual: second.residual,
                    jacobians: first.jacobians + second.jacobians,
                    substeps: 2,
                    state: second.state,
                })
            }
            Err(e) => Err(e),
        }
    }

    fn solve_step(&mut self, state: &State, dt: f64) -> Result<StepReport> {
        if !(dt != 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("invalid time step {dt}")));
        }
        if self.jacobian_dt != Some(dt) {
            self.newton.invalidate();
            self.jacobian_dt = Some(dt);
        }
        let problem = StepProblem::new(&self.disc, &self.physics, state, dt)?;
        let outcome = match self.newton.solve(|x, r| problem.residual(x, r), state.pack()) {
            Ok(o) => o,
            Err(e) => {
                self.newton.invalidate();
                return Err(e);
            }
        };
        let next = problem.finalize(&outcome.x)?;
        if self.debug_checks {
            let res = crate::diagnostics::energy_identity_residual(&self.disc, &self.physics, state, &next, dt)?;
            let tol = 1e3 * self.newton.settings().abs_tol;
            if res.abs() > tol {
                return Err(Error::InvalidState(format!(
                    "energy identity violated: residual {res:.3e} exceeds {tol:.1e}"
                )));
            }
        }
        Ok(StepReport {
            state: next,
            iterations: outcome.iterations,
            residual: outcome.residual,
            jacobians: outcome.jacobians,
            substeps: 1,
        })
    }
}
