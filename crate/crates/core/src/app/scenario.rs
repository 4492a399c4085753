use std::f64::consts::PI;

use super::config::{InitialCondition, MeshConfig, OutputConfig, PhysicsConfig, SimConfig, TimeConfig};
use crate::error::{Error, Result};
use crate::fem::{self, FeFunction};
use crate::sparse::NewtonSettings;
use crate::stepper::{Discretization, Eos, Physics, State, Variant};
use crate::vec3::Vec3;

/// Grid boxes per axis of the 3D preset at factor 1 (`h = sqrt(3)/2`).
const INVARIANTS_DIVISIONS: usize = 4;
/// Grid spacing of the 2D preset at factor 1.
const RT_SPACING: f64 = 1.0 / 128.0;
const RT_WIDTH: f64 = 0.25;
const RT_HEIGHT: f64 = 1.0;

fn check_factor(factor: usize) -> Result<()> {
    if factor == 0 {
        return Err(Error::Config("resolution factor must be at least 1".into()));
    }
    Ok(())
}

/// Smooth 3D test: ideal barotropic flow in `[-1, 1]^3`, `eps = rho^(5/3)`.
pub fn scenario_invariants3d(factor: usize) -> Result<SimConfig> {
    check_factor(factor)?;
    let d = (INVARIANTS_DIVISIONS as f64 / factor as f64).round().max(1.0) as usize;
    Ok(SimConfig {
        mesh: MeshConfig {
            dim: 3,
            divisions: vec![d; 3],
            lower: vec![-1.0; 3],
            upper: vec![1.0; 3],
        },
        physics: PhysicsConfig {
            variant: Variant::BarotropicInviscid,
            mu: 0.0,
            lambda: 0.0,
            nu: 0.0,
            background: [0.0; 3],
            potential_gradient: [0.0; 3],
            upwinding: true,
            upwind_smoothing: 0.01,
        },
        eos: Eos::Polytropic { k: 1.0, gamma: 5.0 / 3.0 },
        time: TimeConfig { dt: 0.005, t_end: 1.0 },
        solver: NewtonSettings::default(),
        output: OutputConfig::default(),
        initial: InitialCondition::Invariants3d,
    })
}

/// Magnetic Rayleigh-Taylor setup on `[0, 1/4] x [0, 1]` with a horizontal
/// background field of strength `b0` and upward gravity.
pub fn scenario_rayleigh_taylor(b0: f64, factor: usize) -> Result<SimConfig> {
    check_factor(factor)?;
    if !(b0 >= 0.0 && b0.is_finite()) {
        return Err(Error::Config(format!("background field strength must be nonnegative, got {b0}")));
    }
    let h = RT_SPACING * factor as f64;
    let nx = (RT_WIDTH / h).round().max(1.0) as usize;
    let ny = (RT_HEIGHT / h).round().max(1.0) as usize;
    Ok(SimConfig {
        mesh: MeshConfig {
            dim: 2,
            divisions: vec![nx, ny],
            lower: vec![0.0, 0.0],
            upper: vec![RT_WIDTH, RT_HEIGHT],
        },
        physics: PhysicsConfig {
            variant: Variant::FullEntropy,
            mu: 0.01,
            lambda: 0.01,
            nu: 0.01,
            background: [b0, 0.0, 0.0],
            potential_gradient: [0.0, -1.0, 0.0],
            upwinding: true,
            upwind_smoothing: 0.01,
        },
        eos: Eos::IdealGas {
            k: 1.0,
            cv: 1.0,
            gamma: 5.0 / 3.0,
        },
        time: TimeConfig { dt: 0.005, t_end: 5.0 },
        solver: NewtonSettings::default(),
        output: OutputConfig::default(),
        initial: InitialCondition::RayleighTaylor,
    })
}

pub fn invariants_velocity(x: &Vec3) -> Vec3 {
    let (s, c) = (x.map(|t| (PI * t).sin()), x.map(|t| (PI * t).cos()));
    [s[0] * c[1] * c[2], c[0] * s[1] * c[2], c[0] * c[1] * s[2]]
}

pub fn invariants_density(x: &Vec3) -> f64 {
    2.0 + (PI * x[0]).sin() * (PI * x[1]).sin() * (PI * x[2]).sin()
}

/// Vector potential of the initial field, `(1-x^2)(1-y^2)(1-z^2) v` with
/// `v = (sin pi x, sin pi y, sin pi z) / 2`.
pub fn invariants_potential(x: &Vec3) -> Vec3 {
    let bubble = (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]) * (1.0 - x[2] * x[2]);
    x.map(|t| 0.5 * bubble * (PI * t).sin())
}

pub fn rt_density(y: f64) -> f64 {
    1.5 - 0.5 * ((y - 0.5) / 0.02).tanh()
}

pub fn rt_pressure(y: f64) -> f64 {
    1.5 * y + 1.25 + (0.25 - 0.5 * y) * ((y - 0.5) / 0.02).tanh()
}

pub fn rt_velocity(x: &Vec3, gamma: f64) -> Vec3 {
    let (px, y) = (x[0], x[1]);
    let amp = -0.025 * (gamma * rt_pressure(y) / rt_density(y)).sqrt();
    [0.0, amp * (8.0 * PI * px).cos() * (-(y - 0.5).powi(2) / 0.09).exp(), 0.0]
}

pub fn rt_entropy(y: f64, k: f64, cv: f64, gamma: f64) -> f64 {
    let rho = rt_density(y);
    cv * rho * (rt_pressure(y) / ((gamma - 1.0) * k * rho.powf(gamma))).ln()
}

fn scalar(disc: &Discretization, f: impl Fn(&Vec3) -> f64) -> Result<FeFunction> {
    fem::l2_project(&disc.scalar, |x| [f(x), 0.0, 0.0])
}

/// Initial state at `t = 0`. Fields enter their spaces by L2 projection;
/// the 3D field is the exact curl of the projected vector potential.
pub fn initial_state(disc: &Discretization, physics: &Physics, initial: &InitialCondition) -> Result<State> {
    let entropy = physics.has_entropy();
    let state = match initial {
        InitialCondition::Uniform { rho, s } => State {
            t: 0.0,
            u: FeFunction::zeros(&disc.velocity),
            rho: FeFunction::new(&disc.scalar, vec![*rho; disc.scalar.ndofs()])?,
            s: entropy.then(|| FeFunction::new(&disc.scalar, vec![*s; disc.scalar.ndofs()])).transpose()?,
            b: FeFunction::zeros(disc.rt()),
        },
        InitialCondition::Invariants3d => {
            let a = fem::l2_project(&disc.aux.spaces.hspace, invariants_potential)?;
            State {
                t: 0.0,
                u: fem::l2_project(&disc.velocity, invariants_velocity)?,
                rho: scalar(disc, invariants_density)?,
                s: entropy.then(|| FeFunction::new(&disc.scalar, vec![0.0; disc.scalar.ndofs()])).transpose()?,
                b: fem::exact_curl(&a, disc.rt())?,
            }
        }
        InitialCondition::RayleighTaylor => {
            let Eos::IdealGas { k, cv, gamma } = physics.eos else {
                return Err(Error::Config("RAYLEIGH_TAYLOR initial data needs the IDEAL_GAS law".into()));
            };
            State {
                t: 0.0,
                u: fem::l2_project(&disc.velocity, |x| rt_velocity(x, gamma))?,
                rho: scalar(disc, |x| rt_density(x[1]))?,
                s: entropy.then(|| scalar(disc, |x| rt_entropy(x[1], k, cv, gamma))).transpose()?,
                b: FeFunction::zeros(disc.rt()),
            }
        }
    };
    state.validate()?;
    Ok(state)
}
