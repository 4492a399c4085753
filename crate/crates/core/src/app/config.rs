use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::NewtonSettings;
use crate::stepper::{Eos, Physics, Variant};

/// Complete description of a simulation, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub mesh: MeshConfig,
    pub physics: PhysicsConfig,
    pub eos: Eos,
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: NewtonSettings,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub initial: InitialCondition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub dim: usize,
    pub divisions: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl MeshConfig {
    pub fn build(&self) -> Result<Mesh> {
        for (name, len) in [
            ("divisions", self.divisions.len()),
            ("lower", self.lower.len()),
            ("upper", self.upper.len()),
        ] {
            if len != self.dim {
                return Err(Error::Config(format!(
                    "mesh.{name} has {len} entries, expected {}",
                    self.dim
                )));
            }
        }
        Mesh::structured(self.dim, &self.divisions, &self.lower, &self.upper)
    }
}

fn default_smoothing() -> f64 {
    0.01
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub variant: Variant,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub nu: f64,
    /// Constant background magnetic field.
    #[serde(default)]
    pub background: [f64; 3],
    /// Gradient of the linear gravitational potential.
    #[serde(default)]
    pub potential_gradient: [f64; 3],
    #[serde(default = "yes")]
    pub upwinding: bool,
    #[serde(default = "default_smoothing")]
    pub upwind_smoothing: f64,
}

impl PhysicsConfig {
    pub fn to_physics(&self, eos: Eos) -> Physics {
        Physics {
            variant: self.variant,
            mu: self.mu,
            lambda: self.lambda,
            nu: self.nu,
            eos,
            background: self.background,
            potential_gradient: self.potential_gradient,
            upwinding: self.upwinding,
            upwind_smoothing: self.upwind_smoothing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
}

fn default_snapshot_interval() -> f64 {
    0.1
}

fn default_helicity_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory receiving `diagnostics.csv` and the snapshots.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Time between VTK snapshots; 0 disables them.
    #[serde(default = "default_snapshot_interval")]
    pub snapshot_interval: f64,
    /// Magnetic helicity is evaluated on every n-th record (NaN otherwise).
    #[serde(default = "default_helicity_every")]
    pub helicity_every: usize,
    /// Check the discrete energy identity after every step.
    #[serde(default)]
    pub debug_checks: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            snapshot_interval: default_snapshot_interval(),
            helicity_every: default_helicity_every(),
            debug_checks: false,
        }
    }
}

/// Initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum InitialCondition {
    /// Fluid at rest with uniform density and entropy, no field fluctuation.
    Uniform {
        rho: f64,
        #[serde(default)]
        s: f64,
    },
    /// Smooth velocity, density and field on `[-1, 1]^3`.
    Invariants3d,
    /// Stratified layers with a perturbed interface on `[0, 1/4] x [0, 1]`.
    RayleighTaylor,
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Uniform { rho: 1.0, s: 0.0 }
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SimConfig::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn physics(&self) -> Physics {
        self.physics.to_physics(self.eos)
    }

    pub fn validate(&self) -> Result<()> {
        self.mesh.build()?;
        self.physics().validate()?;
        self.solver.validate()?;
        let t = &self.time;
        if !(t.dt > 0.0 && t.dt.is_finite()) {
            return Err(Error::Config(format!("time.dt must be positive, got {}", t.dt)));
        }
        if !(t.t_end >= 0.0 && t.t_end.is_finite()) {
            return Err(Error::Config(format!("time.t_end must be nonnegative, got {}", t.t_end)));
        }
        match (self.physics.variant, self.eos) {
            (Variant::FullEntropy, Eos::Polytropic { .. }) => {
                return Err(Error::Config("FULL_ENTROPY requires the IDEAL_GAS equation of state".into()))
            }
            (Variant::BarotropicViscous | Variant::BarotropicInviscid, Eos::IdealGas { .. }) => {
                return Err(Error::Config("barotropic variants require the POLYTROPIC equation of state".into()))
            }
            _ => {}
        }
        let out = &self.output;
        if !(out.snapshot_interval >= 0.0) {
            return Err(Error::Config("output.snapshot_interval must be nonnegative".into()));
        }
        if out.helicity_every == 0 {
            return Err(Error::Config("output.helicity_every must be at least 1".into()));
        }
        match &self.initial {
            InitialCondition::Uniform { rho, s } => {
                if !(*rho > 0.0 && rho.is_finite()) || !s.is_finite() {
                    return Err(Error::Config("initial density must be positive and finite".into()));
                }
            }
            InitialCondition::Invariants3d => {
                if self.mesh.dim != 3 {
                    return Err(Error::Config("INVARIANTS3D initial data needs a 3D mesh".into()));
                }
            }
            InitialCondition::RayleighTaylor => {
                if self.mesh.dim != 2 {
                    return Err(Error::Config("RAYLEIGH_TAYLOR initial data needs a 2D mesh".into()));
                }
                if !matches!(self.eos, Eos::IdealGas { .. }) {
                    return Err(Error::Config("RAYLEIGH_TAYLOR initial data needs the IDEAL_GAS law".into()));
                }
            }
        }
        Ok(())
    }
}
