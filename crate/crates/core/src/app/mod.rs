//! Configuration, scenario presets, run orchestration and file output.

mod config;
mod output;
mod run;
mod scenario;

pub use config::{InitialCondition, MeshConfig, OutputConfig, PhysicsConfig, SimConfig, TimeConfig};
pub use output::{read_diagnostics_csv, write_diagnostics_csv, write_vtk_snapshot, CsvWriter};
pub use run::{run, Simulation, StepInfo};
pub use scenario::{
    initial_state, invariants_density, invariants_potential, invariants_velocity, rt_density, rt_entropy,
    rt_pressure, rt_velocity, scenario_invariants3d, scenario_rayleigh_taylor,
};
