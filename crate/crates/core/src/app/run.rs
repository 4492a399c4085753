use std::path::PathBuf;
use std::sync::Arc;

use super::config::SimConfig;
use super::output::{write_vtk_snapshot, CsvWriter};
use super::scenario::initial_state;
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::stepper::{Discretization, Physics, State, Stepper};

/// Relative slack when deciding whether the final time has been reached.
const TIME_SLACK: f64 = 1e-9;

/// Per-step quantities that are not part of the CSV record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    /// `d(u_mid, u_mid) + e_h(B_mid, B_mid)`
    pub dissipation: f64,
    pub jacobians: usize,
    pub substeps: usize,
}

/// A configured run: discretization, current state and the diagnostics
/// recorded so far.
pub struct Simulation {
    cfg: SimConfig,
    stepper: Stepper,
    state: State,
    records: Vec<DiagnosticsRecord>,
    steps: Vec<StepInfo>,
    csv: Option<CsvWriter>,
    snapshots: Vec<PathBuf>,
    last_snapshot: Option<i64>,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let physics = cfg.physics();
        let mesh = Arc::new(cfg.mesh.build()?);
        let disc = Arc::new(Discretization::new(mesh, &physics)?);
        let state = initial_state(&disc, &physics, &cfg.initial)?;
        let mut stepper = Stepper::new(disc, physics, cfg.solver.clone())?;
        stepper.debug_checks = cfg.output.debug_checks;
        let csv = match &cfg.output.dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                Some(CsvWriter::create(&dir.join("diagnostics.csv"))?)
            }
            None => None,
        };
        let mut sim = Simulation {
            cfg,
            stepper,
            state,
            records: Vec::new(),
            steps: Vec::new(),
            csv,
            snapshots: Vec::new(),
            last_snapshot: None,
        };
        sim.record(None, 0)?;
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn discretization(&self) -> &Arc<Discretization> {
        self.stepper.discretization()
    }

    pub fn physics(&self) -> &Physics {
        self.stepper.physics()
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn steps(&self) -> &[StepInfo] {
        &self.steps
    }

    pub fn snapshots(&self) -> &[PathBuf] {
        &self.snapshots
    }

    pub fn is_finished(&self) -> bool {
        let t_end = self.cfg.time.t_end;
        self.state.t >= t_end - TIME_SLACK * t_end.max(self.cfg.time.dt)
    }

    fn record(&mut self, prev: Option<(&State, f64)>, newton_iters: usize) -> Result<()> {
        let disc = self.stepper.discretization().clone();
        let physics = self.stepper.physics();
        let sample = self.records.len() % self.cfg.output.helicity_every == 0;
        let r = diagnostics::record(&disc, physics, &self.state, prev, newton_iters, sample)?;
        if let Some(csv) = &mut self.csv {
            csv.push(&r)?;
        }
        self.records.push(r);
        self.maybe_snapshot()
    }

    fn maybe_snapshot(&mut self) -> Result<()> {
        let interval = self.cfg.output.snapshot_interval;
        let Some(dir) = self.cfg.output.dir.clone() else {
            return Ok(());
        };
        if interval <= 0.0 {
            return Ok(());
        }
        let index = ((self.state.t + TIME_SLACK * interval) / interval).floor() as i64;
        if self.last_snapshot.is_some_and(|last| index <= last) {
            return Ok(());
        }
        let path = dir.join(format!("snapshot_{index:04}.vtk"));
        write_vtk_snapshot(self.stepper.discretization(), &self.state, &path)?;
        self.last_snapshot = Some(index);
        self.snapshots.push(path);
        Ok(())
    }

    /// Advances one step (shortened to land on the final time).
    pub fn step(&mut self) -> Result<&DiagnosticsRecord> {
        let dt = self.cfg.time.dt.min(self.cfg.time.t_end - self.state.t);
        let dt = if dt < TIME_SLACK * self.cfg.time.dt {
            self.cfg.time.dt
        } else {
            dt
        };
        let report = self.stepper.step(&self.state, dt)?;
        let prev = std::mem::replace(&mut self.state, report.state);
        let disc = self.stepper.discretization().clone();
        let (dissipation, _) = diagnostics::dissipation_rate(&disc, self.stepper.physics(), &prev, &self.state);
        self.steps.push(StepInfo {
            dt,
            dissipation,
            jacobians: report.jacobians,
            substeps: report.substeps,
        });
        self.record(Some((&prev, dt)), report.iterations)?;
        log::debug!(
            "t = {:.6} newton {} residual {:.2e}",
            self.state.t,
            report.iterations,
            report.residual
        );
        Ok(self.records.last().unwrap())
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(())
    }
}

/// Runs a configuration to its final time and returns the diagnostics.
pub fn run(cfg: SimConfig) -> Result<Vec<DiagnosticsRecord>> {
    let mut sim = Simulation::new(cfg)?;
    sim.run_to_end()?;
    Ok(sim.records)
}
