//! Acceptance checks on the two benchmark problems. Prints one PASS/FAIL
//! line per criterion. Failures only set the exit status when
//! `ACCEPTANCE_STRICT=1`.

use std::process::ExitCode;
use std::time::Instant;

use mhd_core::app::{scenario_invariants3d, scenario_rayleigh_taylor, SimConfig, Simulation};
use mhd_core::diagnostics::{interface_amplitude, DiagnosticsRecord};
use mhd_core::verify::lemma_suite;
use mhd_core::Result;

const MACHINE_TOL: f64 = 1e-12;
const DRIFT_FACTOR: f64 = 1e3;
const CONTRAST_RATIO: f64 = 3.0;

struct Line {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn rel_drift(series: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
    let f0 = f(&series[0]);
    series.iter().map(|r| (f(r) - f0).abs()).fold(0.0, f64::max) / f0.abs()
}

fn max_of(series: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
    series.iter().map(f).fold(0.0, f64::max)
}

struct BalanceChecks {
    mass: f64,
    div_b: f64,
    energy: f64,
    helicity: f64,
    cross: f64,
    tol: f64,
}

impl BalanceChecks {
    fn of(sim: &Simulation) -> Self {
        let s = sim.records();
        BalanceChecks {
            mass: rel_drift(s, |r| r.mass),
            div_b: max_of(s, |r| r.div_b_l2),
            energy: rel_drift(s, |r| r.energy),
            helicity: rel_drift(s, |r| r.magnetic_helicity),
            // the initial value is close to zero, so the drift is absolute
            cross: s.iter().map(|r| (r.cross_helicity - s[0].cross_helicity).abs()).fold(0.0, f64::max),
            tol: DRIFT_FACTOR * sim.config().solver.abs_tol,
        }
    }

    fn flags(&self) -> [bool; 4] {
        [
            self.mass <= MACHINE_TOL,
            self.div_b <= MACHINE_TOL,
            self.energy <= self.tol,
            self.helicity <= self.tol,
        ]
    }

    fn summary(&self) -> String {
        format!(
            "mass {:.2e}, max div B {:.2e}, energy {:.2e}, helicity {:.2e} (tol {:.0e}), cross-helicity change {:.2e}",
            self.mass, self.div_b, self.energy, self.helicity, self.tol, self.cross
        )
    }
}

fn run_steps(cfg: SimConfig) -> Result<Simulation> {
    let mut sim = Simulation::new(cfg)?;
    sim.run_to_end()?;
    Ok(sim)
}

fn lemmas() -> Result<Line> {
    let start = Instant::now();
    let results = lemma_suite(100, 1)?;
    let secs = start.elapsed().as_secs_f64();
    let worst = results
        .iter()
        .max_by(|a, b| (a.max_error / a.tolerance).total_cmp(&(b.max_error / b.tolerance)))
        .unwrap();
    for r in &results {
        println!("    {r}");
    }
    Ok(Line {
        name: "lemma suite",
        passed: results.iter().all(|r| r.passed()) && secs < 10.0,
        detail: format!(
            "{} checks, worst {} at {:.2e}, {secs:.1} s",
            results.len(),
            worst.name,
            worst.max_error
        ),
    })
}

fn invariants() -> Result<Line> {
    let mut cfg = scenario_invariants3d(1)?;
    cfg.time.t_end = 200.0 * cfg.time.dt;
    let start = Instant::now();
    let sim = run_steps(cfg)?;
    let c = BalanceChecks::of(&sim);
    Ok(Line {
        name: "3D invariants run",
        passed: sim.records().len() == 201 && c.flags().iter().all(|f| *f),
        detail: format!(
            "{} steps, {}, {:.0} s",
            sim.records().len() - 1,
            c.summary(),
            start.elapsed().as_secs_f64()
        ),
    })
}

fn rayleigh_taylor() -> Result<Line> {
    let mut cfg = scenario_rayleigh_taylor(0.4, 8)?;
    cfg.time.dt = 0.01;
    cfg.time.t_end = 1.0;
    let start = Instant::now();
    let sim = run_steps(cfg)?;
    let s = sim.records();
    let tol = DRIFT_FACTOR * sim.config().solver.abs_tol;
    let mass = rel_drift(s, |r| r.mass);
    let div_b = max_of(s, |r| r.div_b_l2);
    let residual = max_of(s, |r| r.energy_residual.abs());
    let rise = s.windows(2).map(|w| w[1].energy - w[0].energy).fold(f64::NEG_INFINITY, f64::max);
    let max_rate = sim.steps().iter().map(|st| st.dissipation).fold(f64::NEG_INFINITY, f64::max);
    Ok(Line {
        name: "2D Rayleigh-Taylor coarse run",
        passed: mass <= MACHINE_TOL && div_b <= MACHINE_TOL && residual <= tol && rise <= 0.0 && max_rate <= 0.0,
        detail: format!(
            "{} steps, mass {mass:.2e}, max div B {div_b:.2e}, max energy residual {residual:.2e} (tol {tol:.0e}), \
             largest energy change {rise:.2e}, largest d + e_h {max_rate:.2e}, {:.0} s",
            s.len() - 1,
            start.elapsed().as_secs_f64()
        ),
    })
}

fn contrast() -> Result<Line> {
    let start = Instant::now();
    let amplitude = |b0: f64| -> Result<f64> {
        let mut cfg = scenario_rayleigh_taylor(b0, 8)?;
        cfg.time.t_end = 1.5;
        Ok(interface_amplitude(&run_steps(cfg)?.state().rho))
    };
    let weak = amplitude(0.2)?;
    let strong = amplitude(0.8)?;
    let ratio = weak / strong;
    Ok(Line {
        name: "stability-threshold contrast",
        passed: ratio >= CONTRAST_RATIO,
        detail: format!(
            "amplitude(0.2) {weak:.3e}, amplitude(0.8) {strong:.3e}, ratio {ratio:.2} (need {CONTRAST_RATIO}), {:.0} s",
            start.elapsed().as_secs_f64()
        ),
    })
}

fn upwinding() -> Result<Line> {
    let mut out = Vec::new();
    for on in [true, false] {
        let mut cfg = scenario_invariants3d(1)?;
        cfg.time.t_end = 20.0 * cfg.time.dt;
        cfg.physics.upwinding = on;
        out.push(BalanceChecks::of(&run_steps(cfg)?));
    }
    let (on, off) = (&out[0], &out[1]);
    Ok(Line {
        name: "upwinding neutrality",
        passed: on.flags() == [true; 4] && off.flags() == [true; 4],
        detail: format!("on: {}; off: {}", on.summary(), off.summary()),
    })
}

type Check = fn() -> Result<Line>;

fn main() -> ExitCode {
    let checks: [(&str, Check); 5] = [
        ("lemma suite", lemmas),
        ("3D invariants run", invariants),
        ("2D Rayleigh-Taylor coarse run", rayleigh_taylor),
        ("stability-threshold contrast", contrast),
        ("upwinding neutrality", upwinding),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let line = check().unwrap_or_else(|e| Line {
            name,
            passed: false,
            detail: format!("error: {e}"),
        });
        println!("{} {}: {}", if line.passed { "PASS" } else { "FAIL" }, line.name, line.detail);
        failed += usize::from(!line.passed);
    }
    println!("acceptance: {} of {} criteria passed", checks.len() - failed, checks.len());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed > 0 && strict {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
