use std::sync::Arc;

use mhd_core::app::{initial_state, InitialCondition};
use mhd_core::diagnostics::{div_b_l2, energy_identity_residual, total_energy, total_mass};
use mhd_core::mesh::Mesh;
use mhd_core::sparse::NewtonSettings;
use mhd_core::stepper::{Discretization, Eos, Physics, State, Stepper, Variant};
use mhd_core::Error;

const POLY: Eos = Eos::Polytropic { k: 1.0, gamma: 5.0 / 3.0 };
const GAS: Eos = Eos::IdealGas { k: 1.0, cv: 1.0, gamma: 5.0 / 3.0 };

fn cube() -> Arc<Mesh> {
    Arc::new(Mesh::structured(3, &[2, 2, 2], &[-1.0; 3], &[1.0; 3]).unwrap())
}

fn setup(mesh: Arc<Mesh>, physics: Physics, initial: &InitialCondition) -> (Stepper, State) {
    let disc = Arc::new(Discretization::new(mesh, &physics).unwrap());
    let state = initial_state(&disc, &physics, initial).unwrap();
    (Stepper::new(disc, physics, NewtonSettings::default()).unwrap(), state)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn uniform_rest_state_is_a_fixed_point() {
    let viscous = Physics {
        variant: Variant::BarotropicViscous,
        mu: 0.1,
        lambda: 0.05,
        nu: 0.1,
        ..Physics::barotropic_inviscid(POLY)
    };
    let entropy = Physics {
        variant: Variant::FullEntropy,
        eos: GAS,
        background: [0.3, -0.2, 0.1],
        ..viscous.clone()
    };
    for physics in [Physics::barotropic_inviscid(POLY), viscous, entropy] {
        let (mut stepper, s0) = setup(cube(), physics, &InitialCondition::Uniform { rho: 1.3, s: 0.4 });
        let r = stepper.step(&s0, 0.01).unwrap();
        assert!(max_diff(&r.state.pack(), &s0.pack()) < 1e-14);
        assert!((r.state.t - 0.01).abs() < 1e-15);
    }
}

#[test]
fn entropy_variant_with_zero_entropy_matches_barotropic() {
    let baro = Physics {
        upwinding: false,
        ..Physics::barotropic_inviscid(POLY)
    };
    let full = Physics {
        variant: Variant::FullEntropy,
        eos: GAS,
        ..baro.clone()
    };
    let (mut a, sa) = setup(cube(), baro, &InitialCondition::Invariants3d);
    let (mut b, sb) = setup(cube(), full, &InitialCondition::Invariants3d);
    let ra = a.step(&sa, 0.01).unwrap().state;
    let rb = b.step(&sb, 0.01).unwrap().state;
    assert!(max_diff(ra.u.coeffs(), rb.u.coeffs()) < 1e-10);
    assert!(max_diff(ra.rho.coeffs(), rb.rho.coeffs()) < 1e-12);
    assert!(max_diff(ra.b.coeffs(), rb.b.coeffs()) < 1e-12);
    assert!(rb.s.unwrap().coeffs().iter().all(|s| s.abs() < 1e-12));
}

#[test]
fn one_step_conserves_mass_and_div_b_and_energy() {
    let physics = Physics::barotropic_inviscid(POLY);
    let (mut stepper, s0) = setup(cube(), physics.clone(), &InitialCondition::Invariants3d);
    let disc = stepper.discretization().clone();
    let r = stepper.step(&s0, 0.01).unwrap();
    let s1 = r.state;
    assert!(r.iterations >= 1);
    let m0 = total_mass(&s0.rho);
    assert!((total_mass(&s1.rho) - m0).abs() < 1e-13 * m0);
    assert!(div_b_l2(&s0.b) < 1e-13);
    assert!(div_b_l2(&s1.b) < 1e-13);
    let res = energy_identity_residual(&disc, &physics, &s0, &s1, 0.01).unwrap();
    assert!(res.abs() <= 100.0 * stepper.settings().abs_tol, "energy residual {res:e}");
    // inviscid, so only upwinding can remove energy
    let e0 = total_energy(&disc, &physics, &s0).unwrap();
    let e1 = total_energy(&disc, &physics, &s1).unwrap();
    assert!(e1 <= e0 + 100.0 * stepper.settings().abs_tol);
}

#[test]
fn viscous_entropy_step_satisfies_energy_identity() {
    let physics = Physics {
        variant: Variant::FullEntropy,
        mu: 0.05,
        lambda: 0.02,
        nu: 0.05,
        eos: GAS,
        background: [0.2, 0.0, 0.1],
        potential_gradient: [0.0, 0.0, -1.0],
        ..Physics::barotropic_inviscid(GAS)
    };
    let (mut stepper, s0) = setup(cube(), physics.clone(), &InitialCondition::Invariants3d);
    let disc = stepper.discretization().clone();
    let s1 = stepper.step(&s0, 0.01).unwrap().state;
    let res = energy_identity_residual(&disc, &physics, &s0, &s1, 0.01).unwrap();
    assert!(res.abs() <= 100.0 * stepper.settings().abs_tol, "energy residual {res:e}");
    let e0 = total_energy(&disc, &physics, &s0).unwrap();
    let e1 = total_energy(&disc, &physics, &s1).unwrap();
    // d and e_h act as sinks here as well
    assert!(e1 < e0);
}

#[test]
fn ideal_step_is_time_reversible() {
    let physics = Physics {
        upwinding: false,
        ..Physics::barotropic_inviscid(POLY)
    };
    let (mut stepper, s0) = setup(cube(), physics, &InitialCondition::Invariants3d);
    let s1 = stepper.step(&s0, 0.02).unwrap().state;
    let back = stepper.step(&s1, -0.02).unwrap().state;
    assert!(max_diff(&s1.pack(), &s0.pack()) > 1e-4);
    assert!(max_diff(&back.pack(), &s0.pack()) < 1e-10);
    assert!(back.t.abs() < 1e-15);
}

#[test]
fn two_dimensional_viscous_step() {
    let mesh = Arc::new(Mesh::structured(2, &[2, 4], &[0.0, 0.0], &[0.25, 1.0]).unwrap());
    let physics = Physics {
        variant: Variant::FullEntropy,
        mu: 0.01,
        lambda: 0.01,
        nu: 0.01,
        eos: GAS,
        background: [0.4, 0.0, 0.0],
        potential_gradient: [0.0, -1.0, 0.0],
        ..Physics::barotropic_inviscid(GAS)
    };
    let (mut stepper, s0) = setup(mesh, physics.clone(), &InitialCondition::RayleighTaylor);
    let disc = stepper.discretization().clone();
    let s1 = stepper.step(&s0, 0.01).unwrap().state;
    let m0 = total_mass(&s0.rho);
    assert!((total_mass(&s1.rho) - m0).abs() < 1e-13 * m0);
    assert!(div_b_l2(&s1.b) < 1e-13);
    let res = energy_identity_residual(&disc, &physics, &s0, &s1, 0.01).unwrap();
    assert!(res.abs() <= 100.0 * stepper.settings().abs_tol, "energy residual {res:e}");
}

#[test]
fn invalid_time_step_is_rejected() {
    let (mut stepper, s0) = setup(cube(), Physics::barotropic_inviscid(POLY), &InitialCondition::Uniform { rho: 1.0, s: 0.0 });
    for dt in [0.0, f64::NAN, f64::INFINITY] {
        assert!(matches!(stepper.step(&s0, dt), Err(Error::Config(_))));
    }
}

#[test]
fn unconverged_solve_reports_step_failure() {
    let physics = Physics::barotropic_inviscid(POLY);
    let disc = Arc::new(Discretization::new(cube(), &physics).unwrap());
    let s0 = initial_state(&disc, &physics, &InitialCondition::Invariants3d).unwrap();
    let settings = NewtonSettings {
        max_iter: 1,
        abs_tol: 1e-300,
        rel_tol: 1e-300,
        ..NewtonSettings::default()
    };
    let mut stepper = Stepper::new(disc, physics, settings).unwrap();
    let err = stepper.step(&s0, 0.05).unwrap_err();
    assert!(matches!(err, Error::StepFailed { .. }), "{err}");
    assert!(err.is_solver_failure());
}

#[test]
fn invalid_physics_is_rejected() {
    let physics = Physics {
        mu: 0.1,
        ..Physics::barotropic_inviscid(POLY)
    };
    assert!(matches!(physics.validate(), Err(Error::Config(_))));
    let physics = Physics {
        upwind_smoothing: 0.0,
        ..Physics::barotropic_inviscid(POLY)
    };
    assert!(matches!(physics.validate(), Err(Error::Config(_))));
}
