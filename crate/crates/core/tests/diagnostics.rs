use std::sync::Arc;

use mhd_core::app::{initial_state, InitialCondition};
use mhd_core::diagnostics::{
    cross_helicity, div_b_l2, energy_parts, interface_amplitude, magnetic_helicity, record, total_energy, total_mass,
    vector_potential, DiagnosticsRecord,
};
use mhd_core::fem::{exact_curl, l2_project, FeFunction};
use mhd_core::mesh::Mesh;
use mhd_core::stepper::{Discretization, Eos, Physics, State, Variant};
use mhd_core::Error;

const POLY: Eos = Eos::Polytropic { k: 1.0, gamma: 5.0 / 3.0 };
const GAS: Eos = Eos::IdealGas { k: 1.0, cv: 1.0, gamma: 5.0 / 3.0 };

fn discretize(mesh: Mesh, physics: &Physics) -> Arc<Discretization> {
    Arc::new(Discretization::new(Arc::new(mesh), physics).unwrap())
}

fn uniform(disc: &Discretization, physics: &Physics, rho: f64) -> State {
    initial_state(disc, physics, &InitialCondition::Uniform { rho, s: 0.0 }).unwrap()
}

fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
    let mut x = seed.wrapping_add(0x9e3779b97f4a7c15);
    (0..n)
        .map(|_| {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

#[test]
fn uniform_unit_cube_has_unit_internal_energy() {
    let physics = Physics::barotropic_inviscid(POLY);
    let disc = discretize(Mesh::structured(3, &[2, 2, 2], &[0.0; 3], &[1.0; 3]).unwrap(), &physics);
    let state = uniform(&disc, &physics, 1.0);
    let parts = energy_parts(&disc, &physics, &state).unwrap();
    assert!((parts.internal - 1.0).abs() < 1e-14);
    assert_eq!(parts.kinetic, 0.0);
    assert_eq!(parts.magnetic, 0.0);
    assert_eq!(parts.potential, 0.0);
    assert!((total_energy(&disc, &physics, &state).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn mass_of_uniform_density() {
    let physics = Physics::barotropic_inviscid(POLY);
    let disc = discretize(Mesh::structured(3, &[2, 2, 2], &[-1.0; 3], &[1.0; 3]).unwrap(), &physics);
    assert!((total_mass(&uniform(&disc, &physics, 2.0).rho) - 16.0).abs() < 1e-13);
}

#[test]
fn background_field_energy_and_gravity() {
    let physics = Physics {
        variant: Variant::FullEntropy,
        mu: 0.01,
        lambda: 0.01,
        nu: 0.01,
        background: [0.2, 0.0, 0.0],
        potential_gradient: [0.0, -1.0, 0.0],
        ..Physics::barotropic_inviscid(GAS)
    };
    let disc = discretize(Mesh::structured(2, &[4, 16], &[0.0, 0.0], &[0.25, 1.0]).unwrap(), &physics);
    let state = uniform(&disc, &physics, 1.0);
    let parts = energy_parts(&disc, &physics, &state).unwrap();
    assert!((parts.magnetic - 0.005).abs() < 1e-15);
    // int -y over [0, 1/4] x [0, 1]
    assert!((parts.potential + 0.125).abs() < 1e-15);
    assert!((parts.internal - 0.25).abs() < 1e-15);
    assert_eq!(parts.total(), parts.kinetic + parts.magnetic + parts.internal + parts.potential);
}

#[test]
fn cross_helicity_vanishes_for_orthogonal_fields() {
    let physics = Physics {
        variant: Variant::FullEntropy,
        mu: 0.01,
        background: [0.2, 0.0, 0.0],
        ..Physics::barotropic_inviscid(GAS)
    };
    let disc = discretize(Mesh::structured(2, &[4, 16], &[0.0, 0.0], &[0.25, 1.0]).unwrap(), &physics);
    let state = initial_state(&disc, &physics, &InitialCondition::RayleighTaylor).unwrap();
    assert!(state.u.coeffs().iter().any(|v| *v != 0.0));
    assert_eq!(cross_helicity(&disc, &state), 0.0);
}

#[test]
fn layered_density_has_no_interface_amplitude() {
    let physics = Physics::barotropic_inviscid(POLY);
    let disc = discretize(Mesh::structured(2, &[4, 8], &[0.0, 0.0], &[0.25, 1.0]).unwrap(), &physics);
    let flat = l2_project(&disc.scalar, |x| [1.5 - 0.5 * ((x[1] - 0.5) / 0.02).tanh(), 0.0, 0.0]).unwrap();
    assert!(interface_amplitude(&flat) < 1e-14);
    let bumpy = l2_project(&disc.scalar, |x| [1.0 + 0.1 * (8.0 * std::f64::consts::PI * x[0]).cos(), 0.0, 0.0]).unwrap();
    assert!(interface_amplitude(&bumpy) > 1e-3);
}

#[test]
fn vector_potential_recovers_the_field() {
    let physics = Physics::barotropic_inviscid(POLY);
    let disc = discretize(Mesh::structured(3, &[2, 2, 2], &[-1.0; 3], &[1.0; 3]).unwrap(), &physics);
    let sp = &disc.aux.spaces;
    let a0 = FeFunction::new(&sp.hspace, pseudo_random(sp.hspace.ndofs(), 5)).unwrap();
    let b = exact_curl(&a0, disc.rt()).unwrap();
    let a = vector_potential(&disc, &b).unwrap();
    let back = exact_curl(&a, disc.rt()).unwrap();
    for (x, y) in back.coeffs().iter().zip(b.coeffs()) {
        assert!((x - y).abs() < 1e-12);
    }
    let zero = vector_potential(&disc, &FeFunction::zeros(disc.rt())).unwrap();
    assert!(zero.coeffs().iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn helicity_is_gauge_independent() {
    let physics = Physics::barotropic_inviscid(POLY);
    let mesh = Mesh::structured(3, &[3, 3, 3], &[-1.0; 3], &[1.0; 3]).unwrap();
    let disc = discretize(mesh, &physics);
    let sp = &disc.aux.spaces;
    let mesh = &disc.mesh;
    let a0 = FeFunction::new(&sp.hspace, pseudo_random(sp.hspace.ndofs(), 9)).unwrap();
    // add a discrete gradient
    let phi = pseudo_random(mesh.num_vertices(), 10);
    let mut shifted = a0.coeffs().to_vec();
    for (dof, a) in shifted.iter_mut().enumerate() {
        let [lo, hi] = mesh.edges()[sp.hspace.dof_entity(dof)].vertices;
        let p = |v: usize| if mesh.is_boundary_vertex(v) { 0.0 } else { phi[v] };
        *a += p(hi) - p(lo);
    }
    let a1 = FeFunction::new(&sp.hspace, shifted).unwrap();
    let b0 = exact_curl(&a0, disc.rt()).unwrap();
    let b1 = exact_curl(&a1, disc.rt()).unwrap();
    for (x, y) in b0.coeffs().iter().zip(b1.coeffs()) {
        assert!((x - y).abs() < 1e-13);
    }
    let h = magnetic_helicity(&disc, &b0).unwrap();
    // <A0, curl A0> with the arbitrary potential gives the same value
    let direct = disc.aux.ned_rt_product(a0.coeffs(), b0.coeffs());
    let direct1 = disc.aux.ned_rt_product(a1.coeffs(), b1.coeffs());
    assert!((h - direct).abs() < 1e-12 * (1.0 + h.abs()), "{h} vs {direct}");
    assert!((h - direct1).abs() < 1e-12 * (1.0 + h.abs()), "{h} vs {direct1}");
}

#[test]
fn divergent_field_has_no_potential() {
    let physics = Physics::barotropic_inviscid(POLY);
    let disc = discretize(Mesh::structured(3, &[2, 2, 2], &[-1.0; 3], &[1.0; 3]).unwrap(), &physics);
    let b = FeFunction::new(disc.rt(), pseudo_random(disc.rt().ndofs(), 1)).unwrap();
    assert!(div_b_l2(&b) > 1e-3);
    assert!(matches!(vector_potential(&disc, &b), Err(Error::NotDivergenceFree { .. })));
}

#[test]
fn potential_is_three_dimensional_only() {
    let physics = Physics::barotropic_inviscid(POLY);
    let disc = discretize(Mesh::structured(2, &[2, 2], &[0.0; 2], &[1.0; 2]).unwrap(), &physics);
    let b = FeFunction::zeros(disc.rt());
    assert!(matches!(vector_potential(&disc, &b), Err(Error::UnsupportedDimension { dim: 2, .. })));
    let state = uniform(&disc, &physics, 1.0);
    let r = record(&disc, &physics, &state, None, 0, true).unwrap();
    assert_eq!(r.magnetic_helicity, 0.0);
}

#[test]
fn initial_record_of_smooth_3d_data() {
    let physics = Physics::barotropic_inviscid(POLY);
    let disc = discretize(Mesh::structured(3, &[2, 2, 2], &[-1.0; 3], &[1.0; 3]).unwrap(), &physics);
    let state = initial_state(&disc, &physics, &InitialCondition::Invariants3d).unwrap();
    let r = record(&disc, &physics, &state, None, 0, true).unwrap();
    assert_eq!(r.t, 0.0);
    assert_eq!(r.energy_residual, 0.0);
    assert!(r.div_b_l2 < 1e-14);
    // cell means of 2 + sin sin sin average to 2 by symmetry
    assert!((r.mass - 16.0).abs() < 1e-12);
    assert!(r.magnetic_helicity.is_finite());
    let skipped = record(&disc, &physics, &state, None, 0, false).unwrap();
    assert!(skipped.magnetic_helicity.is_nan());
}

#[test]
fn csv_rows_round_trip_exactly() {
    let r = DiagnosticsRecord {
        t: 0.1 + 0.2,
        mass: 16.000000000000004,
        energy: -1.0 / 3.0,
        cross_helicity: 1e-300,
        magnetic_helicity: f64::NAN,
        div_b_l2: 0.0,
        energy_residual: -2.5e-13,
        newton_iters: 7,
    };
    let row = r.csv_row();
    assert_eq!(row.split(',').count(), DiagnosticsRecord::CSV_HEADER.split(',').count());
    let back = DiagnosticsRecord::parse_csv_row(&row).unwrap();
    for (x, y) in [
        (r.t, back.t),
        (r.mass, back.mass),
        (r.energy, back.energy),
        (r.cross_helicity, back.cross_helicity),
        (r.div_b_l2, back.div_b_l2),
        (r.energy_residual, back.energy_residual),
    ] {
        assert_eq!(x.to_bits(), y.to_bits());
    }
    assert!(back.magnetic_helicity.is_nan());
    assert_eq!(back.newton_iters, 7);
    assert!(DiagnosticsRecord::parse_csv_row("1,2,3").is_err());
    assert!(DiagnosticsRecord::parse_csv_row("1,2,3,4,5,6,x,1").is_err());
}
