//! Property checks of the discrete forms on small meshes.
//!
//! Each check draws random finite element functions and records the
//! largest violation of an identity the scheme relies on.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fem::{self, Affine, Family, FeFunction, FeSpace};
use crate::forms::{self, AuxOperators, CurlSpaces};
use crate::mesh::Mesh;
use crate::sparse;
use crate::stepper::Eos;
use crate::vec3;

pub const LEMMA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub trials: usize,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: max error {:.3e} over {} trials (tol {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.max_error,
            self.trials,
            self.tolerance
        )
    }
}

fn random(space: &Arc<FeSpace>, rng: &mut ChaCha8Rng) -> FeFunction {
    let x = (0..space.ndofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    FeFunction::new(space, x).expect("finite coefficients")
}

fn random_positive(space: &Arc<FeSpace>, rng: &mut ChaCha8Rng) -> FeFunction {
    let x = (0..space.ndofs()).map(|_| rng.gen_range(0.5..2.0)).collect();
    FeFunction::new(space, x).expect("finite coefficients")
}

struct Track {
    name: String,
    max: f64,
    trials: usize,
}

impl Track {
    fn new(name: String) -> Self {
        Track { name, max: 0.0, trials: 0 }
    }

    fn push(&mut self, err: f64) {
        self.trials += 1;
        // NaN must register as a failure
        if err.is_nan() || err > self.max {
            self.max = if err.is_nan() { f64::INFINITY } else { err };
        }
    }

    fn done(self) -> CheckResult {
        CheckResult {
            name: self.name,
            max_error: self.max,
            tolerance: LEMMA_TOL,
            trials: self.trials,
        }
    }
}

/// Meshes the suite runs on: the single square and cube with their
/// smallest splits, and slightly larger ones whose interior carries enough
/// degrees of freedom for every space.
pub fn suite_meshes() -> Result<Vec<(String, Arc<Mesh>)>> {
    Ok(vec![
        ("2d-2cell".into(), Arc::new(Mesh::structured(2, &[1, 1], &[0.0, 0.0], &[1.0, 1.0])?)),
        ("2d-3x3".into(), Arc::new(Mesh::structured(2, &[3, 3], &[0.0, 0.0], &[1.0, 1.0])?)),
        (
            "3d-6tet".into(),
            Arc::new(Mesh::structured(3, &[1, 1, 1], &[0.0; 3], &[1.0; 3])?),
        ),
        (
            "3d-2x2x2".into(),
            Arc::new(Mesh::structured(3, &[2, 2, 2], &[-1.0; 3], &[1.0; 3])?),
        ),
    ])
}

/// Runs every check with `trials` random draws per mesh.
pub fn lemma_suite(trials: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut antisym = Track::new("a antisymmetry".into());
    let mut antisym_h = Track::new("a_h antisymmetry (RT0, upwinded)".into());
    let mut bh_const = Track::new("b_h(1, g, u) = 0".into());
    let mut lemma1 = Track::new("c_h(A, curl A, v) = 0".into());
    let mut curl_e = Track::new("<curl E, C> = c_h(C, B, u)".into());
    let mut alpha = Track::new("<alpha, v> = c_h(pi(-B), B, v)".into());
    let mut resist = Track::new("e_h(B, C) = -nu <curl j, C>".into());
    let mut kinetic = Track::new("discrete kinetic-internal energy identity".into());

    for (_, mesh) in suite_meshes()? {
        let cg = FeSpace::new(mesh.clone(), Family::Cg1Vector)?;
        let rt = FeSpace::new(mesh.clone(), Family::Rt0)?;
        let dg = FeSpace::new(mesh.clone(), Family::Dg0)?;
        let spaces = CurlSpaces::new(rt.clone())?;
        let ops_cg = AuxOperators::new(CurlSpaces::new(rt.clone())?, cg.clone(), [0.0; 3]);
        let ops_rt = AuxOperators::new(CurlSpaces::new(rt.clone())?, rt.clone(), [0.0; 3]);
        let one = FeFunction::new(&dg, vec![1.0; dg.ndofs()])?;
        let eos = Eos::Polytropic { k: 1.0, gamma: 5.0 / 3.0 };

        for _ in 0..trials {
            let (w, u, v) = (random(&cg, &mut rng), random(&cg, &mut rng), random(&cg, &mut rng));
            antisym.push((forms::form_a(&w, &u, &v)? + forms::form_a(&w, &v, &u)?).abs());

            let adv = random(&rt, &mut rng);
            let (ur, vr) = (random(&rt, &mut rng), random(&rt, &mut rng));
            let wr = random(&rt, &mut rng);
            antisym_h.push(
                (forms::form_ah(&adv, &wr, &ur, &vr, 0.01)? + forms::form_ah(&adv, &wr, &vr, &ur, 0.01)?).abs(),
            );

            let g = random(&dg, &mut rng);
            bh_const.push(forms::form_bh(&one, &g, &ur)?.abs());
            bh_const.push(forms::form_bh_upwind(&adv, &one, &g, &ur, 0.01)?.abs());

            if mesh.dim() == 3 {
                let a = random(&spaces.hspace, &mut rng);
                let b = fem::exact_curl(&a, &rt)?;
                lemma1.push(forms::form_ch_direct(&a, &b, &v, &spaces)?.abs());
                lemma1.push(forms::form_ch_direct(&a, &b, &vr, &spaces)?.abs());
            }

            let b = random(&rt, &mut rng);
            let c = random(&rt, &mut rng);
            for (ops, vel) in [(&ops_cg, &u), (&ops_rt, &ur)] {
                let aux = forms::build_aux_chain(ops, b.coeffs(), vel.coeffs())?;
                let ce = spaces.curl.mul_vec(aux.e.coeffs());
                let lhs = sparse::dot(c.coeffs(), &rt.mass_matrix().mul_vec(&ce));
                curl_e.push((lhs - forms::form_ch_direct(&c, &b, vel, &spaces)?).abs());

                let test = if std::ptr::eq(ops, &ops_cg) { &v } else { &vr };
                let av = sparse::dot(&ops.alpha_load(aux.alpha.coeffs()), test.coeffs());
                let minus_b = FeFunction::new(&rt, b.coeffs().iter().map(|x| -x).collect())?;
                alpha.push((av - forms::form_ch_direct(&minus_b, &b, test, &spaces)?).abs());
            }

            let nu = rng.gen_range(0.01..1.0);
            let j = fem::weak_curl(&b, &spaces.jspace)?;
            let cj = spaces.curl.mul_vec(j.coeffs());
            let rhs = -nu * sparse::dot(c.coeffs(), &rt.mass_matrix().mul_vec(&cj));
            resist.push((forms::form_eh(&b, &c, nu, &spaces.jspace)? - rhs).abs());

            let (r0, r1) = (random_positive(&dg, &mut rng), random_positive(&dg, &mut rng));
            let (u0, u1) = (random(&cg, &mut rng), random(&cg, &mut rng));
            kinetic.push(kinetic_identity_defect(&eos, &r0, &r1, &u0, &u1)?);
            let (u0, u1) = (random(&rt, &mut rng), random(&rt, &mut rng));
            kinetic.push(kinetic_identity_defect(&eos, &r0, &r1, &u0, &u1)?);
        }
    }
    Ok(vec![
        antisym.done(),
        antisym_h.done(),
        bh_const.done(),
        lemma1.done(),
        curl_e.done(),
        alpha.done(),
        resist.done(),
        kinetic.done(),
    ])
}

/// Defect of
/// `int [rho1 |u1|^2/2 + eps(rho1) - rho0 |u0|^2/2 - eps(rho0)]
///  = <rho1 u1 - rho0 u0, (u0 + u1)/2> - <rho1 - rho0, u0.u1/2 - delta(rho0, rho1)>`,
/// with both sides integrated independently. This is the step identity
/// multiplied through by the time step.
pub fn kinetic_identity_defect(
    eos: &Eos,
    rho0: &FeFunction,
    rho1: &FeFunction,
    u0: &FeFunction,
    u1: &FeFunction,
) -> Result<f64> {
    let mesh = rho0.space().mesh();
    let q = rho0.space().quadrature();
    let (r0, r1) = (rho0.coeffs(), rho1.coeffs());
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for c in 0..mesh.num_cells() {
        let (a0, a1): (Affine, Affine) = (u0.restrict(c), u1.restrict(c));
        let vol = mesh.volume(c);
        lhs += vol * (eos.energy(r1[c], 0.0)? - eos.energy(r0[c], 0.0)?);
        let d = eos.delta(r0[c], r1[c])?;
        for (x, w) in q.cell(c) {
            let (x0, x1) = (a0.eval(x), a1.eval(x));
            lhs += w * 0.5 * (r1[c] * vec3::dot(&x1, &x1) - r0[c] * vec3::dot(&x0, &x0));
            let mut m = vec3::scale(r1[c], &x1);
            vec3::axpy(-r0[c], &x0, &mut m);
            rhs += w * vec3::dot(&m, &vec3::add(&x0, &x1)) / 2.0;
            rhs -= w * (r1[c] - r0[c]) * (0.5 * vec3::dot(&x0, &x1) - d);
        }
    }
    Ok((lhs - rhs).abs())
}
