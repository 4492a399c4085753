use super::{Discretization, Physics, State};
use crate::error::{Error, Result};
use crate::fem::{Affine, FeFunction, Functional};
use crate::forms::{self, Upwind};
use crate::vec3;

/// The nonlinear system of one step from a fixed previous state.
///
/// Unknowns and residual blocks are ordered `[u | rho | s | B]`; each block
/// is the corresponding equation tested against the basis of its space.
pub struct StepProblem<'a> {
    disc: &'a Discretization,
    physics: &'a Physics,
    prev: &'a State,
    dt: f64,
    u0: Vec<Affine>,
    phi_avg: Vec<f64>,
    nu: usize,
    nr: usize,
    ns: usize,
    nb: usize,
}

/// Piecewise-constant Bernoulli-type potentials of the momentum equation.
#[derive(Debug, Clone)]
pub struct Theta {
    pub theta1: Vec<f64>,
    pub theta2: Option<Vec<f64>>,
}

struct Fluxes {
    rho: Vec<f64>,
    s: Option<Vec<f64>>,
    /// `curl (E + nu J)` as RT0 coefficients.
    curl_e: Vec<f64>,
}

impl<'a> StepProblem<'a> {
    pub fn new(disc: &'a Discretization, physics: &'a Physics, prev: &'a State, dt: f64) -> Result<Self> {
        prev.validate()?;
        if physics.has_entropy() != prev.s.is_some() {
            return Err(Error::InvalidState("entropy field presence does not match the variant".into()));
        }
        let mesh = &disc.mesh;
        let u0 = disc.velocity.restrict_all(prev.u.coeffs());
        let phi_avg = (0..mesh.num_cells())
            .map(|c| physics.potential(&mesh.geometry(c).centroid))
            .collect();
        Ok(StepProblem {
            disc,
            physics,
            prev,
            dt,
            u0,
            phi_avg,
            nu: disc.velocity.ndofs(),
            nr: disc.scalar.ndofs(),
            ns: if physics.has_entropy() { disc.scalar.ndofs() } else { 0 },
            nb: disc.rt().ndofs(),
        })
    }

    pub fn len(&self) -> usize {
        self.nu + self.nr + self.ns + self.nb
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn split<'x>(&self, x: &'x [f64]) -> (&'x [f64], &'x [f64], Option<&'x [f64]>, &'x [f64]) {
        let (u, rest) = x.split_at(self.nu);
        let (r, rest) = rest.split_at(self.nr);
        let (s, b) = rest.split_at(self.ns);
        (u, r, if self.ns > 0 { Some(s) } else { None }, b)
    }

    /// Cell averages defining the potentials for the candidate `u1`, `rho1`, `s1`.
    pub fn theta(&self, u1: &[Affine], rho1: &[f64], s1: Option<&[f64]>) -> Result<Theta> {
        let mesh = &self.disc.mesh;
        let q = &self.disc.quadrature;
        let eos = &self.physics.eos;
        let rho0 = self.prev.rho.coeffs();
        let s0 = self.prev.s.as_ref().map(|s| s.coeffs());
        let n = mesh.num_cells();
        let mut theta1 = vec![0.0; n];
        let mut theta2 = s1.map(|_| vec![0.0; n]);
        for c in 0..n {
            let mut uu = 0.0;
            for (x, w) in q.cell(c) {
                uu += w * vec3::dot(&self.u0[c].eval(x), &u1[c].eval(x));
            }
            let kinetic = 0.5 * uu / mesh.volume(c);
            match (s0, s1) {
                (Some(s0), Some(s1)) => {
                    let d1 = 0.5
                        * (eos.delta1(rho0[c], rho1[c], s0[c])? + eos.delta1(rho0[c], rho1[c], s1[c])?);
                    theta1[c] = kinetic - self.phi_avg[c] - d1;
                    let d2 = 0.5 * (eos.delta2(s0[c], s1[c], rho0[c])? + eos.delta2(s0[c], s1[c], rho1[c])?);
                    theta2.as_mut().unwrap()[c] = -d2;
                }
                _ => {
                    theta1[c] = kinetic - self.phi_avg[c] - eos.delta(rho0[c], rho1[c])?;
                }
            }
        }
        Ok(Theta { theta1, theta2 })
    }

    /// Writes the residual at `x` into `out`.
    pub fn residual(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.assemble(x, out).map(|_| ())
    }

    fn assemble(&self, x: &[f64], out: &mut [f64]) -> Result<Fluxes> {
        assert_eq!(x.len(), self.len());
        assert_eq!(out.len(), self.len());
        let disc = self.disc;
        let mesh = &disc.mesh;
        let q = &disc.quadrature;
        let ph = self.physics;
        let dt = self.dt;
        let (u1, rho1, s1, b1) = self.split(x);
        if let Some((c, r)) = rho1.iter().enumerate().find(|(_, r)| !(**r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidIterate(format!("density {r} in cell {c}")));
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidIterate(format!("non-finite unknown {v}")));
        }
        let rho0 = self.prev.rho.coeffs();
        let u0c = self.prev.u.coeffs();
        let b0 = self.prev.b.coeffs();

        let u1a = disc.velocity.restrict_all(u1);
        let umid: Vec<Affine> = self.u0.iter().zip(&u1a).map(|(a, b)| Affine::combine(0.5, a, 0.5, b)).collect();
        let rho_mid: Vec<f64> = rho0.iter().zip(rho1).map(|(a, b)| 0.5 * (a + b)).collect();
        let umid_c: Vec<f64> = u0c.iter().zip(u1).map(|(a, b)| 0.5 * (a + b)).collect();
        let bmid: Vec<f64> = b0.iter().zip(b1).map(|(a, b)| 0.5 * (a + b)).collect();

        let aux = forms::build_aux_chain(&disc.aux, &bmid, &umid_c)?;
        let alpha = disc.aux.spaces.hspace.restrict_all(aux.alpha.coeffs());
        let theta = self.theta(&u1a, rho1, s1)?;
        let upwind = ph.upwinding.then_some(Upwind {
            velocity: &umid,
            smoothing: ph.upwind_smoothing,
        });

        // Momentum.
        let mut ell = Functional::zeros(mesh.num_cells());
        let mut rhou_mid = Vec::with_capacity(mesh.num_cells());
        for c in 0..mesh.num_cells() {
            let w = Affine::combine(0.5 * rho0[c], &self.u0[c], 0.5 * rho1[c], &u1a[c]);
            let mut grad = [[0.0; 3]; 3];
            let mm = umid[c].grad();
            for (xq, wq) in q.cell(c) {
                let u0x = self.u0[c].eval(xq);
                let u1x = u1a[c].eval(xq);
                let wx = w.eval(xq);
                let umx = umid[c].eval(xq);
                let mut g = vec3::scale(rho1[c] / dt, &u1x);
                vec3::axpy(-rho0[c] / dt, &u0x, &mut g);
                vec3::axpy(1.0, &alpha[c].eval(xq), &mut g);
                vec3::axpy(1.0, &vec3::mat_t_vec(mm, &wx), &mut g);
                ell.add_value(c, *wq, &g, xq);
                for i in 0..3 {
                    vec3::axpy(-wq * wx[i], &umx, &mut grad[i]);
                }
            }
            ell.add_gradient(c, &grad);
            rhou_mid.push(w);
        }
        if ph.is_viscous() {
            forms::add_viscosity(&mut ell, mesh, &umid, ph.mu, ph.lambda, -1.0);
        } else {
            forms::add_advection_facets(&mut ell, mesh, q, &rhou_mid, &umid, upwind, 1.0);
        }
        forms::add_bh_velocity(&mut ell, mesh, &theta.theta1, &rho_mid, upwind, 1.0);
        let s_mid: Option<Vec<f64>> = match (&self.prev.s, s1) {
            (Some(s0), Some(s1)) => Some(s0.coeffs().iter().zip(s1).map(|(a, b)| 0.5 * (a + b)).collect()),
            _ => None,
        };
        if let (Some(t2), Some(sm)) = (&theta.theta2, &s_mid) {
            forms::add_bh_velocity(&mut ell, mesh, t2, sm, upwind, 1.0);
        }
        let (out_u, rest) = out.split_at_mut(self.nu);
        out_u.fill(0.0);
        ell.assemble_into(&disc.velocity, out_u);

        // Density and entropy.
        let (out_r, rest) = rest.split_at_mut(self.nr);
        let mut rho_flux = vec![0.0; self.nr];
        forms::add_bh_cells(&mut rho_flux, mesh, &rho_mid, &umid, upwind, 1.0);
        for c in 0..self.nr {
            out_r[c] = mesh.volume(c) * (rho1[c] - rho0[c]) / dt + rho_flux[c];
        }
        let (out_s, out_b) = rest.split_at_mut(self.ns);
        let s_flux = match (&self.prev.s, s1, &s_mid) {
            (Some(s0), Some(s1), Some(sm)) => {
                let s0 = s0.coeffs();
                let mut flux = vec![0.0; self.ns];
                forms::add_bh_cells(&mut flux, mesh, sm, &umid, upwind, 1.0);
                for c in 0..self.ns {
                    out_s[c] = mesh.volume(c) * (s1[c] - s0[c]) / dt + flux[c];
                }
                Some(flux)
            }
            _ => None,
        };

        // Magnetic field: (B1 - B0)/dt + curl(E + nu J) = 0 in RT0.
        let mut ej = aux.e.coeffs().to_vec();
        if ph.nu != 0.0 {
            for (e, j) in ej.iter_mut().zip(aux.j.coeffs()) {
                *e += ph.nu * j;
            }
        }
        let curl_e = disc.aux.spaces.curl.mul_vec(&ej);
        let strong: Vec<f64> = (0..self.nb).map(|i| (b1[i] - b0[i]) / dt + curl_e[i]).collect();
        disc.rt().mass_matrix().mul_vec_into(&strong, out_b);

        Ok(Fluxes {
            rho: rho_flux,
            s: s_flux,
            curl_e,
        })
    }

    /// Builds the new state from a converged iterate. Density, entropy and
    /// magnetic field are recomputed from the fluxes at that iterate, so
    /// that mass and the cell divergence of B are carried over to
    /// round-off regardless of the solver tolerance.
    pub fn finalize(&self, x: &[f64]) -> Result<State> {
        let mut scratch = vec![0.0; self.len()];
        let fluxes = self.assemble(x, &mut scratch)?;
        let (u1, _, _, _) = self.split(x);
        let mesh = &self.disc.mesh;
        let rho0 = self.prev.rho.coeffs();
        let rho: Vec<f64> = (0..self.nr)
            .map(|c| rho0[c] - self.dt * fluxes.rho[c] / mesh.volume(c))
            .collect();
        let s = match (&self.prev.s, &fluxes.s) {
            (Some(s0), Some(fs)) => {
                let s0 = s0.coeffs();
                let v = (0..self.ns).map(|c| s0[c] - self.dt * fs[c] / mesh.volume(c)).collect();
                Some(FeFunction::new(&self.disc.scalar, v)?)
            }
            _ => None,
        };
        let b0 = self.prev.b.coeffs();
        let b: Vec<f64> = (0..self.nb).map(|i| b0[i] - self.dt * fluxes.curl_e[i]).collect();
        let state = State {
            t: self.prev.t + self.dt,
            u: FeFunction::new(&self.disc.velocity, u1.to_vec())?,
            rho: FeFunction::new(&self.disc.scalar, rho)?,
            s,
            b: FeFunction::new(self.disc.rt(), b)?,
        };
        state.validate()?;
        Ok(state)
    }
}
