//! Balance-law functionals of discrete states.

use std::collections::BTreeMap;

use faer::Mat;

use crate::error::{Error, Result};
use crate::fem::{Affine, FeFunction, Functional};
use crate::forms::{self, CurlSpaces};
use crate::sparse::{self, DenseLu};
use crate::stepper::{Discretization, Physics, State};
use crate::vec3;

/// Relative tolerance on the cell divergences accepted by the vector
/// potential solve.
const DIV_TOL: f64 = 1e-10;

/// Per-step record written to the diagnostics CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub cross_helicity: f64,
    /// `<A, B>` in 3D; recorded as 0 in 2D, where it is preserved trivially.
    pub magnetic_helicity: f64,
    pub div_b_l2: f64,
    /// Residual of the discrete energy identity for the step ending at `t`
    /// (0 for the initial record).
    pub energy_residual: f64,
    pub newton_iters: usize,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str =
        "t,mass,energy,cross_helicity,magnetic_helicity,div_b_l2,energy_residual,newton_iters";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            self.t,
            self.mass,
            self.energy,
            self.cross_helicity,
            self.magnetic_helicity,
            self.div_b_l2,
            self.energy_residual,
            self.newton_iters
        )
    }

    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 8 {
            return Err(Error::InvalidInput(format!("expected 8 fields, got {}: {line}", fields.len())));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad number {:?} in {line}", fields[i])))
        };
        Ok(DiagnosticsRecord {
            t: num(0)?,
            mass: num(1)?,
            energy: num(2)?,
            cross_helicity: num(3)?,
            magnetic_helicity: num(4)?,
            div_b_l2: num(5)?,
            energy_residual: num(6)?,
            newton_iters: fields[7]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad iteration count in {line}")))?,
        })
    }
}

/// `int rho`
pub fn total_mass(rho: &FeFunction) -> f64 {
    let mesh = rho.space().mesh();
    rho.coeffs().iter().enumerate().map(|(c, r)| r * mesh.volume(c)).sum()
}

/// Kinetic, magnetic, internal and potential energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub magnetic: f64,
    pub internal: f64,
    pub potential: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.magnetic + self.internal + self.potential
    }
}

pub fn energy_parts(disc: &Discretization, physics: &Physics, state: &State) -> Result<EnergyParts> {
    let mesh = &disc.mesh;
    let q = &disc.quadrature;
    let bg = disc.background();
    let rho = state.rho.coeffs();
    let s = state.s.as_ref().map(|s| s.coeffs());
    let mut parts = EnergyParts {
        kinetic: 0.0,
        magnetic: 0.0,
        internal: 0.0,
        potential: 0.0,
    };
    for c in 0..mesh.num_cells() {
        let u = state.u.restrict(c);
        let b = state.b.restrict(c);
        for (x, w) in q.cell(c) {
            let ux = u.eval(x);
            let bx = vec3::add(&b.eval(x), &bg);
            parts.kinetic += 0.5 * w * rho[c] * vec3::dot(&ux, &ux);
            parts.magnetic += 0.5 * w * vec3::dot(&bx, &bx);
        }
        let vol = mesh.volume(c);
        parts.internal += vol * physics.eos.energy(rho[c], s.map_or(0.0, |s| s[c]))?;
        // the potential is linear, so its cell mean is the centroid value
        parts.potential += vol * rho[c] * physics.potential(&mesh.geometry(c).centroid);
    }
    Ok(parts)
}

pub fn total_energy(disc: &Discretization, physics: &Physics, state: &State) -> Result<f64> {
    Ok(energy_parts(disc, physics, state)?.total())
}

/// `int u . B` with the total field.
pub fn cross_helicity(disc: &Discretization, state: &State) -> f64 {
    let bg = disc.background();
    let mut sum = 0.0;
    for c in 0..disc.mesh.num_cells() {
        let u = state.u.restrict(c);
        let b = state.b.restrict(c);
        for (x, w) in disc.quadrature.cell(c) {
            sum += w * vec3::dot(&u.eval(x), &vec3::add(&b.eval(x), &bg));
        }
    }
    sum
}

/// `||div B||_{L2}` from the cellwise-constant divergence.
pub fn div_b_l2(b: &FeFunction) -> f64 {
    let mesh = b.space().mesh();
    (0..mesh.num_cells())
        .map(|c| {
            let d = b.restrict(c).div();
            mesh.volume(c) * d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Gauge-fixed inverse of the exact curl on divergence-free RT0 fields.
///
/// Solves `<curl A, curl C> + <grad q, C> = <B, curl C>` and
/// `<A, grad r> = 0` for `A` in NED0 and `q`, `r` continuous piecewise
/// linear with zero trace.
pub struct VectorPotentialSolver {
    lu: DenseLu,
    n_a: usize,
    curl: sparse::SparseMatrix,
    rt: std::sync::Arc<crate::fem::FeSpace>,
    ned: std::sync::Arc<crate::fem::FeSpace>,
}

impl VectorPotentialSolver {
    pub fn new(spaces: &CurlSpaces) -> Result<Self> {
        let mesh = spaces.rt.mesh();
        if mesh.dim() != 3 {
            return Err(Error::UnsupportedDimension {
                dim: mesh.dim(),
                what: "vector potential",
            });
        }
        let ned = &spaces.hspace;
        let n_a = ned.ndofs();
        let mut interior = BTreeMap::new();
        for v in 0..mesh.num_vertices() {
            if !mesh.is_boundary_vertex(v) {
                let k = interior.len();
                interior.insert(v, k);
            }
        }
        let n_q = interior.len();

        // discrete gradient: NED0 coefficients of grad lambda_v
        let mut grad = Mat::<f64>::zeros(n_a, n_q);
        for i in 0..n_a {
            let [lo, hi] = mesh.edges()[ned.dof_entity(i)].vertices;
            if let Some(&k) = interior.get(&hi) {
                grad[(i, k)] += 1.0;
            }
            if let Some(&k) = interior.get(&lo) {
                grad[(i, k)] -= 1.0;
            }
        }
        let m_ned = ned.mass_matrix().to_dense();
        let mg = &m_ned * &grad;
        let d = spaces.curl.to_dense();
        let m_rt = spaces.rt.mass_matrix().to_dense();
        let k = d.transpose() * &m_rt * &d;

        let n = n_a + n_q;
        let mut sys = Mat::<f64>::zeros(n, n);
        for i in 0..n_a {
            for j in 0..n_a {
                sys[(i, j)] = k[(i, j)];
            }
            for j in 0..n_q {
                sys[(i, n_a + j)] = mg[(i, j)];
                sys[(n_a + j, i)] = mg[(i, j)];
            }
        }
        Ok(VectorPotentialSolver {
            lu: DenseLu::new(&sys)?,
            n_a,
            curl: spaces.curl.clone(),
            rt: spaces.rt.clone(),
            ned: ned.clone(),
        })
    }

    /// The gauge-fixed `A` with `curl A = B`.
    pub fn solve(&self, b: &FeFunction) -> Result<FeFunction> {
        if !std::sync::Arc::ptr_eq(b.space(), &self.rt) {
            return Err(Error::SpaceMismatch("field is not in the solver's RT0 space".into()));
        }
        let norm = div_b_l2(b);
        let scale = b.inner(b).sqrt().max(1.0);
        if norm > DIV_TOL * scale {
            return Err(Error::NotDivergenceFree { norm });
        }
        let mb = self.rt.mass_matrix().mul_vec(b.coeffs());
        let mut rhs = self.curl.transpose_mul_vec(&mb);
        rhs.resize(self.lu.dim(), 0.0);
        let mut x = self.lu.solve(&rhs);
        x.truncate(self.n_a);
        FeFunction::new(&self.ned, x)
    }
}

/// The discrete vector potential of an RT0 field on a 3D mesh.
pub fn vector_potential(disc: &Discretization, b: &FeFunction) -> Result<FeFunction> {
    disc.vector_potential_solver()?.solve(b)
}

/// `<A, B>` with `curl A = B`, for the RT0 fluctuation field (3D only).
pub fn magnetic_helicity(disc: &Discretization, b: &FeFunction) -> Result<f64> {
    let a = vector_potential(disc, b)?;
    Ok(disc.aux.ned_rt_product(a.coeffs(), b.coeffs()))
}

/// `d(u, u)` for the velocity `u`.
pub fn dissipation_velocity(disc: &Discretization, physics: &Physics, u: &[Affine]) -> f64 {
    if !physics.is_viscous() {
        return 0.0;
    }
    let mut ell = Functional::zeros(disc.mesh.num_cells());
    forms::add_viscosity(&mut ell, &disc.mesh, u, physics.mu, physics.lambda, 1.0);
    ell.apply(u)
}

/// `e_h(B, B) = -nu ||curl_h B||^2` for the total field with fluctuation `b`.
pub fn dissipation_magnetic(disc: &Discretization, physics: &Physics, b: &[f64]) -> f64 {
    if physics.nu == 0.0 {
        return 0.0;
    }
    let j = disc.aux.weak_curl_total(b);
    let mj = disc.aux.spaces.jspace.mass_matrix().mul_vec(&j);
    -physics.nu * sparse::dot(&j, &mj)
}

/// `(E1 - E0)/dt - d(u_mid, u_mid) - e_h(B_mid, B_mid)`.
pub fn energy_identity_residual(
    disc: &Discretization,
    physics: &Physics,
    s0: &State,
    s1: &State,
    dt: f64,
) -> Result<f64> {
    let e0 = total_energy(disc, physics, s0)?;
    let e1 = total_energy(disc, physics, s1)?;
    let (rate, _) = dissipation_rate(disc, physics, s0, s1);
    Ok((e1 - e0) / dt - rate)
}

/// `d(u_mid, u_mid) + e_h(B_mid, B_mid)` and its magnetic part.
pub fn dissipation_rate(disc: &Discretization, physics: &Physics, s0: &State, s1: &State) -> (f64, f64) {
    let u0 = disc.velocity.restrict_all(s0.u.coeffs());
    let u1 = disc.velocity.restrict_all(s1.u.coeffs());
    let umid: Vec<Affine> = u0.iter().zip(&u1).map(|(a, b)| Affine::combine(0.5, a, 0.5, b)).collect();
    let bmid: Vec<f64> = s0.b.coeffs().iter().zip(s1.b.coeffs()).map(|(a, b)| 0.5 * (a + b)).collect();
    let mag = dissipation_magnetic(disc, physics, &bmid);
    (dissipation_velocity(disc, physics, &umid) + mag, mag)
}

/// Helicity rate predicted by the scheme,
/// `2 e_h(B_mid, pi A_mid) = -2 nu <curl_h B_mid, curl_h pi A_mid>`.
pub fn helicity_rate(disc: &Discretization, physics: &Physics, s0: &State, s1: &State) -> Result<f64> {
    if physics.nu == 0.0 {
        return Ok(0.0);
    }
    let a0 = vector_potential(disc, &s0.b)?;
    let a1 = vector_potential(disc, &s1.b)?;
    let amid: Vec<f64> = a0.coeffs().iter().zip(a1.coeffs()).map(|(a, b)| 0.5 * (a + b)).collect();
    let rt = disc.rt();
    let pa = FeFunction::new(rt, rt.solve_mass(&crate::fem::mixed_mass(rt, &disc.aux.spaces.hspace).mul_vec(&amid)))?;
    let bmid: Vec<f64> = s0.b.coeffs().iter().zip(s1.b.coeffs()).map(|(a, b)| 0.5 * (a + b)).collect();
    let jb = disc.aux.weak_curl_total(&bmid);
    let ja = crate::fem::weak_curl(&pa, &disc.aux.spaces.jspace)?;
    let m = disc.aux.spaces.jspace.mass_matrix().mul_vec(ja.coeffs());
    Ok(-2.0 * physics.nu * sparse::dot(&jb, &m))
}

/// L2 deviation of the density from its horizontal average. Cells are
/// grouped by grid row and triangle orientation, so that a layered field
/// has zero amplitude.
pub fn interface_amplitude(rho: &FeFunction) -> f64 {
    let mesh = rho.space().mesh();
    let r = rho.coeffs();
    let mut groups: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for c in 0..mesh.num_cells() {
        let key = (mesh.cell_layer(c), mesh.cell_box(c).1);
        let e = groups.entry(key).or_insert((0.0, 0.0));
        e.0 += mesh.volume(c) * r[c];
        e.1 += mesh.volume(c);
    }
    (0..mesh.num_cells())
        .map(|c| {
            let (m, v) = groups[&(mesh.cell_layer(c), mesh.cell_box(c).1)];
            let d = r[c] - m / v;
            mesh.volume(c) * d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Every functional of `state`. `prev` is the previous state and step for
/// the energy-identity residual. With `helicity` false the 3D magnetic
/// helicity is skipped and recorded as NaN.
pub fn record(
    disc: &Discretization,
    physics: &Physics,
    state: &State,
    prev: Option<(&State, f64)>,
    newton_iters: usize,
    helicity: bool,
) -> Result<DiagnosticsRecord> {
    let magnetic_helicity = match (disc.mesh.dim(), helicity) {
        (3, true) => magnetic_helicity(disc, &state.b)?,
        (3, false) => f64::NAN,
        _ => 0.0,
    };
    let energy_residual = match prev {
        Some((p, dt)) => energy_identity_residual(disc, physics, p, state, dt)?,
        None => 0.0,
    };
    Ok(DiagnosticsRecord {
        t: state.t,
        mass: total_mass(&state.rho),
        energy: total_energy(disc, physics, state)?,
        cross_helicity: cross_helicity(disc, state),
        magnetic_helicity,
        div_b_l2: div_b_l2(&state.b),
        energy_residual,
        newton_iters,
    })
}
