//! Trilinear and bilinear forms of the scheme.
//!
//! The `add_*` functions accumulate a form with its last argument left free
//! into a [`Functional`] (or, for piecewise-constant test functions, into a
//! per-cell vector). The `form_*` functions evaluate the same forms on
//! finite element functions.
//!
//! Jumps across an interior facet are taken from its first cell to its
//! second, `[[f]] = f_1 - f_2`, against the facet normal `n_1`.

use std::f64::consts::FRAC_1_PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{self, Affine, Family, FeFunction, FeSpace, Functional};
use crate::mesh::Mesh;
use crate::quadrature::MeshQuadrature;
use crate::sparse::SparseMatrix;
use crate::vec3::{self, Vec3};

/// Upwinding parameters: the advecting velocity and the arctan smoothing.
#[derive(Debug, Clone, Copy)]
pub struct Upwind<'a> {
    pub velocity: &'a [Affine],
    pub smoothing: f64,
}

/// `(1/pi) arctan(un / smoothing)`, the upwind weight with the normal
/// velocity already cancelled.
#[inline]
pub fn upwind_weight(un: f64, smoothing: f64) -> f64 {
    FRAC_1_PI * (un / smoothing).atan()
}

/// `int_e u . n_1`, averaging the traces of both sides.
#[inline]
pub fn facet_flux(mesh: &Mesh, f: usize, u: &[Affine]) -> f64 {
    let facet = mesh.facet(f);
    let x = &facet.centroid;
    let mut un = vec3::dot(&u[facet.c0].eval(x), &facet.normal);
    if let Some(c1) = facet.c1 {
        un = 0.5 * (un + vec3::dot(&u[c1].eval(x), &facet.normal));
    }
    un * facet.measure
}

fn facet_weight(mesh: &Mesh, f: usize, upwind: Option<Upwind<'_>>) -> f64 {
    match upwind {
        Some(up) => upwind_weight(facet_flux(mesh, f, up.velocity) / mesh.facet(f).measure, up.smoothing),
        None => 0.0,
    }
}

/// `scale * sum_K int_K w . (v.grad u - u.grad v)` with `v` free.
pub fn add_advection_volume(ell: &mut Functional, q: &MeshQuadrature, w: &[Affine], u: &[Affine], scale: f64) {
    for c in 0..w.len() {
        let mut grad = [[0.0; 3]; 3];
        let mu = u[c].grad();
        for (x, wt) in q.cell(c) {
            let wx = w[c].eval(x);
            let ux = u[c].eval(x);
            let s = scale * wt;
            ell.add_value(c, s, &vec3::mat_t_vec(mu, &wx), x);
            for i in 0..3 {
                vec3::axpy(-s * wx[i], &ux, &mut grad[i]);
            }
        }
        ell.add_gradient(c, &grad);
    }
}

/// Interior-facet part of the discontinuous advection form,
/// `scale * sum_e int_e n x ({w} + alpha_e [[w]]) . [[u x v]]` with `v` free.
pub fn add_advection_facets(
    ell: &mut Functional,
    mesh: &Mesh,
    q: &MeshQuadrature,
    w: &[Affine],
    u: &[Affine],
    upwind: Option<Upwind<'_>>,
    scale: f64,
) {
    for (f, facet) in mesh.interior_facets() {
        let c1 = facet.c1.unwrap();
        let c0 = facet.c0;
        let alpha = facet_weight(mesh, f, upwind);
        for (x, wt) in q.facet(f) {
            let w0 = w[c0].eval(x);
            let w1 = w[c1].eval(x);
            let mut avg = vec3::scale(0.5 + alpha, &w0);
            vec3::axpy(0.5 - alpha, &w1, &mut avg);
            let nw = vec3::cross(&facet.normal, &avg);
            // a . (u x v) = v . (a x u)
            ell.add_value(c0, scale * wt, &vec3::cross(&nw, &u[c0].eval(x)), x);
            ell.add_value(c1, -scale * wt, &vec3::cross(&nw, &u[c1].eval(x)), x);
        }
    }
}

/// `scale * b~_h(f, g, v)` for piecewise constants `f`, `g`, with `v` free.
pub fn add_bh_velocity(
    ell: &mut Functional,
    mesh: &Mesh,
    f: &[f64],
    g: &[f64],
    upwind: Option<Upwind<'_>>,
    scale: f64,
) {
    for (e, facet) in mesh.interior_facets() {
        let (c0, c1) = (facet.c0, facet.c1.unwrap());
        let df = f[c0] - f[c1];
        if df == 0.0 {
            continue;
        }
        let beta = facet_weight(mesh, e, upwind);
        let k = df * (0.5 * (g[c0] + g[c1]) + beta * (g[c0] - g[c1]));
        let s = 0.5 * scale * k * facet.measure;
        ell.add_value(c0, s, &facet.normal, &facet.centroid);
        ell.add_value(c1, s, &facet.normal, &facet.centroid);
    }
}

/// `out[K] += scale * b~_h(1_K, g, u)`: the upwinded facet fluxes of `g`.
pub fn add_bh_cells(out: &mut [f64], mesh: &Mesh, g: &[f64], u: &[Affine], upwind: Option<Upwind<'_>>, scale: f64) {
    for (e, facet) in mesh.interior_facets() {
        let (c0, c1) = (facet.c0, facet.c1.unwrap());
        let flux = facet_flux(mesh, e, u);
        let beta = facet_weight(mesh, e, upwind);
        let k = scale * flux * (0.5 * (g[c0] + g[c1]) + beta * (g[c0] - g[c1]));
        out[c0] += k;
        out[c1] -= k;
    }
}

/// `scale * d(u, v)` with `v` free.
pub fn add_viscosity(ell: &mut Functional, mesh: &Mesh, u: &[Affine], mu: f64, lambda: f64, scale: f64) {
    for (c, uc) in u.iter().enumerate() {
        let vol = mesh.volume(c);
        let m = uc.grad();
        let tr = vec3::trace(m);
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = -scale * vol * mu * m[i][j];
            }
            g[i][i] -= scale * vol * (lambda + mu) * tr;
        }
        ell.add_gradient(c, &g);
    }
}

/// `scale * <a x b, phi>` with `phi` free.
pub fn add_cross(ell: &mut Functional, q: &MeshQuadrature, a: &[Affine], b: &[Affine], scale: f64) {
    for c in 0..a.len() {
        for (x, wt) in q.cell(c) {
            let v = vec3::cross(&a[c].eval(x), &b[c].eval(x));
            ell.add_value(c, scale * wt, &v, x);
        }
    }
}

/// `scale * <g, phi>` for a piecewise-affine `g`, with `phi` free.
pub fn add_mass(ell: &mut Functional, q: &MeshQuadrature, g: &[Affine], scale: f64) {
    for (c, gc) in g.iter().enumerate() {
        for (x, wt) in q.cell(c) {
            ell.add_value(c, scale * wt, &gc.eval(x), x);
        }
    }
}

fn expect_family(f: &FeFunction, families: &[Family], what: &str) -> Result<()> {
    if families.contains(&f.space().family()) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch(format!(
            "{what} must lie in one of {families:?}, got {:?}",
            f.space().family()
        )))
    }
}

const VELOCITY: &[Family] = &[Family::Cg1Vector, Family::Rt0];

/// `a(w, u, v) = -int w . (u.grad v - v.grad u)`.
pub fn form_a(w: &FeFunction, u: &FeFunction, v: &FeFunction) -> Result<f64> {
    for (f, name) in [(w, "w"), (u, "u"), (v, "v")] {
        expect_family(f, &[Family::Cg1Vector], name)?;
    }
    let space = v.space();
    let mut ell = Functional::zeros(space.mesh().num_cells());
    add_advection_volume(&mut ell, space.quadrature(), &w.space().restrict_all(w.coeffs()), &u.space().restrict_all(u.coeffs()), 1.0);
    Ok(ell.apply(&space.restrict_all(v.coeffs())))
}

/// The discontinuous advection form `a_h(U; w, u, v)` for RT0 velocities.
pub fn form_ah(adv: &FeFunction, w: &FeFunction, u: &FeFunction, v: &FeFunction, smoothing: f64) -> Result<f64> {
    for (f, name) in [(adv, "U"), (u, "u"), (v, "v")] {
        expect_family(f, VELOCITY, name)?;
    }
    let space = v.space();
    let mesh = space.mesh();
    let q = space.quadrature();
    let wa = w.space().restrict_all(w.coeffs());
    let ua = u.space().restrict_all(u.coeffs());
    let adv = adv.space().restrict_all(adv.coeffs());
    let mut ell = Functional::zeros(mesh.num_cells());
    add_advection_volume(&mut ell, q, &wa, &ua, 1.0);
    let upwind = Upwind {
        velocity: &adv,
        smoothing,
    };
    add_advection_facets(&mut ell, mesh, q, &wa, &ua, Some(upwind), 1.0);
    Ok(ell.apply(&space.restrict_all(v.coeffs())))
}

/// `b_h(f, g, u) = sum_e int_e u . [[f]] {g}` for piecewise constants.
pub fn form_bh(f: &FeFunction, g: &FeFunction, u: &FeFunction) -> Result<f64> {
    bh(f, g, u, None)
}

/// `b_h` plus the upwind penalty driven by `adv`.
pub fn form_bh_upwind(adv: &FeFunction, f: &FeFunction, g: &FeFunction, v: &FeFunction, smoothing: f64) -> Result<f64> {
    expect_family(adv, VELOCITY, "advecting velocity")?;
    let adv = adv.space().restrict_all(adv.coeffs());
    bh(
        f,
        g,
        v,
        Some(Upwind {
            velocity: &adv,
            smoothing,
        }),
    )
}

fn bh(f: &FeFunction, g: &FeFunction, v: &FeFunction, upwind: Option<Upwind<'_>>) -> Result<f64> {
    expect_family(f, &[Family::Dg0], "f")?;
    expect_family(g, &[Family::Dg0], "g")?;
    expect_family(v, VELOCITY, "v")?;
    let space = v.space();
    let mut ell = Functional::zeros(space.mesh().num_cells());
    add_bh_velocity(&mut ell, space.mesh(), f.coeffs(), g.coeffs(), upwind, 1.0);
    Ok(ell.apply(&space.restrict_all(v.coeffs())))
}

/// `d(u, v) = -int mu grad u : grad v + (lambda + mu) div u div v`.
pub fn form_d(u: &FeFunction, v: &FeFunction, mu: f64, lambda: f64) -> Result<f64> {
    expect_family(u, VELOCITY, "u")?;
    expect_family(v, VELOCITY, "v")?;
    let space = v.space();
    let mut ell = Functional::zeros(space.mesh().num_cells());
    add_viscosity(&mut ell, space.mesh(), &u.space().restrict_all(u.coeffs()), mu, lambda, 1.0);
    Ok(ell.apply(&space.restrict_all(v.coeffs())))
}

/// `e_h(B, C) = -nu <curl_h B, curl_h C>`.
pub fn form_eh(b: &FeFunction, c: &FeFunction, nu: f64, curl_space: &Arc<FeSpace>) -> Result<f64> {
    if nu == 0.0 {
        return Ok(0.0);
    }
    let jb = fem::weak_curl(b, curl_space)?;
    let jc = fem::weak_curl(c, curl_space)?;
    let m = curl_space.mass_matrix().mul_vec(jc.coeffs());
    Ok(-nu * crate::sparse::dot(jb.coeffs(), &m))
}

/// The spaces of the discrete de Rham sequence used by the magnetic part.
pub struct CurlSpaces {
    pub rt: Arc<FeSpace>,
    /// NED0; holds H, U and alpha.
    pub hspace: Arc<FeSpace>,
    /// Holds J and E: NED0 in 3D, continuous scalars in 2D.
    pub jspace: Arc<FeSpace>,
    /// Exact curl from `jspace` into `rt`.
    pub curl: SparseMatrix,
}

impl CurlSpaces {
    pub fn new(rt: Arc<FeSpace>) -> Result<Self> {
        let mesh = rt.mesh().clone();
        let q = rt.quadrature().clone();
        let hspace = FeSpace::with_quadrature(mesh.clone(), Family::Ned0, q.clone())?;
        let jspace = if mesh.dim() == 3 {
            hspace.clone()
        } else {
            FeSpace::with_quadrature(mesh, Family::Cg1Scalar, q)?
        };
        let curl = fem::curl_matrix(&jspace, &rt)?;
        Ok(CurlSpaces {
            rt,
            hspace,
            jspace,
            curl,
        })
    }
}

/// Precomputed operators for the auxiliary chain with a given velocity
/// space and constant background field.
pub struct AuxOperators {
    pub spaces: CurlSpaces,
    pub velocity: Arc<FeSpace>,
    pub background: Vec3,
    m_h_vel: SparseMatrix,
    m_h_rt: SparseMatrix,
    bg_h: Vec<f64>,
    bg_j: Vec<f64>,
}

impl AuxOperators {
    pub fn new(spaces: CurlSpaces, velocity: Arc<FeSpace>, background: Vec3) -> Self {
        let m_h_vel = fem::mixed_mass(&spaces.hspace, &velocity);
        let m_h_rt = fem::mixed_mass(&spaces.hspace, &spaces.rt);
        let mesh = spaces.rt.mesh();
        let q = spaces.rt.quadrature();
        let mut ell_h = Functional::zeros(mesh.num_cells());
        let mut ell_j = Functional::zeros(mesh.num_cells());
        for c in 0..mesh.num_cells() {
            for (x, w) in q.cell(c) {
                ell_h.add_value(c, *w, &background, x);
                ell_j.add_curl(c, *w, &background);
            }
        }
        let bg_h = ell_h.assemble(&spaces.hspace);
        let bg_j = ell_j.assemble(&spaces.jspace);
        AuxOperators {
            spaces,
            velocity,
            background,
            m_h_vel,
            m_h_rt,
            bg_h,
            bg_j,
        }
    }

    /// `<alpha, v>` for every velocity basis function `v`.
    pub fn alpha_load(&self, alpha: &[f64]) -> Vec<f64> {
        self.m_h_vel.transpose_mul_vec(alpha)
    }

    /// `<A, B>` for `A` in the NED0 space and `B` in RT0.
    pub fn ned_rt_product(&self, a: &[f64], b: &[f64]) -> f64 {
        crate::sparse::dot(a, &self.m_h_rt.mul_vec(b))
    }

    /// Weak curl of the total field (fluctuation `b` plus background).
    pub fn weak_curl_total(&self, b: &[f64]) -> Vec<f64> {
        let sp = &self.spaces;
        let mb = sp.rt.mass_matrix().mul_vec(b);
        let mut rhs = sp.curl.transpose_mul_vec(&mb);
        for (r, g) in rhs.iter_mut().zip(&self.bg_j) {
            *r += g;
        }
        sp.jspace.solve_mass(&rhs)
    }
}

/// Auxiliary fields at the midpoint.
#[derive(Debug, Clone)]
pub struct AuxChain {
    pub j: FeFunction,
    pub h: FeFunction,
    pub u: FeFunction,
    pub e: FeFunction,
    pub alpha: FeFunction,
}

/// Solves the defining relations of `J, H, U, E, alpha` for the RT0
/// fluctuation `b_mid` (background added) and the velocity `u_mid`.
pub fn build_aux_chain(ops: &AuxOperators, b_mid: &[f64], u_mid: &[f64]) -> Result<AuxChain> {
    let sp = &ops.spaces;
    let mesh = sp.rt.mesh();
    let q = sp.rt.quadrature();
    let j = FeFunction::new(&sp.jspace, ops.weak_curl_total(b_mid))?;

    let mut rhs_h = ops.m_h_rt.mul_vec(b_mid);
    for (r, b) in rhs_h.iter_mut().zip(&ops.bg_h) {
        *r += b;
    }
    let h = FeFunction::new(&sp.hspace, sp.hspace.solve_mass(&rhs_h))?;
    let u = FeFunction::new(&sp.hspace, sp.hspace.solve_mass(&ops.m_h_vel.mul_vec(u_mid)))?;

    let ha = sp.hspace.restrict_all(h.coeffs());
    let ua = sp.hspace.restrict_all(u.coeffs());
    let ja = sp.jspace.restrict_all(j.coeffs());

    let mut ell = Functional::zeros(mesh.num_cells());
    add_cross(&mut ell, q, &ua, &ha, -1.0);
    let e = FeFunction::new(&sp.jspace, sp.jspace.solve_mass(&ell.assemble(&sp.jspace)))?;

    ell.clear();
    add_cross(&mut ell, q, &ja, &ha, -1.0);
    let alpha = FeFunction::new(&sp.hspace, sp.hspace.solve_mass(&ell.assemble(&sp.hspace)))?;

    Ok(AuxChain { j, h, u, e, alpha })
}

/// `c_h(w, B, v) = <w, curl pi(pi B x pi v)>` assembled directly by
/// composing projections; `w` may come from any space.
pub fn form_ch_direct(w: &FeFunction, b: &FeFunction, v: &FeFunction, spaces: &CurlSpaces) -> Result<f64> {
    expect_family(b, &[Family::Rt0], "B")?;
    let hb = fem::project(b, &spaces.hspace)?;
    let hv = fem::project(v, &spaces.hspace)?;
    let mesh = spaces.rt.mesh();
    let mut ell = Functional::zeros(mesh.num_cells());
    add_cross(
        &mut ell,
        spaces.rt.quadrature(),
        &spaces.hspace.restrict_all(hb.coeffs()),
        &spaces.hspace.restrict_all(hv.coeffs()),
        1.0,
    );
    let x = spaces.jspace.solve_mass(&ell.assemble(&spaces.jspace));
    let curl = FeFunction::new(&spaces.rt, spaces.curl.mul_vec(&x))?;
    Ok(w.inner(&curl))
}
