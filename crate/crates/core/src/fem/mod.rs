//! Lowest-order finite element spaces on simplicial meshes.
//!
//! Every local basis function, and every finite element function restricted
//! to a cell, is an affine vector field `x -> c + M x`. Scalar families
//! store their value in one component: DG0 in component 0, the continuous
//! scalar family in component 2 so that planar curls and cross products
//! follow from the three-dimensional formulas.

mod functional;
mod ops;

pub use functional::{CellCovector, Functional};
pub use ops::{curl_matrix, exact_curl, l2_project, mixed_mass, project, weak_curl};

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::MeshQuadrature;
use crate::sparse::{SparseMatrix, SpdSolver};
use crate::vec3::{self, Mat3, Vec3, ZERO, ZERO_MAT};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Affine {
    pub c: Vec3,
    pub m: Mat3,
}

impl Affine {
    pub const ZERO: Affine = Affine { c: ZERO, m: ZERO_MAT };

    pub fn constant(c: Vec3) -> Self {
        Affine { c, m: ZERO_MAT }
    }

    #[inline]
    pub fn eval(&self, x: &Vec3) -> Vec3 {
        vec3::add(&self.c, &vec3::mat_vec(&self.m, x))
    }

    /// Jacobian, `grad()[i][j] = d_j f_i`.
    #[inline]
    pub fn grad(&self) -> &Mat3 {
        &self.m
    }

    #[inline]
    pub fn div(&self) -> f64 {
        vec3::trace(&self.m)
    }

    #[inline]
    pub fn curl(&self) -> Vec3 {
        vec3::curl_of(&self.m)
    }

    #[inline]
    pub fn axpy(&mut self, s: f64, other: &Affine) {
        vec3::axpy(s, &other.c, &mut self.c);
        for i in 0..3 {
            vec3::axpy(s, &other.m[i], &mut self.m[i]);
        }
    }

    pub fn scaled(&self, s: f64) -> Affine {
        let mut out = Affine::ZERO;
        out.axpy(s, self);
        out
    }

    /// `a * self + b * other`
    pub fn combine(a: f64, x: &Affine, b: f64, y: &Affine) -> Affine {
        let mut out = x.scaled(a);
        out.axpy(b, y);
        out
    }
}

/// Element families at lowest order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    /// Piecewise constants.
    Dg0,
    /// Continuous piecewise-linear vectors vanishing on the boundary.
    Cg1Vector,
    /// Continuous piecewise-linear scalars vanishing on the boundary,
    /// embedded as the out-of-plane component.
    Cg1Scalar,
    /// Raviart–Thomas with zero normal trace.
    Rt0,
    /// Nedelec (first kind) with zero tangential trace.
    Ned0,
}

#[derive(Debug, Clone, Copy)]
pub struct LocalDof {
    /// Global index, `None` for a degree of freedom removed by the
    /// boundary condition.
    pub global: Option<usize>,
    /// Orientation of the local basis relative to the global one.
    pub sign: f64,
    pub basis: Affine,
}

pub struct FeSpace {
    family: Family,
    mesh: Arc<Mesh>,
    ndofs: usize,
    stride: usize,
    local: Vec<LocalDof>,
    /// Mesh entity (vertex, facet, edge or cell) of each global dof.
    entity: Vec<usize>,
    quadrature: Arc<MeshQuadrature>,
    mass: OnceLock<SparseMatrix>,
    mass_solver: OnceLock<SpdSolver>,
}

impl std::fmt::Debug for FeSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeSpace")
            .field("family", &self.family)
            .field("dim", &self.mesh.dim())
            .field("ndofs", &self.ndofs)
            .finish()
    }
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, family: Family) -> Result<Arc<FeSpace>> {
        let q = Arc::new(MeshQuadrature::new(&mesh));
        Self::with_quadrature(mesh, family, q)
    }

    /// Builds a space sharing an existing quadrature table for `mesh`.
    pub fn with_quadrature(
        mesh: Arc<Mesh>,
        family: Family,
        quadrature: Arc<MeshQuadrature>,
    ) -> Result<Arc<FeSpace>> {
        let dim = mesh.dim();
        if family == Family::Cg1Scalar && dim != 2 {
            return Err(Error::UnsupportedDimension {
                dim,
                what: "scalar continuous space (used for planar curls)",
            });
        }
        let nv = dim + 1;
        let ncells = mesh.num_cells();

        let (stride, entity_count) = match family {
            Family::Dg0 => (1, ncells),
            Family::Cg1Vector => (nv * dim, mesh.num_vertices()),
            Family::Cg1Scalar => (nv, mesh.num_vertices()),
            Family::Rt0 => (nv, mesh.facets().len()),
            Family::Ned0 => (mesh.local_edges().len(), mesh.edges().len()),
        };
        // Number the entities that carry free dofs.
        let free: Vec<bool> = match family {
            Family::Dg0 => vec![true; ncells],
            Family::Cg1Vector | Family::Cg1Scalar => {
                (0..entity_count).map(|v| !mesh.is_boundary_vertex(v)).collect()
            }
            Family::Rt0 => mesh.facets().iter().map(|f| !f.is_boundary()).collect(),
            Family::Ned0 => mesh.edges().iter().map(|e| !e.boundary).collect(),
        };
        let per_entity = if family == Family::Cg1Vector { dim } else { 1 };
        let mut first = vec![usize::MAX; entity_count];
        let mut entity = Vec::new();
        for (e, &is_free) in free.iter().enumerate() {
            if is_free {
                first[e] = entity.len();
                for _ in 0..per_entity {
                    entity.push(e);
                }
            }
        }
        let ndofs = entity.len();
        let global = |e: usize, k: usize| {
            if first[e] == usize::MAX {
                None
            } else {
                Some(first[e] + k)
            }
        };

        let mut local = Vec::with_capacity(stride * ncells);
        for c in 0..ncells {
            let g = mesh.geometry(c);
            let verts = mesh.cell(c);
            match family {
                Family::Dg0 => local.push(LocalDof {
                    global: Some(c),
                    sign: 1.0,
                    basis: Affine::constant([1.0, 0.0, 0.0]),
                }),
                Family::Cg1Vector => {
                    for (i, &v) in verts.iter().enumerate() {
                        for k in 0..dim {
                            let mut b = Affine::ZERO;
                            b.c[k] = g.offset[i];
                            b.m[k] = g.grad[i];
                            local.push(LocalDof {
                                global: global(v, k),
                                sign: 1.0,
                                basis: b,
                            });
                        }
                    }
                }
                Family::Cg1Scalar => {
                    for (i, &v) in verts.iter().enumerate() {
                        let mut b = Affine::ZERO;
                        b.c[2] = g.offset[i];
                        b.m[2] = g.grad[i];
                        local.push(LocalDof {
                            global: global(v, 0),
                            sign: 1.0,
                            basis: b,
                        });
                    }
                }
                Family::Rt0 => {
                    let s0 = 1.0 / (dim as f64 * g.volume);
                    for (i, &f) in mesh.cell_facets(c).iter().enumerate() {
                        let sign = if mesh.facet(f).c0 == c { 1.0 } else { -1.0 };
                        let p = mesh.vertex(verts[i]);
                        let mut b = Affine::ZERO;
                        for k in 0..dim {
                            b.c[k] = -sign * s0 * p[k];
                            b.m[k][k] = sign * s0;
                        }
                        local.push(LocalDof {
                            global: global(f, 0),
                            sign,
                            basis: b,
                        });
                    }
                }
                Family::Ned0 => {
                    for (le, &(a, b)) in mesh.local_edges().iter().enumerate() {
                        let e = mesh.cell_edges(c)[le];
                        // orient from the lower global vertex
                        let (a, b) = if verts[a] < verts[b] { (a, b) } else { (b, a) };
                        let (ga, gb) = (g.grad[a], g.grad[b]);
                        let mut basis = Affine::ZERO;
                        for r in 0..3 {
                            basis.c[r] = g.offset[a] * gb[r] - g.offset[b] * ga[r];
                            for s in 0..3 {
                                basis.m[r][s] = gb[r] * ga[s] - ga[r] * gb[s];
                            }
                        }
                        local.push(LocalDof {
                            global: global(e, 0),
                            sign: 1.0,
                            basis,
                        });
                    }
                }
            }
        }

        Ok(Arc::new(FeSpace {
            family,
            mesh,
            ndofs,
            stride,
            local,
            entity,
            quadrature,
            mass: OnceLock::new(),
            mass_solver: OnceLock::new(),
        }))
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn quadrature(&self) -> &Arc<MeshQuadrature> {
        &self.quadrature
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    /// Local degrees of freedom of a cell.
    #[inline]
    pub fn local(&self, c: usize) -> &[LocalDof] {
        &self.local[c * self.stride..(c + 1) * self.stride]
    }

    /// Mesh entity carrying a global dof.
    pub fn dof_entity(&self, dof: usize) -> usize {
        self.entity[dof]
    }

    /// Component of a vector dof (always 0 for other families).
    pub fn dof_component(&self, dof: usize) -> usize {
        match self.family {
            Family::Cg1Vector => dof % self.dim(),
            _ => 0,
        }
    }

    /// The restriction of the function with coefficients `x` to cell `c`.
    #[inline]
    pub fn restrict(&self, c: usize, x: &[f64]) -> Affine {
        let mut out = Affine::ZERO;
        for d in self.local(c) {
            if let Some(g) = d.global {
                out.axpy(x[g], &d.basis);
            }
        }
        out
    }

    pub fn restrict_all(&self, x: &[f64]) -> Vec<Affine> {
        (0..self.mesh.num_cells()).map(|c| self.restrict(c, x)).collect()
    }

    pub fn mass_matrix(&self) -> &SparseMatrix {
        self.mass.get_or_init(|| mixed_mass(self, self))
    }

    pub fn mass_solver(&self) -> &SpdSolver {
        self.mass_solver.get_or_init(|| {
            SpdSolver::new(self.mass_matrix()).expect("mass matrix of a valid mesh is positive definite")
        })
    }

    /// Coefficients of the L2 projection of the functional `f`.
    pub fn solve_mass(&self, rhs: &[f64]) -> Vec<f64> {
        self.mass_solver().solve(rhs)
    }
}

/// Coefficient vector bound to a space.
#[derive(Debug, Clone)]
pub struct FeFunction {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn zeros(space: &Arc<FeSpace>) -> Self {
        FeFunction {
            space: space.clone(),
            coeffs: vec![0.0; space.ndofs()],
        }
    }

    pub fn new(space: &Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.ndofs() {
            return Err(Error::SpaceMismatch(format!(
                "{} coefficients for a {:?} space with {} dofs",
                coeffs.len(),
                space.family(),
                space.ndofs()
            )));
        }
        if let Some(i) = coeffs.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("coefficient {i} is not finite")));
        }
        Ok(FeFunction {
            space: space.clone(),
            coeffs,
        })
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn restrict(&self, c: usize) -> Affine {
        self.space.restrict(c, &self.coeffs)
    }

    /// Value at a point given in barycentric coordinates of cell `c`.
    pub fn evaluate(&self, c: usize, bary: &[f64]) -> Result<Vec3> {
        let mesh = self.space.mesh();
        if c >= mesh.num_cells() {
            return Err(Error::OutOfRange {
                index: c,
                len: mesh.num_cells(),
            });
        }
        let x = mesh.point(c, bary);
        Ok(self.restrict(c).eval(&x))
    }

    /// `<self, other>` over the domain.
    pub fn inner(&self, other: &FeFunction) -> f64 {
        let q = self.space.quadrature();
        let mut s = 0.0;
        for c in 0..self.space.mesh().num_cells() {
            let a = self.restrict(c);
            let b = other.restrict(c);
            for (x, w) in q.cell(c) {
                s += w * vec3::dot(&a.eval(x), &b.eval(x));
            }
        }
        s
    }
}
