use std::collections::BTreeMap;
use std::sync::Arc;

use super::{Family, FeFunction, FeSpace, Functional};
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use crate::vec3::{self, Vec3};

/// `M[i][j] = <test_i, trial_j>`.
pub fn mixed_mass(test: &FeSpace, trial: &FeSpace) -> SparseMatrix {
    let mesh = test.mesh();
    let q = test.quadrature();
    let mut triplets = Vec::new();
    let mut ti = Vec::new();
    let mut tj = Vec::new();
    for c in 0..mesh.num_cells() {
        let pts = q.cell(c);
        ti.clear();
        tj.clear();
        for d in test.local(c) {
            if let Some(g) = d.global {
                ti.push((g, pts.iter().map(|(x, _)| d.basis.eval(x)).collect::<Vec<Vec3>>()));
            }
        }
        for d in trial.local(c) {
            if let Some(g) = d.global {
                tj.push((g, pts.iter().map(|(x, _)| d.basis.eval(x)).collect::<Vec<Vec3>>()));
            }
        }
        for (gi, vi) in &ti {
            for (gj, vj) in &tj {
                let v: f64 = pts
                    .iter()
                    .enumerate()
                    .map(|(k, (_, w))| w * vec3::dot(&vi[k], &vj[k]))
                    .sum();
                triplets.push((*gi, *gj, v));
            }
        }
    }
    SparseMatrix::from_triplets(test.ndofs(), trial.ndofs(), triplets)
}

/// L2-orthogonal projection of a field given pointwise.
pub fn l2_project<F>(space: &Arc<FeSpace>, f: F) -> Result<FeFunction>
where
    F: Fn(&Vec3) -> Vec3,
{
    let mesh = space.mesh();
    let q = space.quadrature();
    let mut ell = Functional::zeros(mesh.num_cells());
    for c in 0..mesh.num_cells() {
        for (x, w) in q.cell(c) {
            let v = f(x);
            if !v.iter().all(|t| t.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "projected field is not finite at {x:?}"
                )));
            }
            ell.add_value(c, *w, &v, x);
        }
    }
    FeFunction::new(space, space.solve_mass(&ell.assemble(space)))
}

/// Matrix of the exact curl from the curl space (NED0 in 3D, continuous
/// scalars in 2D) into RT0. Its entries are integers.
pub fn curl_matrix(curl_space: &FeSpace, rt: &FeSpace) -> Result<SparseMatrix> {
    let mesh = curl_space.mesh();
    let expected = if mesh.dim() == 3 { Family::Ned0 } else { Family::Cg1Scalar };
    if curl_space.family() != expected || rt.family() != Family::Rt0 {
        return Err(Error::SpaceMismatch(format!(
            "exact curl maps {expected:?} to RT0 in {}D, got {:?} -> {:?}",
            mesh.dim(),
            curl_space.family(),
            rt.family()
        )));
    }
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for c in 0..mesh.num_cells() {
        let facets = mesh.cell_facets(c);
        for d in curl_space.local(c) {
            let Some(j) = d.global else { continue };
            let curl = d.basis.curl();
            for (l, &f) in facets.iter().enumerate() {
                let facet = mesh.facet(f);
                let flux = vec3::dot(&curl, &facet.normal) * facet.measure;
                let rounded = flux.round();
                if (flux - rounded).abs() > 1e-8 {
                    return Err(Error::Mesh(format!(
                        "non-integer curl flux {flux} through facet {f}"
                    )));
                }
                match rt.local(c)[l].global {
                    None if rounded != 0.0 => {
                        return Err(Error::Mesh(format!(
                            "curl of dof {j} has flux through boundary facet {f}"
                        )))
                    }
                    None => {}
                    Some(i) => {
                        if let Some(prev) = entries.insert((i, j), rounded) {
                            if prev != rounded {
                                return Err(Error::Mesh(format!(
                                    "inconsistent curl flux through facet {f}"
                                )));
                            }
                        }
                    }
                }
            }
        }
    }
    let triplets = entries
        .into_iter()
        .filter(|&(_, v)| v != 0.0)
        .map(|((i, j), v)| (i, j, v))
        .collect();
    Ok(SparseMatrix::from_triplets(rt.ndofs(), curl_space.ndofs(), triplets))
}

/// `curl A` as an RT0 function.
pub fn exact_curl(a: &FeFunction, rt: &Arc<FeSpace>) -> Result<FeFunction> {
    let d = curl_matrix(a.space(), rt)?;
    FeFunction::new(rt, d.mul_vec(a.coeffs()))
}

/// The weak curl `j` with `<j, k> = <B, curl k>` for every `k` in `curl_space`.
pub fn weak_curl(b: &FeFunction, curl_space: &Arc<FeSpace>) -> Result<FeFunction> {
    let rt = b.space();
    if rt.family() != Family::Rt0 {
        return Err(Error::SpaceMismatch(format!(
            "weak curl expects an RT0 field, got {:?}",
            rt.family()
        )));
    }
    let d = curl_matrix(curl_space, rt)?;
    let mb = rt.mass_matrix().mul_vec(b.coeffs());
    let rhs = d.transpose_mul_vec(&mb);
    FeFunction::new(curl_space, curl_space.solve_mass(&rhs))
}

/// L2 projection of a finite element function into another space.
pub fn project(f: &FeFunction, target: &Arc<FeSpace>) -> Result<FeFunction> {
    let m = mixed_mass(target, f.space());
    FeFunction::new(target, target.solve_mass(&m.mul_vec(f.coeffs())))
}
