//! Conical-product Gauss rules on simplices.

use faer::{Mat, Side};

use crate::mesh::Mesh;
use crate::vec3::{self, Vec3};

/// Quadrature rule on a reference simplex: barycentric points and weights
/// summing to one (multiply by the simplex measure).
#[derive(Debug, Clone)]
pub struct Rule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Collapsed Gauss–Jacobi rule with `n` points per direction on the
    /// simplex of dimension `dim` (0 through 3); exact to degree `2n - 1`.
    pub fn simplex(dim: usize, n: usize) -> Rule {
        match dim {
            0 => Rule {
                points: vec![[1.0, 0.0, 0.0, 0.0]],
                weights: vec![1.0],
            },
            1 => {
                let (x, w) = gauss_jacobi_unit(n, 0);
                Rule {
                    points: x.iter().map(|&t| [1.0 - t, t, 0.0, 0.0]).collect(),
                    weights: w,
                }
            }
            2 => {
                let (s, ws) = gauss_jacobi_unit(n, 0);
                let (t, wt) = gauss_jacobi_unit(n, 1);
                let mut points = Vec::new();
                let mut weights = Vec::new();
                for (i, &si) in s.iter().enumerate() {
                    for (j, &tj) in t.iter().enumerate() {
                        let x = si * (1.0 - tj);
                        let y = tj;
                        points.push([1.0 - x - y, x, y, 0.0]);
                        weights.push(ws[i] * wt[j]);
                    }
                }
                normalized(points, weights)
            }
            3 => {
                let (r, wr) = gauss_jacobi_unit(n, 0);
                let (s, ws) = gauss_jacobi_unit(n, 1);
                let (t, wt) = gauss_jacobi_unit(n, 2);
                let mut points = Vec::new();
                let mut weights = Vec::new();
                for (i, &ri) in r.iter().enumerate() {
                    for (j, &sj) in s.iter().enumerate() {
                        for (k, &tk) in t.iter().enumerate() {
                            let x = ri * (1.0 - sj) * (1.0 - tk);
                            let y = sj * (1.0 - tk);
                            let z = tk;
                            points.push([1.0 - x - y - z, x, y, z]);
                            weights.push(wr[i] * ws[j] * wt[k]);
                        }
                    }
                }
                normalized(points, weights)
            }
            _ => panic!("no simplex rule in dimension {dim}"),
        }
    }

    /// Rule used for cell integrals (exact to degree 5).
    pub fn cell(dim: usize) -> Rule {
        Rule::simplex(dim, 3)
    }

    /// Rule used for facet integrals (exact to degree 5).
    pub fn facet(dim: usize) -> Rule {
        Rule::simplex(dim - 1, 3)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Physical quadrature points and weights (measure included) for every cell
/// and facet of a mesh.
#[derive(Debug, Clone)]
pub struct MeshQuadrature {
    cell_stride: usize,
    cell: Vec<(Vec3, f64)>,
    facet_stride: usize,
    facet: Vec<(Vec3, f64)>,
}

impl MeshQuadrature {
    pub fn new(mesh: &Mesh) -> Self {
        let dim = mesh.dim();
        let rule = Rule::cell(dim);
        let mut cell = Vec::with_capacity(mesh.num_cells() * rule.len());
        for c in 0..mesh.num_cells() {
            let vol = mesh.volume(c);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                cell.push((mesh.point(c, p), w * vol));
            }
        }
        let frule = Rule::facet(dim);
        let mut facet = Vec::with_capacity(mesh.facets().len() * frule.len());
        for f in mesh.facets() {
            for (p, w) in frule.points.iter().zip(&frule.weights) {
                let mut x = [0.0; 3];
                for (i, &v) in f.vertices.iter().enumerate() {
                    vec3::axpy(p[i], mesh.vertex(v), &mut x);
                }
                facet.push((x, w * f.measure));
            }
        }
        MeshQuadrature {
            cell_stride: rule.len(),
            cell,
            facet_stride: frule.len(),
            facet,
        }
    }

    pub fn cell(&self, c: usize) -> &[(Vec3, f64)] {
        &self.cell[c * self.cell_stride..(c + 1) * self.cell_stride]
    }

    pub fn facet(&self, f: usize) -> &[(Vec3, f64)] {
        &self.facet[f * self.facet_stride..(f + 1) * self.facet_stride]
    }
}

fn normalized(points: Vec<[f64; 4]>, weights: Vec<f64>) -> Rule {
    let total: f64 = weights.iter().sum();
    Rule {
        points,
        weights: weights.into_iter().map(|w| w / total).collect(),
    }
}

/// Gauss–Jacobi nodes and weights on `[0, 1]` for the weight `(1 - t)^a`,
/// via the Golub–Welsch eigenvalue problem.
pub fn gauss_jacobi_unit(n: usize, a: u32) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let alpha = a as f64;
    let beta = 0.0;
    let ab = alpha + beta;
    let mut jac = Mat::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let m = kf + 1.0;
            let num = 4.0 * m * (m + alpha) * (m + beta) * (m + ab);
            let den = (2.0 * m + ab).powi(2) * (2.0 * m + ab + 1.0) * (2.0 * m + ab - 1.0);
            let off = (num / den).sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let eig = jac
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric tridiagonal eigenproblem");
    let s = eig.S();
    let u = eig.U();
    // Total mass of (1-x)^alpha on [-1,1] is 2^(alpha+1)/(alpha+1).
    let mu0 = 2f64.powf(alpha + 1.0) / (alpha + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = s[i];
            let w = mu0 * u[(0, i)] * u[(0, i)];
            // map [-1,1] -> [0,1]; (1-x)^a = 2^a (1-t)^a, dx = 2 dt
            ((x + 1.0) / 2.0, w / 2f64.powf(alpha + 1.0))
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    pairs.into_iter().unzip()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_three_points() {
        let (x, w) = gauss_jacobi_unit(3, 0);
        let r = (0.6f64).sqrt() / 2.0;
        assert!((x[0] - (0.5 - r)).abs() < 1e-14);
        assert!((x[1] - 0.5).abs() < 1e-14);
        assert!((w[1] - 4.0 / 9.0).abs() < 1e-14);
        assert!((w[0] - 5.0 / 18.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_weight_moments() {
        // int_0^1 (1-t)^2 t^k dt = 2 / ((k+1)(k+2)(k+3))
        let (x, w) = gauss_jacobi_unit(3, 2);
        for k in 0..6 {
            let q: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(k)).sum();
            let kf = k as f64;
            let exact = 2.0 / ((kf + 1.0) * (kf + 2.0) * (kf + 3.0));
            assert!((q - exact).abs() < 1e-15, "k={k}");
        }
    }
}
