//! Structured simplicial meshes of boxes.
//!
//! Squares are split along the `(0,0)-(1,1)` diagonal, cubes into the six
//! Kuhn tetrahedra sharing the main diagonal. Facets are numbered in
//! ascending order of their sorted vertex tuples; the normal of an interior
//! facet points from its lower-index cell to its higher-index cell, and the
//! normal of a boundary facet points out of the domain.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::vec3::{self, Mat3, Vec3};

/// Local vertex pairs of the edges of a cell, by dimension.
pub const LOCAL_EDGES_2D: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
pub const LOCAL_EDGES_3D: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Debug, Clone)]
pub struct Facet {
    /// Sorted global vertex indices.
    pub vertices: Vec<usize>,
    /// First adjacent cell (the lower index when interior).
    pub c0: usize,
    pub c1: Option<usize>,
    /// Index of the facet within `c0` and `c1` (the opposite local vertex).
    pub local: [usize; 2],
    /// Unit normal pointing out of `c0`.
    pub normal: Vec3,
    pub measure: f64,
    pub centroid: Vec3,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.c1.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Edge {
    /// Global vertex indices, low to high.
    pub vertices: [usize; 2],
    pub boundary: bool,
}

/// Barycentric data of one simplex: `lambda_i(x) = offset[i] + grad[i] . x`.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub volume: f64,
    pub grad: [Vec3; 4],
    pub offset: [f64; 4],
    pub centroid: Vec3,
    pub diameter: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    divisions: [usize; 3],
    lower: Vec3,
    upper: Vec3,
    vertices: Vec<Vec3>,
    cells: Vec<[usize; 4]>,
    geometry: Vec<CellGeometry>,
    facets: Vec<Facet>,
    edges: Vec<Edge>,
    cell_facets: Vec<[usize; 4]>,
    cell_edges: Vec<[usize; 6]>,
    boundary_vertex: Vec<bool>,
    /// (linear index of the grid box, index of the simplex inside the box)
    cell_box: Vec<(usize, usize)>,
}

impl Mesh {
    /// Builds a uniform mesh of the box `[lower, upper]`. Only the first
    /// `dim` entries of each argument are used.
    pub fn structured(dim: usize, divisions: &[usize], lower: &[f64], upper: &[f64]) -> Result<Mesh> {
        if dim != 2 && dim != 3 {
            return Err(Error::Config(format!("mesh dimension must be 2 or 3, got {dim}")));
        }
        if divisions.len() < dim || lower.len() < dim || upper.len() < dim {
            return Err(Error::Config(format!(
                "mesh needs {dim} divisions and bounds per axis"
            )));
        }
        let mut div = [1usize; 3];
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..dim {
            if divisions[a] == 0 {
                return Err(Error::Config("mesh divisions must be at least 1".into()));
            }
            if !(upper[a] > lower[a]) || !lower[a].is_finite() || !upper[a].is_finite() {
                return Err(Error::Config(format!(
                    "degenerate bounds on axis {a}: [{}, {}]",
                    lower[a], upper[a]
                )));
            }
            div[a] = divisions[a];
            lo[a] = lower[a];
            hi[a] = upper[a];
        }

        let np = [div[0] + 1, div[1] + 1, if dim == 3 { div[2] + 1 } else { 1 }];
        let vid = |i: usize, j: usize, k: usize| i + np[0] * (j + np[1] * k);
        let mut vertices = Vec::with_capacity(np[0] * np[1] * np[2]);
        for k in 0..np[2] {
            for j in 0..np[1] {
                for i in 0..np[0] {
                    let mut x = [0.0; 3];
                    let idx = [i, j, k];
                    for a in 0..dim {
                        x[a] = lo[a] + (hi[a] - lo[a]) * idx[a] as f64 / div[a] as f64;
                    }
                    vertices.push(x);
                }
            }
        }

        let mut cells = Vec::new();
        let mut cell_box = Vec::new();
        if dim == 2 {
            for j in 0..div[1] {
                for i in 0..div[0] {
                    let b = i + div[0] * j;
                    let (v00, v10, v01, v11) =
                        (vid(i, j, 0), vid(i + 1, j, 0), vid(i, j + 1, 0), vid(i + 1, j + 1, 0));
                    cells.push([v00, v10, v11, usize::MAX]);
                    cell_box.push((b, 0));
                    cells.push([v00, v11, v01, usize::MAX]);
                    cell_box.push((b, 1));
                }
            }
        } else {
            const PERMS: [[usize; 3]; 6] =
                [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            for k in 0..div[2] {
                for j in 0..div[1] {
                    for i in 0..div[0] {
                        let b = i + div[0] * (j + div[1] * k);
                        for (t, p) in PERMS.iter().enumerate() {
                            let mut corner = [i, j, k];
                            let mut tet = [vid(i, j, k), 0, 0, 0];
                            for (s, &axis) in p.iter().enumerate() {
                                corner[axis] += 1;
                                tet[s + 1] = vid(corner[0], corner[1], corner[2]);
                            }
                            cells.push(tet);
                            cell_box.push((b, t));
                        }
                    }
                }
            }
        }

        // Orient positively.
        for cell in cells.iter_mut() {
            if signed_volume(dim, &vertices, cell) < 0.0 {
                cell.swap(1, 2);
            }
        }

        let geometry: Vec<CellGeometry> =
            cells.iter().map(|c| cell_geometry(dim, &vertices, c)).collect();

        // Facets.
        let mut facet_map: BTreeMap<Vec<usize>, Vec<(usize, usize)>> = BTreeMap::new();
        for (ci, cell) in cells.iter().enumerate() {
            for l in 0..=dim {
                let mut key: Vec<usize> = (0..=dim).filter(|&m| m != l).map(|m| cell[m]).collect();
                key.sort_unstable();
                facet_map.entry(key).or_default().push((ci, l));
            }
        }
        let mut facets = Vec::with_capacity(facet_map.len());
        let mut cell_facets = vec![[usize::MAX; 4]; cells.len()];
        for (key, mut adj) in facet_map {
            adj.sort_unstable();
            if adj.len() > 2 {
                return Err(Error::Mesh(format!("facet {key:?} shared by {} cells", adj.len())));
            }
            let (c0, l0) = adj[0];
            let g = &geometry[c0].grad[l0];
            let gn = vec3::norm(g);
            let normal = vec3::scale(-1.0 / gn, g);
            let measure = dim as f64 * geometry[c0].volume * gn;
            let mut centroid = [0.0; 3];
            for &v in &key {
                vec3::axpy(1.0 / dim as f64, &vertices[v], &mut centroid);
            }
            let fi = facets.len();
            cell_facets[c0][l0] = fi;
            let (c1, l1) = match adj.get(1) {
                Some(&(c1, l1)) => {
                    cell_facets[c1][l1] = fi;
                    (Some(c1), l1)
                }
                None => (None, usize::MAX),
            };
            facets.push(Facet {
                vertices: key,
                c0,
                c1,
                local: [l0, l1],
                normal,
                measure,
                centroid,
            });
        }

        let mut boundary_vertex = vec![false; vertices.len()];
        for f in facets.iter().filter(|f| f.is_boundary()) {
            for &v in &f.vertices {
                boundary_vertex[v] = true;
            }
        }

        // Edges.
        let local_edges: &[(usize, usize)] = if dim == 2 { &LOCAL_EDGES_2D } else { &LOCAL_EDGES_3D };
        let mut edge_map: BTreeMap<[usize; 2], Vec<(usize, usize)>> = BTreeMap::new();
        for (ci, cell) in cells.iter().enumerate() {
            for (le, &(a, b)) in local_edges.iter().enumerate() {
                let (va, vb) = (cell[a], cell[b]);
                let key = if va < vb { [va, vb] } else { [vb, va] };
                edge_map.entry(key).or_default().push((ci, le));
            }
        }
        let mut boundary_edge_keys = std::collections::BTreeSet::new();
        for f in facets.iter().filter(|f| f.is_boundary()) {
            for a in 0..f.vertices.len() {
                for b in a + 1..f.vertices.len() {
                    boundary_edge_keys.insert([f.vertices[a], f.vertices[b]]);
                }
            }
        }
        let mut edges = Vec::with_capacity(edge_map.len());
        let mut cell_edges = vec![[usize::MAX; 6]; cells.len()];
        for (key, adj) in edge_map {
            let ei = edges.len();
            for (ci, le) in adj {
                cell_edges[ci][le] = ei;
            }
            edges.push(Edge {
                vertices: key,
                boundary: boundary_edge_keys.contains(&key),
            });
        }

        Ok(Mesh {
            dim,
            divisions: div,
            lower: lo,
            upper: hi,
            vertices,
            cells,
            geometry,
            facets,
            edges,
            cell_facets,
            cell_edges,
            boundary_vertex,
            cell_box,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn divisions(&self) -> &[usize] {
        &self.divisions[..self.dim]
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lower[..self.dim], &self.upper[..self.dim])
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertex(&self, v: usize) -> &Vec3 {
        &self.vertices[v]
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// Vertex indices of a cell (`dim + 1` entries, positively oriented).
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c][..=self.dim]
    }

    pub fn geometry(&self, c: usize) -> &CellGeometry {
        &self.geometry[c]
    }

    pub fn volume(&self, c: usize) -> f64 {
        self.geometry[c].volume
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet(&self, f: usize) -> &Facet {
        &self.facets[f]
    }

    /// Global facet opposite each local vertex.
    pub fn cell_facets(&self, c: usize) -> &[usize] {
        &self.cell_facets[c][..=self.dim]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Global edges in the order of [`LOCAL_EDGES_2D`] / [`LOCAL_EDGES_3D`].
    pub fn cell_edges(&self, c: usize) -> &[usize] {
        &self.cell_edges[c][..self.local_edges().len()]
    }

    pub fn local_edges(&self) -> &'static [(usize, usize)] {
        if self.dim == 2 {
            &LOCAL_EDGES_2D
        } else {
            &LOCAL_EDGES_3D
        }
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    /// Interior facets in ascending vertex-tuple order.
    pub fn interior_facets(&self) -> impl Iterator<Item = (usize, &Facet)> {
        self.facets.iter().enumerate().filter(|(_, f)| !f.is_boundary())
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = (usize, &Facet)> {
        self.facets.iter().enumerate().filter(|(_, f)| f.is_boundary())
    }

    pub fn max_diameter(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter).fold(0.0, f64::max)
    }

    pub fn total_volume(&self) -> f64 {
        self.geometry.iter().map(|g| g.volume).sum()
    }

    pub fn cell_box(&self, c: usize) -> (usize, usize) {
        self.cell_box[c]
    }

    /// Index of the grid row (the last axis) containing a cell.
    pub fn cell_layer(&self, c: usize) -> usize {
        let b = self.cell_box[c].0;
        match self.dim {
            2 => b / self.divisions[0],
            _ => b / (self.divisions[0] * self.divisions[1]),
        }
    }

    /// Cartesian coordinates from barycentric ones.
    pub fn point(&self, c: usize, bary: &[f64]) -> Vec3 {
        let mut x = [0.0; 3];
        for (i, &v) in self.cell(c).iter().enumerate() {
            vec3::axpy(bary[i], &self.vertices[v], &mut x);
        }
        x
    }
}

fn edge_matrix(dim: usize, vertices: &[Vec3], cell: &[usize; 4]) -> Mat3 {
    let x0 = vertices[cell[0]];
    let mut t = [[0.0; 3]; 3];
    for col in 0..dim {
        let d = vec3::sub(&vertices[cell[col + 1]], &x0);
        for row in 0..3 {
            t[row][col] = d[row];
        }
    }
    if dim == 2 {
        t[2][2] = 1.0;
    }
    t
}

fn signed_volume(dim: usize, vertices: &[Vec3], cell: &[usize; 4]) -> f64 {
    let d = vec3::det3(&edge_matrix(dim, vertices, cell));
    if dim == 2 {
        d / 2.0
    } else {
        d / 6.0
    }
}

fn cell_geometry(dim: usize, vertices: &[Vec3], cell: &[usize; 4]) -> CellGeometry {
    let t = edge_matrix(dim, vertices, cell);
    let tinv = vec3::inv3(&t);
    let x0 = vertices[cell[0]];
    let mut grad = [[0.0; 3]; 4];
    let mut offset = [0.0; 4];
    for i in 1..=dim {
        let mut g = tinv[i - 1];
        if dim == 2 {
            g[2] = 0.0;
        }
        grad[i] = g;
        offset[i] = -vec3::dot(&g, &x0);
    }
    for i in 1..=dim {
        grad[0] = vec3::sub(&grad[0], &grad[i]);
    }
    offset[0] = 1.0 - offset[1..=dim].iter().sum::<f64>();
    let mut centroid = [0.0; 3];
    let mut diameter: f64 = 0.0;
    for a in 0..=dim {
        vec3::axpy(1.0 / (dim + 1) as f64, &vertices[cell[a]], &mut centroid);
        for b in a + 1..=dim {
            diameter = diameter.max(vec3::norm(&vec3::sub(&vertices[cell[a]], &vertices[cell[b]])));
        }
    }
    CellGeometry {
        volume: signed_volume(dim, vertices, cell),
        grad,
        offset,
        centroid,
        diameter,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barycentric_gradients_reproduce_vertices() {
        let m = Mesh::structured(3, &[1, 1, 1], &[0.0; 3], &[1.0; 3]).unwrap();
        for c in 0..m.num_cells() {
            let g = m.geometry(c);
            for (i, &v) in m.cell(c).iter().enumerate() {
                let x = m.vertex(v);
                for j in 0..4 {
                    let lam = g.offset[j] + vec3::dot(&g.grad[j], x);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((lam - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn local_facet_is_opposite_its_vertex() {
        let m = Mesh::structured(2, &[2, 3], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        for c in 0..m.num_cells() {
            for (l, &f) in m.cell_facets(c).iter().enumerate() {
                assert!(!m.facet(f).vertices.contains(&m.cell(c)[l]));
            }
        }
    }
}
