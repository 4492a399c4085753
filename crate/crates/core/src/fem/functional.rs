use super::{Affine, FeSpace};
use crate::vec3::{self, Mat3, Vec3, ZERO, ZERO_MAT};

/// A linear functional on affine fields over one cell:
/// `phi -> c . phi.c + m : phi.m`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CellCovector {
    pub c: Vec3,
    pub m: Mat3,
}

impl CellCovector {
    #[inline]
    pub fn apply(&self, f: &Affine) -> f64 {
        vec3::dot(&self.c, &f.c) + vec3::frobenius(&self.m, &f.m)
    }
}

/// A linear functional on piecewise-affine fields, stored cell by cell.
/// Forms with a free test slot are accumulated here and then either
/// evaluated on a function or assembled against a basis.
#[derive(Debug, Clone)]
pub struct Functional {
    cells: Vec<CellCovector>,
}

impl Functional {
    pub fn zeros(ncells: usize) -> Self {
        Functional {
            cells: vec![
                CellCovector {
                    c: ZERO,
                    m: ZERO_MAT
                };
                ncells
            ],
        }
    }

    pub fn clear(&mut self) {
        for k in self.cells.iter_mut() {
            *k = CellCovector::default();
        }
    }

    pub fn cell(&self, c: usize) -> &CellCovector {
        &self.cells[c]
    }

    /// Adds `w * g . phi(x)`.
    #[inline]
    pub fn add_value(&mut self, c: usize, w: f64, g: &Vec3, x: &Vec3) {
        let k = &mut self.cells[c];
        for j in 0..3 {
            let wg = w * g[j];
            k.c[j] += wg;
            k.m[j][0] += wg * x[0];
            k.m[j][1] += wg * x[1];
            k.m[j][2] += wg * x[2];
        }
    }

    /// Adds `G : grad phi` (already integrated over the cell).
    #[inline]
    pub fn add_gradient(&mut self, c: usize, g: &Mat3) {
        let k = &mut self.cells[c];
        for i in 0..3 {
            vec3::axpy(1.0, &g[i], &mut k.m[i]);
        }
    }

    /// Adds `w * g . curl phi`.
    #[inline]
    pub fn add_curl(&mut self, c: usize, w: f64, g: &Vec3) {
        let m = &mut self.cells[c].m;
        m[2][1] += w * g[0];
        m[1][2] -= w * g[0];
        m[0][2] += w * g[1];
        m[2][0] -= w * g[1];
        m[1][0] += w * g[2];
        m[0][1] -= w * g[2];
    }

    /// Adds `w * div phi`.
    #[inline]
    pub fn add_div(&mut self, c: usize, w: f64) {
        let m = &mut self.cells[c].m;
        for i in 0..3 {
            m[i][i] += w;
        }
    }

    /// Value on a piecewise-affine field given cell by cell.
    pub fn apply(&self, f: &[Affine]) -> f64 {
        self.cells.iter().zip(f).map(|(k, f)| k.apply(f)).sum()
    }

    /// Values on all global basis functions of `space`.
    pub fn assemble(&self, space: &FeSpace) -> Vec<f64> {
        let mut out = vec![0.0; space.ndofs()];
        self.assemble_into(space, &mut out);
        out
    }

    /// Adds the assembled values to `out`.
    pub fn assemble_into(&self, space: &FeSpace, out: &mut [f64]) {
        for (c, k) in self.cells.iter().enumerate() {
            for d in space.local(c) {
                if let Some(g) = d.global {
                    out[g] += k.apply(&d.basis);
                }
            }
        }
    }
}
