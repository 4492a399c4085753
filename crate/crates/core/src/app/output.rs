use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::stepper::{Discretization, State};
use crate::vec3::{self, Vec3};

/// Streams diagnostics rows to a CSV file, flushing after every row so that
/// a failed run leaves its partial series behind.
pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = CsvWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        w.line(DiagnosticsRecord::CSV_HEADER)?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}")
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn push(&mut self, r: &DiagnosticsRecord) -> Result<()> {
        self.line(&r.csv_row())
    }
}

pub fn write_diagnostics_csv(series: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    let mut w = CsvWriter::create(path)?;
    for r in series {
        w.push(r)?;
    }
    Ok(())
}

pub fn read_diagnostics_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == DiagnosticsRecord::CSV_HEADER => {}
        Some(Err(e)) => return Err(Error::io(path, e)),
        _ => {
            return Err(Error::InvalidInput(format!(
                "{}: missing diagnostics header",
                path.display()
            )))
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r = DiagnosticsRecord::parse_csv_row(&line)
            .map_err(|e| Error::InvalidInput(format!("{}: row {}: {e}", path.display(), i + 1)))?;
        out.push(r);
    }
    Ok(out)
}

fn write_vec(out: &mut impl Write, v: &Vec3) -> std::io::Result<()> {
    writeln!(out, "{:.17e} {:.17e} {:.17e}", v[0], v[1], v[2])
}

/// Legacy ASCII VTK unstructured grid with density and entropy as cell
/// data, and velocity and total magnetic field both at cell centroids and
/// averaged to the vertices.
pub fn write_vtk_snapshot(disc: &Discretization, state: &State, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_vtk(disc, state, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

fn write_vtk(disc: &Discretization, state: &State, out: &mut impl Write) -> std::io::Result<()> {
    let mesh = &disc.mesh;
    let bg = disc.background();
    let nv = mesh.dim() + 1;
    let nc = mesh.num_cells();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "mhd t={:.17e}", state.t)?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.num_vertices())?;
    for x in mesh.vertices() {
        write_vec(out, x)?;
    }
    writeln!(out, "CELLS {} {}", nc, nc * (nv + 1))?;
    for c in 0..nc {
        let ids: Vec<String> = mesh.cell(c).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{} {}", nv, ids.join(" "))?;
    }
    writeln!(out, "CELL_TYPES {nc}")?;
    let kind = if mesh.dim() == 2 { 5 } else { 10 };
    for _ in 0..nc {
        writeln!(out, "{kind}")?;
    }

    let mut u_cell = Vec::with_capacity(nc);
    let mut b_cell = Vec::with_capacity(nc);
    let mut u_pt = vec![[0.0; 3]; mesh.num_vertices()];
    let mut b_pt = vec![[0.0; 3]; mesh.num_vertices()];
    let mut count = vec![0usize; mesh.num_vertices()];
    for c in 0..nc {
        let u = state.u.restrict(c);
        let b = state.b.restrict(c);
        let x = mesh.geometry(c).centroid;
        u_cell.push(u.eval(&x));
        b_cell.push(vec3::add(&b.eval(&x), &bg));
        for &v in mesh.cell(c) {
            let p = mesh.vertex(v);
            vec3::axpy(1.0, &u.eval(p), &mut u_pt[v]);
            vec3::axpy(1.0, &vec3::add(&b.eval(p), &bg), &mut b_pt[v]);
            count[v] += 1;
        }
    }

    writeln!(out, "CELL_DATA {nc}")?;
    writeln!(out, "SCALARS rho double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for r in state.rho.coeffs() {
        writeln!(out, "{r:.17e}")?;
    }
    if let Some(s) = &state.s {
        writeln!(out, "SCALARS s double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in s.coeffs() {
            writeln!(out, "{v:.17e}")?;
        }
    }
    writeln!(out, "VECTORS u double")?;
    for v in &u_cell {
        write_vec(out, v)?;
    }
    writeln!(out, "VECTORS B double")?;
    for v in &b_cell {
        write_vec(out, v)?;
    }

    writeln!(out, "POINT_DATA {}", mesh.num_vertices())?;
    writeln!(out, "VECTORS u double")?;
    for (v, n) in u_pt.iter().zip(&count) {
        write_vec(out, &vec3::scale(1.0 / (*n).max(1) as f64, v))?;
    }
    writeln!(out, "VECTORS B double")?;
    for (v, n) in b_pt.iter().zip(&count) {
        write_vec(out, &vec3::scale(1.0 / (*n).max(1) as f64, v))?;
    }
    Ok(())
}
