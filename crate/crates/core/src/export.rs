//! VTK legacy output of the pressure field and CSV run histories.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::assembly::DiscreteField;
use crate::driver::RoundRecord;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Writes an unstructured grid with `pressure` at vertices and `lambda_mean`
/// per cell. `multipliers` holds per-element samples; empty samples give 0.
pub fn write_vtk(out: impl Write, mesh: &Mesh, field: &DiscreteField, multipliers: &[Vec<f64>]) -> std::io::Result<()> {
    if multipliers.len() != mesh.n_triangles() {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "multiplier samples do not match the mesh"));
    }
    let mut w = BufWriter::new(out);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "reynolds pressure")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for v in mesh.vertices() {
        writeln!(w, "{:.17e} {:.17e} 0", v[0], v[1])?;
    }
    let nt = mesh.n_triangles();
    writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", mesh.n_vertices())?;
    writeln!(w, "SCALARS pressure double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    // vertex dofs come first in both P1 and P2 numberings
    for v in 0..mesh.n_vertices() {
        writeln!(w, "{:.17e}", field.values[v])?;
    }
    writeln!(w, "CELL_DATA {nt}")?;
    writeln!(w, "SCALARS lambda_mean double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for s in multipliers {
        let mean = if s.is_empty() { 0.0 } else { s.iter().sum::<f64>() / s.len() as f64 };
        writeln!(w, "{mean:.17e}")?;
    }
    w.flush()
}

pub fn export_solution(path: &Path, mesh: &Mesh, field: &DiscreteField, multipliers: &[Vec<f64>]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_vtk(file, mesh, field, multipliers).map_err(|e| Error::io(path, e))
}

pub fn write_history(out: impl Write, rounds: &[RoundRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rounds {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<history>", e))?;
    Ok(())
}

pub fn save_history(path: &Path, rounds: &[RoundRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_history(file, rounds)
}

pub fn read_history(path: &Path) -> Result<Vec<RoundRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
