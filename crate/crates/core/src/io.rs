//! Legacy-VTK mesh output and CSV tables.
//!
//! Floats are written with Rust's shortest round-trip formatting so that
//! identical inputs give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::tracing::FieldLine;
use crate::winding::WindingDistribution;

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Tetrahedral mesh with optional point scalars.
pub fn write_vtk_volume(path: &Path, mesh: &Mesh, point_data: &[(&str, &[f64])]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0\nwindtube volume mesh\nASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.vertices.len())?;
    for v in &mesh.vertices {
        writeln!(w, "{} {} {}", v.x, v.y, v.z)?;
    }
    let n = mesh.tets.len();
    writeln!(w, "CELLS {n} {}", 5 * n)?;
    for t in &mesh.tets {
        writeln!(w, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(w, "CELL_TYPES {n}")?;
    for _ in 0..n {
        writeln!(w, "10")?;
    }
    if !point_data.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.vertices.len())?;
        for (name, values) in point_data {
            if values.len() != mesh.vertices.len() {
                return Err(Error::InvalidArgument(format!("point data {name} has {} values", values.len())));
            }
            writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
            for v in *values {
                writeln!(w, "{v}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Boundary triangles with their tag codes as cell data.
pub fn write_vtk_boundary(path: &Path, mesh: &Mesh) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0\nwindtube boundary\nASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.vertices.len())?;
    for v in &mesh.vertices {
        writeln!(w, "{} {} {}", v.x, v.y, v.z)?;
    }
    let n = mesh.boundary_faces.len();
    writeln!(w, "CELLS {n} {}", 4 * n)?;
    for f in &mesh.boundary_faces {
        writeln!(w, "3 {} {} {}", f.vertices[0], f.vertices[1], f.vertices[2])?;
    }
    writeln!(w, "CELL_TYPES {n}")?;
    for _ in 0..n {
        writeln!(w, "5")?;
    }
    writeln!(w, "CELL_DATA {n}\nSCALARS boundary_tag int 1\nLOOKUP_TABLE default")?;
    for f in &mesh.boundary_faces {
        writeln!(w, "{}", f.tag.code())?;
    }
    w.flush()?;
    Ok(())
}

/// One row per sample, in physical and (if mapped) reference coordinates.
pub fn write_field_lines_csv(path: &Path, lines: &[FieldLine]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["line", "sample", "y1", "y2", "y3", "level", "x1", "x2", "z"])
        .map_err(csv_err)?;
    for (i, line) in lines.iter().enumerate() {
        for (j, s) in line.samples.iter().enumerate() {
            let (x1, x2, z) = s.reference.map_or((String::new(), String::new(), String::new()), |r| {
                (r.x1.to_string(), r.x2.to_string(), r.z.to_string())
            });
            w.write_record([
                i.to_string(),
                j.to_string(),
                s.y.x.to_string(),
                s.y.y.to_string(),
                s.y.z.to_string(),
                s.z.to_string(),
                x1,
                x2,
                z,
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `x1,x2,r,theta,weight,value`, one row per probe. Probes that are not grid
/// nodes get weight 0.
pub fn write_distribution_csv(path: &Path, dist: &WindingDistribution) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["x1", "x2", "r", "theta", "weight", "value"]).map_err(csv_err)?;
    let on_grid = dist.on_grid();
    for (i, (x, v)) in dist.probes.iter().zip(&dist.values).enumerate() {
        let weight = if on_grid { dist.grid.weights[i] } else { 0.0 };
        w.write_record(
            [x[0], x[1], x[0].hypot(x[1]), x[1].atan2(x[0]), weight, *v].map(|f| f.to_string()),
        )
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
