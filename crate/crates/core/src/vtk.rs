//! Legacy ASCII VTK output of a tetrahedral mesh carrying a cross field.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::FieldError;
use crate::field::{CrossField, SingularityReport};
use crate::mesh::TetMesh;

/// VTK cell type of a linear tetrahedron.
pub const VTK_TETRA: u8 = 10;

pub fn to_vtk(mesh: &TetMesh, field: &CrossField, report: &SingularityReport) -> String {
    let n = mesh.vertices().len();
    let nt = mesh.tets().len();
    let mut out = String::with_capacity(n * 400);
    out.push_str("# vtk DataFile Version 3.0\ncross field\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {n} double");
    for v in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
    }
    let _ = writeln!(out, "CELLS {nt} {}", 5 * nt);
    for t in mesh.tets() {
        let _ = writeln!(out, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(out, "{VTK_TETRA}");
    }

    let _ = writeln!(out, "POINT_DATA {n}\nSCALARS eta double 1\nLOOKUP_TABLE default");
    for e in &report.eta {
        let _ = writeln!(out, "{e}");
    }
    let _ = writeln!(out, "SCALARS fixed int 1\nLOOKUP_TABLE default");
    for &f in &field.fixed {
        let _ = writeln!(out, "{}", f as u8);
    }

    let frames = field.frames();
    for q in 0..3 {
        let _ = writeln!(out, "VECTORS direction{} double", q + 1);
        for f in &frames {
            match f {
                Some(r) => {
                    let c = r.column(q);
                    let _ = writeln!(out, "{} {} {}", c.x, c.y, c.z);
                }
                None => out.push_str("0 0 0\n"),
            }
        }
    }

    let _ = writeln!(out, "FIELD tensors 1\ncross_tensor 9 {n} double");
    for t in &field.tensors {
        let a = t.as_array();
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {} {}",
            a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8]
        );
    }
    out
}

pub fn export_vtk(
    mesh: &TetMesh,
    field: &CrossField,
    report: &SingularityReport,
    path: &Path,
) -> Result<(), FieldError> {
    std::fs::write(path, to_vtk(mesh, field, report)).map_err(|source| FieldError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Values of a named point-data array (`SCALARS`, `VECTORS` or a `FIELD`
/// member) from a legacy ASCII file, flattened.
pub fn read_point_array(text: &str, name: &str) -> Option<Vec<f64>> {
    let mut lines = text.lines();
    let mut n_points = None;
    while let Some(line) = lines.next() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["POINT_DATA", n] => n_points = n.parse::<usize>().ok(),
            ["SCALARS", this, _, ..] if *this == name => {
                let n = n_points?;
                let next = lines.next()?;
                let mut values = Vec::with_capacity(n);
                if !next.starts_with("LOOKUP_TABLE") {
                    values.extend(next.split_whitespace().filter_map(|t| t.parse::<f64>().ok()));
                }
                return collect(&mut lines, values, n);
            }
            ["VECTORS", this, _] if *this == name => return collect(&mut lines, Vec::new(), 3 * n_points?),
            [this, comps, count, _] if *this == name => {
                let total = comps.parse::<usize>().ok()? * count.parse::<usize>().ok()?;
                return collect(&mut lines, Vec::new(), total);
            }
            _ => {}
        }
    }
    None
}

fn collect<'a>(lines: &mut impl Iterator<Item = &'a str>, mut values: Vec<f64>, total: usize) -> Option<Vec<f64>> {
    while values.len() < total {
        for tok in lines.next()?.split_whitespace() {
            values.push(tok.parse().ok()?);
        }
    }
    values.truncate(total);
    Some(values)
}
