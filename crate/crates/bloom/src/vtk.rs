//! Legacy ASCII VTK output of 2D fields.

use std::fmt::Write as _;
use std::path::Path;

use bloom_core::fem::Field2D;
use bloom_core::mesh::TriMesh;

use crate::error::{Error, Result};

const VTK_TRIANGLE: u8 = 5;

/// Renders an unstructured grid with point arrays `B`, `p`, `P` and `Q`, where
/// `Q = p / max(B, eps)`.
pub fn vtk_string(field: &Field2D, mesh: &TriMesh, title: &str, eps: f64) -> Result<String> {
    let n = mesh.node_count();
    if field.len() != n || field.internal.len() != n || field.dissolved.len() != n {
        return Err(Error::Model(bloom_core::Error::Dimension(format!("field has {} nodes, mesh has {n}", field.len()))));
    }
    let m = mesh.triangle_count();
    let mut s = String::with_capacity(64 * (n + m));
    let title = title.replace('\n', " ");
    writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {n} double").unwrap();
    for x in mesh.nodes() {
        writeln!(s, "{:?} {:?} 0", x[0], x[1]).unwrap();
    }
    writeln!(s, "CELLS {m} {}", 4 * m).unwrap();
    for t in mesh.triangles() {
        writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {m}").unwrap();
    for _ in 0..m {
        writeln!(s, "{VTK_TRIANGLE}").unwrap();
    }
    writeln!(s, "POINT_DATA {n}").unwrap();
    let quota = field.quota(eps);
    for (name, values) in [("B", &field.biomass), ("p", &field.internal), ("P", &field.dissolved), ("Q", &quota)] {
        writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        for v in values.iter() {
            writeln!(s, "{v:?}").unwrap();
        }
    }
    Ok(s)
}

pub fn write_vtk(field: &Field2D, mesh: &TriMesh, path: &Path, title: &str, eps: f64) -> Result<()> {
    let s = vtk_string(field, mesh, title, eps)?;
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_matches_mesh() {
        let mesh = bloom_core::mesh::lake_mesh(10.0, 2).unwrap();
        let field = Field2D::uniform(mesh.node_count(), 2.0, 0.04, 0.2);
        let s = vtk_string(&field, &mesh, "t = 0", 1e-10).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert!(s.contains(&format!("POINTS {} double", mesh.node_count())));
        let types = lines.iter().position(|l| l.starts_with("CELL_TYPES")).unwrap();
        let m = mesh.triangle_count();
        assert!(lines[types + 1..=types + m].iter().all(|l| *l == "5"));
        assert_eq!(s.matches("SCALARS").count(), 4);
        assert!(s.contains("SCALARS Q double 1\nLOOKUP_TABLE default\n0.02\n"));
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let mesh = bloom_core::mesh::lake_mesh(10.0, 2).unwrap();
        assert!(vtk_string(&Field2D::uniform(3, 1.0, 0.0, 0.0), &mesh, "", 1e-10).is_err());
    }
}
