use std::path::{Path, PathBuf};

use bloom::core::fem::Field2D;
use bloom::core::mesh::lake_mesh;
use bloom::core::wind::Wind;
use bloom::gmsh::{load_gmsh_mesh, parse_gmsh, write_gmsh41};
use bloom::wind_csv::read_wind_file;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn square_fixture() {
    let g = load_gmsh_mesh(&fixture("square_v22.msh")).unwrap();
    assert_eq!(g.mesh.node_count(), 4);
    assert_eq!(g.mesh.triangle_count(), 2);
    assert_eq!(g.ignored_elements, 4);
    assert!((g.mesh.total_area() - 1.0).abs() < 1e-14);
    assert!((g.mesh.boundary_length() - 4.0).abs() < 1e-14);
}

#[test]
fn lake_fixture() {
    let g = load_gmsh_mesh(&fixture("lake.msh")).unwrap();
    assert_eq!(g.version, "4.1");
    assert_eq!((g.mesh.node_count(), g.mesh.triangle_count()), (127, 216));
    assert_eq!(g.mesh.dropped_nodes(), 0);
}

fn shoelace(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    0.5 * (0..n).map(|i| poly[i][0] * poly[(i + 1) % n][1] - poly[(i + 1) % n][0] * poly[i][1]).sum::<f64>().abs()
}

#[test]
fn node_permutation_keeps_geometry() {
    let mesh = lake_mesh(500.0, 4).unwrap();
    let n = mesh.node_count();
    // Relabel node tags with a fixed stride permutation and shuffle the node block.
    let perm: Vec<usize> = (0..n).map(|i| (i * 37 + 11) % n).collect();
    let mut text = String::from("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    text += &format!("{n}\n");
    for i in (0..n).rev() {
        let x = mesh.nodes()[i];
        text += &format!("{} {:?} {:?} 0\n", perm[i] + 1, x[0], x[1]);
    }
    text += &format!("$EndNodes\n$Elements\n{}\n", mesh.triangle_count());
    for (k, t) in mesh.triangles().iter().enumerate() {
        text += &format!("{} 2 2 0 1 {} {} {}\n", k + 1, perm[t[0]] + 1, perm[t[1]] + 1, perm[t[2]] + 1);
    }
    text += "$EndElements\n";
    let permuted = parse_gmsh(&text, "permuted").unwrap().mesh;

    // Oracle: area and perimeter straight from the raw coordinates.
    let raw_area: f64 = mesh.triangles().iter().map(|t| shoelace(&[mesh.nodes()[t[0]], mesh.nodes()[t[1]], mesh.nodes()[t[2]]])).sum();
    let raw_perimeter: f64 = mesh
        .boundary_edges()
        .iter()
        .map(|e| {
            let (a, b) = (mesh.nodes()[e[0]], mesh.nodes()[e[1]]);
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
        })
        .sum();
    assert!((permuted.total_area() / raw_area - 1.0).abs() < 1e-12);
    assert!((permuted.boundary_length() / raw_perimeter - 1.0).abs() < 1e-12);
    assert_eq!(permuted.boundary_edges().len(), mesh.boundary_edges().len());
}

#[test]
fn v41_writer_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = lake_mesh(200.0, 3).unwrap();
    let path = dir.path().join("m.msh");
    std::fs::write(&path, write_gmsh41(&mesh)).unwrap();
    let g = load_gmsh_mesh(&path).unwrap();
    assert_eq!(g.mesh.nodes(), mesh.nodes());
    assert_eq!(g.mesh.triangles(), mesh.triangles());
}

#[test]
fn hourly_wind_fixture_aggregates_to_days() {
    let series = read_wind_file(&fixture("wind_hourly.csv"), None).unwrap();
    assert_eq!(series.len(), 144);
    assert_eq!(series.times()[0], 0.0);
    assert!((series.times()[143] - 143.0 / 24.0).abs() < 1e-12);
    let (daily, filled) = series.aggregate_daily().unwrap();
    assert!(filled.is_empty());
    assert_eq!(daily.len(), 6);
    // The sine part of u averages out over each full day.
    for (k, &u) in daily.u().iter().enumerate() {
        assert!((u - 1.5).abs() < 2e-3, "day {k}: {u}");
    }
    for k in 0..6 {
        let t = daily.times()[k];
        let w = daily.velocity(t);
        assert!((w[0] / 86_400.0 - daily.u()[k]).abs() < 1e-12);
    }
}

#[test]
fn wind_start_shifts_the_origin() {
    let series = read_wind_file(&fixture("wind_hourly.csv"), Some("2023-05-31T00:00:00")).unwrap();
    assert_eq!(series.times()[0], 1.0);
}

#[test]
fn vtk_file_matches_the_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = load_gmsh_mesh(&fixture("lake.msh")).unwrap().mesh;
    let field = Field2D::uniform(mesh.node_count(), 1.0, 0.01, 0.3);
    let path = dir.path().join("f.vtk");
    bloom::vtk::write_vtk(&field, &mesh, &path, "test", 1e-10).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let points: usize = text.lines().find_map(|l| l.strip_prefix("POINTS ")).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert_eq!(points, mesh.node_count());
    let pos = text.lines().position(|l| l.starts_with("CELL_TYPES")).unwrap();
    let types: Vec<&str> = text.lines().skip(pos + 1).take(mesh.triangle_count()).collect();
    assert!(types.iter().all(|t| *t == "5"));
    assert_eq!(text.matches("LOOKUP_TABLE default").count(), 4);
    assert!(bloom::vtk::write_vtk(&field, &mesh, &dir.path().join("missing/f.vtk"), "test", 1e-10).is_err());
}
