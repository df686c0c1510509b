//! ASCII gmsh reader (formats 2.2 and 4.1). Only 3-node triangles are kept;
//! points, lines and other element types are counted and skipped.

use std::collections::HashMap;
use std::path::Path;

use bloom_core::mesh::TriMesh;

use crate::error::{Error, Result};

const TRIANGLE: u32 = 2;

#[derive(Debug, Clone)]
pub struct GmshMesh {
    pub mesh: TriMesh,
    pub version: String,
    /// Elements that were not 3-node triangles.
    pub ignored_elements: usize,
}

struct Lines<'a> {
    source: &'a str,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, source: &'a str) -> Self {
        Lines { source, inner: text.lines().enumerate(), line: 0 }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if !l.is_empty() {
                return Ok(l);
            }
        }
        Err(self.err("unexpected end of file"))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.source, self.line, msg)
    }

    fn numbers<T: std::str::FromStr>(&mut self) -> Result<Vec<T>> {
        let l = self.next_line()?;
        l.split_whitespace().map(|t| t.parse::<T>().map_err(|_| self.err(format!("bad number `{t}`")))).collect()
    }

    fn expect(&mut self, tag: &str) -> Result<()> {
        let l = self.next_line()?;
        if l != tag {
            return Err(self.err(format!("expected {tag}, found `{l}`")));
        }
        Ok(())
    }

    fn skip_section(&mut self, name: &str) -> Result<()> {
        let end = format!("$End{}", &name[1..]);
        while self.next_line()? != end {}
        Ok(())
    }
}

struct Raw {
    nodes: Vec<[f64; 2]>,
    index: HashMap<u64, usize>,
    triangles: Vec<[u64; 3]>,
    tri_lines: Vec<usize>,
    ignored: usize,
}

fn take<T: Copy>(v: &[T], k: usize, lines: &Lines) -> Result<T> {
    v.get(k).copied().ok_or_else(|| lines.err("line too short"))
}

fn add_node(raw: &mut Raw, tag: u64, xyz: &[f64], lines: &Lines) -> Result<()> {
    if xyz.len() < 3 {
        return Err(lines.err("node needs x y z"));
    }
    if raw.index.insert(tag, raw.nodes.len()).is_some() {
        return Err(lines.err(format!("node {tag} defined twice")));
    }
    raw.nodes.push([xyz[0], xyz[1]]);
    Ok(())
}

fn nodes_v2(lines: &mut Lines, raw: &mut Raw) -> Result<()> {
    let count: usize = take(&lines.numbers()?, 0, lines)?;
    for _ in 0..count {
        let l = lines.next_line()?;
        let mut it = l.split_whitespace();
        let tag: u64 = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| lines.err("bad node tag"))?;
        let xyz: Vec<f64> = it.map(|t| t.parse().map_err(|_| lines.err(format!("bad coordinate `{t}`")))).collect::<Result<_>>()?;
        add_node(raw, tag, &xyz, lines)?;
    }
    lines.expect("$EndNodes")
}

fn elements_v2(lines: &mut Lines, raw: &mut Raw) -> Result<()> {
    let count: usize = take(&lines.numbers()?, 0, lines)?;
    for _ in 0..count {
        let e: Vec<u64> = lines.numbers()?;
        let kind = take(&e, 1, lines)? as u32;
        let ntags = take(&e, 2, lines)? as usize;
        if kind == TRIANGLE {
            let v = &e[(3 + ntags).min(e.len())..];
            if v.len() != 3 {
                return Err(lines.err("triangle needs 3 nodes"));
            }
            raw.triangles.push([v[0], v[1], v[2]]);
            raw.tri_lines.push(lines.line);
        } else {
            raw.ignored += 1;
        }
    }
    lines.expect("$EndElements")
}

fn nodes_v4(lines: &mut Lines, raw: &mut Raw) -> Result<()> {
    let head: Vec<usize> = lines.numbers()?;
    let blocks = take(&head, 0, lines)?;
    for _ in 0..blocks {
        let b: Vec<usize> = lines.numbers()?;
        let parametric = take(&b, 2, lines)?;
        let n = take(&b, 3, lines)?;
        let mut tags = Vec::with_capacity(n);
        for _ in 0..n {
            tags.push(take(&lines.numbers::<u64>()?, 0, lines)?);
        }
        for tag in tags {
            let xyz: Vec<f64> = lines.numbers()?;
            if parametric != 0 && xyz.len() < 3 {
                return Err(lines.err("parametric node is too short"));
            }
            add_node(raw, tag, &xyz, lines)?;
        }
    }
    lines.expect("$EndNodes")
}

fn elements_v4(lines: &mut Lines, raw: &mut Raw) -> Result<()> {
    let head: Vec<usize> = lines.numbers()?;
    let blocks = take(&head, 0, lines)?;
    for _ in 0..blocks {
        let b: Vec<u64> = lines.numbers()?;
        let kind = take(&b, 2, lines)? as u32;
        let n = take(&b, 3, lines)? as usize;
        for _ in 0..n {
            let e: Vec<u64> = lines.numbers()?;
            if kind == TRIANGLE {
                if e.len() != 4 {
                    return Err(lines.err("triangle needs a tag and 3 nodes"));
                }
                raw.triangles.push([e[1], e[2], e[3]]);
                raw.tri_lines.push(lines.line);
            } else {
                raw.ignored += 1;
            }
        }
    }
    lines.expect("$EndElements")
}

/// Parses gmsh text; `source` names it in error messages.
pub fn parse_gmsh(text: &str, source: &str) -> Result<GmshMesh> {
    let mut lines = Lines::new(text, source);
    let mut version: Option<String> = None;
    let mut raw = Raw { nodes: Vec::new(), index: HashMap::new(), triangles: Vec::new(), tri_lines: Vec::new(), ignored: 0 };
    loop {
        let l = match lines.next_line() {
            Ok(l) => l,
            Err(_) if version.is_some() => break,
            Err(e) => return Err(e),
        };
        match l {
            "$MeshFormat" => {
                let f = lines.next_line()?;
                let mut it = f.split_whitespace();
                let v = it.next().unwrap_or_default().to_string();
                if v != "2.2" && v != "4.1" {
                    return Err(lines.err(format!("unsupported format version `{v}` (2.2 and 4.1 are read)")));
                }
                if it.next() != Some("0") {
                    return Err(lines.err("binary mesh files are not supported"));
                }
                lines.expect("$EndMeshFormat")?;
                version = Some(v);
            }
            "$Nodes" | "$Elements" => {
                let Some(v) = version.as_deref() else {
                    return Err(lines.err("$MeshFormat must come first"));
                };
                match (l, v) {
                    ("$Nodes", "2.2") => nodes_v2(&mut lines, &mut raw)?,
                    ("$Nodes", _) => nodes_v4(&mut lines, &mut raw)?,
                    (_, "2.2") => elements_v2(&mut lines, &mut raw)?,
                    _ => elements_v4(&mut lines, &mut raw)?,
                }
            }
            s if s.starts_with('$') && !s.starts_with("$End") => lines.skip_section(s)?,
            s => return Err(lines.err(format!("unexpected line `{s}`"))),
        }
    }
    let version = version.unwrap();
    if raw.triangles.is_empty() {
        return Err(Error::Mesh { file: source.into(), message: "no triangle elements".into() });
    }
    let mut triangles = Vec::with_capacity(raw.triangles.len());
    for (t, line) in raw.triangles.iter().zip(&raw.tri_lines) {
        let mut idx = [0; 3];
        for k in 0..3 {
            idx[k] = *raw.index.get(&t[k]).ok_or_else(|| Error::parse(source, *line, format!("unknown node {}", t[k])))?;
        }
        triangles.push(idx);
    }
    let mesh = TriMesh::new(raw.nodes, triangles).map_err(|e| Error::Mesh { file: source.into(), message: e.to_string() })?;
    if raw.ignored > 0 {
        log::warn!("{source}: ignored {} non-triangle elements", raw.ignored);
    }
    Ok(GmshMesh { mesh, version, ignored_elements: raw.ignored })
}

pub fn load_gmsh_mesh(path: &Path) -> Result<GmshMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_gmsh(&text, &path.display().to_string())
}

/// Writes `mesh` as gmsh 4.1 ASCII with a single surface entity.
pub fn write_gmsh41(mesh: &TriMesh) -> String {
    use std::fmt::Write;
    let mut s = String::from("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n");
    let n = mesh.node_count();
    let m = mesh.triangle_count();
    writeln!(s, "$Nodes\n1 {n} 1 {n}\n2 1 0 {n}").unwrap();
    for i in 1..=n {
        writeln!(s, "{i}").unwrap();
    }
    for x in mesh.nodes() {
        writeln!(s, "{:?} {:?} 0", x[0], x[1]).unwrap();
    }
    writeln!(s, "$EndNodes\n$Elements\n1 {m} 1 {m}\n2 1 2 {m}").unwrap();
    for (k, t) in mesh.triangles().iter().enumerate() {
        writeln!(s, "{} {} {} {}", k + 1, t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    s.push_str("$EndElements\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE_22: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n\
        $Elements\n4\n1 15 2 0 1 1\n2 1 2 0 1 1 2\n3 2 2 0 1 1 2 3\n4 2 2 0 1 1 3 4\n$EndElements\n";

    #[test]
    fn unit_square_v22() {
        let g = parse_gmsh(SQUARE_22, "square").unwrap();
        assert_eq!(g.version, "2.2");
        assert_eq!(g.mesh.node_count(), 4);
        assert_eq!(g.mesh.triangle_count(), 2);
        assert_eq!(g.ignored_elements, 2);
        assert!((g.mesh.total_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn v41_round_trip() {
        let mesh = bloom_core::mesh::lake_mesh(100.0, 3).unwrap();
        let g = parse_gmsh(&write_gmsh41(&mesh), "lake").unwrap();
        assert_eq!(g.version, "4.1");
        assert_eq!(g.mesh.nodes(), mesh.nodes());
        assert_eq!(g.mesh.triangles(), mesh.triangles());
    }

    #[test]
    fn degenerate_triangle_is_an_error() {
        let text = SQUARE_22.replace("4 0 1 0\n", "4 0.5 0.5 0\n");
        assert!(matches!(parse_gmsh(&text, "bad"), Err(Error::Mesh { .. })));
    }

    #[test]
    fn inverted_element_is_an_error() {
        let text = SQUARE_22.replace("1 1 3 4\n", "1 1 4 3\n");
        assert!(matches!(parse_gmsh(&text, "bad"), Err(Error::Mesh { .. })));
    }

    #[test]
    fn bad_versions_and_empty_meshes() {
        assert!(parse_gmsh(&SQUARE_22.replace("2.2 0 8", "3.0 0 8"), "v3").is_err());
        assert!(parse_gmsh(&SQUARE_22.replace("2.2 0 8", "2.2 1 8"), "bin").is_err());
        let no_tris = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n1\n1 0 0 0\n$EndNodes\n$Elements\n1\n1 15 2 0 1 1\n$EndElements\n";
        assert!(matches!(parse_gmsh(no_tris, "pts"), Err(Error::Mesh { .. })));
        assert!(parse_gmsh("", "empty").is_err());
    }

    #[test]
    fn unknown_node_reports_line() {
        let text = SQUARE_22.replace("1 1 3 4\n", "1 1 3 9\n");
        match parse_gmsh(&text, "bad") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 16),
            other => panic!("{other:?}"),
        }
    }
}
