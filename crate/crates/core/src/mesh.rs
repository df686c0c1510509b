//! Unstructured P1 triangle meshes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Triangle mesh with cached areas, basis gradients and boundary edges.
///
/// Construction drops nodes no triangle references, flips a uniformly
/// clockwise mesh and rejects degenerate, mixed-orientation or disconnected input.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
    gradients: Vec<[[f64; 2]; 3]>,
    boundary: Vec<[usize; 2]>,
    dropped_nodes: usize,
    flipped: bool,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl TriMesh {
    pub fn new(nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::Mesh("mesh has no triangles".into()));
        }
        for (k, t) in triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= nodes.len()) {
                return Err(Error::Mesh(format!("triangle {k} references a missing node")));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::Mesh(format!("triangle {k} repeats a node")));
            }
        }
        if nodes.iter().any(|n| !n[0].is_finite() || !n[1].is_finite()) {
            return Err(Error::Mesh("non-finite node coordinates".into()));
        }

        // Keep referenced nodes only, in their original order.
        let mut used = vec![false; nodes.len()];
        for t in &triangles {
            for &i in t {
                used[i] = true;
            }
        }
        let mut remap = vec![usize::MAX; nodes.len()];
        let mut kept = Vec::new();
        for (i, n) in nodes.iter().enumerate() {
            if used[i] {
                remap[i] = kept.len();
                kept.push(*n);
            }
        }
        let dropped_nodes = nodes.len() - kept.len();
        let mut triangles: Vec<[usize; 3]> = triangles.iter().map(|t| [remap[t[0]], remap[t[1]], remap[t[2]]]).collect();

        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for n in &kept {
            for d in 0..2 {
                lo[d] = lo[d].min(n[d]);
                hi[d] = hi[d].max(n[d]);
            }
        }
        let scale = (hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2);
        let tiny = 1e-14 * scale;

        let mut positive = 0usize;
        for (k, t) in triangles.iter().enumerate() {
            let a = signed_area(kept[t[0]], kept[t[1]], kept[t[2]]);
            if a.abs() <= tiny {
                return Err(Error::Mesh(format!("triangle {k} is degenerate (area {a:e})")));
            }
            if a > 0.0 {
                positive += 1;
            }
        }
        let flipped = positive == 0;
        if flipped {
            for t in &mut triangles {
                t.swap(1, 2);
            }
        } else if positive != triangles.len() {
            return Err(Error::Mesh(format!(
                "{} of {} triangles are inverted relative to the rest",
                triangles.len() - positive,
                triangles.len()
            )));
        }

        let mut parent: Vec<usize> = (0..kept.len()).collect();
        for t in &triangles {
            for e in [(t[0], t[1]), (t[1], t[2])] {
                let (a, b) = (find(&mut parent, e.0), find(&mut parent, e.1));
                parent[a] = b;
            }
        }
        let root = find(&mut parent, 0);
        if (0..kept.len()).any(|i| find(&mut parent, i) != root) {
            return Err(Error::Mesh("mesh is not connected".into()));
        }

        let mut edges: BTreeMap<(usize, usize), ([usize; 2], usize)> = BTreeMap::new();
        for t in &triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edges.entry((a.min(b), a.max(b))).or_insert(([a, b], 0)).1 += 1;
            }
        }
        if let Some(((a, b), _)) = edges.iter().find(|(_, v)| v.1 > 2) {
            return Err(Error::Mesh(format!("edge ({a}, {b}) is shared by more than two triangles")));
        }
        let boundary = edges.values().filter(|v| v.1 == 1).map(|v| v.0).collect();

        let mut areas = Vec::with_capacity(triangles.len());
        let mut gradients = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let [p1, p2, p3] = [kept[t[0]], kept[t[1]], kept[t[2]]];
            let a = signed_area(p1, p2, p3);
            let s = 1.0 / (2.0 * a);
            areas.push(a);
            gradients.push([
                [(p2[1] - p3[1]) * s, (p3[0] - p2[0]) * s],
                [(p3[1] - p1[1]) * s, (p1[0] - p3[0]) * s],
                [(p1[1] - p2[1]) * s, (p2[0] - p1[0]) * s],
            ]);
        }

        Ok(TriMesh { nodes: kept, triangles, areas, gradients, boundary, dropped_nodes, flipped })
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    /// Gradients of the three local basis functions on each triangle.
    pub fn gradients(&self) -> &[[[f64; 2]; 3]] {
        &self.gradients
    }

    /// Boundary edges, oriented as in their triangle.
    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Nodes discarded because no triangle used them.
    pub fn dropped_nodes(&self) -> usize {
        self.dropped_nodes
    }

    /// True when the input was clockwise and got reoriented.
    pub fn was_flipped(&self) -> bool {
        self.flipped
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary.iter().map(|e| self.edge_length(e[0], e[1])).sum()
    }

    fn edge_length(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.nodes[a], self.nodes[b]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    }

    /// Longest edge of triangle `k`.
    pub fn diameter(&self, k: usize) -> f64 {
        let t = self.triangles[k];
        self.edge_length(t[0], t[1]).max(self.edge_length(t[1], t[2])).max(self.edge_length(t[2], t[0]))
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.triangle_count()).map(|k| self.diameter(k)).fold(0.0, f64::max)
    }

    /// Splits every triangle into four through its edge midpoints.
    pub fn refine_uniform(&self) -> Result<Refinement> {
        let mut nodes = self.nodes.clone();
        let mut parents = Vec::new();
        let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (nodes[a], nodes[b]);
                nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                parents.push([a, b]);
                nodes.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for t in &self.triangles {
            let [a, b, c] = *t;
            let ab = midpoint(a, b, &mut nodes);
            let bc = midpoint(b, c, &mut nodes);
            let ca = midpoint(c, a, &mut nodes);
            triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let coarse_nodes = self.node_count();
        Ok(Refinement { mesh: TriMesh::new(nodes, triangles)?, coarse_nodes, parents })
    }
}

/// A uniformly refined mesh. Coarse nodes keep their indices; new nodes sit on
/// the midpoints of the recorded parent edges.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub mesh: TriMesh,
    coarse_nodes: usize,
    parents: Vec<[usize; 2]>,
}

impl Refinement {
    /// Exact embedding of a coarse P1 function into the fine space.
    pub fn prolongate(&self, coarse: &[f64]) -> Result<Vec<f64>> {
        if coarse.len() != self.coarse_nodes {
            return Err(Error::Dimension(format!("expected {} coarse values, got {}", self.coarse_nodes, coarse.len())));
        }
        let mut fine = coarse.to_vec();
        fine.extend(self.parents.iter().map(|e| 0.5 * (coarse[e[0]] + coarse[e[1]])));
        Ok(fine)
    }
}

/// Radius factor of the synthetic lake outline at angle `theta`: a three-lobed
/// shoreline with a smaller five-fold ripple, giving sheltered inlets.
pub fn lake_outline(theta: f64) -> f64 {
    1.0 + 0.3 * (3.0 * theta).cos() + 0.12 * (5.0 * theta).sin()
}

/// Star-shaped lake of nominal radius `radius` meshed with `rings` concentric
/// rings; ring `k` carries `6k` nodes.
pub fn lake_mesh(radius: f64, rings: usize) -> Result<TriMesh> {
    if !(radius > 0.0) || rings == 0 {
        return Err(Error::Mesh(format!("lake mesh needs radius > 0 and rings >= 1, got {radius}, {rings}")));
    }
    let mut nodes = vec![[0.0, 0.0]];
    let mut start = vec![0usize];
    for k in 1..=rings {
        start.push(nodes.len());
        let m = 6 * k;
        for j in 0..m {
            let th = 2.0 * PI * j as f64 / m as f64;
            let r = radius * (k as f64 / rings as f64) * lake_outline(th);
            nodes.push([r * th.cos(), r * th.sin()]);
        }
    }
    let mut triangles = Vec::new();
    for k in 1..=rings {
        let m_out = 6 * k;
        let m_in = if k == 1 { 1 } else { 6 * (k - 1) };
        let outer = |j: usize| start[k] + j % m_out;
        let inner = |i: usize| start[k - 1] + i % m_in;
        let (mut i, mut j) = (0usize, 0usize);
        while i < m_in || j < m_out {
            // Compare the angles of the next inner and outer nodes.
            let next_out = (j + 1) as f64 / m_out as f64;
            let next_in = if k == 1 { f64::INFINITY } else { (i + 1) as f64 / m_in as f64 };
            if j < m_out && (i == m_in || next_out <= next_in) {
                triangles.push([inner(i), outer(j), outer(j + 1)]);
                j += 1;
            } else {
                triangles.push([inner(i), outer(j), inner(i + 1)]);
                i += 1;
            }
            if k == 1 && j == m_out {
                break;
            }
        }
    }
    TriMesh::new(nodes, triangles)
}
