//! Uniform subdivision of a triangle.
//!
//! The subdivision number `N` splits every parent edge into `N` equal
//! segments. Nodes are `O + (i/N)(A − O) + (j/N)(B − O)` for `i + j ≤ N`,
//! numbered row by row starting at the base edge `OA` (`j = 0`). Every
//! element is similar or point-symmetric to the parent, so the mesh size is
//! the longest parent edge divided by `N`.

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;

use crate::geometry::{AffineMap, Point, TriangleShape};
use crate::{Error, Result};

/// Edge of the parent triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ParentEdge {
    /// `O → A`, the base `j = 0`.
    OA,
    /// `A → B`, the side `i + j = N`.
    AB,
    /// `B → O`, the side `i = 0`.
    BO,
}

impl ParentEdge {
    pub const ALL: [ParentEdge; 3] = [ParentEdge::OA, ParentEdge::AB, ParentEdge::BO];
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Edge {
    /// Endpoints, smaller index first.
    pub nodes: [usize; 2],
    /// Adjacent elements; the second slot is empty on the boundary.
    pub elements: [Option<usize>; 2],
    pub boundary: Option<ParentEdge>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub shape: TriangleShape,
    pub n: usize,
    pub nodes: Vec<Point>,
    /// Counterclockwise node triples.
    pub elements: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Local edge `k` of an element is the edge opposite its local vertex `k`.
    pub element_edges: Vec<[usize; 3]>,
    pub h: f64,
    lattice: Vec<(usize, usize)>,
}

fn row_offset(n: usize, j: usize) -> usize {
    j * (n + 1) - j * j.saturating_sub(1) / 2
}

/// Uniform `n`-subdivision of `shape`.
pub fn uniform_subdivide(shape: &TriangleShape, n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::domain("subdivision number must be at least 1"));
    }
    let [_, a, b] = shape.vertices();
    let idx = |i: usize, j: usize| row_offset(n, j) + i;

    let mut nodes = Vec::with_capacity((n + 1) * (n + 2) / 2);
    let mut lattice = Vec::with_capacity(nodes.capacity());
    for j in 0..=n {
        for i in 0..=(n - j) {
            let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
            nodes.push([s * a[0] + t * b[0], s * a[1] + t * b[1]]);
            lattice.push((i, j));
        }
    }

    let mut elements = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..(n - j) {
            elements.push([idx(i, j), idx(i + 1, j), idx(i, j + 1)]);
            if i + 1 < n - j {
                elements.push([idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
    }

    let mut pairs: Vec<([usize; 2], usize, usize)> = Vec::with_capacity(3 * n * n);
    for (e, tri) in elements.iter().enumerate() {
        for k in 0..3 {
            let (p, q) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            pairs.push(([p.min(q), p.max(q)], e, k));
        }
    }
    pairs.sort_unstable();

    let on_parent = |v: usize| {
        let (i, j) = lattice[v];
        [j == 0, i + j == n, i == 0]
    };

    let mut edges: Vec<Edge> = Vec::with_capacity(3 * n * (n + 1) / 2);
    let mut element_edges = vec![[usize::MAX; 3]; elements.len()];
    for (key, e, k) in pairs {
        match edges.last_mut() {
            Some(last) if last.nodes == key => last.elements[1] = Some(e),
            _ => {
                let (p, q) = (on_parent(key[0]), on_parent(key[1]));
                let boundary = (0..3)
                    .find(|&s| p[s] && q[s])
                    .map(|s| ParentEdge::ALL[s]);
                edges.push(Edge {
                    nodes: key,
                    elements: [Some(e), None],
                    boundary,
                });
            }
        }
        element_edges[e][k] = edges.len() - 1;
    }

    let h = shape.diameter() / n as f64;
    Ok(Mesh {
        shape: *shape,
        n,
        nodes,
        elements,
        edges,
        element_edges,
        h,
        lattice,
    })
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Lattice coordinates `(i, j)` of a node.
    pub fn lattice(&self, node: usize) -> (usize, usize) {
        self.lattice[node]
    }

    /// Whether a node lies on the given parent edge.
    pub fn node_on(&self, node: usize, parent: ParentEdge) -> bool {
        let (i, j) = self.lattice[node];
        match parent {
            ParentEdge::OA => j == 0,
            ParentEdge::AB => i + j == self.n,
            ParentEdge::BO => i == 0,
        }
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        ParentEdge::ALL.iter().any(|&p| self.node_on(node, p))
    }

    /// Signed area of an element.
    pub fn signed_area(&self, element: usize) -> f64 {
        let [a, b, c] = self.elements[element].map(|v| self.nodes[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [p, q] = self.edges[edge].nodes.map(|v| self.nodes[v]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    /// Longest element edge, measured.
    pub fn max_edge_length(&self) -> f64 {
        (0..self.edges.len())
            .map(|e| self.edge_length(e))
            .fold(0.0, f64::max)
    }

    pub fn boundary_edges(&self, parent: ParentEdge) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.boundary == Some(parent))
            .map(|(i, _)| i)
    }

    /// The same connectivity with every node moved by `map`.
    pub fn mapped(&self, map: &AffineMap) -> Mesh {
        let mut out = self.clone();
        out.nodes = self.nodes.iter().map(|&p| map.apply(p)).collect();
        out.shape = map.target;
        out.h = map.target.diameter() / self.n as f64;
        out
    }

    /// Edge index lookup by endpoints.
    pub fn edge_index(&self) -> HashMap<[usize; 2], usize> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, e)| (e.nodes, i))
            .collect()
    }

    /// Debug dump (nodes, elements, boundary tags). Not a stable format.
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        #[derive(Serialize)]
        struct Dump<'a> {
            n: usize,
            h: f64,
            nodes: &'a [Point],
            elements: &'a [[usize; 3]],
            boundary_edges: Vec<([usize; 2], ParentEdge)>,
        }
        let boundary_edges = self
            .edges
            .iter()
            .filter_map(|e| e.boundary.map(|b| (e.nodes, b)))
            .collect();
        serde_json::to_writer_pretty(
            w,
            &Dump {
                n: self.n,
                h: self.h,
                nodes: &self.nodes,
                elements: &self.elements,
                boundary_edges,
            },
        )?;
        Ok(())
    }
}
