//! Conforming triangulations of polygonal domains.
//!
//! A [`Mesh`] is immutable once built: nodes, counterclockwise triangles,
//! the derived edge list with triangle adjacency, boundary markers and the
//! polygon corner set. Generators live in the submodules; everything else in
//! the crate consumes meshes read-only.

mod delaunay;
mod io;
mod quality;
mod refine;
mod structured;

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};

pub use delaunay::delaunay_mesh;
pub use io::{read_mesh, write_mesh};
pub use quality::{
    alpha_report, edge_geometry, AlphaFit, EdgeGeometry, EdgeSide, MeshQualityReport,
};
pub use refine::{refine_red, NodeOrigin, ParentMap};
pub use structured::{build_hexagon_mesh, build_square_mesh, Diagonal, SquareDomain};

/// Relative area below which a triangle counts as degenerate.
const DEGENERATE_AREA: f64 = 1e-14;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("mesh has no triangles")]
    Empty,
    #[error("triangle {0} references node {1} which does not exist")]
    BadIndex(usize, usize),
    #[error("triangle {0} is degenerate (area {1:e})")]
    DegenerateTriangle(usize, f64),
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("node {0} is not used by any triangle")]
    UnusedNode(usize),
    #[error("the L-shaped domain needs an even number of cells per side, got {0}")]
    OddLShape(usize),
    #[error("invalid polygon: {0}")]
    BadPolygon(String),
    #[error("invalid mesh size {0}")]
    BadSize(f64),
    #[error("mesh file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    fn mul(self, p: Point2) -> Point2 {
        Point2::new(self * p.x, self * p.y)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Twice the signed area of the triangle (a, b, c); positive when CCW.
pub fn orient2d(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// An edge with its one or two adjacent triangles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    /// Endpoints, smaller index first.
    pub nodes: [usize; 2],
    pub triangles: (usize, Option<usize>),
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.triangles.1.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    nodes: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    /// `tri_edges[t][i]` is the edge opposite local vertex `i`.
    tri_edges: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    is_boundary: Vec<bool>,
    corner_nodes: Vec<usize>,
    node_tri_offsets: Vec<usize>,
    node_tri_list: Vec<usize>,
    h_max: f64,
}

impl Mesh {
    /// Builds a mesh from raw nodes and triangles.
    ///
    /// Clockwise triangles are reoriented. `corners` lists the polygon
    /// vertices; pass `None` to detect them from the boundary geometry.
    pub fn new(
        nodes: Vec<Point2>,
        mut triangles: Vec<[usize; 3]>,
        corners: Option<Vec<usize>>,
    ) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let n = nodes.len();
        let mut used = vec![false; n];
        let mut h_max: f64 = 0.0;
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= n {
                    return Err(MeshError::BadIndex(t, v));
                }
                used[v] = true;
            }
            let [a, b, c] = tri.map(|v| nodes[v]);
            let scale = (b - a).norm().max((c - a).norm()).max((c - b).norm());
            h_max = h_max.max(scale);
            let det = orient2d(a, b, c);
            if det.abs() <= DEGENERATE_AREA * scale * scale {
                return Err(MeshError::DegenerateTriangle(t, 0.5 * det));
            }
            if det < 0.0 {
                tri.swap(1, 2);
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(MeshError::UnusedNode(v));
        }

        // Edges in order of first appearance (triangle order, local edge order).
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len() / 2 + 8);
        let mut edges: Vec<Edge> = Vec::with_capacity(3 * triangles.len() / 2 + 8);
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            for i in 0..3 {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = match lookup.get(&key) {
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.triangles.1.is_some() {
                            return Err(MeshError::NonManifoldEdge(key.0, key.1));
                        }
                        edge.triangles.1 = Some(t);
                        e
                    }
                    None => {
                        edges.push(Edge { nodes: [key.0, key.1], triangles: (t, None) });
                        lookup.insert(key, edges.len() - 1);
                        edges.len() - 1
                    }
                };
                te[i] = e;
            }
            tri_edges.push(te);
        }

        let mut is_boundary = vec![false; n];
        for e in edges.iter().filter(|e| e.is_boundary()) {
            is_boundary[e.nodes[0]] = true;
            is_boundary[e.nodes[1]] = true;
        }
        let boundary_nodes: Vec<usize> = (0..n).filter(|&i| is_boundary[i]).collect();

        let mut counts = vec![0usize; n + 1];
        for tri in &triangles {
            for &v in tri {
                counts[v + 1] += 1;
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut node_tri_list = vec![0usize; counts[n]];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                node_tri_list[fill[v]] = t;
                fill[v] += 1;
            }
        }

        let mut mesh = Mesh {
            nodes,
            triangles,
            edges,
            tri_edges,
            boundary_nodes,
            is_boundary,
            corner_nodes: Vec::new(),
            node_tri_offsets: counts,
            node_tri_list,
            h_max,
        };
        mesh.corner_nodes = match corners {
            Some(mut c) => {
                c.sort_unstable();
                c.dedup();
                c
            }
            None => mesh.detect_corners(),
        };
        Ok(mesh)
    }

    fn detect_corners(&self) -> Vec<usize> {
        let mut dirs: Vec<Vec<Point2>> = vec![Vec::new(); self.nodes.len()];
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            let [a, b] = e.nodes;
            let d = self.nodes[b] - self.nodes[a];
            dirs[a].push(d);
            dirs[b].push(d);
        }
        self.boundary_nodes
            .iter()
            .copied()
            .filter(|&v| match dirs[v].as_slice() {
                [d0, d1] => d0.cross(*d1).abs() > 1e-10 * d0.norm() * d1.norm(),
                _ => true,
            })
            .collect()
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point2 {
        self.nodes[i]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges of triangle `t`; entry `i` is opposite local vertex `i`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn is_boundary_node(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    pub fn corner_nodes(&self) -> &[usize] {
        &self.corner_nodes
    }

    /// Longest edge length.
    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Triangles containing node `i`, in increasing index order.
    pub fn node_triangles(&self, i: usize) -> &[usize] {
        &self.node_tri_list[self.node_tri_offsets[i]..self.node_tri_offsets[i + 1]]
    }

    pub fn vertices(&self, t: usize) -> [Point2; 3] {
        self.triangles[t].map(|v| self.nodes[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.vertices(t);
        0.5 * orient2d(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.edges
            .iter()
            .filter(|e| e.is_boundary())
            .map(|e| self.nodes[e.nodes[0]].dist(self.nodes[e.nodes[1]]))
            .sum()
    }

    /// Boundary edges as `(edge index, tail, head)` with the domain on the left.
    pub fn oriented_boundary_edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.edges.iter().enumerate().filter(|(_, e)| e.is_boundary()).map(|(i, e)| {
            let t = e.triangles.0;
            let tri = self.triangles[t];
            let local = self.tri_edges[t].iter().position(|&x| x == i).expect("edge belongs to its triangle");
            (i, tri[(local + 1) % 3], tri[(local + 2) % 3])
        })
    }

    /// Point at barycentric coordinates `bary` of triangle `t`.
    pub fn map_point(&self, t: usize, bary: [f64; 3]) -> Point2 {
        let [a, b, c] = self.vertices(t);
        Point2::new(
            bary[0] * a.x + bary[1] * b.x + bary[2] * c.x,
            bary[0] * a.y + bary[1] * b.y + bary[2] * c.y,
        )
    }

    /// Gradients of the three barycentric (hat) functions on triangle `t`.
    pub fn hat_gradients(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.vertices(t);
        let twice_area = orient2d(a, b, c);
        let grad = |p: Point2, q: Point2| Point2::new((p.y - q.y) / twice_area, (q.x - p.x) / twice_area);
        [grad(b, c), grad(c, a), grad(a, b)]
    }

    /// `#nodes - #edges + #triangles`; equals 1 for simply connected domains.
    pub fn euler_characteristic(&self) -> i64 {
        self.nodes.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    /// Checks orientation, edge adjacency and that boundary edges close into
    /// loops (no hanging nodes). Returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        for t in 0..self.triangles.len() {
            if self.area(t) <= 0.0 {
                return Err(format!("triangle {t} is not counterclockwise"));
            }
        }
        let mut degree = vec![0usize; self.nodes.len()];
        for e in &self.edges {
            if let Some(t2) = e.triangles.1 {
                if t2 == e.triangles.0 {
                    return Err(format!("edge {:?} adjacent to one triangle twice", e.nodes));
                }
            } else {
                degree[e.nodes[0]] += 1;
                degree[e.nodes[1]] += 1;
            }
        }
        if let Some(v) = degree.iter().position(|&d| d != 0 && d != 2) {
            return Err(format!("boundary node {v} has {} boundary edges", degree[v]));
        }
        // A hanging node lies strictly inside some boundary-marked edge.
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            let (a, b) = (self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]);
            let len = a.dist(b);
            for &v in &self.boundary_nodes {
                if v == e.nodes[0] || v == e.nodes[1] {
                    continue;
                }
                let p = self.nodes[v];
                let s = (p - a).dot(b - a) / (len * len);
                if s > 1e-9 && s < 1.0 - 1e-9 && orient2d(a, b, p).abs() < 1e-12 * len * len {
                    return Err(format!("node {v} hangs on edge {:?}", e.nodes));
                }
            }
        }
        Ok(())
    }
}
