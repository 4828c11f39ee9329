//! Per-edge geometric coefficients and the approximate-parallelogram /
//! approximate-isosceles mesh diagnostics.

use super::{Mesh, Point2};

/// Geometry of one edge as seen from one adjacent triangle.
///
/// With the triangle's vertices `v0, v1, v2` counterclockwise and the edge
/// opposite `v_local`, the edge `e+1` is the one opposite `v_{local+1}` and
/// `e-1` the one opposite `v_{local+2}`.
#[derive(Clone, Copy, Debug)]
pub struct EdgeSide {
    pub edge: usize,
    pub triangle: usize,
    pub local: usize,
    pub h_e: f64,
    pub h_next: f64,
    pub h_prev: f64,
    /// Angle opposite the edge.
    pub theta: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Unit tangent, counterclockwise with respect to the triangle.
    pub tangent: Point2,
    /// Unit normal pointing out of the triangle.
    pub normal: Point2,
}

#[derive(Clone, Debug)]
pub struct EdgeGeometry {
    sides: Vec<EdgeSide>,
}

impl EdgeGeometry {
    /// The side of triangle `t` opposite its local vertex `local`.
    pub fn side(&self, t: usize, local: usize) -> &EdgeSide {
        &self.sides[3 * t + local]
    }

    pub fn sides(&self) -> &[EdgeSide] {
        &self.sides
    }

    /// Both sides of edge `e` in `mesh` (one for boundary edges).
    pub fn sides_of_edge<'a>(&'a self, mesh: &Mesh, e: usize) -> (&'a EdgeSide, Option<&'a EdgeSide>) {
        let find = |t: usize| {
            let local = mesh.triangle_edges(t).iter().position(|&x| x == e).expect("edge of triangle");
            self.side(t, local)
        };
        let edge = &mesh.edges()[e];
        (find(edge.triangles.0), edge.triangles.1.map(find))
    }
}

/// Computes lengths, opposite angles, `beta_e`, `gamma_e`, tangents and
/// normals for every (edge, triangle) incidence.
pub fn edge_geometry(mesh: &Mesh) -> EdgeGeometry {
    let mut sides = Vec::with_capacity(3 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let v = mesh.vertices(t);
        let twice_area = super::orient2d(v[0], v[1], v[2]);
        for local in 0..3 {
            let apex = v[local];
            let p = v[(local + 1) % 3];
            let q = v[(local + 2) % 3];
            let (u, w) = (p - apex, q - apex);
            let cot = u.dot(w) / twice_area;
            let h_e = p.dist(q);
            let h_next = q.dist(apex);
            let h_prev = apex.dist(p);
            let tangent = (1.0 / h_e) * (q - p);
            sides.push(EdgeSide {
                edge: mesh.triangle_edges(t)[local],
                triangle: t,
                local,
                h_e,
                h_next,
                h_prev,
                theta: twice_area.atan2(u.dot(w)),
                beta: cot * (h_next * h_next - h_prev * h_prev) / 12.0,
                gamma: cot * (0.5 * twice_area) / 3.0,
                tangent,
                normal: Point2::new(tangent.y, -tangent.x),
            });
        }
    }
    EdgeGeometry { sides }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaFit {
    /// All defects vanish (below 1e-14); the condition holds for every alpha.
    Exact,
    Fitted(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelDefects {
    pub h: f64,
    pub max_interior_defect: f64,
    pub max_boundary_defect: f64,
}

#[derive(Clone, Debug)]
pub struct MeshQualityReport {
    pub levels: Vec<LevelDefects>,
    /// Values for the last (finest) mesh supplied.
    pub max_interior_defect: f64,
    pub max_boundary_defect: f64,
    /// Exponent for the interior-edge parallelogram condition.
    pub fitted_alpha: Option<AlphaFit>,
    /// Exponent for the boundary isosceles condition.
    pub fitted_alpha_boundary: Option<AlphaFit>,
}

const EXACT_DEFECT: f64 = 1e-14;

fn level_defects(mesh: &Mesh) -> LevelDefects {
    let geo = edge_geometry(mesh);
    let mut interior: f64 = 0.0;
    let mut boundary: f64 = 0.0;
    for e in 0..mesh.edges().len() {
        match geo.sides_of_edge(mesh, e) {
            (s, Some(s2)) => {
                interior = interior.max((s.h_prev - s2.h_prev).abs() + (s.h_next - s2.h_next).abs());
            }
            (s, None) => boundary = boundary.max((s.h_next - s.h_prev).abs()),
        }
    }
    LevelDefects { h: mesh.h_max(), max_interior_defect: interior, max_boundary_defect: boundary }
}

fn fit_alpha(points: &[(f64, f64)]) -> AlphaFit {
    let data: Vec<(f64, f64)> =
        points.iter().filter(|(_, d)| *d >= EXACT_DEFECT).map(|&(h, d)| (h.ln(), d.ln())).collect();
    if data.len() < 2 {
        return AlphaFit::Exact;
    }
    let n = data.len() as f64;
    let mx = data.iter().map(|p| p.0).sum::<f64>() / n;
    let my = data.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = data.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = data.iter().map(|p| (p.0 - mx).powi(2)).sum();
    AlphaFit::Fitted(sxy / sxx - 1.0)
}

/// Approximation-condition defects for a sequence of meshes, coarse to fine.
///
/// The fitted exponents are only reported when at least three meshes are
/// given.
pub fn alpha_report(meshes: &[Mesh]) -> MeshQualityReport {
    let levels: Vec<LevelDefects> = meshes.iter().map(level_defects).collect();
    let last = levels.last().copied().unwrap_or(LevelDefects { h: 0.0, max_interior_defect: 0.0, max_boundary_defect: 0.0 });
    let (fitted_alpha, fitted_alpha_boundary) = if levels.len() >= 3 {
        let interior: Vec<_> = levels.iter().map(|l| (l.h, l.max_interior_defect)).collect();
        let boundary: Vec<_> = levels.iter().map(|l| (l.h, l.max_boundary_defect)).collect();
        (Some(fit_alpha(&interior)), Some(fit_alpha(&boundary)))
    } else {
        (None, None)
    };
    MeshQualityReport {
        levels,
        max_interior_defect: last.max_interior_defect,
        max_boundary_defect: last.max_boundary_defect,
        fitted_alpha,
        fitted_alpha_boundary,
    }
}
