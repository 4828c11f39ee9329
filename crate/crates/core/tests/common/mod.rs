//! Independent reference computations shared by the property and
//! acceptance suites.

#![allow(dead_code)]

use helmholtz_ppr::assembly::{boundary_mass_matrix, mass_matrix, stiffness_matrix};
use helmholtz_ppr::extrapolate::{estimator_eta, richardson, LevelPair};
use helmholtz_ppr::field::{CVec2, NodalField, P1Value};
use helmholtz_ppr::mesh::Mesh;
use helmholtz_ppr::quadrature::{edge_rule, triangle_rule};
use helmholtz_ppr::recovery::RecoveryOperator;
use helmholtz_ppr::sparse::SparseComplexMatrix;
use helmholtz_ppr::Complex64;

pub type Dense = Vec<Vec<f64>>;

/// Hat gradients and area of a triangle, computed without the mesh helpers.
fn hat_gradients(v: [helmholtz_ppr::Point2; 3]) -> ([[f64; 2]; 3], f64) {
    let (x1, y1) = (v[1].x - v[0].x, v[1].y - v[0].y);
    let (x2, y2) = (v[2].x - v[0].x, v[2].y - v[0].y);
    let det = x1 * y2 - x2 * y1;
    let g1 = [y2 / det, -x2 / det];
    let g2 = [-y1 / det, x1 / det];
    ([[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2], det.abs() / 2.0)
}

/// Stiffness, mass and boundary mass matrices assembled densely by
/// quadrature.
pub fn brute_force_matrices(mesh: &Mesh) -> (Dense, Dense, Dense) {
    let n = mesh.num_nodes();
    let (mut s, mut m, mut b) = (vec![vec![0.0; n]; n], vec![vec![0.0; n]; n], vec![vec![0.0; n]; n]);
    let tri = triangle_rule(6).unwrap();
    for (t, nodes) in mesh.triangles().iter().enumerate() {
        let (grads, area) = hat_gradients(mesh.vertices(t));
        for (bary, w) in tri.points.iter().zip(&tri.weights) {
            for i in 0..3 {
                for j in 0..3 {
                    s[nodes[i]][nodes[j]] += w * area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                    m[nodes[i]][nodes[j]] += w * area * bary[i] * bary[j];
                }
            }
        }
    }
    let edge = edge_rule(4).unwrap();
    for e in mesh.edges().iter().filter(|e| e.is_boundary()) {
        let len = mesh.node(e.nodes[0]).dist(mesh.node(e.nodes[1]));
        for (t, w) in edge.points.iter().zip(&edge.weights) {
            let phi = [1.0 - t, *t];
            for i in 0..2 {
                for j in 0..2 {
                    b[e.nodes[i]][e.nodes[j]] += w * len * phi[i] * phi[j];
                }
            }
        }
    }
    (s, m, b)
}

/// Largest entrywise difference between a sparse matrix and a real dense one.
pub fn max_dense_diff(a: &SparseComplexMatrix, d: &Dense) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in d.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            worst = worst.max((a.get(i, j) - Complex64::new(v, 0.0)).norm());
        }
    }
    worst
}

/// Worst brute-force mismatch over the three system matrices, relative to
/// the largest entry of each.
pub fn assembly_mismatch(mesh: &Mesh) -> f64 {
    let (s, m, b) = brute_force_matrices(mesh);
    [(stiffness_matrix(mesh), s), (mass_matrix(mesh), m), (boundary_mass_matrix(mesh), b)]
        .iter()
        .map(|(a, d)| max_dense_diff(a, d) / a.max_abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Worst `|A_ij − A_ji|`.
pub fn asymmetry(a: &SparseComplexMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.dim() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            worst = worst.max((v - a.get(j, i)).norm());
        }
    }
    worst
}

/// `1ᵀ M 1 − |Ω|` and `1ᵀ B 1 − |∂Ω|`.
pub fn partition_defects(mesh: &Mesh) -> (f64, f64) {
    let total = |a: &SparseComplexMatrix| a.values().iter().map(|v| v.re).sum::<f64>();
    (
        (total(&mass_matrix(mesh)) - mesh.total_area()).abs(),
        (total(&boundary_mass_matrix(mesh)) - mesh.boundary_length()).abs(),
    )
}

/// Compares the nodewise extrapolation of two recovered gradients with
/// the elementwise combination `(4 g_fine(x) − g_coarse(x))/3` evaluated at
/// quadrature points of every fine triangle, with the coarse field sampled
/// on the parent triangle.
pub fn richardson_nodewise_vs_elementwise(pair: &LevelPair, gc: &[CVec2], gf: &[CVec2]) -> f64 {
    let (coarse, fine) = (pair.coarse(), pair.fine());
    let gcv = helmholtz_ppr::VectorNodalField::new(gc.to_vec());
    let gfv = helmholtz_ppr::VectorNodalField::new(gf.to_vec());
    let nodewise = richardson(&gfv, &pair.prolong_vector(&gcv).unwrap()).unwrap();
    let rule = triangle_rule(4).unwrap();
    let mut worst: f64 = 0.0;
    for t in 0..fine.num_triangles() {
        let parent = pair.parents().fine_tri_to_coarse_tri[t];
        for bary in &rule.points {
            let x = fine.map_point(t, *bary);
            let f = gfv.eval(fine, t, *bary).unwrap();
            let c = gcv.eval(coarse, parent, barycentric_in(coarse, parent, x)).unwrap();
            let elementwise = CVec2::barycentric_combination([f, c, c], [4.0 / 3.0, -1.0 / 3.0, 0.0]);
            let n = nodewise.eval(fine, t, *bary).unwrap();
            worst = worst.max((0..2).map(|i| (n[i] - elementwise[i]).norm()).fold(0.0, f64::max));
        }
    }
    worst
}

/// Barycentric coordinates of `x` in triangle `t`, clamped against
/// rounding so they are accepted by the evaluators.
pub fn barycentric_in(mesh: &Mesh, t: usize, x: helmholtz_ppr::Point2) -> [f64; 3] {
    let [a, b, c] = mesh.vertices(t);
    let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    let l1 = ((x.x - a.x) * (c.y - a.y) - (c.x - a.x) * (x.y - a.y)) / det;
    let l2 = ((b.x - a.x) * (x.y - a.y) - (x.x - a.x) * (b.y - a.y)) / det;
    let mut l = [1.0 - l1 - l2, l1, l2].map(|v: f64| v.max(0.0));
    let s: f64 = l.iter().sum();
    l.iter_mut().for_each(|v| *v /= s);
    l
}

/// `|η(e^{iθ} u) − η(u)| / η(u)` for a pair of solutions on nested meshes.
pub fn eta_phase_defect(pair: &LevelPair, uc: &NodalField, uf: &NodalField, theta: f64) -> f64 {
    let opc = RecoveryOperator::new(pair.coarse()).unwrap();
    let opf = RecoveryOperator::new(pair.fine()).unwrap();
    let eta = |c: &NodalField, f: &NodalField| {
        estimator_eta(pair, &opc.apply(c).unwrap(), &opf.apply(f).unwrap(), f).unwrap()
    };
    let base = eta(uc, uf);
    let rot = |u: &NodalField| helmholtz_ppr::extrapolate::rotate_phase(u, theta);
    (eta(&rot(uc), &rot(uf)) - base).abs() / base
}
