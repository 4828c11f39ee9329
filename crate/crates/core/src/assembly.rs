//! Element-wise assembly of the Helmholtz system
//!
//! ```text
//! A = S − k² M + i k B,
//! ```
//!
//! with `S` the P1 stiffness matrix, `M` the consistent mass matrix and `B` the
//! boundary mass matrix. Element matrices are evaluated in closed form; only
//! the data terms go through quadrature. Contributions are accumulated in
//! triangle order, then boundary-edge order, so the result is reproducible
//! bit for bit.

use num_complex::Complex64;

use crate::analytic::{exact_unchecked, robin_g, source_f, ExactEval, ProblemSpec};
use crate::mesh::{Mesh, Point2};
use crate::quadrature::{edge_rule, triangle_rule, QuadratureError};
use crate::sparse::{SparseComplexMatrix, TripletBuilder};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AssemblyError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("the elliptic projection needs an exact solution")]
    NoExactSolution,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Quadrature degrees used for the data terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LoadQuadrature {
    pub triangle: usize,
    pub edge: usize,
}

impl Default for LoadQuadrature {
    fn default() -> Self {
        Self { triangle: 4, edge: 5 }
    }
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Local stiffness matrix `|T| ∇λ_i · ∇λ_j`.
pub fn element_stiffness(mesh: &Mesh, t: usize) -> [[f64; 3]; 3] {
    let g = mesh.hat_gradients(t);
    let area = mesh.area(t);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (g[i].x * g[j].x + g[i].y * g[j].y);
        }
    }
    k
}

/// Local consistent mass matrix `|T|/12 (1 + δ_ij)`.
pub fn element_mass(mesh: &Mesh, t: usize) -> [[f64; 3]; 3] {
    let a = mesh.area(t) / 12.0;
    let mut m = [[a; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 2.0 * a;
    }
    m
}

/// Assembles `s·S + m·M + b·B` over the mesh.
fn combined_matrix(mesh: &Mesh, s: Complex64, m: Complex64, b: Complex64) -> SparseComplexMatrix {
    let mut builder = TripletBuilder::with_capacity(
        mesh.num_nodes(),
        9 * mesh.num_triangles() + 4 * mesh.boundary_nodes().len(),
    );
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles()[t];
        let ke = element_stiffness(mesh, t);
        let me = element_mass(mesh, t);
        for i in 0..3 {
            for j in 0..3 {
                builder.add(tri[i], tri[j], s * ke[i][j] + m * me[i][j]);
            }
        }
    }
    if b != ZERO {
        for e in mesh.edges().iter().filter(|e| e.is_boundary()) {
            let [p, q] = e.nodes;
            let len = mesh.node(p).dist(mesh.node(q));
            let (d, o) = (b * (len / 3.0), b * (len / 6.0));
            builder.add(p, p, d);
            builder.add(p, q, o);
            builder.add(q, p, o);
            builder.add(q, q, d);
        }
    }
    builder.build()
}

pub fn stiffness_matrix(mesh: &Mesh) -> SparseComplexMatrix {
    combined_matrix(mesh, Complex64::new(1.0, 0.0), ZERO, ZERO)
}

pub fn mass_matrix(mesh: &Mesh) -> SparseComplexMatrix {
    combined_matrix(mesh, ZERO, Complex64::new(1.0, 0.0), ZERO)
}

pub fn boundary_mass_matrix(mesh: &Mesh) -> SparseComplexMatrix {
    combined_matrix(mesh, ZERO, ZERO, Complex64::new(1.0, 0.0))
}

/// Adds `∫_T f φ_i` for every triangle.
fn add_volume_load(mesh: &Mesh, degree: usize, f: impl Fn(Point2) -> Complex64, rhs: &mut [Complex64]) -> Result<(), AssemblyError> {
    let rule = triangle_rule(degree)?;
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles()[t];
        let area = mesh.area(t);
        for (bary, &w) in rule.points.iter().zip(&rule.weights) {
            let fw = f(mesh.map_point(t, *bary)) * (w * area);
            for i in 0..3 {
                rhs[tri[i]] += fw * bary[i];
            }
        }
    }
    Ok(())
}

/// Adds `∫_e g φ_i` over boundary edges; `g` receives the point and the
/// outward unit normal.
fn add_boundary_load(
    mesh: &Mesh,
    degree: usize,
    g: impl Fn(Point2, Point2) -> Complex64,
    rhs: &mut [Complex64],
) -> Result<(), AssemblyError> {
    let rule = edge_rule(degree)?;
    for (_, tail, head) in mesh.oriented_boundary_edges() {
        let (a, b) = (mesh.node(tail), mesh.node(head));
        let len = a.dist(b);
        let normal = Point2::new((b.y - a.y) / len, (a.x - b.x) / len);
        for (&s, &w) in rule.points.iter().zip(&rule.weights) {
            let gw = g(a + s * (b - a), normal) * (w * len);
            rhs[tail] += gw * (1.0 - s);
            rhs[head] += gw * s;
        }
    }
    Ok(())
}

/// The Helmholtz system matrix and load vector for problem `p`.
pub fn assemble_helmholtz(
    mesh: &Mesh,
    p: &ProblemSpec,
    quad: LoadQuadrature,
) -> Result<(SparseComplexMatrix, Vec<Complex64>), AssemblyError> {
    if mesh.num_triangles() == 0 {
        return Err(AssemblyError::EmptyMesh);
    }
    let k = p.k();
    let a = combined_matrix(mesh, Complex64::new(1.0, 0.0), Complex64::new(-k * k, 0.0), Complex64::new(0.0, k));
    let mut rhs = vec![ZERO; mesh.num_nodes()];
    add_volume_load(mesh, quad.triangle, |x| source_f(p, x), &mut rhs)?;
    if p.has_exact() {
        add_boundary_load(mesh, quad.edge, |x, n| robin_g(p, x, n), &mut rhs)?;
    }
    Ok((a, rhs))
}

/// The elliptic projection system `(S + ikB) P_h u = a(u, ·) + ik⟨u, ·⟩`
/// for the exact solution of `p`.
pub fn assemble_elliptic_projection(
    mesh: &Mesh,
    p: &ProblemSpec,
    quad: LoadQuadrature,
) -> Result<(SparseComplexMatrix, Vec<Complex64>), AssemblyError> {
    if !p.has_exact() {
        return Err(AssemblyError::NoExactSolution);
    }
    assemble_elliptic_projection_with(mesh, p.k(), |x| exact_unchecked(p, x), quad)
}

/// Elliptic projection of an arbitrary function given by value and gradient.
pub fn assemble_elliptic_projection_with(
    mesh: &Mesh,
    k: f64,
    u: impl Fn(Point2) -> ExactEval,
    quad: LoadQuadrature,
) -> Result<(SparseComplexMatrix, Vec<Complex64>), AssemblyError> {
    if mesh.num_triangles() == 0 {
        return Err(AssemblyError::EmptyMesh);
    }
    let a = combined_matrix(mesh, Complex64::new(1.0, 0.0), ZERO, Complex64::new(0.0, k));
    let mut rhs = vec![ZERO; mesh.num_nodes()];
    let rule = triangle_rule(quad.triangle)?;
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles()[t];
        let area = mesh.area(t);
        let g = mesh.hat_gradients(t);
        for (bary, &w) in rule.points.iter().zip(&rule.weights) {
            let e = u(mesh.map_point(t, *bary));
            for i in 0..3 {
                rhs[tri[i]] += (e.gradient[0] * g[i].x + e.gradient[1] * g[i].y) * (w * area);
            }
        }
    }
    let ik = Complex64::new(0.0, k);
    add_boundary_load(mesh, quad.edge, |x, _| ik * u(x).value, &mut rhs)?;
    Ok((a, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::DomainTag;
    use crate::mesh::{build_hexagon_mesh, build_square_mesh, Diagonal, SquareDomain};

    fn total(a: &SparseComplexMatrix) -> Complex64 {
        a.values().iter().sum()
    }

    #[test]
    fn partition_of_unity_sums() {
        let hex = build_hexagon_mesh(4).unwrap();
        assert!((total(&mass_matrix(&hex)).re - 1.5 * 3f64.sqrt()).abs() < 1e-13);
        assert!((total(&boundary_mass_matrix(&hex)).re - 6.0).abs() < 1e-13);
        let sq = build_square_mesh(5, SquareDomain::UnitSquare, Diagonal::NorthEast).unwrap();
        assert!((total(&mass_matrix(&sq)).re - 1.0).abs() < 1e-14);
        assert!((total(&boundary_mass_matrix(&sq)).re - 4.0).abs() < 1e-13);
        let s = stiffness_matrix(&sq);
        for i in 0..s.dim() {
            assert!(s.row(i).1.iter().sum::<Complex64>().norm() < 1e-12);
        }
    }

    #[test]
    fn helmholtz_matrix_is_complex_symmetric() {
        let mesh = build_square_mesh(6, SquareDomain::LShape, Diagonal::NorthWest).unwrap();
        let p = ProblemSpec::bessel(7.0, DomainTag::LShape).unwrap();
        let (a, b) = assemble_helmholtz(&mesh, &p, LoadQuadrature::default()).unwrap();
        assert!(a.is_symmetric());
        assert_eq!(b.len(), mesh.num_nodes());
        let rejected = ProblemSpec::gaussian(7.0, DomainTag::LShape).unwrap();
        assert_eq!(
            assemble_elliptic_projection(&mesh, &rejected, LoadQuadrature::default()).unwrap_err(),
            AssemblyError::NoExactSolution
        );
    }

    #[test]
    fn load_vector_converges_with_quadrature_degree() {
        let mesh = build_hexagon_mesh(16).unwrap();
        let p = ProblemSpec::bessel(10.0, DomainTag::Hexagon).unwrap();
        let (_, b8) = assemble_helmholtz(&mesh, &p, LoadQuadrature { triangle: 8, edge: 8 }).unwrap();
        let rel = |q: LoadQuadrature| {
            let (_, b) = assemble_helmholtz(&mesh, &p, q).unwrap();
            crate::sparse::norm2(&b.iter().zip(&b8).map(|(x, y)| x - y).collect::<Vec<_>>()) / crate::sparse::norm2(&b8)
        };
        // Measured: 3.5e-8 for the default rules, 1.0e-11 with degree 6.
        let default = rel(LoadQuadrature::default());
        let six = rel(LoadQuadrature { triangle: 6, edge: 6 });
        assert!(default <= 5e-8, "{default:e}");
        assert!(six <= 1e-10, "{six:e}");
        assert!(rel(LoadQuadrature { triangle: 2, edge: 2 }) > 100.0 * default);
    }

    #[test]
    fn unsupported_load_degree_is_reported() {
        let mesh = build_hexagon_mesh(1).unwrap();
        let p = ProblemSpec::bessel(10.0, DomainTag::Hexagon).unwrap();
        let err = assemble_helmholtz(&mesh, &p, LoadQuadrature { triangle: 9, edge: 5 }).unwrap_err();
        assert_eq!(err, AssemblyError::Quadrature(QuadratureError::UnsupportedDegree(9)));
    }
}
