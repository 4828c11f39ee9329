//! Error norms against the exact solution, observed orders and the critical
//! mesh size.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

use crate::analytic::{exact_unchecked, DomainTag, ProblemSpec};
use crate::assembly::{assemble_helmholtz, AssemblyError, LoadQuadrature};
use crate::field::{CVec2, FieldError, NodalField, P1Value, VectorNodalField};
use crate::mesh::{build_hexagon_mesh, build_square_mesh, refine_red, Diagonal, Mesh, MeshError, SquareDomain};
use crate::quadrature::{triangle_rule, QuadratureError};
use crate::recovery::{RecoveryError, RecoveryOperator};
use crate::solve::{solve, SolveError, SolveOptions};

/// Default triangle quadrature degree for error norms.
pub const ERROR_QUAD_DEGREE: usize = 6;
/// Quadrature degree for the reference norms of the exact solution.
pub const REFERENCE_QUAD_DEGREE: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("the problem has no exact solution")]
    NoExactSolution,
    #[error("need at least two records with values in the requested column")]
    TooFewRecords,
    #[error("mesh sizes {0} and {1} are not a halving pair")]
    NotHalving(f64, f64),
    #[error("error {error:e} still above {eps} at the finest affordable m = {m}")]
    NotReached { m: usize, error: f64, eps: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
}

/// `‖u‖₀`, `|u|₁` and `|||u||| = (|u|₁² + k²‖u‖₀²)^{1/2}` of the exact solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceNorms {
    pub l2: f64,
    pub h1_semi: f64,
    pub energy: f64,
}

/// Absolute and relative errors of a discrete solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBundle {
    pub l2_err: f64,
    pub h1_semi_err: f64,
    pub energy_err: f64,
    pub rel_l2: f64,
    pub rel_h1: f64,
    pub rel_energy: f64,
    pub reference: ReferenceNorms,
}

impl ErrorBundle {
    fn new(l2_err: f64, h1_semi_err: f64, k: f64, reference: ReferenceNorms) -> Self {
        let energy_err = (h1_semi_err * h1_semi_err + k * k * l2_err * l2_err).sqrt();
        Self {
            l2_err,
            h1_semi_err,
            energy_err,
            rel_l2: l2_err / reference.l2,
            rel_h1: h1_semi_err / reference.h1_semi,
            rel_energy: energy_err / reference.energy,
            reference,
        }
    }

    /// Relative deviation from `energy² = |e|₁² + k²‖e‖₀²`.
    pub fn pythagoras_defect(&self, k: f64) -> f64 {
        let lhs = self.energy_err * self.energy_err;
        let rhs = self.h1_semi_err * self.h1_semi_err + k * k * self.l2_err * self.l2_err;
        if rhs == 0.0 {
            lhs
        } else {
            (lhs - rhs).abs() / rhs
        }
    }
}

/// Squared errors from one pass over the quadrature points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExactErrors {
    /// `‖u − u_h‖₀`, zero when no solution was given.
    pub l2: f64,
    /// `|u − u_h|₁`.
    pub h1_semi: f64,
    /// `‖g − ∇u‖₀` for each nodal vector field.
    pub fields: Vec<f64>,
    /// `‖g − ∇u‖₀` for each piecewise-constant gradient.
    pub piecewise: Vec<f64>,
}

/// Compares several discrete quantities with the exact solution, evaluating
/// the exact solution only once per quadrature point.
pub fn exact_errors(
    mesh: &Mesh,
    p: &ProblemSpec,
    degree: usize,
    solution: Option<&NodalField>,
    fields: &[&VectorNodalField],
    piecewise: &[&[CVec2]],
) -> Result<ExactErrors, MetricsError> {
    if !p.has_exact() {
        return Err(MetricsError::NoExactSolution);
    }
    if let Some(s) = solution {
        s.check(mesh)?;
    }
    for f in fields {
        f.check(mesh)?;
    }
    for g in piecewise {
        if g.len() != mesh.num_triangles() {
            return Err(FieldError::LengthMismatch { expected: mesh.num_triangles(), found: g.len() }.into());
        }
    }
    let rule = triangle_rule(degree)?;
    let (mut l2, mut h1) = (0.0, 0.0);
    let mut fe = vec![0.0; fields.len()];
    let mut pe = vec![0.0; piecewise.len()];
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles()[t];
        let area = mesh.area(t);
        let grad_uh = solution.map(|s| s.gradient_on(mesh, t));
        for (bary, &w) in rule.points.iter().zip(&rule.weights) {
            let e = exact_unchecked(p, mesh.map_point(t, *bary));
            let wa = w * area;
            let gerr = |g: CVec2| (g[0] - e.gradient[0]).norm_sqr() + (g[1] - e.gradient[1]).norm_sqr();
            if let (Some(s), Some(g)) = (solution, grad_uh) {
                let v = s.values();
                let uh = Complex64::barycentric_combination([v[tri[0]], v[tri[1]], v[tri[2]]], *bary);
                l2 += wa * (uh - e.value).norm_sqr();
                h1 += wa * gerr(g);
            }
            for (acc, f) in fe.iter_mut().zip(fields) {
                let v = f.values();
                *acc += wa * gerr(CVec2::barycentric_combination([v[tri[0]], v[tri[1]], v[tri[2]]], *bary));
            }
            for (acc, g) in pe.iter_mut().zip(piecewise) {
                *acc += wa * gerr(g[t]);
            }
        }
    }
    Ok(ExactErrors {
        l2: l2.sqrt(),
        h1_semi: h1.sqrt(),
        fields: fe.into_iter().map(f64::sqrt).collect(),
        piecewise: pe.into_iter().map(f64::sqrt).collect(),
    })
}

/// Norms of the exact solution over `mesh` with the given quadrature.
pub fn exact_norms_on(mesh: &Mesh, p: &ProblemSpec, degree: usize) -> Result<ReferenceNorms, MetricsError> {
    if !p.has_exact() {
        return Err(MetricsError::NoExactSolution);
    }
    let rule = triangle_rule(degree)?;
    let (mut l2, mut h1) = (0.0, 0.0);
    for t in 0..mesh.num_triangles() {
        let area = mesh.area(t);
        for (bary, &w) in rule.points.iter().zip(&rule.weights) {
            let e = exact_unchecked(p, mesh.map_point(t, *bary));
            l2 += w * area * e.value.norm_sqr();
            h1 += w * area * (e.gradient[0].norm_sqr() + e.gradient[1].norm_sqr());
        }
    }
    let k = p.k();
    Ok(ReferenceNorms { l2: l2.sqrt(), h1_semi: h1.sqrt(), energy: (h1 + k * k * l2).sqrt() })
}

type NormKey = (u64, DomainTag, Option<u64>);

fn norm_cache() -> &'static Mutex<HashMap<NormKey, ReferenceNorms>> {
    static CACHE: OnceLock<Mutex<HashMap<NormKey, ReferenceNorms>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Mesh used for the reference norms: fine enough that `k·h ≤ 1/2`.
fn reference_mesh(p: &ProblemSpec, mesh: &Mesh) -> Result<Mesh, MetricsError> {
    let k = p.k();
    let m = |scale: f64| {
        let m = ((scale * k).ceil() as usize).max(32);
        m + m % 2
    };
    Ok(match p.domain() {
        DomainTag::Hexagon => build_hexagon_mesh(m(2.0))?,
        DomainTag::UnitSquare => build_square_mesh(m(2.0 * 2f64.sqrt()), SquareDomain::UnitSquare, Diagonal::NorthEast)?,
        DomainTag::LShape => build_square_mesh(m(2.0 * 2f64.sqrt()), SquareDomain::LShape, Diagonal::NorthEast)?,
        DomainTag::Custom => {
            let mut fine = mesh.clone();
            while k * fine.h_max() > 0.5 {
                fine = refine_red(&fine)?.0;
            }
            fine
        }
    })
}

/// `‖u‖₀`, `|u|₁` and `|||u|||` of the exact solution on the problem domain,
/// computed once per wave number and domain and cached.
///
/// For [`DomainTag::Custom`] the domain is the region covered by `mesh`, and
/// the cache key includes a fingerprint of its geometry.
pub fn reference_norms(p: &ProblemSpec, mesh: &Mesh) -> Result<ReferenceNorms, MetricsError> {
    if !p.has_exact() {
        return Err(MetricsError::NoExactSolution);
    }
    let fingerprint = (p.domain() == DomainTag::Custom).then(|| {
        let s = mesh.nodes().iter().fold(0.0, |a, q| a + q.x * 0.754_877_666 + q.y * 0.569_840_291);
        (s + mesh.total_area()).to_bits() ^ mesh.num_nodes() as u64
    });
    let key = (p.k().to_bits(), p.domain(), fingerprint);
    if let Some(n) = norm_cache().lock().expect("norm cache poisoned").get(&key) {
        return Ok(*n);
    }
    let norms = exact_norms_on(&reference_mesh(p, mesh)?, p, REFERENCE_QUAD_DEGREE)?;
    norm_cache().lock().expect("norm cache poisoned").insert(key, norms);
    Ok(norms)
}

/// Errors of `solution` in the L², H¹-semi and energy norms.
pub fn error_bundle(mesh: &Mesh, solution: &NodalField, p: &ProblemSpec, degree: usize) -> Result<ErrorBundle, MetricsError> {
    let e = exact_errors(mesh, p, degree, Some(solution), &[], &[])?;
    Ok(ErrorBundle::new(e.l2, e.h1_semi, p.k(), reference_norms(p, mesh)?))
}

/// `‖g − ∇u‖₀` for a nodal vector field `g`.
pub fn grad_error_l2(mesh: &Mesh, g: &VectorNodalField, p: &ProblemSpec, degree: usize) -> Result<f64, MetricsError> {
    Ok(exact_errors(mesh, p, degree, None, &[g], &[])?.fields[0])
}

/// `‖g − ∇u‖₀` for a gradient that is constant on each triangle.
pub fn piecewise_grad_error_l2(mesh: &Mesh, g: &[CVec2], p: &ProblemSpec, degree: usize) -> Result<f64, MetricsError> {
    Ok(exact_errors(mesh, p, degree, None, &[], &[g])?.piecewise[0])
}

/// `‖g − ∇u_h‖₀`, integrated exactly with the edge-midpoint rule since the
/// integrand is quadratic on each triangle.
pub fn grad_diff_l2(mesh: &Mesh, g: &VectorNodalField, solution: &NodalField) -> Result<f64, FieldError> {
    g.check(mesh)?;
    solution.check(mesh)?;
    let rule = triangle_rule(2).expect("degree 2 is supported");
    let v = g.values();
    let mut sum = 0.0;
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles()[t];
        let gu = solution.gradient_on(mesh, t);
        let area = mesh.area(t);
        for (bary, &w) in rule.points.iter().zip(&rule.weights) {
            let gq = CVec2::barycentric_combination([v[tri[0]], v[tri[1]], v[tri[2]]], *bary);
            sum += w * area * ((gq[0] - gu[0]).norm_sqr() + (gq[1] - gu[1]).norm_sqr());
        }
    }
    Ok(sum.sqrt())
}

/// One refinement level of a convergence study.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceRecord {
    pub k: f64,
    pub m: usize,
    pub h: f64,
    pub dof: usize,
    pub rel_h1_fem: Option<f64>,
    pub rel_l2_fem: Option<f64>,
    pub rel_energy_fem: Option<f64>,
    /// `‖G_h u_h − ∇u‖₀ / |u|₁`.
    pub rel_grad_ppr: Option<f64>,
    /// `‖R G_h u_h − ∇u‖₀ / |u|₁`.
    pub rel_grad_rppr: Option<f64>,
    /// `‖G_h u_I − ∇u‖₀ / |u|₁`.
    pub rel_grad_ppr_interp: Option<f64>,
    /// `‖R ∇u_h − ∇u‖₀ / |u|₁`.
    pub rel_grad_rfem: Option<f64>,
    pub eta: Option<f64>,
    /// `η / ‖∇u − ∇u_h‖₀`.
    pub effectivity: Option<f64>,
    pub order_fem: Option<f64>,
    pub order_ppr: Option<f64>,
    /// `ok` or a description of what failed on this level.
    pub status: String,
}

/// Error columns of a [`ConvergenceRecord`] that orders can be fitted to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    Fem,
    Ppr,
    Rppr,
    PprInterp,
    Rfem,
    Eta,
}

impl ConvergenceRecord {
    pub fn get(&self, c: Column) -> Option<f64> {
        match c {
            Column::Fem => self.rel_h1_fem,
            Column::Ppr => self.rel_grad_ppr,
            Column::Rppr => self.rel_grad_rppr,
            Column::PprInterp => self.rel_grad_ppr_interp,
            Column::Rfem => self.rel_grad_rfem,
            Column::Eta => self.eta,
        }
    }
}

/// `log₂(e_coarse / e_fine)` for a pair of levels whose mesh sizes halve.
pub fn observed_order(h_coarse: f64, e_coarse: f64, h_fine: f64, e_fine: f64) -> Result<f64, MetricsError> {
    if !((h_coarse / h_fine - 2.0).abs() < 1e-9) {
        return Err(MetricsError::NotHalving(h_coarse, h_fine));
    }
    Ok((e_coarse / e_fine).log2())
}

/// Observed order of `column` between the last two records.
pub fn fit_order(records: &[ConvergenceRecord], column: Column) -> Result<f64, MetricsError> {
    let [.., a, b] = records else {
        return Err(MetricsError::TooFewRecords);
    };
    match (a.get(column), b.get(column)) {
        (Some(ea), Some(eb)) => observed_order(a.h, ea, b.h, eb),
        _ => Err(MetricsError::TooFewRecords),
    }
}

/// Which error defines the critical mesh size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticalQuantity {
    /// `|u − u_h|₁ / |u|₁`.
    FemGrad,
    /// `‖G_h u_h − ∇u‖₀ / |u|₁`.
    RecoveredGrad,
}

/// Search controls for [`critical_mesh_size`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalSearch {
    pub quantity: CriticalQuantity,
    pub solver: SolveOptions,
    pub load: LoadQuadrature,
    pub error_degree: usize,
    /// Finest hexagon subdivision that may be tried.
    pub max_m: usize,
    /// Largest number of solves per wave number.
    pub max_solves: usize,
}

impl Default for CriticalSearch {
    fn default() -> Self {
        Self {
            quantity: CriticalQuantity::FemGrad,
            solver: SolveOptions::default(),
            load: LoadQuadrature::default(),
            error_degree: ERROR_QUAD_DEGREE,
            max_m: 512,
            max_solves: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalMeshSize {
    pub k: f64,
    pub eps: f64,
    /// Smallest subdivision found with error ≤ eps.
    pub m: usize,
    /// `1/m`.
    pub h: f64,
    /// Every `(m, relative error)` evaluated, in order.
    pub evaluations: Vec<(usize, f64)>,
}

/// Relative error of the requested quantity on the hexagon mesh with `m`
/// subdivisions.
pub fn hexagon_error(k: f64, m: usize, search: &CriticalSearch) -> Result<f64, MetricsError> {
    let p = ProblemSpec::bessel(k, DomainTag::Hexagon).map_err(|_| MetricsError::NoExactSolution)?;
    let mesh = build_hexagon_mesh(m)?;
    let (a, b) = assemble_helmholtz(&mesh, &p, search.load)?;
    let (x, _) = solve(&a, &b, search.solver)?;
    let uh = NodalField::new(x);
    let norms = reference_norms(&p, &mesh)?;
    let err = match search.quantity {
        CriticalQuantity::FemGrad => exact_errors(&mesh, &p, search.error_degree, Some(&uh), &[], &[])?.h1_semi,
        CriticalQuantity::RecoveredGrad => {
            let g = RecoveryOperator::new(&mesh)?.apply(&uh)?;
            grad_error_l2(&mesh, &g, &p, search.error_degree)?
        }
    };
    Ok(err / norms.h1_semi)
}

/// Critical mesh size `h(k, ε)`: the largest `h = 1/m` on the hexagon family
/// whose relative error is at most `eps`.
///
/// Starting from `m = ⌈k⌉` the search steps geometrically by a factor 1.5
/// until the threshold is bracketed, then bisects on integers until the
/// bracket is within 2% (or one subdivision).
pub fn critical_mesh_size(k: f64, eps: f64, search: &CriticalSearch) -> Result<CriticalMeshSize, MetricsError> {
    critical_mesh_size_with(k, eps, search, |m| hexagon_error(k, m, search))
}

/// [`critical_mesh_size`] with a caller-supplied error function of `m`.
pub fn critical_mesh_size_with(
    k: f64,
    eps: f64,
    search: &CriticalSearch,
    mut error_at: impl FnMut(usize) -> Result<f64, MetricsError>,
) -> Result<CriticalMeshSize, MetricsError> {
    let mut evaluations = Vec::new();
    let mut eval = |m: usize, evaluations: &mut Vec<(usize, f64)>| -> Result<f64, MetricsError> {
        if let Some(&(_, e)) = evaluations.iter().find(|(mm, _)| *mm == m) {
            return Ok(e);
        }
        let e = error_at(m)?;
        evaluations.push((m, e));
        Ok(e)
    };
    let budget_left = |evaluations: &Vec<(usize, f64)>| evaluations.len() < search.max_solves;

    let mut m = (k.ceil() as usize).clamp(1, search.max_m);
    let first = eval(m, &mut evaluations)?;
    // Bracket: `lo` fails (or is 0), `hi` passes.
    let (mut lo, mut hi);
    if first <= eps {
        hi = m;
        lo = 0;
        while hi > 1 && budget_left(&evaluations) {
            let next = ((hi as f64 / 1.5).floor() as usize).max(1);
            if eval(next, &mut evaluations)? <= eps {
                hi = next;
            } else {
                lo = next;
                break;
            }
        }
    } else {
        lo = m;
        loop {
            if m == search.max_m || !budget_left(&evaluations) {
                return Err(MetricsError::NotReached { m, error: evaluations.last().expect("evaluated").1, eps });
            }
            m = ((m as f64 * 1.5).ceil() as usize).min(search.max_m);
            if eval(m, &mut evaluations)? <= eps {
                hi = m;
                break;
            }
            lo = m;
        }
    }
    while hi - lo > 1 && (hi - lo) as f64 > 0.02 * lo as f64 && budget_left(&evaluations) {
        let mid = lo + (hi - lo) / 2;
        if eval(mid, &mut evaluations)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalMeshSize { k, eps, m: hi, h: 1.0 / hi as f64, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Point2;

    #[test]
    fn order_of_a_quartering_error() {
        assert!((observed_order(0.1, 4e-2, 0.05, 1e-2).unwrap() - 2.0).abs() < 1e-14);
        assert!(matches!(observed_order(0.1, 1.0, 0.04, 0.5), Err(MetricsError::NotHalving(..))));
        let rec = |h: f64, e: f64| ConvergenceRecord { h, rel_grad_ppr: Some(e), ..Default::default() };
        let recs = [rec(1.0 / 256.0, 8.1935e-4), rec(1.0 / 512.0, 2.0524e-4)];
        assert!((fit_order(&recs, Column::Ppr).unwrap() - 1.997).abs() < 1e-3);
        assert!(matches!(fit_order(&recs[..1], Column::Ppr), Err(MetricsError::TooFewRecords)));
        assert!(matches!(fit_order(&recs, Column::Eta), Err(MetricsError::TooFewRecords)));
    }

    #[test]
    fn grad_diff_of_an_exact_gradient_is_zero() {
        let mesh = build_square_mesh(3, SquareDomain::UnitSquare, Diagonal::NorthEast).unwrap();
        let u = NodalField::interpolate(&mesh, |q| Complex64::new(q.x - 3.0 * q.y, 2.0 * q.x));
        let g = VectorNodalField::new(vec![[Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.0)]; mesh.num_nodes()]);
        assert!(grad_diff_l2(&mesh, &g, &u).unwrap() < 1e-13);
        let shifted = g.map(|v| [v[0] + 1.0, v[1]]);
        assert!((grad_diff_l2(&mesh, &shifted, &u).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn bundle_satisfies_pythagoras() {
        let mesh = build_hexagon_mesh(8).unwrap();
        let p = ProblemSpec::bessel(5.0, DomainTag::Hexagon).unwrap();
        let u_i = NodalField::interpolate(&mesh, |q: Point2| exact_unchecked(&p, q).value);
        let b = error_bundle(&mesh, &u_i, &p, ERROR_QUAD_DEGREE).unwrap();
        assert!(b.l2_err > 0.0);
        assert!(b.pythagoras_defect(5.0) < 1e-12);
        assert!(b.rel_energy >= b.rel_h1.min(b.rel_l2) && b.rel_energy <= b.rel_h1.max(b.rel_l2));
    }

    #[test]
    fn reference_norms_are_stable_under_refinement() {
        let p = ProblemSpec::bessel(10.0, DomainTag::UnitSquare).unwrap();
        let coarse = build_square_mesh(32, SquareDomain::UnitSquare, Diagonal::NorthEast).unwrap();
        let cached = reference_norms(&p, &coarse).unwrap();
        let fine = build_square_mesh(96, SquareDomain::UnitSquare, Diagonal::NorthWest).unwrap();
        let direct = exact_norms_on(&fine, &p, 8).unwrap();
        assert!((cached.h1_semi - direct.h1_semi).abs() < 1e-9 * direct.h1_semi);
        assert!((cached.l2 - direct.l2).abs() < 1e-9 * direct.l2);
    }

    #[test]
    fn critical_search_on_a_model_error() {
        // Error 30/m: the threshold 0.5 is first met at m = 60.
        let search = CriticalSearch::default();
        let r = critical_mesh_size_with(10.0, 0.5, &search, |m| Ok(30.0 / m as f64)).unwrap();
        assert!(r.m >= 60 && r.m as f64 <= 60.0 * 1.02 + 1.0, "{r:?}");
        assert!(r.evaluations.len() <= 12);
        // Already below the threshold at the start: the search goes coarser.
        let r = critical_mesh_size_with(100.0, 0.5, &search, |m| Ok(30.0 / m as f64)).unwrap();
        assert!(r.m >= 60 && r.m <= 62, "{r:?}");
        let capped = CriticalSearch { max_m: 40, ..search };
        assert!(matches!(
            critical_mesh_size_with(10.0, 0.5, &capped, |m| Ok(30.0 / m as f64)),
            Err(MetricsError::NotReached { m: 40, .. })
        ));
    }
}
