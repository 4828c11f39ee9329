//! Bessel functions and the data of the two model problems.
//!
//! The Bessel test problem has the exact solution
//!
//! ```text
//! u(r) = cos(kr)/k - c J0(kr),   c = e^{ik} / (k (J0(k) + i J1(k))),
//! ```
//!
//! with `r` measured from the origin, source `f = sin(kr)/r` and Robin data
//! chosen so that `u` solves the boundary value problem. The Gaussian source
//! problem uses `f = sin(k r̃)/r̃ · e^{-50 r̃}` around `(0.5, 0.5)` with
//! homogeneous Robin data and no closed-form solution.

mod bessel;

use num_complex::Complex64;

use crate::field::CVec2;
use crate::mesh::Point2;

pub use bessel::{j0, j0_j1, j1};

/// Largest argument accepted by [`bessel_j`].
pub const BESSEL_MAX_ARG: f64 = 1e4;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalyticError {
    #[error("Bessel argument {0} outside [0, 1e4]")]
    ArgumentOutOfRange(f64),
    #[error("only orders 0 and 1 are supported, got {0}")]
    UnsupportedOrder(u32),
    #[error("wave number must be at least 1, got {0}")]
    BadWaveNumber(f64),
    #[error("the Gaussian source problem has no closed-form solution")]
    NoExactSolution,
    #[error("sample {0} is within 1e-3 of the singular point")]
    SampleTooClose(Point2),
}

/// `J_order(x)` for `order ∈ {0, 1}` and `0 ≤ x ≤ 1e4`.
pub fn bessel_j(order: u32, x: f64) -> Result<f64, AnalyticError> {
    if !(0.0..=BESSEL_MAX_ARG).contains(&x) {
        return Err(AnalyticError::ArgumentOutOfRange(x));
    }
    match order {
        0 => Ok(j0(x)),
        1 => Ok(j1(x)),
        _ => Err(AnalyticError::UnsupportedOrder(order)),
    }
}

/// The computational domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DomainTag {
    /// Regular hexagon of unit side centred at the origin.
    Hexagon,
    UnitSquare,
    /// `[0,1]² \ [0.5,1]×[0.5,1]`.
    LShape,
    /// Anything read from a file.
    Custom,
}

impl DomainTag {
    /// Counterclockwise polygon vertices, or `None` for [`DomainTag::Custom`].
    pub fn polygon(self) -> Option<Vec<Point2>> {
        let p = Point2::new;
        match self {
            DomainTag::Hexagon => Some(
                (0..6)
                    .map(|i| {
                        let a = std::f64::consts::FRAC_PI_3 * i as f64;
                        p(a.cos(), a.sin())
                    })
                    .collect(),
            ),
            DomainTag::UnitSquare => Some(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]),
            DomainTag::LShape => Some(vec![
                p(0.0, 0.0),
                p(1.0, 0.0),
                p(1.0, 0.5),
                p(0.5, 0.5),
                p(0.5, 1.0),
                p(0.0, 1.0),
            ]),
            DomainTag::Custom => None,
        }
    }

    /// Whether `pt` lies strictly inside the domain, at least `margin` away
    /// from the bounding box of every convex piece. Always false for custom
    /// domains.
    pub fn contains(self, pt: Point2, margin: f64) -> bool {
        let in_box = |x0: f64, x1: f64, y0: f64, y1: f64| {
            pt.x > x0 + margin && pt.x < x1 - margin && pt.y > y0 + margin && pt.y < y1 - margin
        };
        match self {
            DomainTag::Hexagon => (0..6).all(|i| {
                let a = std::f64::consts::FRAC_PI_3 * (i as f64 + 0.5);
                pt.x * a.cos() + pt.y * a.sin() < 3f64.sqrt() / 2.0 - margin
            }),
            DomainTag::UnitSquare => in_box(0.0, 1.0, 0.0, 1.0),
            DomainTag::LShape => {
                in_box(0.0, 1.0, 0.0, 1.0) && (pt.x < 0.5 - margin || pt.y < 0.5 - margin)
            }
            DomainTag::Custom => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    BesselExact,
    GaussianSource,
}

/// Value and gradient of the exact solution at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactEval {
    pub value: Complex64,
    pub gradient: CVec2,
}

/// A model problem at a fixed wave number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemSpec {
    k: f64,
    domain: DomainTag,
    kind: ProblemKind,
    center: Point2,
    /// Coefficient of the homogeneous part; zero for the Gaussian problem.
    c: Complex64,
}

impl ProblemSpec {
    pub fn new(k: f64, domain: DomainTag, kind: ProblemKind) -> Result<Self, AnalyticError> {
        if !(k >= 1.0) || !k.is_finite() || k > BESSEL_MAX_ARG {
            return Err(AnalyticError::BadWaveNumber(k));
        }
        let (center, c) = match kind {
            ProblemKind::BesselExact => {
                let (a, b) = j0_j1(k);
                (Point2::new(0.0, 0.0), Complex64::from_polar(1.0, k) / (k * Complex64::new(a, b)))
            }
            ProblemKind::GaussianSource => (Point2::new(0.5, 0.5), Complex64::new(0.0, 0.0)),
        };
        Ok(Self { k, domain, kind, center, c })
    }

    pub fn bessel(k: f64, domain: DomainTag) -> Result<Self, AnalyticError> {
        Self::new(k, domain, ProblemKind::BesselExact)
    }

    pub fn gaussian(k: f64, domain: DomainTag) -> Result<Self, AnalyticError> {
        Self::new(k, domain, ProblemKind::GaussianSource)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    /// Origin of the radial coordinate.
    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn has_exact(&self) -> bool {
        self.kind == ProblemKind::BesselExact
    }

    /// The coefficient `c` of `J0(kr)` in the exact solution.
    pub fn bessel_coefficient(&self) -> Complex64 {
        self.c
    }

    /// The same problem at a different wave number.
    pub fn with_k(&self, k: f64) -> Result<Self, AnalyticError> {
        Self::new(k, self.domain, self.kind)
    }
}

/// Exact solution and gradient.
pub fn exact_eval(p: &ProblemSpec, pt: Point2) -> Result<ExactEval, AnalyticError> {
    if !p.has_exact() {
        return Err(AnalyticError::NoExactSolution);
    }
    Ok(exact_unchecked(p, pt))
}

pub(crate) fn exact_unchecked(p: &ProblemSpec, pt: Point2) -> ExactEval {
    let k = p.k;
    let d = pt - p.center;
    let r = d.norm();
    let zero = Complex64::new(0.0, 0.0);
    if r < 1e-10 {
        return ExactEval { value: Complex64::new(1.0 / k, 0.0) - p.c, gradient: [zero, zero] };
    }
    let kr = k * r;
    let (s, co) = kr.sin_cos();
    let (b0, b1) = j0_j1(kr);
    let value = Complex64::new(co / k, 0.0) - p.c * b0;
    let du = Complex64::new(-s, 0.0) + p.c * (k * b1);
    ExactEval { value, gradient: [du * (d.x / r), du * (d.y / r)] }
}

/// The right-hand side `f`.
pub fn source_f(p: &ProblemSpec, pt: Point2) -> Complex64 {
    let r = pt.dist(p.center);
    let kr = p.k * r;
    let sinc = if kr < 1e-4 {
        p.k * (1.0 - kr * kr / 6.0)
    } else {
        kr.sin() / r
    };
    let f = match p.kind {
        ProblemKind::BesselExact => sinc,
        ProblemKind::GaussianSource => sinc * (-50.0 * r).exp(),
    };
    Complex64::new(f, 0.0)
}

/// Robin data `g = ∂u/∂n + iku` at a boundary point with outward unit `normal`.
pub fn robin_g(p: &ProblemSpec, pt: Point2, normal: Point2) -> Complex64 {
    match p.kind {
        ProblemKind::GaussianSource => Complex64::new(0.0, 0.0),
        ProblemKind::BesselExact => {
            let e = exact_unchecked(p, pt);
            e.gradient[0] * normal.x + e.gradient[1] * normal.y + Complex64::new(0.0, p.k) * e.value
        }
    }
}

/// Richardson-refined 5-point Laplacian with base step `h`.
fn fd_laplacian(u: impl Fn(Point2) -> Complex64, pt: Point2, h: f64) -> Complex64 {
    let five = |h: f64| {
        let e = |dx, dy| u(Point2::new(pt.x + dx, pt.y + dy));
        (e(h, 0.0) + e(-h, 0.0) + e(0.0, h) + e(0.0, -h) - u(pt) * 4.0) / (h * h)
    };
    (five(0.5 * h) * 4.0 - five(h)) / 3.0
}

/// Largest pointwise residual `|(-Δu - k²u) - f|` over `samples`, with the
/// Laplacian of the exact solution approximated by finite differences.
pub fn verify_manufactured(p: &ProblemSpec, samples: &[Point2]) -> Result<f64, AnalyticError> {
    if !p.has_exact() {
        return Err(AnalyticError::NoExactSolution);
    }
    let mut worst = 0.0f64;
    for &pt in samples {
        if pt.dist(p.center) <= 1e-3 {
            return Err(AnalyticError::SampleTooClose(pt));
        }
        let u = |q| exact_unchecked(p, q).value;
        let lap = fd_laplacian(u, pt, 1e-4);
        let residual = -lap - u(pt) * (p.k * p.k) - source_f(p, pt);
        worst = worst.max(residual.norm());
    }
    Ok(worst)
}

/// Radical inverse of `i` in `base`.
fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut inv, mut f) = (0.0, 1.0 / base as f64);
    while i > 0 {
        inv += f * (i % base) as f64;
        i /= base;
        f /= base as f64;
    }
    inv
}

/// `n` points of the 2-3 Halton sequence inside `domain`, at least `margin`
/// from its boundary and more than `1e-3` from `center`.
///
/// Panics for [`DomainTag::Custom`], which has no known geometry.
pub fn halton_samples(domain: DomainTag, center: Point2, n: usize, margin: f64) -> Vec<Point2> {
    assert!(domain != DomainTag::Custom, "custom domains have no sample geometry");
    let (lo, span) = match domain {
        DomainTag::Hexagon => (Point2::new(-1.0, -1.0), 2.0),
        _ => (Point2::new(0.0, 0.0), 1.0),
    };
    let mut out = Vec::with_capacity(n);
    let mut i = 1u64;
    while out.len() < n {
        let pt = Point2::new(lo.x + span * radical_inverse(i, 2), lo.y + span * radical_inverse(i, 3));
        i += 1;
        if domain.contains(pt, margin) && pt.dist(center) > 1e-3 {
            out.push(pt);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const K10_C: Complex64 = Complex64::new(0.292_921_387_748_297_33, 0.272_982_696_826_229_24);
    const K10_U_AT_HALF: Complex64 = Complex64::new(0.080_388_111_259_335_6, 0.048_480_845_581_019_18);
    const K10_UX_AT_HALF: Complex64 = Complex64::new(-0.000_625_081_143_685_801_7, -0.894_234_364_037_285_9);

    fn bessel10() -> ProblemSpec {
        ProblemSpec::bessel(10.0, DomainTag::UnitSquare).unwrap()
    }

    #[test]
    fn bessel_j_validates_input() {
        assert_eq!(bessel_j(0, 0.0), Ok(1.0));
        assert_eq!(bessel_j(1, 0.0), Ok(0.0));
        assert_eq!(bessel_j(0, -1.0), Err(AnalyticError::ArgumentOutOfRange(-1.0)));
        assert_eq!(bessel_j(1, 1e4 + 1.0), Err(AnalyticError::ArgumentOutOfRange(1e4 + 1.0)));
        assert_eq!(bessel_j(2, 1.0), Err(AnalyticError::UnsupportedOrder(2)));
        assert!(bessel_j(0, f64::NAN).is_err());
    }

    #[test]
    fn golden_values_at_k10() {
        let p = bessel10();
        assert!((p.bessel_coefficient() - K10_C).norm() < 1e-13);
        let e = exact_eval(&p, Point2::new(0.5, 0.0)).unwrap();
        assert!((e.value - K10_U_AT_HALF).norm() < 1e-13);
        assert!((e.gradient[0] - K10_UX_AT_HALF).norm() < 1e-12);
        assert_eq!(e.gradient[1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn value_and_gradient_at_center() {
        let p = bessel10();
        let e = exact_eval(&p, Point2::new(0.0, 0.0)).unwrap();
        assert!((e.value - (Complex64::new(0.1, 0.0) - K10_C)).norm() < 1e-14);
        assert_eq!(e.gradient, [Complex64::new(0.0, 0.0); 2]);
    }

    #[test]
    fn gaussian_problem_has_no_exact_solution() {
        let p = ProblemSpec::gaussian(30.0, DomainTag::UnitSquare).unwrap();
        assert!(!p.has_exact());
        assert_eq!(exact_eval(&p, Point2::new(0.1, 0.1)), Err(AnalyticError::NoExactSolution));
        assert_eq!(robin_g(&p, Point2::new(0.0, 0.3), Point2::new(-1.0, 0.0)), Complex64::new(0.0, 0.0));
        assert!(matches!(verify_manufactured(&p, &[]), Err(AnalyticError::NoExactSolution)));
    }

    #[test]
    fn rejects_small_wave_numbers() {
        assert_eq!(ProblemSpec::bessel(0.5, DomainTag::Hexagon), Err(AnalyticError::BadWaveNumber(0.5)));
        assert!(ProblemSpec::bessel(f64::NAN, DomainTag::Hexagon).is_err());
    }

    #[test]
    fn source_values() {
        let p = bessel10();
        assert!((source_f(&p, Point2::new(0.0, 0.0)).re - 10.0).abs() < 1e-12);
        assert!((source_f(&p, Point2::new(1e-7, 0.0)).re - 10.0).abs() < 1e-9);
        assert!(source_f(&p, Point2::new(0.0, std::f64::consts::PI / 10.0)).norm() < 1e-14);
        let g = ProblemSpec::gaussian(30.0, DomainTag::UnitSquare).unwrap();
        let f = source_f(&g, Point2::new(0.6, 0.5));
        assert!((f.re - 0.009_508_591_348_178_993).abs() < 1e-15);
        assert_eq!(f.im, 0.0);
        // Series check of the same number: sin(3) = Σ (-1)^n 3^(2n+1)/(2n+1)!.
        let (mut term, mut sin3) = (3.0f64, 0.0);
        for n in 0..30 {
            sin3 += term;
            term *= -9.0 / (((2 * n + 2) * (2 * n + 3)) as f64);
        }
        assert!((f.re - sin3 / 0.1 * (-5.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn robin_data_matches_finite_differences() {
        let p = bessel10();
        let h = 1e-6;
        for (pt, n) in [
            (Point2::new(1.0, 0.3), Point2::new(1.0, 0.0)),
            (Point2::new(0.7, 0.0), Point2::new(0.0, -1.0)),
            (Point2::new(0.2, 1.0), Point2::new(0.0, 1.0)),
        ] {
            let u = |q: Point2| exact_eval(&p, q).unwrap().value;
            let dn = (u(pt + h * n) - u(pt - h * n)) / (2.0 * h);
            let fd = dn + Complex64::new(0.0, 10.0) * u(pt);
            let g = robin_g(&p, pt, n);
            assert!((g - fd).norm() < 1e-6, "{pt}: {g} vs {fd}");
            let e = exact_eval(&p, pt).unwrap();
            let dudn = e.gradient[0] * n.x + e.gradient[1] * n.y;
            assert!((g.im - (10.0 * e.value.re + dudn.im)).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_is_radial_and_matches_finite_differences() {
        let p = ProblemSpec::bessel(25.0, DomainTag::Hexagon).unwrap();
        let h = 1e-6;
        for pt in halton_samples(DomainTag::Hexagon, p.center(), 100, 0.0) {
            let e = exact_eval(&p, pt).unwrap();
            let cross = e.gradient[0] * pt.y - e.gradient[1] * pt.x;
            assert!(cross.norm() <= 1e-12 * (e.gradient[0].norm() + e.gradient[1].norm()) * pt.norm() + 1e-300);
            for (dir, g) in [(Point2::new(1.0, 0.0), e.gradient[0]), (Point2::new(0.0, 1.0), e.gradient[1])] {
                // Central differences at h and h/2, combined to cancel the h² term.
                let u = |s: f64| exact_eval(&p, pt + s * dir).unwrap().value;
                let d = |s: f64| (u(s) - u(-s)) / (2.0 * s);
                let fd = (d(h / 2.0) * 4.0 - d(h)) / 3.0;
                assert!((fd - g).norm() < 1e-6, "{pt}: {fd} vs {g}");
            }
        }
    }

    #[test]
    fn manufactured_solution_is_consistent() {
        for k in [5.0, 10.0, 50.0, 100.0] {
            let p = ProblemSpec::bessel(k, DomainTag::UnitSquare).unwrap();
            let samples = halton_samples(DomainTag::UnitSquare, p.center(), 100, 0.0);
            let res = verify_manufactured(&p, &samples).unwrap();
            let bound = if k <= 10.0 { 1e-6 } else { 1e-5 };
            assert!(res <= bound, "k = {k}: residual {res:e}");
        }
    }

    #[test]
    fn homogeneous_part_solves_helmholtz() {
        let k = 10.0;
        let c = bessel10().bessel_coefficient();
        let v = |q: Point2| c * j0(k * q.norm());
        for pt in halton_samples(DomainTag::UnitSquare, Point2::new(0.0, 0.0), 100, 0.0) {
            let res = -fd_laplacian(v, pt, 1e-4) - v(pt) * (k * k);
            assert!(res.norm() <= 1e-6, "{pt}: {res}");
        }
    }

    #[test]
    fn wrong_particular_solution_is_detected() {
        // cos(kr)/r does not satisfy the equation with f = sin(kr)/r.
        let k = 10.0;
        let pt = Point2::new(0.4, 0.3);
        let w = |q: Point2| Complex64::new((k * q.norm()).cos() / q.norm(), 0.0);
        let res = -fd_laplacian(w, pt, 1e-4) - w(pt) * (k * k) - source_f(&bessel10(), pt);
        assert!(res.norm() > 1.0);
    }

    #[test]
    fn samples_close_to_the_center_are_rejected() {
        let p = bessel10();
        let err = verify_manufactured(&p, &[Point2::new(1e-4, 0.0)]).unwrap_err();
        assert!(matches!(err, AnalyticError::SampleTooClose(_)));
    }

    #[test]
    fn halton_samples_lie_inside() {
        for d in [DomainTag::Hexagon, DomainTag::UnitSquare, DomainTag::LShape] {
            let s = halton_samples(d, Point2::new(0.0, 0.0), 50, 0.01);
            assert_eq!(s.len(), 50);
            assert!(s.iter().all(|&q| d.contains(q, 0.0)));
        }
        assert!(!DomainTag::LShape.contains(Point2::new(0.75, 0.75), 0.0));
        assert!(DomainTag::Hexagon.contains(Point2::new(0.9, 0.0), 0.0));
        assert!(!DomainTag::Hexagon.contains(Point2::new(0.0, 0.9), 0.0));
    }
}
