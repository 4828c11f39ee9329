//! Quadrature on the reference triangle and the unit interval.
//!
//! Weights are normalised to sum to one, so a triangle integral is
//! `|T| · Σ w_q f(x_q)` and an edge integral is `L · Σ w_q f(x_q)`.

use std::sync::OnceLock;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum QuadratureError {
    #[error("no quadrature rule of degree {0} (supported: 1..=8)")]
    UnsupportedDegree(usize),
}

/// Points in barycentric coordinates with normalised weights.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Abscissae in `[0, 1]` with normalised weights.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeRule {
    pub degree: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    Triangle,
    Edge,
}

/// Either kind of rule, as returned by [`quadrature_rule`].
#[derive(Clone, Debug, PartialEq)]
pub enum QuadratureRule {
    Triangle(TriangleRule),
    Edge(EdgeRule),
}

impl QuadratureRule {
    pub fn weights(&self) -> &[f64] {
        match self {
            QuadratureRule::Triangle(r) => &r.weights,
            QuadratureRule::Edge(r) => &r.weights,
        }
    }
}

pub fn quadrature_rule(kind: RuleKind, degree: usize) -> Result<QuadratureRule, QuadratureError> {
    Ok(match kind {
        RuleKind::Triangle => QuadratureRule::Triangle(triangle_rule(degree)?.clone()),
        RuleKind::Edge => QuadratureRule::Edge(edge_rule(degree)?.clone()),
    })
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs.push(0.5 * (1.0 - x));
        ws.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (xs, ws)
}

fn build_edge(degree: usize) -> EdgeRule {
    let (points, weights) = gauss_legendre((degree + 1).div_ceil(2));
    EdgeRule { degree, points, weights }
}

/// Rule generated from orbits `(weight, a, b)` meaning permutations of
/// `(a, b, 1 - a - b)`.
fn symmetric(degree: usize, orbits: &[(f64, f64, f64)]) -> TriangleRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for &(w, a, b) in orbits {
        let c = 1.0 - a - b;
        let mut perms = vec![[a, b, c], [b, c, a], [c, a, b], [b, a, c], [a, c, b], [c, b, a]];
        perms.sort_by(|p, q| p.partial_cmp(q).unwrap());
        perms.dedup_by(|p, q| p.iter().zip(q.iter()).all(|(x, y)| (x - y).abs() < 1e-15));
        for p in perms {
            points.push(p);
            weights.push(w);
        }
    }
    TriangleRule { degree, points, weights }
}

/// Collapsed Gauss product rule, exact to the requested degree.
fn conical(degree: usize) -> TriangleRule {
    let (s, ws) = gauss_legendre((degree + 1).div_ceil(2));
    let (t, wt) = gauss_legendre((degree + 2).div_ceil(2));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (&ti, &wti) in t.iter().zip(&wt) {
        for (&si, &wsi) in s.iter().zip(&ws) {
            let x = si * (1.0 - ti);
            points.push([1.0 - x - ti, x, ti]);
            weights.push(2.0 * wsi * wti * (1.0 - ti));
        }
    }
    TriangleRule { degree, points, weights }
}

fn build_triangle(degree: usize) -> TriangleRule {
    let third = 1.0 / 3.0;
    match degree {
        1 => TriangleRule { degree, points: vec![[third; 3]], weights: vec![1.0] },
        2 => symmetric(degree, &[(third, 0.5, 0.5)]),
        4 => symmetric(
            degree,
            &[
                (0.223_381_589_678_011, 0.445_948_490_915_965, 0.445_948_490_915_965),
                (0.109_951_743_655_322, 0.091_576_213_509_771, 0.091_576_213_509_771),
            ],
        ),
        5 => symmetric(
            degree,
            &[
                (0.225, third, third),
                (0.132_394_152_788_506, 0.470_142_064_105_115, 0.470_142_064_105_115),
                (0.125_939_180_544_827, 0.101_286_507_323_456, 0.101_286_507_323_456),
            ],
        ),
        6 => symmetric(
            degree,
            &[
                (0.116_786_275_726_379, 0.249_286_745_170_910, 0.249_286_745_170_910),
                (0.050_844_906_370_207, 0.063_089_014_491_502, 0.063_089_014_491_502),
                (0.082_851_075_618_374, 0.053_145_049_844_817, 0.310_352_451_033_784),
            ],
        ),
        _ => conical(degree),
    }
}

static TRIANGLE_RULES: [OnceLock<TriangleRule>; 8] = [const { OnceLock::new() }; 8];
static EDGE_RULES: [OnceLock<EdgeRule>; 8] = [const { OnceLock::new() }; 8];

/// Triangle rule exact for polynomials of total degree ≤ `degree`.
pub fn triangle_rule(degree: usize) -> Result<&'static TriangleRule, QuadratureError> {
    match degree {
        1..=8 => Ok(TRIANGLE_RULES[degree - 1].get_or_init(|| build_triangle(degree))),
        _ => Err(QuadratureError::UnsupportedDegree(degree)),
    }
}

/// Gauss rule on `[0, 1]` exact for polynomials of degree ≤ `degree`.
pub fn edge_rule(degree: usize) -> Result<&'static EdgeRule, QuadratureError> {
    match degree {
        1..=8 => Ok(EDGE_RULES[degree - 1].get_or_init(|| build_edge(degree))),
        _ => Err(QuadratureError::UnsupportedDegree(degree)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Normalised integral of `x^a y^b` over the reference triangle.
    fn monomial_mean(a: u32, b: u32) -> f64 {
        2.0 * factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn triangle_rules_are_exact_to_their_degree() {
        for d in 1..=8 {
            let r = triangle_rule(d).unwrap();
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14, "degree {d}");
            assert!(r.points.iter().all(|p| p.iter().all(|&l| l >= 0.0)));
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let q: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32))
                        .sum();
                    let exact = monomial_mean(a, b);
                    assert!((q - exact).abs() < 1e-14, "degree {d}, x^{a} y^{b}: {q} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn degree_six_integrates_x4_y2() {
        // ∫ x⁴y² over the reference triangle = 4!·2!/8! = 1/840.
        let r = triangle_rule(6).unwrap();
        let q: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[1].powi(4) * p[2].powi(2)).sum();
        assert!((0.5 * q - 1.0 / 840.0).abs() < 1e-14);
    }

    #[test]
    fn centroid_rule() {
        let r = triangle_rule(1).unwrap();
        assert_eq!(r.weights, vec![1.0]);
        assert_eq!(r.points, vec![[1.0 / 3.0; 3]]);
    }

    #[test]
    fn edge_rules_are_exact() {
        for d in 1..=8 {
            let r = edge_rule(d).unwrap();
            for p in 0..=d as i32 {
                let q: f64 = r.points.iter().zip(&r.weights).map(|(t, w)| w * t.powi(p)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "degree {d}, t^{p}");
            }
        }
        let five = edge_rule(5).unwrap();
        assert_eq!(five.points.len(), 3);
    }

    #[test]
    fn unsupported_degrees() {
        assert_eq!(triangle_rule(0).unwrap_err(), QuadratureError::UnsupportedDegree(0));
        assert_eq!(edge_rule(9).unwrap_err(), QuadratureError::UnsupportedDegree(9));
        assert!(quadrature_rule(RuleKind::Triangle, 9).is_err());
        assert_eq!(quadrature_rule(RuleKind::Edge, 3).unwrap().weights().len(), 2);
    }
}
