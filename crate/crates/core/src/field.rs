//! Continuous piecewise-linear fields stored by nodal coefficients.

use num_complex::Complex64;

use crate::mesh::{Mesh, Point2};

/// A complex 2-vector, e.g. a gradient.
pub type CVec2 = [Complex64; 2];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FieldError {
    #[error("triangle index {0} out of range ({1} triangles)")]
    TriangleOutOfRange(usize, usize),
    #[error("barycentric coordinates {0:?} are not a convex combination")]
    BadBarycentric([f64; 3]),
    #[error("field has {found} values, mesh has {expected} nodes")]
    LengthMismatch { expected: usize, found: usize },
}

/// Values that can be combined linearly inside a triangle.
pub trait P1Value: Copy {
    fn barycentric_combination(values: [Self; 3], bary: [f64; 3]) -> Self;
}

impl P1Value for Complex64 {
    fn barycentric_combination(v: [Self; 3], l: [f64; 3]) -> Self {
        v[0] * l[0] + v[1] * l[1] + v[2] * l[2]
    }
}

impl P1Value for CVec2 {
    fn barycentric_combination(v: [Self; 3], l: [f64; 3]) -> Self {
        [0, 1].map(|c| v[0][c] * l[0] + v[1][c] * l[1] + v[2][c] * l[2])
    }
}

/// Evaluates the P1 interpolant of nodal `values` at barycentric
/// coordinates `bary` of triangle `tri`.
pub fn eval_p1<T: P1Value>(mesh: &Mesh, values: &[T], tri: usize, bary: [f64; 3]) -> Result<T, FieldError> {
    if values.len() != mesh.num_nodes() {
        return Err(FieldError::LengthMismatch { expected: mesh.num_nodes(), found: values.len() });
    }
    let Some(&[a, b, c]) = mesh.triangles().get(tri) else {
        return Err(FieldError::TriangleOutOfRange(tri, mesh.num_triangles()));
    };
    let sum: f64 = bary.iter().sum();
    if bary.iter().any(|&l| l < -1e-12 || !l.is_finite()) || (sum - 1.0).abs() > 1e-12 {
        return Err(FieldError::BadBarycentric(bary));
    }
    Ok(T::barycentric_combination([values[a], values[b], values[c]], bary))
}

fn check_len(mesh: &Mesh, len: usize) -> Result<(), FieldError> {
    if len == mesh.num_nodes() {
        Ok(())
    } else {
        Err(FieldError::LengthMismatch { expected: mesh.num_nodes(), found: len })
    }
}

/// Complex scalar P1 field.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField {
    values: Vec<Complex64>,
}

impl NodalField {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &Mesh, f: impl Fn(Point2) -> Complex64) -> Self {
        Self { values: mesh.nodes().iter().map(|&p| f(p)).collect() }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check(&self, mesh: &Mesh) -> Result<(), FieldError> {
        check_len(mesh, self.values.len())
    }

    pub fn eval(&self, mesh: &Mesh, tri: usize, bary: [f64; 3]) -> Result<Complex64, FieldError> {
        eval_p1(mesh, &self.values, tri, bary)
    }

    /// The (constant) gradient on triangle `t`.
    pub fn gradient_on(&self, mesh: &Mesh, t: usize) -> CVec2 {
        let g = mesh.hat_gradients(t);
        let tri = mesh.triangles()[t];
        let mut out = [Complex64::new(0.0, 0.0); 2];
        for i in 0..3 {
            let v = self.values[tri[i]];
            out[0] += v * g[i].x;
            out[1] += v * g[i].y;
        }
        out
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn real_part(&self) -> Self {
        self.map(|v| Complex64::new(v.re, 0.0))
    }

    pub fn imag_part(&self) -> Self {
        self.map(|v| Complex64::new(v.im, 0.0))
    }
}

/// Complex 2-vector P1 field.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorNodalField {
    values: Vec<CVec2>,
}

impl VectorNodalField {
    pub fn new(values: Vec<CVec2>) -> Self {
        Self { values }
    }

    pub fn interpolate(mesh: &Mesh, f: impl Fn(Point2) -> CVec2) -> Self {
        Self { values: mesh.nodes().iter().map(|&p| f(p)).collect() }
    }

    pub fn values(&self) -> &[CVec2] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check(&self, mesh: &Mesh) -> Result<(), FieldError> {
        check_len(mesh, self.values.len())
    }

    pub fn eval(&self, mesh: &Mesh, tri: usize, bary: [f64; 3]) -> Result<CVec2, FieldError> {
        eval_p1(mesh, &self.values, tri, bary)
    }

    /// The two Cartesian components as scalar fields.
    pub fn components(&self) -> [NodalField; 2] {
        [0, 1].map(|c| NodalField::new(self.values.iter().map(|v| v[c]).collect()))
    }

    pub fn from_components(x: &NodalField, y: &NodalField) -> Self {
        Self { values: x.values().iter().zip(y.values()).map(|(&a, &b)| [a, b]).collect() }
    }

    pub fn map(&self, f: impl Fn(CVec2) -> CVec2) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect() }
    }
}
