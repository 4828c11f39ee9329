//! Polynomial preserving recovery (PPR).
//!
//! At every node `z` a quadratic is fitted in the least-squares sense to the
//! nodal values on a patch around `z`, and the recovered gradient is the
//! gradient of that quadratic at `z`. The fit depends only on the mesh, so
//! the operator is stored as a fixed set of real weights per node and applied
//! to any number of fields.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::field::{CVec2, FieldError, NodalField, VectorNodalField};
use crate::mesh::Mesh;

/// Patches are grown by at most this many element rings.
pub const MAX_RINGS: usize = 4;
/// Relative singular-value threshold below which a fit counts as rank deficient.
pub const RANK_TOL: f64 = 1e-10;
/// A fit this badly conditioned is accepted only when no ring can be added.
/// Patches of uniform meshes stay above 3e-2; nearly co-conic six-node
/// boundary patches of unstructured meshes fall to 1e-4 and amplify the
/// data by a similar factor.
pub const COND_TOL: f64 = 1e-2;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RecoveryError {
    #[error("node {0} has no well-posed quadratic fit within {MAX_RINGS} element rings")]
    PatchDegenerate(usize),
    #[error("node index {0} out of range")]
    BadNode(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Sampling nodes used to recover the gradient at `center`.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub center: usize,
    /// Sorted node indices, including `center`.
    pub nodes: Vec<usize>,
    /// Largest distance from the center to a sampling node.
    pub scale: f64,
    pub rings_used: usize,
}

impl Patch {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Nodes of all triangles touching any node of `set`, sorted.
fn grow(mesh: &Mesh, set: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = set
        .iter()
        .flat_map(|&v| mesh.node_triangles(v).iter().flat_map(|&t| mesh.triangles()[t]))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Rows of the pseudo-inverse giving `∂/∂x` and `∂/∂y` at the center.
type Weights = (Vec<f64>, Vec<f64>);

/// Scaled Vandermonde fit. Returns the patch radius, `σ_min/σ_max`, and the
/// derivative weights when the fit has full rank.
fn fit(mesh: &Mesh, z: usize, nodes: &[usize]) -> (f64, f64, Option<Weights>) {
    let c = mesh.node(z);
    let scale = nodes.iter().map(|&j| mesh.node(j).dist(c)).fold(0.0, f64::max);
    if nodes.len() < 6 || scale == 0.0 {
        return (scale, 0.0, None);
    }
    let v = DMatrix::from_fn(nodes.len(), 6, |r, col| {
        let p = mesh.node(nodes[r]);
        let (x, y) = ((p.x - c.x) / scale, (p.y - c.y) / scale);
        [1.0, x, y, x * x, x * y, y * y][col]
    });
    let svd = v.svd(true, true);
    let cond = svd.singular_values.min() / svd.singular_values.max();
    if cond.is_nan() || cond < RANK_TOL {
        return (scale, cond, None);
    }
    let Ok(pinv) = svd.pseudo_inverse(0.0) else {
        return (scale, cond, None);
    };
    let row = |k: usize| (0..nodes.len()).map(|j| pinv[(k, j)] / scale).collect();
    (scale, cond, Some((row(1), row(2))))
}

fn build(mesh: &Mesh, z: usize) -> Result<(Patch, Vec<f64>, Vec<f64>), RecoveryError> {
    if z >= mesh.num_nodes() {
        return Err(RecoveryError::BadNode(z));
    }
    let mut nodes = vec![z];
    let mut fallback: Option<(f64, (Patch, Vec<f64>, Vec<f64>))> = None;
    for rings in 1..=MAX_RINGS {
        nodes = grow(mesh, &nodes);
        let (scale, cond, weights) = fit(mesh, z, &nodes);
        if let Some((wx, wy)) = weights {
            let found = (Patch { center: z, nodes: nodes.clone(), scale, rings_used: rings }, wx, wy);
            if cond >= COND_TOL {
                return Ok(found);
            }
            // Keep the best conditioned full-rank fit in case no ring reaches the threshold.
            if fallback.as_ref().map_or(true, |(best, _)| cond > *best) {
                fallback = Some((cond, found));
            }
        }
    }
    fallback.map(|(_, found)| found).ok_or(RecoveryError::PatchDegenerate(z))
}

/// The sampling patch of node `z`.
pub fn build_patch(mesh: &Mesh, z: usize) -> Result<Patch, RecoveryError> {
    build(mesh, z).map(|(p, _, _)| p)
}

/// The PPR operator of a mesh as a sparse table of real weights.
#[derive(Clone, Debug)]
pub struct RecoveryOperator {
    offsets: Vec<usize>,
    nodes: Vec<usize>,
    weights: Vec<[f64; 2]>,
    rings: Vec<u8>,
}

impl RecoveryOperator {
    pub fn new(mesh: &Mesh) -> Result<Self, RecoveryError> {
        let n = mesh.num_nodes();
        let mut op = Self {
            offsets: Vec::with_capacity(n + 1),
            nodes: Vec::with_capacity(8 * n),
            weights: Vec::with_capacity(8 * n),
            rings: Vec::with_capacity(n),
        };
        op.offsets.push(0);
        for z in 0..n {
            let (patch, wx, wy) = build(mesh, z)?;
            op.nodes.extend_from_slice(&patch.nodes);
            op.weights.extend(wx.into_iter().zip(wy).map(|(a, b)| [a, b]));
            op.offsets.push(op.nodes.len());
            op.rings.push(patch.rings_used as u8);
        }
        Ok(op)
    }

    pub fn num_nodes(&self) -> usize {
        self.rings.len()
    }

    /// Element rings used at node `z`.
    pub fn rings_used(&self, z: usize) -> usize {
        self.rings[z] as usize
    }

    /// `(node, [w_x, w_y])` pairs defining the recovered gradient at `z`.
    pub fn stencil(&self, z: usize) -> impl Iterator<Item = (usize, [f64; 2])> + '_ {
        let r = self.offsets[z]..self.offsets[z + 1];
        self.nodes[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    /// Recovered gradient of a complex nodal field.
    pub fn apply(&self, field: &NodalField) -> Result<VectorNodalField, RecoveryError> {
        let v = field.values();
        if v.len() != self.num_nodes() {
            return Err(FieldError::LengthMismatch { expected: self.num_nodes(), found: v.len() }.into());
        }
        let out = (0..self.num_nodes())
            .map(|z| {
                let mut g: CVec2 = [Complex64::new(0.0, 0.0); 2];
                for (j, [wx, wy]) in self.stencil(z) {
                    g[0] += v[j] * wx;
                    g[1] += v[j] * wy;
                }
                g
            })
            .collect();
        Ok(VectorNodalField::new(out))
    }

    /// Recovered gradient of a real nodal vector.
    pub fn apply_real(&self, v: &[f64]) -> Vec<[f64; 2]> {
        assert_eq!(v.len(), self.num_nodes(), "field length does not match the mesh");
        (0..self.num_nodes())
            .map(|z| {
                self.stencil(z).fold([0.0, 0.0], |g, (j, [wx, wy])| [g[0] + v[j] * wx, g[1] + v[j] * wy])
            })
            .collect()
    }
}

/// One-shot PPR of `field`; prefer [`RecoveryOperator`] when several fields
/// live on the same mesh.
pub fn recover_gradient(mesh: &Mesh, field: &NodalField) -> Result<VectorNodalField, RecoveryError> {
    field.check(mesh)?;
    RecoveryOperator::new(mesh)?.apply(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_hexagon_mesh, build_square_mesh, Diagonal, Point2, SquareDomain};

    fn node_at(mesh: &Mesh, p: Point2) -> usize {
        (0..mesh.num_nodes()).find(|&i| mesh.node(i).dist(p) < 1e-12).unwrap()
    }

    #[test]
    fn patch_sizes_on_uniform_meshes() {
        let sq = build_square_mesh(4, SquareDomain::UnitSquare, Diagonal::NorthEast).unwrap();
        let interior = build_patch(&sq, node_at(&sq, Point2::new(0.5, 0.5))).unwrap();
        assert_eq!((interior.len(), interior.rings_used), (7, 1));
        for corner in [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)] {
            let p = build_patch(&sq, node_at(&sq, corner)).unwrap();
            assert!(p.rings_used >= 2 && p.len() >= 6);
        }
        let hex = build_hexagon_mesh(3).unwrap();
        let p = build_patch(&hex, node_at(&hex, Point2::new(0.0, 0.0))).unwrap();
        assert_eq!((p.len(), p.rings_used), (7, 1));
        assert!((p.scale - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn bad_node_is_rejected() {
        let hex = build_hexagon_mesh(1).unwrap();
        assert_eq!(build_patch(&hex, 7), Err(RecoveryError::BadNode(7)));
    }

    #[test]
    fn single_triangle_is_degenerate() {
        let mesh = Mesh::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap();
        assert_eq!(build_patch(&mesh, 0), Err(RecoveryError::PatchDegenerate(0)));
    }

    #[test]
    fn reproduces_quadratics_on_a_square() {
        let mesh = build_square_mesh(8, SquareDomain::UnitSquare, Diagonal::NorthWest).unwrap();
        let op = RecoveryOperator::new(&mesh).unwrap();
        let v: Vec<f64> = mesh.nodes().iter().map(|p| 1.0 - p.x + 3.0 * p.y + p.x * p.x - 2.0 * p.x * p.y).collect();
        let g = op.apply_real(&v);
        for (p, gz) in mesh.nodes().iter().zip(&g) {
            assert!((gz[0] - (-1.0 + 2.0 * p.x - 2.0 * p.y)).abs() < 1e-10);
            assert!((gz[1] - (3.0 - 2.0 * p.x)).abs() < 1e-10);
        }
    }
}
