//! Two-level Richardson extrapolation and the a posteriori estimator
//!
//! ```text
//! R v = (4 v_{h/2} − v_h) / 3,      η = ‖R G_h u_h − ∇u_h‖₀,
//! ```
//!
//! where `v_h` lives on a coarse mesh, `v_{h/2}` on its red refinement, and
//! `η` is measured on the fine mesh against the fine solution.

use num_complex::Complex64;

use crate::field::{CVec2, FieldError, NodalField, P1Value, VectorNodalField};
use crate::mesh::{Mesh, NodeOrigin, ParentMap};
use crate::metrics::grad_diff_l2;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ExtrapolateError {
    #[error("the fine mesh is not the red refinement of the coarse mesh")]
    AncestryMismatch,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A coarse mesh together with its red refinement.
#[derive(Clone, Copy, Debug)]
pub struct LevelPair<'a> {
    coarse: &'a Mesh,
    fine: &'a Mesh,
    parents: &'a ParentMap,
}

impl<'a> LevelPair<'a> {
    pub fn new(coarse: &'a Mesh, fine: &'a Mesh, parents: &'a ParentMap) -> Result<Self, ExtrapolateError> {
        if parents.is_consistent(coarse, fine) {
            Ok(Self { coarse, fine, parents })
        } else {
            Err(ExtrapolateError::AncestryMismatch)
        }
    }

    pub fn coarse(&self) -> &'a Mesh {
        self.coarse
    }

    pub fn fine(&self) -> &'a Mesh {
        self.fine
    }

    pub fn parents(&self) -> &'a ParentMap {
        self.parents
    }

    /// Evaluates a coarse P1 field at every fine node.
    pub fn prolong_values<T: P1Value>(&self, coarse: &[T]) -> Result<Vec<T>, ExtrapolateError> {
        if coarse.len() != self.coarse.num_nodes() {
            return Err(FieldError::LengthMismatch { expected: self.coarse.num_nodes(), found: coarse.len() }.into());
        }
        Ok(self
            .parents
            .fine_node_origin
            .iter()
            .map(|o| match *o {
                NodeOrigin::CoarseNode(i) => coarse[i],
                NodeOrigin::EdgeMidpoint(a, b) => T::barycentric_combination([coarse[a], coarse[b], coarse[b]], [0.5, 0.5, 0.0]),
            })
            .collect())
    }

    pub fn prolong(&self, coarse: &NodalField) -> Result<NodalField, ExtrapolateError> {
        self.prolong_values(coarse.values()).map(NodalField::new)
    }

    pub fn prolong_vector(&self, coarse: &VectorNodalField) -> Result<VectorNodalField, ExtrapolateError> {
        self.prolong_values(coarse.values()).map(VectorNodalField::new)
    }
}

/// Nodewise `(4·fine − coarse)/3` for two fields on the same mesh.
pub fn richardson_values<T: P1Value>(fine: &[T], prolonged_coarse: &[T]) -> Result<Vec<T>, ExtrapolateError> {
    if fine.len() != prolonged_coarse.len() {
        return Err(FieldError::LengthMismatch { expected: fine.len(), found: prolonged_coarse.len() }.into());
    }
    Ok(fine
        .iter()
        .zip(prolonged_coarse)
        .map(|(&f, &c)| T::barycentric_combination([f, c, c], [4.0 / 3.0, -1.0 / 3.0, 0.0]))
        .collect())
}

pub fn richardson(fine: &VectorNodalField, prolonged_coarse: &VectorNodalField) -> Result<VectorNodalField, ExtrapolateError> {
    richardson_values(fine.values(), prolonged_coarse.values()).map(VectorNodalField::new)
}

/// `R G_h u_h` on the fine mesh from the recovered gradients of both levels.
pub fn extrapolated_recovery(
    pair: &LevelPair,
    coarse_recovered: &VectorNodalField,
    fine_recovered: &VectorNodalField,
) -> Result<VectorNodalField, ExtrapolateError> {
    fine_recovered.check(pair.fine)?;
    richardson(fine_recovered, &pair.prolong_vector(coarse_recovered)?)
}

/// The estimator `η = ‖R G_h u_h − ∇u_h‖₀` on the fine mesh.
pub fn estimator_eta(
    pair: &LevelPair,
    coarse_recovered: &VectorNodalField,
    fine_recovered: &VectorNodalField,
    fine_solution: &NodalField,
) -> Result<f64, ExtrapolateError> {
    fine_solution.check(pair.fine)?;
    let rg = extrapolated_recovery(pair, coarse_recovered, fine_recovered)?;
    Ok(grad_diff_l2(pair.fine, &rg, fine_solution)?)
}

/// `R ∇u_h` as one constant per fine triangle: `(4 ∇u_{h/2} − ∇u_h|parent)/3`.
pub fn extrapolated_fem_gradient(
    pair: &LevelPair,
    coarse_solution: &NodalField,
    fine_solution: &NodalField,
) -> Result<Vec<CVec2>, ExtrapolateError> {
    coarse_solution.check(pair.coarse)?;
    fine_solution.check(pair.fine)?;
    let coarse_grads: Vec<CVec2> = (0..pair.coarse.num_triangles()).map(|t| coarse_solution.gradient_on(pair.coarse, t)).collect();
    Ok(pair
        .parents
        .fine_tri_to_coarse_tri
        .iter()
        .enumerate()
        .map(|(t, &parent)| {
            let f = fine_solution.gradient_on(pair.fine, t);
            let c = coarse_grads[parent];
            [0, 1].map(|i| (f[i] * 4.0 - c[i]) / 3.0)
        })
        .collect())
}

/// Multiplies every value by `e^{iθ}`.
pub fn rotate_phase(field: &NodalField, theta: f64) -> NodalField {
    let w = Complex64::from_polar(1.0, theta);
    field.map(|v| v * w)
}
