//! Solver contracts and elliptic projection behaviour.

use helmholtz_ppr::analytic::{DomainTag, ExactEval, ProblemSpec};
use helmholtz_ppr::assembly::{assemble_elliptic_projection, assemble_elliptic_projection_with, assemble_helmholtz, LoadQuadrature};
use helmholtz_ppr::mesh::{build_hexagon_mesh, build_square_mesh, Diagonal, SquareDomain};
use helmholtz_ppr::metrics::{error_bundle, ERROR_QUAD_DEGREE};
use helmholtz_ppr::solve::{solve, SolveOptions, SolverKind};
use helmholtz_ppr::sparse::SparseComplexMatrix;
use helmholtz_ppr::{Complex64, NodalField, Point2};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn both() -> [SolveOptions; 2] {
    [SolveOptions::default(), SolveOptions { kind: SolverKind::Iterative, ..Default::default() }]
}

#[test]
fn identity_returns_the_right_hand_side() {
    let b: Vec<Complex64> = (0..7).map(|i| c(i as f64, -0.5 * i as f64)).collect();
    for opts in both() {
        let (x, report) = solve(&SparseComplexMatrix::identity(7), &b, opts).unwrap();
        assert!(x.iter().zip(&b).all(|(u, v)| (u - v).norm() < 1e-14));
        assert!(report.relative_residual <= 1e-14);
    }
}

#[test]
fn two_by_two_complex_symmetric_system() {
    let a = SparseComplexMatrix::from_dense(&[vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, 1.0), c(1.0, 0.0)]]);
    assert!(a.is_symmetric());
    for opts in both() {
        let (x, _) = solve(&a, &[c(1.0, 0.0), c(0.0, 0.0)], opts).unwrap();
        assert!((x[0] - c(1.0 / 3.0, 0.0)).norm() < 1e-14, "{x:?}");
        assert!((x[1] - c(0.0, -1.0 / 3.0)).norm() < 1e-14, "{x:?}");
    }
}

#[test]
fn hexagon_system_meets_the_residual_contract() {
    let p = ProblemSpec::bessel(10.0, DomainTag::Hexagon).unwrap();
    let mesh = build_hexagon_mesh(32).unwrap();
    let (a, b) = assemble_helmholtz(&mesh, &p, LoadQuadrature::default()).unwrap();
    for opts in both() {
        let (x, report) = solve(&a, &b, opts).unwrap();
        assert!(report.relative_residual <= 1e-10, "{:?}: {:e}", opts.kind, report.relative_residual);
        assert!(a.relative_residual(&x, &b) <= 1e-10);
    }
}

#[test]
fn mismatched_right_hand_side_is_rejected() {
    assert!(solve(&SparseComplexMatrix::identity(3), &[c(1.0, 0.0)], SolveOptions::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn recovers_a_known_solution(
        m in 2usize..7,
        k in 1.0f64..30.0,
        y in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 49),
    ) {
        let mesh = build_square_mesh(m, SquareDomain::UnitSquare, Diagonal::NorthEast).unwrap();
        let p = ProblemSpec::bessel(k, DomainTag::UnitSquare).unwrap();
        let (a, _) = assemble_helmholtz(&mesh, &p, LoadQuadrature::default()).unwrap();
        let y: Vec<Complex64> = y[..mesh.num_nodes()].iter().map(|&(r, i)| c(r, i)).collect();
        let b = a.matvec(&y);
        for opts in both() {
            let (x, _) = solve(&a, &b, opts).unwrap();
            let err = x.iter().zip(&y).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-7, "{:?}: {err:e}", opts.kind);
        }
    }
}

#[test]
fn elliptic_projection_reproduces_affine_functions() {
    let mesh = build_hexagon_mesh(6).unwrap();
    let grad = [c(1.5, -0.5), c(-2.0, 0.25)];
    let u = |p: Point2| ExactEval { value: c(0.3, 1.0) + grad[0] * p.x + grad[1] * p.y, gradient: grad };
    let (a, b) = assemble_elliptic_projection_with(&mesh, 10.0, u, LoadQuadrature::default()).unwrap();
    let (x, report) = solve(&a, &b, SolveOptions::default()).unwrap();
    assert!(report.relative_residual <= 1e-12);
    for (p, v) in mesh.nodes().iter().zip(&x) {
        assert!((v - u(*p).value).norm() < 1e-11);
    }
}

#[test]
fn elliptic_projection_converges_at_second_order_in_l2() {
    let p = ProblemSpec::bessel(10.0, DomainTag::Hexagon).unwrap();
    let errors: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&m| {
            let mesh = build_hexagon_mesh(m).unwrap();
            let (a, b) = assemble_elliptic_projection(&mesh, &p, LoadQuadrature::default()).unwrap();
            let (x, _) = solve(&a, &b, SolveOptions::default()).unwrap();
            error_bundle(&mesh, &NodalField::new(x), &p, ERROR_QUAD_DEGREE).unwrap().l2_err
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() <= 0.25, "{errors:?}");
    }
}
