//! Projections, symbols and kernels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twowell::operator_kernel::*;
use twowell::random::{random_matrix, random_sym};
use twowell::TwoWellError;

fn m(rows: &[[f64; 2]]) -> Matrix<f64> {
    Matrix::from_f64_rows(rows).unwrap()
}

fn assert_close(a: &Matrix<f64>, b: &Matrix<f64>, tol: f64) {
    let e = (a - b).norm();
    assert!(e <= tol, "difference {e:e} exceeds {tol:e}: {a:?} vs {b:?}");
}

#[test]
fn div_symbol_is_matrix_vector_product() {
    let a = m(&[[1.0, 2.0], [3.0, 4.0]]);
    let s = symbol_apply(&DiffOp::div(2), &Direction::axis(2, 0), &a).unwrap();
    assert_eq!(s, vec![1.0, 3.0]);
}

#[test]
fn curl_symbol_annihilates_rank_one_along_xi() {
    let b = [0.7, -1.3];
    let a = Matrix::outer(&b, &[1.0, 0.0]);
    let s = symbol_apply(&DiffOp::curl(2), &Direction::axis(2, 0), &a).unwrap();
    assert!(s.iter().all(|x: &f64| x.abs() < 1e-15));
}

#[test]
fn curlcurl_symbol_annihilates_symmetric_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let xi: Direction<f64> = random_direction(2, &mut rng);
        let b = random_matrix(&mut rng, 2).as_slice()[..2].to_vec();
        let a = Matrix::sym_outer(&b, xi.as_slice());
        let s = symbol_apply(&DiffOp::curl_curl(), &xi, &a).unwrap();
        assert!(s.iter().all(|x: &f64| x.abs() < 1e-12), "{s:?}");
    }
}

#[test]
fn curl_projection_example() {
    let a = m(&[[1.0, 2.0], [3.0, 4.0]]);
    let e1 = Direction::axis(2, 0);
    let p = project_compatible(&DiffOp::curl(2), &e1, &a).unwrap();
    assert_close(&p, &m(&[[1.0, 0.0], [3.0, 0.0]]), 1e-15);
    let o = project_compatible_oracle(&DiffOp::curl(2), &e1, &a).unwrap();
    assert_close(&p, &o, 1e-10);
}

#[test]
fn div_projection_example() {
    let a = m(&[[1.0, 2.0], [3.0, 4.0]]);
    let e1 = Direction::axis(2, 0);
    let p = project_compatible(&DiffOp::div(2), &e1, &a).unwrap();
    assert_close(&p, &m(&[[0.0, 2.0], [0.0, 4.0]]), 1e-15);
    let o = project_compatible_oracle(&DiffOp::div(2), &e1, &a).unwrap();
    assert_close(&p, &o, 1e-10);
}

#[test]
fn curlcurl_projection_of_orthogonal_rank_one_vanishes() {
    let a = m(&[[0.0, 0.0], [0.0, 1.0]]);
    let p = project_compatible(&DiffOp::curl_curl(), &Direction::axis(2, 0), &a).unwrap();
    assert!(p.norm() < 1e-15);
}

#[test]
fn curlcurl_rejects_nonsymmetric_state() {
    let a = m(&[[1.0, 2.0], [0.0, 1.0]]);
    let r = project_compatible(&DiffOp::curl_curl(), &Direction::axis(2, 0), &a);
    assert!(matches!(r, Err(TwoWellError::NotSymmetric(_))));
}

#[test]
fn oracle_agrees_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ops = [DiffOp::curl(2), DiffOp::div(2), DiffOp::curl_curl(), DiffOp::curl(3), DiffOp::div(3)];
    for k in 0..1000 {
        let op = ops[k % ops.len()];
        let xi: Direction<f64> = random_direction(op.d, &mut rng);
        let a = if op.kind == OpKind::CurlCurl { random_sym(&mut rng, op.d) } else { random_matrix(&mut rng, op.d) };
        let p = project_compatible(&op, &xi, &a).unwrap();
        let o = project_compatible_oracle(&op, &xi, &a).unwrap();
        assert_close(&p, &o, 1e-10 * a.norm().max(1.0));
    }
}

#[test]
fn kernel_dimensions_are_constant() {
    assert!(wave_cone_rank(&DiffOp::curl(2), 64, 1).unwrap().iter().all(|&r| r == 2));
    assert!(wave_cone_rank(&DiffOp::curl(3), 64, 1).unwrap().iter().all(|&r| r == 3));
    assert!(wave_cone_rank(&DiffOp::div(2), 64, 1).unwrap().iter().all(|&r| r == 2));
    assert!(wave_cone_rank(&DiffOp::div(3), 64, 1).unwrap().iter().all(|&r| r == 6));
    assert!(wave_cone_rank(&DiffOp::curl_curl(), 64, 1).unwrap().iter().all(|&r| r == 2));
}

#[test]
fn projection_invariants_on_random_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for op in [DiffOp::curl(2), DiffOp::div(2), DiffOp::curl_curl(), DiffOp::curl(3), DiffOp::div(3)] {
        for _ in 0..500 {
            let xi: Direction<f64> = random_direction(op.d, &mut rng);
            let a = if op.kind == OpKind::CurlCurl { random_sym(&mut rng, op.d) } else { random_matrix(&mut rng, op.d) };
            let p = project_compatible(&op, &xi, &a).unwrap();
            let pp = project_compatible(&op, &xi, &p).unwrap();
            assert_close(&pp, &p, 1e-12 * a.norm().max(1.0));
            let r = &a - &p;
            assert!(r.dot(&p).abs() <= 1e-12 * a.norm_sq().max(1.0));
            assert!((r.norm_sq() + p.norm_sq() - a.norm_sq()).abs() <= 1e-10 * a.norm_sq().max(1.0));
            let s = symbol_apply(&op, &xi, &p).unwrap();
            assert!(s.iter().all(|x| x.abs() <= 1e-10 * a.norm().max(1.0)));
        }
    }
}

#[test]
fn zero_homogeneity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let xi: Direction<f64> = random_direction(2, &mut rng);
        let scaled = Direction::new(xi.as_slice().iter().map(|x| 37.5 * x).collect()).unwrap();
        let a = random_matrix(&mut rng, 2);
        let p = project_compatible(&DiffOp::curl(2), &xi, &a).unwrap();
        let q = project_compatible(&DiffOp::curl(2), &scaled, &a).unwrap();
        assert_close(&p, &q, 1e-14);
    }
}

#[test]
fn curl_and_div_projections_are_complementary() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for d in [2, 3] {
        for _ in 0..200 {
            let xi: Direction<f64> = random_direction(d, &mut rng);
            let a = random_matrix(&mut rng, d);
            let pc = project_compatible(&DiffOp::curl(d), &xi, &a).unwrap();
            let pd = project_compatible(&DiffOp::div(d), &xi, &a).unwrap();
            assert_close(&(&pc + &pd), &a, 1e-12 * a.norm());
        }
    }
}

#[test]
fn curlcurl_projection_norm_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..500 {
        let xi: Direction<f64> = random_direction(2, &mut rng);
        let a = random_sym(&mut rng, 2);
        let p = project_compatible(&DiffOp::curl_curl(), &xi, &a).unwrap();
        let ax = a.mat_vec(xi.as_slice());
        let axx: f64 = ax.iter().zip(xi.as_slice()).map(|(u, v)| u * v).sum();
        let ax2: f64 = ax.iter().map(|u| u * u).sum();
        assert!((p.norm_sq() - (2.0 * ax2 - axx * axx)).abs() <= 1e-10 * a.norm_sq().max(1.0));
    }
}

#[test]
fn direction_normalizes_and_rejects_zero() {
    let xi = Direction::new(vec![3.0f64, 4.0]).unwrap();
    assert!((xi.as_slice()[0] - 0.6).abs() < 1e-15 && (xi.as_slice()[1] - 0.8).abs() < 1e-15);
    assert!(matches!(Direction::new(vec![1e-13, 0.0]), Err(TwoWellError::DegenerateDirection(_))));
}

#[test]
fn dimension_mismatch_is_reported() {
    let a = Matrix::<f64>::identity(3);
    let r = symbol_apply(&DiffOp::curl(2), &Direction::axis(2, 0), &a);
    assert!(matches!(r, Err(TwoWellError::DimensionMismatch { .. })));
}

#[test]
fn curlcurl_closed_form_needs_plane() {
    let a = Matrix::<f64>::identity(3);
    let op = DiffOp::new(OpKind::CurlCurl, 3).unwrap();
    assert!(project_compatible(&op, &Direction::axis(3, 0), &a).is_err());
    let o = project_compatible_oracle(&op, &Direction::axis(3, 0), &a).unwrap();
    let s = symbol_apply(&op, &Direction::axis(3, 0), &o).unwrap();
    assert!(s.iter().all(|x: &f64| x.abs() < 1e-10));
}

#[test]
fn single_precision_projection() {
    let a: Matrix<f32> = Matrix::from_rows(&[[1.0f32, 2.0], [3.0, 4.0]]).unwrap();
    let p = project_compatible(&DiffOp::curl(2), &Direction::<f32>::axis(2, 0), &a).unwrap();
    assert_eq!(p.as_slice(), &[1.0f32, 0.0, 3.0, 0.0]);
}
