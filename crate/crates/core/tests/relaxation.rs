//! Relaxed excess energy, optimal fraction and compatible approximations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twowell::compatibility::quantifiers;
use twowell::operator_kernel::*;
use twowell::random::{random_matrix, random_mixing, random_problem, CcClass};
use twowell::relaxation::*;
use twowell::TwoWellError;

fn m(rows: &[[f64; 2]]) -> Matrix<f64> {
    Matrix::from_f64_rows(rows).unwrap()
}

fn diag21() -> ProblemData<f64> {
    let a1 = m(&[[2.0, 0.0], [0.0, 1.0]]);
    ProblemData::new(DiffOp::curl(2), &a1 * 0.5, Matrix::zeros(2), a1).unwrap()
}

#[test]
fn envelope_examples() {
    let d = diag21();
    assert!((envelope_at_fraction(&d, 0.5).unwrap() - 0.25).abs() < 1e-15);
    let f0 = (&d.f - &d.a0).norm_sq();
    assert!((envelope_at_fraction(&d, 0.0).unwrap() - f0).abs() < 1e-15);
    assert!(matches!(envelope_at_fraction(&d, 1.5), Err(TwoWellError::ThetaOutOfRange(_))));
    let c = ProblemData::new(DiffOp::curl(2), m(&[[0.5, 0.0], [0.0, 0.0]]), Matrix::zeros(2), m(&[[1.0, 0.0], [0.0, 0.0]])).unwrap();
    assert!(envelope_at_fraction(&c, 0.5).unwrap().abs() < 1e-15);
}

#[test]
fn optimal_fraction_example() {
    let (t, e) = optimal_fraction(&diag21()).unwrap();
    assert!((t - 0.5).abs() < 1e-15 && (e - 0.25).abs() < 1e-15);
    let (tg, eg) = grid_search_fraction(&diag21(), 1.0, 1_000_000);
    assert!((tg - 0.5).abs() <= 1e-6 && (eg - 0.25).abs() <= 1e-10);
}

#[test]
fn compatible_data_relaxes_exactly() {
    let a0 = m(&[[0.3, -1.0], [2.0, 0.1]]);
    let b = [1.0, -2.0];
    let xi = Direction::new(vec![0.6, 0.8]).unwrap();
    let a1 = &a0 + &Matrix::outer(&b, xi.as_slice());
    let lam = 0.3;
    let f = &(&a0 * (1.0 - lam)) + &(&a1 * lam);
    let d = ProblemData::new(DiffOp::curl(2), f, a0.clone(), a1.clone()).unwrap();
    let r = relax(&d).unwrap();
    assert!((r.theta_tilde - lam).abs() < 1e-12 && r.e0_density.abs() < 1e-12);
    let t = compatible_approximation(&d, &xi).unwrap();
    assert!((&t.a0 - &a0).norm() < 1e-12 && (&t.a1 - &a1).norm() < 1e-12);
}

#[test]
fn far_datum_is_pure() {
    let a1 = m(&[[2.0, 0.0], [0.0, 1.0]]);
    let d = ProblemData::new(DiffOp::curl(2), &a1 * 3.0, Matrix::zeros(2), a1).unwrap();
    let r = relax(&d).unwrap();
    assert_eq!(r.theta_tilde, 1.0);
    assert_eq!(r.regime, Regime::Pure1);
}

#[test]
fn compatible_approximation_example() {
    let d = diag21();
    let t = compatible_approximation(&d, &Direction::axis(2, 0)).unwrap();
    assert!((&t.a0 - &m(&[[0.0, 0.0], [0.0, 0.5]])).norm() < 1e-15);
    assert!((&t.a1 - &m(&[[2.0, 0.0], [0.0, 0.5]])).norm() < 1e-15);
    assert!((t.b[0] - 2.0).abs() < 1e-15 && t.b[1].abs() < 1e-15);
    assert!(((&t.a1 - &t.a0).norm_sq() - 4.0).abs() < 1e-14);
}

#[test]
fn non_optimal_direction_rejected() {
    let r = compatible_approximation(&diag21(), &Direction::axis(2, 1));
    assert!(matches!(r, Err(TwoWellError::NotOptimal(_))));
}

#[test]
fn coincident_wells_rejected() {
    let a = m(&[[1.0, 0.0], [0.0, 1.0]]);
    let r = ProblemData::new(DiffOp::curl(2), a.clone(), a.clone(), a);
    assert!(matches!(r, Err(TwoWellError::DegenerateWells(_))));
}

#[test]
fn report_invariants_on_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for op in [DiffOp::curl(2), DiffOp::div(2), DiffOp::curl_curl(), DiffOp::curl(3), DiffOp::div(3)] {
        for _ in 0..100 {
            let d = random_problem(&mut rng, op).unwrap();
            let r = relax(&d).unwrap();
            let h = r.quantifiers.h;
            let env = envelope_with_h(&d, h, r.theta_tilde);
            assert!((r.e0_density - env).abs() <= 1e-10 * env.max(1.0));
            let want = if r.theta_tilde == 0.0 {
                Regime::Pure0
            } else if r.theta_tilde == 1.0 {
                Regime::Pure1
            } else {
                Regime::Mixing
            };
            assert_eq!(r.regime, want);
            let t = r.tilde_wells.as_ref().unwrap();
            let avg = &(&t.a0 * (1.0 - r.theta_tilde)) + &(&t.a1 * r.theta_tilde);
            assert!((&avg - &d.f).norm() <= 1e-10 * d.f.norm().max(1.0));
            let pa = project_compatible_oracle(&op, &t.xi, &d.a()).unwrap();
            assert!((&(&t.a1 - &t.a0) - &pa).norm() <= 1e-10 * d.a().norm());
            let resid = (&d.a() - &pa).norm_sq();
            let e = (&d.f - &d.a_theta(r.theta_tilde)).norm_sq() + r.theta_tilde * (1.0 - r.theta_tilde) * resid;
            assert!((e - r.e0_density).abs() <= 1e-10 * r.e0_density.max(1.0));
            let (tg, _) = grid_search_fraction(&d, h, 100_000);
            assert!((tg - r.theta_tilde).abs() <= 1e-5);
            let slab = r.theta_star <= r.r_a;
            assert_eq!(slab, r.regime == Regime::Pure0, "θ* = {} R = {}", r.theta_star, r.r_a);
        }
    }
}

#[test]
fn envelope_is_strictly_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for op in [DiffOp::curl(2), DiffOp::div(2), DiffOp::curl_curl()] {
        let d = random_problem(&mut rng, op).unwrap();
        let h = quantifiers(&op, &d.a()).unwrap().h;
        let s = 1e-3;
        for k in 1..1000 {
            let t = k as f64 * s;
            let e = |t: f64| envelope_with_h(&d, h, t);
            assert!(e(t - s) - 2.0 * e(t) + e(t + s) > 0.0);
        }
    }
}

#[test]
fn fraction_invariant_under_orthogonal_shifts() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = random_mixing(&mut rng, DiffOp::curl(2), None).unwrap();
    let t0 = relax(&d).unwrap().theta_tilde;
    let a = d.a();
    for _ in 0..100 {
        let v = random_matrix(&mut rng, 2);
        let v = &v - &(&a * (v.dot(&a) / a.norm_sq()));
        let shifted = ProblemData::new(d.op, &d.f + &v, d.a0.clone(), d.a1.clone()).unwrap();
        assert!((relax(&shifted).unwrap().theta_tilde - t0).abs() < 1e-12);
    }
}

#[test]
fn excess_vanishes_iff_compatible_or_on_wells() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let a0 = random_matrix(&mut rng, 2);
        let b = random_matrix(&mut rng, 2).as_slice()[..2].to_vec();
        let xi: Direction<f64> = random_direction(2, &mut rng);
        let rank_one = Matrix::outer(&b, xi.as_slice());
        let a1 = &a0 + &rank_one;
        let lam: f64 = rng.random_range(0.1..0.9);
        let f = &a0 + &(&rank_one * lam);
        let compatible = ProblemData::new(DiffOp::curl(2), f, a0.clone(), a1).unwrap();
        assert!(relax(&compatible).unwrap().e0_density.abs() < 1e-12);
        let a1 = &a0 + &random_matrix(&mut rng, 2);
        let on_well = ProblemData::new(DiffOp::curl(2), a0.clone(), a0.clone(), a1.clone()).unwrap();
        assert!(relax(&on_well).unwrap().e0_density.abs() < 1e-12);
        let mid = ProblemData::new(DiffOp::curl(2), &(&a0 + &a1) * 0.5, a0.clone(), a1).unwrap();
        let r = relax(&mid).unwrap();
        if r.quantifiers.h > 1e-6 {
            assert!(r.e0_density > 1e-8);
        }
    }
}

#[test]
fn curlcurl_data_is_symmetrized() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = random_mixing(&mut rng, DiffOp::curl_curl(), Some(CcClass::RankOne)).unwrap();
    assert!(d.f.is_symmetric() && d.a0.is_symmetric() && d.a1.is_symmetric());
}

#[test]
fn single_precision_relaxation() {
    let a1: Matrix<f32> = Matrix::from_rows(&[[2.0f32, 0.0], [0.0, 1.0]]).unwrap();
    let d = ProblemData::new(DiffOp::curl(2), &a1 * 0.5, Matrix::zeros(2), a1).unwrap();
    let (t, e) = optimal_fraction(&d).unwrap();
    assert!((t - 0.5).abs() < 1e-6 && (e - 0.25).abs() < 1e-6);
    let d64: ProblemData<f64> = d.cast();
    assert_eq!(optimal_fraction(&d64).unwrap(), (0.5, 0.25));
}
