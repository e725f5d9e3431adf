mod common;

use common::{diag3_oracle, max_abs_diff, random_induced, riccati, riccati_blowup};
use curvflow::curvop::{sharp_self, spectrum};
use curvflow::flow::integrate;
use curvflow::models::{random_in_cone, random_symmetric, rng_for};
use curvflow::{ConeParams, CurvatureOperator, IntegratorConfig, LieAlgebraBasis, Termination};

fn fixed_step(dt0: f64, t_max: f64) -> IntegratorConfig {
    IntegratorConfig {
        dt0,
        t_max,
        // large enough that the growth guard never shrinks the step
        growth_fraction: 1e6,
        record_stride: 1,
        ..Default::default()
    }
}

#[test]
fn identity_sharp_is_a_multiple_of_identity() {
    for n in 3..=6 {
        let b = LieAlgebraBasis::new(n).unwrap();
        let s = sharp_self(&CurvatureOperator::identity(n), &b).unwrap();
        let expected = CurvatureOperator::identity(n).scaled(common::riccati_kappa(n));
        assert!(max_abs_diff(s.matrix(), expected.matrix()) < 1e-14, "n = {n}");
    }
}

#[test]
fn scalar_start_follows_riccati() {
    for n in [3, 4, 5] {
        let b = LieAlgebraBasis::new(n).unwrap();
        let r0 = 0.8;
        let t = 0.8 * riccati_blowup(r0, n);
        let rec = integrate(&CurvatureOperator::identity(n).scaled(r0), &b, &fixed_step(1e-3, t), None).unwrap();
        let exact = riccati(r0, n, t);
        for mu in &rec.last().eigenvalues {
            assert!((mu - exact).abs() / exact < 1e-8, "n = {n}: {mu} vs {exact}");
        }
    }
}

#[test]
fn scalar_start_blows_up_near_the_closed_form_time() {
    let b = LieAlgebraBasis::new(4).unwrap();
    let rec = integrate(&CurvatureOperator::identity(4), &b, &IntegratorConfig::default(), None).unwrap();
    assert_eq!(rec.status, Termination::BlowUp);
    let t_star = riccati_blowup(1.0, 4);
    assert!((rec.last().t - t_star).abs() < 1e-6, "{} vs {t_star}", rec.last().t);
}

#[test]
fn diagonal_start_matches_three_equation_oracle() {
    let b = LieAlgebraBasis::new(3).unwrap();
    for mu0 in [[-1.0, 1.0, 1.0], [0.3, 0.5, 0.8], [-0.4, 0.2, 1.1]] {
        let t = 0.4;
        let rec = integrate(&CurvatureOperator::diagonal(3, &mu0).unwrap(), &b, &fixed_step(1e-3, t), None).unwrap();
        let mut oracle = diag3_oracle(mu0, t, 40_000).to_vec();
        oracle.sort_by(f64::total_cmp);
        for (a, o) in rec.last().eigenvalues.iter().zip(&oracle) {
            assert!((a - o).abs() < 1e-7 * o.abs().max(1.0), "{mu0:?}: {a} vs {o}");
        }
    }
}

#[test]
fn trajectories_commute_with_rotations() {
    for n in [3, 4] {
        let b = LieAlgebraBasis::new(n).unwrap();
        let r0 = random_symmetric(n, 0.5, &mut rng_for(8, n as u64));
        let q = random_induced(&b, 8, 100 + n as u64);
        let cfg = IntegratorConfig { t_max: 0.5, ..Default::default() };
        let a = integrate(&r0, &b, &cfg, None).unwrap();
        let c = integrate(&r0.conjugate(&q).unwrap(), &b, &cfg, None).unwrap();
        assert_eq!(a.steps, c.steps);
        let rotated = a.final_state.conjugate(&q).unwrap();
        let scale = a.final_state.norm_inf().max(1.0);
        assert!(max_abs_diff(rotated.matrix(), c.final_state.matrix()) < 1e-10 * scale);
    }
}

#[test]
fn scaling_reparametrizes_time() {
    // R(t) from c·R₀ equals c·R̃(c·t) where R̃ starts at R₀
    let b = LieAlgebraBasis::new(4).unwrap();
    let r0 = random_symmetric(4, 0.5, &mut rng_for(9, 0));
    let c = 2.0;
    let slow = integrate(&r0, &b, &fixed_step(2e-3, 0.6), None).unwrap();
    let fast = integrate(&r0.scaled(c), &b, &fixed_step(1e-3, 0.3), None).unwrap();
    let expected = slow.final_state.scaled(c);
    let scale = expected.norm_inf().max(1.0);
    assert!(max_abs_diff(expected.matrix(), fast.final_state.matrix()) < 1e-9 * scale);
}

#[test]
fn symmetry_is_preserved() {
    let b = LieAlgebraBasis::new(5).unwrap();
    let mut rng = rng_for(10, 0);
    let r0 = random_in_cone(&ConeParams::new(0.8, 0.4).unwrap(), 5, None, &mut rng).unwrap().operator;
    let rec = integrate(&r0, &b, &IntegratorConfig::default(), None).unwrap();
    for p in &rec.points {
        assert!(p.asymmetry <= 1e-12 * p.norm.max(1.0), "t = {}: {}", p.t, p.asymmetry);
    }
    let s = spectrum(&rec.final_state).unwrap();
    assert_eq!(s.len(), 10);
}
