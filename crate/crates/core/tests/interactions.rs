mod common;

use approx::assert_relative_eq;
use common::ground_state;
use nlslab_core::ansatz::AnsatzGrid;
use nlslab_core::interactions::{self, CartesianQuadrature, GeometryConstants};
use nlslab_core::ParamState;

#[test]
fn overlap_approaches_the_asymptotic_law() {
    let gs = ground_state();
    let quad = CartesianQuadrature::for_profile(&gs.q, 0.05);
    let rows = interactions::interaction_sweep(gs, &[8.0, 10.0, 12.0, 14.0], &quad).unwrap();
    let at10 = rows.iter().find(|r| r.omega_norm == 10.0).unwrap();
    assert!((at10.ratio - 1.0).abs() < 0.15);
    for w in rows.windows(2) {
        assert!((w[1].ratio - 1.0).abs() < (w[0].ratio - 1.0).abs());
    }
    let exponent = interactions::residual_exponent(&rows);
    assert!((exponent + 1.5).abs() <= 0.3, "{exponent}");
    // fitted constants of the |ω|^{-3/2} e^{-|ω|} residual are stable
    let constants: Vec<f64> =
        rows.iter().take(3).map(|r| (r.quadrature - r.asymptotic).abs() / (r.omega_norm.powf(-1.5) * (-r.omega_norm).exp())).collect();
    let (lo, hi) = constants.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    assert!(hi / lo < 1.5, "{constants:?}");
}

#[test]
fn moments_share_the_exponential_envelope() {
    let gs = ground_state();
    let quad = CartesianQuadrature::for_profile(&gs.q, 0.05);
    for q in 0..=4 {
        let c: Vec<f64> = [8.0f64, 12.0]
            .iter()
            .map(|&w| interactions::overlap_two(&gs.q, [w, 0.0], q, &quad).unwrap() / (w.powf(-0.5) * (-w).exp()))
            .collect();
        assert!(c[1] / c[0] > 0.5 && c[1] / c[0] < 2.0, "q = {q}: {c:?}");
    }
}

#[test]
fn three_body_overlap_is_doubly_small() {
    let gs = ground_state();
    let quad = CartesianQuadrature::for_profile(&gs.q, 0.05);
    let angle = 2.0 * std::f64::consts::PI / 3.0;
    let v = interactions::overlap_three(&gs.q, [8.0, 0.0], [8.0 * angle.cos(), 8.0 * angle.sin()], 0, &quad).unwrap();
    assert!(v > 0.0 && v <= 1e3 * (-12.0f64).exp(), "{v:e}");
}

#[test]
fn out_of_range_separation_is_rejected() {
    let gs = ground_state();
    let quad = CartesianQuadrature::for_profile(&gs.q, 0.1);
    assert!(interactions::overlap_two(&gs.q, [20.0, 0.0], 0, &quad).is_err());
    assert!(interactions::asymptotic_overlap(&gs.scalars, 2.0).is_err());
}

#[test]
fn geometry_constants_follow_the_neighbour_count() {
    let s = &ground_state().scalars;
    let mut last = f64::INFINITY;
    for k in 2..10 {
        let kappa = interactions::kappa_of(k).unwrap();
        assert!(kappa < last);
        last = kappa;
    }
    let two = GeometryConstants::new(2, s).unwrap();
    let three = GeometryConstants::new(3, s).unwrap();
    assert_relative_eq!(three.c_a / three.kappa.sqrt(), 2.0 * two.c_a / two.kappa.sqrt(), max_relative = 1e-14);
    assert!(two.c_a > 0.0);
    assert!(interactions::kappa_of(1).is_err());
}

#[test]
fn a_prime_matches_central_differences() {
    let c = GeometryConstants::new(3, &ground_state().scalars).unwrap();
    let err = |h: f64| ((c.a_of_z(5.0 + h) - c.a_of_z(5.0 - h)) / (2.0 * h) - c.a_prime_of_z(5.0)).abs();
    let ratio = err(1e-2) / err(5e-3);
    assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
}

#[test]
fn projection_matches_the_leading_term() {
    let gs = ground_state();
    let c = GeometryConstants::new(2, &gs.scalars).unwrap();
    let grid = AnsatzGrid { n: 256, half_width: 24.0 };
    let p = ParamState::new(1.0, 8.0, 0.0, 0.0, 1e-3);
    let proj = interactions::projection_g1_iqa(gs, &c, &p, &grid).unwrap();
    let lead = interactions::projection_leading(&gs.scalars, &c, &p);
    assert!(proj < 0.0);
    assert!((proj / lead - 1.0).abs() < 0.25, "{}", proj / lead);
    let still = ParamState::new(1.0, 8.0, 0.0, 0.0, 0.0);
    let p0 = interactions::projection_g1_iqa(gs, &c, &still, &grid).unwrap();
    assert!(p0.abs() <= 100.0 * 8f64.powi(3) * (-2.0 * c.kappa * 8.0).exp(), "{p0:e}");
}
