mod common;

use approx::assert_relative_eq;
use common::ground_state;
use nlslab_core::ansatz::modulation_vector;
use nlslab_core::reduced_ode::{self, ExitKind, ReducedState, ShootingConfig};
use nlslab_core::{GeometryConstants, ParamState};
use proptest::prelude::*;

fn consts(k: usize) -> GeometryConstants {
    GeometryConstants::new(k, &ground_state().scalars).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn modulation_vector_vanishes_on_the_reduced_flow(
        k in 2usize..6,
        lambda in 0.01f64..1.0,
        z in 3.0f64..40.0,
        gamma in -10.0f64..10.0,
        beta in -1e-2f64..1e-2,
        b in 0.0f64..1e-2,
    ) {
        let c = consts(k);
        let p = ParamState::new(lambda, z, gamma, beta, b);
        let pdot = reduced_ode::reduced_rhs(&ReducedState { s: 100.0, p }, &c);
        let m = modulation_vector(&p, &pdot, &c);
        prop_assert!(m.max_abs() <= 1e-14 * (1.0 + z), "{:?}", m);
    }
}

#[test]
fn backward_then_forward_returns_the_final_data() {
    let c = consts(2);
    let s_in = 1e4;
    let p_in = reduced_ode::final_data(s_in, 0.0, &c).unwrap();
    let back = reduced_ode::integrate(&p_in, s_in, 1e3, &c).unwrap();
    let forward = reduced_ode::integrate(&back, 1e3, s_in, &c).unwrap();
    // components that start at zero (the phase) are measured against their excursion
    for ((a, b), mid) in forward.to_array().iter().zip(p_in.to_array()).zip(back.to_array()) {
        assert!((a - b).abs() <= 1e-8 * b.abs().max(mid.abs()), "{a} vs {b}");
    }
}

#[test]
fn final_data_hits_the_zeta_target() {
    let c = consts(3);
    let s_in = 1e5;
    for zs in [-0.5, 0.0, 0.7] {
        let p = reduced_ode::final_data(s_in, zs, &c).unwrap();
        let target = s_in + zs * s_in / s_in.ln().sqrt();
        assert_relative_eq!(reduced_ode::zeta_of(p.z, &c), target, max_relative = 1e-10);
        assert_relative_eq!(p.lambda, 1.0 / s_in.ln());
        assert!(p.b > 0.0);
    }
    assert!(reduced_ode::final_data(s_in, 1.5, &c).is_err());
    assert!(reduced_ode::final_data(5.0, 0.0, &c).is_err());
}

#[test]
fn shooting_endpoints_exit_with_opposite_signs() {
    let c = consts(2);
    let cfg = ShootingConfig::new(1e5, 1e3, 1e-12);
    let sign = |zs: f64| match reduced_ode::integrate_backward(&cfg, zs, &c).unwrap().1 {
        ExitKind::TubeExit { sign, .. } => sign,
        ExitKind::ReachedS0 => 0,
    };
    assert_eq!(sign(1.0), 1);
    assert_eq!(sign(-1.0), -1);
}

#[test]
fn survivor_stays_in_the_regime() {
    let c = consts(2);
    let out = reduced_ode::shoot(&ShootingConfig::new(1e6, 1e3, 1e-12), &c).unwrap();
    assert!(out.survived);
    assert!(out.sign_monotone());
    assert!(out.transversality_failures().is_empty());
    let states = &out.trajectory.states;
    assert!(states.last().unwrap().s <= 1e3 * (1.0 + 1e-9));
    for st in states {
        assert!(st.p.b > 0.0);
        let band = st.p.b * st.s * st.s.ln();
        assert!((0.8..=1.2).contains(&band), "b s log s = {band} at s = {}", st.s);
    }
    // z grows like (2/κ) log s up to a log log correction
    for st in states {
        let drift = (st.p.z - 2.0 / c.kappa * st.s.ln()).abs();
        assert!(drift <= 3.0 * st.s.ln().ln(), "{drift}");
    }
}

#[test]
fn regime_residuals_have_finite_constants() {
    let c = consts(2);
    for s in [1e3, 1e4, 1e5, 1e6] {
        let r = reduced_ode::regime_residual(s, &c).unwrap();
        assert!(r.conformal.is_finite() && r.interaction.is_finite());
        assert!(r.conformal < 10.0 && r.interaction < 10.0, "{r:?}");
    }
    assert!(reduced_ode::regime_reference(2.0, &c).is_err());
}

#[test]
fn time_map_integrates_lambda_squared() {
    let s = [10.0, 8.0, 5.0, 1.0];
    let lambda = [0.5; 4];
    let t = reduced_ode::time_map(&s, &lambda);
    for (ti, si) in t.iter().zip(s) {
        assert_relative_eq!(*ti, -0.25 * (10.0 - si), epsilon = 1e-15);
    }
}

#[test]
fn trajectory_csv_has_the_documented_columns() {
    let c = consts(2);
    let cfg = ShootingConfig::new(1e4, 1e3, 1e-12);
    let (traj, _) = reduced_ode::integrate_backward(&cfg, 0.0, &c).unwrap();
    let csv = traj.to_csv(&c);
    assert_eq!(csv.lines().next().unwrap(), "s,lambda,z,gamma,beta,b,a,zeta,xi,t");
    assert_eq!(csv.lines().count(), traj.states.len() + 1);
}
