mod common;

use approx::assert_relative_eq;
use common::ground_state;
use nlslab_core::ansatz::{self, AnsatzGrid};
use nlslab_core::reduced_ode::{self, ReducedState};
use nlslab_core::{pde, Error, GeometryConstants, ParamState};
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn two_routes_of_the_error_field_agree() {
    let gs = ground_state();
    let c = GeometryConstants::new(2, &gs.scalars).unwrap();
    let p = ParamState::new(1.0, 8.0, 0.0, 0.0, 1e-3);
    let grid = AnsatzGrid { n: 512, half_width: 32.0 };
    let pdot = reduced_ode::reduced_rhs(&ReducedState { s: 100.0, p }, &c);
    let report = ansatz::error_field(gs, &c, &p, &pdot, &grid).unwrap();
    let floor = ansatz::spectral_floor(gs, &grid).unwrap();
    assert!(report.discrepancy <= 10.0 * floor, "{:e} vs {floor:e}", report.discrepancy);
    let envelope = ansatz::pointwise_envelope_constant(gs, &c, &p, &report.direct);
    assert!(envelope.is_finite() && envelope > 0.0);
}

#[test]
fn psi_is_orthogonal_to_i_qa() {
    let gs = ground_state();
    let c = GeometryConstants::new(2, &gs.scalars).unwrap();
    let grid = AnsatzGrid { n: 256, half_width: 20.0 };
    let a = c.a_of_z(8.0);
    let psi = ansatz::psi_qa(gs, a, &grid).unwrap();
    let iqa = ansatz::q_a(gs, a, &grid).unwrap().scale(Complex64::new(0.0, 1.0));
    assert!(psi.pairing(&iqa).abs() <= 1e-12);
}

#[test]
fn ansatz_mass_is_close_to_k_solitons() {
    let gs = ground_state();
    for k in [2usize, 3] {
        let c = GeometryConstants::new(k, &gs.scalars).unwrap();
        let p = ParamState::new(1.0, 12.0, 0.0, 0.0, 0.0);
        let grid = AnsatzGrid { n: 256, half_width: 28.0 };
        let big_p = ansatz::build_ansatz(gs, &c, &p, &grid).unwrap();
        let budget = 12f64.powf(-0.5) * (-c.kappa * 12.0).exp() + c.a_of_z(12.0).abs();
        let rel = (big_p.mass() - k as f64 * gs.scalars.mass_q).abs() / gs.scalars.mass_q;
        assert!(rel <= 50.0 * budget, "K = {k}: {rel:e} vs {budget:e}");
    }
}

#[test]
fn ansatz_is_rotation_invariant() {
    let gs = ground_state();
    for k in [2usize, 4] {
        let c = GeometryConstants::new(k, &gs.scalars).unwrap();
        let p = ParamState::new(1.0, 6.0, 0.4, 1e-3, 2e-3);
        let big_p = ansatz::build_ansatz(gs, &c, &p, &AnsatzGrid { n: 128, half_width: 22.0 }).unwrap();
        assert!(pde::rotation_defect(&big_p, k).unwrap() < 1e-12);
    }
    let c = GeometryConstants::new(3, &gs.scalars).unwrap();
    let p = ParamState::new(1.0, 6.0, 0.0, 0.0, 1e-3);
    let big_p = ansatz::build_ansatz(gs, &c, &p, &AnsatzGrid { n: 512, half_width: 30.0 }).unwrap();
    let defect = pde::rotation_defect(&big_p, 3).unwrap();
    assert!(defect < 1e-6, "{defect:e}");
}

#[test]
fn small_boxes_are_rejected() {
    let gs = ground_state();
    let c = GeometryConstants::new(2, &gs.scalars).unwrap();
    let p = ParamState::new(1.0, 8.0, 0.0, 0.0, 0.0);
    let err = ansatz::build_ansatz(gs, &c, &p, &AnsatzGrid { n: 64, half_width: 20.0 }).unwrap_err();
    assert!(matches!(err, Error::BubbleLeavesBox { .. }));
    let grid = AnsatzGrid::for_separation(8.0, 0.1);
    assert!(grid.half_width >= 8.0 + ansatz::BOX_CLEARANCE);
    assert!(grid.n.is_power_of_two());
}

#[test]
fn physical_rescaling_preserves_mass() {
    let gs = ground_state();
    let c = GeometryConstants::new(2, &gs.scalars).unwrap();
    let p = ParamState::new(0.5, 8.0, 1.0, 0.0, 1e-3);
    let grid = AnsatzGrid { n: 256, half_width: 24.0 };
    let v = ansatz::build_ansatz(gs, &c, &p, &grid).unwrap();
    let u = ansatz::to_physical(&v, &p).unwrap();
    assert_relative_eq!(u.mass(), v.mass(), max_relative = 1e-12);
    let direct = ansatz::build_physical(gs, &c, &p, 256, 12.0).unwrap();
    assert!(direct.sub(&u).l2_norm() < 1e-10 * u.l2_norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modulation_vector_is_linear_in_the_velocity_offset(
        lambda in 0.05f64..1.0, z in 5.0f64..20.0, b in 0.0f64..1e-2, shift in -1e-3f64..1e-3,
    ) {
        let c = GeometryConstants::new(2, &ground_state().scalars).unwrap();
        let p = ParamState::new(lambda, z, 0.0, 0.0, b);
        let mut pdot = reduced_ode::reduced_rhs(&ReducedState { s: 10.0, p }, &c);
        pdot.b += shift;
        let m = ansatz::modulation_vector(&p, &pdot, &c);
        prop_assert!((m.conformal.abs() - shift.abs()).abs() <= 1e-14);
        prop_assert!(m.scale.abs() <= 1e-15 && m.translate.abs() <= 1e-12);
    }
}
