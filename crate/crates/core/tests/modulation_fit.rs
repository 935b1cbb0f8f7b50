mod common;

use approx::assert_relative_eq;
use common::ground_state;
use nlslab_core::ansatz::{self, AnsatzGrid};
use nlslab_core::modulation_fit::{self, SProxy};
use nlslab_core::{ComplexField2D, Error, GeometryConstants, ParamState};
use num_complex::Complex64;
use proptest::prelude::*;

fn consts() -> GeometryConstants {
    GeometryConstants::new(2, &ground_state().scalars).unwrap()
}

fn physical(p: &ParamState) -> ComplexField2D {
    let half_width = (p.z + 16.0) * p.lambda;
    ansatz::build_physical(ground_state(), &consts(), p, 256, half_width).unwrap()
}

#[test]
fn decompose_recovers_the_parameters_of_an_ansatz() {
    let gs = ground_state();
    let c = consts();
    let p = ParamState::new(0.8, 8.0, 0.3, 0.0, 2e-3);
    let u = physical(&p);
    let guess = ParamState::new(0.801, 8.02, 0.302, 1e-4, 2.1e-3);
    let dec = modulation_fit::decompose(&u, gs, &c, &guess, 1e-10, 0.3).unwrap();
    let target = 1e-10 * gs.scalars.mass_q.sqrt();
    for r in dec.ortho_residuals {
        assert!(r.abs() <= target, "{r:e}");
    }
    assert_relative_eq!(dec.p.lambda, p.lambda, max_relative = 1e-6);
    assert_relative_eq!(dec.p.z, p.z, max_relative = 1e-6);
    assert_relative_eq!(dec.p.b, p.b, max_relative = 1e-4);
    assert!(dec.p.beta.abs() < 1e-8);
    assert!((dec.p.gamma - p.gamma).abs() < 1e-6);
    for t in dec.transverse {
        assert!(t.abs() < 1e-10);
    }
    assert!(dec.eps_h1_sq() < 1e-10);
}

#[test]
fn galilean_bump_is_absorbed_by_the_parameters() {
    let gs = ground_state();
    let c = consts();
    let p = ParamState::new(1.0, 8.0, 0.0, 0.0, 1e-3);
    let u = physical(&p);
    // i∂₁Q-shaped bump at both bubbles, keeping the two-fold symmetry
    let bump = ComplexField2D::from_fn(u.n(), u.half_width(), |x, y| {
        let mut v = Complex64::new(0.0, 0.0);
        for k in 0..2 {
            let ctr = c.center(k, p.z);
            let e = c.unit_vectors[k];
            let (rx, ry) = (x - ctr[0], y - ctr[1]);
            let r = rx.hypot(ry);
            if r > 1e-12 {
                let (_, dq) = gs.q.eval_with_slope(r);
                v += Complex64::new(0.0, 1e-3 * dq * (rx * e[0] + ry * e[1]) / r);
            }
        }
        v
    })
    .unwrap();
    let dec = modulation_fit::decompose(&u.add(&bump), gs, &c, &p, 1e-10, 0.3).unwrap();
    assert!(dec.ortho_residuals[3].abs() <= 1e-10 * gs.scalars.mass_q.sqrt());
    assert!(dec.p.beta.abs() > 1e-5 || (dec.p.z - p.z).abs() > 1e-5);
}

#[test]
fn far_fields_are_rejected() {
    let gs = ground_state();
    let c = consts();
    let p = ParamState::new(1.0, 8.0, 0.0, 0.0, 1e-3);
    let u = physical(&p).scale(Complex64::new(0.0, 1.0));
    let err = modulation_fit::decompose(&u, gs, &c, &p, 1e-10, 0.3).unwrap_err();
    assert!(matches!(err, Error::OutsideClosenessWindow { .. }), "{err}");
}

#[test]
fn functionals_split_as_h_minus_j() {
    let gs = ground_state();
    let c = consts();
    let grid = AnsatzGrid { n: 128, half_width: 24.0 };
    let p = ParamState::new(1.0, 8.0, 0.0, 0.0, 1e-3);
    let big_p = ansatz::build_ansatz(gs, &c, &p, &grid).unwrap();
    let zero = ComplexField2D::zeros(128, 24.0).unwrap();
    let f0 = modulation_fit::functionals_of(&zero, &big_p, &p, &c, 100.0).unwrap();
    assert_eq!((f0.h, f0.j, f0.f, f0.eps_h1_sq), (0.0, 0.0, 0.0, 0.0));

    let eps = ComplexField2D::from_fn(128, 24.0, |x, y| Complex64::new(1e-3, 5e-4) * (-(x - 8.0).powi(2) - y * y).exp() * Complex64::from_polar(1.0, 0.3 * x)).unwrap();
    let fv = modulation_fit::functionals_of(&eps, &big_p, &p, &c, 100.0).unwrap();
    assert_relative_eq!(fv.f, fv.h - fv.j, epsilon = 1e-18);
    assert!(fv.j != 0.0);
    let still = ParamState::new(1.0, 8.0, 0.0, 0.0, 0.0);
    assert_eq!(modulation_fit::functionals_of(&eps, &big_p, &still, &c, 100.0).unwrap().j, 0.0);
    let real = eps.map(|z| Complex64::new(z.re, 0.0));
    // real residuals carry no momentum up to the round-off of the spectral gradient
    let j_real = modulation_fit::functionals_of(&real, &big_p, &p, &c, 100.0).unwrap().j;
    assert!(j_real.abs() <= 1e-10 * fv.j.abs(), "{j_real:e}");
    assert!(modulation_fit::functionals_of(&eps, &big_p, &p, &c, 0.5).is_err());
}

#[test]
fn coercivity_quotients_are_positive() {
    let gs = ground_state();
    let c = consts();
    let grid = AnsatzGrid { n: 128, half_width: 24.0 };
    let p = ParamState::new(1.0, 8.0, 0.0, 0.0, 1e-3);
    let report = modulation_fit::coercivity_sample(gs, &c, &p, &grid, 100.0, 8, 1e-3, 7).unwrap();
    assert_eq!(report.quotients.len(), 8);
    assert!(report.min_quotient > 0.0, "{report:?}");
    assert!(report.max_ortho_residual < 1e-8);
    let again = modulation_fit::coercivity_sample(gs, &c, &p, &grid, 100.0, 8, 1e-3, 7).unwrap();
    assert_eq!(report, again);
}

#[test]
fn s_proxy_decreases_backward_in_time() {
    let c = consts();
    let proxy = SProxy::new(100.0, 0.0, 11.0, &c).unwrap();
    assert_relative_eq!(proxy.s_at(0.0), 100.0, max_relative = 1e-12);
    let mut last = 100.0;
    for t in [-0.1, -0.5, -1.0, -2.0] {
        let s = proxy.s_at(t);
        assert!(s < last);
        last = s;
    }
    assert!(proxy.t_min() < -2.0);
}

proptest! {
    #[test]
    fn cutoff_is_a_monotone_plateau(r in 0.0f64..0.3, h in 0.0f64..0.05) {
        let v = modulation_fit::cutoff(r);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!(modulation_fit::cutoff(r + h) <= v);
        if r <= 0.1 { prop_assert_eq!(v, 1.0); }
        if r >= 0.125 { prop_assert_eq!(v, 0.0); }
    }
}
