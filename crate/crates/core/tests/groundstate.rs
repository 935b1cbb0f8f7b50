mod common;

use approx::assert_relative_eq;
use common::ground_state;
use nlslab_core::groundstate::{self, OperatorKind, SectorOperator};
use nlslab_core::{oracle, GroundStateData, RadialGrid, RadialProfile};

#[test]
fn peak_and_mass_agree_with_spectral_renormalization() {
    let gs = ground_state();
    let renorm = oracle::spectral_renormalization(256, 20.0, 1e-13).unwrap();
    assert_relative_eq!(gs.scalars.q_at_0, 2.2062, epsilon = 1e-4);
    assert_relative_eq!(gs.scalars.q_at_0, renorm.peak, max_relative = 1e-6);
    assert_relative_eq!(gs.scalars.mass_q, renorm.mass, max_relative = 1e-6);
    assert_relative_eq!(gs.scalars.mass_q, 11.70, epsilon = 5e-3);
}

#[test]
fn pohozaev_identities_hold() {
    for defect in ground_state().pohozaev_defects() {
        assert!(defect.abs() < 1e-6, "defect {defect:e}");
    }
}

#[test]
fn tail_constant_matches_direct_evaluation() {
    let gs = ground_state();
    let direct: f64 = [10.0, 12.0, 14.0].iter().map(|&r: &f64| gs.q.eval(r) * r.sqrt() * r.exp()).sum::<f64>() / 3.0;
    assert_relative_eq!(gs.scalars.c_q, direct, max_relative = 1e-2);
    assert_relative_eq!(gs.scalars.c_q, 3.52, epsilon = 1e-2);
}

#[test]
fn angular_integral_is_converged_and_matches_cartesian_quadrature() {
    let gs = ground_state();
    let coarse = groundstate::compute_iq(&gs.q, 256);
    let fine = groundstate::compute_iq(&gs.q, 512);
    assert!(coarse > 0.0);
    assert_relative_eq!(coarse, fine, max_relative = 1e-8);
    let cartesian = oracle::cartesian_iq(&gs.q, 1200, [1.0, 0.0]);
    assert_relative_eq!(coarse, cartesian, max_relative = 1e-6);
}

#[test]
fn rho_banded_solve_matches_conjugate_gradient() {
    let gs = ground_state();
    let op = SectorOperator::new(&gs.q, 0, OperatorKind::Plus);
    let grid = gs.q.grid();
    let rhs_full: Vec<f64> = gs.q.values().iter().enumerate().map(|(i, v)| 0.25 * grid.r(i).powi(2) * v).collect();
    let rhs = op.restrict(&rhs_full);
    let cg = oracle::conjugate_gradient(&op, &rhs, 1e-14, 20_000).unwrap();
    let banded = op.restrict(gs.rho.values());
    let diff: Vec<f64> = cg.iter().zip(&banded).map(|(a, b)| a - b).collect();
    assert!(op.norm(&diff) <= 1e-8 * op.norm(&banded), "{:e}", op.norm(&diff) / op.norm(&banded));
    assert!(gs.scalars.rho_dot_q > 0.0);
    assert!(groundstate::solve_rho(&gs.q).unwrap().residual <= 1e-8);
}

#[test]
fn null_space_relations_hold() {
    for (name, r) in groundstate::null_space_residuals(ground_state()) {
        assert!(r <= 1e-5, "{name}: {r:e}");
    }
}

#[test]
fn inertia_minima_match_dense_eigensolve() {
    // 2000 nodes on r_max = 30
    let grid = RadialGrid::new(30.0, 2001).unwrap();
    let gs = GroundStateData::compute(&grid, 1e-12).unwrap();
    for (m, kind) in [(0, OperatorKind::Plus), (2, OperatorKind::Plus)] {
        let op = SectorOperator::new(&gs.q, m, kind);
        let dense = oracle::dense_eigenvalues(&op)[0];
        let bisected = op.min_eigenvalue(&[], 1e-12);
        assert_relative_eq!(dense, bisected, epsilon = 1e-8);
        if m == 0 {
            assert!(dense < 0.0);
        } else {
            assert!(dense > 0.0);
        }
    }
}

#[test]
fn coercivity_spectrum_has_positive_constrained_minima() {
    let gs = ground_state();
    let spectrum = groundstate::coercivity_spectrum(gs, 4).unwrap();
    assert_eq!(spectrum.len(), 10);
    for s in &spectrum {
        assert!(s.constrained_min > 0.0, "{s:?}");
    }
    assert!(groundstate::coercivity_constant(&spectrum) > 0.0);
    let m1 = spectrum.iter().find(|s| s.harmonic == 1 && s.kind == OperatorKind::Plus).unwrap();
    assert!(m1.unconstrained_min.abs() < 1e-4);
    assert!(groundstate::coercivity_spectrum(gs, 1).is_err());
}

#[test]
fn scalars_converge_at_second_order() {
    let mass = |h: f64| {
        let grid = RadialGrid::with_spacing(30.0, h).unwrap();
        GroundStateData::compute(&grid, 1e-12).unwrap().scalars.mass_q
    };
    let (a, b, c) = (mass(0.04), mass(0.02), mass(0.01));
    let ratio = (a - b).abs() / (b - c).abs();
    assert!(ratio > 3.0, "increment ratio {ratio}");
}

#[test]
fn profile_csv_round_trips() {
    let gs = ground_state();
    let mut buf = b"# stamp\n".to_vec();
    gs.q.write_csv(&mut buf).unwrap();
    let back = RadialProfile::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.values().len(), gs.q.values().len());
    for (a, b) in back.values().iter().zip(gs.q.values()) {
        assert_relative_eq!(*a, *b, max_relative = 1e-15);
    }
}
