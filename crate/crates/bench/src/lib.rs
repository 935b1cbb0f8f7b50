//! Shared fixtures for the kernel benchmarks.

use nlslab_core::{ansatz, ComplexField2D, GeometryConstants, GroundStateData, ParamState, RadialGrid};

/// Ground state on a coarse grid; accurate enough for timing work.
pub fn coarse_ground_state() -> GroundStateData {
    let grid = RadialGrid::with_spacing(30.0, 0.02).expect("valid grid");
    GroundStateData::compute(&grid, 1e-12).expect("ground state converges")
}

pub fn two_bubble_constants(gs: &GroundStateData) -> GeometryConstants {
    GeometryConstants::new(2, &gs.scalars).expect("K = 2 is valid")
}

/// A two-bubble field in physical variables with its exact parameters.
pub fn two_bubble_field(gs: &GroundStateData, consts: &GeometryConstants, n: usize) -> (ComplexField2D, ParamState) {
    let p = ParamState::new(0.8, 8.0, 0.3, 0.0, 2e-3);
    let half_width = (p.z + 16.0) * p.lambda;
    let u = ansatz::build_physical(gs, consts, &p, n, half_width).expect("ansatz fits the box");
    (u, p)
}
