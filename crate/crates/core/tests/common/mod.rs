#![allow(dead_code)]

use nlslab_core::{GroundStateData, RadialGrid};
use std::sync::OnceLock;

/// Ground state at the default resolution, shared by the tests of one binary.
pub fn ground_state() -> &'static GroundStateData {
    static GS: OnceLock<GroundStateData> = OnceLock::new();
    GS.get_or_init(|| {
        let grid = RadialGrid::with_spacing(30.0, 0.005).unwrap();
        GroundStateData::compute(&grid, 1e-12).unwrap()
    })
}

/// A coarser ground state for tests that only need qualitative structure.
pub fn coarse_ground_state() -> &'static GroundStateData {
    static GS: OnceLock<GroundStateData> = OnceLock::new();
    GS.get_or_init(|| {
        let grid = RadialGrid::with_spacing(30.0, 0.02).unwrap();
        GroundStateData::compute(&grid, 1e-12).unwrap()
    })
}
