//! Shared fixtures for the kernel benchmarks.

use mmp_core::{GridSpec, InitSpec, PhysParams, State, SystemVariant};

/// A reproducible random state of unit `L²` size on an `n³` grid.
pub fn fixture_state(n: usize, seed: u64) -> State {
    let grid = GridSpec::new(n).expect("power-of-two grid");
    let init = InitSpec::with_defaults(grid, 1.0, 0.0, seed);
    mmp_core::state::make_random_state(grid, &init, SystemVariant::Full).expect("valid init")
}

pub fn full_params() -> PhysParams {
    PhysParams {
        mu: 1.0,
        ..PhysParams::default()
    }
}
