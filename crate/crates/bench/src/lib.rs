//! Shared fixtures for the benchmarks.

use ncentre::{potential, CentreConfig, PhaseState, Vec3};

/// Planar triangle of unit attracting charges.
pub fn triangle() -> CentreConfig {
    CentreConfig::new(
        2,
        vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-0.5, 0.8, 0.0),
            Vec3::new(-0.5, -0.8, 0.0),
        ],
        vec![1.0; 3],
    )
    .expect("valid triangle")
}

/// State at x = -8 moving along +x with impact parameter `b` and energy `e`.
pub fn incoming(cfg: &CentreConfig, e: f64, b: f64) -> PhaseState {
    let q = Vec3::new(-8.0, b, 0.0);
    let v = potential(cfg, &q).expect("away from centres");
    PhaseState::new(q, Vec3::new((2.0 * (e - v)).sqrt(), 0.0, 0.0))
}
