//! Scattering by fixed Coulomb centres: potential model, exact Kepler
//! propagation, a splitting integrator, Møller data and time delays,
//! Gevrey-type integrals and symbolic dynamics of periodic orbits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod flow;
pub mod integrals;
pub mod kepler;
pub mod model;
pub mod richardson;
pub mod scattering;
pub mod symbolic;

pub use error::{Error, Result};
pub use flow::{
    find_level_crossings, find_radius_crossings, integrate, integrate_with, nearest_centre, replay, replay_to_level,
    split_step, IntegratorSettings, Stop, Trajectory,
};
pub use integrals::{gevrey_integral, two_centre_constant, GevreyParams};
pub use kepler::{asymptote_data, kepler_propagate, osculating_elements, time_in_ball, KeplerElements};
pub use model::{energy, escape_check, grad_potential, potential, virial_radius, CentreConfig, PhaseState, Vec3};
pub use scattering::{
    asymptotic_momentum, classify, moeller_datum, scatter_record, time_delay, Classification, Direction, OrbitClass,
    ScatterRecord, ScatterSettings,
};
pub use symbolic::{
    atlas_words, count_periodic_words, entropy_estimate, find_periodic_orbit, hyperbolicity_report, orbit_separation,
    polygon_guess, symbol_metric, word_classes, EntropyReport, EntropyRow, HyperbolicityReport, PeriodicOrbit,
    PoincareEvent, ShootingSettings, SymbolWord,
};
