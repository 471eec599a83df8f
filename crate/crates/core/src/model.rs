//! Problem instance: fixed Coulomb centres, the potential they generate,
//! and the far-field escape criterion.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Default minimum admissible distance to a centre for potential evaluation.
pub const DEFAULT_COLLISION_GUARD: f64 = 1e-10;

/// Positions and strengths of the fixed centres.
///
/// Planar problems (`dimension == 2`) are embedded in R³ with vanishing
/// third components; every construction restricts consistently to the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentreConfig {
    dimension: usize,
    centres: Vec<Vec3>,
    charges: Vec<f64>,
    collision_guard: f64,
}

impl CentreConfig {
    pub fn new(dimension: usize, centres: Vec<Vec3>, charges: Vec<f64>) -> Result<Self> {
        Self::with_guard(dimension, centres, charges, DEFAULT_COLLISION_GUARD)
    }

    pub fn with_guard(dimension: usize, centres: Vec<Vec3>, charges: Vec<f64>, collision_guard: f64) -> Result<Self> {
        if dimension != 2 && dimension != 3 {
            return Err(Error::InvalidConfig(format!(
                "dimension must be 2 or 3, got {dimension}"
            )));
        }
        if centres.is_empty() {
            return Err(Error::InvalidConfig("at least one centre required".into()));
        }
        if centres.len() != charges.len() {
            return Err(Error::InvalidConfig(format!(
                "{} centres but {} charges",
                centres.len(),
                charges.len()
            )));
        }
        if !(collision_guard > 0.0) {
            return Err(Error::InvalidConfig("collision guard must be positive".into()));
        }
        for (k, (s, z)) in centres.iter().zip(&charges).enumerate() {
            if !s.iter().all(|c| c.is_finite()) || !z.is_finite() {
                return Err(Error::InvalidConfig(format!("centre {} is not finite", k + 1)));
            }
            if *z == 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "zero charge: Z_{} must be nonzero",
                    k + 1
                )));
            }
            if dimension == 2 && s.z != 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "centre {} has a third component in a planar configuration",
                    k + 1
                )));
            }
        }
        for k in 0..centres.len() {
            for l in k + 1..centres.len() {
                if (centres[k] - centres[l]).norm() <= collision_guard {
                    return Err(Error::InvalidConfig(format!(
                        "coincident centres {} and {}",
                        k + 1,
                        l + 1
                    )));
                }
            }
        }
        Ok(Self {
            dimension,
            centres,
            charges,
            collision_guard,
        })
    }

    /// Builds a configuration from coordinate slices of length `dimension`.
    pub fn from_coords(dimension: usize, centres: &[Vec<f64>], charges: &[f64]) -> Result<Self> {
        let pts = centres
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if c.len() != dimension {
                    return Err(Error::InvalidConfig(format!(
                        "centre {} has {} coordinates, expected {dimension}",
                        k + 1,
                        c.len()
                    )));
                }
                Ok(Vec3::new(c[0], c[1], if dimension == 3 { c[2] } else { 0.0 }))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dimension, pts, charges.to_vec())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.centres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centres.is_empty()
    }

    pub fn centres(&self) -> &[Vec3] {
        &self.centres
    }

    pub fn charges(&self) -> &[f64] {
        &self.charges
    }

    pub fn centre(&self, k: usize) -> Vec3 {
        self.centres[k]
    }

    pub fn charge(&self, k: usize) -> f64 {
        self.charges[k]
    }

    pub fn collision_guard(&self) -> f64 {
        self.collision_guard
    }

    pub fn set_collision_guard(&mut self, guard: f64) {
        self.collision_guard = guard;
    }

    /// Total charge seen from far away.
    pub fn z_inf(&self) -> f64 {
        self.charges.iter().sum()
    }

    pub fn all_attracting(&self) -> bool {
        self.charges.iter().all(|&z| z > 0.0)
    }

    pub fn max_centre_norm(&self) -> f64 {
        self.centres.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    /// Smallest distance between two distinct centres (infinite for n = 1).
    pub fn min_pair_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..self.centres.len() {
            for l in k + 1..self.centres.len() {
                best = best.min((self.centres[k] - self.centres[l]).norm());
            }
        }
        best
    }

    /// True if all centres lie on one line (always true for n ≤ 2).
    pub fn is_collinear(&self) -> bool {
        self.collinear_axis().is_some()
    }

    /// Unit direction of the common line of the centres, if they are collinear.
    pub fn collinear_axis(&self) -> Option<Vec3> {
        if self.centres.len() < 2 {
            return Some(Vec3::z());
        }
        let base = self.centres[0];
        let axis = (self.centres[1] - base).normalize();
        let scale = self.centres.iter().map(|s| (s - base).norm()).fold(0.0, f64::max);
        self.centres
            .iter()
            .all(|s| (s - base).cross(&axis).norm() <= 1e-12 * scale)
            .then_some(axis)
    }

    /// Charge-weighted centre, when the total charge is well separated from zero.
    pub fn charge_centre(&self) -> Option<Vec3> {
        let z = self.z_inf();
        let scale: f64 = self.charges.iter().map(|c| c.abs()).sum();
        if z.abs() <= 1e-12 * scale {
            return None;
        }
        let c = self
            .centres
            .iter()
            .zip(&self.charges)
            .fold(Vec3::zeros(), |acc, (s, q)| acc + s * *q)
            / z;
        Some(c)
    }

    fn check_guard(&self, q: &Vec3) -> Result<()> {
        for (k, s) in self.centres.iter().enumerate() {
            let d = (q - s).norm();
            if d < self.collision_guard {
                return Err(Error::CollisionPoint {
                    centre: k,
                    distance: d,
                    guard: self.collision_guard,
                });
            }
        }
        Ok(())
    }
}

/// Position, momentum and time stamp of one phase-space point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub q: Vec3,
    pub p: Vec3,
    pub t: f64,
}

impl PhaseState {
    pub fn new(q: Vec3, p: Vec3) -> Self {
        Self { q, p, t: 0.0 }
    }

    pub fn at(q: Vec3, p: Vec3, t: f64) -> Self {
        Self { q, p, t }
    }

    pub fn planar(qx: f64, qy: f64, px: f64, py: f64) -> Self {
        Self::new(Vec3::new(qx, qy, 0.0), Vec3::new(px, py, 0.0))
    }

    /// Time-reversed state: same position, opposite momentum.
    pub fn reversed(&self) -> Self {
        Self::at(self.q, -self.p, self.t)
    }

    /// ⟨q, p⟩, the generator of dilations.
    pub fn dilation(&self) -> f64 {
        self.q.dot(&self.p)
    }

    /// Canonical coordinates (q_1..q_d, p_1..p_d).
    pub fn coords(&self, dimension: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * dimension);
        v.extend(self.q.iter().take(dimension));
        v.extend(self.p.iter().take(dimension));
        v
    }

    pub fn from_coords(dimension: usize, c: &[f64], t: f64) -> Self {
        let mut q = Vec3::zeros();
        let mut p = Vec3::zeros();
        for i in 0..dimension {
            q[i] = c[i];
            p[i] = c[dimension + i];
        }
        Self::at(q, p, t)
    }
}

/// V(q) = −Σ Z_k / ‖q − s_k‖.
pub fn potential(cfg: &CentreConfig, q: &Vec3) -> Result<f64> {
    cfg.check_guard(q)?;
    Ok(cfg
        .centres
        .iter()
        .zip(&cfg.charges)
        .map(|(s, z)| -z / (q - s).norm())
        .sum())
}

/// ∇V(q) = Σ Z_k (q − s_k) / ‖q − s_k‖³.
pub fn grad_potential(cfg: &CentreConfig, q: &Vec3) -> Result<Vec3> {
    cfg.check_guard(q)?;
    Ok(cfg.centres.iter().zip(&cfg.charges).fold(Vec3::zeros(), |acc, (s, z)| {
        let u = q - s;
        let r = u.norm();
        acc + u * (z / (r * r * r))
    }))
}

/// H = ½‖p‖² + V(q).
pub fn energy(cfg: &CentreConfig, x: &PhaseState) -> Result<f64> {
    Ok(0.5 * x.p.norm_squared() + potential(cfg, &x.q)?)
}

/// Estimated rounding error of an energy evaluation at `x`.
///
/// Position round-off of relative size ε perturbs Z/r by Z ε ‖q‖ / r², which
/// dominates close to a centre.
pub fn energy_roundoff(cfg: &CentreConfig, x: &PhaseState) -> f64 {
    let eps = 4.0 * f64::EPSILON;
    let mut acc = x.p.norm_squared();
    for (s, z) in cfg.centres.iter().zip(&cfg.charges) {
        let r = (x.q - s).norm().max(1e-300);
        acc += z.abs() / r * (1.0 + (x.q.norm() + s.norm()) / r);
    }
    eps * acc
}

/// Lower bound for 3E/2 − 2V − ⟨q, ∇V⟩ on the sphere ‖q‖ = r, valid for r ≥ 2·max‖s_k‖.
///
/// Attracting centres contribute nonnegative terms there; repelling ones are
/// bounded through ‖q − s_k‖ ≥ r − ‖s_k‖.
fn virial_margin_bound(cfg: &CentreConfig, e: f64, r: f64) -> f64 {
    let mut deficit = 0.0;
    for (s, z) in cfg.centres.iter().zip(&cfg.charges) {
        if *z < 0.0 {
            let sn = s.norm();
            let rk = r - sn;
            deficit += z.abs() / rk * (1.0 + sn / rk);
        }
    }
    1.5 * e - deficit
}

/// Radius beyond which d/dt ⟨q,p⟩ > E/2 on the energy shell H = E.
///
/// Computed from an analytic lower bound of d/dt ⟨q,p⟩ − E/2, requiring the
/// bound to retain half of its far-field value 3E/2 (a factor two safety
/// margin). The result is nonincreasing in E and never below 2·max‖s_k‖ + 1.
pub fn virial_radius(cfg: &CentreConfig, e: f64) -> Result<f64> {
    if !(e > 0.0) {
        return Err(Error::NonpositiveEnergy(e));
    }
    let smax = cfg.max_centre_norm();
    let floor = 2.0 * smax + 1.0;
    let target = 0.75 * e;
    let base = (2.0 * smax).max(f64::MIN_POSITIVE);
    if virial_margin_bound(cfg, e, floor) >= target {
        return Ok(floor);
    }
    // the bound increases monotonically in r; bracket and bisect
    let mut lo = base.max(smax * (1.0 + 1e-12));
    let mut hi = floor;
    while virial_margin_bound(cfg, e, hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if virial_margin_bound(cfg, e, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(hi.max(floor))
}

/// True iff the state lies outside the virial sphere and moves outward, in
/// which case it can never return inside.
pub fn escape_check(cfg: &CentreConfig, x: &PhaseState, e: f64) -> bool {
    match virial_radius(cfg, e) {
        Ok(r) => x.q.norm() >= r && x.dilation() >= 0.0,
        Err(_) => false,
    }
}

/// The escape lower bound ‖q(t)‖ ≥ q0·√(1 + (λt)²), λ = √(E/2)/q0.
pub fn escape_lower_bound(q0: f64, e: f64, t: f64) -> f64 {
    let lambda = (0.5 * e).sqrt() / q0;
    q0 * (1.0 + (lambda * t).powi(2)).sqrt()
}
