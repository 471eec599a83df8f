//! Two-body mechanics about a single centre.
//!
//! Propagation uses the regularising time s with dt = r ds and the
//! Stumpff-type functions G_k(β, s) = s^k c_k(β s²), which stay valid across
//! the elliptic, parabolic and hyperbolic regimes, for repelling charges and
//! for the free particle (Z = 0). The same formulas continue a radial
//! (L = 0) orbit through the collision as the regularised reflection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PhaseState, Vec3};

/// Stumpff functions (c0, c1, c2, c3) at z.
pub fn stumpff(z: f64) -> [f64; 4] {
    if z.abs() < 2.5 {
        // c_k(z) = Σ_j (−z)^j / (2j + k)!
        let mut c = [0.0; 4];
        for (k, ck) in c.iter_mut().enumerate() {
            let mut term = 1.0 / factorial(k);
            let mut sum = term;
            let mut j = 1;
            loop {
                let a = (2 * j + k) as f64;
                term *= -z / ((a - 1.0) * a);
                sum += term;
                if term.abs() <= 1e-17 * sum.abs() || j > 40 {
                    break;
                }
                j += 1;
            }
            *ck = sum;
        }
        c
    } else if z > 0.0 {
        let w = z.sqrt();
        let c0 = w.cos();
        let c1 = w.sin() / w;
        let c2 = 2.0 * (0.5 * w).sin().powi(2) / z;
        let c3 = (1.0 - c1) / z;
        [c0, c1, c2, c3]
    } else {
        let w = (-z).sqrt();
        let c0 = w.cosh();
        let c1 = w.sinh() / w;
        let c2 = 2.0 * (0.5 * w).sinh().powi(2) / (-z);
        let c3 = (c1 - 1.0) / (-z);
        [c0, c1, c2, c3]
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// G_k(β, s) for k = 0..3.
fn g_functions(beta: f64, s: f64) -> [f64; 4] {
    let c = stumpff(beta * s * s);
    [c[0], s * c[1], s * s * c[2], s * s * s * c[3]]
}

/// Osculating two-body data of a state relative to one centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerElements {
    pub centre: Vec3,
    pub charge: f64,
    /// H_l = ½‖p‖² − Z/‖q − s‖.
    pub energy: f64,
    /// L_l = (q − s) × p.
    pub angular_momentum: Vec3,
    /// F_l = p × L_l − Z (q − s)/‖q − s‖.
    pub runge_lenz: Vec3,
    /// Signed time since pericentre (negative before the pericentre passage).
    pub pericentre_time: f64,
    pub r_min: f64,
}

impl KeplerElements {
    /// Elements from given conserved quantities; the pericentre time is left at zero.
    pub fn from_integrals(centre: Vec3, charge: f64, energy: f64, l: Vec3, f: Vec3) -> Self {
        let l2 = l.norm_squared();
        let fnorm = runge_lenz_norm(charge, energy, l2);
        Self {
            centre,
            charge,
            energy,
            angular_momentum: l,
            runge_lenz: f,
            pericentre_time: 0.0,
            r_min: pericentre_distance(charge, energy, l2, fnorm),
        }
    }

    /// ‖F‖ from the identity ‖F‖² = Z² + 2 H ‖L‖².
    pub fn runge_lenz_norm(&self) -> f64 {
        runge_lenz_norm(self.charge, self.energy, self.angular_momentum.norm_squared())
    }

    /// Unit pericentral direction F/‖F‖.
    pub fn pericentre_direction(&self) -> Vec3 {
        self.runge_lenz.normalize()
    }

    pub fn eccentricity(&self) -> f64 {
        self.runge_lenz.norm() / self.charge.abs()
    }

    /// Time spent on the radial branch between the pericentre and radius r.
    pub fn radial_time(&self, r: f64) -> Result<f64> {
        if r < self.r_min {
            return Err(Error::BelowPericentre {
                radius: r,
                r_min: self.r_min,
            });
        }
        Ok(radial_time(
            self.charge,
            self.energy,
            self.r_min,
            self.runge_lenz_norm(),
            r,
        ))
    }
}

fn runge_lenz_norm(z: f64, h: f64, l2: f64) -> f64 {
    (z * z + 2.0 * h * l2).max(0.0).sqrt()
}

/// Pericentre distance, written to avoid cancellation for small |H|.
fn pericentre_distance(z: f64, h: f64, l2: f64, fnorm: f64) -> f64 {
    if z > 0.0 {
        l2 / (z + fnorm)
    } else if h > 0.0 {
        (fnorm - z) / (2.0 * h)
    } else {
        0.0
    }
}

/// ∫_{r_min}^{r} ρ dρ / √(2Hρ² + 2Zρ − L²).
///
/// With w = r − r_min the radicand factors as w(2‖F‖ + 2Hw). For |Hw/‖F‖| < ½
/// the binomial series in Hw/‖F‖ is summed; otherwise the elementary
/// antiderivatives (logarithmic for H > 0, arccos for H < 0) are used.
fn radial_time(z: f64, h: f64, r_min: f64, fnorm: f64, r: f64) -> f64 {
    let w = (r - r_min).max(0.0);
    if w == 0.0 {
        return 0.0;
    }
    let x = h * w / fnorm;
    if x.abs() < 0.5 {
        let mut a = 1.0;
        let mut xn = 1.0;
        let mut sum = 0.0;
        for n in 0..200 {
            let nf = n as f64;
            let term = a * xn * (r_min / (nf + 0.5) + w / (nf + 1.5));
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            a *= -(2.0 * nf + 1.0) / (2.0 * nf + 2.0);
            xn *= x;
        }
        return w.sqrt() / (2.0 * fnorm).sqrt() * sum;
    }
    let sqrt_d = (2.0 * fnorm * w * (1.0 + x)).max(0.0).sqrt();
    if h > 0.0 {
        let two_h = 2.0 * h;
        sqrt_d / two_h - z / two_h.powf(1.5) * (((two_h * sqrt_d * sqrt_d).sqrt() + two_h * w) / fnorm).ln_1p()
    } else {
        let two_h = 2.0 * h;
        let arc = 2.0 * (-x).min(1.0).sqrt().asin();
        sqrt_d / two_h - z / (two_h * (-two_h).sqrt()) * arc
    }
}

/// Default lower bound on ‖F‖ used by [`osculating_elements`].
pub const DEFAULT_F_MIN: f64 = 1e-300;

/// Osculating elements of `x` with respect to a centre of charge `z` at `s`.
pub fn osculating_elements(z: f64, s: &Vec3, x: &PhaseState) -> Result<KeplerElements> {
    osculating_elements_with(z, s, x, DEFAULT_F_MIN)
}

/// As [`osculating_elements`], rejecting states with ‖F‖ < `f_min`.
pub fn osculating_elements_with(z: f64, s: &Vec3, x: &PhaseState, f_min: f64) -> Result<KeplerElements> {
    let u = x.q - s;
    let r = u.norm();
    if r == 0.0 {
        return Err(Error::CollisionPoint {
            centre: 0,
            distance: 0.0,
            guard: 0.0,
        });
    }
    let p = x.p;
    let energy = 0.5 * p.norm_squared() - z / r;
    let l = u.cross(&p);
    let f = p.cross(&l) - u * (z / r);
    let fn_vec = f.norm();
    if !(fn_vec >= f_min) {
        return Err(Error::DegenerateElements {
            norm: fn_vec,
            min: f_min,
        });
    }
    let l2 = l.norm_squared();
    let fnorm = runge_lenz_norm(z, energy, l2);
    let r_min = pericentre_distance(z, energy, l2, fnorm);
    let eta = u.dot(&p);
    let t_abs = radial_time(z, energy, r_min, fnorm, r);
    let pericentre_time = if eta > 0.0 {
        t_abs
    } else if eta < 0.0 {
        -t_abs
    } else {
        0.0
    };
    Ok(KeplerElements {
        centre: *s,
        charge: z,
        energy,
        angular_momentum: l,
        runge_lenz: f,
        pericentre_time,
        r_min,
    })
}

/// Relative state after time `dt` of the two-body flow with charge `mu`.
///
/// Returns the relative position and momentum.
pub fn drift(mu: f64, u0: &Vec3, p0: &Vec3, dt: f64) -> Result<(Vec3, Vec3)> {
    if dt == 0.0 {
        return Ok((*u0, *p0));
    }
    let r0 = u0.norm();
    let eta0 = u0.dot(p0);
    let beta = 2.0 * mu / r0 - p0.norm_squared();
    let s = solve_universal(mu, beta, r0, eta0, dt)?;
    let g = g_functions(beta, s);
    let r = r0 * g[0] + eta0 * g[1] + mu * g[2];
    let f = 1.0 - mu * g[2] / r0;
    let gg = r0 * g[1] + eta0 * g[2];
    let fdot = -mu * g[1] / (r * r0);
    let gdot = 1.0 - mu * g[2] / r;
    Ok((u0 * f + p0 * gg, u0 * fdot + p0 * gdot))
}

/// Solves r0 G1 + η0 G2 + μ G3 = dt for s by safeguarded Newton iteration.
fn solve_universal(mu: f64, beta: f64, r0: f64, eta0: f64, dt: f64) -> Result<f64> {
    let sign = dt.signum();
    let target = dt.abs();
    // work with s ≥ 0 along the time direction: t(−s) for dt < 0
    let eval = |s: f64| -> (f64, f64) {
        let ss = sign * s;
        let g = g_functions(beta, ss);
        let t = r0 * g[1] + eta0 * g[2] + mu * g[3];
        let r = r0 * g[0] + eta0 * g[1] + mu * g[2];
        (sign * t - target, r)
    };
    let s1 = target / r0;
    let corr = sign * eta0 * target * target / (2.0 * r0 * r0 * r0);
    let mut s = if corr.abs() < 0.5 * s1 { s1 - corr } else { s1 };
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut last_res = f64::INFINITY;
    let tol = 1e-13;
    for it in 0..200 {
        let (res, r) = eval(s);
        if !res.is_finite() {
            hi = s;
            s = 0.5 * (lo + s);
            continue;
        }
        if res > 0.0 {
            hi = hi.min(s);
        } else {
            lo = lo.max(s);
        }
        if res == 0.0 {
            return Ok(sign * s);
        }
        // Newton can cycle across an inflection of t(s); bisect when it stops making progress
        // and while the residual dwarfs the target (e.g. deep in the exponential regime)
        let stalled = res.abs() > 0.5 * last_res || res > 4.0 * target;
        last_res = res.abs();
        let mut next = s - res / r;
        if stalled || !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * s.max(lo)
            };
        }
        let step = (next - s).abs();
        s = next;
        if step <= tol * s.abs() || (hi.is_finite() && hi - lo <= 4.0 * f64::EPSILON * hi) {
            // one more Newton correction at the converged point
            let (res, r) = eval(s);
            if r > 0.0 && res.is_finite() {
                let polished = s - res / r;
                if polished >= lo && polished <= hi {
                    s = polished;
                }
            }
            return Ok(sign * s);
        }
        if it == 199 {
            break;
        }
    }
    Err(Error::KeplerSolve(200))
}

/// Exact two-body flow of a state about centre `s` with charge `z` for time `dt`.
pub fn kepler_propagate(z: f64, s: &Vec3, x: &PhaseState, dt: f64) -> Result<PhaseState> {
    let u0 = x.q - s;
    if u0.norm() == 0.0 {
        return Err(Error::CollisionPoint {
            centre: 0,
            distance: 0.0,
            guard: 0.0,
        });
    }
    let (u, p) = drift(z, &u0, &x.p, dt)?;
    Ok(PhaseState::at(s + u, p, x.t + dt))
}

/// Incoming and outgoing asymptotic momenta of a hyperbolic Kepler orbit.
///
/// Returns (p_out, p_in); both have norm √(2H) and are orthogonal to L.
pub fn asymptote_data(el: &KeplerElements) -> Result<(Vec3, Vec3)> {
    if !(el.energy > 0.0) {
        return Err(Error::NotHyperbolic(el.energy));
    }
    let v = (2.0 * el.energy).sqrt();
    let z = el.charge;
    let f = el.runge_lenz;
    let lxf = el.angular_momentum.cross(&f);
    let out = f * (-z) + lxf * v;
    let inc = f * z + lxf * v;
    let on = out.norm();
    let inn = inc.norm();
    if !(on > 0.0 && inn > 0.0) {
        return Err(Error::DegenerateElements {
            norm: f.norm(),
            min: 0.0,
        });
    }
    Ok((out * (v / on), inc * (v / inn)))
}

/// Deflection angle between incoming and outgoing asymptotes, 2·arcsin(|Z|/‖F‖).
pub fn deflection_angle(el: &KeplerElements) -> f64 {
    2.0 * (el.charge.abs() / el.runge_lenz_norm()).min(1.0).asin()
}

/// Total time the Kepler orbit spends within distance R of its centre.
pub fn time_in_ball(el: &KeplerElements, radius: f64) -> Result<f64> {
    if !(el.energy > 0.0) {
        return Err(Error::NotHyperbolic(el.energy));
    }
    Ok(2.0 * el.radial_time(radius)?)
}
