//! Splitting integrator for the n-centre flow.
//!
//! Each step splits H = H_l + W_l, where H_l is the Kepler Hamiltonian of the
//! nearest centre and W_l the smooth remainder, and composes kicks by ∇W_l
//! with the exact Kepler drift of H_l. Far from all centres the split is
//! taken about the charge-weighted centre with the total charge instead, so
//! the remainder decays like a quadrupole and the step can grow with ‖q‖.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kepler::drift;
use crate::model::{energy, energy_roundoff, virial_radius, CentreConfig, PhaseState, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSettings {
    /// Base step h.
    pub step: f64,
    /// Admissible relative energy drift along a trajectory.
    pub energy_tol: f64,
    /// Integration aborts when a step ends closer than this to a centre.
    pub collision_guard: f64,
    /// 2 (Strang) or 4 (Yoshida composition).
    pub order: u8,
    pub max_steps: usize,
    /// Near a centre the step stops shrinking below this fraction of d_ref,
    /// so close passages are left to the regularised drift.
    pub shrink_floor: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            step: 1e-3,
            energy_tol: 1e-8,
            collision_guard: 1e-10,
            order: 4,
            max_steps: 10_000_000,
            shrink_floor: 1e-3,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidConfig("integrator step must be positive".into()));
        }
        if !(self.energy_tol > 0.0) {
            return Err(Error::InvalidConfig("energy_tol must be positive".into()));
        }
        if !(self.collision_guard > 0.0) {
            return Err(Error::InvalidConfig("collision guard must be positive".into()));
        }
        if self.order != 2 && self.order != 4 {
            return Err(Error::InvalidConfig(format!(
                "splitting order must be 2 or 4, got {}",
                self.order
            )));
        }
        if !(self.shrink_floor > 0.0 && self.shrink_floor <= 1.0) {
            return Err(Error::InvalidConfig("shrink_floor must lie in (0, 1]".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Index of the nearest centre, ties resolved towards the smallest index.
pub fn nearest_centre(cfg: &CentreConfig, q: &Vec3) -> usize {
    nearest_with_distance(cfg, q).0
}

fn nearest_with_distance(cfg: &CentreConfig, q: &Vec3) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, s) in cfg.centres().iter().enumerate() {
        let d = (q - s).norm();
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

// near a centre the step follows the local Kepler time scale d^(3/2)
const STEP_POWER: f64 = 1.5;

/// Which Kepler problem a step is split about.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Reference {
    Centre(usize),
    Far,
}

/// Step machinery shared by the integrator and the event refinement.
#[derive(Debug, Clone)]
struct Stepper<'a> {
    cfg: &'a CentreConfig,
    step: f64,
    order: u8,
    d_ref: f64,
    floor: f64,
    far_centre: Vec3,
    far_charge: f64,
    r_far: f64,
}

impl<'a> Stepper<'a> {
    fn new(cfg: &'a CentreConfig, settings: &IntegratorSettings) -> Self {
        let smax = cfg.max_centre_norm();
        let far_centre = match cfg.charge_centre() {
            Some(c) if c.norm() <= smax => c,
            _ => Vec3::zeros(),
        };
        let spread = cfg
            .centres()
            .iter()
            .map(|s| (s - far_centre).norm())
            .fold(0.0, f64::max);
        Self {
            cfg,
            step: settings.step,
            order: settings.order,
            d_ref: cfg.min_pair_distance() / 10.0,
            floor: settings.shrink_floor,
            far_centre,
            far_charge: cfg.z_inf(),
            r_far: 2.0 * spread + 1.0,
        }
    }

    /// Reference problem and step length at state x.
    fn choose(&self, x: &PhaseState) -> (Reference, f64) {
        let rc = (x.q - self.far_centre).norm();
        if self.cfg.len() > 1 && rc > self.r_far {
            return (Reference::Far, self.step * rc / self.r_far);
        }
        let (l, d) = nearest_with_distance(self.cfg, &x.q);
        if self.cfg.len() == 1 {
            let h = if rc > self.r_far {
                self.step * rc / self.r_far
            } else {
                self.step
            };
            return (Reference::Centre(l), h);
        }
        (
            Reference::Centre(l),
            self.step * (d / self.d_ref).clamp(self.floor, 1.0).powf(STEP_POWER),
        )
    }

    fn reference_body(&self, r: Reference) -> (Vec3, f64) {
        match r {
            Reference::Centre(l) => (self.cfg.centre(l), self.cfg.charge(l)),
            Reference::Far => (self.far_centre, self.far_charge),
        }
    }

    /// ∇W for the chosen reference: the field of everything except the reference body.
    fn kick_gradient(&self, q: &Vec3, r: Reference) -> Vec3 {
        let mut g = Vec3::zeros();
        for (k, (s, z)) in self.cfg.centres().iter().zip(self.cfg.charges()).enumerate() {
            if r == Reference::Centre(k) {
                continue;
            }
            let u = q - s;
            let d = u.norm();
            g += u * (z / (d * d * d));
        }
        if r == Reference::Far && self.far_charge != 0.0 {
            let u = q - self.far_centre;
            let d = u.norm();
            g -= u * (self.far_charge / (d * d * d));
        }
        g
    }

    fn strang(&self, x: &PhaseState, h: f64, r: Reference) -> Result<PhaseState> {
        let (s, z) = self.reference_body(r);
        let mut p = x.p - self.kick_gradient(&x.q, r) * (0.5 * h);
        let (u, pn) = drift(z, &(x.q - s), &p, h)?;
        let q = s + u;
        p = pn - self.kick_gradient(&q, r) * (0.5 * h);
        Ok(PhaseState::at(q, p, x.t + h))
    }

    fn advance(&self, x: &PhaseState, h: f64, r: Reference) -> Result<PhaseState> {
        if self.order == 2 {
            return self.strang(x, h, r);
        }
        let cbrt2 = 2f64.cbrt();
        let w1 = 1.0 / (2.0 - cbrt2);
        let w0 = -cbrt2 * w1;
        let y = self.strang(x, w1 * h, r)?;
        let y = self.strang(&y, w0 * h, r)?;
        let mut y = self.strang(&y, w1 * h, r)?;
        y.t = x.t + h;
        Ok(y)
    }
}

/// One Strang step split about centre `l`: half-kick by ∇W_l, exact Kepler
/// drift of the l-th centre, half-kick.
pub fn split_step(cfg: &CentreConfig, x: &PhaseState, h: f64, l: usize) -> Result<PhaseState> {
    let settings = IntegratorSettings {
        order: 2,
        ..IntegratorSettings::default()
    };
    Stepper::new(cfg, &settings).strang(x, h, Reference::Centre(l))
}

/// Early termination rule for [`integrate_with`].
pub enum Stop<'a> {
    /// Run to the final time.
    Never,
    /// Stop once the escape criterion holds in the direction of integration.
    Escape,
    /// Stop once escaped and beyond the given radius.
    EscapeBeyond(f64),
    /// Stop when the predicate returns true for an accepted state.
    Custom(&'a mut dyn FnMut(&PhaseState) -> bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedTime,
    Escaped,
    Stopped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EventKind {
    VirialCrossing { outward: bool },
    Pericentre { centre: usize },
    NearestSwitch { from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub min_centre_distance: f64,
    /// max |H − H(x0)| / max(1, |H(x0)|) over the samples.
    pub max_energy_drift: f64,
}

/// Sampled orbit with its event log and integrator statistics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    cfg: CentreConfig,
    settings: IntegratorSettings,
    samples: Vec<PhaseState>,
    /// Samples with index < `reverse_upto` were produced by stepping backward in time.
    reverse_upto: usize,
    events: Vec<Event>,
    stats: IntegratorStats,
    termination: Termination,
    energy: f64,
}

impl Trajectory {
    pub fn samples(&self) -> &[PhaseState] {
        &self.samples
    }

    pub fn first(&self) -> &PhaseState {
        &self.samples[0]
    }

    pub fn last(&self) -> &PhaseState {
        self.samples.last().expect("trajectory has samples")
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn stats(&self) -> &IntegratorStats {
        &self.stats
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    /// Energy of the initial state.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn config(&self) -> &CentreConfig {
        &self.cfg
    }

    pub fn settings(&self) -> &IntegratorSettings {
        &self.settings
    }

    /// Joins a backward and a forward integration from the same state into one
    /// time-ordered trajectory.
    pub fn join(backward: Trajectory, forward: Trajectory) -> Trajectory {
        let mut samples: Vec<PhaseState> = backward.samples.iter().rev().copied().collect();
        let reverse_upto = samples.len() - 1;
        samples.extend(forward.samples.iter().skip(1).copied());
        let mut events: Vec<Event> = backward.events.iter().rev().copied().collect();
        for e in events.iter_mut() {
            match &mut e.kind {
                EventKind::VirialCrossing { outward } => *outward = !*outward,
                EventKind::NearestSwitch { from, to } => std::mem::swap(from, to),
                EventKind::Pericentre { .. } => {}
            }
        }
        events.extend(forward.events.iter().copied());
        let stats = IntegratorStats {
            steps: backward.stats.steps + forward.stats.steps,
            rejected: backward.stats.rejected + forward.stats.rejected,
            min_centre_distance: backward
                .stats
                .min_centre_distance
                .min(forward.stats.min_centre_distance),
            max_energy_drift: backward.stats.max_energy_drift.max(forward.stats.max_energy_drift),
        };
        Trajectory {
            cfg: forward.cfg,
            settings: forward.settings,
            samples,
            reverse_upto,
            events,
            stats,
            termination: forward.termination,
            energy: forward.energy,
        }
    }

    /// State at time t, by stepping from the nearest preceding sample.
    pub fn state_at(&self, t: f64) -> Result<PhaseState> {
        let n = self.samples.len();
        let increasing = n < 2 || self.samples[n - 1].t >= self.samples[0].t;
        let idx = if increasing {
            self.samples.partition_point(|s| s.t <= t)
        } else {
            self.samples.partition_point(|s| s.t >= t)
        };
        if idx == 0 || (idx == n && self.samples[n - 1].t != t) {
            return Err(Error::InvalidArgument(format!("time {t} outside the trajectory")));
        }
        let i = idx - 1;
        if i + 1 < n {
            self.interval_state(i, t - self.samples[i].t)
        } else {
            Ok(self.samples[i])
        }
    }

    /// State at offset `dt` from sample i, stepping from whichever end of the
    /// interval [i, i+1] the integrator stepped from.
    fn interval_state(&self, i: usize, dt: f64) -> Result<PhaseState> {
        let stepper = Stepper::new(&self.cfg, &self.settings);
        if i < self.reverse_upto {
            let b = &self.samples[i + 1];
            let (r, _) = stepper.choose(b);
            let back = self.samples[i].t + dt - b.t;
            stepper.advance(b, back, r)
        } else {
            let a = &self.samples[i];
            let (r, _) = stepper.choose(a);
            stepper.advance(a, dt, r)
        }
    }

    /// Writes t, q, p, H, nearest centre (1-based) and nearest distance per sample.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let d = self.cfg.dimension();
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|i| format!("q{i}")));
        header.extend((1..=d).map(|i| format!("p{i}")));
        header.extend(["H", "nearest", "min_distance"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for x in &self.samples {
            let (k, dist) = nearest_with_distance(&self.cfg, &x.q);
            let h = energy(&self.cfg, x).unwrap_or(f64::NAN);
            let mut row = vec![format!("{:.16e}", x.t)];
            row.extend(x.coords(d).iter().map(|c| format!("{c:.16e}")));
            row.push(format!("{h:.16e}"));
            row.push(format!("{}", k + 1));
            row.push(format!("{dist:.16e}"));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Integrates from x0 to time x0.t + t_final (t_final may be negative),
/// stopping early once the orbit escapes in the direction of integration.
pub fn integrate(
    cfg: &CentreConfig,
    x0: &PhaseState,
    t_final: f64,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    integrate_with(cfg, x0, t_final, settings, Stop::Escape)
}

/// Integration driver with an explicit stopping rule.
pub fn integrate_with(
    cfg: &CentreConfig,
    x0: &PhaseState,
    t_final: f64,
    settings: &IntegratorSettings,
    mut stop: Stop<'_>,
) -> Result<Trajectory> {
    settings.validate()?;
    let stepper = Stepper::new(cfg, settings);
    let e0 = energy(cfg, x0)?;
    let scale = e0.abs().max(1.0);
    let step_tol = 0.1 * settings.energy_tol * scale;
    let r_vir = if e0 > 0.0 { virial_radius(cfg, e0).ok() } else { None };
    let dir = if t_final < 0.0 { -1.0 } else { 1.0 };
    let t_end = x0.t + t_final;

    let (mut nearest, d0) = nearest_with_distance(cfg, &x0.q);
    let mut stats = IntegratorStats {
        min_centre_distance: d0,
        ..IntegratorStats::default()
    };
    let mut samples = vec![*x0];
    let mut events = Vec::new();
    let mut etas: Vec<f64> = cfg.centres().iter().map(|s| (x0.q - s).dot(&x0.p) * dir).collect();
    let mut x = *x0;
    // persistent step reduction after energy rejections, relaxed after a run of accepted steps
    let mut shrink = 1.0;
    let mut e_prev = e0;
    let mut streak = 0;
    let mut termination = Termination::ReachedTime;

    while (t_end - x.t) * dir > 0.0 {
        if stats.steps >= settings.max_steps {
            return Err(Error::StepLimit(settings.max_steps));
        }
        let (r, h0) = stepper.choose(&x);
        let remaining = (t_end - x.t).abs();
        let mut h = h0 * shrink;
        let mut last = false;
        if h >= remaining * (1.0 - 1e-12) {
            h = remaining;
            last = true;
        }
        let mut attempts = 0;
        let (y, ey, dist, k) = loop {
            let mut y = stepper.advance(&x, dir * h, r)?;
            if last {
                y.t = t_end;
            }
            let (k, dist) = nearest_with_distance(cfg, &y.q);
            if dist < settings.collision_guard || !y.q.iter().chain(y.p.iter()).all(|c| c.is_finite()) {
                return Err(Error::CollisionAbort {
                    time: y.t,
                    centre: k,
                    distance: dist,
                });
            }
            let ey = energy(cfg, &y).map_err(|_| Error::CollisionAbort {
                time: y.t,
                centre: k,
                distance: dist,
            })?;
            let allowed = step_tol + energy_roundoff(cfg, &x) + energy_roundoff(cfg, &y);
            if (ey - e_prev).abs() <= allowed || attempts >= 30 {
                break (y, ey, dist, k);
            }
            attempts += 1;
            stats.rejected += 1;
            h *= 0.5;
            shrink *= 0.5;
            streak = 0;
            last = false;
        };
        streak += 1;
        if streak >= 16 && shrink < 1.0 {
            shrink = (2.0 * shrink).min(1.0);
            streak = 0;
        }
        stats.steps += 1;
        stats.min_centre_distance = stats.min_centre_distance.min(dist);
        stats.max_energy_drift = stats.max_energy_drift.max((ey - e0).abs() / scale);

        if k != nearest {
            events.push(Event {
                time: y.t,
                kind: EventKind::NearestSwitch { from: nearest, to: k },
            });
            nearest = k;
        }
        for (j, s) in cfg.centres().iter().enumerate() {
            let eta = (y.q - s).dot(&y.p) * dir;
            if etas[j] < 0.0 && eta >= 0.0 {
                let w = etas[j] / (etas[j] - eta);
                events.push(Event {
                    time: x.t + w * (y.t - x.t),
                    kind: EventKind::Pericentre { centre: j },
                });
            }
            etas[j] = eta;
        }
        if let Some(rv) = r_vir {
            let (a, b) = (x.q.norm() - rv, y.q.norm() - rv);
            if (a < 0.0) != (b < 0.0) {
                events.push(Event {
                    time: y.t,
                    kind: EventKind::VirialCrossing { outward: b >= 0.0 },
                });
            }
        }
        x = y;
        e_prev = ey;
        samples.push(x);

        let escaped = |x: &PhaseState| r_vir.is_some_and(|rv| x.q.norm() >= rv && x.dilation() * dir >= 0.0);
        let done = match &mut stop {
            Stop::Never => false,
            Stop::Escape => escaped(&x),
            Stop::EscapeBeyond(radius) => escaped(&x) && x.q.norm() > *radius,
            Stop::Custom(f) => f(&x),
        };
        if done {
            termination = match stop {
                Stop::Custom(_) => Termination::Stopped,
                _ => Termination::Escaped,
            };
            break;
        }
    }

    Ok(Trajectory {
        cfg: cfg.clone(),
        settings: *settings,
        samples,
        reverse_upto: 0,
        events,
        stats,
        termination,
        energy: e0,
    })
}

/// Applies the step sequence of a one-sided trajectory (same step lengths and
/// split references) to another initial state.
///
/// The result is a smooth function of `x0`, unlike a fresh adaptive run, which
/// makes it suitable for finite-difference linearisations along `traj`.
pub fn replay(traj: &Trajectory, x0: &PhaseState) -> Result<PhaseState> {
    if traj.reverse_upto != 0 {
        return Err(Error::InvalidArgument("replay needs a one-sided trajectory".into()));
    }
    let stepper = Stepper::new(&traj.cfg, &traj.settings);
    let mut y = *x0;
    for w in traj.samples.windows(2) {
        let (r, _) = stepper.choose(&w[0]);
        let t = y.t + (w[1].t - w[0].t);
        y = stepper.advance(&y, w[1].t - w[0].t, r)?;
        y.t = t;
    }
    Ok(y)
}

/// A refined crossing of a level set along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub time: f64,
    pub state: PhaseState,
    /// True when the level function increases through zero.
    pub outward: bool,
}

/// All crossings of the sphere ‖q‖ = R, with times refined to 1e−10 or better.
pub fn find_radius_crossings(traj: &Trajectory, radius: f64) -> Result<Vec<Crossing>> {
    find_level_crossings(traj, |x| x.q.norm() - radius)
}

/// Zero crossings of a scalar function along a trajectory, refined by a
/// bracketing root solve on the integrator's own substeps.
pub fn find_level_crossings<F>(traj: &Trajectory, g: F) -> Result<Vec<Crossing>>
where
    F: Fn(&PhaseState) -> f64,
{
    let s = &traj.samples;
    let mut out = Vec::new();
    if s.len() < 2 {
        return Ok(out);
    }
    let mut ga = g(&s[0]);
    for i in 0..s.len() - 1 {
        let gb = g(&s[i + 1]);
        if (ga < 0.0) != (gb < 0.0) {
            let span = s[i + 1].t - s[i].t;
            let (dt, state) = refine_root(traj, i, span, ga, gb, &g)?;
            out.push(Crossing {
                time: s[i].t + dt,
                state,
                outward: gb >= 0.0,
            });
        }
        ga = gb;
    }
    Ok(out)
}

/// Illinois-type regula falsi on [0, span] for g(state at s_i + dt).
fn refine_root<F>(traj: &Trajectory, i: usize, span: f64, ga: f64, gb: f64, g: &F) -> Result<(f64, PhaseState)>
where
    F: Fn(&PhaseState) -> f64,
{
    let ends = (traj.samples[i], traj.samples[i + 1]);
    illinois(
        |dt| {
            let x = traj.interval_state(i, dt)?;
            Ok((g(&x), x))
        },
        (0.0, ga, ends.0),
        (span, gb, ends.1),
    )
}

/// Bracketing root solve for f(s) = (value, state) between two points with
/// opposite signs, refined to round-off in s.
fn illinois<F>(f: F, lo: (f64, f64, PhaseState), hi: (f64, f64, PhaseState)) -> Result<(f64, PhaseState)>
where
    F: Fn(f64) -> Result<(f64, PhaseState)>,
{
    let (mut a, mut fa, xa) = lo;
    let (mut b, mut fb, xb) = hi;
    // refine to round-off so the crossing time is a smooth function of the data
    let tol = 2.0 * f64::EPSILON * a.abs().max(b.abs());
    let mut best = if fa.abs() < fb.abs() { (a, xa) } else { (b, xb) };
    let mut side = 0;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let mut c = b - fb * (b - a) / (fb - fa);
        if !c.is_finite() || (c - a) * (c - b) >= 0.0 {
            c = 0.5 * (a + b);
        }
        let (fc, x) = f(c)?;
        best = (c, x);
        if fc == 0.0 {
            break;
        }
        if (fc < 0.0) == (fb < 0.0) {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    Ok(best)
}

/// Replays all but the last step of a one-sided trajectory from `x0` (as in
/// [`replay`]) and then advances to the zero of `g` near that last step, with
/// the same split reference. Smooth in `x0` while the zero stays simple.
pub fn replay_to_level<F>(traj: &Trajectory, x0: &PhaseState, g: F) -> Result<PhaseState>
where
    F: Fn(&PhaseState) -> f64,
{
    let s = &traj.samples;
    if traj.reverse_upto != 0 || s.len() < 2 {
        return Err(Error::InvalidArgument("replay needs a one-sided trajectory".into()));
    }
    let stepper = Stepper::new(&traj.cfg, &traj.settings);
    let n = s.len();
    let mut y = *x0;
    for w in s[..n - 1].windows(2) {
        let (r, _) = stepper.choose(&w[0]);
        let t = y.t + (w[1].t - w[0].t);
        y = stepper.advance(&y, w[1].t - w[0].t, r)?;
        y.t = t;
    }
    let (r, _) = stepper.choose(&s[n - 2]);
    let span = s[n - 1].t - s[n - 2].t;
    let at = |dt: f64| -> Result<(f64, PhaseState)> {
        let mut x = stepper.advance(&y, dt, r)?;
        x.t = y.t + dt;
        Ok((g(&x), x))
    };
    let g0 = g(&y);
    let mut far = span;
    let mut fb = at(far)?;
    if (g0 < 0.0) == (fb.0 < 0.0) {
        // the zero moved out of the interval; widen towards the side it lies on
        let ahead = (fb.0 > g0) == (g0 < 0.0);
        let dir = if ahead { 1.0 } else { -1.0 };
        far = if ahead { span } else { 0.0 };
        for k in 0.. {
            far += dir * span;
            fb = at(far)?;
            if (g0 < 0.0) != (fb.0 < 0.0) {
                break;
            }
            if k == 8 {
                return Err(Error::NoConvergence("level not bracketed in replay".into()));
            }
        }
    }
    let (lo, hi) = ((0.0, g0, y), (far, fb.0, fb.1));
    Ok(illinois(at, lo, hi)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kepler::kepler_propagate;
    use crate::model::potential;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two() -> CentreConfig {
        CentreConfig::new(
            2,
            vec![Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)],
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    fn three() -> CentreConfig {
        CentreConfig::new(
            2,
            vec![
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(-0.5, 0.8, 0.0),
                Vec3::new(-0.5, -0.8, 0.0),
            ],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn nearest_centre_rules() {
        let cfg = two();
        assert_eq!(nearest_centre(&cfg, &Vec3::new(0.9, 0.3, 0.0)), 1);
        assert_eq!(nearest_centre(&cfg, &Vec3::zeros()), 0);
    }

    #[test]
    fn split_step_single_centre_is_kepler() {
        let cfg = CentreConfig::new(3, vec![Vec3::new(0.2, 0.1, 0.0)], vec![1.5]).unwrap();
        let x = PhaseState::new(Vec3::new(1.0, 0.3, -0.2), Vec3::new(0.1, 1.0, 0.4));
        let a = split_step(&cfg, &x, 0.37, 0).unwrap();
        let b = kepler_propagate(1.5, &cfg.centre(0), &x, 0.37).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_step_reversible() {
        let cfg = three();
        let x = PhaseState::planar(0.3, 0.4, 0.7, -0.2);
        let l = nearest_centre(&cfg, &x.q);
        let y = split_step(&cfg, &x, 1e-2, l).unwrap();
        let z = split_step(&cfg, &y.reversed(), 1e-2, l).unwrap().reversed();
        assert!((z.q - x.q).norm() < 1e-12 && (z.p - x.p).norm() < 1e-12);
    }

    #[test]
    fn close_pericentre_energy_per_step() {
        // pass the centre at the origin at distance 1e-4 with base step 1e-3
        let cfg = CentreConfig::new(2, vec![Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0)], vec![1.0, 1.0]).unwrap();
        let b: f64 = 1e-4;
        let speed = (2.0 * (0.5 + 1.0 / b + 1.0 / (2.0 - b))).sqrt();
        let peri = PhaseState::planar(0.0, b, speed, 0.0);
        let s = IntegratorSettings {
            step: 1e-3,
            ..Default::default()
        };
        let start = *integrate_with(&cfg, &peri, -0.05, &s, Stop::Never).unwrap().last();
        let traj = integrate_with(&cfg, &start, 0.1, &s, Stop::Never).unwrap();
        assert!(traj.stats().min_centre_distance < 1.01 * b);
        let worst = traj
            .samples()
            .windows(2)
            .map(|w| (energy(&cfg, &w[1]).unwrap() - energy(&cfg, &w[0]).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "per-step drift {worst:e}");
    }

    #[test]
    fn integrate_single_centre_matches_kepler() {
        let cfg = CentreConfig::new(3, vec![Vec3::zeros()], vec![1.0]).unwrap();
        let x = PhaseState::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.2, 0.3));
        let traj = integrate_with(&cfg, &x, 10.0, &IntegratorSettings::default(), Stop::Never).unwrap();
        assert_eq!(traj.last().t, 10.0);
        for y in traj.samples() {
            let z = kepler_propagate(1.0, &Vec3::zeros(), &x, y.t).unwrap();
            assert!((y.q - z.q).norm() < 1e-9 && (y.p - z.p).norm() < 1e-9);
        }
    }

    #[test]
    fn samples_monotone_and_energy_within_tolerance() {
        let cfg = three();
        let x = PhaseState::planar(0.2, 0.1, 1.3, 0.9);
        let settings = IntegratorSettings::default();
        for t in [20.0, -20.0] {
            let traj = integrate_with(&cfg, &x, t, &settings, Stop::Never).unwrap();
            let s = traj.samples();
            assert!(s.windows(2).all(|w| (w[1].t - w[0].t) * t > 0.0));
            assert!(traj.stats().max_energy_drift <= settings.energy_tol);
        }
    }

    #[test]
    fn roundtrip() {
        let cfg = three();
        let x = PhaseState::planar(2.5, 0.3, -2.0, 0.1);
        assert!(energy(&cfg, &x).unwrap() > 0.0);
        let settings = IntegratorSettings::default();
        let fwd = integrate_with(&cfg, &x, 10.0, &settings, Stop::Never).unwrap();
        let back = integrate_with(&cfg, fwd.last(), -10.0, &settings, Stop::Never).unwrap();
        let y = back.last();
        assert!((y.q - x.q).norm() < 1e-8 && (y.p - x.p).norm() < 1e-8);
        assert_relative_eq!(y.t, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn convergence_order() {
        let cfg = three();
        let x = PhaseState::planar(2.0, 0.3, -0.8, 0.4);
        let reference = {
            let s = IntegratorSettings {
                step: 1e-4,
                energy_tol: 1.0,
                ..Default::default()
            };
            *integrate_with(&cfg, &x, 1.0, &s, Stop::Never).unwrap().last()
        };
        for (order, expected) in [(2u8, 4.0), (4u8, 16.0)] {
            let err = |h: f64| {
                let s = IntegratorSettings {
                    step: h,
                    order,
                    energy_tol: 1.0,
                    ..Default::default()
                };
                let y = *integrate_with(&cfg, &x, 1.0, &s, Stop::Never).unwrap().last();
                (y.q - reference.q).norm() + (y.p - reference.p).norm()
            };
            let ratio = err(0.04) / err(0.02);
            assert!(ratio > 0.8 * expected, "order {order}: ratio {ratio}");
        }
    }

    #[test]
    fn stops_on_escape() {
        let cfg = three();
        let x = PhaseState::planar(3.0, 0.0, 1.5, 0.2);
        let traj = integrate(&cfg, &x, 1e3, &IntegratorSettings::default()).unwrap();
        assert_eq!(traj.termination(), Termination::Escaped);
        assert!(traj.last().t < 10.0);
    }

    #[test]
    fn collision_abort_on_exact_hit() {
        let cfg = two();
        // heading straight at centre 2; the first step lands on the guard
        let x = PhaseState::new(Vec3::new(1.0 + 1e-3, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0));
        let settings = IntegratorSettings {
            collision_guard: 1e-2,
            ..Default::default()
        };
        let e = integrate_with(&cfg, &x, 1.0, &settings, Stop::Never);
        assert!(matches!(e, Err(Error::CollisionAbort { centre: 1, .. })));
    }

    #[test]
    fn crossings_refined_and_counted() {
        let cfg = three();
        let x = PhaseState::planar(0.2, 0.1, 0.6, 0.9);
        let traj = integrate_with(&cfg, &x, 15.0, &IntegratorSettings::default(), Stop::Never).unwrap();
        for radius in [0.5, 1.0, 2.0] {
            let c = find_radius_crossings(&traj, radius).unwrap();
            for k in &c {
                assert!((k.state.q.norm() - radius).abs() < 1e-9);
            }
            // dense scan oracle: a finer run sampled on a uniform grid
            let fine = IntegratorSettings {
                step: 1e-3,
                ..Default::default()
            };
            let ftraj = integrate_with(&cfg, &x, 15.0, &fine, Stop::Never).unwrap();
            let scan = ftraj
                .samples()
                .windows(2)
                .filter(|w| (w[0].q.norm() < radius) != (w[1].q.norm() < radius))
                .count();
            assert_eq!(c.len(), scan);
        }
    }

    #[test]
    fn escape_orbit_single_outward_crossing() {
        let cfg = three();
        let x = PhaseState::planar(3.0, 0.0, 1.5, 0.2);
        let traj = integrate_with(&cfg, &x, 30.0, &IntegratorSettings::default(), Stop::Never).unwrap();
        let c = find_radius_crossings(&traj, 20.0).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c[0].outward);
    }

    #[test]
    fn state_at_interpolates_on_joined_trajectory() {
        let cfg = three();
        let x = PhaseState::planar(0.2, 0.1, 1.3, 0.9);
        let s = IntegratorSettings::default();
        let f = integrate_with(&cfg, &x, 3.0, &s, Stop::Never).unwrap();
        let b = integrate_with(&cfg, &x, -3.0, &s, Stop::Never).unwrap();
        let j = Trajectory::join(b, f);
        assert!(j.samples().windows(2).all(|w| w[1].t > w[0].t));
        let y = j.state_at(0.0).unwrap();
        assert!((y.q - x.q).norm() < 1e-14);
        for t in [-2.3456, 1.2345] {
            let a = j.state_at(t).unwrap();
            let b = *integrate_with(&cfg, &x, t, &s, Stop::Never).unwrap().last();
            assert!((a.q - b.q).norm() < 1e-13 && (a.p - b.p).norm() < 1e-13, "{t}");
        }
    }

    #[test]
    fn replay_reproduces_and_is_smooth() {
        let cfg = three();
        let x = PhaseState::planar(2.0, 0.4, -1.5, 0.3);
        let traj = integrate_with(&cfg, &x, 3.0, &IntegratorSettings::default(), Stop::Never).unwrap();
        // step lengths are recovered from sample times, so agreement is to round-off
        let y = replay(&traj, &x).unwrap();
        assert!((y.q - traj.last().q).norm() + (y.p - traj.last().p).norm() < 1e-10);
        // central differences converge at second order, so the map has no kinks
        let d = |h: f64| {
            let mut a = x;
            let mut b = x;
            a.q.x += h;
            b.q.x -= h;
            (replay(&traj, &a).unwrap().q - replay(&traj, &b).unwrap().q) / (2.0 * h)
        };
        let (d0, d1, d2) = (d(2e-4), d(1e-4), d(5e-5));
        let ratio = (d0 - d1).norm() / (d1 - d2).norm();
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn csv_export() {
        let cfg = two();
        let x = PhaseState::planar(0.0, 1.0, 0.5, 0.0);
        let traj = integrate_with(&cfg, &x, 0.05, &IntegratorSettings::default(), Stop::Never).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,q1,q2,p1,p2,H,nearest,min_distance");
        assert_eq!(lines.count(), traj.samples().len());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn nearest_matches_linear_scan(x in -3.0..3.0f64, y in -3.0..3.0f64) {
            let cfg = three();
            let q = Vec3::new(x, y, 0.0);
            let k = nearest_centre(&cfg, &q);
            for s in cfg.centres() {
                prop_assert!((q - cfg.centre(k)).norm() <= (q - s).norm());
            }
        }

        #[test]
        fn escape_is_permanent(e0 in 0.2..3.0f64, angle in 0.0..std::f64::consts::TAU) {
            let cfg = three();
            let q = Vec3::new(0.1, 0.2, 0.0);
            let speed = (2.0 * (e0 - potential(&cfg, &q).unwrap())).sqrt();
            let x = PhaseState::new(q, Vec3::new(angle.cos(), angle.sin(), 0.0) * speed);
            let rv = virial_radius(&cfg, e0).unwrap();
            let traj = match integrate_with(&cfg, &x, 60.0, &IntegratorSettings::default(), Stop::Never) {
                Ok(t) => t,
                Err(_) => return Ok(()),
            };
            let mut escaped = false;
            for y in traj.samples() {
                let now = y.q.norm() >= rv && y.dilation() >= 0.0;
                prop_assert!(!escaped || now);
                escaped = now;
            }
        }
    }
}
