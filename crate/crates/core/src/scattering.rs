//! Orbit classification, asymptotic (Møller) data and time delay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{find_radius_crossings, integrate_with, IntegratorSettings, Stop, Termination, Trajectory};
use crate::integrals::{gevrey_from_asymptotics, GevreyParams};
use crate::kepler::{asymptote_data, osculating_elements, time_in_ball, KeplerElements};
use crate::model::{energy, virial_radius, CentreConfig, PhaseState, Vec3};
use crate::richardson::{contracts, extrapolate, extrapolate_vectors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrbitClass {
    /// Escapes in both time directions.
    Scattering,
    /// Escapes backward but not forward within the horizon.
    TrappedForward,
    /// Escapes forward but not backward within the horizon.
    TrappedBackward,
    /// No escape in either direction within the horizon.
    BoundedToHorizon,
    CollisionFlagged,
}

impl OrbitClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            OrbitClass::Scattering => "scattering",
            OrbitClass::TrappedForward => "trapped_forward",
            OrbitClass::TrappedBackward => "trapped_backward",
            OrbitClass::BoundedToHorizon => "bounded_to_horizon",
            OrbitClass::CollisionFlagged => "collision",
        }
    }

    /// The class of the time-reversed state.
    pub fn reversed(&self) -> Self {
        match self {
            OrbitClass::TrappedForward => OrbitClass::TrappedBackward,
            OrbitClass::TrappedBackward => OrbitClass::TrappedForward,
            c => *c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: OrbitClass,
    pub horizon: f64,
    /// Time of the first escape detection forward, relative to the initial time.
    pub escape_forward: Option<f64>,
    pub escape_backward: Option<f64>,
}

impl Classification {
    fn from_escapes(horizon: f64, fwd: Option<f64>, bwd: Option<f64>) -> Self {
        let class = match (fwd.is_some(), bwd.is_some()) {
            (true, true) => OrbitClass::Scattering,
            (false, true) => OrbitClass::TrappedForward,
            (true, false) => OrbitClass::TrappedBackward,
            (false, false) => OrbitClass::BoundedToHorizon,
        };
        Self {
            class,
            horizon,
            escape_forward: fwd,
            escape_backward: bwd,
        }
    }

    fn collision(horizon: f64) -> Self {
        Self {
            class: OrbitClass::CollisionFlagged,
            horizon,
            escape_forward: None,
            escape_backward: None,
        }
    }
}

/// Integrates both time directions until the escape criterion fires or the
/// horizon is reached. A detected escape is final; the absence of one is only
/// reported relative to the horizon.
pub fn classify(
    cfg: &CentreConfig,
    x0: &PhaseState,
    horizon: f64,
    settings: &IntegratorSettings,
) -> Result<Classification> {
    let e = energy(cfg, x0)?;
    if !(e > 0.0) {
        return Err(Error::NonpositiveEnergy(e));
    }
    let mut escapes = [None, None];
    for (slot, dir) in escapes.iter_mut().zip([1.0, -1.0]) {
        match integrate_with(cfg, x0, dir * horizon, settings, Stop::Escape) {
            Ok(traj) => {
                if traj.termination() == Termination::Escaped {
                    *slot = Some(traj.last().t - x0.t);
                }
            }
            Err(Error::CollisionAbort { .. }) => return Ok(Classification::collision(horizon)),
            Err(e) => return Err(e),
        }
    }
    Ok(Classification::from_escapes(horizon, escapes[0], escapes[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterSettings {
    pub integrator: IntegratorSettings,
    /// Classification horizon.
    pub horizon: f64,
    /// Radii R_j = R_base·2^j for j = 0..=ladder.
    pub ladder: usize,
    /// R_base; the virial radius of the state's energy when absent. Never
    /// taken below that virial radius.
    pub base_radius: Option<f64>,
    /// Number of powers of 1/R removed by extrapolation.
    pub richardson_order: usize,
    /// Minimum contraction factor of successive residuals.
    pub contraction: f64,
}

impl Default for ScatterSettings {
    fn default() -> Self {
        Self {
            integrator: IntegratorSettings::default(),
            horizon: 1e3,
            ladder: 8,
            base_radius: None,
            richardson_order: 2,
            contraction: 2.0,
        }
    }
}

impl ScatterSettings {
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        if self.ladder < self.richardson_order + 3 {
            return Err(Error::InvalidConfig(format!(
                "ladder of {} doublings too short for extrapolation order {}",
                self.ladder, self.richardson_order
            )));
        }
        if let Some(r) = self.base_radius {
            if !(r > 0.0) {
                return Err(Error::InvalidConfig("base radius must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// t → +∞
    Outgoing,
    /// t → −∞
    Incoming,
}

/// Far-field Kepler comparison data of one asymptotic end of an orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoellerDatum {
    pub direction: Direction,
    /// H(x) of the state the datum belongs to.
    pub energy: f64,
    /// Kepler elements about the origin with the total charge. Their energy is
    /// that of the integrated orbit at the outermost radius, so comparison
    /// times stay consistent with the numerical orbit.
    pub elements: KeplerElements,
    pub radii: Vec<f64>,
    /// Relative change of the extrapolated (L, F) between consecutive radii.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl MoellerDatum {
    /// Asymptotic momentum of this end, of norm √(2E) with E = H(x).
    pub fn asymptotic_momentum(&self) -> Result<Vec3> {
        let (out, inc) = asymptote_data(&self.elements)?;
        let p = match self.direction {
            Direction::Outgoing => out,
            Direction::Incoming => inc,
        };
        Ok(p * ((2.0 * self.energy).sqrt() / p.norm()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDelay {
    pub tau: f64,
    /// Last change of the extrapolated estimate.
    pub error: f64,
    /// Unextrapolated τ_R on the radius ladder.
    pub ladder: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl TimeDelay {
    /// True when |τ_{R_{j+1}} − τ_{R_j}| is nonincreasing along the ladder
    /// (differences at round-off level count as converged).
    pub fn ladder_contracts(&self) -> bool {
        let scale = self.ladder.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let floor = 1e-9 * scale;
        let diffs: Vec<f64> = self.ladder.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        diffs.windows(2).all(|w| w[1] <= w[0] || w[1] <= floor)
    }
}

/// A two-sided orbit integrated out to the end of the radius ladder.
#[derive(Debug, Clone)]
pub struct ScatterOrbit {
    pub trajectory: Trajectory,
    pub energy: f64,
    pub radii: Vec<f64>,
    pub classification: Classification,
}

/// Integrates x in both directions until the orbit has escaped and left the
/// largest ladder radius, or the horizon passes without escape.
pub fn scatter_orbit(cfg: &CentreConfig, x: &PhaseState, settings: &ScatterSettings) -> Result<ScatterOrbit> {
    settings.validate()?;
    let e = energy(cfg, x)?;
    if !(e > 0.0) {
        return Err(Error::NonpositiveEnergy(e));
    }
    let r_vir = virial_radius(cfg, e)?;
    let base = settings.base_radius.unwrap_or(r_vir).max(r_vir);
    // Orbits that stay outside the base ball get a ladder lifted by powers of
    // two past 1.5× their closest approach, so every radius is crossed.
    let lift = |r: f64| {
        let mut b = base;
        while b <= 1.5 * r {
            b *= 2.0;
        }
        b
    };
    let ladder = |b: f64| -> Vec<f64> { (0..=settings.ladder).map(|j| b * 2f64.powi(j as i32)).collect() };
    let r_stop = 1.05 * ladder(lift(x.q.norm())).last().unwrap();
    let horizon = settings.horizon;

    let mut halves = Vec::with_capacity(2);
    let mut escapes = [None, None];
    for (slot, dir) in escapes.iter_mut().zip([1.0, -1.0]) {
        let mut escaped_at: Option<f64> = None;
        let t0 = x.t;
        let mut stop = |y: &PhaseState| {
            if escaped_at.is_none() && y.q.norm() >= r_vir && y.dilation() * dir >= 0.0 {
                escaped_at = Some(y.t - t0);
            }
            match escaped_at {
                Some(_) => y.q.norm() > r_stop,
                None => (y.t - t0).abs() > horizon,
            }
        };
        let traj = match integrate_with(cfg, x, dir * 1e200, &settings.integrator, Stop::Custom(&mut stop)) {
            Ok(t) => t,
            Err(Error::CollisionAbort { .. }) => {
                let stub = integrate_with(cfg, x, 0.0, &settings.integrator, Stop::Never)?;
                return Ok(ScatterOrbit {
                    trajectory: Trajectory::join(stub.clone(), stub),
                    energy: e,
                    radii: ladder(base),
                    classification: Classification::collision(horizon),
                });
            }
            Err(err) => return Err(err),
        };
        *slot = escaped_at;
        halves.push(traj);
    }
    let forward = halves.remove(0);
    let backward = halves.remove(0);
    let trajectory = Trajectory::join(backward, forward);
    let closest = trajectory
        .samples()
        .iter()
        .map(|y| y.q.norm())
        .fold(f64::INFINITY, f64::min);
    Ok(ScatterOrbit {
        trajectory,
        energy: e,
        radii: ladder(lift(closest)),
        classification: Classification::from_escapes(horizon, escapes[0], escapes[1]),
    })
}

impl ScatterOrbit {
    fn require_scattering(&self) -> Result<()> {
        if self.classification.class != OrbitClass::Scattering {
            return Err(Error::NotScattering(self.classification.class.as_str().into()));
        }
        Ok(())
    }

    /// Osculating far-field elements at each ladder radius, extrapolated in 1/R.
    pub fn moeller_datum(&self, direction: Direction, settings: &ScatterSettings) -> Result<MoellerDatum> {
        self.require_scattering()?;
        let cfg = self.trajectory.config();
        let z = cfg.z_inf();
        let mut seq: Vec<[f64; 6]> = Vec::with_capacity(self.radii.len());
        let mut last_state = None;
        for &r in &self.radii {
            let crossings = find_radius_crossings(&self.trajectory, r)?;
            let c = match direction {
                Direction::Outgoing => crossings.iter().rev().find(|c| c.outward),
                Direction::Incoming => crossings.iter().find(|c| !c.outward),
            }
            .ok_or_else(|| Error::NoConvergence(format!("no crossing of radius {r}")))?;
            let el = osculating_elements(z, &Vec3::zeros(), &c.state)?;
            let (l, f) = (el.angular_momentum, el.runge_lenz);
            seq.push([l.x, l.y, l.z, f.x, f.y, f.z]);
            last_state = Some(c.state);
        }
        let ext = extrapolate_vectors(&seq, 2.0, settings.richardson_order);
        let scale = ext
            .last()
            .map(|v| v.iter().fold(0.0f64, |m, c| m.max(c.abs())))
            .unwrap_or(1.0)
            .max(z.abs())
            .max(1e-300);
        let residuals: Vec<f64> = ext
            .windows(2)
            .map(|w| (0..6).fold(0.0f64, |m, c| m.max((w[1][c] - w[0][c]).abs())) / scale)
            .collect();
        let fin = ext.last().unwrap();
        let l = Vec3::new(fin[0], fin[1], fin[2]);
        let f = Vec3::new(fin[3], fin[4], fin[5]);
        let outer = last_state.expect("ladder is nonempty");
        let far_energy = energy(cfg, &outer)?;
        let mut elements = KeplerElements::from_integrals(Vec3::zeros(), z, far_energy, l, f);
        elements.pericentre_time = osculating_elements(z, &Vec3::zeros(), &outer)?.pericentre_time;
        let usable = &residuals[settings.richardson_order.min(residuals.len())..];
        let converged = contracts(usable, settings.contraction, 3, 1e-12);
        Ok(MoellerDatum {
            direction,
            energy: self.energy,
            elements,
            radii: self.radii.clone(),
            residuals,
            converged,
        })
    }

    /// τ_R = t_inside(R) − ½(T⁺(R) + T⁻(R)) on the ladder, extrapolated in 1/R.
    pub fn time_delay(
        &self,
        plus: &MoellerDatum,
        minus: &MoellerDatum,
        settings: &ScatterSettings,
    ) -> Result<TimeDelay> {
        self.require_scattering()?;
        let mut ladder = Vec::with_capacity(self.radii.len());
        for &r in &self.radii {
            let crossings = find_radius_crossings(&self.trajectory, r)?;
            let mut inside = 0.0;
            let mut entry = None;
            for c in &crossings {
                if c.outward {
                    if let Some(t0) = entry.take() {
                        inside += c.time - t0;
                    }
                } else {
                    entry = Some(c.time);
                }
            }
            let tp = time_in_ball(&plus.elements, r)?;
            let tm = time_in_ball(&minus.elements, r)?;
            ladder.push(inside - 0.5 * (tp + tm));
        }
        let ext = extrapolate(&ladder, 2.0, settings.richardson_order);
        let residuals: Vec<f64> = ext.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let tau = *ext.last().unwrap();
        let floor = 1e-10 * self.radii.last().unwrap() / (2.0 * self.energy).sqrt();
        let usable = &residuals[settings.richardson_order.min(residuals.len())..];
        let converged = contracts(usable, settings.contraction, 3, floor.max(1e-12 * tau.abs()));
        Ok(TimeDelay {
            tau,
            error: *residuals.last().unwrap(),
            ladder,
            residuals,
            converged,
        })
    }
}

/// Outgoing or incoming far-field Kepler data of a scattering state.
pub fn moeller_datum(
    cfg: &CentreConfig,
    x: &PhaseState,
    direction: Direction,
    settings: &ScatterSettings,
) -> Result<MoellerDatum> {
    let orbit = scatter_orbit(cfg, x, settings)?;
    let d = orbit.moeller_datum(direction, settings)?;
    if !d.converged {
        return Err(Error::NoConvergence(format!("Møller residuals {:?}", d.residuals)));
    }
    Ok(d)
}

/// Asymptotic momentum p⁺ (outgoing) or p⁻ (incoming).
pub fn asymptotic_momentum(
    cfg: &CentreConfig,
    x: &PhaseState,
    direction: Direction,
    settings: &ScatterSettings,
) -> Result<Vec3> {
    moeller_datum(cfg, x, direction, settings)?.asymptotic_momentum()
}

/// Time delay of a scattering state.
pub fn time_delay(cfg: &CentreConfig, x: &PhaseState, settings: &ScatterSettings) -> Result<TimeDelay> {
    let orbit = scatter_orbit(cfg, x, settings)?;
    let plus = orbit.moeller_datum(Direction::Outgoing, settings)?;
    let minus = orbit.moeller_datum(Direction::Incoming, settings)?;
    let td = orbit.time_delay(&plus, &minus, settings)?;
    if !td.converged {
        return Err(Error::NoConvergence(format!("time delay residuals {:?}", td.residuals)));
    }
    Ok(td)
}

/// All scattering observables of one initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRecord {
    pub initial: PhaseState,
    pub energy: f64,
    pub classification: Classification,
    pub p_plus: Option<Vec3>,
    pub p_minus: Option<Vec3>,
    pub tau: Option<f64>,
    pub tau_error: Option<f64>,
    /// τ_R on the ladder radii.
    pub ladder: Vec<f64>,
    /// f_k for k = 1..d−1 (zero off the scattering set).
    pub gevrey: Vec<f64>,
    /// log|f_k|, finite even where f_k underflows.
    pub log_gevrey: Vec<f64>,
    pub flags: Vec<String>,
}

impl ScatterRecord {
    pub fn is_scattering(&self) -> bool {
        self.classification.class == OrbitClass::Scattering
    }

    pub fn converged(&self) -> bool {
        !self.flags.iter().any(|f| f.ends_with("no_convergence"))
    }
}

/// Computes the full scattering record of x. Non-scattering states yield a
/// record with empty asymptotic data and vanishing Gevrey values.
pub fn scatter_record(
    cfg: &CentreConfig,
    x: &PhaseState,
    settings: &ScatterSettings,
    gevrey: &GevreyParams,
) -> Result<ScatterRecord> {
    let orbit = scatter_orbit(cfg, x, settings)?;
    let ncomp = cfg.dimension() - 1;
    let mut record = ScatterRecord {
        initial: *x,
        energy: orbit.energy,
        classification: orbit.classification,
        p_plus: None,
        p_minus: None,
        tau: None,
        tau_error: None,
        ladder: Vec::new(),
        gevrey: vec![0.0; ncomp],
        log_gevrey: vec![f64::NEG_INFINITY; ncomp],
        flags: Vec::new(),
    };
    if let Some((lo, hi)) = gevrey.energy_window {
        if orbit.energy < lo || orbit.energy > hi {
            record.flags.push("outside_energy_window".into());
        }
    }
    match orbit.classification.class {
        OrbitClass::Scattering => {}
        OrbitClass::BoundedToHorizon => {
            record.flags.push("horizon_ambiguous".into());
            return Ok(record);
        }
        _ => return Ok(record),
    }
    let plus = orbit.moeller_datum(Direction::Outgoing, settings)?;
    let minus = orbit.moeller_datum(Direction::Incoming, settings)?;
    let td = orbit.time_delay(&plus, &minus, settings)?;
    if !plus.converged {
        record.flags.push("moeller_plus_no_convergence".into());
    }
    if !minus.converged {
        record.flags.push("moeller_minus_no_convergence".into());
    }
    if !td.converged {
        record.flags.push("tau_no_convergence".into());
    }
    let pp = plus.asymptotic_momentum()?;
    let pm = minus.asymptotic_momentum()?;
    let (vals, logs) = gevrey_from_asymptotics(gevrey, &pp, td.tau, ncomp);
    record.p_plus = Some(pp);
    record.p_minus = Some(pm);
    record.tau = Some(td.tau);
    record.tau_error = Some(td.error);
    record.ladder = td.ladder;
    record.gevrey = vals;
    record.log_gevrey = logs;
    Ok(record)
}
