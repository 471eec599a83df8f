//! Run configuration: TOML in, validated settings out, normalised TOML back.

use ncentre::{
    CentreConfig, GevreyParams, IntegratorSettings, PhaseState, ScatterSettings, ShootingSettings, SymbolWord, Vec3,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentresSection {
    pub dimension: usize,
    pub positions: Vec<Vec<f64>>,
    pub charges: Vec<f64>,
    #[serde(default = "default_guard")]
    pub collision_guard: f64,
}

fn default_guard() -> f64 {
    1e-10
}

impl Default for CentresSection {
    fn default() -> Self {
        Self {
            dimension: 2,
            positions: vec![vec![1.0, 0.0], vec![-0.5, 0.8], vec![-0.5, -0.8]],
            charges: vec![1.0; 3],
            collision_guard: default_guard(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergySection {
    pub value: f64,
    /// [E1, E2] for the Gevrey integrals; `value` must lie inside.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

impl Default for EnergySection {
    fn default() -> Self {
        Self {
            value: 10.0,
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GevreySection {
    pub g: f64,
    pub c2: f64,
}

impl Default for GevreySection {
    fn default() -> Self {
        let p = GevreyParams::default();
        Self { g: p.g, c2: p.c2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterSection {
    pub horizon: f64,
    pub ladder: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_radius: Option<f64>,
    pub richardson_order: usize,
    pub contraction: f64,
}

impl Default for ScatterSection {
    fn default() -> Self {
        let s = ScatterSettings::default();
        Self {
            horizon: s.horizon,
            ladder: s.ladder,
            base_radius: s.base_radius,
            richardson_order: s.richardson_order,
            contraction: s.contraction,
        }
    }
}

/// Grid of incoming states q = −distance·direction + Σ b_i·axis_i with
/// momentum along `direction` at the configured energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchSection {
    pub direction: Vec<f64>,
    pub distance: f64,
    pub axes: Vec<Vec<f64>>,
    pub ranges: Vec<[f64; 2]>,
    pub counts: Vec<usize>,
}

impl Default for BatchSection {
    fn default() -> Self {
        Self {
            direction: vec![1.0, 0.0],
            distance: 6.0,
            axes: vec![vec![0.0, 1.0]],
            ranges: vec![[-1.5, 1.5]],
            counts: vec![101],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolicSection {
    pub m_max: usize,
    /// Words for `orbit`; all classes up to m_max when empty.
    pub words: Vec<String>,
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub energy_step: f64,
    pub max_flight: f64,
    /// Step shrink floor used for the shooting flights.
    pub shrink_floor: f64,
}

impl Default for SymbolicSection {
    fn default() -> Self {
        let s = ShootingSettings::default();
        Self {
            m_max: 4,
            words: Vec::new(),
            tol: s.tol,
            max_iter: s.max_iter,
            fd_step: s.fd_step,
            energy_step: s.energy_step,
            max_flight: s.max_flight,
            shrink_floor: s.integrator.shrink_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegralsSection {
    /// Grid states used for bracket and rank diagnostics.
    pub points: usize,
    /// Finite-difference step relative to the coordinate scale.
    pub rel_step: f64,
}

impl Default for IntegralsSection {
    fn default() -> Self {
        Self {
            points: 10,
            rel_step: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    /// Energies of the single-centre oracle runs.
    pub kepler_energies: Vec<f64>,
    pub kepler_states: usize,
    pub orbits: usize,
    pub points: usize,
    /// Integration time of the drift and reversibility orbits.
    pub duration: f64,
    pub drift_tol: f64,
    pub roundtrip_tol: f64,
    pub kepler_tol: f64,
    pub bracket_tol: f64,
    pub rank_fraction: f64,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            kepler_energies: vec![0.5, 1.0, 10.0],
            kepler_states: 5,
            orbits: 3,
            points: 5,
            duration: 20.0,
            drift_tol: 1e-8,
            roundtrip_tol: 1e-8,
            kepler_tol: 1e-9,
            bracket_tol: 1e-4,
            rank_fraction: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub jobs: usize,
    pub seed: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            jobs: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub centres: CentresSection,
    #[serde(default)]
    pub energy: EnergySection,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub gevrey: GevreySection,
    #[serde(default)]
    pub scatter: ScatterSection,
    #[serde(default)]
    pub batch: BatchSection,
    #[serde(default)]
    pub symbolic: SymbolicSection,
    #[serde(default)]
    pub integrals: IntegralsSection,
    #[serde(default)]
    pub check: CheckSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_column(text, s.start)).unwrap_or((0, 0));
        CliError::Parse {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn from_core(e: ncentre::Error) -> CliError {
    match e {
        ncentre::Error::InvalidConfig(m) => invalid(m),
        other => invalid(other.to_string()),
    }
}

fn to_vec3(v: &[f64], d: usize, what: &str) -> Result<Vec3> {
    if v.len() != d {
        return Err(invalid(format!("{what} has {} components, expected {d}", v.len())));
    }
    if !v.iter().all(|c| c.is_finite()) {
        return Err(invalid(format!("{what} is not finite")));
    }
    Ok(Vec3::new(v[0], v[1], if d == 3 { v[2] } else { 0.0 }))
}

impl RunConfig {
    /// Normalised TOML: every field present, fixed order.
    pub fn dump(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let centres = self.centre_config()?;
        let e = self.energy.value;
        if !(e > 0.0 && e.is_finite()) {
            return Err(invalid(format!("energy must be positive, got {e}")));
        }
        if let Some([lo, hi]) = self.energy.window {
            if !(lo > 0.0 && hi >= lo) {
                return Err(invalid(format!("energy window [{lo}, {hi}] must satisfy 0 < E1 <= E2")));
            }
            if e < lo || e > hi {
                return Err(invalid(format!("energy {e} outside window [{lo}, {hi}]")));
            }
        }
        self.integrator.validate().map_err(from_core)?;
        self.gevrey_params().validate().map_err(from_core)?;
        self.scatter_settings().validate().map_err(from_core)?;
        self.shooting_settings().validate().map_err(from_core)?;
        if !(self.scatter.contraction > 1.0) {
            return Err(invalid("scatter.contraction must exceed 1"));
        }
        self.batch_states(&centres)?;
        if self.symbolic.m_max < 2 {
            return Err(invalid("symbolic.m_max must be at least 2"));
        }
        self.words(&centres)?;
        if !(self.integrals.rel_step > 0.0) {
            return Err(invalid("integrals.rel_step must be positive"));
        }
        let c = &self.check;
        for (name, v) in [
            ("drift_tol", c.drift_tol),
            ("roundtrip_tol", c.roundtrip_tol),
            ("kepler_tol", c.kepler_tol),
            ("bracket_tol", c.bracket_tol),
        ] {
            if !(v > 0.0) {
                return Err(invalid(format!("check.{name} must be positive")));
            }
        }
        if !c.kepler_energies.iter().all(|&e| e > 0.0) {
            return Err(invalid("check.kepler_energies must be positive"));
        }
        if !(c.duration > 0.0) {
            return Err(invalid("check.duration must be positive"));
        }
        if !(0.0..=1.0).contains(&c.rank_fraction) {
            return Err(invalid("check.rank_fraction must lie in [0, 1]"));
        }
        if self.output.jobs == 0 {
            return Err(invalid("output.jobs must be positive"));
        }
        Ok(())
    }

    pub fn centre_config(&self) -> Result<CentreConfig> {
        let c = &self.centres;
        if c.dimension != 2 && c.dimension != 3 {
            return Err(invalid(format!("dimension must be 2 or 3, got {}", c.dimension)));
        }
        let pts = c
            .positions
            .iter()
            .enumerate()
            .map(|(k, p)| to_vec3(p, c.dimension, &format!("centre {}", k + 1)))
            .collect::<Result<Vec<_>>>()?;
        CentreConfig::with_guard(c.dimension, pts, c.charges.clone(), c.collision_guard).map_err(from_core)
    }

    pub fn gevrey_params(&self) -> GevreyParams {
        GevreyParams {
            g: self.gevrey.g,
            c2: self.gevrey.c2,
            energy_window: self.energy.window.map(|[a, b]| (a, b)),
        }
    }

    pub fn scatter_settings(&self) -> ScatterSettings {
        ScatterSettings {
            integrator: self.integrator,
            horizon: self.scatter.horizon,
            ladder: self.scatter.ladder,
            base_radius: self.scatter.base_radius,
            richardson_order: self.scatter.richardson_order,
            contraction: self.scatter.contraction,
        }
    }

    pub fn shooting_settings(&self) -> ShootingSettings {
        let s = &self.symbolic;
        ShootingSettings {
            integrator: IntegratorSettings {
                shrink_floor: s.shrink_floor,
                ..self.integrator
            },
            tol: s.tol,
            max_iter: s.max_iter,
            fd_step: s.fd_step,
            energy_step: s.energy_step,
            max_flight: s.max_flight,
        }
    }

    /// Words for the orbit atlas, validated against the centre count.
    pub fn words(&self, centres: &CentreConfig) -> Result<Vec<SymbolWord>> {
        self.symbolic
            .words
            .iter()
            .map(|s| {
                let w: SymbolWord = s
                    .parse()
                    .map_err(|e: ncentre::Error| invalid(format!("word {s:?}: {e}")))?;
                w.validate(centres.len())
                    .map_err(|e| invalid(format!("word {s:?}: {e}")))?;
                Ok(w)
            })
            .collect()
    }

    /// Incoming state at the given offsets along the batch axes.
    pub fn batch_state_at(&self, centres: &CentreConfig, offsets: &[f64]) -> Result<PhaseState> {
        let b = &self.batch;
        let d = centres.dimension();
        let dir = to_vec3(&b.direction, d, "batch.direction")?;
        if dir.norm() == 0.0 {
            return Err(invalid("batch.direction must be nonzero"));
        }
        let dir = dir.normalize();
        if b.axes.is_empty() || b.axes.len() > d - 1 {
            return Err(invalid(format!("batch needs 1..={} axes", d - 1)));
        }
        if offsets.len() != b.axes.len() {
            return Err(invalid("one offset per batch axis"));
        }
        if !(b.distance > 0.0) {
            return Err(invalid("batch.distance must be positive"));
        }
        let mut q = -dir * b.distance;
        for (i, (a, s)) in b.axes.iter().zip(offsets).enumerate() {
            q += to_vec3(a, d, &format!("batch axis {}", i + 1))? * *s;
        }
        let v = ncentre::potential(centres, &q).map_err(|e| invalid(format!("batch state: {e}")))?;
        let kin = self.energy.value - v;
        if !(kin > 0.0) {
            return Err(invalid(format!(
                "batch state at {offsets:?} lies above the energy surface"
            )));
        }
        Ok(PhaseState::new(q, dir * (2.0 * kin).sqrt()))
    }

    /// The batch grid in row-major order (last axis fastest).
    pub fn batch_states(&self, centres: &CentreConfig) -> Result<Vec<PhaseState>> {
        let b = &self.batch;
        if b.axes.len() != b.ranges.len() || b.axes.len() != b.counts.len() {
            return Err(invalid("batch needs one range and one count per axis"));
        }
        if b.counts.contains(&0) {
            return Err(invalid("batch counts must be positive"));
        }
        let total: usize = b.counts.iter().product();
        let mut offsets = vec![0.0; b.axes.len()];
        (0..total)
            .map(|id| {
                let mut rest = id;
                for i in (0..offsets.len()).rev() {
                    let n = b.counts[i];
                    let j = rest % n;
                    rest /= n;
                    let [lo, hi] = b.ranges[i];
                    offsets[i] = if n == 1 {
                        0.5 * (lo + hi)
                    } else {
                        lo + (hi - lo) * j as f64 / (n - 1) as f64
                    };
                }
                self.batch_state_at(centres, &offsets)
            })
            .collect()
    }
}
