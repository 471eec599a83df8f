//! Symbol sequences over centre labels, periodic orbits realising them,
//! their Floquet spectra and a topological entropy estimate.
//!
//! Orbits are computed by multiple shooting between Poincaré sections. Section
//! i is the bisector plane of the centres k_i and k_{i+1}, crossed towards
//! k_{i+1}; on it a state of fixed energy is described by its offset in the
//! plane and the tangential part of its unit velocity.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{
    find_level_crossings, integrate_with, replay_to_level, IntegratorSettings, Stop, Termination, Trajectory,
};
use crate::model::{energy, grad_potential, potential, CentreConfig, PhaseState, Vec3};

/// A cyclic word over centre indices (0-based; displayed 1-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct SymbolWord(Vec<usize>);

impl SymbolWord {
    pub fn new(letters: Vec<usize>) -> Self {
        Self(letters)
    }

    /// From 1-based centre labels.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::InadmissibleWord("labels start at 1".into()));
        }
        Ok(Self(labels.iter().map(|l| l - 1).collect()))
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn labels(&self) -> Vec<usize> {
        self.0.iter().map(|l| l + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Letter at cyclic position i.
    pub fn at(&self, i: isize) -> usize {
        self.0[i.rem_euclid(self.0.len() as isize) as usize]
    }

    /// No letter is followed by itself, cyclically.
    pub fn is_admissible(&self) -> bool {
        let m = self.0.len();
        m >= 2 && (0..m).all(|i| self.0[i] != self.0[(i + 1) % m])
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(&k) = self.0.iter().find(|&&k| k >= n) {
            return Err(Error::InadmissibleWord(format!(
                "{self}: label {} exceeds {n} centres",
                k + 1
            )));
        }
        if !self.is_admissible() {
            return Err(Error::InadmissibleWord(format!("{self}: repeated consecutive letter")));
        }
        Ok(())
    }

    pub fn rotate(&self, k: usize) -> Self {
        let mut v = self.0.clone();
        if !v.is_empty() {
            let k = k % v.len();
            v.rotate_left(k);
        }
        Self(v)
    }

    /// Lexicographically smallest rotation.
    pub fn canonical(&self) -> Self {
        (0..self.len().max(1)).map(|k| self.rotate(k)).min().unwrap_or_default()
    }

    /// Smallest p with w rotated by p equal to w.
    pub fn primitive_period(&self) -> usize {
        let m = self.len();
        (1..=m)
            .find(|&p| m.is_multiple_of(p) && self.rotate(p) == *self)
            .unwrap_or(m)
    }

    pub fn is_primitive(&self) -> bool {
        self.primitive_period() == self.len()
    }

    /// The primitive word whose repetition is this word.
    pub fn root(&self) -> Self {
        Self(self.0[..self.primitive_period()].to_vec())
    }
}

impl fmt::Display for SymbolWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.labels().iter().map(|l| l.to_string()).collect();
        f.write_str(&s.join("-"))
    }
}

impl FromStr for SymbolWord {
    type Err = Error;

    /// Accepts `1-2-3`, `1,2,3`, `1 2 3` or, for single-digit labels, `123`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<&str> = if s.contains(['-', ',', ' ']) {
            s.split(['-', ',', ' ']).filter(|p| !p.is_empty()).collect()
        } else {
            s.char_indices().map(|(i, c)| &s[i..i + c.len_utf8()]).collect()
        };
        let labels = parts
            .iter()
            .map(|p| {
                p.parse::<usize>()
                    .map_err(|_| Error::InadmissibleWord(format!("cannot parse {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_labels(&labels)
    }
}

impl From<SymbolWord> for String {
    fn from(w: SymbolWord) -> String {
        w.to_string()
    }
}

impl TryFrom<String> for SymbolWord {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Distance Σ_i 2^{−|i|}(1 − δ(u_i, v_i)) between the bi-infinite periodic
/// sequences generated by u and v (index 0 at the first letter).
pub fn symbol_metric(u: &SymbolWord, v: &SymbolWord) -> f64 {
    if u.is_empty() || v.is_empty() {
        return if u == v { 0.0 } else { 3.0 };
    }
    let (a, b) = (u.len(), v.len());
    let l = a / gcd(a, b) * b;
    // the joint sequence has period l; sum one period of each half-line and
    // divide by 1 − 2^{−l}
    let differs = |i: isize| (u.at(i) != v.at(i)) as u8 as f64;
    let mut fwd = 0.0;
    let mut back = 0.0;
    let mut w = 1.0;
    for j in 0..l as isize {
        fwd += w * differs(j);
        back += 0.5 * w * differs(-j - 1);
        w *= 0.5;
    }
    let geometric = if l >= 1100 {
        1.0
    } else {
        1.0 / (1.0 - 0.5f64.powi(l as i32))
    };
    (fwd + back) * geometric
}

/// The same distance for finite windows, with index 0 at position `origin`
/// of both windows. Positions outside the windows do not contribute.
pub fn window_metric(u: &[usize], v: &[usize], origin: usize) -> f64 {
    u.iter()
        .zip(v)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, _)| 0.5f64.powi((i as isize - origin as isize).unsigned_abs() as i32))
        .sum()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Number of admissible cyclic sequences of length m over n letters,
/// (n−1)^m + (n−1)(−1)^m.
pub fn count_periodic_words(n: usize, m: usize) -> u64 {
    if n < 2 || m == 0 {
        return 0;
    }
    let a = (n - 1) as i128;
    let total = a.pow(m as u32) + if m.is_multiple_of(2) { a } else { -a };
    u64::try_from(total).expect("count exceeds u64")
}

/// Canonical representatives of the rotation classes of admissible words of
/// length m, in lexicographic order. Includes repetitions of shorter words.
pub fn word_classes(n: usize, m: usize) -> Vec<SymbolWord> {
    let mut out = Vec::new();
    if n < 2 || m < 2 {
        return out;
    }
    let mut w = vec![0usize; m];
    fn rec(n: usize, i: usize, w: &mut Vec<usize>, out: &mut Vec<SymbolWord>) {
        let m = w.len();
        if i == m {
            if w[m - 1] != w[0] {
                let word = SymbolWord(w.clone());
                if word.canonical() == word {
                    out.push(word);
                }
            }
            return;
        }
        for k in 0..n {
            // a canonical word starts with its smallest letter
            if i > 0 && (k == w[i - 1] || k < w[0]) {
                continue;
            }
            w[i] = k;
            rec(n, i + 1, w, out);
        }
    }
    rec(n, 0, &mut w, &mut out);
    out
}

/// Bisector plane of two centres, oriented towards the second.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Section {
    mid: Vec3,
    normal: Vec3,
    tangents: [Vec3; 2],
    k: usize,
}

impl Section {
    fn new(cfg: &CentreConfig, from: usize, to: usize) -> Self {
        let (a, b) = (cfg.centre(from), cfg.centre(to));
        let normal = (b - a).normalize();
        let k = cfg.dimension() - 1;
        let tangents = if k == 1 {
            [Vec3::new(-normal.y, normal.x, 0.0), Vec3::zeros()]
        } else {
            let axis = (0..3)
                .map(|i| Vec3::ith(i, 1.0))
                .min_by(|x, y| x.dot(&normal).abs().total_cmp(&y.dot(&normal).abs()))
                .unwrap();
            let t1 = (axis - normal * axis.dot(&normal)).normalize();
            [t1, normal.cross(&t1)]
        };
        Self {
            mid: 0.5 * (a + b),
            normal,
            tangents,
            k,
        }
    }

    /// Same plane, crossed the other way; charts of time-reversed states
    /// differ from the forward ones by the sign of the velocity part.
    fn reversed(&self) -> Self {
        Self {
            normal: -self.normal,
            ..*self
        }
    }

    fn level(&self, x: &PhaseState) -> f64 {
        (x.q - self.mid).dot(&self.normal)
    }

    /// (offsets, tangential unit-velocity components), 2(d−1) numbers.
    fn chart(&self, x: &PhaseState) -> Vec<f64> {
        let v = x.p.normalize();
        let mut u = Vec::with_capacity(2 * self.k);
        for t in &self.tangents[..self.k] {
            u.push((x.q - self.mid).dot(t));
        }
        for t in &self.tangents[..self.k] {
            u.push(v.dot(t));
        }
        u
    }

    fn state(&self, cfg: &CentreConfig, u: &[f64], e: f64, t: f64) -> Result<PhaseState> {
        let mut q = self.mid;
        let mut dir = Vec3::zeros();
        for (j, tj) in self.tangents[..self.k].iter().enumerate() {
            q += tj * u[j];
            dir += tj * u[self.k + j];
        }
        let w2 = dir.norm_squared();
        let kin = e - potential(cfg, &q)?;
        if !(w2 < 1.0) || !(kin > 0.0) {
            return Err(Error::InvalidArgument("chart point off the energy surface".into()));
        }
        let p = (dir + self.normal * (1.0 - w2).sqrt()) * (2.0 * kin).sqrt();
        Ok(PhaseState::at(q, p, t))
    }
}

fn sections(cfg: &CentreConfig, word: &SymbolWord) -> Vec<Section> {
    (0..word.len() as isize)
        .map(|i| Section::new(cfg, word.at(i), word.at(i + 1)))
        .collect()
}

/// Section states of the polygon s_{k_0} → s_{k_1} → … through the centres.
///
/// Each edge is replaced by the straight line that passes every centre at the
/// Rutherford impact parameter for the turn the polygon makes there, using the
/// local speed 2(E − V_others(s_k)), and then bent to first order by the
/// remaining centres. The state is where this path meets the bisector
/// section, with momentum along the path. For a reversal (turn by π) the line
/// is the edge itself. Errors are O(E⁻²).
pub fn polygon_guess(cfg: &CentreConfig, word: &SymbolWord, e: f64) -> Result<Vec<PhaseState>> {
    word.validate(cfg.len())?;
    if !(e > 0.0) {
        return Err(Error::NonpositiveEnergy(e));
    }
    let m = word.len() as isize;
    let edge = |i: isize| (cfg.centre(word.at(i + 1)) - cfg.centre(word.at(i))).normalize();
    let cap = 0.25 * cfg.min_pair_distance();
    let offset = |k: usize, e_in: Vec3, e_out: Vec3, along: Vec3| -> Vec3 {
        let delta = e_out - e_in;
        let perp = delta - along * delta.dot(&along);
        if perp.norm() < 1e-12 {
            return Vec3::zeros();
        }
        let v_others: f64 = (0..cfg.len())
            .filter(|&j| j != k)
            .map(|j| -cfg.charge(j) / (cfg.centre(k) - cfg.centre(j)).norm())
            .sum();
        let v2 = 2.0 * (e - v_others).max(e);
        let half = 0.5 * e_in.dot(&e_out).clamp(-1.0, 1.0).acos();
        let rho = (cfg.charge(k) / v2 / half.tan()).clamp(-cap, cap);
        -perp.normalize() * rho
    };
    let secs = sections(cfg, word);
    (0..m)
        .map(|i| {
            let (a, b) = (word.at(i), word.at(i + 1));
            let e_i = edge(i);
            let pa = cfg.centre(a) + offset(a, edge(i - 1), e_i, e_i);
            let pb = cfg.centre(b) + offset(b, e_i, edge(i + 1), e_i);
            let dir = (pb - pa).normalize();
            let bend = Bend::new(cfg, e, pa, pb, a, b);
            let sec = &secs[i as usize];
            let mut s = (sec.mid - pa).dot(&sec.normal) / dir.dot(&sec.normal);
            for _ in 0..3 {
                let (d, _) = bend.at(s);
                s = (sec.mid - pa - d).dot(&sec.normal) / dir.dot(&sec.normal);
            }
            let (d, slope) = bend.at(s);
            let q = pa + dir * s + d;
            let kin = e - potential(cfg, &q)?;
            if !(kin > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "energy {e} below the potential on edge {}",
                    i + 1
                )));
            }
            Ok(PhaseState::new(q, (dir + slope).normalize() * (2.0 * kin).sqrt()))
        })
        .collect()
}

/// First-order transverse deflection δ(s) of a fast straight flight from pa
/// to pb by the centres other than its end points: δ'' = F_⊥/v² along the
/// chord with δ(0) = δ(L) = 0. The end points are fixed by the Rutherford
/// offsets, so the deflection is pinned there.
struct Bend {
    len: f64,
    // s_j and f(s_j) on a uniform grid
    grid: Vec<(f64, Vec3)>,
}

impl Bend {
    const PANELS: usize = 256;

    fn new(cfg: &CentreConfig, e: f64, pa: Vec3, pb: Vec3, a: usize, b: usize) -> Self {
        let len = (pb - pa).norm();
        let dir = (pb - pa) / len;
        let grid = (0..=Self::PANELS)
            .map(|j| {
                let s = len * j as f64 / Self::PANELS as f64;
                let q = pa + dir * s;
                let mut force = Vec3::zeros();
                let mut v_others = 0.0;
                for k in (0..cfg.len()).filter(|&k| k != a && k != b) {
                    let r = q - cfg.centre(k);
                    let d = r.norm();
                    force -= r * (cfg.charge(k) / (d * d * d));
                    v_others -= cfg.charge(k) / d;
                }
                let v2 = 2.0 * (e - v_others).max(0.5 * e);
                (s, (force - dir * force.dot(&dir)) / v2)
            })
            .collect();
        Self { len, grid }
    }

    /// δ(s) and δ'(s) = (∫_0^s s'f − ∫_s^L (L − s')f) / L, trapezoidal sums.
    fn at(&self, s: f64) -> (Vec3, Vec3) {
        let h = self.len / Self::PANELS as f64;
        let (mut lo, mut hi) = (Vec3::zeros(), Vec3::zeros());
        for (j, (sj, f)) in self.grid.iter().enumerate() {
            let w = if j == 0 || j == Self::PANELS { 0.5 * h } else { h };
            if *sj <= s {
                lo += f * (sj * w);
            } else {
                hi += f * ((self.len - sj) * w);
            }
        }
        let l = self.len;
        (-(lo * (l - s) + hi * s) / l, (lo - hi) / l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingSettings {
    pub integrator: IntegratorSettings,
    /// Convergence threshold on the max-norm of the shooting residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Finite-difference step in chart coordinates.
    pub fd_step: f64,
    /// Relative energy offset used for the energy multiplier.
    pub energy_step: f64,
    /// Longest flight between consecutive sections.
    pub max_flight: f64,
}

impl Default for ShootingSettings {
    fn default() -> Self {
        Self {
            // periodic orbits may pass arbitrarily close to a centre; many tiny
            // steps there only add round-off, the drift crosses it exactly
            integrator: IntegratorSettings {
                shrink_floor: 5e-2,
                ..IntegratorSettings::default()
            },
            tol: 1e-9,
            max_iter: 40,
            fd_step: 1e-6,
            energy_step: 1e-2,
            max_flight: 20.0,
        }
    }
}

impl ShootingSettings {
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        let positive = [
            ("tol", self.tol),
            ("fd_step", self.fd_step),
            ("energy_step", self.energy_step),
            ("max_flight", self.max_flight),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// A pericentre passage about the nearest centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareEvent {
    pub state: PhaseState,
    pub centre: usize,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub word: SymbolWord,
    pub energy: f64,
    pub period: f64,
    /// Section state i lies on the bisector of k_i and k_{i+1}; its `t` is the
    /// time since section state 0.
    pub section_states: Vec<PhaseState>,
    /// Pericentre passages; event j is at centre k_j.
    pub events: Vec<PoincareEvent>,
    /// Eigenvalues (re, im) of the monodromy matrix of the period map.
    pub multipliers: Vec<[f64; 2]>,
    /// Eigenvalues of the product of the section-to-section Jacobians.
    pub section_multipliers: Vec<[f64; 2]>,
    /// Max-norm of the shooting residual.
    pub residual: f64,
    pub iterations: usize,
    /// Euclidean residual norm per Newton iterate.
    pub trace: Vec<f64>,
    pub warnings: Vec<String>,
}

impl PeriodicOrbit {
    /// Shooting residual recomputed with a ten times tighter integrator
    /// (energy tolerance / 10, step / 10^{1/4}).
    pub fn closure_residual(&self, cfg: &CentreConfig, settings: &ShootingSettings) -> Result<f64> {
        let mut tight = *settings;
        tight.integrator.energy_tol /= 10.0;
        tight.integrator.step /= 10f64.powf(0.25);
        let sh = Shooting {
            cfg,
            secs: sections(cfg, &self.word),
            e: self.energy,
            settings: &tight,
            k2: 2 * (cfg.dimension() - 1),
        };
        let u: Vec<f64> = self
            .section_states
            .iter()
            .zip(&sh.secs)
            .flat_map(|(x, s)| s.chart(x))
            .collect();
        Ok(sh.residual(&u)?.0.amax())
    }
}

struct Flight {
    end: PhaseState,
    traj: Trajectory,
}

/// Flow from x until the first crossing of `to` in its positive direction
/// after having been on its negative side.
fn fly(cfg: &CentreConfig, x: &PhaseState, to: &Section, settings: &ShootingSettings) -> Result<Flight> {
    let mut below = false;
    let mut stop = |y: &PhaseState| {
        let g = to.level(y);
        below |= g < 0.0;
        below && g >= 0.0
    };
    let traj = integrate_with(
        cfg,
        x,
        settings.max_flight,
        &settings.integrator,
        Stop::Custom(&mut stop),
    )?;
    if traj.termination() != Termination::Stopped {
        return Err(Error::NoConvergence(format!(
            "no section crossing within {}",
            settings.max_flight
        )));
    }
    let end = find_level_crossings(&traj, |y| to.level(y))?
        .into_iter()
        .rev()
        .find(|c| c.outward)
        .ok_or_else(|| Error::NoConvergence("section crossing not resolved".into()))?
        .state;
    Ok(Flight { end, traj })
}

struct Shooting<'a> {
    cfg: &'a CentreConfig,
    secs: Vec<Section>,
    e: f64,
    settings: &'a ShootingSettings,
    k2: usize,
}

impl Shooting<'_> {
    fn map(&self, i: usize, u: &[f64]) -> Result<(Vec<f64>, Flight)> {
        let m = self.secs.len();
        let x = self.secs[i].state(self.cfg, u, self.e, 0.0)?;
        let f = fly(self.cfg, &x, &self.secs[(i + 1) % m], self.settings)?;
        Ok((self.secs[(i + 1) % m].chart(&f.end), f))
    }

    fn residual(&self, u: &[f64]) -> Result<(DVector<f64>, Vec<Flight>)> {
        let (m, k2) = (self.secs.len(), self.k2);
        let mut r = DVector::zeros(m * k2);
        let mut flights = Vec::with_capacity(m);
        for i in 0..m {
            let (img, f) = self.map(i, &u[i * k2..(i + 1) * k2])?;
            let j = (i + 1) % m;
            for c in 0..k2 {
                r[i * k2 + c] = img[c] - u[j * k2 + c];
            }
            flights.push(f);
        }
        Ok((r, flights))
    }

    /// Jacobian blocks D P_i by Richardson-extrapolated central differences
    /// of the step-frozen section maps along the given flights.
    fn blocks(&self, u: &[f64], flights: &[Flight]) -> Result<Vec<DMatrix<f64>>> {
        let (m, k2) = (self.secs.len(), self.k2);
        (0..m)
            .map(|i| {
                let to = &self.secs[(i + 1) % m];
                fd_block(&u[i * k2..(i + 1) * k2], self.settings.fd_step, |v| {
                    let x = self.secs[i].state(self.cfg, v, self.e, 0.0)?;
                    Ok(to.chart(&replay_to_level(&flights[i].traj, &x, |y| to.level(y))?))
                })
            })
            .collect()
    }

    /// Jacobians of the inverse section maps P_i⁻¹, differentiated along
    /// time-reversed flights rather than by inverting D P_i.
    fn inverse_blocks(&self, u: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let (m, k2) = (self.secs.len(), self.k2);
        let half = k2 / 2;
        let flip = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .enumerate()
                .map(|(c, &x)| if c < half { x } else { -x })
                .collect()
        };
        (0..m)
            .map(|i| {
                let from = self.secs[(i + 1) % m].reversed();
                let to = self.secs[i].reversed();
                let ui = &u[((i + 1) % m) * k2..((i + 1) % m + 1) * k2];
                let x = from.state(self.cfg, &flip(ui), self.e, 0.0)?;
                let flight = fly(self.cfg, &x, &to, self.settings)?;
                fd_block(ui, self.settings.fd_step, |v| {
                    let x = from.state(self.cfg, &flip(v), self.e, 0.0)?;
                    Ok(flip(&to.chart(&replay_to_level(&flight.traj, &x, |y| to.level(y))?)))
                })
            })
            .collect()
    }

    fn jacobian(&self, blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
        let (m, k2) = (self.secs.len(), self.k2);
        let mut j = DMatrix::zeros(m * k2, m * k2);
        for (i, b) in blocks.iter().enumerate() {
            j.view_mut((i * k2, i * k2), (k2, k2)).copy_from(b);
            let nxt = (i + 1) % m;
            for c in 0..k2 {
                j[(i * k2 + c, nxt * k2 + c)] -= 1.0;
            }
        }
        j
    }
}

/// Central differences at h and h/2, combined to fourth order.
fn fd_block<F: Fn(&[f64]) -> Result<Vec<f64>>>(u: &[f64], h: f64, image: F) -> Result<DMatrix<f64>> {
    let k = u.len();
    let mut b = DMatrix::zeros(k, k);
    for c in 0..k {
        let diff = |h: f64| -> Result<Vec<f64>> {
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[c] += h;
            dn[c] -= h;
            let (a, z) = (image(&up)?, image(&dn)?);
            Ok(a.iter().zip(&z).map(|(a, z)| (a - z) / (2.0 * h)).collect())
        };
        let (d1, d2) = (diff(h)?, diff(0.5 * h)?);
        for r in 0..k {
            b[(r, c)] = (4.0 * d2[r] - d1[r]) / 3.0;
        }
    }
    Ok(b)
}

fn eigen_pairs(m: DMatrix<f64>) -> Vec<[f64; 2]> {
    let mut v: Vec<[f64; 2]> = m.complex_eigenvalues().iter().map(|z| [z.re, z.im]).collect();
    v.sort_by(|a, b| {
        b[0].hypot(b[1])
            .total_cmp(&a[0].hypot(a[1]))
            .then(b[1].total_cmp(&a[1]))
    });
    v
}

/// Realises an admissible word as a periodic orbit at energy E by damped
/// multiple shooting from [`polygon_guess`].
pub fn find_periodic_orbit(
    cfg: &CentreConfig,
    word: &SymbolWord,
    e: f64,
    settings: &ShootingSettings,
) -> Result<PeriodicOrbit> {
    settings.validate()?;
    let guess = polygon_guess(cfg, word, e)?;
    let sh = Shooting {
        cfg,
        secs: sections(cfg, word),
        e,
        settings,
        k2: 2 * (cfg.dimension() - 1),
    };
    let m = word.len();
    let mut u: Vec<f64> = guess.iter().zip(&sh.secs).flat_map(|(x, s)| s.chart(x)).collect();
    let (mut r, mut flights) = sh
        .residual(&u)
        .map_err(|err| Error::NoConvergence(format!("{word}: initial guess failed: {err}")))?;
    let mut trace = vec![r.norm()];
    let mut blocks;
    let mut iterations = 0;
    while r.amax() >= settings.tol {
        if iterations == settings.max_iter {
            return Err(Error::NoConvergence(format!(
                "{word}: residual {:.3e} after {iterations} iterations, trace [{}]",
                r.amax(),
                show_trace(&trace)
            )));
        }
        iterations += 1;
        blocks = sh.blocks(&u, &flights)?;
        let delta = sh
            .jacobian(&blocks)
            .lu()
            .solve(&(-&r))
            .ok_or_else(|| Error::NoConvergence(format!("{word}: singular shooting Jacobian")))?;
        // Armijo backtracking on ‖r‖₂
        let norm = r.norm();
        let mut lambda = 1.0;
        let accepted = loop {
            if lambda < 1e-6 {
                break None;
            }
            let trial: Vec<f64> = u.iter().zip(delta.iter()).map(|(a, d)| a + lambda * d).collect();
            if let Ok((rt, ft)) = sh.residual(&trial) {
                if rt.norm() <= (1.0 - 1e-4 * lambda) * norm {
                    break Some((trial, rt, ft));
                }
            }
            lambda *= 0.5;
        };
        match accepted {
            Some((trial, rt, ft)) => {
                u = trial;
                r = rt;
                flights = ft;
                trace.push(r.norm());
            }
            None => {
                // at the noise floor no descent is possible; accept if close enough
                if r.amax() < settings.tol {
                    break;
                }
                return Err(Error::NoConvergence(format!(
                    "{word}: line search failed at residual {:.3e}, trace [{}]",
                    r.amax(),
                    show_trace(&trace)
                )));
            }
        }
    }
    // one more full step while Newton still contracts
    blocks = sh.blocks(&u, &flights)?;
    if let Some(delta) = sh.jacobian(&blocks).lu().solve(&(-&r)) {
        let trial: Vec<f64> = u.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
        if let Ok((rt, ft)) = sh.residual(&trial) {
            if rt.amax() < r.amax() {
                u = trial;
                r = rt;
                flights = ft;
                trace.push(r.norm());
                blocks = sh.blocks(&u, &flights)?;
            }
        }
    }

    // itinerary: the flight leaving section i passes closest to k_{i+1}
    let found: Vec<usize> = flights.iter().map(|f| closest_centre(cfg, f.traj.samples())).collect();
    let expected: Vec<usize> = (0..m as isize).map(|i| word.at(i + 1)).collect();
    if found != expected {
        let show = |v: &[usize]| SymbolWord(v.to_vec()).rotate(m - 1).to_string();
        return Err(Error::WrongItinerary {
            expected: show(&expected),
            found: show(&found),
        });
    }

    let mut section_states = Vec::with_capacity(m);
    let mut events = vec![None; m];
    let mut t = 0.0;
    for (i, f) in flights.iter().enumerate() {
        let x = sh.secs[i].state(cfg, &u[i * sh.k2..(i + 1) * sh.k2], e, t)?;
        section_states.push(x);
        let j = (i + 1) % m;
        let mut ev = pericentre(cfg, &f.traj, word.at(j as isize))?;
        ev.time += t;
        ev.state.t = ev.time;
        events[j] = Some(ev);
        t += f.end.t;
    }
    let period = t;
    let events: Vec<PoincareEvent> = events.into_iter().map(|e| e.expect("one event per flight")).collect();

    let reduced = blocks.iter().fold(DMatrix::identity(sh.k2, sh.k2), |acc, b| b * acc);
    let inverse = sh
        .inverse_blocks(&u)?
        .iter()
        .fold(DMatrix::identity(sh.k2, sh.k2), |acc, b| acc * b);
    let section_multipliers = eigen_pairs(reduced);
    // the expanding half from the return map, the contracting half as
    // reciprocals of the expanding half of the inverse return map: small
    // eigenvalues of a matrix with large norm are not resolved directly
    let half = sh.k2 / 2;
    let mut multipliers = trivial_multipliers(cfg, &section_states[0], &flights[m - 1].end, period, settings)?;
    multipliers.extend(section_multipliers.iter().take(half));
    multipliers.extend(eigen_pairs(inverse).iter().take(half).map(|z| {
        let r2 = z[0] * z[0] + z[1] * z[1];
        [z[0] / r2, -z[1] / r2]
    }));

    let mut warnings = Vec::new();
    if iterations > settings.max_iter / 2 {
        warnings.push(format!(
            "slow Newton convergence ({iterations} iterations); energy may be below threshold"
        ));
    }
    Ok(PeriodicOrbit {
        word: word.clone(),
        energy: e,
        period,
        section_states,
        events,
        multipliers,
        section_multipliers,
        residual: r.amax(),
        iterations,
        trace,
        warnings,
    })
}

fn show_trace(t: &[f64]) -> String {
    t.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(", ")
}

fn closest_centre(cfg: &CentreConfig, samples: &[PhaseState]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for x in samples {
        for (k, s) in cfg.centres().iter().enumerate() {
            let d = (x.q - s).norm();
            if d < best.0 {
                best = (d, k);
            }
        }
    }
    best.1
}

/// Closest pericentre passage about centre k on a flight.
fn pericentre(cfg: &CentreConfig, traj: &Trajectory, k: usize) -> Result<PoincareEvent> {
    let s = cfg.centre(k);
    let best = find_level_crossings(traj, |x| (x.q - s).dot(&x.p))?
        .into_iter()
        .filter(|c| c.outward)
        .min_by(|a, b| (a.state.q - s).norm().total_cmp(&(b.state.q - s).norm()));
    Ok(match best {
        Some(c) => PoincareEvent {
            state: c.state,
            centre: k,
            time: c.time,
        },
        None => {
            let x = traj
                .samples()
                .iter()
                .min_by(|a, b| (a.q - s).norm().total_cmp(&(b.q - s).norm()))
                .copied()
                .unwrap_or(*traj.first());
            PoincareEvent {
                state: x,
                centre: k,
                time: x.t,
            }
        }
    })
}

/// Multipliers of the period map M along the flow direction f and across
/// energy levels. M f(x) = f(φ_T x) for the flow, so the first is
/// f(φ_T x)·f(x)/|f(x)|² with φ_T x the end of the last shooting leg; the second is dH(M n)/dH(n) for n = ∇H, by central
/// differences. H is conserved along every orbit, so the energy difference
/// survives the expansion of the perturbation and a coarse offset is safe. Both
/// equal 1 on an exact periodic orbit.
fn trivial_multipliers(
    cfg: &CentreConfig,
    x0: &PhaseState,
    x_end: &PhaseState,
    period: f64,
    settings: &ShootingSettings,
) -> Result<Vec<[f64; 2]>> {
    let field = |x: &PhaseState| -> Result<(Vec3, Vec3)> { Ok((x.p, -grad_potential(cfg, &x.q)?)) };
    let (f0, f1) = (field(x0)?, field(x_end)?);
    let n2 = f0.0.norm_squared() + f0.1.norm_squared();
    let mu_flow = (f1.0.dot(&f0.0) + f1.1.dot(&f0.1)) / n2;

    let (g, p) = (-f0.1, f0.0);
    // x ± h∇H shifts H by about ±h|∇H|², here a fraction of the kinetic energy
    let h = settings.energy_step * 0.5 * p.norm_squared() / (g.norm_squared() + p.norm_squared());
    let push = |eps: f64| -> Result<(f64, f64)> {
        let x = PhaseState::at(x0.q + g * eps, x0.p + p * eps, x0.t);
        let end = integrate_with(cfg, &x, period, &settings.integrator, Stop::Never)?;
        Ok((energy(cfg, &x)?, energy(cfg, end.last())?))
    };
    let ((a0, a1), (b0, b1)) = (push(h)?, push(-h)?);
    let mu_energy = (a1 - b1) / (a0 - b0);
    Ok(vec![[mu_flow, 0.0], [mu_energy, 0.0]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    pub word: SymbolWord,
    pub energy: f64,
    /// Largest and smallest modulus among the nontrivial multipliers.
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// |λ_i|·|λ'_i| for the reciprocal pairs, largest with smallest.
    pub pair_products: Vec<f64>,
    /// The two multipliers closest to 1 (flow direction and energy).
    pub unit_multipliers: Vec<[f64; 2]>,
    /// Max distance of the unit multipliers from 1.
    pub unit_deviation: f64,
    /// log|λ_max| per symbol.
    pub exponent_per_bounce: f64,
    /// Largest modulus from the section-to-section Jacobians, as a cross-check.
    pub section_lambda_max: f64,
    pub hyperbolic: bool,
}

pub fn hyperbolicity_report(orbit: &PeriodicOrbit) -> HyperbolicityReport {
    let modulus = |z: &[f64; 2]| z[0].hypot(z[1]);
    let dist1 = |z: &[f64; 2]| (z[0] - 1.0).hypot(z[1]);
    let mut mult = orbit.multipliers.clone();
    mult.sort_by(|a, b| dist1(a).total_cmp(&dist1(b)));
    let unit: Vec<[f64; 2]> = mult.iter().take(2).copied().collect();
    let mut rest: Vec<f64> = mult.iter().skip(2).map(modulus).collect();
    rest.sort_by(|a, b| b.total_cmp(a));
    let pair_products: Vec<f64> = (0..rest.len() / 2)
        .map(|i| rest[i] * rest[rest.len() - 1 - i])
        .collect();
    let lambda_max = rest.first().copied().unwrap_or(1.0);
    let lambda_min = rest.last().copied().unwrap_or(1.0);
    let section_lambda_max = orbit.section_multipliers.iter().map(modulus).fold(0.0, f64::max);
    HyperbolicityReport {
        word: orbit.word.clone(),
        energy: orbit.energy,
        lambda_max,
        lambda_min,
        pair_products,
        unit_deviation: unit.iter().map(dist1).fold(0.0, f64::max),
        unit_multipliers: unit,
        exponent_per_bounce: lambda_max.ln() / orbit.word.len() as f64,
        section_lambda_max,
        hyperbolic: lambda_max > 1.0 + 1e-6 && rest.iter().all(|&l| (l - 1.0).abs() > 1e-6),
    }
}

/// Hausdorff distance between the pericentre states of two orbits in (q, p).
/// Zero for the same orbit under any cyclic relabelling of its word.
pub fn orbit_separation(a: &PeriodicOrbit, b: &PeriodicOrbit) -> f64 {
    let d = |x: &PoincareEvent, y: &PoincareEvent| {
        ((x.state.q - y.state.q).norm_squared() + (x.state.p - y.state.p).norm_squared()).sqrt()
    };
    let one_way = |u: &[PoincareEvent], v: &[PoincareEvent]| {
        u.iter()
            .map(|x| v.iter().map(|y| d(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(&a.events, &b.events).max(one_way(&b.events, &a.events))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub m: usize,
    /// count_periodic_words(n, m).
    pub admissible: u64,
    /// Rotation classes, including repetitions of shorter words.
    pub classes: usize,
    /// Primitive classes on which shooting was run.
    pub attempted: usize,
    pub classes_realized: usize,
    /// Admissible sequences whose class is realised.
    pub realized: u64,
    /// Mean period per symbol over realised classes.
    pub mean_flight_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub energy: f64,
    pub centres: usize,
    pub m_max: usize,
    pub rows: Vec<EntropyRow>,
    /// Slope of log N_realized(m) against m·T̄_m.
    pub h_est: f64,
    /// max_m log N_realized(m) / (m·T̄_m).
    pub h_ratio_max: f64,
    pub orbits: Vec<PeriodicOrbit>,
    pub failures: Vec<(SymbolWord, String)>,
}

impl EntropyReport {
    pub fn fully_realized(&self) -> bool {
        self.failures.is_empty() && self.rows.iter().all(|r| r.realized == r.admissible)
    }
}

/// Primitive word classes of length 2..=m_max, shortest first.
pub fn atlas_words(n: usize, m_max: usize) -> Vec<SymbolWord> {
    (2..=m_max)
        .flat_map(|m| word_classes(n, m))
        .filter(|w| w.is_primitive())
        .collect()
}

/// Assembles the entropy table from shooting results for [`atlas_words`].
pub fn entropy_from_results(
    n: usize,
    e: f64,
    m_max: usize,
    results: Vec<(SymbolWord, Result<PeriodicOrbit>)>,
) -> EntropyReport {
    let mut orbits = Vec::new();
    let mut failures = Vec::new();
    for (w, r) in results {
        match r {
            Ok(o) => orbits.push(o),
            Err(err) => failures.push((w, err.to_string())),
        }
    }
    let find = |w: &SymbolWord| orbits.iter().find(|o| o.word == *w);
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for m in 2..=m_max {
        let classes = word_classes(n, m);
        let mut realized = 0u64;
        let mut classes_realized = 0;
        let mut flight = Vec::new();
        for w in &classes {
            if let Some(o) = find(&w.root()) {
                classes_realized += 1;
                realized += w.primitive_period() as u64;
                flight.push(o.period / o.word.len() as f64);
            }
        }
        let mean = (!flight.is_empty()).then(|| flight.iter().sum::<f64>() / flight.len() as f64);
        if let Some(t) = mean {
            points.push(((m as f64) * t, (realized as f64).ln()));
        }
        rows.push(EntropyRow {
            m,
            admissible: count_periodic_words(n, m),
            classes: classes.len(),
            attempted: classes.iter().filter(|w| w.is_primitive()).count(),
            classes_realized,
            realized,
            mean_flight_time: mean,
        });
    }
    let h_ratio_max = points.iter().map(|(x, y)| y / x).fold(0.0, f64::max);
    let h_est = if points.len() >= 2 {
        let k = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
        let my = points.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
        if sxx > 0.0 {
            sxy / sxx
        } else {
            0.0
        }
    } else {
        0.0
    };
    EntropyReport {
        energy: e,
        centres: n,
        m_max,
        rows,
        h_est,
        h_ratio_max,
        orbits,
        failures,
    }
}

/// Attempts every primitive word class up to length m_max and estimates the
/// topological entropy from the realised counts.
pub fn entropy_estimate(cfg: &CentreConfig, e: f64, m_max: usize, settings: &ShootingSettings) -> EntropyReport {
    let results = atlas_words(cfg.len(), m_max)
        .into_iter()
        .map(|w| {
            let r = find_periodic_orbit(cfg, &w, e, settings);
            (w, r)
        })
        .collect();
    entropy_from_results(cfg.len(), e, m_max, results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn triangle() -> CentreConfig {
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

    fn pair() -> CentreConfig {
        CentreConfig::new(
            2,
            vec![Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)],
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    fn word(s: &str) -> SymbolWord {
        s.parse().unwrap()
    }

    fn brute_metric(u: &SymbolWord, v: &SymbolWord) -> f64 {
        (-80isize..=80)
            .filter(|&i| u.at(i) != v.at(i))
            .map(|i| 0.5f64.powi(i.unsigned_abs() as i32))
            .sum()
    }

    fn brute_count(n: usize, m: usize) -> u64 {
        let mut count = 0;
        let mut w = vec![0usize; m];
        loop {
            if (0..m).all(|i| w[i] != w[(i + 1) % m]) {
                count += 1;
            }
            let mut i = 0;
            while i < m && w[i] == n - 1 {
                w[i] = 0;
                i += 1;
            }
            if i == m {
                return count;
            }
            w[i] += 1;
        }
    }

    #[test]
    fn parse_and_display() {
        for s in ["1-2-3", "1,2,3", "1 2 3", "123"] {
            assert_eq!(word(s).letters(), &[0, 1, 2]);
        }
        assert_eq!(word("2-1").to_string(), "2-1");
        assert!("1-0".parse::<SymbolWord>().is_err());
        let s = String::from(word("1-3-2"));
        assert_eq!(s, "1-3-2");
        assert_eq!(SymbolWord::try_from(s).unwrap(), word("1-3-2"));
    }

    #[test]
    fn admissibility() {
        assert!(word("1-2").validate(2).is_ok());
        assert!(matches!(word("1-1").validate(3), Err(Error::InadmissibleWord(_))));
        assert!(matches!(word("1-2-1").validate(3), Err(Error::InadmissibleWord(_))));
        assert!(word("1-4").validate(3).is_err());
        assert!(matches!(
            find_periodic_orbit(&triangle(), &word("1-1"), 40.0, &ShootingSettings::default()),
            Err(Error::InadmissibleWord(_))
        ));
    }

    #[test]
    fn metric_examples() {
        let (a, b) = (word("1-2"), word("1-3"));
        assert_eq!(symbol_metric(&a, &a), 0.0);
        assert!((symbol_metric(&a, &b) - 4.0 / 3.0).abs() < 1e-15);
        // all positions differ: 1 + 2·Σ 2^-i = 3
        assert!((symbol_metric(&word("1-2"), &word("2-1")) - 3.0).abs() < 1e-15);
        assert_eq!(window_metric(&[0, 1, 2], &[0, 1, 0], 1), 0.5);
    }

    #[test]
    fn counts_match_enumeration() {
        for n in 2..=5 {
            for m in 1..=8 {
                assert_eq!(count_periodic_words(n, m), brute_count(n, m), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn classes_match_rotation_orbits() {
        for n in 2usize..=4 {
            for m in 2..=6 {
                let mut reps = BTreeSet::new();
                let total = n.pow(m as u32);
                for code in 0..total {
                    let w: Vec<usize> = (0..m).map(|i| code / n.pow(i as u32) % n).collect();
                    if (0..m).all(|i| w[i] != w[(i + 1) % m]) {
                        let rots: BTreeSet<Vec<usize>> = (0..m)
                            .map(|k| w[k..].iter().chain(&w[..k]).copied().collect())
                            .collect();
                        reps.insert(rots.into_iter().next().unwrap());
                    }
                }
                let got: Vec<Vec<usize>> = word_classes(n, m).iter().map(|w| w.letters().to_vec()).collect();
                assert_eq!(got, reps.into_iter().collect::<Vec<_>>(), "n={n} m={m}");
            }
        }
        let three: Vec<String> = atlas_words(3, 3).iter().map(|w| w.to_string()).collect();
        assert_eq!(three, ["1-2", "1-3", "2-3", "1-2-3", "1-3-2"]);
        assert_eq!(word("1-2-1-2").root(), word("1-2"));
        assert_eq!(word("1-2-1-2").primitive_period(), 2);
    }

    proptest! {
        #[test]
        fn metric_matches_truncated_sum(
            u in prop::collection::vec(0usize..4, 1..7),
            v in prop::collection::vec(0usize..4, 1..7),
        ) {
            let (u, v) = (SymbolWord::new(u), SymbolWord::new(v));
            let d = symbol_metric(&u, &v);
            prop_assert!((d - brute_metric(&u, &v)).abs() < 1e-12);
            prop_assert!((d - symbol_metric(&v, &u)).abs() < 1e-15);
            prop_assert!(d <= 3.0 + 1e-12);
        }

        #[test]
        fn canonical_is_rotation_invariant(u in prop::collection::vec(0usize..4, 1..9), k in 0usize..9) {
            let w = SymbolWord::new(u);
            let c = w.canonical();
            prop_assert_eq!(w.rotate(k % w.len()).canonical(), c.clone());
            prop_assert!(c <= w);
            prop_assert_eq!(w.len() % w.primitive_period(), 0);
        }
    }

    #[test]
    fn polygon_guess_geometry() {
        let cfg = pair();
        let e = 20.0;
        for x in polygon_guess(&cfg, &word("1-2"), e).unwrap() {
            assert!(x.q.y.abs() < 1e-15 && x.p.y.abs() < 1e-15);
            assert!(x.q.x.abs() <= 1.0);
        }
        let cfg = triangle();
        for w in atlas_words(3, 4) {
            for x in polygon_guess(&cfg, &w, e).unwrap() {
                assert!((energy(&cfg, &x).unwrap() - e).abs() < 1e-12 * e);
            }
        }
    }

    #[test]
    fn guess_improves_with_energy() {
        let cfg = triangle();
        let settings = ShootingSettings::default();
        for w in ["1-2-3", "1-2-1-3"] {
            let w = word(w);
            let res: Vec<f64> = [10.0, 20.0, 40.0]
                .iter()
                .map(|&e| {
                    let sh = Shooting {
                        cfg: &cfg,
                        secs: sections(&cfg, &w),
                        e,
                        settings: &settings,
                        k2: 2,
                    };
                    let u: Vec<f64> = polygon_guess(&cfg, &w, e)
                        .unwrap()
                        .iter()
                        .zip(&sh.secs)
                        .flat_map(|(x, s)| s.chart(x))
                        .collect();
                    sh.residual(&u).unwrap().0.amax()
                })
                .collect();
            assert!(res[0] > res[1] && res[1] > res[2], "{w}: {res:?}");
        }
    }

    // period of the axis orbit by quadrature: 4∫_0^1 dx/√(2(E + 1/(1+x) + 1/(1−x))),
    // with 1 − x = w² to remove the endpoint singularity
    fn axis_period(e: f64) -> f64 {
        let f = |w: f64| {
            let x = 1.0 - w * w;
            2.0 * w * w / (2.0 * ((e + 1.0 / (1.0 + x)) * w * w + 1.0)).sqrt()
        };
        let n = 4000;
        let h = 1.0 / n as f64;
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        4.0 * s * h / 3.0
    }

    #[test]
    fn collinear_bounce_orbit() {
        let cfg = pair();
        let e = 10.0;
        let o = find_periodic_orbit(&cfg, &word("1-2"), e, &ShootingSettings::default()).unwrap();
        assert!(o.residual < 1e-9);
        for x in &o.section_states {
            assert!(x.q.y.abs() < 1e-8 && x.p.y.abs() < 1e-7, "{x:?}");
        }
        assert!(
            (o.period - axis_period(e)).abs() < 1e-7,
            "{} vs {}",
            o.period,
            axis_period(e)
        );
        assert_eq!(o.events.iter().map(|v| v.centre).collect::<Vec<_>>(), [0, 1]);
    }

    #[test]
    fn three_centre_orbit_spectrum() {
        let cfg = triangle();
        let s = ShootingSettings::default();
        let o = find_periodic_orbit(&cfg, &word("1-2-3"), 40.0, &s).unwrap();
        assert!(o.residual < s.tol);
        assert_eq!(o.multipliers.len(), 4);
        let r = hyperbolicity_report(&o);
        assert!(r.hyperbolic && r.lambda_max > 1.5);
        for p in &r.pair_products {
            assert!((p - 1.0).abs() < 1e-6, "{p}");
        }
        assert!(r.unit_deviation < 1e-4);
        assert!((r.lambda_max / r.section_lambda_max - 1.0).abs() < 1e-9);
        assert!(o.closure_residual(&cfg, &s).unwrap() < 10.0 * s.tol);
        assert_eq!(o.events.iter().map(|v| v.centre).collect::<Vec<_>>(), [0, 1, 2]);
        // the passage at k_0 closes the period
        let t: Vec<f64> = o.events.iter().map(|v| v.time).collect();
        assert!(0.0 < t[1] && t[1] < t[2] && t[2] < t[0] && t[0] < o.period, "{t:?}");
    }

    #[test]
    fn expansion_grows_with_energy() {
        let cfg = triangle();
        let s = ShootingSettings::default();
        let exp = |e: f64| {
            hyperbolicity_report(&find_periodic_orbit(&cfg, &word("1-2-3"), e, &s).unwrap()).exponent_per_bounce
        };
        assert!(exp(160.0) > exp(40.0));
    }

    #[test]
    fn shifted_word_gives_the_same_orbit() {
        let cfg = triangle();
        let s = ShootingSettings::default();
        let a = find_periodic_orbit(&cfg, &word("1-2-1-3"), 40.0, &s).unwrap();
        let b = find_periodic_orbit(&cfg, &word("2-1-3-1"), 40.0, &s).unwrap();
        assert!((a.period - b.period).abs() < 1e-8);
        for i in 0..4 {
            let (x, y) = (&a.section_states[(i + 1) % 4], &b.section_states[i]);
            assert!((x.q - y.q).norm() < 1e-7 && (x.p - y.p).norm() < 1e-6, "{i}");
        }
        assert!(orbit_separation(&a, &b) < 1e-6);
    }

    #[test]
    fn distinct_words_give_distinct_orbits() {
        let cfg = triangle();
        let s = ShootingSettings::default();
        let orbits: Vec<PeriodicOrbit> = atlas_words(3, 3)
            .iter()
            .map(|w| find_periodic_orbit(&cfg, w, 40.0, &s).unwrap())
            .collect();
        for (i, a) in orbits.iter().enumerate() {
            for b in &orbits[i + 1..] {
                assert!(orbit_separation(a, b) > 1e-2, "{} {}", a.word, b.word);
            }
        }
    }

    #[test]
    fn entropy_of_two_and_three_centres() {
        let s = ShootingSettings::default();
        let two = entropy_estimate(&pair(), 20.0, 4, &s);
        assert!(two.fully_realized());
        assert_eq!(two.orbits.len(), 1);
        assert_eq!(two.h_est, 0.0);

        // N(2) = N(3) = 6, growth shows from m = 4
        let three = entropy_estimate(&triangle(), 40.0, 4, &s);
        assert!(three.fully_realized(), "{:?}", three.failures);
        assert!(three.h_est > 0.0);
        for r in &three.rows {
            assert!(r.realized <= count_periodic_words(3, r.m));
        }
    }

    #[test]
    fn failure_reports_trace() {
        let s = ShootingSettings {
            max_iter: 1,
            ..Default::default()
        };
        match find_periodic_orbit(&triangle(), &word("1-2-1-3"), 40.0, &s) {
            Err(Error::NoConvergence(msg)) => assert!(msg.contains("trace ["), "{msg}"),
            other => panic!("{other:?}"),
        }
    }
}
