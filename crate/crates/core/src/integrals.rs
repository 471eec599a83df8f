//! Gevrey-type integrals of motion built from the asymptotic momentum and
//! the time delay, finite-difference Poisson brackets and rank diagnostics,
//! and the classical integrals of the two-centre problem.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{energy, CentreConfig, PhaseState};
use crate::scattering::{scatter_record, OrbitClass, ScatterSettings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevreyParams {
    /// Gevrey index g > 1.
    pub g: f64,
    /// Flow-estimate constant C2 > 0.
    pub c2: f64,
    /// Energy window [E1, E2].
    pub energy_window: Option<(f64, f64)>,
}

impl Default for GevreyParams {
    fn default() -> Self {
        Self {
            g: 2.0,
            c2: 1.0,
            energy_window: None,
        }
    }
}

impl GevreyParams {
    /// C(g) = C2 / (g − 1).
    pub fn c(&self) -> f64 {
        self.c2 / (self.g - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "Gevrey index must exceed 1, got {}",
                self.g
            )));
        }
        if !(self.c2 > 0.0) {
            return Err(Error::InvalidConfig("C2 must be positive".into()));
        }
        if let Some((lo, hi)) = self.energy_window {
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::InvalidConfig(format!(
                    "energy window [{lo}, {hi}] must satisfy 0 < E1 <= E2"
                )));
            }
        }
        Ok(())
    }

    /// exp(C·⟨τ⟩) with ⟨τ⟩ = √(1 + τ²): the exponent of the damping factor.
    pub fn damping_exponent(&self, tau: f64) -> f64 {
        (self.c() * tau.hypot(1.0)).exp()
    }
}

/// (f_k, log|f_k|) for k = 1..=ncomp from p⁺ and τ.
pub fn gevrey_from_asymptotics(
    params: &GevreyParams,
    p_plus: &crate::model::Vec3,
    tau: f64,
    ncomp: usize,
) -> (Vec<f64>, Vec<f64>) {
    let ex = params.damping_exponent(tau);
    let damp = (-ex).exp();
    let vals = (0..ncomp).map(|k| p_plus[k] * damp).collect();
    let logs = (0..ncomp).map(|k| p_plus[k].abs().ln() - ex).collect();
    (vals, logs)
}

/// Values of (f_0, f_1, …, f_{d−1}) at one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GevreyValue {
    /// f_0 = H followed by f_k, k = 1..d−1.
    pub values: Vec<f64>,
    /// log|f_k| for k = 1..d−1.
    pub log_values: Vec<f64>,
    pub class: OrbitClass,
    /// Set when the orbit neither escaped nor was trapped within the horizon:
    /// the value 0 is then a horizon artefact, not a certainty.
    pub ambiguous: bool,
    pub tau: Option<f64>,
}

/// The Gevrey integrals at x; f_k = 0 off the scattering set.
pub fn gevrey_integral(
    cfg: &CentreConfig,
    x: &PhaseState,
    params: &GevreyParams,
    settings: &ScatterSettings,
) -> Result<GevreyValue> {
    params.validate()?;
    let h = energy(cfg, x)?;
    if let Some((lo, hi)) = params.energy_window {
        if h < lo || h > hi {
            return Err(Error::EnergyOutsideWindow { energy: h, lo, hi });
        }
    }
    let rec = scatter_record(cfg, x, settings, params)?;
    let mut values = vec![h];
    values.extend(&rec.gevrey);
    Ok(GevreyValue {
        values,
        log_values: rec.log_gevrey,
        class: rec.classification.class,
        ambiguous: rec.classification.class == OrbitClass::BoundedToHorizon,
        tau: rec.tau,
    })
}

/// Canonical Poisson bracket Σ_i ∂a/∂q_i ∂b/∂p_i − ∂a/∂p_i ∂b/∂q_i of two
/// gradients in coordinates (q_1..q_d, p_1..p_d).
pub fn bracket_from_gradients(ga: &[f64], gb: &[f64]) -> f64 {
    let d = ga.len() / 2;
    (0..d).map(|i| ga[i] * gb[d + i] - ga[d + i] * gb[i]).sum()
}

/// Finite-difference Jacobian of a vector functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdJacobian {
    /// rows[m][i] = ∂F_m/∂x_i.
    pub rows: Vec<Vec<f64>>,
    /// Per-entry difference between the Richardson value and the plain
    /// central difference at half step; an estimate of the attained accuracy.
    pub noise: Vec<Vec<f64>>,
    /// Step finally used.
    pub step: f64,
}

/// Central differences at steps h and h/2 combined by one Richardson level.
///
/// When `f` fails at a stencil point the step is halved, down to `step_min`.
pub fn fd_jacobian<F>(f: F, x: &[f64], step: f64, step_min: f64) -> Result<FdJacobian>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut h = step;
    loop {
        match fd_jacobian_at(&f, x, h) {
            Ok(j) => return Ok(j),
            Err(e) => {
                h *= 0.5;
                if h < step_min {
                    return Err(Error::StencilFailure(format!("step below {step_min:e}: {e}")));
                }
            }
        }
    }
}

fn fd_jacobian_at<F>(f: &F, x: &[f64], h: f64) -> Result<FdJacobian>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    let mut noise_cols = Vec::with_capacity(n);
    for i in 0..n {
        let eval = |delta: f64| -> Result<Vec<f64>> {
            let mut y = x.to_vec();
            y[i] += delta;
            f(&y)
        };
        let central = |a: &[f64], b: &[f64], hh: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(u, v)| (u - v) / (2.0 * hh)).collect()
        };
        let (p1, m1) = (eval(h)?, eval(-h)?);
        let (p2, m2) = (eval(0.5 * h)?, eval(-0.5 * h)?);
        let d1 = central(&p1, &m1, h);
        let d2 = central(&p2, &m2, 0.5 * h);
        let rich: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
        noise_cols.push(rich.iter().zip(&d2).map(|(r, b)| (r - b).abs()).collect::<Vec<_>>());
        cols.push(rich);
    }
    let m = cols.first().map(|c| c.len()).unwrap_or(0);
    let rows = (0..m).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
    let noise = (0..m).map(|r| noise_cols.iter().map(|c| c[r]).collect()).collect();
    Ok(FdJacobian { rows, noise, step: h })
}

/// Poisson bracket of two scalar functionals by finite differences.
///
/// Returns ({a, b}, ‖∇a‖·‖∇b‖).
pub fn poisson_bracket<A, B>(a: A, b: B, x: &[f64], step: f64) -> Result<(f64, f64)>
where
    A: Fn(&[f64]) -> Result<f64>,
    B: Fn(&[f64]) -> Result<f64>,
{
    let j = fd_jacobian(|y| Ok(vec![a(y)?, b(y)?]), x, step, step * 1e-3)?;
    let value = bracket_from_gradients(&j.rows[0], &j.rows[1]);
    Ok((value, norm(&j.rows[0]) * norm(&j.rows[1])))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Gevrey components rescaled by the damping factor at a reference τ0, so
/// finite differences stay above the underflow threshold. Relative brackets
/// and ranks are unchanged by the constant rescaling.
pub fn scaled_gevrey(
    cfg: &CentreConfig,
    coords: &[f64],
    params: &GevreyParams,
    settings: &ScatterSettings,
    tau0: f64,
) -> Result<Vec<f64>> {
    let d = cfg.dimension();
    let x = PhaseState::from_coords(d, coords, 0.0);
    let h = energy(cfg, &x)?;
    let rec = scatter_record(cfg, &x, settings, params)?;
    if !rec.is_scattering() {
        return Err(Error::StencilFailure(format!(
            "stencil point is {}",
            rec.classification.class.as_str()
        )));
    }
    let pp = rec.p_plus.expect("scattering record has p+");
    let tau = rec.tau.expect("scattering record has tau");
    let rel = params.damping_exponent(tau) - params.damping_exponent(tau0);
    let damp = (-rel).exp();
    let mut out = vec![h];
    out.extend((0..d - 1).map(|k| pp[k] * damp));
    Ok(out)
}

/// Relative brackets and Jacobian of (f_0, …, f_{d−1}) at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub point: Vec<f64>,
    pub tau: f64,
    /// (a, b, {f_a, f_b}, ‖∇f_a‖‖∇f_b‖) for all a < b.
    pub brackets: Vec<(usize, usize, f64, f64)>,
    /// Singular values of the row-normalised Jacobian, descending.
    pub singular_values: Vec<f64>,
    /// Largest normalised finite-difference accuracy estimate.
    pub noise: f64,
    pub step: f64,
}

impl PointDiagnostics {
    pub fn relative_bracket(&self, a: usize, b: usize) -> Option<f64> {
        self.brackets
            .iter()
            .find(|t| t.0 == a && t.1 == b)
            .map(|t| (t.2 / t.3).abs())
    }

    /// Rank test: smallest singular value above 1e3 × the noise floor.
    pub fn full_rank(&self) -> bool {
        let floor = self.noise.max(f64::EPSILON);
        self.singular_values.last().is_some_and(|&s| s > 1e3 * floor)
    }
}

/// Finite-difference diagnostics of the Gevrey integrals at a scattering state.
pub fn gevrey_diagnostics(
    cfg: &CentreConfig,
    x: &PhaseState,
    params: &GevreyParams,
    settings: &ScatterSettings,
    rel_step: f64,
) -> Result<PointDiagnostics> {
    let d = cfg.dimension();
    let coords = x.coords(d);
    let rec = scatter_record(cfg, x, settings, params)?;
    let tau0 = rec
        .tau
        .ok_or_else(|| Error::NotScattering(rec.classification.class.as_str().into()))?;
    let scale = coords.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let step = rel_step * scale;
    let jac = fd_jacobian(
        |y| scaled_gevrey(cfg, y, params, settings, tau0),
        &coords,
        step,
        step * 1e-3,
    )?;
    let m = jac.rows.len();
    let mut brackets = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let v = bracket_from_gradients(&jac.rows[a], &jac.rows[b]);
            brackets.push((a, b, v, norm(&jac.rows[a]) * norm(&jac.rows[b])));
        }
    }
    let (singular_values, noise) = normalised_singular_values(&jac);
    Ok(PointDiagnostics {
        point: coords,
        tau: tau0,
        brackets,
        singular_values,
        noise,
        step: jac.step,
    })
}

fn normalised_singular_values(jac: &FdJacobian) -> (Vec<f64>, f64) {
    let m = jac.rows.len();
    let n = jac.rows.first().map(|r| r.len()).unwrap_or(0);
    let mut noise: f64 = 0.0;
    let mat = DMatrix::from_fn(m, n, |r, c| {
        let nr = norm(&jac.rows[r]).max(1e-300);
        jac.rows[r][c] / nr
    });
    for r in 0..m {
        let nr = norm(&jac.rows[r]).max(1e-300);
        noise = noise.max(norm(&jac.noise[r]) / nr);
    }
    let mut sv: Vec<f64> = mat.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    (sv, noise)
}

/// Rank statistics of a set of Jacobians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankStats {
    pub points: usize,
    pub full_rank: usize,
    pub fraction: f64,
    pub min_singular_value: f64,
    pub max_noise: f64,
}

/// Full-rank fraction of the Jacobian of (f_0, …, f_{d−1}) over `points`.
pub fn independence_rank(
    cfg: &CentreConfig,
    params: &GevreyParams,
    settings: &ScatterSettings,
    points: &[PhaseState],
    rel_step: f64,
) -> Result<(RankStats, Vec<PointDiagnostics>)> {
    let diags = points
        .iter()
        .map(|x| gevrey_diagnostics(cfg, x, params, settings, rel_step))
        .collect::<Result<Vec<_>>>()?;
    Ok((rank_stats(&diags), diags))
}

pub fn rank_stats(diags: &[PointDiagnostics]) -> RankStats {
    let full = diags.iter().filter(|d| d.full_rank()).count();
    RankStats {
        points: diags.len(),
        full_rank: full,
        fraction: if diags.is_empty() {
            0.0
        } else {
            full as f64 / diags.len() as f64
        },
        min_singular_value: diags
            .iter()
            .filter_map(|d| d.singular_values.last().copied())
            .fold(f64::INFINITY, f64::min),
        max_noise: diags.iter().map(|d| d.noise).fold(0.0, f64::max),
    }
}

/// Brackets of a named pair evaluated at a list of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub pair: (String, String),
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// ‖∇a‖·‖∇b‖ per point.
    pub scales: Vec<f64>,
    pub steps: Vec<f64>,
}

impl BracketReport {
    pub fn from_diagnostics(diags: &[PointDiagnostics], a: usize, b: usize) -> Self {
        let mut r = BracketReport {
            pair: (format!("f{a}"), format!("f{b}")),
            points: Vec::new(),
            values: Vec::new(),
            scales: Vec::new(),
            steps: Vec::new(),
        };
        for d in diags {
            if let Some(t) = d.brackets.iter().find(|t| t.0 == a && t.1 == b) {
                r.points.push(d.point.clone());
                r.values.push(t.2);
                r.scales.push(t.3);
                r.steps.push(d.step);
            }
        }
        r
    }

    pub fn max_relative(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.scales)
            .map(|(v, s)| (v / s).abs())
            .fold(0.0, f64::max)
    }
}

/// Separation constant of the two-centre problem,
/// G = L_1·L_2 + (s_2 − s_1)·(Z_1 û_1 − Z_2 û_2) with u_i = q − s_i and
/// L_i = u_i × p. It reduces to ‖L‖² when the centres merge.
pub fn two_centre_constant(cfg: &CentreConfig, x: &PhaseState) -> Result<f64> {
    if cfg.len() != 2 {
        return Err(Error::NotTwoCentres(cfg.len()));
    }
    let (s1, s2) = (cfg.centre(0), cfg.centre(1));
    let (z1, z2) = (cfg.charge(0), cfg.charge(1));
    let u1 = x.q - s1;
    let u2 = x.q - s2;
    let l1 = u1.cross(&x.p);
    let l2 = u2.cross(&x.p);
    Ok(l1.dot(&l2) + (s2 - s1).dot(&(u1 * (z1 / u1.norm()) - u2 * (z2 / u2.norm()))))
}

/// Angular momentum about the common line of collinear centres.
pub fn axial_angular_momentum(cfg: &CentreConfig, x: &PhaseState) -> Result<f64> {
    let axis = cfg.collinear_axis().ok_or(Error::NotCollinear)?;
    Ok((x.q - cfg.centre(0)).cross(&x.p).dot(&axis))
}
