//! Bracket and rank diagnostics at sampled scattering states.

use ncentre::integrals::{gevrey_diagnostics, rank_stats, BracketReport, PointDiagnostics, RankStats};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::scatter::par_map;

#[derive(Debug, Clone, Serialize)]
pub struct IntegralsReport {
    pub requested: usize,
    pub candidates: usize,
    pub rank: RankStats,
    pub brackets: Vec<BracketSummary>,
    pub points: Vec<PointDiagnostics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BracketSummary {
    pub max_relative: f64,
    pub report: BracketReport,
}

/// Draws random impact offsets in the batch ranges until `n` scattering
/// states have been diagnosed. Candidates are drawn in rounds from one
/// seeded stream and kept in draw order, so the result does not depend on
/// the worker count.
pub fn sample_diagnostics(cfg: &RunConfig, n: usize, seed: u64) -> Result<(Vec<PointDiagnostics>, usize)> {
    let centres = cfg.centre_config()?;
    let settings = cfg.scatter_settings();
    let params = cfg.gevrey_params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found = Vec::new();
    let mut drawn = 0;
    while found.len() < n && drawn < 50 * n.max(1) {
        let round = 2 * (n - found.len());
        let mut states = Vec::with_capacity(round);
        for _ in 0..round {
            let offsets: Vec<f64> = cfg
                .batch
                .ranges
                .iter()
                .map(|&[lo, hi]| rng.random_range(lo..=hi))
                .collect();
            drawn += 1;
            if let Ok(x) = cfg.batch_state_at(&centres, &offsets) {
                states.push(x);
            }
        }
        let diags = par_map(cfg.output.jobs, &states, |_, x| {
            gevrey_diagnostics(&centres, x, &params, &settings, cfg.integrals.rel_step).ok()
        })?;
        found.extend(diags.into_iter().flatten());
    }
    found.truncate(n);
    Ok((found, drawn))
}

pub fn report(diags: Vec<PointDiagnostics>, requested: usize, candidates: usize) -> IntegralsReport {
    let m = diags.first().map_or(0, |d| d.singular_values.len());
    let mut brackets = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let report = BracketReport::from_diagnostics(&diags, a, b);
            brackets.push(BracketSummary {
                max_relative: report.max_relative(),
                report,
            });
        }
    }
    IntegralsReport {
        requested,
        candidates,
        rank: rank_stats(&diags),
        brackets,
        points: diags,
    }
}

pub fn run(cfg: &RunConfig, seed: u64) -> Result<IntegralsReport> {
    let n = cfg.integrals.points;
    let (diags, drawn) = sample_diagnostics(cfg, n, seed)?;
    Ok(report(diags, n, drawn))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_report_has_one_pair() {
        let mut cfg = RunConfig::default();
        cfg.integrals.points = 2;
        let r = run(&cfg, 7).unwrap();
        assert_eq!(r.points.len(), 2);
        assert_eq!(r.brackets.len(), 1);
        assert_eq!(r.brackets[0].report.pair, ("f0".to_string(), "f1".to_string()));
        assert!(r.brackets[0].max_relative < 1e-5);
        assert_eq!(r.rank.full_rank, 2);
    }

    #[test]
    fn sampling_ignores_worker_count() {
        let mut cfg = RunConfig::default();
        cfg.integrals.points = 3;
        let a = run(&cfg, 3).unwrap();
        cfg.output.jobs = 3;
        let b = run(&cfg, 3).unwrap();
        let pa: Vec<_> = a.points.iter().map(|d| d.point.clone()).collect();
        let pb: Vec<_> = b.points.iter().map(|d| d.point.clone()).collect();
        assert_eq!(pa, pb);
    }
}
