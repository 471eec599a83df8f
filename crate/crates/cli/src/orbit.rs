//! Periodic orbit atlas and entropy table.

use ncentre::symbolic::entropy_from_results;
use ncentre::{
    atlas_words, find_periodic_orbit, hyperbolicity_report, EntropyReport, HyperbolicityReport, PeriodicOrbit,
    SymbolWord,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{csv_preamble, float};
use crate::scatter::par_map;

#[derive(Debug, Clone, Serialize)]
pub struct AtlasEntry {
    pub word: String,
    pub realized: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit: Option<PeriodicOrbit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hyperbolicity: Option<HyperbolicityReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Atlas {
    pub energy: f64,
    pub centres: usize,
    pub attempted: usize,
    pub realized: usize,
    pub entries: Vec<AtlasEntry>,
}

impl Atlas {
    pub fn complete(&self) -> bool {
        self.realized == self.attempted
    }
}

/// Shoots every word (configured, or all classes up to m_max) in parallel.
pub fn shoot_words(cfg: &RunConfig) -> Result<Vec<(SymbolWord, ncentre::Result<PeriodicOrbit>)>> {
    let centres = cfg.centre_config()?;
    if centres.len() < 2 {
        return Err(CliError::Validation("periodic orbits need at least two centres".into()));
    }
    let mut words = cfg.words(&centres)?;
    if words.is_empty() {
        words = atlas_words(centres.len(), cfg.symbolic.m_max);
    }
    let settings = cfg.shooting_settings();
    let e = cfg.energy.value;
    let orbits = par_map(cfg.output.jobs, &words, |_, w| {
        find_periodic_orbit(&centres, w, e, &settings)
    })?;
    Ok(words.into_iter().zip(orbits).collect())
}

pub fn atlas(cfg: &RunConfig, results: &[(SymbolWord, ncentre::Result<PeriodicOrbit>)]) -> Atlas {
    let entries: Vec<AtlasEntry> = results
        .iter()
        .map(|(w, r)| match r {
            Ok(o) => AtlasEntry {
                word: w.to_string(),
                realized: true,
                error: None,
                orbit: Some(o.clone()),
                hyperbolicity: Some(hyperbolicity_report(o)),
            },
            Err(e) => AtlasEntry {
                word: w.to_string(),
                realized: false,
                error: Some(e.to_string()),
                orbit: None,
                hyperbolicity: None,
            },
        })
        .collect();
    Atlas {
        energy: cfg.energy.value,
        centres: cfg.centres.charges.len(),
        attempted: entries.len(),
        realized: entries.iter().filter(|e| e.realized).count(),
        entries,
    }
}

/// Entropy table, only meaningful when `results` covers all classes up to m_max.
pub fn entropy(cfg: &RunConfig, results: Vec<(SymbolWord, ncentre::Result<PeriodicOrbit>)>) -> EntropyReport {
    entropy_from_results(cfg.centres.charges.len(), cfg.energy.value, cfg.symbolic.m_max, results)
}

pub fn entropy_csv(cfg: &RunConfig, report: &EntropyReport) -> String {
    let mut out = csv_preamble("entropy", cfg);
    out.push_str(&format!(
        "# h_est {}\n# h_ratio_max {}\n",
        float(report.h_est),
        float(report.h_ratio_max)
    ));
    out.push_str("m,admissible,classes,attempted,classes_realized,realized,mean_flight_time\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.m,
            r.admissible,
            r.classes,
            r.attempted,
            r.classes_realized,
            r.realized,
            float(r.mean_flight_time.unwrap_or(f64::NAN))
        ));
    }
    out
}
