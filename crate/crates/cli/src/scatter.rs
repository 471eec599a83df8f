//! Batch drivers over the configured grid of incoming states.

use ncentre::{classify, scatter_record, Classification, PhaseState, ScatterRecord};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{csv_field, csv_preamble, float};

/// Runs `f` over `items` on a pool of `jobs` workers, keeping input order.
pub fn par_map<T, U, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    Ok(pool.install(|| items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect()))
}

pub struct ScatterRow {
    pub id: usize,
    pub initial: PhaseState,
    pub outcome: std::result::Result<ScatterRecord, String>,
}

pub fn scatter_rows(cfg: &RunConfig) -> Result<Vec<ScatterRow>> {
    let centres = cfg.centre_config()?;
    let states = cfg.batch_states(&centres)?;
    let settings = cfg.scatter_settings();
    let params = cfg.gevrey_params();
    par_map(cfg.output.jobs, &states, |id, x| ScatterRow {
        id,
        initial: *x,
        outcome: scatter_record(&centres, x, &settings, &params).map_err(|e| e.to_string()),
    })
}

fn push_all(row: &mut Vec<String>, values: impl IntoIterator<Item = f64>) {
    row.extend(values.into_iter().map(float));
}

/// One CSV line per grid state, ordered by id.
pub fn scatter_csv(cfg: &RunConfig, rows: &[ScatterRow]) -> String {
    let d = cfg.centres.dimension;
    let ncomp = d - 1;
    let axis = |prefix: &str, n: usize| (0..n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>();
    let mut header = vec!["id".to_string()];
    header.extend(axis("q", d));
    header.extend(axis("p", d));
    header.extend(["E", "class", "tau", "tau_err"].map(String::from));
    header.extend(axis("pplus", d));
    header.extend(axis("pminus", d));
    header.extend((1..=ncomp).map(|k| format!("f{k}")));
    header.extend((1..=ncomp).map(|k| format!("logf{k}")));
    header.push("flags".into());

    let mut out = csv_preamble("scatter", cfg);
    out.push_str(&header.join(","));
    out.push('\n');
    for r in rows {
        let mut row = vec![r.id.to_string()];
        let c = r.initial.coords(d);
        push_all(&mut row, c.iter().copied());
        match &r.outcome {
            Ok(rec) => {
                row.push(float(rec.energy));
                row.push(rec.classification.class.as_str().into());
                row.push(float(rec.tau.unwrap_or(f64::NAN)));
                row.push(float(rec.tau_error.unwrap_or(f64::NAN)));
                for p in [rec.p_plus, rec.p_minus] {
                    match p {
                        Some(v) => push_all(&mut row, v.iter().take(d).copied()),
                        None => push_all(&mut row, vec![f64::NAN; d]),
                    }
                }
                push_all(&mut row, rec.gevrey.iter().copied());
                push_all(&mut row, rec.log_gevrey.iter().copied());
                row.push(csv_field(&rec.flags.join(";")));
            }
            Err(msg) => {
                push_all(&mut row, [f64::NAN]);
                row.push("error".into());
                push_all(&mut row, vec![f64::NAN; 2 + 2 * d + 2 * ncomp]);
                row.push(csv_field(&format!("error: {msg}")));
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn classify_rows(cfg: &RunConfig) -> Result<Vec<(PhaseState, std::result::Result<Classification, String>)>> {
    let centres = cfg.centre_config()?;
    let states = cfg.batch_states(&centres)?;
    par_map(cfg.output.jobs, &states, |_, x| {
        (
            *x,
            classify(&centres, x, cfg.scatter.horizon, &cfg.integrator).map_err(|e| e.to_string()),
        )
    })
}

pub fn classify_csv(cfg: &RunConfig, rows: &[(PhaseState, std::result::Result<Classification, String>)]) -> String {
    let d = cfg.centres.dimension;
    let mut header = vec!["id".to_string()];
    header.extend((0..d).map(|i| format!("q{i}")));
    header.extend((0..d).map(|i| format!("p{i}")));
    header.extend(["class", "horizon", "escape_forward", "escape_backward", "flags"].map(String::from));
    let mut out = csv_preamble("classify", cfg);
    out.push_str(&header.join(","));
    out.push('\n');
    for (id, (x, c)) in rows.iter().enumerate() {
        let mut row = vec![id.to_string()];
        push_all(&mut row, x.coords(d));
        match c {
            Ok(c) => {
                row.push(c.class.as_str().into());
                push_all(
                    &mut row,
                    [
                        c.horizon,
                        c.escape_forward.unwrap_or(f64::NAN),
                        c.escape_backward.unwrap_or(f64::NAN),
                    ],
                );
                row.push(String::new());
            }
            Err(msg) => {
                row.push("error".into());
                push_all(&mut row, [f64::NAN; 3]);
                row.push(csv_field(&format!("error: {msg}")));
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
