//! Formatting shared by all subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::Result;

/// 17 significant digits, so every value round-trips bit-exactly.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Normalised configuration without the settings that cannot change results
/// (worker count and output directory).
pub fn provenance(cfg: &RunConfig) -> String {
    let mut table = toml::Table::try_from(cfg).expect("configuration serialises");
    if let Some(toml::Value::Table(out)) = table.get_mut("output") {
        out.remove("jobs");
        out.remove("dir");
    }
    toml::to_string(&table).expect("table serialises")
}

/// `#` comment lines carrying the provenance configuration and its hash.
pub fn csv_preamble(command: &str, cfg: &RunConfig) -> String {
    let dump = provenance(cfg);
    let mut out = format!("# ncentre {command}\n# config-sha256 {}\n", sha256_hex(&dump));
    for line in dump.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// Commas and line breaks would break the row structure.
pub fn csv_field(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            ',' | '\n' | '\r' => ' ',
            c => c,
        })
        .collect()
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config_sha256: String,
    config: String,
    result: &'a T,
}

/// JSON document with the normalised configuration embedded.
pub fn json_document<T: Serialize>(command: &str, cfg: &RunConfig, result: &T) -> String {
    let config = provenance(cfg);
    let env = Envelope {
        command,
        config_sha256: sha256_hex(&config),
        config,
        result,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("result serialises");
    s.push('\n');
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}
