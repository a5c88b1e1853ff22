//! CSV and JSON files for branch artifacts.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::BranchArtifact;
use crate::CliError;

pub const POINT_COLUMNS: [&str; 11] = [
    "tau",
    "xi",
    "ordinate",
    "index",
    "theta0",
    "theta1",
    "theta_prime_0",
    "theta_prime_1",
    "x1",
    "y1",
    "energy",
];

pub const FOLD_COLUMNS: [&str; 8] = [
    "tau_star",
    "xi_star",
    "xi_ddot_sign",
    "ordinate_slope_sign",
    "index_before",
    "index_after",
    "mu_min_at_fold",
    "verdict",
];

/// One parsed row of a branch CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub tau: f64,
    pub xi: f64,
    pub ordinate: f64,
    pub index: usize,
    pub theta0: f64,
    pub theta1: f64,
    pub theta_prime_0: f64,
    pub theta_prime_1: f64,
    pub x1: f64,
    pub y1: f64,
    pub energy: f64,
}

/// 17 significant digits, enough to recover every `f64` exactly.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(artifact: &BranchArtifact, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(POINT_COLUMNS)?;
    for p in &artifact.points {
        w.write_record([
            fmt17(p.tau),
            fmt17(p.xi),
            fmt17(p.ordinate),
            p.index.to_string(),
            fmt17(p.theta0),
            fmt17(p.theta1),
            fmt17(p.theta_prime_0),
            fmt17(p.theta_prime_1),
            fmt17(p.x1),
            fmt17(p.y1),
            fmt17(p.energy),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_folds_csv<W: Write>(artifact: &BranchArtifact, out: W) -> Result<(), CliError> {
    let opt = |v: Option<usize>| v.map(|k| k.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FOLD_COLUMNS)?;
    for f in &artifact.folds {
        let (mu, verdict) = match &f.validation {
            Some(v) => (fmt17(v.mu_at_fold), v.verdict.as_str().to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            fmt17(f.tau_star),
            fmt17(f.xi_star),
            f.xi_ddot_sign.to_string(),
            f.ordinate_slope_sign.to_string(),
            opt(f.index_before),
            opt(f.index_after),
            mu,
            verdict,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a branch CSV, checking the header against the fixed schema.
pub fn parse_csv<R: Read>(input: R) -> Result<Vec<CsvRow>, CliError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != POINT_COLUMNS {
        return Err(CliError::Config(format!(
            "unexpected CSV header {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

pub fn write_manifest(artifact: &BranchArtifact, path: &Path) -> Result<(), CliError> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), artifact)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<BranchArtifact, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
