//! Flat CSV/JSON records written to `--out`.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use randla_core::bench::{BoundKind, TailCheckReport, TrialStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `json` for a `.json` path, `csv` otherwise.
    pub fn infer(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

pub fn write_records<T: Serialize>(path: &Path, format: Format, records: &[T]) -> anyhow::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut f = File::create(path)?;
            serde_json::to_writer_pretty(&mut f, records)?;
            writeln!(f)?;
        }
    }
    Ok(())
}

/// Columns `n, refine, multiplier, trials, min, max, mean, std`.
#[derive(Debug, Serialize)]
pub struct GenpRecord {
    pub check: &'static str,
    pub n: usize,
    pub refine: usize,
    pub multiplier: String,
    pub seed: u64,
    pub trials: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

/// Columns `q, statistic (rn1|rn2), n, multiplier, trials, min, max, mean, std`.
#[derive(Debug, Serialize)]
pub struct LowrankRecord {
    pub check: &'static str,
    pub q: usize,
    pub statistic: &'static str,
    pub n: usize,
    pub multiplier: String,
    pub seed: u64,
    pub trials: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

impl LowrankRecord {
    pub fn new(q: usize, statistic: &'static str, n: usize, multiplier: &str, seed: u64, s: &TrialStats) -> Self {
        Self {
            check: "lowrank",
            q,
            statistic,
            n,
            multiplier: multiplier.to_string(),
            seed,
            trials: s.n_trials,
            min: s.min,
            max: s.max,
            mean: s.mean,
            std: s.std,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct NrankRecord {
    pub check: &'static str,
    pub source: String,
    pub rows: usize,
    pub cols: usize,
    pub rho_minus: usize,
    pub rho_plus: usize,
    pub policy: String,
    pub method: String,
    pub kappa: f64,
    pub seed: u64,
    pub rho: usize,
    pub probes: usize,
}

#[derive(Debug, Serialize)]
pub struct TtRecord {
    pub check: &'static str,
    pub source: String,
    pub method: String,
    pub dims: String,
    pub ranks: String,
    pub oversample: usize,
    pub seed: u64,
    pub norm: f64,
    pub error: f64,
    pub relative_error: f64,
    /// Truncation-tail bound (TT-SVD only).
    pub error_bound: Option<f64>,
    pub parameters: usize,
    pub entries: usize,
}

/// One grid point of one tail check.
#[derive(Debug, Serialize)]
pub struct ValidateRecord {
    pub check: String,
    pub bound_name: String,
    pub kind: &'static str,
    pub n: usize,
    pub seed: u64,
    pub trials: usize,
    pub grid_value: f64,
    pub empirical_freq: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
    pub note: String,
}

impl ValidateRecord {
    pub fn from_report(check: &str, n: usize, seed: u64, r: &TailCheckReport) -> Vec<ValidateRecord> {
        let kind = match r.kind {
            BoundKind::Upper => "upper",
            BoundKind::Lower => "lower",
        };
        (0..r.grid.len())
            .map(|i| {
                ValidateRecord {
                    check: check.to_string(),
                    bound_name: r.bound_name.clone(),
                    kind,
                    n,
                    seed,
                    trials: r.trials,
                    grid_value: r.grid[i],
                    empirical_freq: r.empirical_freq[i],
                    bound: r.theoretical_bound[i],
                    margin: r.margin[i],
                    pass: r.point_passes(i),
                    note: r.note.clone().unwrap_or_default(),
                }
            })
            .collect()
    }
}
