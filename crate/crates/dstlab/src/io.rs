//! File formats.
//!
//! One format per artifact, shared by every producer and consumer:
//! - fermion matrices: JSON `{"m", "f", "entries": [[re, im], ...]}`,
//!   entries row-major over (coordinate, particle);
//! - Bloch tables: CSV with header `point,rho,vx,vy,vz`;
//! - causal matrices: CSV of one-letter labels, plus a JSON audit form
//!   carrying the raw discriminants;
//! - optimizer results: CSV `m,restart,seed,action,feasible,iters`;
//! - constraint sweeps: CSV
//!   `m,f,kappa,Z,constraint_residual,feasible,seed,evals`;
//! - per-run traces: JSON lines with keys `k, L, tau, Q, S, residuals`.
//!
//! All floating-point columns use 12-significant-digit scientific
//! rendering via [`fmt12`]; golden-file tests pin headers and
//! formatting.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::FermionMatrix;
use crate::bloch::{BlochConfiguration, LocalCorrelation};
use crate::causal::CausalMatrix;
use crate::error::{Error, Result};

/// Fixed 12-significant-digit scientific rendering.
pub fn fmt12(x: f64) -> String {
    format!("{:.11e}", x)
}

fn format_error(format: &str, detail: impl Into<String>) -> Error {
    Error::Format {
        format: format.into(),
        detail: detail.into(),
    }
}

#[derive(Serialize, Deserialize)]
struct FermionMatrixFile {
    m: usize,
    f: usize,
    entries: Vec<[f64; 2]>,
}

/// Writes the shared JSON form of a fermion matrix.
pub fn write_fermion_matrix_json(path: &Path, psi: &FermionMatrix) -> Result<()> {
    let mut entries = Vec::with_capacity(2 * psi.m() * psi.f());
    for r in 0..2 * psi.m() {
        for k in 0..psi.f() {
            let z = psi.entries()[(r, k)];
            entries.push([z.re, z.im]);
        }
    }
    let file = FermionMatrixFile {
        m: psi.m(),
        f: psi.f(),
        entries,
    };
    let body = serde_json::to_string_pretty(&file)
        .map_err(|e| format_error("fermion matrix json", e.to_string()))?;
    std::fs::write(path, body + "\n")?;
    Ok(())
}

/// Reads the shared JSON form of a fermion matrix.
pub fn read_fermion_matrix_json(path: &Path) -> Result<FermionMatrix> {
    let body = std::fs::read_to_string(path)?;
    let file: FermionMatrixFile = serde_json::from_str(&body)
        .map_err(|e| format_error("fermion matrix json", e.to_string()))?;
    if file.entries.len() != 2 * file.m * file.f {
        return Err(format_error(
            "fermion matrix json",
            format!(
                "m = {}, f = {} needs {} entries, got {}",
                file.m,
                file.f,
                2 * file.m * file.f,
                file.entries.len()
            ),
        ));
    }
    let mut entries = ndarray::Array2::zeros((2 * file.m, file.f));
    for r in 0..2 * file.m {
        for k in 0..file.f {
            let [re, im] = file.entries[r * file.f + k];
            entries[(r, k)] = Complex64::new(re, im);
        }
    }
    FermionMatrix::new(file.m, file.f, entries)
}

pub const BLOCH_CSV_HEADER: &str = "point,rho,vx,vy,vz";

/// Writes Bloch data as CSV, one row per point.
pub fn write_bloch_csv(path: &Path, config: &BlochConfiguration) -> Result<()> {
    let mut out = String::from(BLOCH_CSV_HEADER);
    out.push('\n');
    for (x, p) in config.points.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            x,
            fmt12(p.rho),
            fmt12(p.v[0]),
            fmt12(p.v[1]),
            fmt12(p.v[2])
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads Bloch CSV; rows must be sorted by point index starting at 0.
pub fn read_bloch_csv(path: &Path) -> Result<BlochConfiguration> {
    let file = std::fs::File::open(path)?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| format_error("bloch csv", "empty file"))??;
    if header.trim() != BLOCH_CSV_HEADER {
        return Err(format_error(
            "bloch csv",
            format!("expected header `{BLOCH_CSV_HEADER}`, got `{header}`"),
        ));
    }
    let mut points = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(format_error(
                "bloch csv",
                format!("row {k} has {} columns, expected 5", cols.len()),
            ));
        }
        let idx: usize = cols[0]
            .trim()
            .parse()
            .map_err(|_| format_error("bloch csv", format!("bad point index `{}`", cols[0])))?;
        if idx != k {
            return Err(format_error(
                "bloch csv",
                format!("row {k} carries point index {idx}"),
            ));
        }
        let mut vals = [0.0f64; 4];
        for (slot, col) in vals.iter_mut().zip(&cols[1..]) {
            *slot = col
                .trim()
                .parse()
                .map_err(|_| format_error("bloch csv", format!("bad number `{col}`")))?;
        }
        points.push(LocalCorrelation {
            rho: vals[0],
            v: [vals[1], vals[2], vals[3]],
        });
    }
    BlochConfiguration::new(points)
}

/// Writes the causal matrix as rows of one-letter labels.
pub fn write_causal_csv(path: &Path, causal: &CausalMatrix) -> Result<()> {
    let mut out = String::new();
    for x in 0..causal.m() {
        let row: Vec<String> = (0..causal.m())
            .map(|y| causal.label(x, y).code().to_string())
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes the causal matrix audit form with raw discriminants.
pub fn write_causal_json(path: &Path, causal: &CausalMatrix) -> Result<()> {
    let body = serde_json::to_string_pretty(causal)
        .map_err(|e| format_error("causal json", e.to_string()))?;
    std::fs::write(path, body + "\n")?;
    Ok(())
}

pub const RESULTS_CSV_HEADER: &str = "m,restart,seed,action,feasible,iters";

/// One multi-start restart of the penalty optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub m: usize,
    pub restart: usize,
    pub seed: u64,
    pub action: f64,
    pub feasible: bool,
    pub iters: usize,
}

/// Writes the multi-start results table.
pub fn write_results_csv(path: &Path, rows: &[RunRow]) -> Result<()> {
    let mut out = String::from(RESULTS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.m,
            r.restart,
            r.seed,
            fmt12(r.action),
            r.feasible,
            r.iters
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub const SWEEP_CSV_HEADER: &str = "m,f,kappa,Z,constraint_residual,feasible,seed,evals";

/// One point of a constraint sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: usize,
    pub f: usize,
    pub kappa: f64,
    pub z: f64,
    pub constraint_residual: f64,
    pub feasible: bool,
    pub seed: u64,
    pub evals: u64,
}

/// Writes a constraint sweep table.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.m,
            r.f,
            fmt12(r.kappa),
            fmt12(r.z),
            fmt12(r.constraint_residual),
            r.feasible,
            r.seed,
            r.evals
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// One outer iteration of a penalty run; keys are pinned by the trace
/// format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyRecord {
    pub k: usize,
    #[serde(rename = "L")]
    pub weight: f64,
    pub tau: f64,
    #[serde(rename = "Q")]
    pub objective: f64,
    #[serde(rename = "S")]
    pub action: f64,
    pub residuals: [f64; 4],
}

/// Writes one JSON record per line.
pub fn write_penalty_jsonl(path: &Path, records: &[PenaltyRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for rec in records {
        let line = serde_json::to_string(rec)
            .map_err(|e| format_error("penalty jsonl", e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}
