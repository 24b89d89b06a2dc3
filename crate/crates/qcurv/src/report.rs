//! Report envelopes, deterministic serialization helpers, and CSV
//! import/export for fields, grids, and operators.
//!
//! Reports separate volatile metadata (timestamps) from the
//! deterministic body: identical configuration and seed must produce a
//! bit-identical `report` value.

use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fields::{ScalarField, SectorBasis};

/// The fixed normalization every number in this crate derives from.
pub const CONVENTION_LEDGER: &str = "laplacian = delta d (nonnegative spectrum); \
P = laplacian^2 + delta((2/3) R g - 2 Ric) d; \
Q = (1/6)(laplacian R + R^2 - 3 |Ric|^2); \
Q_hat = e^{-4 w}(Q + P w) and P_hat = e^{-4 w} P for g_hat = e^{2 w} g; \
anchors: Q(round S4) = 6, Q(S2 x S2) = 2/3, Q(S2 x H2(-1)) = -2";

/// Hex digest of the convention ledger, embedded in every report.
pub fn ledger_hash() -> String {
    let digest = Sha256::digest(CONVENTION_LEDGER.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Volatile metadata, kept apart from the deterministic body.
#[derive(Debug, Clone, Serialize)]
pub struct ReportMeta {
    pub timestamp_unix_ms: u128,
    pub tool_version: &'static str,
}

impl ReportMeta {
    pub fn now() -> Self {
        ReportMeta {
            timestamp_unix_ms: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
            tool_version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Envelope<T: Serialize> {
    pub meta: ReportMeta,
    pub report: T,
}

/// Serialize the deterministic body alone (used by byte-identity checks).
pub fn report_bytes<T: Serialize>(report: &T) -> Result<Vec<u8>> {
    serde_json::to_vec_pretty(report).map_err(|e| Error::Config(e.to_string()))
}

/// Write bytes atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Field coefficients as CSV: `mode_index,coefficient` with full
/// round-trip precision.
pub fn field_to_csv(f: &ScalarField) -> String {
    let mut out = String::from("mode_index,coefficient\n");
    for (k, c) in f.coeffs().iter().enumerate() {
        out.push_str(&format!("{k},{c:?}\n"));
    }
    out
}

/// Reimport a field exported by [`field_to_csv`]; bit-exact for finite
/// values.
pub fn field_from_csv(sector: &Arc<SectorBasis>, csv: &str) -> Result<ScalarField> {
    let mut coeffs = Array1::zeros(sector.dim());
    for (lineno, line) in csv.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || lineno == 0 && line.starts_with("mode_index") {
            continue;
        }
        let (idx, val) = line.split_once(',').ok_or_else(|| {
            Error::Config(format!("field csv line {}: expected two columns", lineno + 1))
        })?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|e| Error::Config(format!("field csv line {}: {e}", lineno + 1)))?;
        let val: f64 = val
            .trim()
            .parse()
            .map_err(|e| Error::Config(format!("field csv line {}: {e}", lineno + 1)))?;
        if idx >= sector.dim() {
            return Err(Error::Config(format!(
                "field csv line {}: mode index {idx} outside sector of dimension {}",
                lineno + 1,
                sector.dim()
            )));
        }
        coeffs[idx] = val;
    }
    ScalarField::from_coeffs(sector, coeffs)
}

/// Grid values as CSV: node coordinates then the value.
pub fn grid_to_csv(f: &ScalarField) -> Result<String> {
    let coords = f.sector().node_coords()?;
    let values = f.grid_values()?;
    let f1 = f.sector().manifold().factor(0).spec.kind_name();
    let f2 = f.sector().manifold().factor(1).spec.kind_name();
    let mut out = String::new();
    if coords.first().is_some_and(|c| c.len() == 4) {
        out.push_str(&format!("{f1}_u,{f1}_v,{f2}_u,{f2}_v,value\n"));
    } else {
        out.push_str(&format!("{f1}_u,{f1}_v,value\n"));
    }
    for (c, v) in coords.iter().zip(values.iter()) {
        for x in c {
            out.push_str(&format!("{x:?},"));
        }
        out.push_str(&format!("{v:?}\n"));
    }
    Ok(out)
}

/// Dense operator matrix as CSV with an identifying header.
pub fn matrix_to_csv(
    matrix: &Array2<f64>,
    metric_tag: &str,
    sector: &str,
    truncation: &str,
) -> String {
    let mut out = format!(
        "# metric_tag={metric_tag}\n# sector={sector}\n# truncation={truncation}\n"
    );
    for row in matrix.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Scan output as CSV: `param,dim,min_abs_lambda`.
pub fn scan_to_csv(points: &[crate::kernel::ScanPoint]) -> String {
    let mut out = String::from("param,dim,min_abs_lambda\n");
    for p in points {
        out.push_str(&format!("{:?},{},{:?}\n", p.param, p.dim, p.min_abs_lambda));
    }
    out
}

/// Iteration trace as CSV.
pub fn trace_to_csv(trace: &[crate::error::IterationStep]) -> String {
    let mut out = String::from("iter,update_norm,residual_inf,fredholm_defect\n");
    for s in trace {
        out.push_str(&format!(
            "{},{:?},{:?},{:?}\n",
            s.iter, s.update_norm, s.residual_inf, s.fredholm_defect
        ));
    }
    out
}
