//! Problem files (JSON) and convergence traces (CSV).
//!
//! A problem file looks like
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "dim": 2,
//!   "elements": [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]], ...],
//!   "counts": [3, 1],
//!   "true_state": [[[0.75, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.25, 0.0]]],
//!   "metadata": { "seed": 7 }
//! }
//! ```
//!
//! Matrices are row-major lists of rows, each entry an `[re, im]` pair.
//! Exactly one of `weights` and `counts` must be present. Floats are written
//! in shortest round-trip form, so saving and loading is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, HermitianMatrix, C64};
use crate::model::MeasurementEnsemble;
use crate::problems::{InstanceMetadata, ProblemInstance};
use crate::solvers::ConvergenceReport;

pub const FORMAT_VERSION: u32 = 1;

pub const TRACE_HEADER: &str = "k,f_rho,f_rho_bar,cert_rho,cert_rho_bar,tau,elapsed_ms";

type MatrixRows = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub format_version: u32,
    pub dim: usize,
    pub elements: Vec<MatrixRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_state: Option<MatrixRows>,
    #[serde(default)]
    pub metadata: InstanceMetadata,
}

fn encode(m: &HermitianMatrix) -> MatrixRows {
    (0..m.dim())
        .map(|i| {
            (0..m.dim())
                .map(|j| {
                    let z = m.get(i, j);
                    [z.re, z.im]
                })
                .collect()
        })
        .collect()
}

fn decode(rows: &MatrixRows, dim: usize, what: &str) -> Result<HermitianMatrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Validation(format!("{what} is not {dim}x{dim}")));
    }
    let rows: Vec<Vec<C64>> = rows
        .iter()
        .map(|r| r.iter().map(|[re, im]| C64::new(*re, *im)).collect())
        .collect();
    HermitianMatrix::from_rows(&rows).map_err(|e| Error::Validation(format!("{what}: {e}")))
}

impl ProblemFile {
    pub fn from_instance(inst: &ProblemInstance) -> Self {
        let (weights, counts) = match &inst.counts {
            Some(c) => (None, Some(c.clone())),
            None => (Some(inst.ensemble.weights().to_vec()), None),
        };
        Self {
            format_version: FORMAT_VERSION,
            dim: inst.dim(),
            elements: inst.ensemble.elements().iter().map(encode).collect(),
            weights,
            counts,
            true_state: inst.true_state.as_ref().map(|s| encode(s.as_hermitian())),
            metadata: inst.metadata.clone(),
        }
    }

    pub fn into_instance(self) -> Result<ProblemInstance> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        let elements = self
            .elements
            .iter()
            .enumerate()
            .map(|(n, m)| decode(m, self.dim, &format!("element {n}")))
            .collect::<Result<Vec<_>>>()?;
        let invalid = |e: Error| Error::Validation(e.to_string());
        let (ensemble, counts) = match (self.weights, self.counts) {
            (Some(w), None) => (MeasurementEnsemble::new(elements, w).map_err(invalid)?, None),
            (None, Some(c)) => {
                if c.contains(&0) {
                    return Err(Error::Validation("counts must be positive".into()));
                }
                let ens = MeasurementEnsemble::from_counts(elements, &c).map_err(invalid)?;
                (ens, Some(c))
            }
            _ => {
                return Err(Error::Validation(
                    "exactly one of `weights` and `counts` must be present".into(),
                ))
            }
        };
        let true_state = self
            .true_state
            .map(|m| decode(&m, self.dim, "true_state").and_then(DensityMatrix::new))
            .transpose()
            .map_err(invalid)?;
        Ok(ProblemInstance {
            ensemble,
            counts,
            true_state,
            metadata: self.metadata,
        })
    }
}

pub fn problem_to_string(inst: &ProblemInstance) -> Result<String> {
    serde_json::to_string_pretty(&ProblemFile::from_instance(inst))
        .map_err(|e| Error::Validation(e.to_string()))
}

pub fn problem_from_str(text: &str) -> Result<ProblemInstance> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.into_instance()
}

pub fn save_problem(inst: &ProblemInstance, path: impl AsRef<Path>) -> Result<()> {
    let mut text = problem_to_string(inst)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    problem_from_str(&fs::read_to_string(path)?)
}

/// Renders the trace with 17 significant digits per value.
pub fn trace_to_string(report: &ConvergenceReport) -> String {
    let mut out = String::with_capacity(64 * (report.records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &report.records {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.k,
            r.objective_at_rho,
            r.objective_at_rho_bar,
            r.certificate_at_rho,
            r.certificate_at_rho_bar,
            r.tau,
            r.elapsed_ms
        );
    }
    out
}

pub fn write_trace(report: &ConvergenceReport, path: impl AsRef<Path>) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(trace_to_string(report).as_bytes())?;
    Ok(())
}

/// One parsed row of a trace file.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub values: [f64; 6],
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == TRACE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "missing trace header".into(),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            let bad = |column: usize, message: String| Error::Parse {
                line: i + 1,
                column,
                message,
            };
            if fields.len() != 7 {
                return Err(bad(1, format!("expected 7 fields, found {}", fields.len())));
            }
            let k = fields[0]
                .parse()
                .map_err(|e| bad(1, format!("k: {e}")))?;
            let mut values = [0.0; 6];
            for (j, v) in values.iter_mut().enumerate() {
                *v = fields[j + 1]
                    .parse()
                    .map_err(|e| bad(j + 2, format!("{e}")))?;
            }
            Ok(TraceRow { k, values })
        })
        .collect()
}

/// Reads a returns table: one period per row, one asset per column, comma separated.
/// Lines starting with `#` and a non-numeric header row are skipped.
pub fn parse_returns_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if rows.is_empty() && i == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    line: i + 1,
                    column: 1,
                    message: e.to_string(),
                })
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Validation("returns table is empty".into()));
    }
    Ok(rows)
}
