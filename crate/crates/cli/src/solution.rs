//! On-disk relaxed solutions: a JSON header next to a CSV or binary payload for `Z` and `y`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use regkmeans::relax::{RelaxationKind, RelaxedSolution};

pub const HEADER: &str = "solution.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PayloadFormat {
    /// One matrix row per line.
    Csv,
    /// Little-endian f64, row-major.
    Bin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionHeader {
    pub kind: RelaxationKind,
    pub n: usize,
    pub k: usize,
    /// `None` encodes an infinite penalty.
    pub lambda: Option<f64>,
    pub objective: f64,
    pub primal_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub format: PayloadFormat,
    pub objective_trace: Vec<f64>,
}

pub fn lambda_to_json(lambda: f64) -> Option<f64> {
    lambda.is_finite().then_some(lambda)
}

fn payload_name(stem: &str, format: PayloadFormat) -> String {
    match format {
        PayloadFormat::Csv => format!("{stem}.csv"),
        PayloadFormat::Bin => format!("{stem}.bin"),
    }
}

pub fn write_solution(
    dir: &Path,
    sol: &RelaxedSolution,
    kind: RelaxationKind,
    k: usize,
    lambda: f64,
    format: PayloadFormat,
) -> Result<SolutionHeader> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let header = SolutionHeader {
        kind,
        n: sol.z.nrows(),
        k,
        lambda: lambda_to_json(lambda),
        objective: sol.objective,
        primal_residual: sol.primal_residual,
        iterations: sol.iterations,
        converged: sol.converged,
        format,
        objective_trace: sol.objective_trace.clone(),
    };
    write_json(&dir.join(HEADER), &header)?;
    write_matrix(&dir.join(payload_name("z", format)), &sol.z, format)?;
    if let Some(y) = &sol.y {
        let col = DMatrix::from_column_slice(y.len(), 1, y.as_slice());
        write_matrix(&dir.join(payload_name("y", format)), &col, format)?;
    }
    Ok(header)
}

pub fn read_solution(dir: &Path) -> Result<(SolutionHeader, DMatrix<f64>, Option<DVector<f64>>)> {
    let header: SolutionHeader = read_json(&dir.join(HEADER))?;
    let n = header.n;
    let z = read_matrix(&dir.join(payload_name("z", header.format)), n, n, header.format)?;
    let y = if header.lambda.is_some() {
        let col = read_matrix(&dir.join(payload_name("y", header.format)), n, 1, header.format)?;
        Some(DVector::from_column_slice(col.as_slice()))
    } else {
        None
    };
    Ok((header, z, y))
}

fn write_matrix(path: &Path, m: &DMatrix<f64>, format: PayloadFormat) -> Result<()> {
    let bytes = match format {
        PayloadFormat::Csv => {
            let mut s = String::new();
            for row in m.row_iter() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s.into_bytes()
        }
        PayloadFormat::Bin => m.transpose().iter().flat_map(|v| v.to_le_bytes()).collect(),
    };
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_matrix(path: &Path, rows: usize, cols: usize, format: PayloadFormat) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let values: Vec<f64> = match format {
        PayloadFormat::Csv => {
            let text = String::from_utf8(bytes).context("payload is not UTF-8")?;
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .flat_map(|l| l.split(','))
                .map(|f| f.trim().parse::<f64>().with_context(|| format!("bad number {f:?}")))
                .collect::<Result<_>>()?
        }
        PayloadFormat::Bin => {
            if bytes.len() % 8 != 0 {
                bail!("{}: length {} is not a multiple of 8", path.display(), bytes.len());
            }
            bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect()
        }
    };
    if values.len() != rows * cols {
        bail!("{}: expected {} entries, found {}", path.display(), rows * cols, values.len());
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
