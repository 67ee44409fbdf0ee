//! File formats: systems as JSON with row-major matrices, signals as CSV with
//! a sample index column, plain matrices as CSV with a JSON metadata sidecar.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use hankel_pe::{LtiSystem, Signal};

/// On-disk system record: row-major matrices plus explicit dimensions so a
/// reader can validate the file without reconstructing anything.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFile {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn from_rows(rows: &[Vec<f64>], nrows: usize, ncols: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        bail!("matrix {name} is not {nrows}x{ncols}");
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl SystemFile {
    pub fn from_system(sys: &LtiSystem) -> Self {
        SystemFile {
            a: to_rows(sys.a()),
            b: to_rows(sys.b()),
            c: to_rows(sys.c()),
            d: to_rows(sys.d()),
            n: sys.n(),
            m: sys.m(),
            p: sys.p(),
        }
    }

    pub fn into_system(self) -> Result<LtiSystem> {
        let a = from_rows(&self.a, self.n, self.n, "A")?;
        let b = from_rows(&self.b, self.n, self.m, "B")?;
        let c = from_rows(&self.c, self.p, self.n, "C")?;
        let d = from_rows(&self.d, self.p, self.m, "D")?;
        LtiSystem::new(a, b, c, d).map_err(|e| anyhow::anyhow!("inconsistent system file: {e}"))
    }
}

pub fn load_system(path: &Path) -> Result<LtiSystem> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: SystemFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    file.into_system()
}

pub fn save_system(path: &Path, sys: &LtiSystem) -> Result<()> {
    let text = serde_json::to_string_pretty(&SystemFile::from_system(sys))?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Reads a signal from CSV with header `k,v0,...,v{q-1}`, one sample per row.
/// Rows must be in index order starting at 0.
pub fn read_signal(path: &Path) -> Result<Signal> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let header_len = reader.headers()?.len();
    if header_len < 2 {
        bail!("{}: expected columns k,v0,...", path.display());
    }
    let dim = header_len - 1;
    let mut samples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != dim + 1 {
            bail!("{}: row {row} has {} fields, expected {}", path.display(), record.len(), dim + 1);
        }
        let k: usize = record[0].trim().parse().context("sample index")?;
        if k != row {
            bail!("{}: sample indices must run 0,1,2,... (row {row} has k={k})", path.display());
        }
        let mut v = DVector::zeros(dim);
        for j in 0..dim {
            v[j] = record[j + 1].trim().parse().context("sample value")?;
        }
        samples.push(v);
    }
    Signal::from_samples(&samples).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

pub fn write_signal(path: &Path, sig: &Signal) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec!["k".to_string()];
    header.extend((0..sig.dim()).map(|j| format!("v{j}")));
    writer.write_record(&header)?;
    for k in 0..sig.len() {
        let mut row = vec![k.to_string()];
        row.extend((0..sig.dim()).map(|j| sig.matrix()[(j, k)].to_string()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_matrix_csv(path: &Path, mat: &DMatrix<f64>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    for i in 0..mat.nrows() {
        let row: Vec<String> = (0..mat.ncols()).map(|j| mat[(i, j)].to_string()).collect();
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row: Vec<f64> = record
            .iter()
            .map(|s| s.trim().parse::<f64>().context("matrix entry"))
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                bail!("{}: ragged rows", path.display());
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: empty matrix", path.display());
    }
    let (nr, nc) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// Sidecar record describing an exported structured matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixMetadata {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<usize>,
}

pub fn write_metadata(path: &Path, meta: &MatrixMetadata) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(meta)?)
        .with_context(|| format!("writing {}", path.display()))
}

/// Parses `--x0 "1.5,-2,0"` into a vector; `dim` 0 means "empty allowed".
pub fn parse_vector(text: &str, dim: usize) -> Result<DVector<f64>> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        if dim == 0 {
            return Ok(DVector::zeros(0));
        }
        bail!("expected {dim} comma-separated values, got an empty string");
    }
    let vals: Vec<f64> = trimmed
        .split(',')
        .map(|s| s.trim().parse::<f64>().context("vector entry"))
        .collect::<Result<_>>()?;
    if vals.len() != dim {
        bail!("expected {dim} comma-separated values, got {}", vals.len());
    }
    Ok(DVector::from_vec(vals))
}
