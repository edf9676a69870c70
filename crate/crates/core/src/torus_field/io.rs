use super::{GridFunction, TorusGrid};
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Sidecar metadata of a stored field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub n: usize,
    #[serde(rename = "N")]
    pub size: usize,
    pub name: String,
    pub mean: f64,
}

fn with_ext(base: &Path, ext: &str) -> PathBuf {
    let mut p = base.as_os_str().to_owned();
    p.push(".");
    p.push(ext);
    PathBuf::from(p)
}

/// Writes `<base>.meta` and `<base>.bin` (little-endian f64, row-major).
pub fn write_field(base: &Path, f: &GridFunction, name: &str) -> Result<Vec<PathBuf>> {
    let meta = FieldMeta { n: f.grid.dim(), size: f.grid.size(), name: name.to_string(), mean: f.mean() };
    let text = toml::to_string(&meta).map_err(|e| Error::Io(e.to_string()))?;
    let mp = with_ext(base, "meta");
    let bp = with_ext(base, "bin");
    std::fs::write(&mp, text)?;
    let mut bytes = Vec::with_capacity(8 * f.values.len());
    for v in &f.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(&bp, bytes)?;
    Ok(vec![mp, bp])
}

pub fn read_field(base: &Path) -> Result<(GridFunction, FieldMeta)> {
    let text = std::fs::read_to_string(with_ext(base, "meta"))?;
    let meta: FieldMeta = toml::from_str(&text).map_err(|e| Error::Config {
        location: with_ext(base, "meta").display().to_string(),
        message: e.to_string(),
    })?;
    let grid = TorusGrid::new(meta.n, meta.size)?;
    let bytes = std::fs::read(with_ext(base, "bin"))?;
    if bytes.len() != 8 * grid.len() {
        return invalid(format!("binary holds {} bytes, expected {}", bytes.len(), 8 * grid.len()));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((GridFunction::new(grid, values)?, meta))
}

/// CSV with one row per grid point: coordinates then value.
pub fn export_csv(f: &GridFunction) -> Result<String> {
    let n = f.grid.dim();
    if n > 2 {
        return invalid("CSV export supports n <= 2");
    }
    let mut out = String::from(if n == 1 { "x1,value\n" } else { "x1,x2,value\n" });
    for (i, v) in f.values.iter().enumerate() {
        let x = f.grid.point(i);
        for c in x.iter().take(n) {
            out.push_str(&format!("{c},"));
        }
        out.push_str(&format!("{v:e}\n"));
    }
    Ok(out)
}

pub fn import_csv(text: &str) -> Result<GridFunction> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::InvalidInput("empty CSV".into()))?;
    let n = header.split(',').count() - 1;
    if !(1..=2).contains(&n) {
        return invalid("CSV must have 2 or 3 columns");
    }
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config { location: format!("line {}", ln + 2), message: e.to_string() })?;
        if cols.len() != n + 1 {
            return Err(Error::Config { location: format!("line {}", ln + 2), message: "wrong column count".into() });
        }
        rows.push(cols);
    }
    let size = (rows.len() as f64).powf(1.0 / n as f64).round() as usize;
    let grid = TorusGrid::new(n, size)?;
    if rows.len() != grid.len() {
        return invalid("row count is not a full grid");
    }
    for (i, r) in rows.iter().enumerate() {
        let x = grid.point(i);
        if (0..n).any(|a| (x[a] - r[a]).abs() > 1e-9) {
            return Err(Error::Config { location: format!("line {}", i + 2), message: "coordinates off grid".into() });
        }
    }
    GridFunction::new(grid, rows.iter().map(|r| r[n]).collect())
}
