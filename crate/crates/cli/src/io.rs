//! CSV ingestion/emission, log-return preprocessing, and atomic file
//! writes.

use std::path::Path;

use anyhow::{bail, Context, Result};
use mintt::TimeSeries;

/// Reads a time series from CSV: header row of component names, one row
/// per time step in ascending order, numeric cells only.
pub fn load_csv(path: &Path) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let names: Vec<String> = reader
        .headers()
        .with_context(|| format!("cannot read header of {}", path.display()))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    if names.is_empty() || names.iter().all(|n| n.is_empty()) {
        bail!("{}: empty file", path.display());
    }
    let mut values = Vec::new();
    let mut rows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: bad record", path.display()))?;
        if record.len() != names.len() {
            bail!(
                "{}: row {} has {} cells, expected {}",
                path.display(),
                i + 2,
                record.len(),
                names.len()
            );
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().with_context(|| {
                format!(
                    "{}: row {}, column `{}`: non-numeric cell `{}`",
                    path.display(),
                    i + 2,
                    names[j],
                    cell
                )
            })?;
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        bail!("{}: empty file (no data rows)", path.display());
    }
    TimeSeries::new(values, names).context("invalid series")
}

/// Serializes a time series as CSV with full-precision decimal floats
/// (shortest representation that round-trips bit-exactly).
pub fn series_to_csv(ts: &TimeSeries) -> String {
    let mut out = String::new();
    out.push_str(&ts.names().join(","));
    out.push('\n');
    for t in 0..ts.n() {
        let row: Vec<String> = ts.row(t).iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Log transform followed by first-order differencing:
/// `out[t] = log(x[t+1]) - log(x[t])`. Requires strictly positive values.
pub fn preprocess_logdiff(ts: &TimeSeries) -> Result<TimeSeries> {
    if ts.n() < 2 {
        bail!("log-differencing needs at least 2 rows, got {}", ts.n());
    }
    for t in 0..ts.n() {
        for (c, &v) in ts.row(t).iter().enumerate() {
            if v <= 0.0 {
                bail!(
                    "log-differencing requires positive values; row {}, column `{}` is {}",
                    t + 1,
                    ts.names()[c],
                    v
                );
            }
        }
    }
    let l = ts.l();
    let mut values = Vec::with_capacity((ts.n() - 1) * l);
    for t in 0..ts.n() - 1 {
        for c in 0..l {
            values.push(ts.value(t + 1, c).ln() - ts.value(t, c).ln());
        }
    }
    Ok(TimeSeries::new(values, ts.names().to_vec())?)
}

/// Writes a file atomically: temp file in the target directory, then
/// rename.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().context("output path has no parent")?;
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let tmp = dir.join(format!(
        ".tmp-{}",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, contents).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot move {} into place", tmp.display()))?;
    Ok(())
}
