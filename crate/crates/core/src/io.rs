//! CSV ingestion, grid parsing, atomic file output and gnuplot scripts.

use crate::error::{Result, SccaError};
use crate::function_space::{FunctionalSample, Grid};
use nalgebra::DMatrix;
use std::io::Write;
use std::path::Path;

/// Curves read from CSV, with the optional ID column kept aside.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub ids: Option<Vec<String>>,
    pub header: Option<Vec<String>>,
    pub values: DMatrix<f64>,
}

fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// One curve per row. A first row with any non-numeric field is a header;
/// a first column holding any non-numeric entry, or headed `id`, holds IDs.
pub fn parse_curves(text: &str) -> Result<CurveTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut records: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| SccaError::InvalidSample(format!("CSV: {e}")))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        records.push(rec.iter().map(str::to_string).collect());
    }
    if records.is_empty() {
        return Err(SccaError::InvalidSample("CSV holds no rows".into()));
    }
    let row0_text_tail = records[0].iter().skip(1).any(|f| parse_f64(f).is_none());
    let row0_text_head = parse_f64(&records[0][0]).is_none();
    let later_heads_numeric = records.iter().skip(1).all(|r| parse_f64(&r[0]).is_some());
    let is_header = records.len() > 1
        && (row0_text_tail
            || (row0_text_head
                && (records[0][0].eq_ignore_ascii_case("id") || later_heads_numeric)));
    let header = is_header.then(|| records.remove(0));
    let has_ids = header
        .as_ref()
        .is_some_and(|h| h[0].eq_ignore_ascii_case("id"))
        || records.iter().any(|r| parse_f64(&r[0]).is_none());
    let skip = usize::from(has_ids);
    let m = records[0].len() - skip;
    if m == 0 {
        return Err(SccaError::InvalidSample("CSV rows hold no values".into()));
    }
    let mut values = DMatrix::zeros(records.len(), m);
    for (i, r) in records.iter().enumerate() {
        if r.len() - skip != m {
            return Err(SccaError::InvalidSample(format!(
                "row {} has {} values, expected {m}",
                i + 1,
                r.len() - skip
            )));
        }
        for (j, f) in r.iter().skip(skip).enumerate() {
            values[(i, j)] = parse_f64(f).ok_or_else(|| {
                SccaError::InvalidSample(format!(
                    "row {}, column {}: '{f}' is not a finite number",
                    i + 1,
                    j + 1 + skip
                ))
            })?;
        }
    }
    let ids = has_ids.then(|| records.iter().map(|r| r[0].clone()).collect());
    Ok(CurveTable {
        ids,
        header,
        values,
    })
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| SccaError::InvalidArgument(format!("{}: {e}", path.display())))
}

pub fn read_curves(path: &Path) -> Result<CurveTable> {
    parse_curves(&read_to_string(path)?)
}

/// `a:b:m` for a uniform grid, otherwise a path to a single-column CSV.
pub fn parse_grid(spec: &str) -> Result<Grid> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        if let (Some(a), Some(b), Ok(m)) = (
            parse_f64(parts[0]),
            parse_f64(parts[1]),
            parts[2].trim().parse::<usize>(),
        ) {
            return Grid::uniform(a, b, m);
        }
    }
    let table = read_curves(Path::new(spec))?;
    if table.values.ncols() != 1 {
        return Err(SccaError::InvalidGrid(format!(
            "grid file must have a single column, found {}",
            table.values.ncols()
        )));
    }
    Grid::from_points(table.values.column(0).iter().copied().collect())
}

pub fn read_sample(path: &Path, grid: &Grid) -> Result<FunctionalSample> {
    let table = read_curves(path)?;
    if table.values.ncols() != grid.len() {
        return Err(SccaError::GridMismatch {
            sample: table.values.ncols(),
            basis: grid.len(),
        });
    }
    FunctionalSample::new(grid.clone(), table.values)
}

/// Quotes a field when CSV requires it.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Shortest round-trip decimal; empty for `None`.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Curves as rows, full precision.
pub fn sample_csv(sample: &FunctionalSample) -> String {
    let mut out = String::new();
    for row in sample.values().row_iter() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Columns `t` then one per named curve.
pub fn curves_on_grid_csv(grid: &Grid, columns: &[(&str, &[f64])]) -> String {
    let mut out = String::from("t");
    for (name, _) in columns {
        out.push(',');
        out.push_str(&csv_field(name));
    }
    out.push('\n');
    for (k, t) in grid.points().iter().enumerate() {
        out.push_str(&t.to_string());
        for (_, c) in columns {
            out.push(',');
            out.push_str(&c[k].to_string());
        }
        out.push('\n');
    }
    out
}

/// Writes to a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e: std::io::Error| SccaError::InvalidArgument(format!("{}: {e}", path.display()));
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| SccaError::Numerical(e.to_string()))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// One plotted series: data file column pair and legend.
#[derive(Debug, Clone)]
pub struct Series {
    pub x_col: usize,
    pub y_col: usize,
    pub title: String,
}

/// A gnuplot script drawing `series` from a comma-separated `data_file`
/// (1-based columns) into `png`.
pub fn gnuplot_script(
    data_file: &str,
    png: &str,
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series],
    log_x: bool,
) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    s.push_str(&format!("set output '{png}'\n"));
    s.push_str(&format!("set title '{title}'\n"));
    s.push_str(&format!("set xlabel '{xlabel}'\nset ylabel '{ylabel}'\n"));
    s.push_str("set key outside right\nset grid\n");
    if log_x {
        s.push_str("set logscale x 2\n");
    }
    let plots: Vec<String> = series
        .iter()
        .map(|p| {
            format!(
                "'{data_file}' using {}:{} skip 1 with linespoints title '{}'",
                p.x_col, p.y_col, p.title
            )
        })
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}
