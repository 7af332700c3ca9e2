//! CSV dumps of grids, densities, iteration histories and support tables.
//!
//! All files are UTF-8 with a header row. Floats are written with 17
//! significant digits so that a dump reparses to the same bits.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::certify::SupportPoint;
use crate::design::DesignDensity;
use crate::error::{Error, Result};
use crate::solver::IterationRecord;
use crate::space::QuadratureGrid;

/// Node coordinates are matched against a grid to this tolerance when a
/// density is read back.
pub const COORD_TOL: f64 = 1e-9;

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn coord_headers(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("w{j}")).collect()
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_rows<W: Write>(
    w: &mut csv::Writer<W>,
    header: Vec<String>,
    rows: impl Iterator<Item = Vec<String>>,
    path: &Path,
) -> Result<()> {
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    Ok(())
}

/// One row per node: `w1..wd, measure`.
pub fn write_grid_csv(path: &Path, grid: &QuadratureGrid) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = coord_headers(grid.dimension());
    header.push("measure".into());
    let rows = grid.nodes().zip(grid.measures()).map(|(x, &m)| {
        let mut row: Vec<String> = x.iter().map(|&v| fmt_float(v)).collect();
        row.push(fmt_float(m));
        row
    });
    write_rows(&mut w, header, rows, path)?;
    finish(w, path)
}

/// One row per node: `w1..wd, mu, f, f_mu`.
pub fn write_density_csv(path: &Path, grid: &QuadratureGrid, f: &DesignDensity) -> Result<()> {
    f.ensure_on(grid)?;
    let mut w = writer(path)?;
    let mut header = coord_headers(grid.dimension());
    header.extend(["mu", "f", "f_mu"].map(String::from));
    let rows = grid
        .nodes()
        .zip(grid.measures())
        .zip(f.values())
        .map(|((x, &m), &v)| {
            let mut row: Vec<String> = x.iter().map(|&c| fmt_float(c)).collect();
            row.extend([fmt_float(m), fmt_float(v), fmt_float(v * m)]);
            row
        });
    write_rows(&mut w, header, rows, path)?;
    finish(w, path)
}

/// Reads the `f` column of a density dump and checks that its nodes match
/// `grid` row for row.
pub fn read_density_csv(path: &Path, grid: &QuadratureGrid) -> Result<DesignDensity> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let d = grid.dimension();
    let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Config {
            path: path.into(),
            message: format!("missing column `{name}`"),
        })
    };
    let coord_cols = coord_headers(d)
        .iter()
        .map(|h| col(h))
        .collect::<Result<Vec<_>>>()?;
    let f_col = col("f")?;

    let mut values = Vec::with_capacity(grid.len());
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = rec.position().map_or(i + 2, |p| p.line() as usize);
        let parse = |c: usize| -> Result<f64> {
            let s = rec.get(c).unwrap_or("");
            s.trim().parse().map_err(|_| Error::Config {
                path: path.into(),
                message: format!("line {line}: cannot parse `{s}` as a number"),
            })
        };
        if i >= grid.len() {
            return Err(Error::GridMismatch);
        }
        for (j, &c) in coord_cols.iter().enumerate() {
            if (parse(c)? - grid.node(i)[j]).abs() > COORD_TOL {
                return Err(Error::GridMismatch);
            }
        }
        values.push(parse(f_col)?);
    }
    if values.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    DesignDensity::new(grid, values)
}

/// `iter, criterion, l1_step, kl_step, cert_gap, wall_time_ms`.
pub fn write_history_csv(path: &Path, history: &[IterationRecord]) -> Result<()> {
    let mut w = writer(path)?;
    let header = ["iter", "criterion", "l1_step", "kl_step", "cert_gap", "wall_time_ms"]
        .map(String::from)
        .to_vec();
    let rows = history.iter().map(|h| {
        vec![
            h.iter.to_string(),
            fmt_float(h.criterion_value),
            fmt_float(h.l1_step),
            fmt_float(h.kl_step),
            fmt_float(h.cert_gap),
            fmt_float(h.wall_time.as_secs_f64() * 1e3),
        ]
    });
    write_rows(&mut w, header, rows, path)?;
    finish(w, path)
}

/// `w1..wd, weight, n_cells, peak_density`.
pub fn write_support_csv(path: &Path, dimension: usize, support: &[SupportPoint]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = coord_headers(dimension);
    header.extend(["weight", "n_cells", "peak_density"].map(String::from));
    let rows = support.iter().map(|s| {
        let mut row: Vec<String> = s.location.iter().map(|&c| fmt_float(c)).collect();
        row.extend([
            fmt_float(s.weight),
            s.n_cells.to_string(),
            fmt_float(s.peak_density),
        ]);
        row
    });
    write_rows(&mut w, header, rows, path)?;
    finish(w, path)
}
