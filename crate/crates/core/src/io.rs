//! Plain CSV tables shared by paths and estimator output.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::TimeGrid;

/// Seventeen significant digits: round trips every `f64` exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `header` then one comma-separated row per entry, LF endings.
pub fn write_table<W: Write>(mut w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.into_iter().map(fmt_f64).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// `t,value` rows.
pub fn write_path_csv<W: Write>(w: W, grid: &TimeGrid, values: &[f64]) -> Result<()> {
    if grid.len() != values.len() {
        return Err(Error::GridMismatch(format!(
            "{} grid points but {} values",
            grid.len(),
            values.len()
        )));
    }
    write_table(
        w,
        &["t", "value"],
        grid.points().iter().zip(values).map(|(&t, &v)| vec![t, v]),
    )
}

/// Reads a `t,value` table; the times must form a valid grid starting at 0.
pub fn read_path_csv<R: BufRead>(r: R) -> Result<(TimeGrid, Vec<f64>)> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Input("empty path file".into()))??;
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "t" {
        return Err(Error::Input(format!("expected header `t,value`, got `{}`", header.trim())));
    }
    let (mut ts, mut vs) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let mut field = |name: &str| -> Result<f64> {
            let s = it
                .next()
                .ok_or_else(|| Error::Input(format!("row {}: missing {name}", k + 2)))?;
            let x: f64 = s
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("row {}: bad {name} `{}`", k + 2, s.trim())))?;
            if !x.is_finite() {
                return Err(Error::Input(format!("row {}: non-finite {name}", k + 2)));
            }
            Ok(x)
        };
        ts.push(field("t")?);
        vs.push(field("value")?);
    }
    let grid = TimeGrid::from_points(ts).map_err(|e| Error::Input(e.to_string()))?;
    Ok((grid, vs))
}
