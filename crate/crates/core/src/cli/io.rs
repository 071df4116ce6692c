//! CSV point-set files and the JSON fit report.
//!
//! Curve files have the header `x,y` or `x,y,z`, one point per row. Surface
//! files have the header `h,l,x,y,z` and list the grid row-major in `h`
//! then `l`. Floats are written in shortest round-trip form, so a file read
//! back reproduces the generated values bit for bit.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PointGrid;

#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    Curve(DMatrix<f64>),
    Surface(PointGrid),
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line: line as usize,
        message: message.into(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io("reading CSV", source),
        kind => parse_err(line, format!("{kind:?}")),
    }
}

/// Reads a curve or surface file, deciding which by its header.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    parse_dataset(file)
}

pub fn parse_dataset(reader: impl Read) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    match header.as_slice() {
        ["x", "y"] | ["x", "y", "z"] => parse_curve(&mut rdr, header.len()),
        ["h", "l", "x", "y", "z"] => parse_surface(&mut rdr),
        _ => Err(parse_err(1, format!("unrecognized header {:?}; expected x,y[,z] or h,l,x,y,z", header.join(",")))),
    }
}

fn records<R: Read>(rdr: &mut csv::Reader<R>) -> impl Iterator<Item = Result<(u64, Vec<String>)>> + '_ {
    rdr.records().map(|r| {
        let r = r.map_err(csv_err)?;
        let line = r.position().map_or(0, |p| p.line());
        Ok((line, r.iter().map(str::to_owned).collect()))
    })
}

fn float(line: u64, field: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| parse_err(line, format!("invalid number {field:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value {field:?}")));
    }
    Ok(v)
}

fn index(line: u64, field: &str) -> Result<usize> {
    field.parse().map_err(|_| parse_err(line, format!("invalid grid index {field:?}")))
}

fn parse_curve<R: Read>(rdr: &mut csv::Reader<R>, dim: usize) -> Result<Dataset> {
    let mut values = Vec::new();
    let mut rows = 0;
    for rec in records(rdr) {
        let (line, fields) = rec?;
        for f in &fields {
            values.push(float(line, f)?);
        }
        rows += 1;
    }
    Ok(Dataset::Curve(DMatrix::from_row_slice(rows, dim, &values)))
}

fn parse_surface<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Dataset> {
    let mut entries = Vec::new();
    for rec in records(rdr) {
        let (line, f) = rec?;
        let (h, l) = (index(line, &f[0])?, index(line, &f[1])?);
        entries.push((line, h, l, [float(line, &f[2])?, float(line, &f[3])?, float(line, &f[4])?]));
    }
    let rows = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
    let cols = entries.iter().map(|e| e.2 + 1).max().unwrap_or(0);
    if entries.len() != rows * cols {
        return Err(parse_err(
            entries.last().map_or(1, |e| e.0),
            format!("{} rows do not fill a {rows}x{cols} grid", entries.len()),
        ));
    }
    let mut grid = PointGrid::zeros(rows, cols);
    for (k, (line, h, l, p)) in entries.into_iter().enumerate() {
        if (h, l) != (k / cols, k % cols) {
            return Err(parse_err(line, format!("expected cell ({}, {}), found ({h}, {l})", k / cols, k % cols)));
        }
        grid.set_point(h, l, p);
    }
    Ok(Dataset::Surface(grid))
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("writing CSV", e))
}

pub fn write_curve_csv(w: impl Write, points: &DMatrix<f64>) -> Result<()> {
    let mut out = writer(w);
    let header = &["x", "y", "z"][..points.ncols()];
    out.write_record(header).map_err(csv_err)?;
    for i in 0..points.nrows() {
        out.write_record(points.row(i).iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    flush(out)
}

pub fn write_surface_csv(w: impl Write, grid: &PointGrid) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["h", "l", "x", "y", "z"]).map_err(csv_err)?;
    for h in 0..grid.rows() {
        for l in 0..grid.cols() {
            let [x, y, z] = grid.point(h, l);
            out.write_record([h.to_string(), l.to_string(), x.to_string(), y.to_string(), z.to_string()])
                .map_err(csv_err)?;
        }
    }
    flush(out)
}

pub fn write_dataset(w: impl Write, data: &Dataset) -> Result<()> {
    match data {
        Dataset::Curve(p) => write_curve_csv(w, p),
        Dataset::Surface(g) => write_surface_csv(w, g),
    }
}

/// `run,k,E_k` rows for every run's error history.
pub fn write_history_csv<'a>(w: impl Write, histories: impl IntoIterator<Item = &'a [f64]>) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["run", "k", "E_k"]).map_err(csv_err)?;
    for (run, errors) in histories.into_iter().enumerate() {
        for (k, e) in errors.iter().enumerate() {
            out.write_record([run.to_string(), k.to_string(), e.to_string()]).map_err(csv_err)?;
        }
    }
    flush(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: Option<u64>,
    pub iterations: usize,
    pub e_final: f64,
    pub wall_ms: f64,
    pub termination: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub method: String,
    pub m: usize,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tau: Option<usize>,
    pub seeds: Vec<u64>,
    pub per_run: Vec<RunSummary>,
    pub mean_iterations: f64,
    pub history_path: Option<String>,
}

/// `run,seed,iterations,e_final,wall_ms,termination` rows.
pub fn write_summary_csv(w: impl Write, summary: &FitSummary) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["run", "seed", "iterations", "e_final", "wall_ms", "termination"])
        .map_err(csv_err)?;
    for (run, r) in summary.per_run.iter().enumerate() {
        out.write_record([
            run.to_string(),
            r.seed.map_or_else(String::new, |s| s.to_string()),
            r.iterations.to_string(),
            r.e_final.to_string(),
            r.wall_ms.to_string(),
            r.termination.clone(),
        ])
        .map_err(csv_err)?;
    }
    flush(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_round_trip_is_exact() {
        let pts = DMatrix::from_row_slice(3, 3, &[0.1, 1.0 / 3.0, -2.5e-17, 1e300, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &pts).unwrap();
        assert!(buf.starts_with(b"x,y,z\n"));
        assert_eq!(parse_dataset(&buf[..]).unwrap(), Dataset::Curve(pts));
    }

    #[test]
    fn surface_round_trip_is_exact() {
        let g = PointGrid::from_fn(3, 2, |h, l| [h as f64 / 7.0, l as f64, 0.5]);
        let mut buf = Vec::new();
        write_surface_csv(&mut buf, &g).unwrap();
        assert_eq!(parse_dataset(&buf[..]).unwrap(), Dataset::Surface(g));
    }

    #[test]
    fn bad_number_names_its_line() {
        let err = parse_dataset(&b"x,y\n1,2\n3,oops\n"[..]).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("oops"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_and_unknown_inputs_are_parse_errors() {
        assert!(matches!(parse_dataset(&b"x,y\n1,2\n3\n"[..]), Err(Error::Parse { .. })));
        assert!(matches!(parse_dataset(&b"a,b\n1,2\n"[..]), Err(Error::Parse { line: 1, .. })));
        let holes = b"h,l,x,y,z\n0,0,1,1,1\n0,1,1,1,1\n1,1,1,1,1\n";
        assert!(matches!(parse_dataset(&holes[..]), Err(Error::Parse { .. })));
    }
}
