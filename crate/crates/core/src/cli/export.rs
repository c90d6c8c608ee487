//! CSV and legacy-VTK I/O for fields, nodal coefficients and sweep tables.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::analysis::evaluate_field;
use crate::error::{Error, Result};
use crate::model::{GridSpec, SolutionField};
use crate::sweep::{ModalityInterval, SweepRecord};

/// Field values on a uniform `nx x ny` lattice, x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    pub nx: usize,
    pub ny: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl FieldSamples {
    pub fn sample(field: &SolutionField, nx: usize, ny: usize) -> Result<Self> {
        let l = field.grid().half_width();
        let lattice = |n: usize, lo: f64, hi: f64| -> Vec<f64> {
            let mut v: Vec<f64> = (0..n)
                .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
                .collect();
            v[n - 1] = hi;
            v
        };
        let xs = lattice(nx, 0.0, PI);
        let ys = lattice(ny, -l, l);
        let mut values = Vec::with_capacity(nx * ny);
        for &y in &ys {
            for &x in &xs {
                values.push(evaluate_field(field, x, y, 0, 0)?);
            }
        }
        Ok(Self {
            nx,
            ny,
            xs,
            ys,
            values,
        })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.ys.iter().enumerate().flat_map(move |(j, &y)| {
            self.xs
                .iter()
                .enumerate()
                .map(move |(i, &x)| (x, y, self.values[j * self.nx + i]))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    pub u: f64,
}

/// Nodal coefficient row; `i` and `j` are one-based interior-x and y node labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub q: f64,
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn write_field_csv(path: &Path, samples: &FieldSamples) -> Result<()> {
    write_rows(path, samples.points().map(|(x, y, u)| FieldRow { x, y, u }))
}

pub fn read_field_csv(path: &Path) -> Result<Vec<FieldRow>> {
    read_rows(path)
}

pub fn write_nodes_csv(path: &Path, field: &SolutionField) -> Result<()> {
    let grid = field.grid();
    let rows = (0..grid.dof()).map(|t| {
        let (i, j) = grid.unflat(t);
        let (x, y) = grid.dof_point(t);
        NodeRow {
            i: i + 1,
            j: j + 1,
            x,
            y,
            q: field.coefficients[t],
        }
    });
    write_rows(path, rows)
}

/// Reads nodal coefficients written by [`write_nodes_csv`] for `grid`.
pub fn read_nodes_csv(path: &Path, grid: &GridSpec) -> Result<DVector<f64>> {
    let rows: Vec<NodeRow> = read_rows(path)?;
    if rows.len() != grid.dof() {
        return Err(format_err(
            path,
            format!("{} nodes in file, grid has {} dof", rows.len(), grid.dof()),
        ));
    }
    let mut q = DVector::from_element(grid.dof(), f64::NAN);
    for r in rows {
        let t = grid
            .dof_index(r.i, r.j)
            .map_err(|e| format_err(path, e.to_string()))?
            - 1;
        let (x, y) = grid.dof_point(t);
        if (x - r.x).abs() > 1e-9 || (y - r.y).abs() > 1e-9 {
            return Err(format_err(
                path,
                format!(
                    "node ({}, {}) at ({}, {}) does not match grid point ({x}, {y})",
                    r.i, r.j, r.x, r.y
                ),
            ));
        }
        q[t] = r.q;
    }
    if q.iter().any(|v| v.is_nan()) {
        return Err(format_err(path, "duplicate or missing nodes"));
    }
    Ok(q)
}

/// Legacy ASCII structured grid with point scalar `u`.
pub fn write_vtk(path: &Path, samples: &FieldSamples, title: &str) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = samples.nx * samples.ny;
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_GRID")?;
    writeln!(w, "DIMENSIONS {} {} 1", samples.nx, samples.ny)?;
    writeln!(w, "POINTS {n} double")?;
    for (x, y, _) in samples.points() {
        writeln!(w, "{x:e} {y:e} 0")?;
    }
    writeln!(w, "POINT_DATA {n}")?;
    writeln!(w, "SCALARS u double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in &samples.values {
        writeln!(w, "{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vtk(path: &Path) -> Result<FieldSamples> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let mut expect = |prefix: &str| -> Result<String> {
        let line = lines
            .by_ref()
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| format_err(path, format!("missing `{prefix}`")))?;
        if !line.starts_with(prefix) {
            return Err(format_err(
                path,
                format!("expected `{prefix}`, found `{line}`"),
            ));
        }
        Ok(line.to_string())
    };
    expect("# vtk DataFile")?;
    let _title = lines.next();
    let mut lines = lines.filter(|l| !l.trim().is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| format_err(path, format!("missing {what}")))
    };
    if next("ASCII")?.trim() != "ASCII" {
        return Err(format_err(path, "only ASCII files are supported"));
    }
    if next("DATASET")?.trim() != "DATASET STRUCTURED_GRID" {
        return Err(format_err(path, "not a structured grid"));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| format_err(path, format!("bad number `{s}`: {e}")))
    };
    let dims: Vec<usize> = next("DIMENSIONS")?
        .split_whitespace()
        .skip(1)
        .map(|s| s.parse().map_err(|_| format_err(path, "bad DIMENSIONS")))
        .collect::<Result<_>>()?;
    let (nx, ny) = match dims.as_slice() {
        [nx, ny, 1] => (*nx, *ny),
        _ => return Err(format_err(path, "expected DIMENSIONS nx ny 1")),
    };
    let n = nx * ny;
    next("POINTS")?;
    let mut pts = Vec::with_capacity(n);
    for _ in 0..n {
        let line = next("point")?;
        let c: Vec<f64> = line.split_whitespace().map(num).collect::<Result<_>>()?;
        if c.len() != 3 {
            return Err(format_err(path, format!("bad point `{line}`")));
        }
        pts.push((c[0], c[1]));
    }
    next("POINT_DATA")?;
    next("SCALARS")?;
    next("LOOKUP_TABLE")?;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(num(next("value")?.trim())?);
    }
    let xs = pts[..nx].iter().map(|p| p.0).collect();
    let ys = pts.iter().step_by(nx).map(|p| p.1).collect();
    Ok(FieldSamples {
        nx,
        ny,
        xs,
        ys,
        values,
    })
}

/// Writer that flushes each sweep record as it arrives.
pub struct SweepWriter {
    inner: csv::Writer<File>,
}

impl SweepWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut inner = csv::Writer::from_path(path)?;
        inner.write_record([
            "alpha",
            "modality",
            "zero_count",
            "amplitude",
            "l2",
            "energy",
            "flag",
        ])?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn push(&mut self, r: &SweepRecord) -> Result<()> {
        self.inner.write_record([
            r.alpha.to_string(),
            r.modality_m.to_string(),
            r.zero_count.to_string(),
            r.amplitude.to_string(),
            r.l2.to_string(),
            r.energy.to_string(),
            r.flag.as_str().to_string(),
        ])?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_sweep_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    let mut w = SweepWriter::create(path)?;
    for r in records {
        w.push(r)?;
    }
    Ok(())
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    read_rows(path)
}

pub fn write_thresholds_csv(path: &Path, intervals: &[ModalityInterval]) -> Result<()> {
    write_rows(path, intervals.iter().copied())
}

pub fn read_thresholds_csv(path: &Path) -> Result<Vec<ModalityInterval>> {
    read_rows(path)
}
