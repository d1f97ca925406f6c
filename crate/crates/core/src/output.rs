//! Snapshot and time-series writers.
//!
//! Files are named `{field}_{step:08}.{ext}`:
//!
//! - `state_XXXXXXXX.vtk`: legacy ASCII VTK unstructured grid with point
//!   scalars `phi`, `psi`, `mu` and `q`.
//! - `phi_XXXXXXXX.pgm`, `psi_XXXXXXXX.pgm`: binary 8-bit grayscale on the
//!   nodal grid, top row of the image is the top row of the domain.
//! - `state_XXXXXXXX.csv`: `node,x,y,phi,psi,mu,z,q`.
//!
//! Reals are written with 17 significant digits so that every file is a
//! deterministic function of the state.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::OutputFormat;
use crate::diagnostics::TimeSeriesRow;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::solver::State;

pub const TIMESERIES_FILE: &str = "timeseries.csv";

/// Gray level of `value` on the linear ramp `lo → 0`, `hi → 255`.
///
/// Values outside `[lo, hi]` saturate; ties round half up, so the midpoint
/// maps to 128.
pub fn pgm_level(value: f64, lo: f64, hi: f64) -> u8 {
    let t = ((value - lo) / (hi - lo)).clamp(0.0, 1.0);
    (255.0 * t + 0.5).floor() as u8
}

pub fn snapshot_path(out_dir: &Path, field: &str, step: usize, ext: &str) -> PathBuf {
    out_dir.join(format!("{field}_{step:08}.{ext}"))
}

/// Writes one snapshot per requested format; returns the paths written.
pub fn write_snapshot(
    state: &State,
    mesh: &Mesh,
    formats: &[OutputFormat],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if state.n_nodes() != mesh.n_nodes() {
        return Err(Error::DimensionError {
            expected: mesh.n_nodes(),
            got: state.n_nodes(),
        });
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            OutputFormat::Vtk => {
                let path = snapshot_path(out_dir, "state", state.step, "vtk");
                write_file(&path, |w| write_vtk(w, state, mesh))?;
                written.push(path);
            }
            OutputFormat::Pgm => {
                let side = mesh.nodes_per_side();
                for (field, values, lo, hi) in [("phi", &state.phi, -1.0, 1.0), ("psi", &state.psi, 0.0, 1.0)] {
                    let path = snapshot_path(out_dir, field, state.step, "pgm");
                    write_file(&path, |w| write_pgm(w, values, side, lo, hi))?;
                    written.push(path);
                }
            }
            OutputFormat::Csv => {
                let path = snapshot_path(out_dir, "state", state.step, "csv");
                write_file(&path, |w| write_csv(w, state, mesh))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_vtk(w: &mut impl Write, state: &State, mesh: &Mesh) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "step {} time {:.16e}", state.step, state.time)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_nodes())?;
    for p in &mesh.nodes {
        writeln!(w, "{:.16e} {:.16e} 0", p[0], p[1])?;
    }
    writeln!(w, "CELLS {} {}", mesh.n_elements(), 4 * mesh.n_elements())?;
    for t in &mesh.elements {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.n_elements())?;
    for _ in 0..mesh.n_elements() {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", mesh.n_nodes())?;
    for (name, values) in [("phi", &state.phi), ("psi", &state.psi), ("mu", &state.w), ("q", &state.q)] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in values {
            writeln!(w, "{v:.16e}")?;
        }
    }
    Ok(())
}

fn write_pgm(w: &mut impl Write, values: &[f64], side: usize, lo: f64, hi: f64) -> std::io::Result<()> {
    write!(w, "P5\n{side} {side}\n255\n")?;
    let mut pixels = Vec::with_capacity(values.len());
    for row in values.chunks_exact(side).rev() {
        pixels.extend(row.iter().map(|&v| pgm_level(v, lo, hi)));
    }
    w.write_all(&pixels)
}

fn write_csv(w: &mut impl Write, state: &State, mesh: &Mesh) -> std::io::Result<()> {
    writeln!(w, "node,x,y,phi,psi,mu,z,q")?;
    for (j, p) in mesh.nodes.iter().enumerate() {
        writeln!(
            w,
            "{j},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p[0], p[1], state.phi[j], state.psi[j], state.w[j], state.z[j], state.q[j]
        )?;
    }
    Ok(())
}

/// Writes `timeseries.csv` into `out_dir`.
pub fn write_timeseries(rows: &[TimeSeriesRow], out_dir: &Path) -> Result<PathBuf> {
    if rows.is_empty() {
        return Err(Error::InsufficientData("time series has no rows".to_string()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join(TIMESERIES_FILE);
    write_file(&path, |w| {
        writeln!(w, "{}", TimeSeriesRow::HEADER)?;
        for row in rows {
            writeln!(w, "{}", row.to_csv())?;
        }
        Ok(())
    })?;
    Ok(path)
}

/// Nodal `ψ` values and the grid side length read back from a CSV or VTK
/// snapshot written by [`write_snapshot`].
pub fn read_snapshot_psi(path: &Path) -> Result<(Vec<f64>, usize)> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, message: &str| Error::ParseError {
        line,
        message: format!("{}: {message}", path.display()),
    };
    let psi = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let header = lines.first().ok_or_else(|| bad(1, "empty file"))?;
            let col = header
                .split(',')
                .position(|c| c.trim() == "psi")
                .ok_or_else(|| bad(1, "no `psi` column"))?;
            lines[1..]
                .iter()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    l.split(',')
                        .nth(col)
                        .and_then(|v| v.trim().parse::<f64>().ok())
                        .ok_or_else(|| bad(i + 2, "bad `psi` value"))
                })
                .collect::<Result<Vec<f64>>>()?
        }
        Some("vtk") => {
            let n = lines
                .iter()
                .find_map(|l| l.strip_prefix("POINT_DATA "))
                .and_then(|v| v.trim().parse::<usize>().ok())
                .ok_or_else(|| bad(0, "no POINT_DATA section"))?;
            let start = lines
                .iter()
                .position(|l| l.starts_with("SCALARS psi"))
                .ok_or_else(|| bad(0, "no `psi` scalars"))?
                + 2;
            lines
                .get(start..start + n)
                .ok_or_else(|| bad(start + 1, "truncated `psi` scalars"))?
                .iter()
                .enumerate()
                .map(|(i, l)| l.trim().parse::<f64>().map_err(|_| bad(start + i + 1, "bad `psi` value")))
                .collect::<Result<Vec<f64>>>()?
        }
        _ => return Err(bad(0, "expected a .csv or .vtk snapshot")),
    };
    let side = (psi.len() as f64).sqrt().round() as usize;
    if side < 3 || side * side != psi.len() {
        return Err(bad(0, &format!("{} values do not form a square grid", psi.len())));
    }
    Ok((psi, side))
}
