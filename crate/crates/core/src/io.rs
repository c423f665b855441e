//! File formats.
//!
//! * Friedrichs matrix, JSON: `{"n": N, "entries": [[...], ...]}`
//! * Friedrichs matrix, CSV: N rows of N comma-separated decimals, no header
//! * Additive TSP instance, JSON: `{"n": N, "weights": [[...], ...]}`
//! * Real constellation, JSON: `{"ambient_dim": d, "field": "real", "frames": [[v, ...], ...]}`
//!   where each frame is a list of orthonormal basis vectors
//! * Convergence curve, CSV: columns `n,error,bound`
//!
//! Every float is written with 17 significant digits, so output round-trips
//! exactly and is byte-identical across runs.

use std::io::{self, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmatrix::{Constellation, FriedrichsMatrix};
use crate::mapsim::ConvergenceCurve;
use crate::subspace::{Frame, ScalarField};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct SigFigs;

impl serde_json::ser::Formatter for SigFigs {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Compact JSON with fixed key order and 17-digit floats.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigs);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn matrix_from_json(s: &str) -> Result<FriedrichsMatrix> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

pub fn matrix_from_csv(s: &str) -> Result<FriedrichsMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(s.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("{f:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    FriedrichsMatrix::from_rows(&rows)
}

pub fn matrix_to_csv(c: &FriedrichsMatrix) -> String {
    let mut out = String::new();
    for row in c.rows() {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Four-decimal table, one row per line.
pub fn matrix_pretty(c: &FriedrichsMatrix) -> String {
    let mut out = String::new();
    for row in c.rows() {
        let cells: Vec<String> = row.into_iter().map(|v| format!("{v:.4}")).collect();
        out.push_str(&cells.join("  "));
        out.push('\n');
    }
    out
}

#[derive(Serialize, Deserialize)]
struct ConstellationFile {
    ambient_dim: usize,
    field: ScalarField,
    frames: Vec<Vec<Vec<f64>>>,
}

pub fn constellation_to_json(k: &Constellation) -> Result<String> {
    let file = ConstellationFile {
        ambient_dim: k.ambient_dim(),
        field: ScalarField::Real,
        frames: k
            .frames()
            .iter()
            .map(|f| f.vectors().iter().map(|v| v.iter().copied().collect()).collect())
            .collect(),
    };
    to_json(&file)
}

pub fn constellation_from_json(s: &str) -> Result<Constellation> {
    let file: ConstellationFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    if file.field != ScalarField::Real {
        return Err(Error::Parse("only real constellations can be read from files".into()));
    }
    let frames = file
        .frames
        .iter()
        .map(|vs| {
            if let Some(v) = vs.iter().find(|v| v.len() != file.ambient_dim) {
                return Err(Error::DimensionMismatch { expected: file.ambient_dim, found: v.len() });
            }
            let flat: Vec<f64> = vs.iter().flatten().copied().collect();
            Frame::from_orthonormal(DMatrix::from_column_slice(file.ambient_dim, vs.len(), &flat))
        })
        .collect::<Result<Vec<_>>>()?;
    Constellation::new(frames)
}

pub fn curve_to_csv(curve: &ConvergenceCurve) -> String {
    let mut out = String::from("n,error,bound\n");
    for (i, (n, e)) in curve.ns.iter().zip(&curve.errors).enumerate() {
        let bound = curve
            .bound_values
            .as_ref()
            .map(|b| fmt_f64(b[i]))
            .unwrap_or_default();
        out.push_str(&format!("{n},{},{bound}\n", fmt_f64(*e)));
    }
    out
}

/// A file that holds either a matrix or a constellation.
#[derive(Clone, Debug)]
pub enum Input {
    Matrix(FriedrichsMatrix),
    Constellation(Constellation),
}

/// Reads a matrix (`.csv` or JSON) or a constellation (JSON with `frames`).
pub fn load_input(path: &Path) -> Result<Input> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return matrix_from_csv(&text).map(Input::Matrix);
    }
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if value.get("frames").is_some() {
        constellation_from_json(&text).map(Input::Constellation)
    } else {
        matrix_from_json(&text).map(Input::Matrix)
    }
}
