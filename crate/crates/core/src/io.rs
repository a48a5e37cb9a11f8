//! Plain-text formats: voxel lists, per-surfel normals, cochain and operator
//! CSV files, solutions and pin specifications.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! output is deterministic and reads back bit-identically.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use num_complex::Complex64;

use crate::conformal::NormalField;
use crate::dec::Cochain;
use crate::error::{Error, Result};
use crate::graph::{DoubleGraph, VertexKey};
use crate::operators::SparseOperator;
use crate::surface::{CornerId, Face, SurfelId, VoxelCoord};

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Significant lines with their 1-based numbers: blank lines and `#`
/// comments are skipped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_field<T: std::str::FromStr>(line: usize, field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| parse_error(line, format!("invalid {what} '{field}'")))
}

/// Voxels, one `x y z` triple per line. Duplicates are collapsed and the
/// result is sorted.
pub fn parse_voxels(text: &str) -> Result<Vec<VoxelCoord>> {
    let mut set = BTreeSet::new();
    for (line, content) in content_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_error(line, format!("expected 3 integers, found {}", fields.len())));
        }
        let [x, y, z] = [0, 1, 2].map(|k| parse_field::<i64>(line, fields[k], "coordinate"));
        set.insert(VoxelCoord::new(x?, y?, z?));
    }
    Ok(set.into_iter().collect())
}

pub fn read_voxels(path: impl AsRef<Path>) -> Result<Vec<VoxelCoord>> {
    parse_voxels(&std::fs::read_to_string(path)?)
}

/// Normals, one `x y z F nx ny nz` line per surfel, `(x, y, z)` being the
/// owning voxel and `F` one of `±X`, `±Y`, `±Z`. Normals are normalized.
pub fn parse_normals(text: &str) -> Result<NormalField> {
    let (_, normals) = parse_surfel_lines(text, true)?;
    Ok(normals)
}

/// An explicit surfel list in the normals format, with the normal columns
/// optional: `x y z F [nx ny nz]`. Returns the surfels in file order and
/// the normals that were given.
pub fn parse_surfels(text: &str) -> Result<(Vec<SurfelId>, NormalField)> {
    parse_surfel_lines(text, false)
}

fn parse_surfel_lines(text: &str, require_normal: bool) -> Result<(Vec<SurfelId>, NormalField)> {
    let mut surfels = Vec::new();
    let mut seen = BTreeSet::new();
    let mut field = NormalField::new();
    for (line, content) in content_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 7 && (require_normal || fields.len() != 4) {
            let expected = if require_normal { "7" } else { "4 or 7" };
            return Err(parse_error(
                line,
                format!("expected {expected} fields, found {}", fields.len()),
            ));
        }
        let [x, y, z] = [0, 1, 2].map(|k| parse_field::<i64>(line, fields[k], "coordinate"));
        let face: Face = fields[3].parse().map_err(|e: String| parse_error(line, e))?;
        let surfel = SurfelId::new(VoxelCoord::new(x?, y?, z?), face);
        if !seen.insert(surfel) {
            return Err(parse_error(line, format!("surfel {surfel} listed twice")));
        }
        surfels.push(surfel);
        if fields.len() == 7 {
            let [nx, ny, nz] =
                [4, 5, 6].map(|k| parse_field::<f64>(line, fields[k], "normal component"));
            let n = [nx?, ny?, nz?];
            if n.iter().any(|c| !c.is_finite()) {
                return Err(parse_error(line, "non-finite normal"));
            }
            field
                .insert(surfel, n)
                .map_err(|e| parse_error(line, e.to_string()))?;
        }
    }
    Ok((surfels, field))
}

pub fn read_surfels(path: impl AsRef<Path>) -> Result<(Vec<SurfelId>, NormalField)> {
    parse_surfels(&std::fs::read_to_string(path)?)
}

pub fn read_normals(path: impl AsRef<Path>) -> Result<NormalField> {
    parse_normals(&std::fs::read_to_string(path)?)
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    parse_error(line, e.to_string())
}

fn write_rows<const N: usize>(header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let result: csv::Result<()> = (|| {
        writer.write_record(header)?;
        for row in rows {
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    })();
    result.expect("writing to memory cannot fail");
    String::from_utf8(writer.into_inner().expect("in-memory writer")).expect("CSV output is UTF-8")
}

/// A cochain as `key,re,im` rows in canonical cell order.
pub fn write_cochain(graph: &DoubleGraph, c: &Cochain) -> String {
    write_rows(
        ["key", "re", "im"],
        c.values.iter().enumerate().map(|(i, z)| {
            [graph.cell_key(c.degree, i), z.re.to_string(), z.im.to_string()]
        }),
    )
}

/// Reads a `key,re,im` CSV of a k-cochain. Every cell must appear exactly
/// once; all missing keys are reported together.
pub fn parse_cochain(graph: &DoubleGraph, degree: usize, text: &str) -> Result<Cochain> {
    if degree > 2 {
        return Err(Error::DimensionError {
            op: "parse_cochain",
            degree,
        });
    }
    let index: BTreeMap<String, usize> = (0..graph.cell_count(degree))
        .map(|i| (graph.cell_key(degree, i), i))
        .collect();
    let mut values: Vec<Option<Complex64>> = vec![None; index.len()];
    let mut reader = csv_reader(text);
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 3 {
            return Err(parse_error(line, format!("expected 3 fields, found {}", record.len())));
        }
        let key = &record[0];
        let &i = index
            .get(key)
            .ok_or_else(|| Error::UnknownCell(key.to_string()))?;
        if values[i].is_some() {
            return Err(parse_error(line, format!("duplicate key {key}")));
        }
        let re: f64 = parse_field(line, &record[1], "real part")?;
        let im: f64 = parse_field(line, &record[2], "imaginary part")?;
        values[i] = Some(Complex64::new(re, im));
    }
    let missing: Vec<String> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_none())
        .map(|(i, _)| graph.cell_key(degree, i))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingCell(missing.join(", ")));
    }
    Cochain::from_values(graph, degree, values.into_iter().flatten().collect())
}

pub fn read_cochain(graph: &DoubleGraph, degree: usize, path: impl AsRef<Path>) -> Result<Cochain> {
    parse_cochain(graph, degree, &std::fs::read_to_string(path)?)
}

/// An operator as `row,col,re,im` triplets in canonical order.
pub fn write_operator(op: &SparseOperator) -> String {
    write_rows(
        ["row", "col", "re", "im"],
        op.entries().iter().map(|&(r, c, z)| {
            [
                op.row_keys()[r].clone(),
                op.col_keys()[c].clone(),
                z.re.to_string(),
                z.im.to_string(),
            ]
        }),
    )
}

/// A function on corners as `cx,cy,cz,re,im` rows.
pub fn write_solution(graph: &DoubleGraph, f: &Cochain) -> Result<String> {
    let mut rows = Vec::with_capacity(f.len());
    for (v, z) in f.values.iter().enumerate() {
        let VertexKey::Corner(c) = graph.vertex(v).key else {
            return Err(Error::InvalidConfiguration(format!(
                "vertex {} is not a lattice corner",
                graph.vertex_label(v)
            )));
        };
        rows.push([
            c.cx.to_string(),
            c.cy.to_string(),
            c.cz.to_string(),
            z.re.to_string(),
            z.im.to_string(),
        ]);
    }
    Ok(write_rows(["cx", "cy", "cz", "re", "im"], rows))
}

/// Pins written as `cx,cy,cz=re,im` separated by `;`.
pub fn parse_pins(text: &str) -> Result<Vec<(CornerId, Complex64)>> {
    let mut pins = Vec::new();
    let mut seen = BTreeSet::new();
    for (k, item) in text.split(';').map(str::trim).filter(|s| !s.is_empty()).enumerate() {
        let entry = k + 1;
        let (corner, value) = item
            .split_once('=')
            .ok_or_else(|| parse_error(entry, format!("pin '{item}' lacks '='")))?;
        let coords: Vec<&str> = corner.split(',').map(str::trim).collect();
        let parts: Vec<&str> = value.split(',').map(str::trim).collect();
        if coords.len() != 3 || parts.len() != 2 {
            return Err(parse_error(entry, format!("pin '{item}' is not 'cx,cy,cz=re,im'")));
        }
        let [cx, cy, cz] = [0, 1, 2].map(|i| parse_field::<i64>(entry, coords[i], "corner coordinate"));
        let c = CornerId::new(cx?, cy?, cz?);
        let z = Complex64::new(
            parse_field(entry, parts[0], "real part")?,
            parse_field(entry, parts[1], "imaginary part")?,
        );
        if !seen.insert(c) {
            return Err(parse_error(entry, format!("corner {c} pinned twice")));
        }
        pins.push((c, z));
    }
    Ok(pins)
}
