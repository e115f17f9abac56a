//! ROM1 binary matrices, CSV matrices and dataset manifests.
//!
//! ROM1 layout (little-endian): `b"ROM1"`, `u32` version (= 1), `u64` rows,
//! `u64` cols, then `rows·cols` `f64` values in row-major order.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::{KeyValues, TimeGrid, Trajectory, TrajectoryDataset};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"ROM1";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Rom1,
    Csv,
}

impl MatrixFormat {
    /// `.csv` files are CSV, everything else is ROM1.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Rom1,
        }
    }
}

fn format_err(path: &Path, offset: u64, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        offset,
        reason: reason.into(),
    }
}

pub fn encode_rom1(m: &DMatrix<f64>) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * m.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            buf.extend_from_slice(&m[(r, c)].to_le_bytes());
        }
    }
    buf
}

pub fn decode_rom1(bytes: &[u8], path: &Path) -> Result<DMatrix<f64>> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(format_err(path, 0, "bad magic, expected ROM1"));
    }
    if bytes.len() < HEADER_LEN {
        return Err(format_err(path, bytes.len() as u64, "truncated header"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(format_err(path, 4, format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN as u64))
        .ok_or_else(|| format_err(path, 8, format!("dimensions {rows}x{cols} overflow")))?;
    if bytes.len() as u64 != expected {
        return Err(format_err(
            path,
            (bytes.len() as u64).min(expected),
            format!("{rows}x{cols} matrix needs {expected} bytes, file has {}", bytes.len()),
        ));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let mut m = DMatrix::zeros(rows, cols);
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::Data(format!(
                "{}: non-finite value at byte {}",
                path.display(),
                HEADER_LEN + 8 * i
            )));
        }
        m[(i / cols, i % cols)] = v;
    }
    Ok(m)
}

pub fn encode_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:.16e}", m[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn decode_csv(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len() as u64;
        let body = line.trim_end_matches(['\n', '\r']);
        if body.trim().is_empty() {
            continue;
        }
        let mut n = 0;
        for field in body.split(',') {
            let f = field.trim();
            let v: f64 = f
                .parse()
                .map_err(|_| format_err(path, start, format!("line {}: cannot parse `{f}`", rows + 1)))?;
            if !v.is_finite() {
                return Err(Error::Data(format!("{}: non-finite value on line {}", path.display(), rows + 1)));
            }
            values.push(v);
            n += 1;
        }
        match cols {
            None => cols = Some(n),
            Some(c) if c != n => {
                return Err(format_err(path, start, format!("line {} has {n} fields, expected {c}", rows + 1)))
            }
            _ => {}
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols.unwrap_or(0), &values))
}

pub fn save_rom1(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_atomic(path, &encode_rom1(m))
}

pub fn load_rom1(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_rom1(&bytes, path)
}

pub fn save_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_atomic(path, encode_csv(m).as_bytes())
}

pub fn load_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_csv(&text, path)
}

/// Loads either format; ROM1 is recognized by its magic bytes.
pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) || MatrixFormat::from_path(path) == MatrixFormat::Rom1 {
        decode_rom1(&bytes, path)
    } else {
        let text = String::from_utf8(bytes).map_err(|e| format_err(path, e.utf8_error().valid_up_to() as u64, "not UTF-8"))?;
        decode_csv(&text, path)
    }
}

/// Saves in the format implied by the extension (see [`MatrixFormat::from_path`]).
pub fn save_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    match MatrixFormat::from_path(path) {
        MatrixFormat::Rom1 => save_rom1(path, m),
        MatrixFormat::Csv => save_csv(path, m),
    }
}

/// Writes through a temporary sibling file and renames it into place.
/// Writes through a `.tmp` sibling and a rename, creating parent directories.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

pub(crate) fn parse_floats(s: &str) -> std::result::Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|f| f.trim().parse::<f64>().map_err(|_| format!("cannot parse `{f}`")))
        .collect()
}

/// Writes a dataset manifest at `manifest` plus one ROM1 file per matrix next to it.
///
/// ```text
/// format = rollinf-dataset
/// version = 1
/// dt = 0.001
/// t0 = 0.0
/// entries = 2
///
/// [entry.0]
/// param = 0.225,1.15
/// num_steps = 200
/// states = data_e0_states.rom1
/// controls = data_e0_controls.rom1   # optional
/// ```
pub fn save_dataset(manifest: &Path, data: &TrajectoryDataset) -> Result<()> {
    let dir = manifest.parent().unwrap_or_else(|| Path::new(""));
    let stem = manifest.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    let mut kv = KeyValues::new();
    kv.set("format", "rollinf-dataset");
    kv.set("version", "1");
    let (t0, dt) = data
        .entries()
        .first()
        .map_or((0.0, 1.0), |(_, t)| (t.grid().t0, t.grid().dt));
    kv.set("dt", format!("{dt:?}"));
    kv.set("t0", format!("{t0:?}"));
    kv.set("entries", data.len().to_string());
    for (i, (param, traj)) in data.entries().iter().enumerate() {
        let states = format!("{stem}_e{i}_states.rom1");
        save_rom1(&dir.join(&states), traj.states())?;
        kv.set(format!("entry.{i}.param"), join_floats(param));
        kv.set(format!("entry.{i}.num_steps"), traj.num_steps().to_string());
        kv.set(format!("entry.{i}.states"), states);
        if traj.control_dim() > 0 {
            let controls = format!("{stem}_e{i}_controls.rom1");
            save_rom1(&dir.join(&controls), traj.controls())?;
            kv.set(format!("entry.{i}.controls"), controls);
        }
    }
    write_atomic(manifest, kv.render().as_bytes())
}

pub fn load_dataset(manifest: &Path) -> Result<TrajectoryDataset> {
    let kv = KeyValues::read(manifest)?;
    let bad = |reason: String| format_err(manifest, 0, reason);
    if kv.get("format") != Some("rollinf-dataset") {
        return Err(bad("missing `format = rollinf-dataset`".into()));
    }
    if kv.get("version") != Some("1") {
        return Err(bad("unsupported manifest version".into()));
    }
    let dt: f64 = kv.parsed("dt").map_err(bad)?.ok_or_else(|| bad("missing `dt`".into()))?;
    let t0: f64 = kv.parsed("t0").map_err(bad)?.unwrap_or(0.0);
    let count: usize = kv
        .parsed("entries")
        .map_err(bad)?
        .ok_or_else(|| bad("missing `entries`".into()))?;
    let dir = manifest.parent().unwrap_or_else(|| Path::new(""));
    let mut entries = Vec::with_capacity(count);
    for i in 0..count {
        let key = |k: &str| format!("entry.{i}.{k}");
        let param = parse_floats(kv.get(&key("param")).unwrap_or("")).map_err(bad)?;
        let states_path = kv
            .get(&key("states"))
            .ok_or_else(|| bad(format!("entry {i} has no `states`")))?;
        let states = load_matrix(&dir.join(states_path))?;
        if states.ncols() < 2 {
            return Err(Error::Data(format!("entry {i}: need at least two states")));
        }
        let num_steps = states.ncols() - 1;
        if let Some(k) = kv.parsed::<usize>(&key("num_steps")).map_err(bad)? {
            if k != num_steps {
                return Err(Error::Data(format!("entry {i}: num_steps = {k} but states have {} columns", states.ncols())));
            }
        }
        let controls = kv
            .get(&key("controls"))
            .map(|p| load_matrix(&dir.join(p)))
            .transpose()?;
        let grid = TimeGrid::new(t0, dt, num_steps)?;
        entries.push((param, Trajectory::new(states, controls, grid)?));
    }
    TrajectoryDataset::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rom1_literal() {
        let mut bytes = b"ROM1".to_vec();
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        for v in [1.0f64, 2.0, 3.0, 4.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let m = decode_rom1(&bytes, Path::new("x")).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert_eq!(encode_rom1(&m), bytes);
    }

    #[test]
    fn rom1_errors_carry_offsets() {
        let good = encode_rom1(&DMatrix::from_row_slice(1, 2, &[1.0, 2.0]));
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode_rom1(&bad_magic, Path::new("x")), Err(Error::Format { offset: 0, .. })));
        let mut bad_version = good.clone();
        bad_version[4] = 2;
        assert!(matches!(decode_rom1(&bad_version, Path::new("x")), Err(Error::Format { offset: 4, .. })));
        assert!(matches!(decode_rom1(&good[..30], Path::new("x")), Err(Error::Format { offset: 30, .. })));
        let mut nan = good.clone();
        nan[24..32].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(decode_rom1(&nan, Path::new("x")), Err(Error::Data(_))));
    }

    #[test]
    fn csv_literal_and_errors() {
        let m = decode_csv("1.5,2.0\n3.0,4.0", Path::new("x")).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.5, 2.0, 3.0, 4.0]));
        assert!(matches!(decode_csv("1,2\n3\n", Path::new("x")), Err(Error::Format { offset: 4, .. })));
        assert!(matches!(decode_csv("1;2\n", Path::new("x")), Err(Error::Format { .. })));
        assert!(matches!(decode_csv("1,2\n1,2,5\n", Path::new("x")), Err(Error::Format { .. })));
        assert!(matches!(decode_csv("1,inf\n", Path::new("x")), Err(Error::Data(_))));
        // no locale handling
        assert!(decode_csv("1,5;2\n", Path::new("x")).is_err());
    }
}
