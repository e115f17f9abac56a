//! Model persistence: a key-value manifest plus one ROM1 matrix per operator.
//!
//! ```text
//! format = rollinf-model
//! version = 1
//! degree = 2
//! state_dim = 10
//! control_dim = 0
//! dt = 0.0004
//! scheme = imex
//! operator.1 = model_A1.rom1
//! operator.2 = model_A2.rom1
//! input = model_B.rom1        # only when control_dim > 0
//! ```

use std::path::Path;

use nalgebra::DMatrix;

use super::{Operators, PolyModel, Scheme};
use crate::datamodel::{load_matrix, save_rom1, KeyValues};
use crate::error::{Error, Result};

pub fn save_model(manifest: &Path, model: &PolyModel) -> Result<()> {
    save_operators(manifest, model.operators(), model.dt(), model.scheme())
}

/// Writes operators with their time discretization without requiring that
/// the implicit matrix be invertible.
pub fn save_operators(manifest: &Path, ops: &Operators, dt: f64, scheme: Scheme) -> Result<()> {
    let dir = manifest.parent().unwrap_or_else(|| Path::new(""));
    let stem = manifest.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    let mut kv = KeyValues::new();
    kv.set("format", "rollinf-model");
    kv.set("version", "1");
    kv.set("degree", ops.degree().to_string());
    kv.set("state_dim", ops.state_dim().to_string());
    kv.set("control_dim", ops.control_dim().to_string());
    kv.set("dt", format!("{dt:?}"));
    kv.set("scheme", scheme.name());
    for l in 1..=ops.degree() {
        let file = format!("{stem}_A{l}.rom1");
        save_rom1(&dir.join(&file), &ops.block(l).into_owned())?;
        kv.set(format!("operator.{l}"), file);
    }
    if ops.control_dim() > 0 {
        let file = format!("{stem}_B.rom1");
        save_rom1(&dir.join(&file), &ops.input().into_owned())?;
        kv.set("input", file);
    }
    crate::datamodel::io_write_atomic(manifest, kv.render().as_bytes())
}

pub fn load_model(manifest: &Path) -> Result<PolyModel> {
    let (ops, dt, scheme) = load_operators(manifest)?;
    PolyModel::new(ops, dt, scheme)
}

pub fn load_operators(manifest: &Path) -> Result<(Operators, f64, Scheme)> {
    let kv = KeyValues::read(manifest)?;
    let bad = |reason: String| Error::Format {
        path: manifest.to_path_buf(),
        offset: 0,
        reason,
    };
    if kv.get("format") != Some("rollinf-model") || kv.get("version") != Some("1") {
        return Err(bad("not a version-1 rollinf-model manifest".into()));
    }
    let need = |k: &str| kv.get(k).ok_or_else(|| bad(format!("missing `{k}`")));
    let degree: usize = need("degree")?.parse().map_err(|_| bad("bad `degree`".into()))?;
    let n: usize = need("state_dim")?.parse().map_err(|_| bad("bad `state_dim`".into()))?;
    let p: usize = need("control_dim")?.parse().map_err(|_| bad("bad `control_dim`".into()))?;
    let dt: f64 = need("dt")?.parse().map_err(|_| bad("bad `dt`".into()))?;
    let scheme: Scheme = need("scheme")?.parse()?;
    let dir = manifest.parent().unwrap_or_else(|| Path::new(""));
    let blocks = (1..=degree)
        .map(|l| load_matrix(&dir.join(need(&format!("operator.{l}"))?)))
        .collect::<Result<Vec<_>>>()?;
    let input = if p > 0 {
        load_matrix(&dir.join(need("input")?))?
    } else {
        DMatrix::zeros(n, 0)
    };
    if blocks.first().map(|b| b.nrows()) != Some(n) {
        return Err(Error::Data(format!("{}: operators do not have {n} rows", manifest.display())));
    }
    Ok((Operators::from_blocks(&blocks, &input)?, dt, scheme))
}

/// One operator set per training input, sharing a time discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    pub params: Vec<Vec<f64>>,
    pub operators: Vec<Operators>,
    pub dt: f64,
    pub scheme: Scheme,
}

const SET_INDEX: &str = "models.txt";

impl OperatorSet {
    /// Writes `models.txt` and one `model_e{i}.manifest` per entry into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        if self.params.len() != self.operators.len() {
            return Err(Error::Argument("one parameter vector per operator set required".into()));
        }
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut kv = KeyValues::new();
        kv.set("format", "rollinf-model-set");
        kv.set("version", "1");
        kv.set("models", self.operators.len().to_string());
        for (i, (p, ops)) in self.params.iter().zip(&self.operators).enumerate() {
            let file = format!("model_e{i}.manifest");
            save_operators(&dir.join(&file), ops, self.dt, self.scheme)?;
            kv.set(format!("model.{i}.param"), p.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(","));
            kv.set(format!("model.{i}.manifest"), file);
        }
        crate::datamodel::io_write_atomic(&dir.join(SET_INDEX), kv.render().as_bytes())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let index = dir.join(SET_INDEX);
        let kv = KeyValues::read(&index)?;
        let bad = |reason: String| Error::Format {
            path: index.clone(),
            offset: 0,
            reason,
        };
        if kv.get("format") != Some("rollinf-model-set") || kv.get("version") != Some("1") {
            return Err(bad("not a version-1 rollinf-model-set index".into()));
        }
        let count: usize = kv.parsed("models").map_err(&bad)?.ok_or_else(|| bad("missing `models`".into()))?;
        let mut set = OperatorSet {
            params: Vec::with_capacity(count),
            operators: Vec::with_capacity(count),
            dt: 0.0,
            scheme: Scheme::ImexLinearImplicit,
        };
        for i in 0..count {
            let param = kv.get(&format!("model.{i}.param")).ok_or_else(|| bad(format!("missing `model.{i}.param`")))?;
            let param = if param.is_empty() {
                Vec::new()
            } else {
                param
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad(format!("bad `model.{i}.param`")))?
            };
            let file = kv.get(&format!("model.{i}.manifest")).ok_or_else(|| bad(format!("missing `model.{i}.manifest`")))?;
            let (ops, dt, scheme) = load_operators(&dir.join(file))?;
            if i > 0 && (dt != set.dt || scheme != set.scheme || !ops.same_shape(&set.operators[0])) {
                return Err(bad(format!("model {i} does not match model 0")));
            }
            set.dt = dt;
            set.scheme = scheme;
            set.params.push(param);
            set.operators.push(ops);
        }
        if count == 0 {
            return Err(bad("empty model set".into()));
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_set_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.25, 0.0, -2.0]);
        let h = DMatrix::from_row_slice(2, 3, &[0.1, 0.0, -0.3, 0.0, 0.2, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let ops = Operators::from_blocks(&[a, h], &b).unwrap();
        let set = OperatorSet {
            params: vec![vec![0.5, 1.0], vec![0.75, 1.0]],
            operators: vec![ops.clone(), ops],
            dt: 0.01,
            scheme: Scheme::ForwardEuler,
        };
        set.save(dir.path()).unwrap();
        assert_eq!(OperatorSet::load(dir.path()).unwrap(), set);
    }

    #[test]
    fn singular_implicit_matrix_still_saves() {
        let dir = tempfile::tempdir().unwrap();
        let ops = Operators::from_blocks(&[DMatrix::from_element(1, 1, 10.0)], &DMatrix::zeros(1, 0)).unwrap();
        let path = dir.path().join("m.manifest");
        save_operators(&path, &ops, 0.1, Scheme::ImexLinearImplicit).unwrap();
        assert_eq!(load_operators(&path).unwrap().0, ops);
        assert!(load_model(&path).is_err());
    }

    #[test]
    fn missing_manifest_names_the_path() {
        let err = load_model(Path::new("/nonexistent/model.manifest")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/model.manifest"));
    }
}
