//! Prediction errors, projection errors and operator interpolation.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::basis::ReducedBasis;
use crate::datamodel::{io_write_atomic, Trajectory, TrajectoryDataset};
use crate::error::{Error, Result};
use crate::polymodel::{simulate, Operators, PolyModel, Scheme};

/// Models used to predict each entry of a dataset.
#[derive(Debug, Clone, Copy)]
pub enum ModelSet<'a> {
    Shared(&'a PolyModel),
    PerEntry(&'a [PolyModel]),
}

impl<'a> ModelSet<'a> {
    fn get(&self, i: usize) -> &'a PolyModel {
        match *self {
            ModelSet::Shared(m) => m,
            ModelSet::PerEntry(ms) => &ms[i],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryError {
    pub error: f64,
    /// The prediction diverged and was replaced by the constant initial condition.
    pub diverged: bool,
}

/// `Σ_k ‖q_k − p_k‖ / Σ_k ‖q_k‖` over state columns.
fn relative_trajectory_error(truth: &DMatrix<f64>, mut prediction: impl FnMut(usize) -> DVector<f64>) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..truth.ncols() {
        let q = truth.column(k);
        num += (q - prediction(k)).norm();
        den += q.norm();
    }
    if den == 0.0 {
        return Err(Error::DegenerateData("truth trajectory is identically zero".into()));
    }
    Ok(num / den)
}

/// Per-entry relative errors of reduced-model predictions against full truth states.
///
/// Each entry is simulated from `V^T q_0` with its own controls and lifted by
/// `V`. A diverging prediction is replaced by the constant full-space `q_0`.
pub fn entry_errors(truth: &TrajectoryDataset, models: ModelSet<'_>, basis: &ReducedBasis) -> Result<Vec<EntryError>> {
    if truth.state_dim() != basis.full_dim() {
        return Err(Error::Argument(format!(
            "truth states have dim {}, basis full dim is {}",
            truth.state_dim(),
            basis.full_dim()
        )));
    }
    if let ModelSet::PerEntry(ms) = models {
        if ms.len() != truth.len() {
            return Err(Error::Argument(format!("{} models for {} entries", ms.len(), truth.len())));
        }
    }
    truth
        .trajectories()
        .enumerate()
        .map(|(i, traj)| entry_error(traj, models.get(i), basis))
        .collect()
}

/// Relative error of one reduced-model prediction against a full truth trajectory.
pub fn entry_error(traj: &Trajectory, model: &PolyModel, basis: &ReducedBasis) -> Result<EntryError> {
    check_model(model, traj, basis)?;
    let v = basis.matrix();
    let q0 = traj.initial_state();
    let controls = (traj.control_dim() > 0).then(|| traj.controls());
    let sim = simulate(model, &v.tr_mul(&q0), controls, traj.num_steps())?;
    if sim.diverged() {
        return substituted_error(traj);
    }
    let lifted = v * &sim.states;
    Ok(EntryError {
        error: relative_trajectory_error(traj.states(), |k| lifted.column(k).into_owned())?,
        diverged: false,
    })
}

/// Error of the constant prediction `q_k = q_0`, used in place of a diverged
/// or non-integrable model.
pub fn substituted_error(traj: &Trajectory) -> Result<EntryError> {
    let q0 = traj.initial_state();
    Ok(EntryError {
        error: relative_trajectory_error(traj.states(), |_| q0.clone())?,
        diverged: true,
    })
}

/// Per-entry errors with operators interpolated to each truth input.
///
/// A single operator set is used for every entry. Interpolated operators the
/// time stepper cannot integrate (singular implicit matrix) count as diverged.
pub fn errors_at_inputs(
    truth: &TrajectoryDataset,
    params: &[Vec<f64>],
    ops: &[Operators],
    dt: f64,
    scheme: Scheme,
    basis: &ReducedBasis,
) -> Result<Vec<EntryError>> {
    truth
        .entries()
        .iter()
        .map(|(mu, traj)| {
            let theta = if ops.len() == 1 {
                ops[0].clone()
            } else {
                interpolate_theta(params, ops, mu)?
            };
            match PolyModel::new(theta, dt, scheme) {
                Ok(m) => entry_error(traj, &m, basis),
                Err(Error::Integrator(msg)) => {
                    log::debug!("input {mu:?}: {msg}");
                    substituted_error(traj)
                }
                Err(e) => Err(e),
            }
        })
        .collect()
}

pub fn mean_error(errors: &[EntryError]) -> f64 {
    errors.iter().map(|e| e.error).sum::<f64>() / errors.len() as f64
}

fn check_model(model: &PolyModel, traj: &Trajectory, basis: &ReducedBasis) -> Result<()> {
    if model.state_dim() != basis.reduced_dim() || model.control_dim() != traj.control_dim() {
        return Err(Error::Argument(format!(
            "model (n = {}, p = {}) does not match basis dim {} and {} controls",
            model.state_dim(),
            model.control_dim(),
            basis.reduced_dim(),
            traj.control_dim()
        )));
    }
    let dt = traj.grid().dt;
    if (model.dt() - dt).abs() > 1e-12 * dt {
        return Err(Error::Argument(format!("model dt {} differs from data dt {dt}", model.dt())));
    }
    Ok(())
}

/// Mean over entries of the time-averaged relative prediction error.
pub fn time_averaged_relative_error(truth: &TrajectoryDataset, models: ModelSet<'_>, basis: &ReducedBasis) -> Result<f64> {
    let errs = entry_errors(truth, models, basis)?;
    Ok(errs.iter().map(|e| e.error).sum::<f64>() / errs.len() as f64)
}

/// Per-entry error of the orthogonal projection `V V^T q_k`.
pub fn projection_entry_errors(truth: &TrajectoryDataset, basis: &ReducedBasis) -> Result<Vec<f64>> {
    if truth.state_dim() != basis.full_dim() {
        return Err(Error::Argument(format!(
            "truth states have dim {}, basis full dim is {}",
            truth.state_dim(),
            basis.full_dim()
        )));
    }
    let v = basis.matrix();
    truth
        .trajectories()
        .map(|t| {
            let projected = v * v.tr_mul(t.states());
            relative_trajectory_error(t.states(), |k| projected.column(k).into_owned())
        })
        .collect()
}

pub fn projection_error(truth: &TrajectoryDataset, basis: &ReducedBasis) -> Result<f64> {
    let errs = projection_entry_errors(truth, basis)?;
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// Writes `entry,error` rows followed by a `mean` row.
pub fn write_error_table(path: &Path, errors: &[f64]) -> Result<()> {
    let mut s = String::from("entry,error\n");
    for (i, e) in errors.iter().enumerate() {
        writeln!(s, "{i},{e:.16e}").unwrap();
    }
    let mean = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
    writeln!(s, "mean,{mean:.16e}").unwrap();
    io_write_atomic(path, s.as_bytes())
}

/// Sorted distinct values of one parameter coordinate.
fn axis_values(params: &[Vec<f64>], axis: usize) -> Vec<f64> {
    let mut vals: Vec<f64> = params.iter().map(|p| p[axis]).collect();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    vals
}

/// Segment index and weight of `x` on a sorted axis; `None` outside.
fn locate(axis: &[f64], x: f64) -> Option<(usize, f64)> {
    if axis.len() == 1 {
        return (x == axis[0]).then_some((0, 0.0));
    }
    if !(x >= axis[0] && x <= axis[axis.len() - 1]) {
        return None;
    }
    let i = axis.partition_point(|&a| a <= x).clamp(1, axis.len() - 1) - 1;
    Some((i, (x - axis[i]) / (axis[i + 1] - axis[i])))
}

/// Entry-wise multilinear interpolation of operators over a grid of inputs.
///
/// For one-dimensional inputs any set of distinct points works (piecewise
/// linear); in higher dimensions the inputs must be exactly the vertices of
/// an axis-aligned grid.
pub fn interpolate_operators(params: &[Vec<f64>], models: &[PolyModel], query: &[f64]) -> Result<PolyModel> {
    let first = models
        .first()
        .ok_or_else(|| Error::Argument("no models to interpolate".into()))?;
    if models.iter().any(|m| m.dt() != first.dt() || m.scheme() != first.scheme()) {
        return Err(Error::Argument("models differ in time step or scheme".into()));
    }
    let ops: Vec<Operators> = models.iter().map(|m| m.operators().clone()).collect();
    PolyModel::new(interpolate_theta(params, &ops, query)?, first.dt(), first.scheme())
}

/// Operator-level interpolation behind [`interpolate_operators`].
pub fn interpolate_theta(params: &[Vec<f64>], ops: &[Operators], query: &[f64]) -> Result<Operators> {
    if params.len() != ops.len() || ops.is_empty() {
        return Err(Error::Argument(format!("{} inputs for {} operator sets", params.len(), ops.len())));
    }
    let d = query.len();
    if params.iter().any(|p| p.len() != d) {
        return Err(Error::Argument(format!("all inputs must have dimension {d}")));
    }
    let first = &ops[0];
    if ops.iter().any(|o| !o.same_shape(first)) {
        return Err(Error::Argument("operator sets differ in shape".into()));
    }

    let axes: Vec<Vec<f64>> = (0..d).map(|a| axis_values(params, a)).collect();
    let vertices: usize = axes.iter().map(Vec::len).product();
    if vertices != params.len() {
        return Err(Error::Argument(format!(
            "{} inputs do not form a full grid ({vertices} vertices)",
            params.len()
        )));
    }
    let index_of = |p: &[f64]| -> usize {
        p.iter()
            .zip(&axes)
            .rev()
            .fold(0, |acc, (x, ax)| acc * ax.len() + ax.partition_point(|&a| a < *x))
    };
    let mut slot = vec![usize::MAX; vertices];
    for (i, p) in params.iter().enumerate() {
        let s = index_of(p);
        if slot[s] != usize::MAX {
            return Err(Error::Argument(format!("duplicate input {p:?}")));
        }
        slot[s] = i;
    }

    let mut cell = Vec::with_capacity(d);
    for (a, ax) in axes.iter().enumerate() {
        let loc = locate(ax, query[a]).ok_or_else(|| {
            Error::Extrapolation(format!("query {query:?} lies outside the training inputs along axis {a}"))
        })?;
        cell.push(loc);
    }

    let mut theta = DMatrix::zeros(first.theta().nrows(), first.theta().ncols());
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut flat = 0;
        let mut stride = 1;
        for (a, &(i, t)) in cell.iter().enumerate() {
            let upper = corner >> a & 1 == 1;
            w *= if upper { t } else { 1.0 - t };
            let idx = if upper { (i + 1).min(axes[a].len() - 1) } else { i };
            flat += idx * stride;
            stride *= axes[a].len();
        }
        if w != 0.0 {
            theta += ops[slot[flat]].theta() * w;
        }
    }
    Operators::from_theta(first.layout().clone(), theta)
}
