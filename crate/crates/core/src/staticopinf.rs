//! Classical (static) operator inference: finite-difference time derivatives
//! and a minimal-norm linear least-squares fit of the operators.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::datamodel::{SparseMask, Trajectory, TrajectoryDataset};
use crate::error::{Error, Result};
use crate::linalg::min_norm_solve;
use crate::polymodel::{FeatureLayout, Operators};

/// Relative singular-value cutoff of the pseudoinverse.
pub const PINV_CUTOFF: f64 = 1e-12;

/// Forward differences `(q̄_next − q̄_cur) / (gap·dt)` at every retained index
/// that has a successor. Returns an `n × rows` matrix (one column per row).
pub fn approx_derivatives(traj: &Trajectory, mask: Option<&SparseMask>) -> Result<DMatrix<f64>> {
    let indices = retained(traj, mask)?;
    let dt = traj.grid().dt;
    let states = traj.states();
    let mut out = DMatrix::zeros(traj.state_dim(), indices.len() - 1);
    for (c, w) in indices.windows(2).enumerate() {
        let h = (w[1] - w[0]) as f64 * dt;
        out.set_column(c, &((states.column(w[1]) - states.column(w[0])) / h));
    }
    Ok(out)
}

fn retained(traj: &Trajectory, mask: Option<&SparseMask>) -> Result<Vec<usize>> {
    let k = traj.num_steps();
    let indices: Vec<usize> = match mask {
        None => (0..=k).collect(),
        Some(m) => m.retained_indices().iter().copied().filter(|&i| i <= k).collect(),
    };
    if indices.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "need at least two retained states to difference, have {}",
            indices.len()
        )));
    }
    Ok(indices)
}

/// The regression `min_O ‖D O − R‖_F` with rows `[q̄^1 | … | q̄^L | u]` and
/// derivative targets.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSystem {
    pub data: DMatrix<f64>,
    pub target: DMatrix<f64>,
    layout: Arc<FeatureLayout>,
}

impl RegressionSystem {
    /// Builds one row per column of `states` (`n × rows`), with controls
    /// (`p × rows`) and derivative targets (`n × rows`).
    pub fn from_samples(
        layout: Arc<FeatureLayout>,
        states: &DMatrix<f64>,
        controls: &DMatrix<f64>,
        derivatives: &DMatrix<f64>,
    ) -> Result<Self> {
        let rows = states.ncols();
        if states.nrows() != layout.state_dim()
            || derivatives.shape() != (layout.state_dim(), rows)
            || controls.shape() != (layout.control_dim(), rows)
        {
            return Err(Error::Argument("sample matrices do not match the feature layout".into()));
        }
        let mut data = DMatrix::zeros(rows, layout.len());
        let mut row = vec![0.0; layout.len()];
        for r in 0..rows {
            let q = states.column(r);
            let u = controls.column(r);
            layout.eval_into(q.as_slice(), u.as_slice(), &mut row);
            for (c, v) in row.iter().enumerate() {
                data[(r, c)] = *v;
            }
        }
        Ok(RegressionSystem {
            data,
            target: derivatives.transpose(),
            layout,
        })
    }

    pub fn layout(&self) -> &Arc<FeatureLayout> {
        &self.layout
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    /// `n̄ = p + Σ_ℓ n_ℓ`.
    pub fn nbar(&self) -> usize {
        self.data.ncols()
    }

    /// Unnormalized objective `Σ_rows ‖D_row θ^T − R_row‖²`.
    pub fn objective(&self, ops: &Operators) -> f64 {
        (&self.data * ops.theta().transpose() - &self.target).norm_squared()
    }
}

/// Stacks rows for every entry (in entry order, then time order).
///
/// `period` is the sampling period `ξ` (1 for dense data).
pub fn assemble_system(dataset: &TrajectoryDataset, degree: usize, period: usize) -> Result<RegressionSystem> {
    if dataset.is_empty() {
        return Err(Error::DegenerateData("empty dataset".into()));
    }
    let layout = Arc::new(FeatureLayout::new(dataset.state_dim(), degree, dataset.control_dim())?);
    let mut states = Vec::new();
    let mut controls = Vec::new();
    let mut derivs = Vec::new();
    for traj in dataset.trajectories() {
        let mask = SparseMask::new(period, traj.num_steps())?;
        let idx = retained(traj, Some(&mask))?;
        let d = approx_derivatives(traj, Some(&mask))?;
        let rows = &idx[..idx.len() - 1];
        states.push(traj.states().select_columns(rows));
        controls.push(traj.controls().select_columns(rows));
        derivs.push(d);
    }
    RegressionSystem::from_samples(layout, &hstack(&states), &hstack(&controls), &hstack(&derivs))
}

fn hstack(parts: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = parts.first().map_or(0, |m| m.nrows());
    let cols = parts.iter().map(|m| m.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for m in parts {
        out.columns_mut(c, m.ncols()).copy_from(m);
        c += m.ncols();
    }
    out
}

/// Minimal-norm least-squares solution and the numerical rank of `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinNormSolution {
    pub operators: Operators,
    pub rank: usize,
}

/// `O = D^+ R` through the SVD, cutoff `1e-12·σ_max`.
pub fn solve_min_norm(system: &RegressionSystem) -> Result<MinNormSolution> {
    if system.rows() == 0 {
        return Err(Error::DegenerateData("regression system has no rows".into()));
    }
    let (o, rank) = min_norm_solve(&system.data, &system.target, PINV_CUTOFF);
    if rank == 0 {
        log::warn!("data matrix is numerically zero; returning zero operators");
    } else if rank < system.nbar() {
        log::debug!("underdetermined regression: rank {rank} < {} unknowns", system.nbar());
    }
    Ok(MinNormSolution {
        operators: Operators::from_theta(system.layout.clone(), o.transpose())?,
        rank,
    })
}

/// Fits one operator set per dataset entry.
pub fn fit_per_entry(dataset: &TrajectoryDataset, degree: usize, period: usize) -> Result<Vec<Operators>> {
    (0..dataset.len())
        .map(|i| Ok(solve_min_norm(&assemble_system(&dataset.subset(&[i]), degree, period)?)?.operators))
        .collect()
}
