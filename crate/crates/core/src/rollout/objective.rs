use nalgebra::DMatrix;

use super::RollConfig;
use crate::datamodel::{Trajectory, TrajectoryDataset};
use crate::error::{Error, Result};
use crate::polymodel::{divergence_bound, exceeds, Operators, PolyModel, StepWorkspace};

/// Objective value and its gradient with respect to `θ = [A_1, …, A_L, B]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveGradient {
    pub objective: f64,
    pub gradient: Operators,
}

/// `Σ_μ Σ_windows Σ_offsets ‖q̄_{s+r} − ẑ_{s,r}‖²` where `ẑ_{s,·}` is the model
/// rolled out from the observed `q̄_s`. A diverging roll-out makes the
/// objective `+∞`.
pub fn rollout_objective(model: &PolyModel, dataset: &TrajectoryDataset, cfg: &RollConfig) -> Result<f64> {
    let mut engine = Engine::new(model, cfg)?;
    let mut total = 0.0;
    for traj in dataset.trajectories() {
        check_dims(model, traj)?;
        for start in cfg.window_starts(traj.num_steps())? {
            match engine.forward(traj, start) {
                Some(j) => total += j,
                None => return Ok(f64::INFINITY),
            }
        }
    }
    Ok(total)
}

/// Objective and exact gradient by the discrete adjoint of every window.
///
/// Fails with [`Error::GradientUnavailable`] if any roll-out diverges.
pub fn rollout_gradient(model: &PolyModel, dataset: &TrajectoryDataset, cfg: &RollConfig) -> Result<ObjectiveGradient> {
    let mut engine = Engine::new(model, cfg)?;
    let ops = model.operators();
    let mut grad = DMatrix::zeros(ops.state_dim(), ops.layout().len());
    let mut total = 0.0;
    for traj in dataset.trajectories() {
        check_dims(model, traj)?;
        for start in cfg.window_starts(traj.num_steps())? {
            match engine.forward(traj, start) {
                Some(j) => total += j,
                None => return Err(Error::GradientUnavailable { objective: f64::INFINITY }),
            }
            engine.backward(traj, start, grad.as_mut_slice());
        }
    }
    let gradient = Operators::from_theta(ops.layout().clone(), grad)
        .map_err(|_| Error::GradientUnavailable { objective: total })?;
    Ok(ObjectiveGradient {
        objective: total,
        gradient,
    })
}

fn check_dims(model: &PolyModel, traj: &Trajectory) -> Result<()> {
    if traj.state_dim() != model.state_dim() || traj.control_dim() != model.control_dim() {
        return Err(Error::Argument(format!(
            "model dims {}/{} do not match trajectory dims {}/{}",
            model.state_dim(),
            model.control_dim(),
            traj.state_dim(),
            traj.control_dim()
        )));
    }
    Ok(())
}

/// Forward/backward sweep over one window with preallocated storage.
struct Engine<'a> {
    model: &'a PolyModel,
    offsets: Vec<usize>,
    /// `is_offset[r]` for `r = 0..=rmax`.
    is_offset: Vec<bool>,
    rmax: usize,
    n: usize,
    p: usize,
    /// Rolled-out states `ẑ_0..ẑ_rmax`, column after column.
    z: Vec<f64>,
    ws: StepWorkspace,
    lambda: Vec<f64>,
    w: Vec<f64>,
    g: Vec<f64>,
    u: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(model: &'a PolyModel, cfg: &RollConfig) -> Result<Self> {
        let offsets = cfg.offsets()?;
        let rmax = *offsets.last().unwrap();
        let mut is_offset = vec![false; rmax + 1];
        for &r in &offsets {
            is_offset[r] = true;
        }
        let n = model.state_dim();
        let nbar = model.operators().layout().len();
        Ok(Engine {
            model,
            offsets,
            is_offset,
            rmax,
            n,
            p: model.control_dim(),
            z: vec![0.0; n * (rmax + 1)],
            ws: StepWorkspace::new(model),
            lambda: vec![0.0; n],
            w: vec![0.0; n],
            g: vec![0.0; nbar],
            u: vec![0.0; model.control_dim()],
        })
    }

    fn load_control(&mut self, traj: &Trajectory, k: usize) {
        let c = traj.controls();
        for i in 0..self.p {
            self.u[i] = c[(i, k)];
        }
    }

    /// Rolls out from `q̄_start`; returns the window misfit, `None` on divergence.
    fn forward(&mut self, traj: &Trajectory, start: usize) -> Option<f64> {
        let n = self.n;
        let states = traj.states();
        self.z[..n].copy_from_slice(states.column(start).as_slice());
        let bound = divergence_bound(&self.z[..n]);
        for r in 1..=self.rmax {
            self.load_control(traj, start + r - 1);
            let (prev, next) = self.z.split_at_mut(r * n);
            let next = &mut next[..n];
            self.model.step_into(&prev[(r - 1) * n..], &self.u, next, &mut self.ws);
            if exceeds(next, bound) {
                return None;
            }
        }
        let mut j = 0.0;
        for &r in &self.offsets {
            let obs = states.column(start + r);
            let zr = &self.z[r * n..(r + 1) * n];
            j += zr.iter().zip(obs.iter()).map(|(a, b)| (b - a) * (b - a)).sum::<f64>();
        }
        Some(j)
    }

    /// Accumulates `∂J_window/∂θ` into `grad` (column-major `n × n̄`).
    /// Requires the states of a preceding [`Engine::forward`] on the same window.
    fn backward(&mut self, traj: &Trajectory, start: usize, grad: &mut [f64]) {
        let n = self.n;
        let dt = self.model.dt();
        let theta = self.model.operators().theta().as_slice();
        let layout = self.model.operators().layout().clone();
        let nbar = layout.len();
        let states = traj.states();
        self.lambda.iter_mut().for_each(|v| *v = 0.0);

        for r in (1..=self.rmax).rev() {
            if self.is_offset[r] {
                let obs = states.column(start + r);
                for i in 0..n {
                    self.lambda[i] += 2.0 * (self.z[r * n + i] - obs[i]);
                }
            }
            // λ is now ∂J/∂ẑ_r; push it through ẑ_r = Φ(ẑ_{r−1}, u_{s+r−1}).
            self.load_control(traj, start + r - 1);
            let z_prev = &self.z[(r - 1) * n..r * n];
            layout.eval_into(z_prev, &self.u, &mut self.ws.features);
            let f = &self.ws.features;

            let (first_explicit, implicit) = match self.model.implicit_lu() {
                None => {
                    self.w.copy_from_slice(&self.lambda);
                    (0, false)
                }
                Some(lu) => {
                    // (I − dt A_1)^T w = λ
                    self.w.copy_from_slice(&self.lambda);
                    lu.solve_transpose_in_place(&mut self.w, &mut self.ws.scratch);
                    (n, true)
                }
            };

            if implicit {
                // ∂/∂A_1: dt · w ẑ_r^T
                let z_next = &self.z[r * n..(r + 1) * n];
                for j in 0..n {
                    let s = dt * z_next[j];
                    let col = &mut grad[j * n..(j + 1) * n];
                    for (gv, wv) in col.iter_mut().zip(&self.w) {
                        *gv += s * wv;
                    }
                }
            }
            // explicit columns: dt · w f^T
            for j in first_explicit..nbar {
                let s = dt * f[j];
                if s != 0.0 {
                    let col = &mut grad[j * n..(j + 1) * n];
                    for (gv, wv) in col.iter_mut().zip(&self.w) {
                        *gv += s * wv;
                    }
                }
            }

            // g = Θ^T w over the explicit state columns, then λ_{r−1} = w + dt Σ J_ℓ^T g_ℓ.
            let state_cols = layout.control_range().start;
            for j in first_explicit..state_cols {
                let col = &theta[j * n..(j + 1) * n];
                self.g[j] = col.iter().zip(&self.w).map(|(a, b)| a * b).sum::<f64>() * dt;
            }
            self.lambda.copy_from_slice(&self.w);
            let from = if implicit { 2 } else { 1 };
            layout.jacobian_transpose_acc(from, z_prev, &self.g, &mut self.lambda);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::TimeGrid;
    use crate::polymodel::{simulate, Scheme};
    use nalgebra::DVector;

    fn scalar_data(values: &[f64], dt: f64) -> TrajectoryDataset {
        let grid = TimeGrid::new(0.0, dt, values.len() - 1).unwrap();
        let t = Trajectory::new(DMatrix::from_row_slice(1, values.len(), values), None, grid).unwrap();
        TrajectoryDataset::new(vec![(vec![], t)]).unwrap()
    }

    fn scalar_model(a: f64) -> PolyModel {
        PolyModel::new(
            Operators::from_blocks(&[DMatrix::from_element(1, 1, a)], &DMatrix::zeros(1, 0)).unwrap(),
            0.1,
            Scheme::ForwardEuler,
        )
        .unwrap()
    }

    #[test]
    fn hand_examples() {
        let data = scalar_data(&[1.0, 0.9], 0.1);
        let cfg = RollConfig::new(1).unwrap();
        assert!((rollout_objective(&scalar_model(0.0), &data, &cfg).unwrap() - 0.01).abs() < 1e-15);
        assert!(rollout_objective(&scalar_model(-1.0), &data, &cfg).unwrap().abs() < 1e-30);
        let g = rollout_gradient(&scalar_model(0.0), &data, &cfg).unwrap();
        // d/da (0.9 − (1 + dt a))² at a = 0 = −2 dt (0.9 − 1)
        assert!((g.gradient.theta()[(0, 0)] - 0.02).abs() < 1e-15);
        assert!(matches!(
            rollout_objective(&scalar_model(0.0), &data, &RollConfig::new(2).unwrap()),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn own_flow_map_data_fits_exactly() {
        let ops = crate::benchgen::random_quadratic_system(3, 1, 0.3).unwrap();
        for scheme in [Scheme::ForwardEuler, Scheme::ImexLinearImplicit] {
            let m = PolyModel::new(ops.clone(), 0.05, scheme).unwrap();
            let sim = simulate(&m, &DVector::from_vec(vec![0.4, -0.3, 0.2]), None, 30).unwrap();
            let t = sim.into_trajectory(None).unwrap();
            let ds = TrajectoryDataset::new(vec![(vec![], t)]).unwrap();
            let cfg = RollConfig::new(6).unwrap();
            assert!(rollout_objective(&m, &ds, &cfg).unwrap() < 1e-28);
            let g = rollout_gradient(&m, &ds, &cfg).unwrap();
            assert!(g.gradient.theta().norm() < 1e-12);
        }
    }

    #[test]
    fn divergence_gives_infinity() {
        let m = PolyModel::new(
            Operators::from_blocks(&[DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, 50.0)], &DMatrix::zeros(1, 0)).unwrap(),
            0.5,
            Scheme::ForwardEuler,
        )
        .unwrap();
        let data = scalar_data(&[1.0; 12], 0.5);
        let cfg = RollConfig::new(10).unwrap();
        assert_eq!(rollout_objective(&m, &data, &cfg).unwrap(), f64::INFINITY);
        assert!(matches!(rollout_gradient(&m, &data, &cfg), Err(Error::GradientUnavailable { .. })));
    }

    #[test]
    fn sparse_objective_ignores_unobserved_states() {
        let ops = crate::benchgen::random_quadratic_system(2, 3, 0.3).unwrap();
        let m = PolyModel::new(ops, 0.05, Scheme::ImexLinearImplicit).unwrap();
        let mut states = DMatrix::from_fn(2, 21, |i, k| ((i + 1) as f64 * 0.3 * k as f64).sin());
        let grid = TimeGrid::new(0.0, 0.05, 20).unwrap();
        let cfg = RollConfig::new(6).unwrap().with_sparse_period(3).unwrap();
        let ds = |s: DMatrix<f64>| TrajectoryDataset::new(vec![(vec![], Trajectory::new(s, None, grid).unwrap())]).unwrap();
        let before = rollout_gradient(&m, &ds(states.clone()), &cfg).unwrap();
        for k in (0..=20).filter(|k| k % 3 != 0) {
            states[(0, k)] += 10.0;
        }
        assert_eq!(rollout_gradient(&m, &ds(states), &cfg).unwrap(), before);
    }

    #[test]
    fn unit_period_is_dense() {
        let ops = crate::benchgen::random_quadratic_system(2, 4, 0.3).unwrap();
        let m = PolyModel::new(ops, 0.05, Scheme::ForwardEuler).unwrap();
        let states = DMatrix::from_fn(2, 15, |i, k| ((i + 2) as f64 * 0.2 * k as f64).cos());
        let t = Trajectory::new(states, None, TimeGrid::new(0.0, 0.05, 14).unwrap()).unwrap();
        let ds = TrajectoryDataset::new(vec![(vec![], t)]).unwrap();
        let dense = RollConfig::new(4).unwrap();
        let sparse = dense.clone().with_sparse_period(1).unwrap();
        assert_eq!(
            rollout_objective(&m, &ds, &dense).unwrap().to_bits(),
            rollout_objective(&m, &ds, &sparse).unwrap().to_bits()
        );
    }
}
