//! Trajectory data structures, noise injection and time sparsification.

mod io;
mod kv;

pub use io::{
    load_csv, load_dataset, load_matrix, load_rom1, save_csv, save_dataset, save_matrix,
    save_rom1, write_atomic, MatrixFormat,
};
pub use kv::KeyValues;
pub(crate) use io::write_atomic as io_write_atomic;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Equidistant time grid `t_k = t0 + k·dt`, `k = 0..=num_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub num_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, num_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || !t0.is_finite() {
            return Err(Error::Argument(format!("time grid needs finite t0 and dt > 0, got t0={t0}, dt={dt}")));
        }
        if num_steps == 0 {
            return Err(Error::Argument("time grid needs at least one step".into()));
        }
        Ok(TimeGrid { t0, dt, num_steps })
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.num_steps)
    }
}

/// A time-discrete state trajectory with optional controls.
///
/// `states` is `d × (K+1)` (column `k` is the state at `t_k`), `controls` is
/// `p × K` with `p = 0` when the system is autonomous.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: DMatrix<f64>,
    controls: DMatrix<f64>,
    grid: TimeGrid,
}

impl Trajectory {
    pub fn new(states: DMatrix<f64>, controls: Option<DMatrix<f64>>, grid: TimeGrid) -> Result<Self> {
        let k = grid.num_steps;
        if states.ncols() != k + 1 {
            return Err(Error::Data(format!(
                "trajectory has {} state columns, grid needs {}",
                states.ncols(),
                k + 1
            )));
        }
        let controls = controls.unwrap_or_else(|| DMatrix::zeros(0, k));
        if controls.ncols() != k {
            return Err(Error::Data(format!(
                "trajectory has {} control columns, grid needs {k}",
                controls.ncols()
            )));
        }
        if !states.iter().chain(controls.iter()).all(|v| v.is_finite()) {
            return Err(Error::Data("trajectory contains non-finite entries".into()));
        }
        Ok(Trajectory { states, controls, grid })
    }

    pub fn states(&self) -> &DMatrix<f64> {
        &self.states
    }

    pub fn controls(&self) -> &DMatrix<f64> {
        &self.controls
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn num_steps(&self) -> usize {
        self.grid.num_steps
    }

    pub fn state_dim(&self) -> usize {
        self.states.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.controls.nrows()
    }

    pub fn initial_state(&self) -> nalgebra::DVector<f64> {
        self.states.column(0).into_owned()
    }

    /// Same grid and controls, new states (dimension may change).
    pub fn with_states(&self, states: DMatrix<f64>) -> Result<Self> {
        Trajectory::new(states, Some(self.controls.clone()), self.grid)
    }
}

/// Trajectories for a set of inputs `μ_1..μ_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    entries: Vec<(Vec<f64>, Trajectory)>,
}

impl TrajectoryDataset {
    pub fn new(entries: Vec<(Vec<f64>, Trajectory)>) -> Result<Self> {
        if let Some((p0, t0)) = entries.first() {
            for (i, (p, t)) in entries.iter().enumerate() {
                if p.len() != p0.len() {
                    return Err(Error::Data(format!("entry {i}: parameter length {} != {}", p.len(), p0.len())));
                }
                if t.state_dim() != t0.state_dim() || t.control_dim() != t0.control_dim() {
                    return Err(Error::Data(format!("entry {i}: state/control dimensions differ from entry 0")));
                }
                if t.grid().dt != t0.grid().dt {
                    return Err(Error::Data(format!("entry {i}: time-step size differs from entry 0")));
                }
                if !p.iter().all(|v| v.is_finite()) {
                    return Err(Error::Data(format!("entry {i}: non-finite parameter")));
                }
            }
        }
        Ok(TrajectoryDataset { entries })
    }

    pub fn entries(&self) -> &[(Vec<f64>, Trajectory)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn params(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|(p, _)| p.clone()).collect()
    }

    pub fn trajectories(&self) -> impl Iterator<Item = &Trajectory> {
        self.entries.iter().map(|(_, t)| t)
    }

    pub fn state_dim(&self) -> usize {
        self.entries.first().map_or(0, |(_, t)| t.state_dim())
    }

    pub fn control_dim(&self) -> usize {
        self.entries.first().map_or(0, |(_, t)| t.control_dim())
    }

    pub fn dt(&self) -> Option<f64> {
        self.entries.first().map(|(_, t)| t.grid().dt)
    }

    /// A dataset holding only entry `i`.
    pub fn subset(&self, indices: &[usize]) -> TrajectoryDataset {
        TrajectoryDataset {
            entries: indices.iter().map(|&i| self.entries[i].clone()).collect(),
        }
    }

    /// Applies `f` to every trajectory.
    pub fn try_map(&self, mut f: impl FnMut(&Trajectory) -> Result<Trajectory>) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|(p, t)| Ok((p.clone(), f(t)?)))
            .collect::<Result<Vec<_>>>()?;
        TrajectoryDataset::new(entries)
    }

    /// All states of all trajectories side by side.
    pub fn snapshot_matrix(&self) -> DMatrix<f64> {
        let cols: usize = self.trajectories().map(|t| t.states().ncols()).sum();
        let mut out = DMatrix::zeros(self.state_dim(), cols);
        let mut c = 0;
        for t in self.trajectories() {
            let w = t.states().ncols();
            out.columns_mut(c, w).copy_from(t.states());
            c += w;
        }
        out
    }
}

/// Indices `{0, ξ, 2ξ, …} ∩ [0, K]` retained under sampling period `ξ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMask {
    period: usize,
    retained: Vec<usize>,
}

impl SparseMask {
    pub fn new(period: usize, num_steps: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::Argument("sampling period must be at least 1".into()));
        }
        Ok(SparseMask {
            period,
            retained: (0..=num_steps).step_by(period).collect(),
        })
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn retained_indices(&self) -> &[usize] {
        &self.retained
    }
}

/// Multiplicative noise `q̄_k + ρ ε_k ⊙ |q̄_k|` on the interior columns `k = 1..K−1`.
///
/// One standard-normal draw per perturbed entry, consumed trajectory by
/// trajectory, then by ascending `k`, then by ascending component.
pub fn add_noise(data: &TrajectoryDataset, rho: f64, seed: u64) -> Result<TrajectoryDataset> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::Argument(format!("noise level must be finite and >= 0, got {rho}")));
    }
    if rho == 0.0 {
        return Ok(data.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    data.try_map(|t| {
        let mut states = t.states().clone();
        let k_total = t.num_steps();
        for k in 1..k_total {
            for v in states.column_mut(k).iter_mut() {
                let eps: f64 = StandardNormal.sample(&mut rng);
                *v += rho * eps * v.abs();
            }
        }
        t.with_states(states)
    })
}

/// Keeps the states at multiples of `period` (and the matching controls).
pub fn sparsify(traj: &Trajectory, period: usize) -> Result<(Trajectory, SparseMask)> {
    let mask = SparseMask::new(period, traj.num_steps())?;
    let idx = mask.retained_indices();
    if idx.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "sampling period {period} leaves {} state(s) of a {}-step trajectory",
            idx.len(),
            traj.num_steps()
        )));
    }
    if period == 1 {
        return Ok((traj.clone(), mask));
    }
    let states = traj.states().select_columns(idx);
    let controls = traj.controls().select_columns(&idx[..idx.len() - 1]);
    let g = traj.grid();
    let grid = TimeGrid::new(g.t0, g.dt * period as f64, idx.len() - 1)?;
    Ok((Trajectory::new(states, Some(controls), grid)?, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_traj(values: &[f64], dt: f64) -> Trajectory {
        let grid = TimeGrid::new(0.0, dt, values.len() - 1).unwrap();
        Trajectory::new(DMatrix::from_row_slice(1, values.len(), values), None, grid).unwrap()
    }

    fn dataset(values: &[f64]) -> TrajectoryDataset {
        TrajectoryDataset::new(vec![(vec![0.0], scalar_traj(values, 0.1))]).unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let d = dataset(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(add_noise(&d, 0.0, 7).unwrap(), d);
    }

    #[test]
    fn noise_skips_first_and_last_and_zero_columns() {
        let d = dataset(&[1.0, 0.0, 3.0, 4.0]);
        let n = add_noise(&d, 0.5, 7).unwrap();
        let s = n.entries()[0].1.states();
        assert_eq!(s[(0, 0)], 1.0);
        assert_eq!(s[(0, 1)], 0.0);
        assert_ne!(s[(0, 2)], 3.0);
        assert_eq!(s[(0, 3)], 4.0);
    }

    #[test]
    fn noise_is_seeded() {
        let d = dataset(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(add_noise(&d, 0.1, 3).unwrap(), add_noise(&d, 0.1, 3).unwrap());
        assert_ne!(add_noise(&d, 0.1, 3).unwrap(), add_noise(&d, 0.1, 4).unwrap());
    }

    #[test]
    fn negative_noise_rejected() {
        assert!(matches!(add_noise(&dataset(&[1.0, 2.0]), -0.1, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn noise_standard_deviation() {
        // 2e5 interior samples of a unit state, perturbation std should be rho.
        let n = 200_001;
        let d = dataset(&vec![1.0; n + 1]);
        let noisy = add_noise(&d, 0.1, 11).unwrap();
        let s = noisy.entries()[0].1.states();
        let devs: Vec<f64> = (1..n).map(|k| s[(0, k)] - 1.0).collect();
        let m = devs.len() as f64;
        let mean = devs.iter().sum::<f64>() / m;
        let var = devs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let tol = 3.0 * 0.1 / (2.0 * 1e5f64).sqrt();
        assert!((var.sqrt() - 0.1).abs() < tol, "std {}", var.sqrt());
    }

    #[test]
    fn sparsify_indices() {
        let t = scalar_traj(&(0..=10).map(f64::from).collect::<Vec<_>>(), 0.1);
        let (s, mask) = sparsify(&t, 2).unwrap();
        assert_eq!(mask.retained_indices(), &[0, 2, 4, 6, 8, 10]);
        assert_eq!(s.states().row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert!((s.grid().dt - 0.2).abs() < 1e-15);

        let t7 = scalar_traj(&(0..=7).map(f64::from).collect::<Vec<_>>(), 0.1);
        assert_eq!(sparsify(&t7, 3).unwrap().1.retained_indices(), &[0, 3, 6]);
        assert_eq!(sparsify(&t7, 1).unwrap().0, t7);
    }

    #[test]
    fn sparsify_degenerate() {
        let t = scalar_traj(&[0.0, 1.0, 2.0], 0.1);
        assert!(matches!(sparsify(&t, 3), Err(Error::DegenerateData(_))));
        assert!(matches!(sparsify(&t, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn trajectory_validates_shapes() {
        let grid = TimeGrid::new(0.0, 0.1, 2).unwrap();
        assert!(Trajectory::new(DMatrix::zeros(1, 2), None, grid).is_err());
        assert!(Trajectory::new(DMatrix::zeros(1, 3), Some(DMatrix::zeros(1, 3)), grid).is_err());
        let mut bad = DMatrix::zeros(1, 3);
        bad[(0, 1)] = f64::NAN;
        assert!(matches!(Trajectory::new(bad, None, grid), Err(Error::Data(_))));
    }

    proptest::proptest! {
        #[test]
        fn retained_count(k in 1usize..300, period in 1usize..40) {
            let mask = SparseMask::new(period, k).unwrap();
            proptest::prop_assert_eq!(mask.retained_indices().len(), k / period + 1);
            proptest::prop_assert!(mask.retained_indices().windows(2).all(|w| w[1] - w[0] == period));
        }
    }
}
