//! Synthetic truth models: random stable quadratic systems and a coarse
//! periodic shallow-water solver.

mod swe;

pub use swe::{generate_swe_dataset, periodic_gradient, swe_rhs, SweConfig, INPUT_BOX};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::datamodel::TrajectoryDataset;
use crate::error::{Error, Result};
use crate::polymodel::{monomial_count, simulate, Operators, PolyModel, Scheme};

/// Quadratic operators with `A_1 = Q Λ Q^T`, `Λ` uniform in `[−1, −margin]`,
/// and a random `A_2` scaled to `‖A_2‖_F = 0.1 ‖A_1‖_F`. No inputs.
pub fn random_quadratic_system(n: usize, seed: u64, spectral_margin: f64) -> Result<Operators> {
    if n == 0 {
        return Err(Error::Argument("state dimension must be at least 1".into()));
    }
    if !(spectral_margin > 0.0 && spectral_margin <= 1.0) {
        return Err(Error::Argument(format!("spectral margin must lie in (0, 1], got {spectral_margin}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
        if spectral_margin == 1.0 {
            -1.0
        } else {
            rng.random_range(-1.0..-spectral_margin)
        }
    }));
    let a1 = &q * lambda * q.transpose();
    let a1 = (&a1 + a1.transpose()) * 0.5;
    let mut a2 = DMatrix::from_fn(n, monomial_count(n, 2)?, |_, _| rng.sample::<f64, _>(StandardNormal));
    let scale = 0.1 * a1.norm() / a2.norm();
    a2 *= scale;
    Operators::from_blocks(&[a1, a2], &DMatrix::zeros(n, 0))
}

/// Trajectories of `truth` under its own discrete flow map from initial
/// states with i.i.d. `N(0, amplitude²)` entries. Entry `i` has parameter `[i]`.
pub fn quadratic_dataset(
    truth: &Operators,
    dt: f64,
    scheme: Scheme,
    num_trajectories: usize,
    num_steps: usize,
    amplitude: f64,
    seed: u64,
) -> Result<TrajectoryDataset> {
    if num_trajectories == 0 || num_steps == 0 {
        return Err(Error::Argument("need at least one trajectory and one step".into()));
    }
    let model = PolyModel::new(truth.clone(), dt, scheme)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = truth.state_dim();
    let mut entries = Vec::with_capacity(num_trajectories);
    for i in 0..num_trajectories {
        let q0 = nalgebra::DVector::from_fn(n, |_, _| amplitude * rng.sample::<f64, _>(StandardNormal));
        let traj = simulate(&model, &q0, None, num_steps)?.into_trajectory(None)?;
        entries.push((vec![i as f64], traj));
    }
    TrajectoryDataset::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn scalar_construction() {
        for seed in 0..20 {
            let ops = random_quadratic_system(1, seed, 0.25).unwrap();
            let a1 = ops.block(1)[(0, 0)];
            let a2 = ops.block(2)[(0, 0)];
            assert!((-1.0..=-0.25).contains(&a1));
            assert!((a2.abs() - 0.1 * a1.abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_part_is_hurwitz_with_margin() {
        for seed in 0..10 {
            let ops = random_quadratic_system(5, seed, 0.3).unwrap();
            let a1 = ops.block(1).into_owned();
            let eig = nalgebra::SymmetricEigen::new(a1.clone());
            assert!(eig.eigenvalues.iter().all(|l| (-1.0 - 1e-12..=-0.3 + 1e-12).contains(l)));
            assert!((ops.block(2).norm() - 0.1 * a1.norm()).abs() < 1e-12);
            assert_eq!(ops.control_dim(), 0);
        }
    }

    #[test]
    fn small_perturbations_stay_bounded() {
        let dt = 0.01;
        for seed in 0..5 {
            let model = PolyModel::new(random_quadratic_system(4, seed, 0.1).unwrap(), dt, Scheme::ForwardEuler).unwrap();
            let q0 = DVector::from_element(4, 0.005);
            let sim = simulate(&model, &q0, None, (10.0 / dt) as usize).unwrap();
            assert!(!sim.diverged());
            assert!(sim.states.column(sim.states.ncols() - 1).norm() <= q0.norm());
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(random_quadratic_system(3, 7, 0.1).unwrap(), random_quadratic_system(3, 7, 0.1).unwrap());
        assert_ne!(random_quadratic_system(3, 7, 0.1).unwrap(), random_quadratic_system(3, 8, 0.1).unwrap());
        assert!(random_quadratic_system(0, 1, 0.1).is_err());
        assert!(random_quadratic_system(2, 1, 0.0).is_err());
    }

    #[test]
    fn quadratic_dataset_follows_the_flow_map() {
        let truth = random_quadratic_system(3, 4, 0.2).unwrap();
        let data = quadratic_dataset(&truth, 0.05, Scheme::ImexLinearImplicit, 3, 20, 0.5, 9).unwrap();
        assert_eq!(data.len(), 3);
        let model = PolyModel::new(truth.clone(), 0.05, Scheme::ImexLinearImplicit).unwrap();
        let t = &data.entries()[1].1;
        let next = model.step(&t.states().column(4).into_owned(), &DVector::zeros(0)).unwrap();
        assert_eq!(next, t.states().column(5).into_owned());
        assert_eq!(data, quadratic_dataset(&truth, 0.05, Scheme::ImexLinearImplicit, 3, 20, 0.5, 9).unwrap());
    }
}
