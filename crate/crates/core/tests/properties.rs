use std::sync::Arc;

use proptest::prelude::*;
use rollinf_core::datamodel::{add_noise, TimeGrid};
use rollinf_core::metrics::interpolate_theta;
use rollinf_core::polymodel::FeatureLayout;
use rollinf_core::rollout::{rollout_objective, RollConfig};
use rollinf_core::stability::{lyapunov_solve, stability_radius_bound};
use rollinf_core::staticopinf::assemble_system;
use rollinf_core::{DMatrix, Operators, PolyModel, Scheme, Trajectory, TrajectoryDataset};

fn matrix(r: usize, c: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
}

fn dataset(states: DMatrix<f64>, dt: f64) -> TrajectoryDataset {
    let k = states.ncols() - 1;
    let traj = Trajectory::new(states, None, TimeGrid::new(0.0, dt, k).unwrap()).unwrap();
    TrajectoryDataset::new(vec![(vec![], traj)]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn one_step_euler_objective_is_scaled_static_residual(
        (theta, states) in (1usize..4).prop_flat_map(|n| {
            let nbar = FeatureLayout::new(n, 2, 0).unwrap().len();
            (matrix(n, nbar), matrix(n, 12))
        }),
        dt in 0.01f64..0.5,
    ) {
        let n = theta.nrows();
        let ops = Operators::from_theta(Arc::new(FeatureLayout::new(n, 2, 0).unwrap()), theta).unwrap();
        let data = dataset(states, dt);
        let model = PolyModel::new(ops.clone(), dt, Scheme::ForwardEuler).unwrap();
        let roll = rollout_objective(&model, &data, &RollConfig::new(1).unwrap()).unwrap();
        let stat = dt * dt * assemble_system(&data, 2, 1).unwrap().objective(&ops);
        prop_assert!((roll - stat).abs() <= 1e-11 * stat.max(1e-300));
    }

    #[test]
    fn lyapunov_residual_is_small_for_shifted_matrices(a in (1usize..6).prop_flat_map(|n| matrix(n, n)), l in matrix(5, 5)) {
        let n = a.nrows();
        let a1 = a - DMatrix::identity(n, n) * 3.0;
        let l = l.view((0, 0), (n, n)).into_owned();
        let p = lyapunov_solve(&a1, &l).unwrap();
        let llt = &l * l.transpose();
        let residual = (a1.transpose() * &p + &p * &a1 + &llt).norm();
        prop_assert!(residual <= 1e-8 * llt.norm().max(1e-300));
        prop_assert!((&p - p.transpose()).amax() == 0.0);
    }

    #[test]
    fn gamma_depends_on_a2_only_through_its_norm(a2 in matrix(2, 3), c in 0.1f64..10.0) {
        prop_assume!(a2.norm() > 1e-3);
        let a1 = DMatrix::from_row_slice(2, 2, &[-1.0, 0.2, 0.0, -0.5]);
        let l = DMatrix::identity(2, 2);
        let g = stability_radius_bound(&a1, &a2, &l).unwrap();
        let gc = stability_radius_bound(&a1, &(&a2 * c), &l).unwrap();
        prop_assert!((g - c * gc).abs() <= 1e-12 * g);
    }

    #[test]
    fn interpolation_reproduces_affine_operators(
        base in matrix(2, 5),
        slope_x in matrix(2, 5),
        slope_y in matrix(2, 5),
        qx in 0.0f64..1.0,
        qy in 0.0f64..1.0,
    ) {
        let layout = Arc::new(FeatureLayout::new(2, 2, 0).unwrap());
        let at = |x: f64, y: f64| Operators::from_theta(layout.clone(), &base + &slope_x * x + &slope_y * y).unwrap();
        let xs = [0.0, 0.4, 1.0];
        let ys = [0.0, 1.0];
        let mut params = Vec::new();
        let mut ops = Vec::new();
        for &y in &ys {
            for &x in &xs {
                params.push(vec![x, y]);
                ops.push(at(x, y));
            }
        }
        let got = interpolate_theta(&params, &ops, &[qx, qy]).unwrap();
        prop_assert!((got.theta() - at(qx, qy).theta()).amax() <= 1e-12);
    }

    #[test]
    fn zero_noise_is_identity_and_noise_is_seeded(states in matrix(3, 8), seed in any::<u64>()) {
        let data = dataset(states, 0.1);
        prop_assert_eq!(&add_noise(&data, 0.0, seed).unwrap(), &data);
        prop_assert_eq!(add_noise(&data, 0.05, seed).unwrap(), add_noise(&data, 0.05, seed).unwrap());
    }
}
