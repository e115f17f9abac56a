//! Deterministic inputs for the kernel benchmarks in `benches/`.

use rollinf_core::benchgen::{quadratic_dataset, random_quadratic_system};
use rollinf_core::{DMatrix, Operators, Scheme, TrajectoryDataset};

pub const DT: f64 = 0.01;

/// Stable quadratic truth of dimension `n` and `m` of its trajectories with `k` steps.
pub fn quadratic_problem(n: usize, m: usize, k: usize) -> (Operators, TrajectoryDataset) {
    let truth = random_quadratic_system(n, 1, 0.1).expect("valid system");
    let data = quadratic_dataset(&truth, DT, Scheme::ImexLinearImplicit, m, k, 0.5, 2).expect("stable runs");
    (truth, data)
}

/// Smooth `rows × cols` snapshot matrix with a decaying spectrum.
pub fn snapshots(rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| {
        let x = i as f64 / rows as f64;
        let t = j as f64 / cols as f64;
        (1..=12).map(|m| (m as f64 * (x + 0.3 * t)).sin() / (m * m) as f64).sum()
    })
}
