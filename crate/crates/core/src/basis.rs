//! POD reduced bases and projection to/from the reduced space.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::datamodel::{load_csv, load_matrix, save_csv, save_rom1, Trajectory, TrajectoryDataset};
use crate::error::{Error, Result};
use crate::linalg::{fix_column_signs, jacobi_svd};

/// Singular values below this fraction of `σ_1` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Orthonormal basis `V` (`N × n`) with the singular values of the snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    v: DMatrix<f64>,
    singular_values: Vec<f64>,
}

impl ReducedBasis {
    /// Wraps an existing basis; columns must be orthonormal to 1e-10.
    pub fn new(v: DMatrix<f64>, singular_values: Vec<f64>) -> Result<Self> {
        if v.ncols() == 0 || v.ncols() > v.nrows() {
            return Err(Error::Argument(format!("basis must be N x n with 1 <= n <= N, got {}x{}", v.nrows(), v.ncols())));
        }
        let defect = (v.tr_mul(&v) - DMatrix::identity(v.ncols(), v.ncols())).norm();
        if !(defect <= 1e-10) {
            return Err(Error::Data(format!("basis columns are not orthonormal (|V^T V - I|_F = {defect:.3e})")));
        }
        if singular_values.iter().any(|s| !(*s >= 0.0)) || singular_values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Data("singular values must be nonnegative and descending".into()));
        }
        Ok(ReducedBasis { v, singular_values })
    }

    /// Identity basis of dimension `n` (mostly useful for tests and already-reduced data).
    pub fn identity(n: usize) -> Self {
        ReducedBasis {
            v: DMatrix::identity(n, n),
            singular_values: vec![1.0; n],
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn full_dim(&self) -> usize {
        self.v.nrows()
    }

    pub fn reduced_dim(&self) -> usize {
        self.v.ncols()
    }

    /// `V^T q`.
    pub fn project_state(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        if q.len() != self.full_dim() {
            return Err(Error::Argument(format!("state has length {}, basis expects {}", q.len(), self.full_dim())));
        }
        Ok(self.v.tr_mul(q))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        save_rom1(&dir.join("basis.rom1"), &self.v)?;
        save_csv(
            &dir.join("singular_values.csv"),
            &DMatrix::from_column_slice(self.singular_values.len(), 1, &self.singular_values),
        )
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let v = load_matrix(&dir.join("basis.rom1"))?;
        let s = load_csv(&dir.join("singular_values.csv"))?;
        ReducedBasis::new(v, s.iter().copied().collect())
    }
}

/// Dominant `n` left singular vectors of the snapshot matrix `X` (`N × S`).
///
/// With `S ≤ N` the method of snapshots is used (eigenvectors of `X^T X`),
/// otherwise a one-sided Jacobi SVD. Each column is sign-fixed so its
/// largest-magnitude entry is positive.
pub fn pod_basis(snapshots: &DMatrix<f64>, n: usize) -> Result<ReducedBasis> {
    let (big_n, s) = snapshots.shape();
    if n == 0 || n > big_n.min(s) {
        return Err(Error::Argument(format!("basis size {n} must lie in 1..={}", big_n.min(s))));
    }
    if !snapshots.iter().all(|v| v.is_finite()) {
        return Err(Error::Data("snapshots contain non-finite entries".into()));
    }

    let (mut v, sigma) = if s <= big_n {
        method_of_snapshots(snapshots, n)
    } else {
        let svd = jacobi_svd(snapshots);
        (svd.u.columns(0, n).into_owned(), svd.singular_values)
    };

    let threshold = RANK_TOLERANCE * sigma[0];
    let achievable = sigma.iter().filter(|&&x| x >= threshold && x > 0.0).count();
    if achievable < n {
        return Err(Error::RankDeficient { requested: n, achievable });
    }

    fix_column_signs(&mut v);
    Ok(ReducedBasis {
        v,
        singular_values: sigma,
    })
}

fn method_of_snapshots(x: &DMatrix<f64>, n: usize) -> (DMatrix<f64>, Vec<f64>) {
    let gram = x.tr_mul(x);
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0).sqrt()).collect();

    let mut v = DMatrix::zeros(x.nrows(), n);
    for (k, &i) in order.iter().take(n).enumerate() {
        if sigma[k] > 0.0 {
            let col = x * eig.eigenvectors.column(i) / sigma[k];
            v.set_column(k, &col);
        }
    }
    // The Gram route squares the condition number; two Gram-Schmidt passes
    // restore orthonormality to machine precision.
    for _ in 0..2 {
        for j in 0..n {
            for i in 0..j {
                let r = v.column(i).dot(&v.column(j));
                let ci = v.column(i).into_owned();
                v.column_mut(j).axpy(-r, &ci, 1.0);
            }
            let norm = v.column(j).norm();
            if norm > 0.0 {
                v.column_mut(j).unscale_mut(norm);
            }
        }
    }
    // Eigenvalues of the Gram matrix resolve singular values only down to
    // about sqrt(eps) * σ_1; |X^T v_k| is accurate to eps * σ_1.
    let mut sigma = sigma;
    let mut cap = f64::INFINITY;
    for (k, s) in sigma.iter_mut().enumerate() {
        if k < n {
            *s = x.tr_mul(&v.column(k)).norm();
        }
        cap = cap.min(*s);
        *s = cap;
    }
    (v, sigma)
}

/// States `V^T Q`, same grid and controls.
pub fn project(basis: &ReducedBasis, traj: &Trajectory) -> Result<Trajectory> {
    if traj.state_dim() != basis.full_dim() {
        return Err(Error::Argument(format!(
            "trajectory state dim {} does not match basis full dim {}",
            traj.state_dim(),
            basis.full_dim()
        )));
    }
    traj.with_states(basis.v.tr_mul(traj.states()))
}

/// States `V Q̂`, same grid and controls.
pub fn lift(basis: &ReducedBasis, reduced: &Trajectory) -> Result<Trajectory> {
    if reduced.state_dim() != basis.reduced_dim() {
        return Err(Error::Argument(format!(
            "trajectory state dim {} does not match basis reduced dim {}",
            reduced.state_dim(),
            basis.reduced_dim()
        )));
    }
    reduced.with_states(&basis.v * reduced.states())
}

pub fn project_dataset(basis: &ReducedBasis, data: &TrajectoryDataset) -> Result<TrajectoryDataset> {
    data.try_map(|t| project(basis, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::TimeGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn orth_defect(b: &ReducedBasis) -> f64 {
        let v = b.matrix();
        (v.tr_mul(v) - DMatrix::identity(v.ncols(), v.ncols())).norm()
    }

    #[test]
    fn identity_snapshots() {
        let b = pod_basis(&DMatrix::identity(4, 4), 2).unwrap();
        assert_eq!(b.matrix(), &DMatrix::identity(4, 4).columns(0, 2).into_owned());
        assert_eq!(b.singular_values(), &[1.0; 4]);
    }

    #[test]
    fn rank_one_snapshots() {
        let v = DVector::from_vec(vec![-0.6, 0.8, 0.0]);
        let x = DMatrix::from_columns(&[v.clone(), &v * 2.0, &v * 3.0]);
        let b = pod_basis(&x, 1).unwrap();
        assert!((b.matrix().column(0) - &v).norm() < 1e-12);
        assert!((b.singular_values()[0] - 14f64.sqrt()).abs() < 1e-12);
        assert!(matches!(pod_basis(&x, 2), Err(Error::RankDeficient { requested: 2, achievable: 1 })));
    }

    #[test]
    fn truncation_error_matches_tail_energy() {
        for (rows, cols) in [(30, 20), (20, 30)] {
            let x = random(rows, cols, 9);
            let b = pod_basis(&x, 5).unwrap();
            assert!(orth_defect(&b) < 1e-10);
            let v = b.matrix();
            let resid = (&x - v * v.tr_mul(&x)).norm_squared();
            let oracle = x.clone().svd(false, false).singular_values;
            let mut s: Vec<f64> = oracle.iter().copied().collect();
            s.sort_by(|a, b| b.total_cmp(a));
            let tail: f64 = s[5..].iter().map(|x| x * x).sum();
            assert!((resid - tail).abs() <= 1e-8 * tail, "{rows}x{cols}: {resid} vs {tail}");
            for (a, b) in b.singular_values().iter().zip(&s) {
                assert!((a - b).abs() < 1e-10 * s[0]);
            }
        }
    }

    #[test]
    fn deterministic_and_error_non_increasing() {
        let x = random(25, 12, 4);
        assert_eq!(pod_basis(&x, 6).unwrap(), pod_basis(&x, 6).unwrap());
        let mut prev = f64::INFINITY;
        for n in 1..=12 {
            let v = pod_basis(&x, n).unwrap().matrix().clone();
            let e = (&x - &v * v.tr_mul(&x)).norm();
            assert!(e <= prev + 1e-12);
            prev = e;
        }
    }

    #[test]
    fn argument_errors() {
        let x = random(5, 3, 1);
        assert!(matches!(pod_basis(&x, 0), Err(Error::Argument(_))));
        assert!(matches!(pod_basis(&x, 4), Err(Error::Argument(_))));
    }

    fn traj(states: DMatrix<f64>) -> Trajectory {
        let k = states.ncols() - 1;
        Trajectory::new(states, None, TimeGrid::new(0.0, 0.1, k).unwrap()).unwrap()
    }

    #[test]
    fn projection_and_lift() {
        let b = pod_basis(&random(6, 4, 3), 3).unwrap();
        let v = b.matrix().clone();

        let inside = traj(&v * random(3, 2, 5));
        let back = lift(&b, &project(&b, &inside).unwrap()).unwrap();
        assert!((back.states() - inside.states()).norm() < 1e-12);

        let r = random(6, 2, 8);
        let orth = traj(&r - &v * v.tr_mul(&r));
        assert!(project(&b, &orth).unwrap().states().norm() < 1e-12);

        let zero = lift(&b, &traj(DMatrix::zeros(3, 2))).unwrap();
        assert_eq!(zero.states(), &DMatrix::zeros(6, 2));

        let e1 = lift(&b, &traj(DMatrix::from_column_slice(3, 2, &[0.0, 1.0, 0.0, 0.0, 1.0, 0.0]))).unwrap();
        assert_eq!(e1.states().column(0), v.column(1));

        let id = ReducedBasis::identity(6);
        assert_eq!(project(&id, &inside).unwrap(), inside);

        assert!(matches!(project(&b, &traj(DMatrix::zeros(3, 2))), Err(Error::Argument(_))));
        assert!(matches!(lift(&b, &traj(DMatrix::zeros(6, 2))), Err(Error::Argument(_))));
    }
}
