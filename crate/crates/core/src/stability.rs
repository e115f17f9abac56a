//! Lyapunov-based bounds of the stability radius of quadratic models.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::datamodel::io_write_atomic;
use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, Lu};
use crate::polymodel::{Operators, PolyModel};

/// Kronecker systems with a larger condition estimate are rejected.
pub const MAX_KRONECKER_CONDITION: f64 = 1e12;

/// Relative residual accepted for a Lyapunov solution.
pub const LYAPUNOV_RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Solves `A^T P + P A = −L L^T` for many `L` with one factorization of
/// `I ⊗ A^T + A^T ⊗ I`.
#[derive(Debug, Clone)]
pub struct LyapunovSolver {
    a: DMatrix<f64>,
    lu: Lu,
}

impl LyapunovSolver {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::Argument(format!("A_1 must be square and nonempty, got {}x{}", a.nrows(), a.ncols())));
        }
        let m = n * n;
        let mut kron = DMatrix::zeros(m, m);
        // vec(A^T P) = (I ⊗ A^T) vec P and vec(P A) = (A^T ⊗ I) vec P (column-major vec).
        for blk in 0..n {
            for i in 0..n {
                for j in 0..n {
                    kron[(blk * n + i, blk * n + j)] += a[(j, i)];
                    kron[(i * n + blk, j * n + blk)] += a[(j, i)];
                }
            }
        }
        let lu = Lu::factor(&kron).ok_or_else(|| {
            Error::NoCertificate("Lyapunov operator is singular (A_1 has eigenvalues summing to zero)".into())
        })?;
        let cond = lu.condition_estimate();
        if !(cond <= MAX_KRONECKER_CONDITION) {
            return Err(Error::NoCertificate(format!("Lyapunov operator condition estimate {cond:.3e} exceeds 1e12")));
        }
        Ok(LyapunovSolver { a: a.clone(), lu })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Symmetrized `P` and the residual `‖A^T P + P A + L L^T‖_F`.
    pub fn solve(&self, l: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
        let n = self.dim();
        if l.shape() != (n, n) {
            return Err(Error::Argument(format!("L must be {n}x{n}, got {}x{}", l.nrows(), l.ncols())));
        }
        let llt = l * l.transpose();
        let mut rhs: Vec<f64> = llt.iter().map(|v| -v).collect();
        let mut scratch = vec![0.0; rhs.len()];
        self.lu.solve_in_place(&mut rhs, &mut scratch);
        let p = DMatrix::from_vec(n, n, rhs);
        let p = (&p + p.transpose()) * 0.5;
        let residual = (self.a.tr_mul(&p) + &p * &self.a + &llt).norm();
        let scale = llt.norm();
        if !(residual <= LYAPUNOV_RESIDUAL_TOLERANCE * scale) {
            return Err(Error::NoCertificate(format!(
                "Lyapunov residual {residual:.3e} exceeds tolerance relative to |LL^T| = {scale:.3e}"
            )));
        }
        Ok((p, residual))
    }
}

/// Solution `P` of `A_1^T P + P A_1 = −L L^T`, symmetrized.
pub fn lyapunov_solve(a1: &DMatrix<f64>, l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(LyapunovSolver::new(a1)?.solve(l)?.0)
}

/// One bound with its Lyapunov residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    /// `+∞` when `A_2 = 0`.
    pub gamma: f64,
    pub residual: f64,
}

fn bound_with(solver: &LyapunovSolver, a2_norm: f64, l: &DMatrix<f64>) -> Result<Bound> {
    let (p, residual) = solver.solve(l)?;
    let gamma = if a2_norm == 0.0 {
        f64::INFINITY
    } else {
        let sigma_min = jacobi_svd(l).singular_values.last().copied().unwrap_or(0.0);
        sigma_min / (2.0 * p.norm().sqrt() * a2_norm)
    };
    Ok(Bound { gamma, residual })
}

/// `γ = σ_min(L) / (2 √‖P‖_F ‖A_2‖_F)`.
///
/// The value is a certified radius only when `A_1` is Hurwitz (then `P` is
/// positive definite); it is reported by the same formula otherwise.
pub fn stability_radius_bound(a1: &DMatrix<f64>, a2: &DMatrix<f64>, l: &DMatrix<f64>) -> Result<f64> {
    if a2.nrows() != a1.nrows() {
        return Err(Error::Argument(format!("A_2 has {} rows, A_1 is {}x{}", a2.nrows(), a1.nrows(), a1.ncols())));
    }
    Ok(bound_with(&LyapunovSolver::new(a1)?, a2.norm(), l)?.gamma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub gammas: Vec<f64>,
    /// Mean of the finite bounds (`+∞` if none is finite).
    pub mean_gamma: f64,
    pub num_realizations: usize,
    pub num_infinite: usize,
    pub seed: u64,
    pub lyapunov_residuals: Vec<f64>,
}

impl StabilityReport {
    /// `realization,gamma,residual` rows and a final `mean` row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("realization,gamma,residual\n");
        for (i, (g, r)) in self.gammas.iter().zip(&self.lyapunov_residuals).enumerate() {
            writeln!(s, "{i},{g:.16e},{r:.16e}").unwrap();
        }
        writeln!(s, "mean,{:.16e},{}", self.mean_gamma, self.num_infinite).unwrap();
        io_write_atomic(path, s.as_bytes())
    }
}

/// Mean stability-radius bound over random certificates `L` with i.i.d.
/// standard normal entries. Realization `i` draws from stream `i` of a
/// ChaCha8 generator seeded with `seed`.
pub fn averaged_bound(model: &PolyModel, num_realizations: usize, seed: u64) -> Result<StabilityReport> {
    averaged_bound_operators(model.operators(), num_realizations, seed)
}

/// [`averaged_bound`] on bare operators; the bound does not depend on the
/// time discretization.
pub fn averaged_bound_operators(ops: &Operators, num_realizations: usize, seed: u64) -> Result<StabilityReport> {
    if ops.degree() < 2 {
        return Err(Error::Argument("stability bound requires a model of degree >= 2".into()));
    }
    if num_realizations == 0 {
        return Err(Error::Argument("need at least one realization".into()));
    }
    let n = ops.state_dim();
    let solver = LyapunovSolver::new(&ops.block(1).into_owned())?;
    let a2_norm = ops.block(2).norm();

    let mut gammas = Vec::with_capacity(num_realizations);
    let mut residuals = Vec::with_capacity(num_realizations);
    let mut last_err = None;
    for i in 0..num_realizations {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let l = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        match bound_with(&solver, a2_norm, &l) {
            Ok(b) => {
                gammas.push(b.gamma);
                residuals.push(b.residual);
            }
            Err(e) => {
                log::warn!("realization {i}: {e}");
                gammas.push(f64::NAN);
                residuals.push(f64::NAN);
                last_err = Some(e);
            }
        }
    }
    if gammas.iter().all(|g| g.is_nan()) {
        return Err(last_err.unwrap_or_else(|| Error::NoCertificate("every realization failed".into())));
    }
    let finite: Vec<f64> = gammas.iter().copied().filter(|g| g.is_finite()).collect();
    let num_infinite = gammas.iter().filter(|g| g.is_infinite()).count();
    let mean_gamma = if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    Ok(StabilityReport {
        gammas,
        mean_gamma,
        num_realizations,
        num_infinite,
        seed,
        lyapunov_residuals: residuals,
    })
}
