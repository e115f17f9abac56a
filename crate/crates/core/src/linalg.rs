//! Small dense kernels that the rest of the crate builds on.
//!
//! Storage is nalgebra's column-major `DMatrix`; the factorizations here work
//! directly on the underlying column slices so that hot loops (one LU solve
//! per roll-out step) do not allocate.

use nalgebra::{DMatrix, DVector};

/// LU factorization with partial pivoting, `P M = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    /// Column-major packed factors: strict lower part is `L` (unit diagonal), upper is `U`.
    lu: Vec<f64>,
    /// Row `i` of `P M` is row `perm[i]` of `M`.
    perm: Vec<usize>,
    norm1: f64,
}

impl Lu {
    /// Factorizes a square matrix. Returns `None` if a pivot is exactly zero.
    pub fn factor(m: &DMatrix<f64>) -> Option<Lu> {
        assert_eq!(m.nrows(), m.ncols(), "LU needs a square matrix");
        let n = m.nrows();
        let mut lu = m.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let norm1 = one_norm(m);

        for k in 0..n {
            let col = k * n;
            let (mut p, mut best) = (k, lu[col + k].abs());
            for i in k + 1..n {
                let v = lu[col + i].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return None;
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    lu.swap(j * n + p, j * n + k);
                }
            }
            let pivot = lu[col + k];
            for i in k + 1..n {
                lu[col + i] /= pivot;
            }
            for j in k + 1..n {
                let cj = j * n;
                let ukj = lu[cj + k];
                if ukj != 0.0 {
                    for i in k + 1..n {
                        lu[cj + i] -= lu[col + i] * ukj;
                    }
                }
            }
        }
        Some(Lu {
            n,
            lu,
            perm,
            norm1,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `M x = b`, overwriting `b` with `x`. `scratch` must have length `n`.
    pub fn solve_in_place(&self, b: &mut [f64], scratch: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            scratch[i] = b[self.perm[i]];
        }
        // L y = P b
        for j in 0..n {
            let yj = scratch[j];
            if yj != 0.0 {
                let c = j * n;
                for i in j + 1..n {
                    scratch[i] -= self.lu[c + i] * yj;
                }
            }
        }
        // U x = y
        for j in (0..n).rev() {
            let c = j * n;
            scratch[j] /= self.lu[c + j];
            let xj = scratch[j];
            if xj != 0.0 {
                for i in 0..j {
                    scratch[i] -= self.lu[c + i] * xj;
                }
            }
        }
        b[..n].copy_from_slice(&scratch[..n]);
    }

    /// Solves `M^T x = b`, overwriting `b` with `x`.
    pub fn solve_transpose_in_place(&self, b: &mut [f64], scratch: &mut [f64]) {
        let n = self.n;
        // U^T y = b (forward); column j of U is row j of U^T.
        for j in 0..n {
            let c = j * n;
            let mut s = b[j];
            for i in 0..j {
                s -= self.lu[c + i] * b[i];
            }
            b[j] = s / self.lu[c + j];
        }
        // L^T w = y (backward, unit diagonal)
        for j in (0..n).rev() {
            let c = j * n;
            let mut s = b[j];
            for i in j + 1..n {
                s -= self.lu[c + i] * b[i];
            }
            b[j] = s;
        }
        for i in 0..n {
            scratch[self.perm[i]] = b[i];
        }
        b[..n].copy_from_slice(&scratch[..n]);
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        let mut scratch = vec![0.0; self.n];
        self.solve_in_place(x.as_mut_slice(), &mut scratch);
        x
    }

    pub fn solve_transpose(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        let mut scratch = vec![0.0; self.n];
        self.solve_transpose_in_place(x.as_mut_slice(), &mut scratch);
        x
    }

    /// Estimated 1-norm condition number `‖M‖_1 ‖M^{-1}‖_1` (Hager's estimator).
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let mut scratch = vec![0.0; n];
        let mut x = vec![1.0 / n as f64; n];
        let mut estimate = 0.0;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(&mut y, &mut scratch);
            estimate = y.iter().map(|v| v.abs()).sum::<f64>();
            if !estimate.is_finite() {
                return f64::INFINITY;
            }
            let mut z: Vec<f64> = y
                .iter()
                .map(|&v| if v >= 0.0 { 1.0 } else { -1.0 })
                .collect();
            self.solve_transpose_in_place(&mut z, &mut scratch);
            let (mut jmax, mut zmax) = (0, 0.0);
            for (j, v) in z.iter().enumerate() {
                if v.abs() > zmax {
                    zmax = v.abs();
                    jmax = j;
                }
            }
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x.iter_mut().for_each(|v| *v = 0.0);
            x[jmax] = 1.0;
        }
        self.norm1 * estimate
    }
}

pub fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Thin singular value decomposition `A = U diag(σ) V^T`, σ descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Columns of `U` belonging to zero singular values are left as zero vectors.
pub fn jacobi_svd(a: &DMatrix<f64>) -> Svd {
    if a.nrows() < a.ncols() {
        let t = jacobi_svd(&a.transpose());
        return Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    let (m, n) = a.shape();
    let mut w = a.as_slice().to_vec();
    let mut v = DMatrix::<f64>::identity(n, n).as_slice().to_vec();
    const TOL: f64 = 1e-15;

    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let (ci, cj) = (i * m, j * m);
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for r in 0..m {
                    let (x, y) = (w[ci + r], w[cj + r]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let (x, y) = (w[ci + r], w[cj + r]);
                    w[ci + r] = c * x - s * y;
                    w[cj + r] = s * x + c * y;
                }
                let (vi, vj) = (i * n, j * n);
                for r in 0..n {
                    let (x, y) = (v[vi + r], v[vj + r]);
                    v[vi + r] = c * x - s * y;
                    v[vj + r] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n)
        .map(|j| w[j * m..(j + 1) * m].iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps column order for ties.
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));

    let mut u = DMatrix::<f64>::zeros(m, n);
    let mut vv = DMatrix::<f64>::zeros(n, n);
    let mut sv = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        sv.push(s);
        if s > 0.0 {
            for r in 0..m {
                u[(r, k)] = w[j * m + r] / s;
            }
        }
        for r in 0..n {
            vv[(r, k)] = v[j * n + r];
        }
    }
    Svd {
        u,
        singular_values: sv,
        v: vv,
    }
}

/// Minimum-norm least-squares solution `X = A^+ B` with singular values below
/// `rel_cutoff · σ_max` treated as zero. Returns the solution and the rank used.
pub fn min_norm_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, rel_cutoff: f64) -> (DMatrix<f64>, usize) {
    assert_eq!(a.nrows(), b.nrows());
    let svd = jacobi_svd(a);
    let smax = svd.singular_values.first().copied().unwrap_or(0.0);
    let mut x = DMatrix::<f64>::zeros(a.ncols(), b.ncols());
    if smax == 0.0 {
        return (x, 0);
    }
    let cutoff = rel_cutoff * smax;
    let rank = svd.singular_values.iter().take_while(|&&s| s > cutoff).count();
    for k in 0..rank {
        let coeff = svd.u.column(k).transpose() * b / svd.singular_values[k];
        x += svd.v.column(k) * coeff;
    }
    (x, rank)
}

/// Flips each column so its largest-magnitude entry is positive (first index wins ties).
pub fn fix_column_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0usize;
        let mut mag = -1.0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > mag {
                mag = v.abs();
                best = i;
            }
        }
        if mag > 0.0 && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}
