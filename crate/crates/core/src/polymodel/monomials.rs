//! Degree-ℓ monomials of a state vector, unique up to commutativity.
//!
//! Ordering: graded lexicographic. Within degree ℓ, a monomial
//! `q_{i_1} q_{i_2} ⋯ q_{i_ℓ}` is keyed by its sorted index tuple
//! `i_1 ≤ i_2 ≤ ⋯ ≤ i_ℓ`, and tuples are listed in ascending lexicographic
//! order. For `n = 2, ℓ = 2` this gives `[q_1², q_1 q_2, q_2²]`, i.e. the
//! upper triangle of `q ⊗ q` read row by row. Monomials carry no
//! combinatorial weights.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// `C(n + ℓ − 1, ℓ)`, the number of distinct degree-ℓ monomials in `n` variables.
pub fn monomial_count(n: usize, l: usize) -> Result<usize> {
    if n == 0 || l == 0 {
        return Err(Error::Argument(format!("monomial_count needs n, l >= 1 (got {n}, {l})")));
    }
    // c_i = C(n + i − 1, i); c_i = c_{i−1} (n + i − 1) / i is exact at every step.
    let mut c: u128 = 1;
    for i in 1..=l as u128 {
        c = c
            .checked_mul(n as u128 + i - 1)
            .ok_or_else(|| Error::Capacity(format!("C({}+{l}-1, {l}) overflows", n)))?
            / i;
    }
    usize::try_from(c).map_err(|_| Error::Capacity(format!("C({n}+{l}-1, {l}) = {c} does not fit in usize")))
}

/// Index tuples for all monomials of one degree, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialIndexing {
    n: usize,
    degree: usize,
    /// `len() · degree` indices, one sorted tuple after another.
    tuples: Vec<usize>,
}

impl MonomialIndexing {
    pub fn new(n: usize, degree: usize) -> Result<Self> {
        let count = monomial_count(n, degree)?;
        let mut tuples = Vec::with_capacity(count * degree);
        let mut cur = vec![0usize; degree];
        loop {
            tuples.extend_from_slice(&cur);
            // advance to the next non-decreasing tuple
            let mut pos = degree;
            while pos > 0 && cur[pos - 1] == n - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            let v = cur[pos - 1] + 1;
            for slot in &mut cur[pos - 1..] {
                *slot = v;
            }
        }
        debug_assert_eq!(tuples.len(), count * degree);
        Ok(MonomialIndexing { n, degree, tuples })
    }

    pub fn len(&self) -> usize {
        self.tuples.len() / self.degree
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Exponent multi-index `α` of monomial `m`.
    pub fn exponents(&self, m: usize) -> Vec<usize> {
        let mut alpha = vec![0; self.n];
        for &i in self.tuple(m) {
            alpha[i] += 1;
        }
        alpha
    }

    pub fn tuple(&self, m: usize) -> &[usize] {
        &self.tuples[m * self.degree..(m + 1) * self.degree]
    }

    pub fn eval_into(&self, q: &[f64], out: &mut [f64]) {
        match self.degree {
            1 => out[..self.n].copy_from_slice(&q[..self.n]),
            2 => {
                for (o, t) in out.iter_mut().zip(self.tuples.chunks_exact(2)) {
                    *o = q[t[0]] * q[t[1]];
                }
            }
            d => {
                for (o, t) in out.iter_mut().zip(self.tuples.chunks_exact(d)) {
                    *o = t.iter().map(|&i| q[i]).product();
                }
            }
        }
    }

    /// `out += J(q)^T v` where `J` is the Jacobian of the monomial vector at `q`.
    pub fn jacobian_transpose_acc(&self, q: &[f64], v: &[f64], out: &mut [f64]) {
        match self.degree {
            1 => {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += x;
                }
            }
            2 => {
                for (&w, t) in v.iter().zip(self.tuples.chunks_exact(2)) {
                    out[t[0]] += w * q[t[1]];
                    out[t[1]] += w * q[t[0]];
                }
            }
            d => {
                for (&w, t) in v.iter().zip(self.tuples.chunks_exact(d)) {
                    for p in 0..d {
                        let others: f64 = t
                            .iter()
                            .enumerate()
                            .filter(|&(r, _)| r != p)
                            .map(|(_, &i)| q[i])
                            .product();
                        out[t[p]] += w * others;
                    }
                }
            }
        }
    }
}

/// Vector of all degree-`l` monomials of `q` in canonical order.
pub fn feature_map(q: &DVector<f64>, l: usize) -> Result<DVector<f64>> {
    let idx = MonomialIndexing::new(q.len(), l)?;
    let mut out = DVector::zeros(idx.len());
    idx.eval_into(q.as_slice(), out.as_mut_slice());
    Ok(out)
}
