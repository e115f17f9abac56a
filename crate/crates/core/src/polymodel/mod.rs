//! Polynomial models `dq/dt = Σ_ℓ A_ℓ q^ℓ + B u` and their discrete flow maps.

mod io;
mod monomials;

pub use io::{load_model, load_operators, save_model, save_operators, OperatorSet};
pub use monomials::{feature_map, monomial_count, MonomialIndexing};

use std::sync::Arc;

use nalgebra::{DMatrix, DMatrixView, DVector};

use crate::datamodel::{TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::Lu;

/// Condition-number ceiling for the implicit matrix `I − dt·A_1`.
pub const MAX_IMPLICIT_CONDITION: f64 = 1e12;

/// Factor on `1 + ‖q_0‖_∞` beyond which a simulated state counts as diverged.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Time discretization of a [`PolyModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// `q⁺ = q + dt·f(q, u)`.
    ForwardEuler,
    /// `(I − dt·A_1) q⁺ = q + dt·(Σ_{ℓ≥2} A_ℓ q^ℓ + B u)`.
    ImexLinearImplicit,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::ForwardEuler => "forward-euler",
            Scheme::ImexLinearImplicit => "imex",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward-euler" | "euler" => Ok(Scheme::ForwardEuler),
            "imex" => Ok(Scheme::ImexLinearImplicit),
            other => Err(Error::Argument(format!("unknown scheme `{other}` (expected forward-euler or imex)"))),
        }
    }
}

/// The monomial layout shared by every operator set with the same `(n, L, p)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureLayout {
    state_dim: usize,
    control_dim: usize,
    degrees: Vec<MonomialIndexing>,
    offsets: Vec<usize>,
    len: usize,
}

impl FeatureLayout {
    pub fn new(state_dim: usize, degree: usize, control_dim: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Argument("polynomial degree must be at least 1".into()));
        }
        let degrees = (1..=degree)
            .map(|l| MonomialIndexing::new(state_dim, l))
            .collect::<Result<Vec<_>>>()?;
        let mut offsets = Vec::with_capacity(degree + 1);
        let mut len = 0;
        for d in &degrees {
            offsets.push(len);
            len += d.len();
        }
        offsets.push(len);
        len += control_dim;
        Ok(FeatureLayout {
            state_dim,
            control_dim,
            degrees,
            offsets,
            len,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    pub fn degree(&self) -> usize {
        self.degrees.len()
    }

    /// `n̄ = p + Σ_ℓ n_ℓ`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Column range of `A_ℓ` (1-based `ℓ`) inside the stacked feature vector.
    pub fn block_range(&self, l: usize) -> std::ops::Range<usize> {
        self.offsets[l - 1]..self.offsets[l]
    }

    pub fn control_range(&self) -> std::ops::Range<usize> {
        self.offsets[self.degree()]..self.len
    }

    pub fn indexing(&self, l: usize) -> &MonomialIndexing {
        &self.degrees[l - 1]
    }

    /// Writes `[q^1; q^2; …; q^L; u]` into `out`.
    pub fn eval_into(&self, q: &[f64], u: &[f64], out: &mut [f64]) {
        for (l, idx) in self.degrees.iter().enumerate() {
            idx.eval_into(q, &mut out[self.offsets[l]..self.offsets[l + 1]]);
        }
        out[self.control_range()].copy_from_slice(&u[..self.control_dim]);
    }

    pub fn eval(&self, q: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.len);
        self.eval_into(q.as_slice(), u.as_slice(), out.as_mut_slice());
        out
    }

    /// `out += Σ_{ℓ ≥ from} J_ℓ(q)^T v_ℓ`, `v` indexed like the stacked features.
    pub(crate) fn jacobian_transpose_acc(&self, from: usize, q: &[f64], v: &[f64], out: &mut [f64]) {
        for l in from..=self.degree() {
            let r = self.block_range(l);
            self.degrees[l - 1].jacobian_transpose_acc(q, &v[r], out);
        }
    }
}

/// The model parameter `θ = [A_1, …, A_L, B]`, stored as one `n × n̄` matrix
/// whose column blocks follow [`FeatureLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operators {
    layout: Arc<FeatureLayout>,
    theta: DMatrix<f64>,
}

impl Operators {
    pub fn zeros(state_dim: usize, degree: usize, control_dim: usize) -> Result<Self> {
        let layout = FeatureLayout::new(state_dim, degree, control_dim)?;
        let theta = DMatrix::zeros(state_dim, layout.len());
        Ok(Operators {
            layout: Arc::new(layout),
            theta,
        })
    }

    /// Builds from `[A_1, …, A_L]` and `B` (`n × p`, possibly `p = 0`).
    pub fn from_blocks(blocks: &[DMatrix<f64>], input: &DMatrix<f64>) -> Result<Self> {
        let n = blocks
            .first()
            .ok_or_else(|| Error::Argument("need at least the linear operator".into()))?
            .nrows();
        let mut ops = Operators::zeros(n, blocks.len(), input.ncols())?;
        for (i, b) in blocks.iter().enumerate() {
            let r = ops.layout.block_range(i + 1);
            if b.shape() != (n, r.len()) {
                return Err(Error::Argument(format!(
                    "A_{} must be {}x{}, got {}x{}",
                    i + 1,
                    n,
                    r.len(),
                    b.nrows(),
                    b.ncols()
                )));
            }
            ops.theta.columns_mut(r.start, r.len()).copy_from(b);
        }
        if input.nrows() != n && input.ncols() > 0 {
            return Err(Error::Argument(format!("B must have {n} rows, got {}", input.nrows())));
        }
        let r = ops.layout.control_range();
        if !r.is_empty() {
            ops.theta.columns_mut(r.start, r.len()).copy_from(input);
        }
        ops.check_finite()?;
        Ok(ops)
    }

    pub fn from_theta(layout: Arc<FeatureLayout>, theta: DMatrix<f64>) -> Result<Self> {
        if theta.shape() != (layout.state_dim(), layout.len()) {
            return Err(Error::Argument(format!(
                "operator matrix must be {}x{}, got {}x{}",
                layout.state_dim(),
                layout.len(),
                theta.nrows(),
                theta.ncols()
            )));
        }
        let ops = Operators { layout, theta };
        ops.check_finite()?;
        Ok(ops)
    }

    fn check_finite(&self) -> Result<()> {
        if self.theta.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Data("operators contain non-finite entries".into()))
        }
    }

    pub fn layout(&self) -> &Arc<FeatureLayout> {
        &self.layout
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn state_dim(&self) -> usize {
        self.layout.state_dim()
    }

    pub fn control_dim(&self) -> usize {
        self.layout.control_dim()
    }

    pub fn degree(&self) -> usize {
        self.layout.degree()
    }

    /// `A_ℓ`, 1-based.
    pub fn block(&self, l: usize) -> DMatrixView<'_, f64> {
        let r = self.layout.block_range(l);
        self.theta.columns(r.start, r.len())
    }

    pub fn input(&self) -> DMatrixView<'_, f64> {
        let r = self.layout.control_range();
        self.theta.columns(r.start, r.len())
    }

    pub fn same_shape(&self, other: &Operators) -> bool {
        self.layout == other.layout
    }
}

/// A polynomial model with its time step and discretization.
///
/// For the IMEX scheme the LU factors of `I − dt·A_1` are computed once at
/// construction; models are immutable, so the factors never go stale.
#[derive(Debug, Clone)]
pub struct PolyModel {
    ops: Operators,
    dt: f64,
    scheme: Scheme,
    implicit: Option<Lu>,
}

impl PartialEq for PolyModel {
    fn eq(&self, other: &Self) -> bool {
        self.ops == other.ops && self.dt == other.dt && self.scheme == other.scheme
    }
}

impl PolyModel {
    pub fn new(ops: Operators, dt: f64, scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Argument(format!("time step must be positive, got {dt}")));
        }
        ops.check_finite()?;
        let implicit = match scheme {
            Scheme::ForwardEuler => None,
            Scheme::ImexLinearImplicit => {
                let n = ops.state_dim();
                let m = DMatrix::identity(n, n) - ops.block(1) * dt;
                let lu = Lu::factor(&m).ok_or_else(|| Error::Integrator("I - dt*A_1 is singular".into()))?;
                let cond = lu.condition_estimate();
                if !(cond < MAX_IMPLICIT_CONDITION) {
                    return Err(Error::Integrator(format!(
                        "I - dt*A_1 is ill-conditioned (condition estimate {cond:.3e})"
                    )));
                }
                Some(lu)
            }
        };
        Ok(PolyModel {
            ops,
            dt,
            scheme,
            implicit,
        })
    }

    pub fn operators(&self) -> &Operators {
        &self.ops
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn state_dim(&self) -> usize {
        self.ops.state_dim()
    }

    pub fn control_dim(&self) -> usize {
        self.ops.control_dim()
    }

    pub fn degree(&self) -> usize {
        self.ops.degree()
    }

    pub(crate) fn implicit_lu(&self) -> Option<&Lu> {
        self.implicit.as_ref()
    }

    fn check_dims(&self, q: &DVector<f64>, u: &DVector<f64>) -> Result<()> {
        if q.len() != self.state_dim() || u.len() != self.control_dim() {
            return Err(Error::Argument(format!(
                "model expects state/control dims {}/{}, got {}/{}",
                self.state_dim(),
                self.control_dim(),
                q.len(),
                u.len()
            )));
        }
        Ok(())
    }

    /// `f(q, u) = Σ_ℓ A_ℓ q^ℓ + B u`.
    pub fn rhs(&self, q: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dims(q, u)?;
        let mut ws = StepWorkspace::new(self);
        let mut out = DVector::zeros(self.state_dim());
        self.rhs_into(q.as_slice(), u.as_slice(), out.as_mut_slice(), &mut ws);
        Ok(out)
    }

    /// One application of the discrete flow map.
    pub fn step(&self, q: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dims(q, u)?;
        let mut ws = StepWorkspace::new(self);
        let mut out = DVector::zeros(self.state_dim());
        self.step_into(q.as_slice(), u.as_slice(), out.as_mut_slice(), &mut ws);
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::Divergence { step: 1 })
        }
    }

    /// `out = Θ f` with the columns in `first_col..` only.
    fn apply_theta(&self, first_col: usize, features: &[f64], out: &mut [f64]) {
        let n = self.state_dim();
        let theta = self.ops.theta.as_slice();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &f) in features.iter().enumerate().skip(first_col) {
            if f != 0.0 {
                let col = &theta[j * n..(j + 1) * n];
                for (o, a) in out.iter_mut().zip(col) {
                    *o += a * f;
                }
            }
        }
    }

    pub(crate) fn rhs_into(&self, q: &[f64], u: &[f64], out: &mut [f64], ws: &mut StepWorkspace) {
        self.ops.layout.eval_into(q, u, &mut ws.features);
        self.apply_theta(0, &ws.features, out);
    }

    /// Writes `Φ(q, u)` into `out`. Leaves the stacked features of `q` in `ws`.
    pub(crate) fn step_into(&self, q: &[f64], u: &[f64], out: &mut [f64], ws: &mut StepWorkspace) {
        let n = self.state_dim();
        self.ops.layout.eval_into(q, u, &mut ws.features);
        match &self.implicit {
            None => {
                self.apply_theta(0, &ws.features, &mut ws.tmp);
                for i in 0..n {
                    out[i] = q[i] + self.dt * ws.tmp[i];
                }
            }
            Some(lu) => {
                self.apply_theta(n, &ws.features, &mut ws.tmp);
                for i in 0..n {
                    out[i] = q[i] + self.dt * ws.tmp[i];
                }
                lu.solve_in_place(out, &mut ws.scratch);
            }
        }
    }
}

/// Scratch buffers for allocation-free stepping.
#[derive(Debug, Clone)]
pub(crate) struct StepWorkspace {
    pub features: Vec<f64>,
    pub tmp: Vec<f64>,
    pub scratch: Vec<f64>,
}

impl StepWorkspace {
    pub fn new(model: &PolyModel) -> Self {
        StepWorkspace {
            features: vec![0.0; model.ops.layout.len()],
            tmp: vec![0.0; model.state_dim()],
            scratch: vec![0.0; model.state_dim()],
        }
    }
}

/// Result of integrating a model; `states` stops before the first divergent state.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub states: DMatrix<f64>,
    pub grid: TimeGrid,
    /// Step index `k` at which `q_k` was non-finite or exceeded the divergence bound.
    pub diverged_at: Option<usize>,
}

impl Simulation {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    /// The full trajectory; fails if the run diverged.
    pub fn into_trajectory(self, controls: Option<DMatrix<f64>>) -> Result<Trajectory> {
        if let Some(step) = self.diverged_at {
            return Err(Error::Divergence { step });
        }
        Trajectory::new(self.states, controls, self.grid)
    }
}

pub(crate) fn divergence_bound(q0: &[f64]) -> f64 {
    DIVERGENCE_FACTOR * (1.0 + q0.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

#[inline]
pub(crate) fn exceeds(q: &[f64], bound: f64) -> bool {
    q.iter().any(|v| !(v.abs() <= bound))
}

/// Steps the model `num_steps` times from `q0` with controls `u_0..u_{K−1}`.
pub fn simulate(
    model: &PolyModel,
    q0: &DVector<f64>,
    controls: Option<&DMatrix<f64>>,
    num_steps: usize,
) -> Result<Simulation> {
    let n = model.state_dim();
    let p = model.control_dim();
    if q0.len() != n {
        return Err(Error::Argument(format!("initial state has length {}, model needs {n}", q0.len())));
    }
    let empty = DMatrix::zeros(0, num_steps);
    let controls = controls.unwrap_or(&empty);
    if controls.nrows() != p || controls.ncols() < num_steps {
        return Err(Error::Argument(format!(
            "controls must be {p}x{num_steps} (at least), got {}x{}",
            controls.nrows(),
            controls.ncols()
        )));
    }
    let grid = TimeGrid::new(0.0, model.dt(), num_steps)?;
    let mut states = DMatrix::zeros(n, num_steps + 1);
    states.column_mut(0).copy_from(q0);
    let bound = divergence_bound(q0.as_slice());
    let mut ws = StepWorkspace::new(model);
    let mut next = vec![0.0; n];
    let mut u = vec![0.0; p];
    for k in 1..=num_steps {
        for (i, slot) in u.iter_mut().enumerate() {
            *slot = controls[(i, k - 1)];
        }
        let prev = states.column(k - 1);
        model.step_into(prev.as_slice(), &u, &mut next, &mut ws);
        if exceeds(&next, bound) {
            let states = states.columns(0, k).into_owned();
            return Ok(Simulation {
                states,
                grid,
                diverged_at: Some(k),
            });
        }
        states.column_mut(k).copy_from_slice(&next);
    }
    Ok(Simulation {
        states,
        grid,
        diverged_at: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a1: f64, a2: Option<f64>, dt: f64, scheme: Scheme) -> PolyModel {
        let mut blocks = vec![DMatrix::from_element(1, 1, a1)];
        if let Some(a2) = a2 {
            blocks.push(DMatrix::from_element(1, 1, a2));
        }
        PolyModel::new(Operators::from_blocks(&blocks, &DMatrix::zeros(1, 0)).unwrap(), dt, scheme).unwrap()
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn rhs_examples() {
        let zero = PolyModel::new(Operators::zeros(2, 2, 1).unwrap(), 0.1, Scheme::ForwardEuler).unwrap();
        assert_eq!(zero.rhs(&v(&[1.0, 2.0]), &v(&[3.0])).unwrap(), DVector::zeros(2));

        let ident = PolyModel::new(
            Operators::from_blocks(&[DMatrix::identity(2, 2)], &DMatrix::zeros(2, 0)).unwrap(),
            0.1,
            Scheme::ForwardEuler,
        )
        .unwrap();
        assert_eq!(ident.rhs(&v(&[3.0, -1.0]), &v(&[])).unwrap(), v(&[3.0, -1.0]));

        let m = scalar(-1.0, Some(0.5), 0.1, Scheme::ForwardEuler);
        assert_eq!(m.rhs(&v(&[2.0]), &v(&[])).unwrap()[0], 0.0);
    }

    #[test]
    fn rhs_with_control_and_dimension_errors() {
        let ops = Operators::from_blocks(&[DMatrix::zeros(2, 2)], &DMatrix::from_row_slice(2, 1, &[1.0, -2.0])).unwrap();
        let m = PolyModel::new(ops, 0.1, Scheme::ForwardEuler).unwrap();
        assert_eq!(m.rhs(&v(&[0.0, 0.0]), &v(&[2.0])).unwrap(), v(&[2.0, -4.0]));
        assert!(matches!(m.rhs(&v(&[0.0]), &v(&[2.0])), Err(Error::Argument(_))));
        assert!(matches!(m.step(&v(&[0.0, 0.0]), &v(&[])), Err(Error::Argument(_))));
    }

    #[test]
    fn imex_scalar_hand_value() {
        let m = scalar(-1.0, Some(0.5), 0.1, Scheme::ImexLinearImplicit);
        let q = m.step(&v(&[1.0]), &v(&[])).unwrap()[0];
        assert!((q - 1.05 / 1.1).abs() < 1e-15);
        assert!((q - 0.954_545_454_545_454_5).abs() < 1e-15);
    }

    #[test]
    fn imex_linear_is_backward_euler() {
        let a1 = DMatrix::from_row_slice(3, 3, &[-1.0, 0.3, 0.0, 0.2, -2.0, 0.5, 0.0, -0.4, -0.7]);
        let dt = 0.05;
        let ops = Operators::from_blocks(&[a1.clone(), DMatrix::zeros(3, 6)], &DMatrix::zeros(3, 0)).unwrap();
        let m = PolyModel::new(ops, dt, Scheme::ImexLinearImplicit).unwrap();
        let q = v(&[1.0, -2.0, 0.5]);
        let expected = (DMatrix::identity(3, 3) - a1 * dt).try_inverse().unwrap() * &q;
        let got = m.step(&q, &v(&[])).unwrap();
        assert!((&got - &expected).norm() <= 1e-12 * expected.norm());
    }

    #[test]
    fn forward_euler_matches_rhs_bitwise() {
        let ops = Operators::from_blocks(
            &[DMatrix::from_row_slice(2, 2, &[0.1, -0.7, 0.3, 0.2]), DMatrix::from_row_slice(2, 3, &[0.5, 0.1, -0.2, 0.3, 0.0, 0.9])],
            &DMatrix::zeros(2, 0),
        )
        .unwrap();
        let m = PolyModel::new(ops, 0.013, Scheme::ForwardEuler).unwrap();
        let q = v(&[0.37, -1.1]);
        let f = m.rhs(&q, &v(&[])).unwrap();
        let s = m.step(&q, &v(&[])).unwrap();
        for i in 0..2 {
            assert_eq!(s[i].to_bits(), (q[i] + 0.013 * f[i]).to_bits());
        }
    }

    #[test]
    fn consistency_small_dt() {
        for scheme in [Scheme::ForwardEuler, Scheme::ImexLinearImplicit] {
            let m = scalar(-3.0, Some(2.0), 1e-8, scheme);
            let q = v(&[1.5]);
            assert!((m.step(&q, &v(&[])).unwrap() - &q).norm() <= 1e-6);
        }
    }

    #[test]
    fn singular_implicit_matrix() {
        let r = PolyModel::new(
            Operators::from_blocks(&[DMatrix::from_element(1, 1, 10.0)], &DMatrix::zeros(1, 0)).unwrap(),
            0.1,
            Scheme::ImexLinearImplicit,
        );
        assert!(matches!(r, Err(Error::Integrator(_))));
    }

    #[test]
    fn simulate_examples() {
        let zero = PolyModel::new(Operators::zeros(2, 2, 0).unwrap(), 0.1, Scheme::ImexLinearImplicit).unwrap();
        let s = simulate(&zero, &v(&[1.0, 2.0]), None, 4).unwrap();
        for k in 0..=4 {
            assert_eq!(s.states.column(k), v(&[1.0, 2.0]));
        }

        let m = scalar(-1.0, None, 0.1, Scheme::ForwardEuler);
        let s = simulate(&m, &v(&[1.0]), None, 3).unwrap();
        let got: Vec<f64> = s.states.iter().copied().collect();
        for (g, e) in got.iter().zip([1.0, 0.9, 0.81, 0.729]) {
            assert!((g - e).abs() < 1e-15);
        }
        assert_eq!(simulate(&m, &v(&[1.0]), None, 3).unwrap(), s);
    }

    #[test]
    fn simulate_flags_divergence() {
        let m = scalar(0.0, Some(1.0), 0.5, Scheme::ForwardEuler);
        let s = simulate(&m, &v(&[1.0]), None, 50).unwrap();
        let k = s.diverged_at.expect("q' = q^2 blows up");
        assert_eq!(s.states.ncols(), k);
        assert!(s.states.iter().all(|x| x.is_finite()));
        assert!(s.into_trajectory(None).is_err());
    }

    /// Classical RK4 on the continuous model at a much finer step.
    fn rk4_reference(model: &PolyModel, q0: &DVector<f64>, t_end: f64, steps: usize) -> DVector<f64> {
        let h = t_end / steps as f64;
        let f = |q: &DVector<f64>| model.rhs(q, &DVector::zeros(0)).unwrap();
        let mut q = q0.clone();
        for _ in 0..steps {
            let k1 = f(&q);
            let k2 = f(&(&q + &k1 * (h / 2.0)));
            let k3 = f(&(&q + &k2 * (h / 2.0)));
            let k4 = f(&(&q + &k3 * h));
            q += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        q
    }

    #[test]
    fn simulate_converges_to_rk4_reference_at_first_order() {
        let truth = crate::benchgen::random_quadratic_system(3, 5, 0.2).unwrap();
        let q0 = v(&[0.3, -0.2, 0.1]);
        let t_end = 1.0;
        for scheme in [Scheme::ForwardEuler, Scheme::ImexLinearImplicit] {
            let mut errs = Vec::new();
            for dt in [0.02, 0.01] {
                let m = PolyModel::new(truth.clone(), dt, scheme).unwrap();
                let steps = (t_end / dt).round() as usize;
                let sim = simulate(&m, &q0, None, steps).unwrap();
                let reference = rk4_reference(&m, &q0, t_end, steps * 100);
                let err = (sim.states.column(steps) - reference).norm();
                assert!(err < 2.0 * dt * q0.norm(), "{scheme:?} dt={dt} err={err}");
                errs.push(err);
            }
            let order = (errs[0] / errs[1]).log2();
            assert!((0.8..1.3).contains(&order), "{scheme:?} order {order}");
        }
    }
}
