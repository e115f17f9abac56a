use nalgebra::{DMatrix, DVector};

use crate::datamodel::{TimeGrid, Trajectory, TrajectoryDataset};
use crate::error::{Error, Result};

/// Input box `[μ1_lo, μ1_hi] × [μ2_lo, μ2_hi]` of the benchmark.
pub const INPUT_BOX: [[f64; 2]; 2] = [[0.2, 0.5], [1.1, 1.7]];

/// One shallow-water run on the periodic square `(−w, w)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweConfig {
    pub grid_points_per_dim: usize,
    pub domain_half_width: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub dt: f64,
    pub final_time: f64,
}

impl SweConfig {
    /// Defaults: 24 points per dimension on `(−4, 4)^2`.
    pub fn new(mu1: f64, mu2: f64, dt: f64, final_time: f64) -> Self {
        SweConfig {
            grid_points_per_dim: 24,
            domain_half_width: 4.0,
            mu1,
            mu2,
            dt,
            final_time,
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.domain_half_width / self.grid_points_per_dim as f64
    }

    pub fn num_steps(&self) -> usize {
        (self.final_time / self.dt).round() as usize
    }

    pub fn state_dim(&self) -> usize {
        2 * self.grid_points_per_dim * self.grid_points_per_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points_per_dim < 8 {
            return Err(Error::Argument(format!("grid needs at least 8 points, got {}", self.grid_points_per_dim)));
        }
        if !(self.domain_half_width > 0.0 && self.domain_half_width.is_finite()) {
            return Err(Error::Argument("domain half width must be positive".into()));
        }
        if !(self.dt > 0.0 && self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::Argument("dt and final time must be positive".into()));
        }
        let k = self.final_time / self.dt;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) || k.round() < 1.0 {
            return Err(Error::Argument(format!(
                "final time {} is not a positive multiple of dt {}",
                self.final_time, self.dt
            )));
        }
        if !(self.mu1.is_finite() && self.mu2.is_finite() && self.mu2 >= 0.0) {
            return Err(Error::Argument(format!("invalid inputs mu1 = {}, mu2 = {}", self.mu1, self.mu2)));
        }
        Ok(())
    }

    /// `[q_h; q_φ]` with `q_h = 1 + μ1 exp(−μ2 |x|²)`, `q_φ = 0`.
    pub fn initial_state(&self) -> DVector<f64> {
        let g = self.grid_points_per_dim;
        let h = self.spacing();
        let mut q = DVector::zeros(2 * g * g);
        for j in 0..g {
            let y = -self.domain_half_width + j as f64 * h;
            for i in 0..g {
                let x = -self.domain_half_width + i as f64 * h;
                q[j * g + i] = 1.0 + self.mu1 * (-self.mu2 * (x * x + y * y)).exp();
            }
        }
        q
    }
}

/// Centered periodic differences of a `g × g` field stored with `x` fastest.
pub fn periodic_gradient(field: &[f64], g: usize, h: f64) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; g * g];
    let mut gy = vec![0.0; g * g];
    let inv = 0.5 / h;
    for j in 0..g {
        let jp = (j + 1) % g;
        let jm = (j + g - 1) % g;
        for i in 0..g {
            let ip = (i + 1) % g;
            let im = (i + g - 1) % g;
            gx[j * g + i] = (field[j * g + ip] - field[j * g + im]) * inv;
            gy[j * g + i] = (field[jp * g + i] - field[jm * g + i]) * inv;
        }
    }
    (gx, gy)
}

fn rhs_into(state: &[f64], g: usize, h: f64, out: &mut [f64]) {
    let m = g * g;
    let (qh, qphi) = state.split_at(m);
    let (px, py) = periodic_gradient(qphi, g, h);
    let fx: Vec<f64> = qh.iter().zip(&px).map(|(a, b)| a * b).collect();
    let fy: Vec<f64> = qh.iter().zip(&py).map(|(a, b)| a * b).collect();
    let (dfx, _) = periodic_gradient(&fx, g, h);
    let (_, dfy) = periodic_gradient(&fy, g, h);
    let (oh, ophi) = out.split_at_mut(m);
    for c in 0..m {
        oh[c] = -(dfx[c] + dfy[c]);
        ophi[c] = -0.5 * (px[c] * px[c] + py[c] * py[c]) - qh[c];
    }
}

/// Semi-discrete right-hand side `[−∇·(q_h ∇q_φ); −½|∇q_φ|² − q_h]`.
pub fn swe_rhs(state: &DVector<f64>, g: usize, h: f64) -> Result<DVector<f64>> {
    if state.len() != 2 * g * g {
        return Err(Error::Argument(format!("state has length {}, grid needs {}", state.len(), 2 * g * g)));
    }
    if !state.iter().all(|v| v.is_finite()) {
        return Err(Error::Divergence { step: 0 });
    }
    let mut out = DVector::zeros(state.len());
    rhs_into(state.as_slice(), g, h, out.as_mut_slice());
    Ok(out)
}

fn integrate(cfg: &SweConfig) -> Result<DMatrix<f64>> {
    let g = cfg.grid_points_per_dim;
    let h = cfg.spacing();
    let dt = cfg.dt;
    let k = cfg.num_steps();
    let big_n = cfg.state_dim();
    let mut states = DMatrix::zeros(big_n, k + 1);
    let mut q = cfg.initial_state().as_slice().to_vec();
    states.column_mut(0).copy_from_slice(&q);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; big_n], vec![0.0; big_n], vec![0.0; big_n], vec![0.0; big_n]);
    let mut tmp = vec![0.0; big_n];
    for step in 1..=k {
        rhs_into(&q, g, h, &mut k1);
        for c in 0..big_n {
            tmp[c] = q[c] + 0.5 * dt * k1[c];
        }
        rhs_into(&tmp, g, h, &mut k2);
        for c in 0..big_n {
            tmp[c] = q[c] + 0.5 * dt * k2[c];
        }
        rhs_into(&tmp, g, h, &mut k3);
        for c in 0..big_n {
            tmp[c] = q[c] + dt * k3[c];
        }
        rhs_into(&tmp, g, h, &mut k4);
        for c in 0..big_n {
            q[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        if !q.iter().all(|v| v.is_finite()) {
            log::error!("shallow-water run mu = ({}, {}) diverged at step {step}", cfg.mu1, cfg.mu2);
            return Err(Error::Divergence { step });
        }
        states.column_mut(step).copy_from_slice(&q);
    }
    Ok(states)
}

/// One RK4 trajectory per config; all configs must share grid, dt and horizon.
pub fn generate_swe_dataset(configs: &[SweConfig]) -> Result<TrajectoryDataset> {
    let first = configs
        .first()
        .ok_or_else(|| Error::Argument("no shallow-water configs given".into()))?;
    for c in configs {
        c.validate()?;
        if c.grid_points_per_dim != first.grid_points_per_dim
            || c.domain_half_width != first.domain_half_width
            || c.dt != first.dt
            || c.num_steps() != first.num_steps()
        {
            return Err(Error::Argument("shallow-water configs must share grid, dt and final time".into()));
        }
    }
    let grid = TimeGrid::new(0.0, first.dt, first.num_steps())?;
    let mut entries = Vec::with_capacity(configs.len());
    for c in configs {
        let states = integrate(c)?;
        entries.push((vec![c.mu1, c.mu2], Trajectory::new(states, None, grid)?));
    }
    TrajectoryDataset::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn collapsed_right_hand_sides() {
        let g = 8;
        let h = 1.0;
        let mut s = DVector::zeros(2 * g * g);
        for c in 0..g * g {
            s[c] = 1.0 + (c as f64).sin();
        }
        let r = swe_rhs(&s, g, h).unwrap();
        for c in 0..g * g {
            assert_eq!(r[c], 0.0);
            assert_eq!(r[g * g + c], -s[c]);
        }
        let s = DVector::from_fn(2 * g * g, |c, _| if c < g * g { 1.3 } else { -0.4 });
        let r = swe_rhs(&s, g, h).unwrap();
        assert!(r.rows(0, g * g).iter().all(|&v| v == 0.0));
        assert!(r.rows(g * g, g * g).iter().all(|&v| v == -1.3));
        assert!(matches!(swe_rhs(&DVector::zeros(3), g, h), Err(Error::Argument(_))));
    }

    fn gradient_error(g: usize) -> f64 {
        let w = 4.0;
        let h = 2.0 * w / g as f64;
        let coord = |i: usize| -w + i as f64 * h;
        let mut f = vec![0.0; g * g];
        for j in 0..g {
            for i in 0..g {
                f[j * g + i] = (PI * coord(i) / w).sin() * (PI * coord(j) / w).cos();
            }
        }
        let (gx, gy) = periodic_gradient(&f, g, h);
        let mut err: f64 = 0.0;
        for j in 0..g {
            for i in 0..g {
                let (x, y) = (coord(i), coord(j));
                let ex = PI / w * (PI * x / w).cos() * (PI * y / w).cos();
                let ey = -PI / w * (PI * x / w).sin() * (PI * y / w).sin();
                err = err.max((gx[j * g + i] - ex).abs()).max((gy[j * g + i] - ey).abs());
            }
        }
        err
    }

    #[test]
    fn second_order_gradient() {
        let order = (gradient_error(16) / gradient_error(32)).log2();
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn uniform_height_solution() {
        let cfg = SweConfig::new(0.0, 1.0, 0.01, 0.1);
        let data = generate_swe_dataset(std::slice::from_ref(&cfg)).unwrap();
        let states = data.entries()[0].1.states();
        let m = cfg.grid_points_per_dim.pow(2);
        for k in 0..=cfg.num_steps() {
            let t = k as f64 * cfg.dt;
            // q_h stays 1 and q_φ = −t exactly for the uniform state.
            for c in 0..m {
                assert!((states[(c, k)] - 1.0).abs() < 1e-14);
                assert!((states[(m + c, k)] + t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mass_is_conserved_and_runs_are_deterministic() {
        let cfg = SweConfig::new(0.4, 1.3, 0.001, 0.1);
        let data = generate_swe_dataset(std::slice::from_ref(&cfg)).unwrap();
        let states = data.entries()[0].1.states();
        let m = cfg.grid_points_per_dim.pow(2);
        let mass = |k: usize| states.column(k).rows(0, m).sum();
        let m0 = mass(0);
        for k in 0..states.ncols() {
            assert!((mass(k) - m0).abs() <= 1e-6 * m0);
        }
        // the wave actually moves
        assert!((states.column(states.ncols() - 1) - states.column(0)).norm() > 1e-2);
        assert_eq!(generate_swe_dataset(std::slice::from_ref(&cfg)).unwrap(), data);
    }

    #[test]
    fn config_validation() {
        assert!(SweConfig::new(0.3, 1.2, 0.001, 0.0105).validate().is_err());
        let mut c = SweConfig::new(0.3, 1.2, 0.001, 0.01);
        c.grid_points_per_dim = 4;
        assert!(c.validate().is_err());
        let a = SweConfig::new(0.3, 1.2, 0.001, 0.01);
        let b = SweConfig::new(0.3, 1.2, 0.002, 0.01);
        assert!(generate_swe_dataset(&[a, b]).is_err());
    }
}
