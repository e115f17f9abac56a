//! The coarse shallow-water benchmark: data generation, static and roll-out
//! training, and evaluation on held-out inputs.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{pod_basis, project_dataset, ReducedBasis};
use crate::benchgen::{generate_swe_dataset, SweConfig, INPUT_BOX};
use crate::datamodel::{add_noise, TrajectoryDataset};
use crate::error::{Error, Result};
use crate::metrics::{errors_at_inputs, interpolate_theta, mean_error, projection_error, EntryError};
use crate::polymodel::{Operators, Scheme};
use crate::rollout::{train, RollConfig, TrainConfig, TrainReport};
use crate::stability::averaged_bound_operators;
use crate::staticopinf::fit_per_entry;

/// Inputs of the snapshot runs that define the basis.
pub const BASIS_MU1: [f64; 3] = [0.2, 0.35, 0.5];
pub const BASIS_MU2: [f64; 4] = [1.1, 1.3, 1.5, 1.7];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub grid_points_per_dim: usize,
    pub dt: f64,
    pub num_steps: usize,
    pub basis_dim: usize,
    /// Every `basis_stride`-th state of the basis runs enters the snapshot matrix.
    pub basis_stride: usize,
    /// Training inputs form a `train_grid[0] × train_grid[1]` grid.
    pub train_grid: [usize; 2],
    pub num_valid: usize,
    pub num_test: usize,
    pub noise: f64,
    pub roll: RollConfig,
    pub train: TrainConfig,
    pub scheme: Scheme,
    pub degree: usize,
    /// Realizations for the stability bound; 0 skips it.
    pub stability_realizations: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            grid_points_per_dim: 24,
            dt: 0.005,
            num_steps: 200,
            basis_dim: 10,
            basis_stride: 4,
            train_grid: [2, 2],
            num_valid: 2,
            num_test: 2,
            noise: 0.0,
            roll: RollConfig::new(50).expect("valid roll length"),
            train: TrainConfig {
                init: crate::rollout::Init::StaticOpInf,
                ..TrainConfig::default()
            },
            scheme: Scheme::ImexLinearImplicit,
            degree: 2,
            stability_realizations: 0,
        }
    }
}

impl BenchmarkConfig {
    fn swe(&self, mu: [f64; 2]) -> SweConfig {
        SweConfig {
            grid_points_per_dim: self.grid_points_per_dim,
            ..SweConfig::new(mu[0], mu[1], self.dt, self.dt * self.num_steps as f64)
        }
    }

    /// Runs the configs and checks the time grid came out as requested.
    fn generate(&self, inputs: &[[f64; 2]]) -> Result<TrajectoryDataset> {
        let configs: Vec<SweConfig> = inputs.iter().map(|&mu| self.swe(mu)).collect();
        let data = generate_swe_dataset(&configs)?;
        debug_assert!(data.trajectories().all(|t| t.num_steps() == self.num_steps));
        Ok(data)
    }
}

/// Inputs drawn for one seed. Validation and test inputs lie inside the
/// training grid so operators can be interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct Inputs {
    pub train: Vec<[f64; 2]>,
    pub valid: Vec<[f64; 2]>,
    pub test: Vec<[f64; 2]>,
}

/// Training grid with corners jittered near the edges of the input box.
pub fn draw_inputs(cfg: &BenchmarkConfig, seed: u64) -> Result<Inputs> {
    if cfg.train_grid.iter().any(|&m| m < 2) {
        return Err(Error::Argument("training grid needs at least 2 points per axis".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut axes = Vec::with_capacity(2);
    for (a, &m) in cfg.train_grid.iter().enumerate() {
        let [lo, hi] = INPUT_BOX[a];
        let w = hi - lo;
        let a0 = lo + rng.random_range(0.0..0.15) * w;
        let a1 = hi - rng.random_range(0.0..0.15) * w;
        axes.push((0..m).map(|i| a0 + (a1 - a0) * i as f64 / (m - 1) as f64).collect::<Vec<f64>>());
    }
    let mut train = Vec::new();
    for &y in &axes[1] {
        for &x in &axes[0] {
            train.push([x, y]);
        }
    }
    let inner = |count: usize, rng: &mut ChaCha8Rng| -> Vec<[f64; 2]> {
        (0..count)
            .map(|_| {
                let mut mu = [0.0; 2];
                for (a, ax) in axes.iter().enumerate() {
                    let (lo, hi) = (ax[0], ax[ax.len() - 1]);
                    mu[a] = rng.random_range(lo..hi);
                }
                mu
            })
            .collect()
    };
    let valid = inner(cfg.num_valid, &mut rng);
    let test = inner(cfg.num_test, &mut rng);
    Ok(Inputs { train, valid, test })
}

/// Test-set results for one learned model family.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub test_error: f64,
    pub entries: Vec<EntryError>,
    /// Mean over the test-input models of the averaged stability bound.
    pub mean_gamma: Option<f64>,
}

impl ModelOutcome {
    pub fn any_diverged(&self) -> bool {
        self.entries.iter().any(|e| e.diverged)
    }
}

#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub inputs: Inputs,
    pub rollout: ModelOutcome,
    pub static_fit: ModelOutcome,
    pub projection_error: f64,
    pub report: TrainReport,
    pub seconds: f64,
}

impl SeedOutcome {
    /// Equality of everything except timings.
    pub fn same_outcome(&self, other: &SeedOutcome) -> bool {
        self.seed == other.seed
            && self.inputs == other.inputs
            && self.rollout == other.rollout
            && self.static_fit == other.static_fit
            && self.projection_error == other.projection_error
            && self.report.same_outcome(&other.report)
    }
}

/// Benchmark with its basis computed once for all seeds.
#[derive(Debug, Clone)]
pub struct Benchmark {
    cfg: BenchmarkConfig,
    basis: ReducedBasis,
}

impl Benchmark {
    pub fn new(cfg: BenchmarkConfig) -> Result<Self> {
        cfg.train.validate()?;
        if cfg.basis_stride == 0 {
            return Err(Error::Argument("basis stride must be positive".into()));
        }
        let mut mus = Vec::new();
        for &m2 in &BASIS_MU2 {
            for &m1 in &BASIS_MU1 {
                mus.push([m1, m2]);
            }
        }
        let runs = cfg.generate(&mus)?;
        let cols: Vec<usize> = (0..=cfg.num_steps).step_by(cfg.basis_stride).collect();
        let mut snaps = Vec::new();
        for t in runs.trajectories() {
            snaps.extend(cols.iter().map(|&k| t.states().column(k).into_owned()));
        }
        let basis = pod_basis(&nalgebra::DMatrix::from_columns(&snaps), cfg.basis_dim)?;
        Ok(Benchmark { cfg, basis })
    }

    pub fn config(&self) -> &BenchmarkConfig {
        &self.cfg
    }

    pub fn basis(&self) -> &ReducedBasis {
        &self.basis
    }

    /// Full pipeline for one seed: inputs, truth runs, noisy reduced training
    /// data, static fit, roll-out training and test evaluation.
    pub fn run(&self, seed: u64) -> Result<SeedOutcome> {
        let clock = Instant::now();
        let cfg = &self.cfg;
        let inputs = draw_inputs(cfg, seed)?;
        let train_full = cfg.generate(&inputs.train)?;
        let valid = cfg.generate(&inputs.valid)?;
        let test = cfg.generate(&inputs.test)?;

        let reduced = project_dataset(&self.basis, &train_full)?;
        let noisy = add_noise(&reduced, cfg.noise, seed)?;
        let period = cfg.roll.sparse_period();

        let static_ops = fit_per_entry(&noisy, cfg.degree, period)?;
        let report = train(&noisy, &valid, &self.basis, &cfg.roll, &TrainConfig { seed, ..cfg.train.clone() }, cfg.scheme, cfg.degree, 0)?;
        let rollout_ops: Vec<Operators> = report.models().iter().map(|m| m.operators().clone()).collect();

        let params = noisy.params();
        let rollout = self.evaluate(&test, &params, &rollout_ops, seed)?;
        let static_fit = self.evaluate(&test, &params, &static_ops, seed)?;
        let projection = projection_error(&test, &self.basis)?;
        let seconds = clock.elapsed().as_secs_f64();
        log::info!(
            "seed {seed}: rollout {:.4e} static {:.4e} projection {:.4e} ({seconds:.1} s)",
            rollout.test_error,
            static_fit.test_error,
            projection
        );
        Ok(SeedOutcome {
            seed,
            inputs,
            rollout,
            static_fit,
            projection_error: projection,
            report,
            seconds,
        })
    }

    fn evaluate(&self, test: &TrajectoryDataset, params: &[Vec<f64>], ops: &[Operators], seed: u64) -> Result<ModelOutcome> {
        let cfg = &self.cfg;
        let entries = errors_at_inputs(test, params, ops, cfg.dt, cfg.scheme, &self.basis)?;
        let mean_gamma = if cfg.stability_realizations > 0 {
            let mut sum = 0.0;
            for mu in test.params() {
                let theta = interpolate_theta(params, ops, &mu)?;
                sum += match averaged_bound_operators(&theta, cfg.stability_realizations, seed) {
                    Ok(r) => r.mean_gamma,
                    // Singular Lyapunov operator: no certificate at all.
                    Err(Error::NoCertificate(_)) => 0.0,
                    Err(e) => return Err(e),
                };
            }
            Some(sum / test.len() as f64)
        } else {
            None
        };
        Ok(ModelOutcome {
            test_error: mean_error(&entries),
            entries,
            mean_gamma,
        })
    }
}
