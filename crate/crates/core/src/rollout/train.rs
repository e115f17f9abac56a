use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;

use super::{log_spaced_rates, rollout_gradient, rollout_objective, Adam, RollConfig};
use crate::basis::ReducedBasis;
use crate::datamodel::{save_csv, KeyValues, TrajectoryDataset};
use crate::error::{Error, Result};
use crate::metrics::{errors_at_inputs, mean_error};
use crate::polymodel::{OperatorSet, Operators, PolyModel, Scheme};
use crate::staticopinf::fit_per_entry;

/// Starting point of the optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Zeros,
    /// The minimal-norm static operator-inference fit on the same data.
    StaticOpInf,
}

impl std::str::FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeros" => Ok(Init::Zeros),
            "static" => Ok(Init::StaticOpInf),
            other => Err(Error::Argument(format!("unknown init `{other}` (expected zeros or static)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Candidate Adam step sizes, ascending.
    pub learning_rates: Vec<f64>,
    pub max_iters: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub init: Init,
    /// Rescales the gradient to at most this Euclidean norm.
    pub grad_clip: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rates: log_spaced_rates(1e-5, 1e-1, 5),
            max_iters: 2000,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            init: Init::Zeros,
            grad_clip: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rates.is_empty()
            || self.learning_rates.iter().any(|r| !(*r > 0.0 && r.is_finite()))
            || self.learning_rates.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::Argument("learning rates must be positive, finite and ascending".into()));
        }
        for (name, b) in [("beta1", self.adam_beta1), ("beta2", self.adam_beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::Argument(format!("Adam {name} must lie in (0, 1), got {b}")));
            }
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::Argument("Adam eps must be positive".into()));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::Argument("gradient clip must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Outcome of training with one learning rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub learning_rate: f64,
    /// Objective per iteration for each training entry; the last value is at the final iterate.
    pub loss_histories: Vec<Vec<f64>>,
    /// Entries whose roll-outs diverged during training (training stopped there).
    pub diverged: Vec<bool>,
    pub validation_error: f64,
    pub models: Vec<PolyModel>,
}

impl Candidate {
    pub fn any_diverged(&self) -> bool {
        self.diverged.iter().any(|&d| d)
    }

    pub fn final_objective(&self) -> f64 {
        self.loss_histories.iter().map(|h| *h.last().unwrap_or(&f64::INFINITY)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub candidates: Vec<Candidate>,
    pub selected: usize,
    /// Training inputs, one per model of the selected candidate.
    pub params: Vec<Vec<f64>>,
    pub seed: u64,
    pub wall_clock_seconds: f64,
}

impl TrainReport {
    pub fn selected(&self) -> &Candidate {
        &self.candidates[self.selected]
    }

    pub fn selected_learning_rate(&self) -> f64 {
        self.selected().learning_rate
    }

    pub fn models(&self) -> &[PolyModel] {
        &self.selected().models
    }

    pub fn validation_error(&self) -> f64 {
        self.selected().validation_error
    }

    /// Everything except the wall-clock time.
    pub fn same_outcome(&self, other: &TrainReport) -> bool {
        self.candidates == other.candidates && self.selected == other.selected && self.params == other.params && self.seed == other.seed
    }

    /// Writes `summary.txt`, `losses.csv` (iteration, then one column per
    /// learning rate holding the objective summed over entries) and the
    /// selected models as an [`OperatorSet`].
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut kv = KeyValues::new();
        kv.set("selected_learning_rate", format!("{:?}", self.selected_learning_rate()));
        kv.set("validation_error", format!("{:?}", self.validation_error()));
        kv.set("final_objective", format!("{:?}", self.selected().final_objective()));
        kv.set("seed", self.seed.to_string());
        kv.set("wall_clock_seconds", format!("{:.3}", self.wall_clock_seconds));
        kv.set("models", self.params.len().to_string());
        for (i, c) in self.candidates.iter().enumerate() {
            kv.set(format!("candidate.{i}.learning_rate"), format!("{:?}", c.learning_rate));
            kv.set(format!("candidate.{i}.validation_error"), format!("{:?}", c.validation_error));
            kv.set(format!("candidate.{i}.diverged"), c.any_diverged().to_string());
        }
        crate::datamodel::io_write_atomic(&dir.join("summary.txt"), kv.render().as_bytes())?;

        let iters = self
            .candidates
            .iter()
            .flat_map(|c| c.loss_histories.iter().map(|h| h.len()))
            .max()
            .unwrap_or(0);
        let mut losses = DMatrix::from_element(iters, self.candidates.len() + 1, f64::NAN);
        for it in 0..iters {
            losses[(it, 0)] = it as f64;
            for (c, cand) in self.candidates.iter().enumerate() {
                if cand.loss_histories.iter().all(|h| h.len() > it) {
                    losses[(it, c + 1)] = cand.loss_histories.iter().map(|h| h[it]).sum();
                }
            }
        }
        // Iterations past a divergence have no value; mark them with -1.
        losses.iter_mut().filter(|v| v.is_nan()).for_each(|v| *v = -1.0);
        save_csv(&dir.join("losses.csv"), &losses)?;
        let models = self.models();
        OperatorSet {
            params: self.params.clone(),
            operators: models.iter().map(|m| m.operators().clone()).collect(),
            dt: models[0].dt(),
            scheme: models[0].scheme(),
        }
        .save(dir)
    }
}

/// Roll-out training with learning-rate selection.
///
/// Each training entry gets its own model (trained independently, one Adam
/// run per entry and learning rate). Models for the validation inputs come
/// from interpolating the per-entry operators; the learning rate with the
/// lowest time-averaged relative validation error wins. Candidates whose
/// roll-outs diverge during training are discarded. A static initial fit
/// whose own roll-outs diverge is replaced by zeros.
#[allow(clippy::too_many_arguments)]
pub fn train(
    train_data: &TrajectoryDataset,
    valid_data: &TrajectoryDataset,
    basis: &ReducedBasis,
    roll: &RollConfig,
    cfg: &TrainConfig,
    scheme: Scheme,
    degree: usize,
    control_dim: usize,
) -> Result<TrainReport> {
    cfg.validate()?;
    check_inputs(train_data, valid_data, basis, control_dim)?;
    let dt = train_data.dt().unwrap();
    let n = basis.reduced_dim();
    let inits: Vec<Operators> = match cfg.init {
        Init::Zeros => vec![Operators::zeros(n, degree, control_dim)?; train_data.len()],
        Init::StaticOpInf => {
            let fits = fit_per_entry(train_data, degree, roll.sparse_period())?;
            let mut inits = Vec::with_capacity(fits.len());
            for (i, ops) in fits.into_iter().enumerate() {
                inits.push(if static_init_usable(&ops, &train_data.subset(&[i]), dt, scheme, roll)? {
                    ops
                } else {
                    log::warn!("static fit for entry {i} diverges on the training windows; starting from zeros");
                    Operators::zeros(n, degree, control_dim)?
                });
            }
            inits
        }
    };
    train_with_inits(train_data, valid_data, basis, roll, cfg, scheme, &inits)
}

fn check_inputs(train_data: &TrajectoryDataset, valid_data: &TrajectoryDataset, basis: &ReducedBasis, control_dim: usize) -> Result<()> {
    if train_data.is_empty() || valid_data.is_empty() {
        return Err(Error::DegenerateData("training and validation data must be nonempty".into()));
    }
    if train_data.state_dim() != basis.reduced_dim() {
        return Err(Error::Argument(format!(
            "training data must be reduced (dim {}), got dim {}",
            basis.reduced_dim(),
            train_data.state_dim()
        )));
    }
    if valid_data.state_dim() != basis.full_dim() {
        return Err(Error::Argument(format!(
            "validation data must carry full states (dim {}), got dim {}",
            basis.full_dim(),
            valid_data.state_dim()
        )));
    }
    if train_data.control_dim() != control_dim || valid_data.control_dim() != control_dim {
        return Err(Error::Argument(format!("datasets must have {control_dim} controls")));
    }
    Ok(())
}

/// [`train`] from given starting operators, one per training entry
/// (`cfg.init` is ignored).
pub fn train_with_inits(
    train_data: &TrajectoryDataset,
    valid_data: &TrajectoryDataset,
    basis: &ReducedBasis,
    roll: &RollConfig,
    cfg: &TrainConfig,
    scheme: Scheme,
    inits: &[Operators],
) -> Result<TrainReport> {
    cfg.validate()?;
    let clock = Instant::now();
    let control_dim = inits.first().map_or(0, |o| o.control_dim());
    check_inputs(train_data, valid_data, basis, control_dim)?;
    if inits.len() != train_data.len() || inits.iter().any(|o| o.state_dim() != basis.reduced_dim()) {
        return Err(Error::Argument(format!(
            "need one {}-dimensional initial operator set per training entry ({} given for {})",
            basis.reduced_dim(),
            inits.len(),
            train_data.len()
        )));
    }
    let dt = train_data.dt().unwrap();
    let params = train_data.params();

    let mut candidates = Vec::with_capacity(cfg.learning_rates.len());
    for &lr in &cfg.learning_rates {
        let mut histories = Vec::new();
        let mut diverged = Vec::new();
        let mut models = Vec::new();
        for (i, init) in inits.iter().enumerate() {
            let entry = train_data.subset(&[i]);
            let run = optimize(&entry, init, dt, scheme, roll, cfg, lr)?;
            log::debug!(
                "lr {lr:.1e} entry {i}: J {:.6e} -> {:.6e}{}",
                run.history.first().copied().unwrap_or(f64::NAN),
                run.history.last().copied().unwrap_or(f64::NAN),
                if run.diverged { " (diverged)" } else { "" }
            );
            histories.push(run.history);
            diverged.push(run.diverged);
            models.push(run.model);
        }
        let validation_error = if diverged.iter().any(|&d| d) {
            f64::INFINITY
        } else {
            let ops: Vec<Operators> = models.iter().map(|m| m.operators().clone()).collect();
            mean_error(&errors_at_inputs(valid_data, &params, &ops, dt, scheme, basis)?)
        };
        candidates.push(Candidate {
            learning_rate: lr,
            loss_histories: histories,
            diverged,
            validation_error,
            models,
        });
    }

    let mut selected = None;
    for (i, c) in candidates.iter().enumerate() {
        if c.validation_error.is_finite() && selected.is_none_or(|s: usize| c.validation_error < candidates[s].validation_error) {
            selected = Some(i);
        }
    }
    let selected = selected.ok_or_else(|| {
        let diag: Vec<String> = candidates
            .iter()
            .map(|c| format!("lr {:.1e}: diverged={}, validation error={}", c.learning_rate, c.any_diverged(), c.validation_error))
            .collect();
        Error::TrainingFailed(format!("every learning rate failed [{}]", diag.join("; ")))
    })?;

    Ok(TrainReport {
        candidates,
        selected,
        params,
        seed: cfg.seed,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
    })
}

fn static_init_usable(ops: &Operators, data: &TrajectoryDataset, dt: f64, scheme: Scheme, roll: &RollConfig) -> Result<bool> {
    match PolyModel::new(ops.clone(), dt, scheme) {
        Ok(m) => Ok(rollout_objective(&m, data, roll)?.is_finite()),
        Err(Error::Integrator(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

struct Run {
    model: PolyModel,
    history: Vec<f64>,
    diverged: bool,
}

fn optimize(
    data: &TrajectoryDataset,
    init: &Operators,
    dt: f64,
    scheme: Scheme,
    roll: &RollConfig,
    cfg: &TrainConfig,
    lr: f64,
) -> Result<Run> {
    let layout = init.layout().clone();
    let mut theta = init.theta().clone();
    let mut adam = Adam::new(theta.len(), lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    let mut history = Vec::with_capacity(cfg.max_iters + 1);
    let mut model = PolyModel::new(init.clone(), dt, scheme)?;

    for _ in 0..cfg.max_iters {
        let og = match rollout_gradient(&model, data, roll) {
            Ok(og) => og,
            Err(Error::GradientUnavailable { .. }) => {
                history.push(f64::INFINITY);
                return Ok(Run { model, history, diverged: true });
            }
            Err(e) => return Err(e),
        };
        history.push(og.objective);
        let mut grad = og.gradient.theta().clone();
        if let Some(c) = cfg.grad_clip {
            let norm = grad.norm();
            if norm > c {
                grad *= c / norm;
            }
        }
        adam.step(theta.as_mut_slice(), grad.as_slice());
        let next = Operators::from_theta(layout.clone(), theta.clone()).and_then(|ops| PolyModel::new(ops, dt, scheme));
        match next {
            Ok(m) => model = m,
            // Non-finite operators or a singular implicit matrix.
            Err(Error::Data(_)) | Err(Error::Integrator(_)) => {
                history.push(f64::INFINITY);
                return Ok(Run { model, history, diverged: true });
            }
            Err(e) => return Err(e),
        }
    }
    let last = rollout_objective(&model, data, roll)?;
    history.push(last);
    Ok(Run {
        diverged: !last.is_finite(),
        model,
        history,
    })
}
