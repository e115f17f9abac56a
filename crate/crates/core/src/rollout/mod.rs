//! Roll-out operator inference: multi-step misfit objectives, their exact
//! gradients through the discrete adjoint of the unrolled flow map, and the
//! Adam training loop with learning-rate selection on validation data.

mod adam;
mod objective;
mod train;

pub use adam::Adam;
pub use objective::{rollout_gradient, rollout_objective, ObjectiveGradient};
pub use train::{train, train_with_inits, Candidate, Init, TrainConfig, TrainReport};

use crate::error::{Error, Result};

/// Roll-out length, misfit increments and sampling period of the objective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RollConfig {
    roll_length: usize,
    misfit_increments: Vec<usize>,
    sparse_period: usize,
}

impl RollConfig {
    /// Penalizes every increment `1..=R` on dense data.
    pub fn new(roll_length: usize) -> Result<Self> {
        if roll_length == 0 {
            return Err(Error::Argument("roll-out length must be at least 1".into()));
        }
        Ok(RollConfig {
            roll_length,
            misfit_increments: (1..=roll_length).collect(),
            sparse_period: 1,
        })
    }

    /// Restricts the misfit to the given increments (sorted and deduplicated).
    pub fn with_increments(mut self, mut increments: Vec<usize>) -> Result<Self> {
        increments.sort_unstable();
        increments.dedup();
        match (increments.first(), increments.last()) {
            (Some(&lo), Some(&hi)) if lo >= 1 && hi <= self.roll_length => {}
            _ => {
                return Err(Error::Argument(format!(
                    "misfit increments must be a nonempty subset of 1..={}",
                    self.roll_length
                )))
            }
        }
        self.misfit_increments = increments;
        Ok(self)
    }

    /// Only states at multiples of `period` are observed.
    pub fn with_sparse_period(mut self, period: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::Argument("sampling period must be at least 1".into()));
        }
        self.sparse_period = period;
        Ok(self)
    }

    pub fn roll_length(&self) -> usize {
        self.roll_length
    }

    pub fn misfit_increments(&self) -> &[usize] {
        &self.misfit_increments
    }

    pub fn sparse_period(&self) -> usize {
        self.sparse_period
    }

    /// Base-step offsets at which the misfit is measured: the increments that
    /// land on observed samples, i.e. multiples of the sampling period.
    pub fn offsets(&self) -> Result<Vec<usize>> {
        let out: Vec<usize> = self
            .misfit_increments
            .iter()
            .copied()
            .filter(|r| r % self.sparse_period == 0)
            .collect();
        if out.is_empty() {
            return Err(Error::Argument(format!(
                "no misfit increment is a multiple of the sampling period {} (roll-out length {})",
                self.sparse_period, self.roll_length
            )));
        }
        Ok(out)
    }

    /// Window start indices `0, ξ, 2ξ, … ≤ K − R`.
    pub fn window_starts(&self, num_steps: usize) -> Result<std::iter::StepBy<std::ops::RangeInclusive<usize>>> {
        if self.roll_length > num_steps {
            return Err(Error::Argument(format!(
                "roll-out length {} exceeds the {num_steps} available steps",
                self.roll_length
            )));
        }
        Ok((0..=num_steps - self.roll_length).step_by(self.sparse_period))
    }
}

/// `round(exp(linspace(0, ln R, count)))`, deduplicated; always holds 1 and `R`.
pub fn log_spaced_increments(roll_length: usize, count: usize) -> Vec<usize> {
    let r = roll_length.max(1);
    let count = count.max(1);
    let ln_r = (r as f64).ln();
    let mut out: Vec<usize> = (0..count)
        .map(|i| {
            let frac = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
            ((frac * ln_r).exp().round() as usize).clamp(1, r)
        })
        .collect();
    out.push(1);
    out.push(r);
    out.sort_unstable();
    out.dedup();
    out
}

/// `count` learning rates log-spaced over `[lo, hi]`.
pub fn log_spaced_rates(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect()
}
