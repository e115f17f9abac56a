use std::path::Path;
use std::str::FromStr;

use rollinf_core::datamodel::KeyValues;
use rollinf_core::experiment::BenchmarkConfig;
use rollinf_core::rollout::{Init, RollConfig, TrainConfig};
use rollinf_core::{Error, Result, Scheme};

use crate::args::{BenchArgs, ModelArgs, RollArgs, TrainArgs};

/// Config-file values; flags take precedence over them.
#[derive(Debug, Default)]
pub struct Settings {
    kv: KeyValues,
}

fn list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, ()> {
    s.split(',').map(|v| v.trim().parse().map_err(|_| ())).collect()
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        Ok(Settings {
            kv: match path {
                Some(p) => KeyValues::read(p)?,
                None => KeyValues::new(),
            },
        })
    }

    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.kv
            .parsed(key)
            .map_err(|e| Error::Argument(format!("config `{key}`: {e}")))
    }

    fn pick_list<T: FromStr>(&self, flag: Option<Vec<T>>, key: &str) -> Result<Option<Vec<T>>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.kv
            .get(key)
            .map(|v| list(v).map_err(|_| Error::Argument(format!("config `{key}`: cannot parse list `{v}`"))))
            .transpose()
    }

    pub fn degree(&self, m: &ModelArgs) -> Result<usize> {
        Ok(self.pick(m.degree, "model.degree")?.unwrap_or(2))
    }

    pub fn scheme(&self, flag: Option<&str>) -> Result<Scheme> {
        self.pick(flag.map(str::to_string), "model.scheme")?
            .map_or(Ok(Scheme::ImexLinearImplicit), |s| s.parse())
    }

    pub fn period(&self, flag: Option<usize>) -> Result<usize> {
        Ok(self.pick(flag, "roll.period")?.unwrap_or(1))
    }

    pub fn dt(&self, flag: Option<f64>) -> Result<f64> {
        Ok(self.pick(flag, "benchmark.dt")?.unwrap_or(BenchmarkConfig::default().dt))
    }

    pub fn steps(&self, flag: Option<usize>) -> Result<usize> {
        Ok(self.pick(flag, "benchmark.steps")?.unwrap_or(BenchmarkConfig::default().num_steps))
    }

    pub fn grid(&self, flag: Option<usize>) -> Result<usize> {
        Ok(self.pick(flag, "benchmark.grid")?.unwrap_or(BenchmarkConfig::default().grid_points_per_dim))
    }

    pub fn roll(&self, r: &RollArgs) -> Result<RollConfig> {
        let length = self.pick(r.roll_length, "roll.length")?.unwrap_or(50);
        let mut roll = RollConfig::new(length)?.with_sparse_period(self.period(r.period)?)?;
        if let Some(inc) = self.pick_list(r.increments.clone(), "roll.increments")? {
            roll = roll.with_increments(inc)?;
        }
        Ok(roll)
    }

    pub fn train(&self, t: &TrainArgs, default_init: Init) -> Result<TrainConfig> {
        let defaults = TrainConfig::default();
        let cfg = TrainConfig {
            learning_rates: self.pick_list(t.lrs.clone(), "train.learning_rates")?.unwrap_or(defaults.learning_rates),
            max_iters: self.pick(t.iters, "train.max_iters")?.unwrap_or(defaults.max_iters),
            adam_beta1: self.pick(None, "train.beta1")?.unwrap_or(defaults.adam_beta1),
            adam_beta2: self.pick(None, "train.beta2")?.unwrap_or(defaults.adam_beta2),
            adam_eps: self.pick(None, "train.eps")?.unwrap_or(defaults.adam_eps),
            init: self.pick(t.init.clone(), "train.init")?.map_or(Ok(default_init), |s| s.parse())?,
            grad_clip: self.pick(t.grad_clip, "train.grad_clip")?,
            seed: self.pick(t.train_seed, "train.seed")?.unwrap_or(defaults.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn benchmark(&self, b: &BenchArgs, t: &TrainArgs, r: &RollArgs, m: &ModelArgs) -> Result<BenchmarkConfig> {
        let d = BenchmarkConfig::default();
        let train_grid = match self.pick(b.train_grid.clone(), "benchmark.train_grid")? {
            None => d.train_grid,
            Some(s) => parse_grid(&s)?,
        };
        Ok(BenchmarkConfig {
            grid_points_per_dim: self.grid(b.grid)?,
            dt: self.dt(b.dt)?,
            num_steps: self.steps(b.steps)?,
            basis_dim: self.pick(b.basis_dim, "benchmark.basis_dim")?.unwrap_or(d.basis_dim),
            train_grid,
            num_valid: self.pick(b.valid, "benchmark.valid")?.unwrap_or(d.num_valid),
            num_test: self.pick(b.test, "benchmark.test")?.unwrap_or(d.num_test),
            noise: self.pick(b.noise, "benchmark.noise")?.unwrap_or(d.noise),
            roll: self.roll(r)?,
            train: self.train(t, Init::StaticOpInf)?,
            scheme: self.scheme(m.scheme.as_deref())?,
            degree: self.degree(m)?,
            stability_realizations: self.pick(None, "benchmark.realizations")?.unwrap_or(0),
            ..d
        })
    }
}

/// `AxB` with both factors at least 2.
pub fn parse_grid(s: &str) -> Result<[usize; 2]> {
    let bad = || Error::Argument(format!("training grid must look like 2x3, got `{s}`"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a < 2 || b < 2 {
        return Err(bad());
    }
    Ok([a, b])
}
