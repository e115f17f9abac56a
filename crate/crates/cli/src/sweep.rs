use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rollinf_core::datamodel::write_atomic;
use rollinf_core::experiment::{Benchmark, BenchmarkConfig};
use rollinf_core::{Error, Result, RollConfig};

use crate::args::{Axis, SweepArgs};
use crate::config::Settings;

const HEADER: &str = "x,rollout_error,static_error,projection_error\n";

fn as_count(axis: Axis, x: f64) -> Result<usize> {
    if x >= 1.0 && x.fract() == 0.0 && x < 1e9 {
        Ok(x as usize)
    } else {
        Err(Error::Argument(format!("{axis:?} values must be positive integers, got {x}")))
    }
}

/// Most nearly square `a × b = m` with `a, b ≥ 2`.
pub fn factor_grid(m: usize) -> Option<[usize; 2]> {
    (2..=m).take_while(|a| a * a <= m).filter(|a| m % a == 0).last().map(|a| [a, m / a])
}

/// The base configuration with the swept setting replaced.
pub fn point_config(base: &BenchmarkConfig, axis: Axis, x: f64) -> Result<BenchmarkConfig> {
    let mut cfg = base.clone();
    match axis {
        Axis::RollLength => {
            cfg.roll = RollConfig::new(as_count(axis, x)?)?.with_sparse_period(base.roll.sparse_period())?;
        }
        Axis::Noise => {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::Argument(format!("noise percentage must be >= 0, got {x}")));
            }
            cfg.noise = x / 100.0;
        }
        Axis::SamplingPeriod => {
            cfg.roll = base.roll.clone().with_sparse_period(as_count(axis, x)?)?;
        }
        Axis::TrajectoryCount => {
            let m = as_count(axis, x)?;
            cfg.train_grid = factor_grid(m)
                .ok_or_else(|| Error::Argument(format!("{m} training inputs do not form an a x b grid with a, b >= 2")))?;
        }
    }
    Ok(cfg)
}

struct PointResult {
    rollout: f64,
    static_fit: f64,
    projection: f64,
}

fn run_point(cfg: BenchmarkConfig, seeds: std::ops::Range<u64>, x: f64, path: &std::path::Path) -> Result<PointResult> {
    let bench = Benchmark::new(cfg)?;
    let mut csv = String::from("seed,rollout_error,static_error,projection_error\n");
    let (mut r, mut s, mut p) = (0.0, 0.0, 0.0);
    let count = seeds.end - seeds.start;
    for seed in seeds {
        let o = bench.run(seed)?;
        writeln!(csv, "{seed},{:e},{:e},{:e}", o.rollout.test_error, o.static_fit.test_error, o.projection_error).unwrap();
        r += o.rollout.test_error;
        s += o.static_fit.test_error;
        p += o.projection_error;
    }
    let n = count as f64;
    let res = PointResult {
        rollout: r / n,
        static_fit: s / n,
        projection: p / n,
    };
    writeln!(csv, "mean,{:e},{:e},{:e}", res.rollout, res.static_fit, res.projection).unwrap();
    write_atomic(path, csv.as_bytes())?;
    log::info!("x = {x}: rollout {:.4e} static {:.4e} projection {:.4e}", res.rollout, res.static_fit, res.projection);
    Ok(res)
}

/// Thread count: `--jobs` (default: available cores), capped by ROLLINF_THREADS.
pub fn job_count(flag: Option<usize>) -> Result<usize> {
    let mut jobs = flag.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if let Ok(v) = std::env::var("ROLLINF_THREADS") {
        let cap: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Argument(format!("ROLLINF_THREADS must be a positive integer, got `{v}`")))?;
        jobs = jobs.min(cap);
    }
    if jobs == 0 {
        return Err(Error::Argument("at least one job is required".into()));
    }
    Ok(jobs)
}

pub fn sweep(a: &SweepArgs, s: &Settings) -> Result<()> {
    if a.seeds == 0 {
        return Err(Error::Argument("need at least one seed".into()));
    }
    let base = s.benchmark(&a.bench, &a.train_opts, &a.roll, &a.model)?;
    let configs = a
        .values
        .iter()
        .map(|&x| point_config(&base, a.axis, x))
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    let jobs = job_count(a.jobs)?.min(configs.len());
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<PointResult>>>> = configs.iter().map(|_| Mutex::new(None)).collect();
    let seeds = a.seed..a.seed + a.seeds;
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= configs.len() {
                    break;
                }
                let path = a.out.join(format!("point_{i}.csv"));
                let r = run_point(configs[i].clone(), seeds.clone(), a.values[i], &path);
                *results[i].lock().unwrap() = Some(r);
            });
        }
    });

    let mut csv = String::from(HEADER);
    for (x, slot) in a.values.iter().zip(results) {
        let r = slot.into_inner().unwrap().expect("every point ran")?;
        writeln!(csv, "{x},{:e},{:e},{:e}", r.rollout, r.static_fit, r.projection).unwrap();
    }
    write_atomic(&a.out.join("sweep.csv"), csv.as_bytes())?;
    print!("{csv}");
    Ok(())
}
