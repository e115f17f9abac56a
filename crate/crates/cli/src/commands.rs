use std::fmt::Write as _;
use std::path::Path;

use rollinf_core::basis::{lift, pod_basis, project_dataset};
use rollinf_core::benchgen::{generate_swe_dataset, quadratic_dataset, random_quadratic_system, SweConfig};
use rollinf_core::datamodel::{load_dataset, save_dataset, write_atomic};
use rollinf_core::metrics::{errors_at_inputs, interpolate_theta, mean_error, projection_entry_errors};
use rollinf_core::polymodel::{save_operators, simulate, OperatorSet};
use rollinf_core::rollout::{train, Init};
use rollinf_core::stability::averaged_bound_operators;
use rollinf_core::staticopinf::fit_per_entry;
use rollinf_core::{DMatrix, Error, Operators, PolyModel, ReducedBasis, Result, TrajectoryDataset};

use crate::args::*;
use crate::config::Settings;

pub fn generate(a: &GenerateArgs, s: &Settings) -> Result<()> {
    let dt = s.dt(a.dt)?;
    let steps = s.steps(a.steps)?;
    let data = match a.system {
        System::Swe => {
            let grid = s.grid(a.grid)?;
            let mut configs = Vec::new();
            for &m2 in &a.mu2 {
                for &m1 in &a.mu1 {
                    configs.push(SweConfig {
                        grid_points_per_dim: grid,
                        ..SweConfig::new(m1, m2, dt, dt * steps as f64)
                    });
                }
            }
            generate_swe_dataset(&configs)?
        }
        System::Quadratic => {
            let truth = random_quadratic_system(a.n, a.seed, a.margin)?;
            let scheme = s.scheme(a.scheme.as_deref())?;
            let data = quadratic_dataset(&truth, dt, scheme, a.trajectories, steps, a.amplitude, a.seed)?;
            save_operators(&sibling(&a.out, "truth.manifest"), &truth, dt, scheme)?;
            data
        }
    };
    save_dataset(&a.out, &data)?;
    println!("wrote {} trajectories of dimension {} to {}", data.len(), data.state_dim(), a.out.display());
    Ok(())
}

/// `<dir>/<stem>_<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    path.with_file_name(format!("{stem}_{suffix}"))
}

pub fn basis(a: &BasisArgs) -> Result<()> {
    if a.stride == 0 {
        return Err(Error::Argument("stride must be positive".into()));
    }
    let data = load_dataset(&a.input)?;
    let mut cols = Vec::new();
    for t in data.trajectories() {
        cols.extend(t.states().column_iter().step_by(a.stride).map(|c| c.into_owned()));
    }
    let basis = pod_basis(&DMatrix::from_columns(&cols), a.n)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    basis.save(&a.out)?;
    println!("basis {}x{} from {} snapshots", basis.full_dim(), basis.reduced_dim(), cols.len());
    Ok(())
}

pub fn project_cmd(a: &ProjectArgs) -> Result<()> {
    let basis = ReducedBasis::load(&a.basis)?;
    let data = load_dataset(&a.input)?;
    save_dataset(&a.out, &project_dataset(&basis, &data)?)
}

pub fn train_static(a: &TrainStaticArgs, s: &Settings) -> Result<()> {
    let data = load_dataset(&a.input)?;
    let dt = data.dt().ok_or_else(|| Error::DegenerateData("empty dataset".into()))?;
    let ops = fit_per_entry(&data, s.degree(&a.model)?, s.period(a.period)?)?;
    OperatorSet {
        params: data.params(),
        operators: ops,
        dt,
        scheme: s.scheme(a.model.scheme.as_deref())?,
    }
    .save(&a.out)?;
    println!("fitted {} operator sets", data.len());
    Ok(())
}

pub fn train_rollout(a: &TrainRolloutArgs, s: &Settings) -> Result<()> {
    let train_data = load_dataset(&a.train)?;
    let valid = load_dataset(&a.valid)?;
    let basis = ReducedBasis::load(&a.basis)?;
    let cfg = s.train(&a.train_opts, Init::Zeros)?;
    let roll = s.roll(&a.roll)?;
    let report = train(
        &train_data,
        &valid,
        &basis,
        &roll,
        &cfg,
        s.scheme(a.model.scheme.as_deref())?,
        s.degree(&a.model)?,
        train_data.control_dim(),
    )?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    report.write(&a.out)?;
    println!(
        "selected learning rate {:e}, validation error {:.6e}",
        report.selected_learning_rate(),
        report.validation_error()
    );
    Ok(())
}

/// Operators of the set at `param`: the only member, or interpolated.
fn operators_at(set: &OperatorSet, param: Option<&[f64]>) -> Result<Operators> {
    match (set.operators.len(), param) {
        (1, _) => Ok(set.operators[0].clone()),
        (_, Some(p)) => interpolate_theta(&set.params, &set.operators, p),
        (_, None) => Err(Error::Argument("the model set has several members; give --param".into())),
    }
}

pub fn simulate_cmd(a: &SimulateArgs) -> Result<()> {
    let set = OperatorSet::load(&a.models)?;
    let init = load_dataset(&a.initial)?;
    let basis = a.basis.as_deref().map(ReducedBasis::load).transpose()?;
    let mut out = Vec::with_capacity(init.len());
    for (param, traj) in init.entries() {
        let model = PolyModel::new(operators_at(&set, Some(param))?, set.dt, set.scheme)?;
        let steps = a.steps.unwrap_or(traj.num_steps());
        let mut q0 = traj.initial_state();
        if let Some(b) = &basis {
            if q0.len() == b.full_dim() {
                q0 = b.project_state(&q0)?;
            }
        }
        let controls = (traj.control_dim() > 0).then(|| traj.controls().columns(0, steps.min(traj.num_steps())).into_owned());
        if controls.as_ref().is_some_and(|c| c.ncols() < steps) {
            return Err(Error::Argument(format!("the initial dataset has inputs for only {} steps", traj.num_steps())));
        }
        let sim = simulate(&model, &q0, controls.as_ref(), steps)?;
        if let Some(step) = sim.diverged_at {
            log::error!("entry {param:?} diverged at step {step}");
        }
        let mut reduced = sim.into_trajectory(controls)?;
        if let Some(b) = &basis {
            reduced = lift(b, &reduced)?;
        }
        out.push((param.clone(), reduced));
    }
    save_dataset(&a.out, &TrajectoryDataset::new(out)?)
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let truth = load_dataset(&a.truth)?;
    let basis = ReducedBasis::load(&a.basis)?;
    let dt = truth.dt().ok_or_else(|| Error::DegenerateData("empty test dataset".into()))?;
    let mut columns = Vec::new();
    for (name, dir) in &a.models {
        let set = OperatorSet::load(dir)?;
        if (set.dt - dt).abs() > 1e-12 * dt {
            return Err(Error::Argument(format!("model set `{name}` has dt {} but the data has {dt}", set.dt)));
        }
        columns.push(errors_at_inputs(&truth, &set.params, &set.operators, dt, set.scheme, &basis)?);
    }
    let projection = projection_entry_errors(&truth, &basis)?;

    let mut csv = String::from("entry");
    for (name, _) in &a.models {
        write!(csv, ",{name}").unwrap();
    }
    csv.push_str(",projection\n");
    for i in 0..truth.len() {
        write!(csv, "{i}").unwrap();
        for col in &columns {
            write!(csv, ",{:e}", col[i].error).unwrap();
        }
        writeln!(csv, ",{:e}", projection[i]).unwrap();
    }
    csv.push_str("mean");
    for ((name, _), col) in a.models.iter().zip(&columns) {
        let m = mean_error(col);
        write!(csv, ",{m:e}").unwrap();
        let diverged = col.iter().filter(|e| e.diverged).count();
        println!("{name}: {m:.6e} ({diverged} diverged)");
        if diverged > 0 {
            log::warn!("{name}: {diverged} of {} test trajectories diverged", col.len());
        }
    }
    let pm = projection.iter().sum::<f64>() / projection.len() as f64;
    writeln!(csv, ",{pm:e}").unwrap();
    println!("projection: {pm:.6e}");
    write_atomic(&a.out, csv.as_bytes())
}

pub fn stability(a: &StabilityArgs) -> Result<()> {
    let set = OperatorSet::load(&a.models)?;
    let ops = operators_at(&set, a.param.as_deref())?;
    let report = averaged_bound_operators(&ops, a.realizations, a.seed)?;
    report.write_csv(&a.out)?;
    println!(
        "mean gamma {:.6e} over {} realizations ({} infinite)",
        report.mean_gamma, report.num_realizations, report.num_infinite
    );
    Ok(())
}
