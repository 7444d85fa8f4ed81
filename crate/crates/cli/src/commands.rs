//! Subcommand implementations.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use offr::dataio::{read_exposure_matrix, write_exposure_matrix};
use offr::eval::{attach_regret, write_metrics_csv};
use offr::online::{write_trace_csv, DEFAULT_PACING_GAMMA};
use offr::{
    reference_optimum, run_batch, run_experiment, Algorithm, ExperimentResult, ExperimentSpec, MetricSnapshot,
    ObjectiveKind, Pacing, Schedule,
};
use rayon::prelude::*;

use crate::config::{resolve, Reference, Resolved, Settings};
use crate::error::CliError;

/// Epoch of the early sweep snapshot.
pub const SWEEP_EARLY_EPOCH: u64 = 10;
pub const TRADEOFF_HEADER: &str = "beta,seed,epoch,user_obj,item_obj";
pub const TRAJECTORY_HEADER: &str = "algorithm,beta,epoch,user_utility,item_obj";
pub const STATIC_HEADER: &str = "objective,user_obj,item_obj,mean_utility";
pub const MANIFEST: &str = "manifest.toml";

/// Long-run lengths behind `reference = "auto"`.
const AUTO_BATCH_EPOCHS: u64 = 5000;
const AUTO_ONLINE_EPOCHS: u64 = 2000;

fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Writes through a temporary sibling so readers never see partial files.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_manifest(r: &Resolved, command: &str) -> Result<(), CliError> {
    write_atomic(&r.out.join(MANIFEST), r.manifest(command)?.as_bytes())
}

fn reference_value(r: &Resolved) -> Result<Option<f64>, CliError> {
    match r.reference {
        None => Ok(None),
        Some(Reference::Value(v)) => Ok(Some(v)),
        Some(Reference::Auto) => {
            let (_, batch) = run_batch(r.instance(), &r.objective, AUTO_BATCH_EPOCHS)?;
            let spec = ExperimentSpec::new(Algorithm::Offr, AUTO_ONLINE_EPOCHS, 0)
                .with_schedule(Schedule::Epochs(vec![AUTO_ONLINE_EPOCHS]));
            let online = run_experiment(r.instance(), &r.objective, &spec)?;
            let last = online.last().map(|s| s.objective);
            Ok(reference_optimum([Some(batch), last].into_iter().flatten()))
        }
    }
}

/// `run`: one metrics file per seed plus the final `π̂` and the manifest.
pub fn run(settings: Settings) -> Result<(), CliError> {
    let r = resolve(settings)?;
    prepare_out(&r.out)?;
    let reference = reference_value(&r)?;
    let results: Vec<(u64, ExperimentResult<f64>)> = pool(r.workers)?.install(|| {
        r.seeds
            .par_iter()
            .map(|&seed| {
                let spec = ExperimentSpec::new(r.algorithm, r.epochs, seed)
                    .with_schedule(Schedule::Every(r.eval_every))
                    .with_pacing(r.pacing)
                    .with_trace(r.trace);
                run_experiment(r.instance(), &r.objective, &spec).map(|res| (seed, res))
            })
            .collect::<Result<_, _>>()
    })?;
    for (seed, mut res) in results {
        if let Some(reference) = reference {
            attach_regret(&mut res.snapshots, reference);
        }
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &res.snapshots)?;
        write_atomic(&r.out.join(format!("metrics_seed{seed}.csv")), &buf)?;
        write_exposure_matrix(&r.out.join(format!("pi_hat_seed{seed}.csv")), &res.pi, &r.loaded)?;
        if r.trace && r.algorithm != Algorithm::Batch {
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, &res.trace, &r.loaded)?;
            write_atomic(&r.out.join(format!("trace_seed{seed}.csv")), &buf)?;
        }
    }
    write_manifest(&r, "run")
}

fn beta_part_name(beta: f64) -> String {
    format!("beta_{beta:e}.csv")
}

/// Settings that must match for saved sweep parts to be reused.
fn sweep_key(r: &Resolved) -> Result<String, CliError> {
    let key = Settings {
        betas: None,
        beta: None,
        out: None,
        ..r.settings.clone()
    };
    toml::to_string(&key).map_err(|e| CliError::Runtime(format!("sweep key: {e}")))
}

/// `sweep`: the trade-off curve over `betas`. Each β is saved to its own part
/// file as soon as all seeds finish, and an interrupted sweep picks up from
/// the β values still missing.
pub fn sweep(settings: Settings) -> Result<(), CliError> {
    let r = resolve(settings)?;
    let parts = r.out.join("sweep_parts");
    prepare_out(&parts)?;
    let key = sweep_key(&r)?;
    let key_path = parts.join("settings.toml");
    match fs::read_to_string(&key_path) {
        Ok(saved) if saved != key => {
            return Err(CliError::Config(format!(
                "{} holds a sweep with different settings; use another output directory",
                parts.display()
            )))
        }
        Ok(_) => {}
        Err(_) => write_atomic(&key_path, key.as_bytes())?,
    }
    let mut betas = r.betas.clone();
    betas.dedup();
    let schedule = Schedule::Epochs(vec![SWEEP_EARLY_EPOCH, r.epochs]);
    let missing: Vec<f64> = betas
        .iter()
        .copied()
        .filter(|&b| !parts.join(beta_part_name(b)).is_file())
        .collect();
    pool(r.workers)?.install(|| {
        missing.par_iter().try_for_each(|&beta| -> Result<(), CliError> {
            let cfg = r.objective.with_beta(beta)?;
            let cells: Vec<(u64, Vec<MetricSnapshot<f64>>)> = r
                .seeds
                .par_iter()
                .map(|&seed| {
                    let spec = ExperimentSpec::new(r.algorithm, r.epochs, seed)
                        .with_schedule(schedule.clone())
                        .with_pacing(r.pacing);
                    run_experiment(r.instance(), &cfg, &spec).map(|res| (seed, res.snapshots))
                })
                .collect::<Result<_, _>>()?;
            let mut text = String::new();
            for (seed, snaps) in cells {
                for s in snaps {
                    let _ = writeln!(
                        text,
                        "{beta},{seed},{},{},{}",
                        s.epoch, s.user_objective, s.item_objective
                    );
                }
            }
            write_atomic(&parts.join(beta_part_name(beta)), text.as_bytes())
        })
    })?;
    let mut out = format!("{TRADEOFF_HEADER}\n");
    for &beta in &betas {
        let path = parts.join(beta_part_name(beta));
        out.push_str(&fs::read_to_string(&path).map_err(|e| io_err(&path, e))?);
    }
    write_atomic(&r.out.join("tradeoff.csv"), out.as_bytes())?;
    write_manifest(&r, "sweep")
}

/// `compare-fairco`: seed-averaged trajectories of OFFR with and without
/// pacing against the matching FairCo variant.
pub fn compare_fairco(settings: Settings) -> Result<(), CliError> {
    let r = resolve(settings)?;
    let kind = r.objective.kind();
    let Some(fairco) = Algorithm::fairco_for(kind) else {
        return Err(CliError::Config(format!(
            "FairCo cannot be applied to the {} objective; use quality-weighted or balanced",
            ObjectiveKind::name(kind)
        )));
    };
    prepare_out(&r.out)?;
    let paced = r.pacing.unwrap_or(Pacing::new(DEFAULT_PACING_GAMMA)?);
    let arms: [(&str, Algorithm, Option<Pacing>); 3] = [
        ("offr", Algorithm::Offr, None),
        ("offr-paced", Algorithm::Offr, Some(paced)),
        (fairco.name(), fairco, None),
    ];
    let beta = r.objective.beta();
    let cells: Vec<(usize, u64)> = (0..arms.len())
        .flat_map(|a| r.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let runs: Vec<(usize, Vec<MetricSnapshot<f64>>)> = pool(r.workers)?.install(|| {
        cells
            .par_iter()
            .map(|&(a, seed)| {
                let (_, algorithm, pacing) = arms[a];
                let spec = ExperimentSpec::new(algorithm, r.epochs, seed)
                    .with_schedule(Schedule::Geometric)
                    .with_pacing(pacing);
                run_experiment(r.instance(), &r.objective, &spec).map(|res| (a, res.snapshots))
            })
            .collect::<Result<_, _>>()
    })?;
    let epochs = Schedule::Geometric.epochs(r.epochs);
    let seeds = r.seeds.len() as f64;
    let mut text = format!("{TRAJECTORY_HEADER}\n");
    for (a, (name, _, _)) in arms.iter().enumerate() {
        let mine: Vec<&Vec<MetricSnapshot<f64>>> = runs.iter().filter(|(x, _)| *x == a).map(|(_, s)| s).collect();
        for (e, epoch) in epochs.iter().enumerate() {
            let utility: f64 = mine.iter().map(|s| s[e].mean_user_utility).sum::<f64>() / seeds;
            let item: f64 = mine.iter().map(|s| s[e].item_objective).sum::<f64>() / seeds;
            let _ = writeln!(text, "{name},{beta},{epoch},{utility},{item}");
        }
    }
    write_atomic(&r.out.join("trajectory.csv"), text.as_bytes())?;
    write_manifest(&r, "compare-fairco")
}

/// `eval-static`: scores a stored `π̂` under the configured objective and
/// prints one CSV row to stdout.
pub fn eval_static(settings: Settings, pi_path: &Path) -> Result<String, CliError> {
    let r = resolve(settings)?;
    if !pi_path.is_file() {
        return Err(CliError::Config(format!(
            "exposure file {} does not exist",
            pi_path.display()
        )));
    }
    let pi = read_exposure_matrix(pi_path, &r.loaded)?;
    let s = MetricSnapshot::compute(0, &pi, r.instance(), &r.objective, None)?;
    Ok(format!(
        "{STATIC_HEADER}\n{},{},{},{}\n",
        s.objective, s.user_objective, s.item_objective, s.mean_user_utility
    ))
}
