//! Flat TOML configuration merged with command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use offr::dataio::{load_instance, parity_groups, LoadedInstance, Structure, WeightSpec};
use offr::{desk_preset, synth_instance, Algorithm, ObjectiveConfig, ObjectiveKind, Pacing, ProblemInstanceF64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Every configurable value. Each field is also a flag; flags win over the
/// file. A resolved copy is written as the run manifest, which can be fed
/// back through `--config` to repeat the run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// two-sided, quality-weighted or balanced.
    #[arg(long)]
    pub objective: Option<String>,
    /// Fairness weight.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Fairness weights for sweeps and comparisons (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    /// Smoothing constant, positive.
    #[arg(long)]
    pub eta: Option<f64>,
    /// User curvature exponent (two-sided only), below 1.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha1: Option<f64>,
    /// Item curvature exponent (two-sided only), below 1.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha2: Option<f64>,
    /// offr, batch, fairco or fairco-balanced.
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Horizon in epochs of n steps.
    #[arg(long)]
    pub epochs: Option<u64>,
    /// Seeds, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Enables pacing with this factor.
    #[arg(long)]
    pub pacing_gamma: Option<f64>,
    /// Epochs between metric rows.
    #[arg(long)]
    pub eval_every: Option<u64>,
    /// Reference optimum for regret: a number or `auto`.
    #[arg(long)]
    pub reference: Option<String>,
    /// Write per-step traces.
    #[arg(long)]
    pub trace: Option<bool>,
    /// Named instance (`desk`).
    #[arg(long)]
    pub preset: Option<String>,
    /// `user,item,value` file.
    #[arg(long)]
    pub preferences: Option<PathBuf>,
    /// `user,weight` file.
    #[arg(long)]
    pub activities: Option<PathBuf>,
    /// `user,group` file.
    #[arg(long)]
    pub groups: Option<PathBuf>,
    /// Ranking length.
    #[arg(long)]
    pub k: Option<usize>,
    /// Explicit position weights, comma-separated (default DCG).
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Synthetic instance: number of users.
    #[arg(long)]
    pub users: Option<usize>,
    /// Synthetic instance: number of items.
    #[arg(long)]
    pub items: Option<usize>,
    /// Synthetic instance: generator seed.
    #[arg(long)]
    pub synth_seed: Option<u64>,
    /// Synthetic instance: uniform or block.
    #[arg(long)]
    pub structure: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Parallel cells; does not affect results.
    #[arg(long)]
    #[serde(skip)]
    pub workers: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        Settings { $($field: $top.$field.or($base.$field)),* }
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(self, top: Settings) -> Settings {
        let base = self;
        overlay!(
            base,
            top,
            objective,
            beta,
            betas,
            eta,
            alpha1,
            alpha2,
            algorithm,
            epochs,
            seeds,
            pacing_gamma,
            eval_every,
            reference,
            trace,
            preset,
            preferences,
            activities,
            groups,
            k,
            weights,
            users,
            items,
            synth_seed,
            structure,
            out,
            workers
        )
    }
}

pub const DEFAULT_BETAS: [f64; 6] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2];
pub const DEFAULT_FILE_K: usize = 40;

/// Reference optimum request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Value(f64),
    /// Best of a long batch run and a long online run.
    Auto,
}

/// Validated configuration with the instance loaded.
#[derive(Debug, Clone)]
pub struct Resolved {
    /// Fully populated settings, as written to the manifest.
    pub settings: Settings,
    pub loaded: LoadedInstance<f64>,
    pub objective: ObjectiveConfig<f64>,
    pub betas: Vec<f64>,
    pub algorithm: Algorithm,
    pub epochs: u64,
    pub seeds: Vec<u64>,
    pub pacing: Option<Pacing>,
    pub eval_every: u64,
    pub reference: Option<Reference>,
    pub trace: bool,
    pub out: PathBuf,
    pub workers: usize,
}

impl Resolved {
    pub fn instance(&self) -> &ProblemInstanceF64 {
        &self.loaded.instance
    }

    pub fn manifest(&self, command: &str) -> Result<String, CliError> {
        let body = toml::to_string(&self.settings).map_err(|e| CliError::Runtime(format!("manifest: {e}")))?;
        Ok(format!("# offr {command}\n{body}"))
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn existing(path: &Option<PathBuf>, what: &str) -> Result<(), CliError> {
    match path {
        Some(p) if !p.is_file() => Err(config(format!("{what} file {} does not exist", p.display()))),
        _ => Ok(()),
    }
}

/// Fills defaults, validates and loads the instance.
pub fn resolve(mut s: Settings) -> Result<Resolved, CliError> {
    let kind: ObjectiveKind = s
        .objective
        .get_or_insert_with(|| "two-sided".into())
        .parse()
        .map_err(|e: offr::Error| config(e.to_string()))?;
    s.objective = Some(kind.name().into());
    let beta = *s.beta.get_or_insert(1.0);
    let eta = *s.eta.get_or_insert(1.0);
    let alpha1 = *s.alpha1.get_or_insert(0.0);
    let alpha2 = *s.alpha2.get_or_insert(0.0);
    let objective = ObjectiveConfig::new(kind, beta, eta, alpha1, alpha2).map_err(|e| config(e.to_string()))?;
    let betas = s.betas.clone().unwrap_or_else(|| DEFAULT_BETAS.to_vec());
    if betas.is_empty() {
        return Err(config("betas must not be empty"));
    }
    for &b in &betas {
        objective.with_beta(b).map_err(|e| config(e.to_string()))?;
    }
    let algorithm: Algorithm = s
        .algorithm
        .get_or_insert_with(|| "offr".into())
        .parse()
        .map_err(|e: offr::Error| config(e.to_string()))?;
    let epochs = *s.epochs.get_or_insert(100);
    if epochs == 0 {
        return Err(config("epochs must be at least 1"));
    }
    let seeds = s.seeds.get_or_insert_with(|| vec![0]).clone();
    if seeds.is_empty() {
        return Err(config("seeds must not be empty"));
    }
    let pacing = s
        .pacing_gamma
        .map(Pacing::new)
        .transpose()
        .map_err(|e| config(e.to_string()))?;
    let eval_every = *s.eval_every.get_or_insert(1);
    if eval_every == 0 {
        return Err(config("eval_every must be at least 1"));
    }
    let reference = match s.reference.as_deref() {
        None => None,
        Some("auto") => Some(Reference::Auto),
        Some(text) => match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(Reference::Value(v)),
            _ => return Err(config(format!("reference must be a number or `auto`, got `{text}`"))),
        },
    };
    let trace = *s.trace.get_or_insert(false);
    let out = s.out.get_or_insert_with(|| PathBuf::from("out")).clone();
    let workers = s
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(config("workers must be at least 1"));
    }

    let loaded = load_source(&mut s)?;
    objective.check(&loaded.instance).map_err(|e| config(e.to_string()))?;
    if algorithm == Algorithm::FairCoBalanced && loaded.instance.groups().is_none() {
        return Err(config("fairco-balanced needs user groups"));
    }
    s.betas = Some(betas.clone());
    Ok(Resolved {
        settings: s,
        loaded,
        objective,
        betas,
        algorithm,
        epochs,
        seeds,
        pacing,
        eval_every,
        reference,
        trace,
        out,
        workers,
    })
}

fn load_source(s: &mut Settings) -> Result<LoadedInstance<f64>, CliError> {
    let synth = s.users.is_some() || s.items.is_some() || s.synth_seed.is_some() || s.structure.is_some();
    let files = s.preferences.is_some();
    if (s.activities.is_some() || s.groups.is_some()) && !files {
        return Err(config("activities and groups files need a preferences file"));
    }
    match (files, synth, s.preset.as_deref()) {
        (true, true, _) | (true, _, Some(_)) | (_, true, Some(_)) => Err(config(
            "choose one instance source: preset, synthetic parameters or preferences file",
        )),
        (true, false, None) => {
            existing(&s.preferences, "preferences")?;
            existing(&s.activities, "activities")?;
            existing(&s.groups, "groups")?;
            let k = *s.k.get_or_insert(DEFAULT_FILE_K);
            let spec = s.weights.clone().map_or(WeightSpec::Dcg, WeightSpec::Explicit);
            load_instance(
                s.preferences.as_deref().unwrap(),
                k,
                &spec,
                s.activities.as_deref(),
                s.groups.as_deref(),
            )
            .map_err(|e| config(e.to_string()))
        }
        (false, true, None) => {
            let (Some(n), Some(m), Some(k)) = (s.users, s.items, s.k) else {
                return Err(config("synthetic instances need users, items and k"));
            };
            if s.weights.is_some() {
                return Err(config("synthetic instances use DCG weights"));
            }
            let seed = *s.synth_seed.get_or_insert(0);
            let structure: Structure = s
                .structure
                .get_or_insert_with(|| "block".into())
                .parse()
                .map_err(|e: offr::Error| config(e.to_string()))?;
            let inst = synth_instance(n, m, k, seed, structure)
                .and_then(|inst| inst.with_groups(Some(parity_groups(n))))
                .map_err(|e| config(e.to_string()))?;
            Ok(LoadedInstance::with_index_ids(inst))
        }
        (false, false, preset) => {
            let name = preset.unwrap_or("desk");
            if name != "desk" {
                return Err(config(format!("unknown preset `{name}` (expected desk)")));
            }
            if s.k.is_some() || s.weights.is_some() {
                return Err(config("the desk preset fixes k and the weights"));
            }
            s.preset = Some(name.into());
            Ok(LoadedInstance::with_index_ids(desk_preset()))
        }
    }
}
