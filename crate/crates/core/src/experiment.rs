//! Epoch-level experiment driver shared by the command line and the
//! convergence checks.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{batch_fw_epoch, BatchState};
use crate::error::{Error, Result};
use crate::estimators::EstimatorState;
use crate::eval::MetricSnapshot;
use crate::objectives::{ExposureMatrix, ObjectiveConfig, ObjectiveKind};
use crate::online::{OnlineSimulator, Pacing, Policy, StepRecord};
use crate::problem::ProblemInstance;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Offr,
    Batch,
    FairCo,
    FairCoBalanced,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Offr,
        Algorithm::Batch,
        Algorithm::FairCo,
        Algorithm::FairCoBalanced,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Offr => "offr",
            Algorithm::Batch => "batch",
            Algorithm::FairCo => "fairco",
            Algorithm::FairCoBalanced => "fairco-balanced",
        }
    }

    /// FairCo variant matching a fairness objective, if any.
    pub fn fairco_for(kind: ObjectiveKind) -> Option<Algorithm> {
        match kind {
            ObjectiveKind::TwoSided => None,
            ObjectiveKind::QualityWeighted => Some(Algorithm::FairCo),
            ObjectiveKind::BalancedExposure => Some(Algorithm::FairCoBalanced),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown algorithm `{s}` (expected offr, batch, fairco or fairco-balanced)"
            ))
        })
    }
}

/// Epochs at which metrics are recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    /// Every `k` epochs, plus the final epoch.
    Every(u64),
    /// 1, 2, 5, 10, 20, 50, ... plus the final epoch.
    Geometric,
    /// Explicit epochs; entries past the horizon are ignored.
    Epochs(Vec<u64>),
}

impl Schedule {
    pub fn epochs(&self, horizon: u64) -> Vec<u64> {
        let mut out: Vec<u64> = match self {
            Schedule::Every(k) => {
                let mut v: Vec<u64> = (1..=horizon).filter(|e| e % (*k).max(1) == 0).collect();
                if horizon > 0 {
                    v.push(horizon);
                }
                v
            }
            Schedule::Geometric => {
                let mut v = Vec::new();
                let mut decade = 1u64;
                'outer: loop {
                    for f in [1, 2, 5] {
                        let e = f * decade;
                        if e > horizon {
                            break 'outer;
                        }
                        v.push(e);
                    }
                    decade *= 10;
                }
                v.push(horizon);
                v
            }
            Schedule::Epochs(e) => e.iter().copied().filter(|&e| e >= 1 && e <= horizon).collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub algorithm: Algorithm,
    pub epochs: u64,
    pub seed: u64,
    pub schedule: Schedule,
    pub pacing: Option<Pacing>,
    /// Keep a [`StepRecord`] per step (online algorithms only).
    pub record_trace: bool,
}

impl ExperimentSpec {
    pub fn new(algorithm: Algorithm, epochs: u64, seed: u64) -> Self {
        ExperimentSpec {
            algorithm,
            epochs,
            seed,
            schedule: Schedule::Every(1),
            pacing: None,
            record_trace: false,
        }
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_pacing(mut self, pacing: Option<Pacing>) -> Self {
        self.pacing = pacing;
        self
    }

    pub fn with_trace(mut self, record: bool) -> Self {
        self.record_trace = record;
        self
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult<T> {
    pub snapshots: Vec<MetricSnapshot<T>>,
    /// Final estimator state of online algorithms.
    pub state: Option<EstimatorState<T>>,
    /// Estimator states captured at each scheduled epoch (online only).
    pub states: Vec<EstimatorState<T>>,
    /// Per-step records when requested.
    pub trace: Vec<StepRecord<T>>,
    /// Final average exposures (`π̂` online, the iterate for batch).
    pub pi: ExposureMatrix<T>,
}

impl<T: Scalar> ExperimentResult<T> {
    pub fn last(&self) -> Option<&MetricSnapshot<T>> {
        self.snapshots.last()
    }

    pub fn at_epoch(&self, epoch: u64) -> Option<&MetricSnapshot<T>> {
        self.snapshots.iter().find(|s| s.epoch == epoch)
    }
}

/// Runs one algorithm for `spec.epochs` epochs and evaluates the average
/// exposures at every scheduled epoch. The batch baseline ignores the seed
/// and pacing; FairCo uses the configured `β`.
pub fn run_experiment<T: Scalar>(
    inst: &ProblemInstance<T>,
    cfg: &ObjectiveConfig<T>,
    spec: &ExperimentSpec,
) -> Result<ExperimentResult<T>> {
    run_experiment_with(inst, cfg, spec, false)
}

/// [`run_experiment`], optionally keeping the estimator state at every
/// scheduled epoch.
pub fn run_experiment_with<T: Scalar>(
    inst: &ProblemInstance<T>,
    cfg: &ObjectiveConfig<T>,
    spec: &ExperimentSpec,
    keep_states: bool,
) -> Result<ExperimentResult<T>> {
    cfg.check(inst)?;
    let marks = spec.schedule.epochs(spec.epochs);
    let mut snapshots = Vec::with_capacity(marks.len());
    let mut states = Vec::new();
    let n = inst.n() as u64;
    let policy = match spec.algorithm {
        Algorithm::Batch => {
            let mut state = BatchState::new(inst);
            for &mark in &marks {
                while state.iteration() < mark {
                    batch_fw_epoch(&mut state, inst, cfg)?;
                }
                let mut snap = MetricSnapshot::compute(mark * n, state.pi(), inst, cfg, None)?;
                snap.epoch = mark;
                snapshots.push(snap);
            }
            return Ok(ExperimentResult {
                snapshots,
                state: None,
                states,
                trace: Vec::new(),
                pi: state.pi().clone(),
            });
        }
        Algorithm::Offr => Policy::Offr,
        Algorithm::FairCo => Policy::FairCo,
        Algorithm::FairCoBalanced => Policy::FairCoBalanced,
    };
    let mut sim = OnlineSimulator::new(inst, cfg, policy, spec.seed)?
        .with_pacing(spec.pacing)
        .with_pi_hat();
    let mut trace = Vec::new();
    for &mark in &marks {
        while sim.t() < mark * n {
            let (user, ranking) = sim.step()?;
            if spec.record_trace {
                trace.push(StepRecord {
                    t: sim.t(),
                    user,
                    ranking,
                    exposure: None,
                });
            }
        }
        snapshots.push(sim.snapshot(None)?);
        if keep_states {
            states.push(sim.state().clone());
        }
    }
    let pi = sim
        .pi_hat()
        .map(|p| p.pi_hat())
        .unwrap_or_else(|| ExposureMatrix::uniform(inst));
    Ok(ExperimentResult {
        snapshots,
        state: Some(sim.into_state()),
        states,
        trace,
        pi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synth_instance, Structure};

    #[test]
    fn schedules() {
        assert_eq!(Schedule::Every(1).epochs(3), vec![1, 2, 3]);
        assert_eq!(Schedule::Every(4).epochs(10), vec![4, 8, 10]);
        assert_eq!(Schedule::Geometric.epochs(30), vec![1, 2, 5, 10, 20, 30]);
        assert_eq!(Schedule::Geometric.epochs(50), vec![1, 2, 5, 10, 20, 50]);
        assert_eq!(Schedule::Epochs(vec![10, 5, 0, 99]).epochs(20), vec![5, 10]);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("frank".parse::<Algorithm>().is_err());
    }

    #[test]
    fn snapshots_follow_schedule() {
        let inst: ProblemInstance<f64> = synth_instance(6, 9, 3, 1, Structure::Uniform).unwrap();
        let cfg = ObjectiveConfig::quality_weighted(1.0, 1.0).unwrap();
        for algorithm in [Algorithm::Offr, Algorithm::Batch, Algorithm::FairCo] {
            let spec = ExperimentSpec::new(algorithm, 20, 3).with_schedule(Schedule::Geometric);
            let r = run_experiment(&inst, &cfg, &spec).unwrap();
            let epochs: Vec<u64> = r.snapshots.iter().map(|s| s.epoch).collect();
            assert_eq!(epochs, vec![1, 2, 5, 10, 20], "{algorithm}");
            assert_eq!(r.last().unwrap().t, 120);
        }
    }

    #[test]
    fn fairco_balanced_needs_groups() {
        let inst: ProblemInstance<f64> = synth_instance(4, 5, 2, 1, Structure::Uniform).unwrap();
        let cfg = ObjectiveConfig::quality_weighted(1.0, 1.0).unwrap();
        let spec = ExperimentSpec::new(Algorithm::FairCoBalanced, 2, 0);
        assert!(matches!(run_experiment(&inst, &cfg, &spec), Err(Error::MissingGroups)));
    }
}
