//! The online loop: draw a user, score items from the running estimates,
//! serve the top-k, update the estimates.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::baselines::{fairco_balanced_scores_into, fairco_scores_into};
use crate::dataio::LoadedInstance;
use crate::error::{Error, Result};
use crate::estimators::EstimatorState;
use crate::eval::{MetricSnapshot, PiHatTracker};
use crate::objectives::{offr_scores_into, ObjectiveConfig};
use crate::problem::{ExposureVector, ProblemInstance, Ranking};
use crate::scalar::Scalar;
use crate::topk::TopK;

/// Default pacing factor.
pub const DEFAULT_PACING_GAMMA: f64 = 0.01;

/// Ramps the fairness weight as `β_t = min(β, γ·t/n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pacing {
    pub gamma: f64,
}

impl Default for Pacing {
    fn default() -> Self {
        Pacing {
            gamma: DEFAULT_PACING_GAMMA,
        }
    }
}

impl Pacing {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Config(format!("pacing gamma must be positive, got {gamma}")));
        }
        Ok(Pacing { gamma })
    }

    pub fn beta_at<T: Scalar>(&self, beta: T, t: u64, n: usize) -> T {
        beta.min(T::of(self.gamma * t as f64 / n as f64))
    }
}

/// How items are scored at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Approximate gradient of the configured objective.
    Offr,
    /// Quality-weighted disparity controller.
    FairCo,
    /// Group-balanced disparity controller.
    FairCoBalanced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Number of steps `T`.
    pub horizon: u64,
    pub seed: u64,
    /// Steps between metric snapshots.
    pub eval_every: u64,
    pub pacing: Option<Pacing>,
    /// Keep every [`StepRecord`] with its exposure vector.
    pub record_trace: bool,
}

impl SimulationConfig {
    pub fn new(horizon: u64, seed: u64, eval_every: u64) -> Result<Self> {
        let cfg = SimulationConfig {
            horizon,
            seed,
            eval_every,
            pacing: None,
            record_trace: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be at least 1".into()));
        }
        if let Some(p) = self.pacing {
            Pacing::new(p.gamma)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    pub t: u64,
    pub user: usize,
    pub ranking: Ranking,
    pub exposure: Option<ExposureVector<T>>,
}

/// Categorical sampler over user activities by inverse CDF.
#[derive(Debug, Clone)]
pub struct UserSampler {
    cumulative: Vec<f64>,
    last: usize,
}

impl UserSampler {
    pub fn new<T: Scalar>(w: &[T]) -> Result<Self> {
        let mut total = 0.0;
        let cumulative: Vec<f64> = w
            .iter()
            .map(|&x| {
                total += x.as_f64();
                total
            })
            .collect();
        let last = w
            .iter()
            .rposition(|&x| x > T::zero())
            .ok_or_else(|| Error::Instance("activities have no positive entry".into()))?;
        Ok(UserSampler { cumulative, last })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.gen::<f64>() * self.cumulative[self.last];
        self.cumulative.partition_point(|&c| c <= u).min(self.last)
    }
}

/// Work done so far, for checking that a step costs `O(m)` whatever `n` is.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub steps: u64,
    pub score_terms: u64,
    pub comparisons: u64,
    pub update_writes: u64,
}

impl OpCounts {
    pub fn total(&self) -> u64 {
        self.score_terms + self.comparisons + self.update_writes
    }
}

/// One online step at time `t` for user `i_t`: the top-k of the
/// approximate gradient computed from `state` (the estimates after `t − 1`
/// steps). The caller applies the estimator update.
pub fn offr_step<T: Scalar>(
    inst: &ProblemInstance<T>,
    cfg: &ObjectiveConfig<T>,
    state: &EstimatorState<T>,
    i_t: usize,
    t: u64,
) -> Result<Ranking> {
    let mut scores = vec![T::zero(); inst.m()];
    offr_scores_into(&mut scores, i_t, state, inst, cfg, t)?;
    check_scores(&scores, t)?;
    TopK::new().select(&scores, inst.k())
}

fn check_scores<T: Scalar>(scores: &[T], t: u64) -> Result<()> {
    match scores.iter().position(|x| !x.is_finite()) {
        Some(j) => Err(Error::NonFinite {
            t,
            what: format!("score of item {j} is {}", scores[j]),
        }),
        None => Ok(()),
    }
}

/// Sequential simulator with reusable buffers. Tracks `π̂` only when
/// built with [`OnlineSimulator::with_pi_hat`].
#[derive(Debug)]
pub struct OnlineSimulator<'a, T> {
    inst: &'a ProblemInstance<T>,
    cfg: ObjectiveConfig<T>,
    policy: Policy,
    pacing: Option<Pacing>,
    state: EstimatorState<T>,
    sampler: UserSampler,
    rng: Xoshiro256PlusPlus,
    scores: Vec<T>,
    exposure: Vec<T>,
    last: Vec<usize>,
    topk: TopK,
    pi_hat: Option<PiHatTracker<T>>,
    ops: OpCounts,
}

impl<'a, T: Scalar> OnlineSimulator<'a, T> {
    pub fn new(inst: &'a ProblemInstance<T>, cfg: &ObjectiveConfig<T>, policy: Policy, seed: u64) -> Result<Self> {
        cfg.check(inst)?;
        if policy == Policy::FairCoBalanced && inst.groups().is_none() {
            return Err(Error::MissingGroups);
        }
        Ok(OnlineSimulator {
            inst,
            cfg: *cfg,
            policy,
            pacing: None,
            state: EstimatorState::new(inst),
            sampler: UserSampler::new(inst.w())?,
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
            scores: vec![T::zero(); inst.m()],
            exposure: vec![T::zero(); inst.m()],
            last: Vec::new(),
            topk: TopK::new(),
            pi_hat: None,
            ops: OpCounts::default(),
        })
    }

    pub fn with_pacing(mut self, pacing: Option<Pacing>) -> Self {
        self.pacing = pacing;
        self
    }

    pub fn with_pi_hat(mut self) -> Self {
        self.pi_hat = Some(PiHatTracker::new(self.inst));
        self
    }

    pub fn state(&self) -> &EstimatorState<T> {
        &self.state
    }

    pub fn pi_hat(&self) -> Option<&PiHatTracker<T>> {
        self.pi_hat.as_ref()
    }

    pub fn ops(&self) -> OpCounts {
        self.ops
    }

    /// Completed steps.
    pub fn t(&self) -> u64 {
        self.state.t()
    }

    /// Fairness weight in effect at step `t`.
    pub fn beta_at(&self, t: u64) -> T {
        match self.pacing {
            Some(p) => p.beta_at(self.cfg.beta(), t, self.inst.n()),
            None => self.cfg.beta(),
        }
    }

    /// Runs one step and returns the served user and ranking.
    pub fn step(&mut self) -> Result<(usize, Ranking)> {
        let user = self.sampler.sample(&mut self.rng);
        self.step_for(user)
    }

    /// Runs one step serving `user`, bypassing the sampler.
    pub fn step_for(&mut self, user: usize) -> Result<(usize, Ranking)> {
        let inst = self.inst;
        let t = self.state.t() + 1;
        let beta = self.beta_at(t);
        self.ops.score_terms += match self.policy {
            Policy::Offr => {
                let cfg = if beta == self.cfg.beta() {
                    self.cfg
                } else {
                    self.cfg.with_beta(beta)?
                };
                offr_scores_into(&mut self.scores, user, &self.state, inst, &cfg, t)?
            }
            Policy::FairCo => fairco_scores_into(&mut self.scores, user, &self.state, inst, beta, t)?,
            Policy::FairCoBalanced => fairco_balanced_scores_into(&mut self.scores, user, &self.state, inst, beta, t)?,
        };
        check_scores(&self.scores, t)?;
        let before = self.topk.comparisons();
        let ranking = self.topk.select(&self.scores, inst.k())?;
        self.ops.comparisons += self.topk.comparisons() - before;

        for &j in &self.last {
            self.exposure[j] = T::zero();
        }
        self.last.clear();
        for (&j, &bk) in ranking.items().iter().zip(inst.b()) {
            self.exposure[j] = bk;
            self.last.push(j);
        }
        self.ops.update_writes += self.state.update_slice(inst, user, &self.exposure)?;
        if let Some(tracker) = &mut self.pi_hat {
            tracker.record(user, &self.exposure);
        }
        self.ops.steps += 1;
        Ok((user, ranking))
    }

    /// Exposure vector of the most recent step.
    pub fn last_exposure(&self) -> &[T] {
        &self.exposure
    }

    /// Evaluates the tracked `π̂` with the true activities.
    pub fn snapshot(&self, reference: Option<T>) -> Result<MetricSnapshot<T>> {
        let tracker = self
            .pi_hat
            .as_ref()
            .ok_or_else(|| Error::Config("snapshots need pi-hat tracking".into()))?;
        MetricSnapshot::compute(self.t(), &tracker.pi_hat(), self.inst, &self.cfg, reference)
    }

    pub fn into_state(self) -> EstimatorState<T> {
        self.state
    }
}

/// Result of [`run_online`].
#[derive(Debug, Clone)]
pub struct OnlineRun<T> {
    pub trace: Vec<StepRecord<T>>,
    pub snapshots: Vec<MetricSnapshot<T>>,
    pub state: EstimatorState<T>,
    pub ops: OpCounts,
}

/// Runs the online policy for `sim.horizon` steps, snapshotting `π̂` every
/// `sim.eval_every` steps.
pub fn run_online<T: Scalar>(
    inst: &ProblemInstance<T>,
    cfg: &ObjectiveConfig<T>,
    sim: &SimulationConfig,
) -> Result<OnlineRun<T>> {
    run_policy(inst, cfg, sim, Policy::Offr)
}

/// [`run_online`] with an explicit scoring policy.
pub fn run_policy<T: Scalar>(
    inst: &ProblemInstance<T>,
    cfg: &ObjectiveConfig<T>,
    sim: &SimulationConfig,
    policy: Policy,
) -> Result<OnlineRun<T>> {
    sim.validate()?;
    let mut simulator = OnlineSimulator::new(inst, cfg, policy, sim.seed)?
        .with_pacing(sim.pacing)
        .with_pi_hat();
    let mut trace = Vec::new();
    let mut snapshots = Vec::new();
    for _ in 0..sim.horizon {
        let (user, ranking) = simulator.step()?;
        let t = simulator.t();
        if sim.record_trace {
            let exposure = ExposureVector::from_vec(simulator.last_exposure().to_vec())?;
            trace.push(StepRecord {
                t,
                user,
                ranking,
                exposure: Some(exposure),
            });
        }
        if t % sim.eval_every == 0 {
            snapshots.push(simulator.snapshot(None)?);
        }
    }
    let ops = simulator.ops();
    Ok(OnlineRun {
        trace,
        snapshots,
        state: simulator.into_state(),
        ops,
    })
}

pub const TRACE_HEADER: &str = "t,epoch,user,items";

/// Writes a trace CSV with user and item IDs from `loaded`. `epoch` is the
/// 1-based epoch the step falls in, and items are pipe-separated in rank
/// order.
pub fn write_trace_csv<T: Scalar, W: Write>(
    mut out: W,
    records: &[StepRecord<T>],
    loaded: &LoadedInstance<T>,
) -> std::io::Result<()> {
    let n = loaded.instance.n() as u64;
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        let items: Vec<&str> = r.ranking.items().iter().map(|&j| loaded.item_ids[j].as_str()).collect();
        writeln!(
            out,
            "{},{},{},{}",
            r.t,
            (r.t - 1) / n + 1,
            loaded.user_ids[r.user],
            items.join("|")
        )?;
    }
    Ok(())
}
