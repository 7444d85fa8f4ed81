//! Fair top-k ranking by online Frank-Wolfe.
//!
//! Users arrive one at a time, drawn from an unknown activity distribution.
//! Each request is answered with the top-k items of an approximate gradient
//! of a concave fairness-of-exposure objective, computed from running
//! averages in `O(m)` time. Over time the average exposures converge to the
//! optimum of the objective.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64` and `*F32` aliases fix the precision.
//!
//! ```
//! use offr::{desk_preset, run_online, ObjectiveConfig, ProblemInstanceF64, SimulationConfig};
//!
//! let inst: ProblemInstanceF64 = desk_preset();
//! let cfg = ObjectiveConfig::two_sided(1.0, 1.0, 0.0, 0.0).unwrap();
//! let sim = SimulationConfig::new(10 * inst.n() as u64, 42, inst.n() as u64).unwrap();
//! let run = run_online(&inst, &cfg, &sim).unwrap();
//! assert_eq!(run.snapshots.len(), 10);
//! ```

pub mod baselines;
pub mod dataio;
pub mod error;
pub mod estimators;
pub mod eval;
pub mod experiment;
pub mod objectives;
pub mod online;
pub mod problem;
pub mod scalar;
pub mod topk;

pub use baselines::{batch_fw_epoch, fairco_balanced_scores, fairco_scores, run_batch, BatchState};
pub use dataio::{
    desk_preset, load_instance, read_exposure_matrix, synth_instance, write_exposure_matrix, write_instance,
    LoadedInstance, Structure, WeightSpec,
};
pub use error::{Error, Result};
pub use estimators::{init_state, EstimatorState};
pub use eval::{
    quality_disparity, reference_optimum, regret, regret_for_log_scale, track_pi_hat, tradeoff_point, MetricSnapshot,
    PiHatTracker, TradeoffPoint,
};
pub use experiment::{run_experiment, Algorithm, ExperimentResult, ExperimentSpec, Schedule};
pub use objectives::{
    exact_normalized_gradient, objective_value, offr_scores, psi, psi_prime, ExposureMatrix, ExposureStats,
    GradientOracle, ObjectiveConfig, ObjectiveKind,
};
pub use online::{
    offr_step, run_online, OnlineSimulator, OpCounts, Pacing, Policy, SimulationConfig, StepRecord, UserSampler,
};
pub use problem::{
    dcg_weights, exposure_of_ranking, user_utility, ExposureVector, Groups, Matrix, ProblemInstance, Ranking,
};
pub use scalar::Scalar;
pub use topk::{top_k, TopK};

pub type ProblemInstanceF64 = ProblemInstance<f64>;
pub type ProblemInstanceF32 = ProblemInstance<f32>;
pub type ObjectiveConfigF64 = ObjectiveConfig<f64>;
pub type ObjectiveConfigF32 = ObjectiveConfig<f32>;
pub type EstimatorStateF64 = EstimatorState<f64>;
pub type EstimatorStateF32 = EstimatorState<f32>;
pub type ExposureMatrixF64 = ExposureMatrix<f64>;
pub type ExposureMatrixF32 = ExposureMatrix<f32>;
pub type MetricSnapshotF64 = MetricSnapshot<f64>;
pub type MetricSnapshotF32 = MetricSnapshot<f32>;
