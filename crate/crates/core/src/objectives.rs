//! Concave fairness-of-exposure objectives.
//!
//! Three objectives are supported, each a sum of a user term and an item
//! term over an exposure matrix `π` (row `i` = average exposure of every item
//! to user `i`):
//!
//! * **two-sided** welfare: `Σᵢ wᵢ ψ_α₁(uᵢ) + (β/m) Σⱼ ψ_α₂(vⱼ)`
//! * **quality-weighted** exposure: `Σᵢ wᵢ uᵢ − β √(η + (1/m) Σⱼ (q_avg vⱼ − qⱼ‖b‖₁/m)²)`
//! * **balanced** exposure to user groups:
//!   `Σᵢ wᵢ uᵢ − (β/m) Σⱼ √(η + Σₛ (v_{j|s} − v_{j|avg})²)`
//!
//! where `uᵢ = ⟨μᵢ, πᵢ⟩` and `vⱼ = Σᵢ wᵢ πᵢⱼ`.
//!
//! Two gradient paths exist. [`exact_normalized_gradient`] differentiates
//! `f` at an explicit `π` with the true activities. [`offr_scores`] evaluates
//! the same derivative from the online estimates in an [`EstimatorState`],
//! which is what the online ranker uses.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimators::EstimatorState;
use crate::problem::{Matrix, ProblemInstance};
use crate::scalar::{dot, sum_tolerance, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    TwoSided,
    QualityWeighted,
    BalancedExposure,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 3] = [
        ObjectiveKind::TwoSided,
        ObjectiveKind::QualityWeighted,
        ObjectiveKind::BalancedExposure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::TwoSided => "two-sided",
            ObjectiveKind::QualityWeighted => "quality-weighted",
            ObjectiveKind::BalancedExposure => "balanced",
        }
    }

    /// Whether a larger item objective (see [`crate::eval::tradeoff_point`])
    /// is better. Welfare is maximized; penalties are minimized.
    pub fn item_objective_higher_is_better(self) -> bool {
        matches!(self, ObjectiveKind::TwoSided)
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" | "twosided" | "welfare" => Ok(ObjectiveKind::TwoSided),
            "quality-weighted" | "quality" => Ok(ObjectiveKind::QualityWeighted),
            "balanced" | "balanced-exposure" => Ok(ObjectiveKind::BalancedExposure),
            other => Err(Error::Config(format!(
                "unknown objective {other:?} (expected two-sided, quality-weighted or balanced)"
            ))),
        }
    }
}

/// Objective selector and its parameters. `alpha1`/`alpha2` only matter for
/// [`ObjectiveKind::TwoSided`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveConfig<T> {
    kind: ObjectiveKind,
    beta: T,
    eta: T,
    alpha1: T,
    alpha2: T,
}

impl<T: Scalar> ObjectiveConfig<T> {
    pub fn new(kind: ObjectiveKind, beta: T, eta: T, alpha1: T, alpha2: T) -> Result<Self> {
        if !eta.is_finite() || eta <= T::zero() {
            return Err(Error::Config(format!("eta must be positive and finite, got {eta}")));
        }
        if !beta.is_finite() || beta < T::zero() {
            return Err(Error::Config(format!(
                "beta must be nonnegative and finite, got {beta}"
            )));
        }
        if kind == ObjectiveKind::TwoSided {
            for (name, a) in [("alpha1", alpha1), ("alpha2", alpha2)] {
                if !a.is_finite() || a >= T::one() {
                    return Err(Error::Config(format!("{name} must be finite and < 1, got {a}")));
                }
            }
        }
        Ok(ObjectiveConfig {
            kind,
            beta,
            eta,
            alpha1,
            alpha2,
        })
    }

    pub fn two_sided(beta: T, eta: T, alpha1: T, alpha2: T) -> Result<Self> {
        Self::new(ObjectiveKind::TwoSided, beta, eta, alpha1, alpha2)
    }

    pub fn quality_weighted(beta: T, eta: T) -> Result<Self> {
        Self::new(ObjectiveKind::QualityWeighted, beta, eta, T::zero(), T::zero())
    }

    pub fn balanced(beta: T, eta: T) -> Result<Self> {
        Self::new(ObjectiveKind::BalancedExposure, beta, eta, T::zero(), T::zero())
    }

    /// Same objective with a different fairness weight.
    pub fn with_beta(self, beta: T) -> Result<Self> {
        Self::new(self.kind, beta, self.eta, self.alpha1, self.alpha2)
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    pub fn alpha1(&self) -> T {
        self.alpha1
    }

    pub fn alpha2(&self) -> T {
        self.alpha2
    }

    /// Checks that the instance carries what this objective needs.
    pub fn check(&self, inst: &ProblemInstance<T>) -> Result<()> {
        if self.kind == ObjectiveKind::BalancedExposure && inst.groups().is_none_or(|g| g.is_empty()) {
            return Err(Error::MissingGroups);
        }
        Ok(())
    }
}

/// `ψ_α(x)`: `sign(α)(η+x)^α`, or `log(η+x)` when `α = 0`.
pub fn psi<T: Scalar>(alpha: T, eta: T, x: T) -> T {
    if alpha == T::zero() {
        (eta + x).ln()
    } else {
        alpha.signum() * (eta + x).powf(alpha)
    }
}

/// `ψ'_α(x) = |α|(η+x)^(α−1)`, which is `1/(η+x)` at `α = 0`.
pub fn psi_prime<T: Scalar>(alpha: T, eta: T, x: T) -> T {
    if alpha == T::zero() {
        (eta + x).recip()
    } else {
        alpha.abs() * (eta + x).powf(alpha - T::one())
    }
}

/// Average exposure matrix: every row lies in the convex hull of induced
/// exposure vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureMatrix<T>(Matrix<T>);

impl<T: Scalar> ExposureMatrix<T> {
    /// Validates `pi` against the instance: nonnegative rows summing to
    /// `‖b‖₁` with no entry above `b₁`.
    pub fn new(pi: Matrix<T>, inst: &ProblemInstance<T>) -> Result<Self> {
        if pi.rows() != inst.n() || pi.cols() != inst.m() {
            return Err(Error::Dimension {
                what: "exposure matrix rows x cols",
                got: pi.rows() * pi.cols(),
                expected: inst.n() * inst.m(),
            });
        }
        let tol = sum_tolerance::<T>(1e-9, inst.m());
        let cap = inst.b()[0] + tol;
        for (i, row) in pi.iter_rows().enumerate() {
            if let Some(j) = row.iter().position(|&x| !(x >= T::zero() && x <= cap)) {
                return Err(Error::Argument(format!("pi[{i}][{j}] = {} is outside [0, b1]", row[j])));
            }
            let total: T = row.iter().copied().sum();
            if (total - inst.b_norm()).abs() > tol {
                return Err(Error::Argument(format!(
                    "row {i} of pi sums to {total}, expected {}",
                    inst.b_norm()
                )));
            }
        }
        Ok(ExposureMatrix(pi))
    }

    /// Every row equal to the exposure profile of a uniformly random top-k
    /// ranking, `‖b‖₁/m` per item.
    pub fn uniform(inst: &ProblemInstance<T>) -> Self {
        let value = inst.b_norm() / T::of_usize(inst.m());
        ExposureMatrix(Matrix::filled(inst.n(), inst.m(), value))
    }

    /// Wraps `pi` checking only its shape. The objectives are defined for
    /// any nonnegative matrix, so points off the exposure polytope are
    /// useful for finite differences.
    pub fn new_unchecked(pi: Matrix<T>, inst: &ProblemInstance<T>) -> Result<Self> {
        if pi.rows() != inst.n() || pi.cols() != inst.m() {
            return Err(Error::Dimension {
                what: "exposure matrix rows x cols",
                got: pi.rows() * pi.cols(),
                expected: inst.n() * inst.m(),
            });
        }
        Ok(ExposureMatrix(pi))
    }

    pub(crate) fn from_trusted(pi: Matrix<T>) -> Self {
        ExposureMatrix(pi)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.0.row(i)
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [T] {
        self.0.row_mut(i)
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }
}

/// Utilities and exposures of an exposure matrix under the true activities.
#[derive(Debug, Clone)]
pub struct ExposureStats<T> {
    /// `uᵢ(π)`, length n.
    pub utility: Vec<T>,
    /// `vⱼ(π)`, length m.
    pub exposure: Vec<T>,
    /// `qⱼ = Σᵢ wᵢ μᵢⱼ`, length m.
    pub quality: Vec<T>,
    pub quality_avg: T,
    /// `w̄ₛ`, total activity of each group.
    pub group_mass: Vec<T>,
    /// `v_{j|s}`, one row per group; zero for groups without activity.
    pub group_exposure: Matrix<T>,
    /// `v_{j|avg}`, length m.
    pub group_exposure_avg: Vec<T>,
}

impl<T: Scalar> ExposureStats<T> {
    pub fn new(pi: &ExposureMatrix<T>, inst: &ProblemInstance<T>) -> Result<Self> {
        let (n, m) = (inst.n(), inst.m());
        if pi.matrix().rows() != n || pi.matrix().cols() != m {
            return Err(Error::Dimension {
                what: "exposure matrix rows x cols",
                got: pi.matrix().rows() * pi.matrix().cols(),
                expected: n * m,
            });
        }
        let w = inst.w();
        let mut utility = Vec::with_capacity(n);
        let mut exposure = vec![T::zero(); m];
        let mut quality = vec![T::zero(); m];
        for (i, &wi) in w.iter().enumerate() {
            let (row, mu) = (pi.row(i), inst.mu_row(i));
            utility.push(dot(mu, row));
            for ((e, q), (&p, &u)) in exposure.iter_mut().zip(quality.iter_mut()).zip(row.iter().zip(mu)) {
                *e = *e + wi * p;
                *q = *q + wi * u;
            }
        }
        let quality_avg = quality.iter().copied().sum::<T>() / T::of_usize(m);

        let n_groups = inst.groups().map_or(0, |g| g.len());
        let mut group_mass = vec![T::zero(); n_groups];
        let mut group_exposure = Matrix::zeros(n_groups, m);
        let mut group_exposure_avg = vec![T::zero(); m];
        if let Some(groups) = inst.groups() {
            for (s, members) in groups.all().iter().enumerate() {
                let mass: T = members.iter().map(|&i| w[i]).sum();
                group_mass[s] = mass;
                if mass > T::zero() {
                    let out = group_exposure.row_mut(s);
                    for &i in members {
                        let share = w[i] / mass;
                        for (o, &p) in out.iter_mut().zip(pi.row(i)) {
                            *o = *o + share * p;
                        }
                    }
                }
            }
            let count = T::of_usize(n_groups.max(1));
            for row in group_exposure.iter_rows() {
                for (a, &x) in group_exposure_avg.iter_mut().zip(row) {
                    *a = *a + x / count;
                }
            }
        }
        Ok(ExposureStats {
            utility,
            exposure,
            quality,
            quality_avg,
            group_mass,
            group_exposure,
            group_exposure_avg,
        })
    }

    /// `Σᵢ wᵢ uᵢ(π)`.
    pub fn mean_utility(&self, w: &[T]) -> T {
        dot(w, &self.utility)
    }
}

/// `q_avg vⱼ − qⱼ ‖b‖₁/m` for every item. Total exposure is `‖b‖₁`, so the
/// gaps all vanish exactly when exposure is proportional to quality.
pub(crate) fn quality_gaps<'a, T: Scalar>(
    exposure: &'a [T],
    quality: &'a [T],
    quality_avg: T,
    b_norm: T,
) -> impl Iterator<Item = T> + 'a {
    let share = b_norm / T::of_usize(exposure.len());
    exposure
        .iter()
        .zip(quality)
        .map(move |(&v, &q)| quality_avg * v - q * share)
}

/// Root-mean-square quality gap under smoothing `eta`:
/// `√(η + (1/m) Σⱼ gapⱼ²)`.
pub(crate) fn quality_penalty<T: Scalar>(exposure: &[T], quality: &[T], quality_avg: T, b_norm: T, eta: T) -> T {
    let m = T::of_usize(exposure.len());
    let sq: T = quality_gaps(exposure, quality, quality_avg, b_norm)
        .map(|x| x * x)
        .sum();
    (eta + sq / m).sqrt()
}

/// Per-item `√(η + Σₛ (v_{j|s} − v_{j|avg})²)`.
pub(crate) fn balance_norms<T: Scalar>(group_exposure: &Matrix<T>, avg: &[T], eta: T) -> Vec<T> {
    let mut acc = vec![eta; avg.len()];
    for row in group_exposure.iter_rows() {
        for ((a, &x), &mean) in acc.iter_mut().zip(row).zip(avg) {
            let d = x - mean;
            *a = *a + d * d;
        }
    }
    acc.iter_mut().for_each(|a| *a = a.sqrt());
    acc
}

/// `f(π)` with the true activities of `inst`.
pub fn objective_value<T: Scalar>(
    pi: &ExposureMatrix<T>,
    inst: &ProblemInstance<T>,
    cfg: &ObjectiveConfig<T>,
) -> Result<T> {
    cfg.check(inst)?;
    let stats = ExposureStats::new(pi, inst)?;
    Ok(objective_from_stats(&stats, inst, cfg))
}

pub(crate) fn objective_from_stats<T: Scalar>(
    stats: &ExposureStats<T>,
    inst: &ProblemInstance<T>,
    cfg: &ObjectiveConfig<T>,
) -> T {
    let m = T::of_usize(inst.m());
    let w = inst.w();
    match cfg.kind {
        ObjectiveKind::TwoSided => {
            let users: T = w
                .iter()
                .zip(&stats.utility)
                .map(|(&wi, &u)| wi * psi(cfg.alpha1, cfg.eta, u))
                .sum();
            let items: T = stats.exposure.iter().map(|&v| psi(cfg.alpha2, cfg.eta, v)).sum();
            users + cfg.beta / m * items
        }
        ObjectiveKind::QualityWeighted => {
            stats.mean_utility(w)
                - cfg.beta
                    * quality_penalty(
                        &stats.exposure,
                        &stats.quality,
                        stats.quality_avg,
                        inst.b_norm(),
                        cfg.eta,
                    )
        }
        ObjectiveKind::BalancedExposure => {
            let norms = balance_norms(&stats.group_exposure, &stats.group_exposure_avg, cfg.eta);
            stats.mean_utility(w) - cfg.beta / m * norms.into_iter().sum::<T>()
        }
    }
}

/// Precomputed state for evaluating `(1/wᵢ) ∂f/∂πᵢ` for many users at one `π`.
#[derive(Debug)]
pub struct GradientOracle<'a, T> {
    inst: &'a ProblemInstance<T>,
    cfg: ObjectiveConfig<T>,
    stats: ExposureStats<T>,
    quality_z: T,
    balance_z: Vec<T>,
}

impl<'a, T: Scalar> GradientOracle<'a, T> {
    pub fn new(pi: &ExposureMatrix<T>, inst: &'a ProblemInstance<T>, cfg: &ObjectiveConfig<T>) -> Result<Self> {
        cfg.check(inst)?;
        let stats = ExposureStats::new(pi, inst)?;
        let mut quality_z = T::one();
        let mut balance_z = Vec::new();
        match cfg.kind {
            ObjectiveKind::TwoSided => {}
            ObjectiveKind::QualityWeighted => {
                quality_z = quality_penalty(
                    &stats.exposure,
                    &stats.quality,
                    stats.quality_avg,
                    inst.b_norm(),
                    cfg.eta,
                );
            }
            ObjectiveKind::BalancedExposure => {
                balance_z = balance_norms(&stats.group_exposure, &stats.group_exposure_avg, cfg.eta);
            }
        }
        Ok(GradientOracle {
            inst,
            cfg: *cfg,
            stats,
            quality_z,
            balance_z,
        })
    }

    pub fn stats(&self) -> &ExposureStats<T> {
        &self.stats
    }

    pub fn objective(&self) -> T {
        objective_from_stats(&self.stats, self.inst, &self.cfg)
    }

    /// Writes `gᵢ(π)` into `out` (length m).
    pub fn gradient_into(&self, i: usize, out: &mut [T]) -> Result<()> {
        let inst = self.inst;
        if i >= inst.n() {
            return Err(Error::Argument(format!("user {i} out of range for n={}", inst.n())));
        }
        if out.len() != inst.m() {
            return Err(Error::Dimension {
                what: "gradient buffer",
                got: out.len(),
                expected: inst.m(),
            });
        }
        if inst.w()[i] <= T::zero() {
            return Err(Error::DegenerateUser(i));
        }
        let mu = inst.mu_row(i);
        let cfg = &self.cfg;
        let s = &self.stats;
        match cfg.kind {
            ObjectiveKind::TwoSided => two_sided_scores(out, mu, s.utility[i], &s.exposure, cfg),
            ObjectiveKind::QualityWeighted => {
                // d/dπᵢⱼ of the penalty carries the chain-rule factor q_avg.
                let scale = cfg.beta * s.quality_avg / (T::of_usize(inst.m()) * self.quality_z);
                let gaps = quality_gaps(&s.exposure, &s.quality, s.quality_avg, inst.b_norm());
                for ((o, &x), gap) in out.iter_mut().zip(mu).zip(gaps) {
                    *o = x - scale * gap;
                }
            }
            ObjectiveKind::BalancedExposure => {
                out.copy_from_slice(mu);
                let groups = inst.groups().ok_or(Error::MissingGroups)?;
                let m = T::of_usize(inst.m());
                for &g in groups.of_user(i) {
                    // wᵢ > 0 and i ∈ g, so the group mass is positive.
                    let factor = cfg.beta / (m * s.group_mass[g]);
                    let row = s.group_exposure.row(g);
                    for (j, o) in out.iter_mut().enumerate() {
                        *o = *o - factor * (row[j] - s.group_exposure_avg[j]) / self.balance_z[j];
                    }
                }
            }
        }
        Ok(())
    }

    pub fn gradient(&self, i: usize) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.inst.m()];
        self.gradient_into(i, &mut out)?;
        Ok(out)
    }
}

/// `gᵢ(π) = (1/wᵢ) ∂f/∂πᵢ`, differentiated analytically with the true
/// activities.
pub fn exact_normalized_gradient<T: Scalar>(
    pi: &ExposureMatrix<T>,
    i: usize,
    inst: &ProblemInstance<T>,
    cfg: &ObjectiveConfig<T>,
) -> Result<Vec<T>> {
    if i < inst.n() && inst.w()[i] <= T::zero() {
        return Err(Error::DegenerateUser(i));
    }
    GradientOracle::new(pi, inst, cfg)?.gradient(i)
}

/// `ψ'_α₁(uᵢ) μᵢⱼ + (β/m) ψ'_α₂(vⱼ)`.
pub(crate) fn two_sided_scores<T: Scalar>(
    out: &mut [T],
    mu: &[T],
    utility: T,
    exposure: &[T],
    cfg: &ObjectiveConfig<T>,
) {
    let user_weight = psi_prime(cfg.alpha1, cfg.eta, utility);
    let item_weight = cfg.beta / T::of_usize(mu.len());
    for ((o, &x), &v) in out.iter_mut().zip(mu).zip(exposure) {
        *o = user_weight * x + item_weight * psi_prime(cfg.alpha2, cfg.eta, v);
    }
}

/// Approximate normalized gradient for user `i` at step `t`, computed only
/// from online estimates (the state after step `t − 1`).
pub fn offr_scores<T: Scalar>(
    i: usize,
    state: &EstimatorState<T>,
    inst: &ProblemInstance<T>,
    cfg: &ObjectiveConfig<T>,
    t: u64,
) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); inst.m()];
    offr_scores_into(&mut out, i, state, inst, cfg, t)?;
    Ok(out)
}

/// Buffer-reusing form of [`offr_scores`]. Returns the number of scalar
/// terms evaluated, for cost accounting.
pub fn offr_scores_into<T: Scalar>(
    out: &mut [T],
    i: usize,
    state: &EstimatorState<T>,
    inst: &ProblemInstance<T>,
    cfg: &ObjectiveConfig<T>,
    t: u64,
) -> Result<u64> {
    state.check_compatible(inst)?;
    if i >= inst.n() {
        return Err(Error::Argument(format!("user {i} out of range for n={}", inst.n())));
    }
    if out.len() != inst.m() {
        return Err(Error::Dimension {
            what: "score buffer",
            got: out.len(),
            expected: inst.m(),
        });
    }
    let m = inst.m();
    let mu = inst.mu_row(i);
    let v_hat = state.v_hat();
    match cfg.kind {
        ObjectiveKind::TwoSided => {
            two_sided_scores(out, mu, state.u_hat()[i], v_hat, cfg);
            Ok(m as u64)
        }
        ObjectiveKind::QualityWeighted => {
            let q_hat = state.q_hat();
            let q_avg = state.q_avg_hat();
            let z = quality_penalty(v_hat, q_hat, q_avg, inst.b_norm(), cfg.eta);
            let scale = cfg.beta * q_avg / (T::of_usize(m) * z);
            for (o, (&x, gap)) in out
                .iter_mut()
                .zip(mu.iter().zip(quality_gaps(v_hat, q_hat, q_avg, inst.b_norm())))
            {
                *o = x - scale * gap;
            }
            Ok(2 * m as u64)
        }
        ObjectiveKind::BalancedExposure => {
            cfg.check(inst)?;
            let groups = inst.groups().ok_or(Error::MissingGroups)?;
            let gv = state.v_hat_group();
            let avg = state.v_hat_group_avg();
            out.copy_from_slice(mu);
            let mine = groups.of_user(i);
            if !mine.is_empty() {
                let z = balance_norms(gv, &avg, cfg.eta);
                let base = cfg.beta / T::of_usize(m);
                for &g in mine {
                    // t / (c_s + 1) estimates 1 / w̄ₛ and stays finite for unseen groups.
                    let factor = base * T::of_u64(t) / T::of_u64(state.group_counts()[g] + 1);
                    let row = gv.row(g);
                    for (j, o) in out.iter_mut().enumerate() {
                        *o = *o - factor * (row[j] - avg[j]) / z[j];
                    }
                }
            }
            Ok(((2 + 2 * groups.len() + mine.len()) * m) as u64)
        }
    }
}
