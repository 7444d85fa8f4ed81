//! Ground-truth evaluation with the true activities: explicit average
//! exposures `π̂`, objective values, regret and user/item trade-off points.

use std::io::Write;

use crate::error::{Error, Result};
use crate::objectives::{
    balance_norms, objective_from_stats, psi, quality_penalty, ExposureMatrix, ExposureStats, ObjectiveConfig,
    ObjectiveKind,
};
use crate::problem::{ExposureVector, Matrix, ProblemInstance};
use crate::scalar::Scalar;

/// Smallest regret reported by [`regret_for_log_scale`].
pub const REGRET_FLOOR: f64 = 1e-12;

/// Incrementally maintained `π̂`: row i is the mean exposure vector over the
/// steps that served user i, or the uniform profile `‖b‖₁/m` if i was never
/// served. Costs `O(nm)` memory, so only evaluation runs keep one.
#[derive(Debug, Clone)]
pub struct PiHatTracker<T> {
    pi: Matrix<T>,
    counts: Vec<u64>,
}

impl<T: Scalar> PiHatTracker<T> {
    pub fn new(inst: &ProblemInstance<T>) -> Self {
        PiHatTracker {
            pi: ExposureMatrix::uniform(inst).into_matrix(),
            counts: vec![0; inst.n()],
        }
    }

    pub fn record(&mut self, user: usize, a: &[T]) {
        self.counts[user] += 1;
        let row = self.pi.row_mut(user);
        if self.counts[user] == 1 {
            row.copy_from_slice(a);
        } else {
            let step = T::of_u64(self.counts[user]).recip();
            for (p, &x) in row.iter_mut().zip(a) {
                *p = *p + (x - *p) * step;
            }
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn pi_hat(&self) -> ExposureMatrix<T> {
        ExposureMatrix::from_trusted(self.pi.clone())
    }
}

/// `π̂` recomputed from a full log of `(user, exposure)` steps.
pub fn track_pi_hat<T: Scalar>(
    inst: &ProblemInstance<T>,
    log: &[(usize, ExposureVector<T>)],
) -> Result<ExposureMatrix<T>> {
    let (n, m) = (inst.n(), inst.m());
    let mut sums = Matrix::<T>::zeros(n, m);
    let mut counts = vec![0u64; n];
    for (step, (user, a)) in log.iter().enumerate() {
        if *user >= n || a.as_slice().len() != m {
            return Err(Error::Argument(format!("log entry {step} does not fit the instance")));
        }
        counts[*user] += 1;
        for (s, &x) in sums.row_mut(*user).iter_mut().zip(a.as_slice()) {
            *s = *s + x;
        }
    }
    let mut pi = ExposureMatrix::uniform(inst).into_matrix();
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 {
            let c = T::of_u64(c);
            for (p, &s) in pi.row_mut(i).iter_mut().zip(sums.row(i)) {
                *p = s / c;
            }
        }
    }
    Ok(ExposureMatrix::from_trusted(pi))
}

/// `reference − value`.
pub fn regret<T: Scalar>(value: T, reference: T) -> T {
    reference - value
}

/// Regret clipped from below at [`REGRET_FLOOR`], for log-scale plots.
pub fn regret_for_log_scale<T: Scalar>(value: T, reference: T) -> T {
    regret(value, reference).max(T::of(REGRET_FLOOR))
}

/// Reference optimum: the best value reached by any long run.
pub fn reference_optimum<T: Scalar>(values: impl IntoIterator<Item = T>) -> Option<T> {
    values
        .into_iter()
        .fold(None, |best, x| Some(best.map_or(x, |b: T| b.max(x))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint<T> {
    /// Two-sided: `Σ wᵢ ψ_α₁(uᵢ)`; otherwise mean user utility `Σ wᵢ uᵢ`.
    pub user_objective: T,
    /// Two-sided: `(1/m) Σ ψ_α₂(vⱼ)` (higher is better); otherwise the
    /// fairness penalty with `η = 0` and `β` factored out (lower is better).
    pub item_objective: T,
}

pub fn tradeoff_point<T: Scalar>(
    pi: &ExposureMatrix<T>,
    inst: &ProblemInstance<T>,
    cfg: &ObjectiveConfig<T>,
) -> Result<TradeoffPoint<T>> {
    cfg.check(inst)?;
    let stats = ExposureStats::new(pi, inst)?;
    Ok(tradeoff_from_stats(&stats, inst, cfg))
}

fn tradeoff_from_stats<T: Scalar>(
    stats: &ExposureStats<T>,
    inst: &ProblemInstance<T>,
    cfg: &ObjectiveConfig<T>,
) -> TradeoffPoint<T> {
    let w = inst.w();
    let m = T::of_usize(inst.m());
    match cfg.kind() {
        ObjectiveKind::TwoSided => TradeoffPoint {
            user_objective: w
                .iter()
                .zip(&stats.utility)
                .map(|(&wi, &u)| wi * psi(cfg.alpha1(), cfg.eta(), u))
                .sum(),
            item_objective: stats
                .exposure
                .iter()
                .map(|&v| psi(cfg.alpha2(), cfg.eta(), v))
                .sum::<T>()
                / m,
        },
        ObjectiveKind::QualityWeighted => TradeoffPoint {
            user_objective: stats.mean_utility(w),
            item_objective: quality_penalty(
                &stats.exposure,
                &stats.quality,
                stats.quality_avg,
                inst.b_norm(),
                T::zero(),
            ),
        },
        ObjectiveKind::BalancedExposure => TradeoffPoint {
            user_objective: stats.mean_utility(w),
            item_objective: balance_norms(&stats.group_exposure, &stats.group_exposure_avg, T::zero())
                .into_iter()
                .sum::<T>()
                / m,
        },
    }
}

/// Mean over ordered pairs `j ≠ j'` of `|vⱼ/qⱼ − v_{j'}/q_{j'}|`, with the
/// ratio taken as 0 when `qⱼ = 0`.
pub fn quality_disparity<T: Scalar>(exposure: &[T], quality: &[T]) -> T {
    let m = exposure.len();
    if m < 2 {
        return T::zero();
    }
    let mut ratios: Vec<T> = exposure
        .iter()
        .zip(quality)
        .map(|(&v, &q)| if q > T::zero() { v / q } else { T::zero() })
        .collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    // Σ_{j<j'} (r_(j') − r_(j)) over sorted ratios, counted twice for ordered pairs.
    let total: T = ratios
        .iter()
        .enumerate()
        .map(|(idx, &r)| r * T::of(2.0 * idx as f64 + 1.0 - m as f64))
        .sum();
    T::of(2.0) * total / T::of_usize(m * (m - 1))
}

/// One evaluation point of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSnapshot<T> {
    pub t: u64,
    pub epoch: u64,
    pub objective: T,
    pub user_objective: T,
    pub item_objective: T,
    pub mean_user_utility: T,
    pub regret: Option<T>,
    /// Balanced exposure only: `(1/m) Σⱼ |v_{j|s} − v_{j|avg}|` per group.
    pub group_disparity: Option<Vec<T>>,
}

impl<T: Scalar> MetricSnapshot<T> {
    /// Evaluates `pi` at step `t`. Fails with [`Error::NonFinite`] if any
    /// metric is not finite.
    pub fn compute(
        t: u64,
        pi: &ExposureMatrix<T>,
        inst: &ProblemInstance<T>,
        cfg: &ObjectiveConfig<T>,
        reference: Option<T>,
    ) -> Result<Self> {
        cfg.check(inst)?;
        let stats = ExposureStats::new(pi, inst)?;
        let objective = objective_from_stats(&stats, inst, cfg);
        let point = tradeoff_from_stats(&stats, inst, cfg);
        let group_disparity = (cfg.kind() == ObjectiveKind::BalancedExposure).then(|| {
            stats
                .group_exposure
                .iter_rows()
                .map(|row| {
                    row.iter()
                        .zip(&stats.group_exposure_avg)
                        .map(|(&x, &a)| (x - a).abs())
                        .sum::<T>()
                        / T::of_usize(inst.m())
                })
                .collect::<Vec<T>>()
        });
        let snap = MetricSnapshot {
            t,
            epoch: t / inst.n() as u64,
            objective,
            user_objective: point.user_objective,
            item_objective: point.item_objective,
            mean_user_utility: stats.mean_utility(inst.w()),
            regret: reference.map(|r| regret(objective, r)),
            group_disparity,
        };
        snap.check_finite()?;
        Ok(snap)
    }

    fn check_finite(&self) -> Result<()> {
        let fields = [
            ("objective", Some(self.objective)),
            ("user objective", Some(self.user_objective)),
            ("item objective", Some(self.item_objective)),
            ("mean user utility", Some(self.mean_user_utility)),
            ("regret", self.regret),
        ];
        for (name, value) in fields {
            if value.is_some_and(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    t: self.t,
                    what: format!("{name} is {}", value.unwrap()),
                });
            }
        }
        Ok(())
    }
}

/// Fills in `regret` for every snapshot against `reference`.
pub fn attach_regret<T: Scalar>(snapshots: &mut [MetricSnapshot<T>], reference: T) {
    for s in snapshots {
        s.regret = Some(regret(s.objective, reference));
    }
}

pub const METRICS_HEADER: &str = "t,epoch,objective,user_obj,item_obj,regret,mean_utility";

/// Writes the metrics CSV: fixed header, one row per snapshot, empty
/// `regret` cell when no reference was set.
pub fn write_metrics_csv<T: Scalar, W: Write>(mut out: W, snapshots: &[MetricSnapshot<T>]) -> std::io::Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for s in snapshots {
        let regret = s.regret.map(|r| r.as_f64().to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.t,
            s.epoch,
            s.objective.as_f64(),
            s.user_objective.as_f64(),
            s.item_objective.as_f64(),
            regret,
            s.mean_user_utility.as_f64()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{dcg_weights, exposure_of_ranking, Ranking};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn tracker_averages_per_user() {
        let mu = Matrix::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        let inst = ProblemInstance::with_uniform_activity(vec![1.0], mu, None).unwrap();
        let mut tr = PiHatTracker::new(&inst);
        assert_eq!(tr.pi_hat().row(1), &[0.5, 0.5]);
        tr.record(0, &[1.0, 0.0]);
        assert_eq!(tr.pi_hat().row(0), &[1.0, 0.0]);
        tr.record(0, &[0.0, 1.0]);
        assert_eq!(tr.pi_hat().row(0), &[0.5, 0.5]);
        assert_eq!(tr.pi_hat().row(1), &[0.5, 0.5]);
    }

    #[test]
    fn incremental_tracking_matches_log_replay() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
        let (n, m, k) = (7, 9, 3);
        let mu = Matrix::from_vec(n, m, (0..n * m).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let inst = ProblemInstance::with_uniform_activity(dcg_weights(k), mu, None).unwrap();
        let mut tr = PiHatTracker::new(&inst);
        let mut log = Vec::new();
        for _ in 0..1000 {
            let mut items: Vec<usize> = (0..m).collect();
            items.shuffle(&mut rng);
            items.truncate(k);
            let a = exposure_of_ranking(&Ranking::new(items, m).unwrap(), inst.b(), m).unwrap();
            let user = rng.gen_range(0..n);
            tr.record(user, a.as_slice());
            log.push((user, a));
        }
        let replay = track_pi_hat(&inst, &log).unwrap();
        for i in 0..n {
            for (x, y) in tr.pi_hat().row(i).iter().zip(replay.row(i)) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
        ExposureMatrix::new(replay.into_matrix(), &inst).unwrap();
    }

    #[test]
    fn regret_basics() {
        assert_eq!(regret(1.5, 1.5), 0.0);
        assert_eq!(regret(1.0, 1.5), 0.5);
        assert_eq!(regret_for_log_scale(2.0, 1.5), 1e-12);
        assert_eq!(reference_optimum([0.3, 0.9, 0.5]), Some(0.9));
        assert_eq!(reference_optimum(Vec::<f64>::new()), None);
    }

    #[test]
    fn proportional_exposure_has_zero_quality_penalty() {
        let mu = Matrix::from_rows(&[vec![0.6, 0.2, 0.2], vec![0.6, 0.2, 0.2]]).unwrap();
        let inst = ProblemInstance::with_uniform_activity(vec![0.6, 0.4], mu, None).unwrap();
        let row = vec![0.6, 0.2, 0.2];
        let pi = ExposureMatrix::new(Matrix::from_rows(&[row.clone(), row]).unwrap(), &inst).unwrap();
        let p: TradeoffPoint<f64> =
            tradeoff_point(&pi, &inst, &ObjectiveConfig::quality_weighted(1.0, 1.0).unwrap()).unwrap();
        assert!(p.item_objective.abs() < 1e-12);
        assert!((p.user_objective - 0.44).abs() < 1e-12);
    }

    #[test]
    fn single_group_is_perfectly_balanced() {
        let mu = Matrix::from_rows(&[vec![0.6, 0.2, 0.1], vec![0.1, 0.2, 0.9]]).unwrap();
        let inst = ProblemInstance::with_uniform_activity(vec![1.0], mu, Some(vec![vec![0, 1]])).unwrap();
        let pi = ExposureMatrix::new(
            Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap(),
            &inst,
        )
        .unwrap();
        let p = tradeoff_point(&pi, &inst, &ObjectiveConfig::balanced(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(p.item_objective, 0.0);
    }

    #[test]
    fn disparity_matches_pairwise_definition() {
        let v = [0.3, 0.1, 0.0, 0.6];
        let q = [0.5, 0.2, 0.0, 0.3];
        let r: Vec<f64> = v
            .iter()
            .zip(&q)
            .map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 })
            .collect();
        let mut brute = 0.0;
        for a in &r {
            for b in &r {
                brute += (a - b).abs();
            }
        }
        brute /= 12.0;
        assert!((quality_disparity(&v, &q) - brute).abs() < 1e-15);
        assert_eq!(quality_disparity(&[1.0], &[1.0]), 0.0);
    }

    #[test]
    fn snapshot_rejects_non_finite() {
        let mu = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let inst = ProblemInstance::new(vec![1.0], mu, vec![1.0], None).unwrap();
        let pi = ExposureMatrix::uniform(&inst);
        let cfg = ObjectiveConfig::two_sided(1.0, 1.0, 0.0, 0.0).unwrap();
        let s = MetricSnapshot::compute(3, &pi, &inst, &cfg, Some(10.0)).unwrap();
        assert_eq!(s.epoch, 3);
        assert!(s.regret.unwrap() > 0.0);
        let e = MetricSnapshot::compute(3, &pi, &inst, &cfg, Some(f64::INFINITY)).unwrap_err();
        assert!(matches!(e, Error::NonFinite { t: 3, .. }));
    }

    #[test]
    fn metrics_csv_layout() {
        let snap = MetricSnapshot {
            t: 10,
            epoch: 2,
            objective: 1.5,
            user_objective: 1.0,
            item_objective: 0.25,
            mean_user_utility: 0.75,
            regret: None,
            group_disparity: None,
        };
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &[snap]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,epoch,objective,user_obj,item_obj,regret,mean_utility\n10,2,1.5,1,0.25,,0.75\n"
        );
    }
}
