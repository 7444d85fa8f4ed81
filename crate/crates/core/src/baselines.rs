//! Reference algorithms: batch Frank-Wolfe over an explicit exposure matrix
//! and the FairCo controllers.

use crate::error::{Error, Result};
use crate::estimators::EstimatorState;
use crate::objectives::{ExposureMatrix, GradientOracle, ObjectiveConfig};
use crate::problem::ProblemInstance;
use crate::scalar::Scalar;
use crate::topk::TopK;

/// Batch Frank-Wolfe iterate. Starts from the uniform profile `‖b‖₁/m`.
#[derive(Debug, Clone)]
pub struct BatchState<T> {
    pi: ExposureMatrix<T>,
    iteration: u64,
}

impl<T: Scalar> BatchState<T> {
    pub fn new(inst: &ProblemInstance<T>) -> Self {
        BatchState {
            pi: ExposureMatrix::uniform(inst),
            iteration: 0,
        }
    }

    pub fn pi(&self) -> &ExposureMatrix<T> {
        &self.pi
    }

    /// Completed epochs.
    pub fn iteration(&self) -> u64 {
        self.iteration
    }
}

/// One Frank-Wolfe epoch with the true activities: every user with
/// `wᵢ > 0` moves toward the exposure of the top-k of its exact gradient,
/// with step `2/(τ+2)`. Users with zero activity do not affect the
/// objective and keep their row.
pub fn batch_fw_epoch<T: Scalar>(
    state: &mut BatchState<T>,
    inst: &ProblemInstance<T>,
    cfg: &ObjectiveConfig<T>,
) -> Result<()> {
    let oracle = GradientOracle::new(&state.pi, inst, cfg)?;
    let gamma = T::of(2.0) / T::of_u64(state.iteration + 2);
    let keep = T::one() - gamma;
    let mut grad = vec![T::zero(); inst.m()];
    let mut topk = TopK::new();
    let b = inst.b();
    // The oracle holds aggregate statistics, so rows can be moved in place.
    for i in 0..inst.n() {
        if inst.w()[i] <= T::zero() {
            continue;
        }
        oracle.gradient_into(i, &mut grad)?;
        if let Some(j) = grad.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                t: state.iteration + 1,
                what: format!("gradient of user {i} at item {j}"),
            });
        }
        let sigma = topk.select(&grad, inst.k())?;
        let row = state.pi.row_mut(i);
        row.iter_mut().for_each(|p| *p = *p * keep);
        for (&j, &bk) in sigma.items().iter().zip(b) {
            row[j] = row[j] + gamma * bk;
        }
    }
    state.iteration += 1;
    Ok(())
}

/// Runs `epochs` batch epochs and returns the final objective value.
pub fn run_batch<T: Scalar>(
    inst: &ProblemInstance<T>,
    cfg: &ObjectiveConfig<T>,
    epochs: u64,
) -> Result<(BatchState<T>, T)> {
    let mut state = BatchState::new(inst);
    for _ in 0..epochs {
        batch_fw_epoch(&mut state, inst, cfg)?;
    }
    let value = crate::objectives::objective_value(&state.pi, inst, cfg)?;
    Ok((state, value))
}

/// FairCo score `μᵢⱼ + β(t−1) max_{j'}(v̂_{j'}/q̂_{j'} − v̂ⱼ/q̂ⱼ)` for step `t`.
pub fn fairco_scores<T: Scalar>(
    i: usize,
    state: &EstimatorState<T>,
    inst: &ProblemInstance<T>,
    beta: T,
    t: u64,
) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); inst.m()];
    fairco_scores_into(&mut out, i, state, inst, beta, t)?;
    Ok(out)
}

/// Buffer-reusing form of [`fairco_scores`]; returns the scalar terms evaluated.
pub fn fairco_scores_into<T: Scalar>(
    out: &mut [T],
    i: usize,
    state: &EstimatorState<T>,
    inst: &ProblemInstance<T>,
    beta: T,
    t: u64,
) -> Result<u64> {
    check_call(out, i, state, inst, t)?;
    let ratio = |v: T, q: T| if q > T::zero() { v / q } else { T::zero() };
    let (v_hat, q_hat) = (state.v_hat(), state.q_hat());
    let max = v_hat
        .iter()
        .zip(q_hat)
        .map(|(&v, &q)| ratio(v, q))
        .fold(T::neg_infinity(), T::max);
    let scale = beta * T::of_u64(t - 1);
    for ((o, &mu), (&v, &q)) in out.iter_mut().zip(inst.mu_row(i)).zip(v_hat.iter().zip(q_hat)) {
        *o = mu + scale * (max - ratio(v, q));
    }
    Ok(2 * inst.m() as u64)
}

/// Group-balanced FairCo score `μᵢⱼ + β(t−1) max_s(v̂_{j|s} − v̂_{j|s(i)})`,
/// where `s(i)` is the first group containing user i.
pub fn fairco_balanced_scores<T: Scalar>(
    i: usize,
    state: &EstimatorState<T>,
    inst: &ProblemInstance<T>,
    beta: T,
    t: u64,
) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); inst.m()];
    fairco_balanced_scores_into(&mut out, i, state, inst, beta, t)?;
    Ok(out)
}

/// Buffer-reusing form of [`fairco_balanced_scores`]; returns the scalar
/// terms evaluated.
pub fn fairco_balanced_scores_into<T: Scalar>(
    out: &mut [T],
    i: usize,
    state: &EstimatorState<T>,
    inst: &ProblemInstance<T>,
    beta: T,
    t: u64,
) -> Result<u64> {
    check_call(out, i, state, inst, t)?;
    let groups = inst.groups().ok_or(Error::MissingGroups)?;
    let own = *groups.of_user(i).first().ok_or(Error::UnknownGroup(i))?;
    let gv = state.v_hat_group();
    let own_row = gv.row(own);
    let scale = beta * T::of_u64(t - 1);
    for (j, (o, &mu)) in out.iter_mut().zip(inst.mu_row(i)).enumerate() {
        let max = gv.iter_rows().map(|row| row[j]).fold(T::neg_infinity(), T::max);
        *o = mu + scale * (max - own_row[j]);
    }
    Ok(((groups.len() + 1) * inst.m()) as u64)
}

fn check_call<T: Scalar>(
    out: &[T],
    i: usize,
    state: &EstimatorState<T>,
    inst: &ProblemInstance<T>,
    t: u64,
) -> Result<()> {
    state.check_compatible(inst)?;
    if t == 0 {
        return Err(Error::Argument("FairCo scores need t >= 1".into()));
    }
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
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{objective_value, ObjectiveKind};
    use crate::problem::{dcg_weights, exposure_of_ranking, Matrix};
    use crate::topk::top_k;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn random_instance(seed: u64, groups: bool) -> ProblemInstance<f64> {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let (n, m) = (6, 7);
        let mu = Matrix::from_vec(n, m, (0..n * m).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let groups = groups.then(|| vec![vec![0, 2, 4], vec![1, 3, 5]]);
        ProblemInstance::with_uniform_activity(dcg_weights(3), mu, groups).unwrap()
    }

    fn state_with(inst: &ProblemInstance<f64>, steps: &[(usize, Vec<usize>)]) -> EstimatorState<f64> {
        let mut s = EstimatorState::new(inst);
        for (user, items) in steps {
            let r = crate::problem::Ranking::new(items.clone(), inst.m()).unwrap();
            s.update(inst, *user, &exposure_of_ranking(&r, inst.b(), inst.m()).unwrap())
                .unwrap();
        }
        s
    }

    #[test]
    fn first_batch_step_forgets_initialization() {
        let inst = random_instance(1, false);
        let cfg = ObjectiveConfig::two_sided(1.0, 1.0, 0.0, 0.0).unwrap();
        let mut st = BatchState::new(&inst);
        let oracle = GradientOracle::new(st.pi(), &inst, &cfg).unwrap();
        let expected: Vec<Vec<f64>> = (0..inst.n())
            .map(|i| {
                let r = top_k(&oracle.gradient(i).unwrap(), inst.k()).unwrap();
                exposure_of_ranking(&r, inst.b(), inst.m()).unwrap().into_inner()
            })
            .collect();
        batch_fw_epoch(&mut st, &inst, &cfg).unwrap();
        for (i, e) in expected.iter().enumerate() {
            assert_eq!(st.pi().row(i), e.as_slice());
        }
        assert_eq!(st.iteration(), 1);
    }

    #[test]
    fn relevance_only_batch_converges_to_relevance_profile() {
        let inst = random_instance(2, false);
        let cfg = ObjectiveConfig::quality_weighted(0.0, 1.0).unwrap();
        let mut st = BatchState::new(&inst);
        for _ in 0..100 {
            batch_fw_epoch(&mut st, &inst, &cfg).unwrap();
            ExposureMatrix::new(st.pi().matrix().clone(), &inst).unwrap();
        }
        for i in 0..inst.n() {
            let target = exposure_of_ranking(&top_k(inst.mu_row(i), 3).unwrap(), inst.b(), inst.m()).unwrap();
            let dist = st
                .pi()
                .row(i)
                .iter()
                .zip(target.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(dist < 1e-2, "row {i}: {dist}");
        }
    }

    #[test]
    fn batch_improves_over_long_runs() {
        for kind in ObjectiveKind::ALL {
            let inst = random_instance(3, true);
            let cfg = ObjectiveConfig::new(kind, 1.0, 1.0, 0.0, 0.0).unwrap();
            let (_, short) = run_batch(&inst, &cfg, 5).unwrap();
            let (_, long) = run_batch(&inst, &cfg, 500).unwrap();
            assert!(long >= short - 1e-12, "{kind}: {long} < {short}");
        }
    }

    #[test]
    fn zero_activity_users_are_skipped() {
        let mu = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let inst = ProblemInstance::new(vec![1.0], mu, vec![1.0, 0.0], None).unwrap();
        let cfg = ObjectiveConfig::two_sided(0.5, 1.0, 0.0, 0.0).unwrap();
        let (st, _) = run_batch(&inst, &cfg, 3).unwrap();
        assert_eq!(st.pi().row(1), &[0.5, 0.5]);
    }

    #[test]
    fn fairco_examples() {
        let mu = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let inst = ProblemInstance::with_uniform_activity(vec![1.0], mu, None).unwrap();
        let st = state_with(&inst, &[(0, vec![0])]);
        assert_eq!(st.v_hat(), &[1.0, 0.0]);
        assert_eq!(st.q_hat(), &[0.5, 0.5]);
        assert_eq!(fairco_scores(1, &st, &inst, 1.0, 3).unwrap(), vec![0.5, 4.5]);
        assert_eq!(fairco_scores(1, &st, &inst, 1.0, 1).unwrap(), vec![0.5, 0.5]);

        let fresh = EstimatorState::new(&inst);
        assert_eq!(fairco_scores(0, &fresh, &inst, 1.0, 7).unwrap(), vec![0.5, 0.5]);
        assert!(fairco_scores(0, &fresh, &inst, 1.0, 0).is_err());
    }

    #[test]
    fn fairco_balanced_examples() {
        let mu = Matrix::from_rows(&[vec![0.3, 0.6], vec![0.2, 0.9]]).unwrap();
        let inst = ProblemInstance::with_uniform_activity(vec![1.0], mu.clone(), Some(vec![vec![0], vec![1]])).unwrap();
        let st = state_with(&inst, &[(0, vec![0])]);
        assert_eq!(fairco_balanced_scores(1, &st, &inst, 1.0, 2).unwrap(), vec![1.2, 0.9]);
        assert_eq!(fairco_balanced_scores(0, &st, &inst, 1.0, 2).unwrap(), vec![0.3, 0.6]);
        assert_eq!(fairco_balanced_scores(1, &st, &inst, 1.0, 1).unwrap(), vec![0.2, 0.9]);

        let single = ProblemInstance::with_uniform_activity(vec![1.0], mu.clone(), Some(vec![vec![0, 1]])).unwrap();
        let st = state_with(&single, &[(0, vec![0]), (1, vec![1]), (0, vec![0])]);
        assert_eq!(fairco_balanced_scores(1, &st, &single, 1.0, 4).unwrap(), vec![0.2, 0.9]);

        let partial = ProblemInstance::with_uniform_activity(vec![1.0], mu, Some(vec![vec![0]])).unwrap();
        let st = EstimatorState::new(&partial);
        assert!(matches!(
            fairco_balanced_scores(1, &st, &partial, 1.0, 2),
            Err(Error::UnknownGroup(1))
        ));
    }

    #[test]
    fn objective_value_of_batch_matches_helper() {
        let inst = random_instance(9, true);
        let cfg = ObjectiveConfig::balanced(0.1, 1.0).unwrap();
        let (st, v) = run_batch(&inst, &cfg, 20).unwrap();
        assert_eq!(objective_value(st.pi(), &inst, &cfg).unwrap(), v);
    }
}
