//! Online running statistics consumed by the score rules.
//!
//! Every estimate is a running average maintained in `O(m)` per step:
//!
//! * `v̂ⱼ`: mean exposure of item j over all steps,
//! * `ûᵢ`: mean utility of user i over the steps serving i (initialized
//!   to the utility of a uniformly random ranking),
//! * `q̂ⱼ`: mean of `μ_{i⁽ᵗ⁾ j}` over served users, and `q̂_avg` its mean,
//! * `v̂_{j|s}`: mean exposure of item j over steps serving group `s`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::objectives::ObjectiveConfig;
use crate::problem::{ExposureVector, Matrix, ProblemInstance};
use crate::scalar::{dot, Scalar};

/// `q̂_avg` is tracked incrementally and re-summed exactly this often.
pub const QUALITY_RESUM_PERIOD: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState<T> {
    t: u64,
    user_counts: Vec<u64>,
    u_hat: Vec<T>,
    v_hat: Vec<T>,
    q_hat: Vec<T>,
    q_sum: T,
    group_counts: Vec<u64>,
    v_hat_group: Matrix<T>,
}

/// Fresh state for `inst`; rejects configurations the instance cannot serve.
pub fn init_state<T: Scalar>(inst: &ProblemInstance<T>, cfg: &ObjectiveConfig<T>) -> Result<EstimatorState<T>> {
    cfg.check(inst)?;
    Ok(EstimatorState::new(inst))
}

impl<T: Scalar> EstimatorState<T> {
    pub fn new(inst: &ProblemInstance<T>) -> Self {
        let (n, m) = (inst.n(), inst.m());
        let uniform = inst.b_norm() / T::of_usize(m);
        let u_hat = (0..n)
            .map(|i| inst.mu_row(i).iter().map(|&x| x * uniform).sum())
            .collect();
        let n_groups = inst.groups().map_or(0, |g| g.len());
        EstimatorState {
            t: 0,
            user_counts: vec![0; n],
            u_hat,
            v_hat: vec![T::zero(); m],
            q_hat: vec![T::zero(); m],
            q_sum: T::zero(),
            group_counts: vec![0; n_groups],
            v_hat_group: Matrix::zeros(n_groups, m),
        }
    }

    /// Number of completed steps.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn user_counts(&self) -> &[u64] {
        &self.user_counts
    }

    pub fn u_hat(&self) -> &[T] {
        &self.u_hat
    }

    pub fn v_hat(&self) -> &[T] {
        &self.v_hat
    }

    pub fn q_hat(&self) -> &[T] {
        &self.q_hat
    }

    pub fn q_avg_hat(&self) -> T {
        self.q_sum / T::of_usize(self.q_hat.len())
    }

    pub fn group_counts(&self) -> &[u64] {
        &self.group_counts
    }

    /// `v̂_{j|s}`, one row per group.
    pub fn v_hat_group(&self) -> &Matrix<T> {
        &self.v_hat_group
    }

    /// `v̂_{j|avg}`, the mean of `v̂_{j|s}` over groups.
    pub fn v_hat_group_avg(&self) -> Vec<T> {
        let mut avg = vec![T::zero(); self.v_hat.len()];
        let count = T::of_usize(self.v_hat_group.rows().max(1));
        for row in self.v_hat_group.iter_rows() {
            for (a, &x) in avg.iter_mut().zip(row) {
                *a = *a + x;
            }
        }
        avg.iter_mut().for_each(|a| *a = *a / count);
        avg
    }

    /// Empirical activities `ŵ = c / t` (zero before the first step).
    pub fn w_hat(&self) -> Vec<T> {
        let t = T::of_u64(self.t.max(1));
        self.user_counts.iter().map(|&c| T::of_u64(c) / t).collect()
    }

    pub(crate) fn check_compatible(&self, inst: &ProblemInstance<T>) -> Result<()> {
        let groups = inst.groups().map_or(0, |g| g.len());
        if self.user_counts.len() != inst.n() || self.v_hat.len() != inst.m() || self.group_counts.len() != groups {
            return Err(Error::Argument(format!(
                "estimator state shaped for n={}, m={}, {} groups does not match the instance (n={}, m={}, {} groups)",
                self.user_counts.len(),
                self.v_hat.len(),
                self.group_counts.len(),
                inst.n(),
                inst.m(),
                groups
            )));
        }
        Ok(())
    }

    /// Advances every estimate by one step in which `user` was shown the
    /// exposure vector `a`.
    pub fn update(&mut self, inst: &ProblemInstance<T>, user: usize, a: &ExposureVector<T>) -> Result<u64> {
        self.update_slice(inst, user, a.as_slice())
    }

    /// [`EstimatorState::update`] on a raw exposure slice. Returns the number
    /// of scalar writes, for cost accounting. Validation happens before any
    /// field changes, so a failed update leaves the state untouched.
    pub fn update_slice(&mut self, inst: &ProblemInstance<T>, user: usize, a: &[T]) -> Result<u64> {
        self.check_compatible(inst)?;
        if user >= inst.n() {
            return Err(Error::Argument(format!("user {user} out of range for n={}", inst.n())));
        }
        if a.len() != inst.m() {
            return Err(Error::Dimension {
                what: "exposure vector",
                got: a.len(),
                expected: inst.m(),
            });
        }
        let mu = inst.mu_row(user);
        let mut writes = 0u64;

        self.t += 1;
        let step = T::of_u64(self.t).recip();
        for (v, &x) in self.v_hat.iter_mut().zip(a) {
            *v = *v + (x - *v) * step;
        }

        let mut delta = T::zero();
        for (q, &x) in self.q_hat.iter_mut().zip(mu) {
            let change = (x - *q) * step;
            *q = *q + change;
            delta = delta + change;
        }
        self.q_sum = if self.t.is_multiple_of(QUALITY_RESUM_PERIOD) {
            self.q_hat.iter().copied().sum()
        } else {
            self.q_sum + delta
        };
        writes += 2 * a.len() as u64;

        self.user_counts[user] += 1;
        let c = T::of_u64(self.user_counts[user]);
        let u = &mut self.u_hat[user];
        *u = *u + (dot(mu, a) - *u) / c;
        writes += 1;

        if let Some(groups) = inst.groups() {
            for &s in groups.of_user(user) {
                self.group_counts[s] += 1;
                let step = T::of_u64(self.group_counts[s]).recip();
                for (v, &x) in self.v_hat_group.row_mut(s).iter_mut().zip(a) {
                    *v = *v + (x - *v) * step;
                }
                writes += a.len() as u64;
            }
        }
        Ok(writes)
    }

    /// Writes a CSV checkpoint with header `field,row,col,value`, one line
    /// per scalar.
    pub fn write_checkpoint(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "field,row,col,value").map_err(|e| Error::io(path, e))?;
        let mut line = |field: &str, row: usize, col: usize, value: String| -> std::io::Result<()> {
            writeln!(out, "{field},{row},{col},{value}")
        };
        let io = |e| Error::io(path, e);
        line("t", 0, 0, self.t.to_string()).map_err(io)?;
        for (i, c) in self.user_counts.iter().enumerate() {
            line("user_count", i, 0, c.to_string()).map_err(io)?;
        }
        for (i, x) in self.u_hat.iter().enumerate() {
            line("u_hat", i, 0, x.as_f64().to_string()).map_err(io)?;
        }
        for (j, x) in self.v_hat.iter().enumerate() {
            line("v_hat", j, 0, x.as_f64().to_string()).map_err(io)?;
        }
        for (j, x) in self.q_hat.iter().enumerate() {
            line("q_hat", j, 0, x.as_f64().to_string()).map_err(io)?;
        }
        for (s, c) in self.group_counts.iter().enumerate() {
            line("group_count", s, 0, c.to_string()).map_err(io)?;
        }
        for (s, row) in self.v_hat_group.iter_rows().enumerate() {
            for (j, x) in row.iter().enumerate() {
                line("v_hat_group", s, j, x.as_f64().to_string()).map_err(io)?;
            }
        }
        out.flush().map_err(io)
    }

    /// Reads a checkpoint written by [`EstimatorState::write_checkpoint`] for
    /// the same instance.
    pub fn read_checkpoint(path: &Path, inst: &ProblemInstance<T>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "field,row,col,value")) => {}
            _ => return Err(Error::parse(path, 1, "expected header field,row,col,value")),
        }
        let mut state = EstimatorState::new(inst);
        let mut seen_t = false;
        for (idx, raw) in lines {
            let lineno = idx as u64 + 1;
            let bad = |msg: String| Error::parse(path, lineno, msg);
            let parts: Vec<&str> = raw.split(',').collect();
            let [field, row, col, value] = parts[..] else {
                return Err(bad(format!("expected 4 columns, found {}", parts.len())));
            };
            let row: usize = row.parse().map_err(|_| bad(format!("bad row index {row:?}")))?;
            let col: usize = col.parse().map_err(|_| bad(format!("bad column index {col:?}")))?;
            let count = || value.parse::<u64>().map_err(|_| bad(format!("bad count {value:?}")));
            let real = || {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .map(T::of)
                    .ok_or_else(|| bad(format!("bad value {value:?}")))
            };
            let slot = |len: usize| {
                if row < len && col == 0 {
                    Ok(row)
                } else {
                    Err(bad(format!("index ({row}, {col}) out of range for {field}")))
                }
            };
            match field {
                "t" => {
                    state.t = count()?;
                    seen_t = true;
                }
                "user_count" => state.user_counts[slot(inst.n())?] = count()?,
                "u_hat" => state.u_hat[slot(inst.n())?] = real()?,
                "v_hat" => state.v_hat[slot(inst.m())?] = real()?,
                "q_hat" => state.q_hat[slot(inst.m())?] = real()?,
                "group_count" => {
                    let s = slot(state.group_counts.len())?;
                    state.group_counts[s] = count()?;
                }
                "v_hat_group" => {
                    if row >= state.v_hat_group.rows() || col >= inst.m() {
                        return Err(bad(format!("index ({row}, {col}) out of range for v_hat_group")));
                    }
                    state.v_hat_group.row_mut(row)[col] = real()?;
                }
                other => return Err(bad(format!("unknown field {other:?}"))),
            }
        }
        if !seen_t {
            return Err(Error::parse(path, 1, "checkpoint has no t row"));
        }
        if state.user_counts.iter().sum::<u64>() != state.t {
            return Err(Error::parse(path, 1, "user counts do not sum to t"));
        }
        state.q_sum = state.q_hat.iter().copied().sum();
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{dcg_weights, exposure_of_ranking, Ranking};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn small_instance() -> ProblemInstance<f64> {
        let mu = Matrix::from_rows(&[vec![0.1, 0.9], vec![0.5, 0.4], vec![1.0, 0.0]]).unwrap();
        ProblemInstance::with_uniform_activity(vec![1.0], mu, Some(vec![vec![0, 1], vec![2]])).unwrap()
    }

    #[test]
    fn initial_state() {
        let mu = Matrix::from_rows(&[vec![1.0; 4], vec![0.0; 4]]).unwrap();
        let inst = ProblemInstance::with_uniform_activity(vec![1.0, 1.0], mu, None).unwrap();
        let state = EstimatorState::new(&inst);
        assert_eq!(state.u_hat(), &[2.0, 0.0]);
        assert_eq!(state.v_hat(), &[0.0; 4]);
        assert_eq!(state.q_hat(), &[0.0; 4]);
        assert_eq!(state.t(), 0);
        assert!(init_state(&inst, &ObjectiveConfig::balanced(1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn running_mean_of_exposures() {
        let inst = small_instance();
        let mut state = EstimatorState::new(&inst);
        state.update_slice(&inst, 0, &[1.0, 0.0]).unwrap();
        assert_eq!(state.v_hat(), &[1.0, 0.0]);
        state.update_slice(&inst, 2, &[0.0, 1.0]).unwrap();
        assert_eq!(state.v_hat(), &[0.5, 0.5]);
        assert!((state.u_hat()[0] - 0.1).abs() < 1e-15);
        assert_eq!(state.u_hat()[2], 0.0);
        assert_eq!(state.group_counts(), &[1, 1]);
        assert_eq!(state.v_hat_group().row(0), &[1.0, 0.0]);
        assert_eq!(state.v_hat_group().row(1), &[0.0, 1.0]);
        assert_eq!(state.q_hat(), &[0.55, 0.45]);
        assert!((state.q_avg_hat() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn failed_update_leaves_state_untouched() {
        let inst = small_instance();
        let mut state = EstimatorState::new(&inst);
        state.update_slice(&inst, 1, &[0.0, 1.0]).unwrap();
        let before = state.clone();
        assert!(state.update_slice(&inst, 3, &[1.0, 0.0]).is_err());
        assert!(state.update_slice(&inst, 0, &[1.0]).is_err());
        assert_eq!(state, before);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let m = 6;
        let mu = Matrix::from_vec(5, m, (0..5 * m).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let inst =
            ProblemInstance::with_uniform_activity(dcg_weights(3), mu, Some(vec![vec![0, 2, 4], vec![1, 3]])).unwrap();
        let mut state = EstimatorState::new(&inst);
        for _ in 0..50 {
            let mut items: Vec<usize> = (0..m).collect();
            items.shuffle(&mut rng);
            items.truncate(3);
            let a = exposure_of_ranking(&Ranking::new(items, m).unwrap(), inst.b(), m).unwrap();
            state.update(&inst, rng.gen_range(0..5), &a).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.csv");
        state.write_checkpoint(&path).unwrap();
        let back = EstimatorState::read_checkpoint(&path, &inst).unwrap();
        assert_eq!(back.t(), state.t());
        assert_eq!(back.user_counts(), state.user_counts());
        assert_eq!(back.u_hat(), state.u_hat());
        assert_eq!(back.v_hat(), state.v_hat());
        assert_eq!(back.q_hat(), state.q_hat());
        assert_eq!(back.v_hat_group(), state.v_hat_group());
        assert!((back.q_avg_hat() - state.q_avg_hat()).abs() < 1e-14);

        std::fs::write(&path, "field,row,col,value\nt,0,0,1\nbogus,0,0,1\n").unwrap();
        assert!(matches!(
            EstimatorState::read_checkpoint(&path, &inst),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}
