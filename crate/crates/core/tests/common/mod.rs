//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use offr::{dcg_weights, ExposureMatrix, Matrix, ObjectiveConfig, ProblemInstance, Ranking};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random instance with activities bounded away from zero and two groups
/// (even and odd users).
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, m: usize, k: usize) -> ProblemInstance<f64> {
    let mu = Matrix::from_vec(n, m, (0..n * m).map(|_| rng.gen::<f64>()).collect()).unwrap();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let w = raw.iter().map(|x| x / total).collect();
    let groups = vec![(0..n).step_by(2).collect(), (1..n).step_by(2).collect::<Vec<_>>()];
    let groups = groups.into_iter().filter(|g: &Vec<usize>| !g.is_empty()).collect();
    ProblemInstance::new(dcg_weights(k), mu, w, Some(groups)).unwrap()
}

pub fn random_ranking<R: Rng>(rng: &mut R, m: usize, k: usize) -> Ranking {
    let mut items: Vec<usize> = (0..m).collect();
    items.shuffle(rng);
    items.truncate(k);
    Ranking::new(items, m).unwrap()
}

/// Exposure vector built by hand: `b[κ]` at the item in rank κ.
pub fn exposure_by_hand(items: &[usize], b: &[f64], m: usize) -> Vec<f64> {
    let mut e = vec![0.0; m];
    for (kappa, &j) in items.iter().enumerate() {
        e[j] = b[kappa];
    }
    e
}

/// Interior point of the exposure polytope: half the uniform profile plus
/// half a random mixture of rankings.
pub fn random_interior_pi<R: Rng>(rng: &mut R, inst: &ProblemInstance<f64>) -> ExposureMatrix<f64> {
    let (n, m, k) = (inst.n(), inst.m(), inst.k());
    let uniform = inst.b().iter().sum::<f64>() / m as f64;
    let mut data = vec![0.0; n * m];
    for i in 0..n {
        let weights: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let row = &mut data[i * m..(i + 1) * m];
        row.iter_mut().for_each(|x| *x = 0.5 * uniform);
        for wgt in weights {
            let sigma = random_ranking(rng, m, k);
            for (j, e) in exposure_by_hand(sigma.items(), inst.b(), m).into_iter().enumerate() {
                row[j] += 0.5 * wgt / total * e;
            }
        }
    }
    ExposureMatrix::new(Matrix::from_vec(n, m, data).unwrap(), inst).unwrap()
}

/// Central finite differences of the objective with respect to `π_i`,
/// divided by `w_i`.
pub fn finite_difference_gradient(
    pi: &ExposureMatrix<f64>,
    i: usize,
    inst: &ProblemInstance<f64>,
    cfg: &ObjectiveConfig<f64>,
    h: f64,
) -> Vec<f64> {
    let m = inst.m();
    let base = pi.matrix().as_slice().to_vec();
    let eval = |data: Vec<f64>| {
        let pi = ExposureMatrix::new_unchecked(Matrix::from_vec(inst.n(), m, data).unwrap(), inst).unwrap();
        offr::objective_value(&pi, inst, cfg).unwrap()
    };
    (0..m)
        .map(|j| {
            let mut up = base.clone();
            let mut down = base.clone();
            up[i * m + j] += h;
            down[i * m + j] -= h;
            (eval(up) - eval(down)) / (2.0 * h) / inst.w()[i]
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Every k-permutation of `0..m`.
pub fn all_k_permutations(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(m: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for j in 0..m {
            if !prefix.contains(&j) {
                prefix.push(j);
                go(m, k, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(m, k, &mut Vec::new(), &mut out);
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Running statistics recomputed from scratch from a log of
/// `(user, exposure)` steps.
pub struct Replay {
    pub t: u64,
    pub counts: Vec<u64>,
    pub u_hat: Vec<f64>,
    pub v_hat: Vec<f64>,
    pub q_hat: Vec<f64>,
    pub q_avg: f64,
    pub group_counts: Vec<u64>,
    pub v_hat_group: Vec<Vec<f64>>,
}

pub fn replay(inst: &ProblemInstance<f64>, log: &[(usize, Vec<f64>)]) -> Replay {
    let (n, m) = (inst.n(), inst.m());
    let b_norm: f64 = inst.b().iter().sum();
    let groups: Vec<Vec<usize>> = inst.groups().map(|g| g.all().to_vec()).unwrap_or_default();
    let t = log.len();
    let mut counts = vec![0u64; n];
    let mut utility_sums = vec![0.0; n];
    let mut v_sum = vec![0.0; m];
    let mut q_sum = vec![0.0; m];
    let mut group_counts = vec![0u64; groups.len()];
    let mut group_sums = vec![vec![0.0; m]; groups.len()];
    for (user, a) in log {
        counts[*user] += 1;
        utility_sums[*user] += dot(inst.mu_row(*user), a);
        for j in 0..m {
            v_sum[j] += a[j];
            q_sum[j] += inst.mu_row(*user)[j];
        }
        for (s, members) in groups.iter().enumerate() {
            if members.contains(user) {
                group_counts[s] += 1;
                for j in 0..m {
                    group_sums[s][j] += a[j];
                }
            }
        }
    }
    let u_hat = (0..n)
        .map(|i| {
            if counts[i] == 0 {
                inst.mu_row(i).iter().sum::<f64>() * b_norm / m as f64
            } else {
                utility_sums[i] / counts[i] as f64
            }
        })
        .collect();
    let avg =
        |sum: &[f64], c: u64| -> Vec<f64> { sum.iter().map(|x| if c == 0 { 0.0 } else { x / c as f64 }).collect() };
    let q_hat = avg(&q_sum, t as u64);
    let q_avg = q_hat.iter().sum::<f64>() / m as f64;
    Replay {
        t: t as u64,
        v_hat: avg(&v_sum, t as u64),
        q_hat,
        q_avg,
        u_hat,
        v_hat_group: group_sums.iter().zip(&group_counts).map(|(s, &c)| avg(s, c)).collect(),
        counts,
        group_counts,
    }
}
