//! The fixed world an online ranker operates in: users, items, preference
//! values, activities, position weights and user groups. Also rankings and
//! the exposure vectors they induce.

use crate::error::{Error, Result};
use crate::scalar::{dot, sum_tolerance, Scalar};

/// Largest dense `n * m` preference matrix accepted by default.
pub const DEFAULT_MAX_ENTRIES: usize = 10_000_000;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, T::zero())
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                what: "matrix data",
                got: data.len(),
                expected: rows * cols,
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Dimension {
                    what: "matrix row",
                    got: row.len(),
                    expected: cols,
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }
}

impl<T> Matrix<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        // chunks_exact(0) panics; a zero-column matrix has no meaningful rows.
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T: Copy> Matrix<T> {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }
}

/// User groups for balanced exposure. Groups are non-empty and may overlap
/// or leave users out.
#[derive(Debug, Clone, PartialEq)]
pub struct Groups {
    members: Vec<Vec<usize>>,
    of_user: Vec<Vec<usize>>,
}

impl Groups {
    pub fn new(members: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut of_user = vec![Vec::new(); n];
        for (s, group) in members.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::Instance(format!("group {s} is empty")));
            }
            for &i in group {
                if i >= n {
                    return Err(Error::Instance(format!(
                        "group {s} lists user {i}, but there are only {n} users"
                    )));
                }
                if of_user[i].last() == Some(&s) {
                    return Err(Error::Instance(format!("group {s} lists user {i} twice")));
                }
                of_user[i].push(s);
            }
        }
        Ok(Groups { members, of_user })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self, s: usize) -> &[usize] {
        &self.members[s]
    }

    pub fn all(&self) -> &[Vec<usize>] {
        &self.members
    }

    /// Indices of the groups user `i` belongs to, in increasing order.
    pub fn of_user(&self, i: usize) -> &[usize] {
        &self.of_user[i]
    }
}

/// Position weights `b_κ = 1 / log2(1 + κ)` for ranks `κ = 1..=k`.
pub fn dcg_weights<T: Scalar>(k: usize) -> Vec<T> {
    (1..=k).map(|rank| T::of(1.0 / ((1 + rank) as f64).log2())).collect()
}

/// A recommendation problem: `n` users, `m` items, top-`k` rankings.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<T> {
    b: Vec<T>,
    b_norm: T,
    mu: Matrix<T>,
    w: Vec<T>,
    groups: Option<Groups>,
}

impl<T: Scalar> ProblemInstance<T> {
    /// Validates and builds an instance. `w` must be a probability vector;
    /// zero entries are allowed (such users are never sampled).
    pub fn new(b: Vec<T>, mu: Matrix<T>, w: Vec<T>, groups: Option<Vec<Vec<usize>>>) -> Result<Self> {
        Self::with_entry_cap(b, mu, w, groups, DEFAULT_MAX_ENTRIES)
    }

    pub fn with_uniform_activity(b: Vec<T>, mu: Matrix<T>, groups: Option<Vec<Vec<usize>>>) -> Result<Self> {
        let n = mu.rows();
        let w = vec![T::one() / T::of_usize(n.max(1)); n];
        Self::new(b, mu, w, groups)
    }

    pub fn with_entry_cap(
        b: Vec<T>,
        mu: Matrix<T>,
        w: Vec<T>,
        groups: Option<Vec<Vec<usize>>>,
        max_entries: usize,
    ) -> Result<Self> {
        let (n, m, k) = (mu.rows(), mu.cols(), b.len());
        let entries = n.saturating_mul(m);
        if entries > max_entries {
            return Err(Error::TooLarge {
                entries,
                cap: max_entries,
            });
        }
        if n == 0 || m == 0 {
            return Err(Error::Instance("need at least one user and one item".into()));
        }
        if k == 0 || k > m {
            return Err(Error::Instance(format!(
                "ranking length k={k} must satisfy 1 <= k <= m={m}"
            )));
        }
        for (idx, &x) in b.iter().enumerate() {
            if !x.is_finite() || x < T::zero() {
                return Err(Error::Instance(format!(
                    "b[{idx}] = {x} is not a nonnegative finite weight"
                )));
            }
            if idx > 0 && x > b[idx - 1] {
                return Err(Error::Instance(format!("b is increasing at rank {}", idx + 1)));
            }
        }
        if let Some(pos) = mu.as_slice().iter().position(|&x| !(x >= T::zero() && x <= T::one())) {
            return Err(Error::Instance(format!(
                "mu[{}][{}] = {} is outside [0, 1]",
                pos / m,
                pos % m,
                mu.as_slice()[pos]
            )));
        }
        if w.len() != n {
            return Err(Error::Dimension {
                what: "activity vector w",
                got: w.len(),
                expected: n,
            });
        }
        if let Some(i) = w.iter().position(|&x| !(x >= T::zero() && x.is_finite())) {
            return Err(Error::Instance(format!(
                "w[{i}] = {} is not a nonnegative weight",
                w[i]
            )));
        }
        let total: T = w.iter().copied().sum();
        if (total - T::one()).abs() > sum_tolerance(1e-12, n) {
            return Err(Error::Instance(format!("activities sum to {total}, not 1")));
        }
        let groups = groups.map(|g| Groups::new(g, n)).transpose()?;
        let b_norm = b.iter().copied().sum();
        Ok(ProblemInstance {
            b,
            b_norm,
            mu,
            w,
            groups,
        })
    }

    /// Replaces the group structure.
    pub fn with_groups(mut self, groups: Option<Vec<Vec<usize>>>) -> Result<Self> {
        self.groups = groups.map(|g| Groups::new(g, self.n())).transpose()?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.mu.rows()
    }

    pub fn m(&self) -> usize {
        self.mu.cols()
    }

    pub fn k(&self) -> usize {
        self.b.len()
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    /// `‖b‖₁`, the total exposure handed out by one ranking.
    pub fn b_norm(&self) -> T {
        self.b_norm
    }

    pub fn mu(&self) -> &Matrix<T> {
        &self.mu
    }

    pub fn mu_row(&self, i: usize) -> &[T] {
        self.mu.row(i)
    }

    pub fn w(&self) -> &[T] {
        &self.w
    }

    pub fn groups(&self) -> Option<&Groups> {
        self.groups.as_ref()
    }
}

/// A top-k list of distinct item indices, best first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ranking(Vec<usize>);

impl Ranking {
    /// Checks that the items are distinct and below `m`.
    pub fn new(items: Vec<usize>, m: usize) -> Result<Self> {
        let mut seen = vec![false; m];
        for &j in &items {
            if j >= m {
                return Err(Error::InvalidRanking(format!("item {j} out of range for m={m}")));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidRanking(format!("item {j} appears twice")));
            }
        }
        Ok(Ranking(items))
    }

    /// Wraps items already known to be valid.
    pub(crate) fn from_trusted(items: Vec<usize>) -> Self {
        Ranking(items)
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

/// Per-item exposure of length `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureVector<T>(Vec<T>);

impl<T: Scalar> ExposureVector<T> {
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    /// Wraps an arbitrary nonnegative vector, e.g. a convex combination of
    /// induced exposures.
    pub fn from_vec(e: Vec<T>) -> Result<Self> {
        if let Some(j) = e.iter().position(|&x| !(x >= T::zero() && x.is_finite())) {
            return Err(Error::Argument(format!(
                "exposure[{j}] = {} is negative or non-finite",
                e[j]
            )));
        }
        Ok(ExposureVector(e))
    }
}

/// Exposure vector induced by `sigma`: item at rank κ gets `b[κ]`.
pub fn exposure_of_ranking<T: Scalar>(sigma: &Ranking, b: &[T], m: usize) -> Result<ExposureVector<T>> {
    if sigma.len() != b.len() {
        return Err(Error::InvalidRanking(format!(
            "ranking has {} items but there are {} position weights",
            sigma.len(),
            b.len()
        )));
    }
    let mut e = vec![T::zero(); m];
    let mut seen = vec![false; m];
    for (&j, &weight) in sigma.items().iter().zip(b) {
        if j >= m {
            return Err(Error::InvalidRanking(format!("item {j} out of range for m={m}")));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::InvalidRanking(format!("item {j} appears twice")));
        }
        e[j] = weight;
    }
    Ok(ExposureVector(e))
}

/// `⟨μ_i, e⟩`, the utility of user `i` under exposure `e`.
pub fn user_utility<T: Scalar>(mu_i: &[T], e: &[T]) -> Result<T> {
    if mu_i.len() != e.len() {
        return Err(Error::Dimension {
            what: "exposure vector",
            got: e.len(),
            expected: mu_i.len(),
        });
    }
    Ok(dot(mu_i, e))
}
