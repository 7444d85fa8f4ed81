//! Top-k selection, the linear maximization step over induced exposures.
//!
//! With non-increasing position weights, the exposure vector maximizing
//! `⟨g, E(σ)⟩` puts the largest weight on the largest score, so the
//! maximizer is just the k best items in score order. Selection runs in
//! `O(m + k log k)`: a linear-time partition followed by a sort of the head.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::problem::Ranking;
use crate::scalar::Scalar;

/// Reusable top-k selector that also counts comparisons.
#[derive(Debug, Default, Clone)]
pub struct TopK {
    indices: Vec<usize>,
    comparisons: u64,
}

impl TopK {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total comparisons made since construction.
    pub fn comparisons(&self) -> u64 {
        self.comparisons
    }

    /// Indices of the `k` largest scores, best first. Ties go to the lower
    /// item index.
    pub fn select<T: Scalar>(&mut self, scores: &[T], k: usize) -> Result<Ranking> {
        let m = scores.len();
        if k == 0 || k > m {
            return Err(Error::Argument(format!("top-k needs 1 <= k <= m, got k={k}, m={m}")));
        }
        if let Some(j) = scores.iter().position(|x| !x.is_finite()) {
            return Err(Error::Argument(format!("score[{j}] = {} is not finite", scores[j])));
        }
        self.indices.clear();
        self.indices.extend(0..m);

        let mut count = 0u64;
        let mut better = |a: &usize, b: &usize| -> Ordering {
            count += 1;
            // Scores are finite, so partial_cmp never fails.
            scores[*b]
                .partial_cmp(&scores[*a])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(b))
        };
        if k < m {
            self.indices.select_nth_unstable_by(k - 1, &mut better);
        }
        let head = &mut self.indices[..k];
        head.sort_unstable_by(&mut better);
        self.comparisons += count;
        Ok(Ranking::from_trusted(head.to_vec()))
    }
}

/// One-shot [`TopK::select`].
pub fn top_k<T: Scalar>(scores: &[T], k: usize) -> Result<Ranking> {
    TopK::new().select(scores, k)
}
