//! Multi-criteria ranking of head candidates.
//!
//! Candidates are scored on four criteria (bandwidth, time on network,
//! id-exchange count, willingness) by closeness to an ideal upper bound and
//! distance from an anti-ideal lower bound. Higher closeness means higher
//! priority for a head position.
//!
//! The exchange count is a cost: more exchanges make a node less attractive,
//! to damp nodes that keep swapping roles. [`DecisionMatrix::from_candidates`]
//! therefore ingests it as `K+ - k` so every column is benefit-oriented
//! before normalization.

use serde::{Deserialize, Serialize};

use crate::error::ScoreError;
use crate::num::Real;

/// Criterion labels, in matrix column order.
pub const CRITERIA: [&str; 4] = ["bandwidth", "time_on_network", "id_exchanges", "willingness"];

/// Whether the bound vectors entering the distance computations are scaled by
/// the criteria weights (standard) or used raw over the unweighted matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundWeighting {
    /// Distances over `w_j * a_ij` against `w_j` and `w_j * qhat_j`.
    #[default]
    Weighted,
    /// Distances over `a_ij` against `1` and `qhat_j` directly; the weights
    /// only enter through the caller's choice. Kept for fidelity experiments.
    Literal,
}

/// Per-criterion weights; must sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CriteriaWeights<T: Real>(pub [T; 4]);

impl<T: Real> CriteriaWeights<T> {
    pub fn new(w: [T; 4]) -> Result<Self, ScoreError> {
        let sum = w.iter().fold(T::zero(), |acc, &v| acc + v);
        // 1e-9 is the f64 contract; wider floats would tighten it, f32 cannot
        // reach it so the tolerance scales with the epsilon of T.
        let tol = T::from_f64_lossy(1e-9).max(T::epsilon() * T::from_f64_lossy(32.0));
        if (sum - T::one()).abs() > tol || w.iter().any(|&v| v < T::zero() || v > T::one()) {
            return Err(ScoreError::WeightSum);
        }
        Ok(Self(w))
    }
}

/// Upper (ideal) and lower (anti-ideal) bound per criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriteriaBounds<T: Real> {
    pub upper: [T; 4],
    pub lower: [T; 4],
}

impl<T: Real> CriteriaBounds<T> {
    pub fn new(upper: [T; 4], lower: [T; 4]) -> Result<Self, ScoreError> {
        for j in 0..4 {
            if upper[j] <= T::zero() {
                return Err(ScoreError::BadBounds(format!(
                    "upper bound for {} must be strictly positive",
                    CRITERIA[j]
                )));
            }
            if lower[j] > upper[j] {
                return Err(ScoreError::BadBounds(format!(
                    "lower bound for {} exceeds its upper bound",
                    CRITERIA[j]
                )));
            }
            if lower[j] < T::zero() {
                return Err(ScoreError::BadBounds(format!(
                    "lower bound for {} must be non-negative",
                    CRITERIA[j]
                )));
            }
        }
        let ten = T::from_f64_lossy(10.0);
        if upper[3] > ten || lower[3] > ten {
            return Err(ScoreError::BadBounds(
                "willingness bounds must lie in 0..=10".into(),
            ));
        }
        Ok(Self { upper, lower })
    }

    /// Lower bound normalized by the upper bound, `qhat_j = q_j- / q_j+`.
    pub fn normalized_lower(&self) -> [T; 4] {
        let mut q = [T::zero(); 4];
        for j in 0..4 {
            q[j] = self.lower[j] / self.upper[j];
        }
        q
    }
}

/// One candidate's raw criteria values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeVector<T: Real> {
    /// Available bandwidth, in rate units; non-negative.
    pub bandwidth: T,
    /// Elapsed session time, in simulation ticks; non-negative.
    pub time_on_network: T,
    /// How many times this node has exchanged ids. A cost criterion.
    pub id_exchanges: u32,
    /// Declared willingness to cooperate, 0 (none) to 10 (most).
    pub willingness: u8,
}

impl<T: Real> AttributeVector<T> {
    pub fn new(bandwidth: T, time_on_network: T, id_exchanges: u32, willingness: u8) -> Result<Self, ScoreError> {
        if willingness > 10 {
            return Err(ScoreError::BadWillingness(willingness));
        }
        Ok(Self {
            bandwidth,
            time_on_network,
            id_exchanges,
            willingness,
        })
    }
}

/// An `N x 4` matrix of candidate criteria values, all benefit-oriented.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionMatrix<T: Real> {
    rows: Vec<[T; 4]>,
}

impl<T: Real> DecisionMatrix<T> {
    /// Rows that are already benefit-form in every column.
    pub fn from_rows(rows: Vec<[T; 4]>) -> Result<Self, ScoreError> {
        if rows.is_empty() {
            return Err(ScoreError::EmptyMatrix);
        }
        Ok(Self { rows })
    }

    /// Builds the matrix from raw attribute vectors, flipping the exchange
    /// count into benefit form as `K+ - k` (clamped at zero) and returning the
    /// bounds adjusted the same way: the flipped column spans `[0, K+ - K-]`.
    pub fn from_candidates(
        candidates: &[AttributeVector<T>],
        bounds: &CriteriaBounds<T>,
    ) -> Result<(Self, CriteriaBounds<T>), ScoreError> {
        if candidates.is_empty() {
            return Err(ScoreError::EmptyMatrix);
        }
        let k_plus = bounds.upper[2];
        let k_minus = bounds.lower[2];
        if k_plus <= k_minus {
            return Err(ScoreError::BadBounds(
                "id_exchanges upper bound must exceed its lower bound".into(),
            ));
        }
        let rows = candidates
            .iter()
            .map(|a| {
                let k = T::from_u64_lossy(a.id_exchanges as u64);
                [
                    a.bandwidth,
                    a.time_on_network,
                    (k_plus - k).max(T::zero()),
                    T::from_u64_lossy(a.willingness as u64),
                ]
            })
            .collect();
        let flipped = CriteriaBounds {
            upper: [bounds.upper[0], bounds.upper[1], k_plus - k_minus, bounds.upper[3]],
            lower: [bounds.lower[0], bounds.lower[1], T::zero(), bounds.lower[3]],
        };
        Ok((Self { rows }, flipped))
    }

    pub fn rows(&self) -> &[[T; 4]] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Euclidean column normalization: `a_ij = d_ij / sqrt(sum_i d_ij^2)`.
///
/// Every returned column has unit Euclidean norm. A column that is zero for
/// every candidate cannot be normalized and is reported by name.
pub fn normalize<T: Real>(d: &DecisionMatrix<T>) -> Result<Vec<[T; 4]>, ScoreError> {
    let mut norms = [T::zero(); 4];
    for row in &d.rows {
        for j in 0..4 {
            norms[j] += row[j] * row[j];
        }
    }
    for j in 0..4 {
        if norms[j] == T::zero() {
            return Err(ScoreError::AllZeroColumn(CRITERIA[j]));
        }
        norms[j] = norms[j].sqrt();
    }
    Ok(d
        .rows
        .iter()
        .map(|row| {
            let mut a = [T::zero(); 4];
            for j in 0..4 {
                a[j] = row[j] / norms[j];
            }
            a
        })
        .collect())
}

/// Closeness of every candidate to the ideal bound, in `[0, 1]`.
///
/// Pipeline: normalize, scale each column by its weight, then measure the
/// Euclidean distance of each row to the weighted upper bound (`E+`) and to
/// the weighted normalized lower bound (`E-`); closeness is
/// `C = E- / (E- + E+)`. Greater closeness means higher priority.
pub fn score<T: Real>(
    d: &DecisionMatrix<T>,
    w: &CriteriaWeights<T>,
    q: &CriteriaBounds<T>,
) -> Result<Vec<T>, ScoreError> {
    score_with(d, w, q, BoundWeighting::Weighted)
}

/// [`score`] with an explicit bound-weighting variant.
pub fn score_with<T: Real>(
    d: &DecisionMatrix<T>,
    w: &CriteriaWeights<T>,
    q: &CriteriaBounds<T>,
    variant: BoundWeighting,
) -> Result<Vec<T>, ScoreError> {
    let a = normalize(d)?;
    let qhat = q.normalized_lower();
    let (upper, lower): ([T; 4], [T; 4]) = match variant {
        BoundWeighting::Weighted => {
            let mut u = [T::zero(); 4];
            let mut l = [T::zero(); 4];
            for j in 0..4 {
                u[j] = w.0[j];
                l[j] = w.0[j] * qhat[j];
            }
            (u, l)
        }
        BoundWeighting::Literal => ([T::one(); 4], qhat),
    };
    let mut out = Vec::with_capacity(a.len());
    for row in &a {
        let mut ep = T::zero();
        let mut em = T::zero();
        for j in 0..4 {
            let v = match variant {
                BoundWeighting::Weighted => w.0[j] * row[j],
                BoundWeighting::Literal => row[j],
            };
            ep += (v - upper[j]) * (v - upper[j]);
            em += (v - lower[j]) * (v - lower[j]);
        }
        let ep = ep.sqrt();
        let em = em.sqrt();
        let denom = em + ep;
        if denom == T::zero() {
            // Only reachable when the upper and lower bounds coincide.
            log::warn!("degenerate criteria bounds: candidate coincides with both; closeness defined as 1");
            out.push(T::one());
        } else {
            out.push(em / denom);
        }
    }
    Ok(out)
}

/// Candidate indices sorted by descending closeness; ties break toward the
/// lower index so callers that order candidates by node id get the lower id.
pub fn rank<T: Real>(closeness: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..closeness.len()).collect();
    idx.sort_by(|&a, &b| {
        closeness[b]
            .partial_cmp(&closeness[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w64(w: [f64; 4]) -> CriteriaWeights<f64> {
        CriteriaWeights::new(w).unwrap()
    }

    fn b64(upper: [f64; 4], lower: [f64; 4]) -> CriteriaBounds<f64> {
        CriteriaBounds::new(upper, lower).unwrap()
    }

    #[test]
    fn single_candidate_normalizes_to_unit_entries() {
        let d = DecisionMatrix::from_rows(vec![[10.0, 100.0, 2.0, 5.0]]).unwrap();
        let a = normalize(&d).unwrap();
        assert_eq!(a, vec![[1.0, 1.0, 1.0, 1.0]]);
    }

    #[test]
    fn two_identical_rows_split_the_norm() {
        let d = DecisionMatrix::from_rows(vec![[3.0, 1.0, 2.0, 7.0], [3.0, 1.0, 2.0, 7.0]]).unwrap();
        let a = normalize(&d).unwrap();
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        for row in a {
            for v in row {
                assert!((v - inv_sqrt2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn three_four_five_triangle() {
        let d = DecisionMatrix::from_rows(vec![[3.0, 1.0, 1.0, 1.0], [4.0, 1.0, 1.0, 1.0]]).unwrap();
        let a = normalize(&d).unwrap();
        assert_eq!(a[0][0], 0.6);
        assert_eq!(a[1][0], 0.8);
    }

    #[test]
    fn all_zero_column_is_named() {
        let d = DecisionMatrix::from_rows(vec![[1.0, 0.0, 1.0, 1.0], [2.0, 0.0, 1.0, 1.0]]).unwrap();
        assert_eq!(
            normalize(&d),
            Err(ScoreError::AllZeroColumn("time_on_network"))
        );
    }

    #[test]
    fn frozen_three_candidate_regression() {
        // Pinned from an independent straight-line evaluation of the same
        // pipeline run ahead of this implementation.
        let d = DecisionMatrix::from_rows(vec![
            [8.0, 3600.0, 1.0, 9.0],
            [2.0, 600.0, 5.0, 2.0],
            [5.0, 1800.0, 2.0, 6.0],
        ])
        .unwrap();
        let w = w64([0.4, 0.3, 0.1, 0.2]);
        let q = b64([10.0, 7200.0, 10.0, 10.0], [1.0, 300.0, 0.0, 0.0]);
        let c = score(&d, &w, &q).unwrap();
        let expected = [0.781044479986602, 0.203005575503075, 0.458996021819273];
        for (got, want) in c.iter().zip(expected) {
            assert!((got - want).abs() <= 1e-12, "got {got}, want {want}");
        }
        assert_eq!(rank(&c), vec![0, 2, 1]);

        let cl = score_with(&d, &w, &q, BoundWeighting::Literal).unwrap();
        let expected_literal = [0.617965771694230, 0.398121031766013, 0.449193290234475];
        for (got, want) in cl.iter().zip(expected_literal) {
            assert!((got - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn boundary_closeness_is_exact() {
        // A lone candidate normalizes to all ones, i.e. the upper bound: C = 1.
        let d = DecisionMatrix::from_rows(vec![[7.0, 50.0, 3.0, 4.0]]).unwrap();
        let w = w64([0.25, 0.25, 0.25, 0.25]);
        let q = b64([10.0, 100.0, 10.0, 10.0], [5.0, 20.0, 1.0, 2.0]);
        let c = score(&d, &w, &q).unwrap();
        assert_eq!(c, vec![1.0]);

        // A candidate sitting exactly on the normalized lower bound: C = 0.
        // Rows (3, 4) give column norms 5, so row 0 normalizes to 0.6 = 3/5,
        // matching qhat = 3/5 exactly in every column.
        let d = DecisionMatrix::from_rows(vec![[3.0, 3.0, 3.0, 3.0], [4.0, 4.0, 4.0, 4.0]]).unwrap();
        let q = b64([5.0, 5.0, 5.0, 5.0], [3.0, 3.0, 3.0, 3.0]);
        let c = score(&d, &w, &q).unwrap();
        assert_eq!(c[0], 0.0);
        assert!(c[1] > 0.0);
    }

    #[test]
    fn degenerate_bounds_define_closeness_one() {
        // upper == lower makes E+ and E- coincide; a candidate on the bound
        // has both distances zero.
        let d = DecisionMatrix::from_rows(vec![[3.0, 3.0, 3.0, 3.0]]).unwrap();
        let w = w64([0.25, 0.25, 0.25, 0.25]);
        let q = b64([5.0, 5.0, 5.0, 5.0], [5.0, 5.0, 5.0, 5.0]);
        let c = score(&d, &w, &q).unwrap();
        assert_eq!(c, vec![1.0]);
    }

    #[test]
    fn rank_sorts_descending_with_low_index_ties() {
        assert_eq!(rank(&[0.2, 0.9, 0.5]), vec![1, 2, 0]);
        assert_eq!(rank(&[0.5, 0.5]), vec![0, 1]);
        let c = vec![0.781044479986602, 0.203005575503075, 0.458996021819273];
        assert_eq!(rank(&c), vec![0, 2, 1]);
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(CriteriaWeights::new([0.4, 0.3, 0.1, 0.1]).is_err());
        assert!(CriteriaWeights::new([0.4, 0.3, 0.1, 0.2]).is_ok());
        // f32 tolerance scales with its epsilon.
        assert!(CriteriaWeights::new([0.4f32, 0.3, 0.1, 0.2]).is_ok());
    }

    #[test]
    fn bounds_validation() {
        assert!(CriteriaBounds::new([0.0, 1.0, 1.0, 1.0], [0.0; 4]).is_err());
        assert!(CriteriaBounds::new([1.0, 1.0, 1.0, 11.0], [0.0; 4]).is_err());
        assert!(CriteriaBounds::new([1.0, 1.0, 1.0, 10.0], [2.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn exchange_count_flips_to_benefit_form() {
        let q = b64([10.0, 100.0, 8.0, 10.0], [1.0, 1.0, 1.0, 0.0]);
        let cands = vec![
            AttributeVector::new(5.0, 50.0, 0, 5).unwrap(),
            AttributeVector::new(5.0, 50.0, 6, 5).unwrap(),
            AttributeVector::new(5.0, 50.0, 20, 5).unwrap(), // beyond K+, clamps to 0
        ];
        let (d, fq) = DecisionMatrix::from_candidates(&cands, &q).unwrap();
        assert_eq!(d.rows()[0][2], 8.0);
        assert_eq!(d.rows()[1][2], 2.0);
        assert_eq!(d.rows()[2][2], 0.0);
        assert_eq!(fq.upper[2], 7.0);
        assert_eq!(fq.lower[2], 0.0);

        // Fewer exchanges must never score worse, all else equal.
        let w = w64([0.25, 0.25, 0.25, 0.25]);
        let c = score(&d, &w, &fq).unwrap();
        assert!(c[0] > c[1] && c[1] > c[2]);
    }

    #[test]
    fn generic_over_f32() {
        let d = DecisionMatrix::from_rows(vec![[3.0f32, 1.0, 1.0, 1.0], [4.0, 1.0, 1.0, 1.0]]).unwrap();
        let a = normalize(&d).unwrap();
        assert!((a[0][0] - 0.6).abs() < 1e-6);
        let w = CriteriaWeights::new([0.25f32, 0.25, 0.25, 0.25]).unwrap();
        let q = CriteriaBounds::new([10.0f32, 10.0, 10.0, 10.0], [0.0; 4]).unwrap();
        let c = score(&d, &w, &q).unwrap();
        assert!(c.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
