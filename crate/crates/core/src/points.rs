//! Finite realizations of a point process on `(0, inf)`.

use serde::{Deserialize, Serialize};

/// Points in nonincreasing order, optionally with a complexity label each.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    points: Vec<f64>,
    labels: Option<Vec<u64>>,
}

impl PointSample {
    pub fn new(mut points: Vec<f64>) -> Self {
        points.sort_by(|a, b| b.total_cmp(a));
        PointSample { points, labels: None }
    }

    pub fn labelled(mut pairs: Vec<(f64, u64)>) -> Self {
        // ties in position are ordered by label so the result is canonical
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let (points, labels) = pairs.into_iter().unzip();
        PointSample {
            points,
            labels: Some(labels),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[u64]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `k`-th largest point, `k >= 1`.
    pub fn kth_largest(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.points.get(i).copied())
    }

    /// Number of points `>= eps`.
    pub fn count_at_least(&self, eps: f64) -> usize {
        self.points.partition_point(|&x| x >= eps)
    }

    /// Sum of the points `>= eps`.
    pub fn weight_at_least(&self, eps: f64) -> f64 {
        self.points[..self.count_at_least(eps)].iter().sum()
    }

    /// Smallest gap between consecutive points; infinite for fewer than two.
    pub fn min_gap(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    }

    /// Labelled points in `[a, b]`.
    pub fn in_window(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, Option<u64>)> + '_ {
        self.points
            .iter()
            .enumerate()
            .filter(move |(_, &x)| x >= a && x <= b)
            .map(move |(i, &x)| (x, self.labels.as_ref().map(|l| l[i])))
    }
}
