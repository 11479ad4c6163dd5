//! Empirical distribution functions and generalized-inverse quantiles.
//!
//! Every estimator in this crate composes three primitives:
//!
//! * the right-continuous empirical CDF `F(y) = #{x_i <= y} / n`,
//! * its left-continuous generalized inverse
//!   `quantile(tau) = inf{y : F(y) >= tau}` (the `ceil(n*tau)`-th order
//!   statistic), and
//! * the rank transform `target.quantile(reference.cdf_at(v))` that maps a
//!   value through one group's CDF and back through another group's
//!   quantile function.
//!
//! A weighted variant [`WeightedCdf`] supports the inverse-probability-
//! weighted estimator; its quantile is the generalized inverse over the
//! normalized weighted step function.

use alloc::vec::Vec;
use core::fmt;

/// Errors raised by quantile queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdfError {
    /// Quantile level outside `(0, 1]`.
    TauOutOfRange,
    /// Weighted CDF with all-zero (or negative-total) weights.
    ZeroTotalWeight,
    /// Empty sample.
    EmptySample,
}

impl fmt::Display for EdfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdfError::TauOutOfRange => write!(f, "quantile level must lie in (0, 1]"),
            EdfError::ZeroTotalWeight => write!(f, "weights must have a positive sum"),
            EdfError::EmptySample => write!(f, "sample must be nonempty"),
        }
    }
}

impl core::error::Error for EdfError {}

/// Sorts a sample ascending with a total order (NaN-free inputs assumed;
/// NaNs would sort last deterministically).
pub(crate) fn sort_ascending(values: &mut [f64]) {
    values.sort_unstable_by(f64::total_cmp);
}

/// Right-continuous empirical CDF over a finite sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Edf {
    sorted: Vec<f64>,
}

impl Edf {
    /// Builds the EDF; sorting happens once here, queries are binary search.
    pub fn new(mut sample: Vec<f64>) -> Result<Self, EdfError> {
        if sample.is_empty() {
            return Err(EdfError::EmptySample);
        }
        sort_ascending(&mut sample);
        Ok(Self { sorted: sample })
    }

    /// Sample size.
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    /// Always false: construction rejects empty samples.
    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// The sorted sample.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Smallest sample point.
    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    /// Largest sample point.
    pub fn max(&self) -> f64 {
        *self.sorted.last().unwrap()
    }

    /// Number of sample points `<= y` (the rank of `y`).
    pub fn rank(&self, y: f64) -> usize {
        self.sorted.partition_point(|x| *x <= y)
    }

    /// `F(y) = #{x_i <= y} / n`, an exact count ratio.
    pub fn cdf_at(&self, y: f64) -> f64 {
        self.rank(y) as f64 / self.sorted.len() as f64
    }

    /// `inf{y : F(y) >= tau}`: the `ceil(n*tau)`-th order statistic, with the
    /// minimum returned for any `tau <= 1/n`.
    pub fn quantile(&self, tau: f64) -> Result<f64, EdfError> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(EdfError::TauOutOfRange);
        }
        let n = self.sorted.len();
        // ceil(n*tau) without float round-off at exact multiples of 1/n.
        let k = libm::ceil(n as f64 * tau - 1e-12) as usize;
        Ok(self.sorted[k.clamp(1, n) - 1])
    }

    /// Mean of the sample.
    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.sorted.len() as f64
    }
}

/// Maps each value through `reference`'s CDF and back through `target`'s
/// quantile function. CDF values of zero are clamped to `1/n_reference`
/// before inversion so the quantile is always defined.
pub fn rank_transform(target: &Edf, reference: &Edf, values: &[f64]) -> Vec<f64> {
    let floor = 1.0 / reference.len() as f64;
    values
        .iter()
        .map(|&v| {
            let u = reference.cdf_at(v).max(floor);
            // u in [1/n, 1], so the quantile cannot fail.
            target.quantile(u).unwrap()
        })
        .collect()
}

/// Normalized weighted step CDF `F(y) = sum_{x_i <= y} w_i / sum w_i`.
#[derive(Clone, Debug)]
pub struct WeightedCdf {
    points: Vec<f64>,
    /// Cumulative normalized weights aligned with `points`.
    cum: Vec<f64>,
}

impl WeightedCdf {
    /// Builds the weighted CDF from paired points and nonnegative weights.
    pub fn new(points: &[f64], weights: &[f64]) -> Result<Self, EdfError> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(EdfError::EmptySample);
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(EdfError::ZeroTotalWeight);
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_unstable_by(|&a, &b| points[a].total_cmp(&points[b]));
        let mut pts = Vec::with_capacity(points.len());
        let mut cum = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for &i in &order {
            acc += weights[i];
            pts.push(points[i]);
            cum.push(acc / total);
        }
        // Guard against float drift: the terminal cumulative weight is 1.
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        Ok(Self { points: pts, cum })
    }

    /// `F(y)` under the normalized weights.
    pub fn cdf_at(&self, y: f64) -> f64 {
        let k = self.points.partition_point(|x| *x <= y);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }

    /// Generalized inverse `inf{y : F(y) >= tau}` over the weighted steps.
    pub fn quantile(&self, tau: f64) -> Result<f64, EdfError> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(EdfError::TauOutOfRange);
        }
        // First jump point whose cumulative weight reaches tau; the small
        // slack keeps exact-tie queries (tau equal to a cumulative weight
        // computed in floating point) on the mathematically correct step.
        let k = self.cum.partition_point(|c| *c < tau - 1e-12);
        Ok(self.points[k.min(self.points.len() - 1)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn cdf_count_ratio() {
        let e = Edf::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(e.cdf_at(2.0), 0.5);
        assert_eq!(e.cdf_at(0.5), 0.0);
        assert_eq!(e.cdf_at(4.0), 1.0);
        assert_eq!(e.cdf_at(9.0), 1.0);
    }

    #[test]
    fn cdf_with_ties() {
        let e = Edf::new(vec![1.0, 1.0, 2.0]).unwrap();
        assert!((e.cdf_at(1.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn quantile_order_statistics() {
        let e = Edf::new(vec![4.0, 2.0, 3.0, 1.0]).unwrap();
        assert_eq!(e.quantile(0.5).unwrap(), 2.0);
        assert_eq!(e.quantile(0.25).unwrap(), 1.0);
        assert_eq!(e.quantile(1.0).unwrap(), 4.0);
        assert_eq!(e.quantile(0.1).unwrap(), 1.0);
        assert_eq!(e.quantile(1.1).unwrap_err(), EdfError::TauOutOfRange);
        assert_eq!(e.quantile(0.0).unwrap_err(), EdfError::TauOutOfRange);
    }

    #[test]
    fn quantile_cdf_compositions() {
        let e = Edf::new(vec![1.0, 2.0, 2.0, 5.0]).unwrap();
        for tau in [0.1, 0.25, 0.5, 0.51, 0.75, 1.0] {
            assert!(e.cdf_at(e.quantile(tau).unwrap()) >= tau - 1e-12);
        }
        for &x in e.sorted() {
            assert!(e.quantile(e.cdf_at(x)).unwrap() <= x);
        }
    }

    #[test]
    fn rank_transform_identity_on_sample_points() {
        let e = Edf::new(vec![0.3, 1.2, 2.5, 7.0]).unwrap();
        let out = rank_transform(&e, &e, e.sorted());
        assert_eq!(out, e.sorted());
    }

    #[test]
    fn rank_transform_hand_example() {
        let reference = Edf::new(vec![0.0, 2.0]).unwrap();
        let target = Edf::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(
            rank_transform(&target, &reference, &[0.0, 2.0]),
            vec![0.0, 1.0]
        );
        // Below-support values clamp to the reference's smallest rank.
        assert_eq!(rank_transform(&target, &reference, &[-3.0]), vec![0.0]);
    }

    #[test]
    fn rank_transform_constant_target() {
        let reference = Edf::new(vec![1.0, 2.0, 3.0]).unwrap();
        let target = Edf::new(vec![5.0, 5.0]).unwrap();
        assert_eq!(
            rank_transform(&target, &reference, &[0.0, 1.5, 3.0]),
            vec![5.0, 5.0, 5.0]
        );
    }

    #[test]
    fn weighted_cdf_matches_unweighted_under_unit_weights() {
        let sample = vec![3.0, 1.0, 2.0, 2.0, 9.0];
        let e = Edf::new(sample.clone()).unwrap();
        let w = WeightedCdf::new(&sample, &[1.0; 5]).unwrap();
        for y in [-1.0, 1.0, 1.5, 2.0, 3.0, 9.0, 10.0] {
            assert_eq!(w.cdf_at(y), e.cdf_at(y));
        }
        for tau in [0.1, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0] {
            assert_eq!(w.quantile(tau).unwrap(), e.quantile(tau).unwrap());
        }
    }

    #[test]
    fn weighted_cdf_degenerate_weight() {
        let w = WeightedCdf::new(&[5.0, 9.0], &[1.0, 0.0]).unwrap();
        assert_eq!(w.cdf_at(5.0), 1.0);
        assert_eq!(w.quantile(1.0).unwrap(), 5.0);
        assert_eq!(
            WeightedCdf::new(&[5.0, 9.0], &[0.0, 0.0]).unwrap_err(),
            EdfError::ZeroTotalWeight
        );
    }

    #[test]
    fn quantile_location_equivariance() {
        let base = vec![0.4, -1.0, 2.0, 2.0, 3.5];
        let e = Edf::new(base.clone()).unwrap();
        let shifted = Edf::new(base.iter().map(|x| x + 10.0).collect()).unwrap();
        for tau in [0.2, 0.4, 0.6, 0.8, 1.0] {
            assert_eq!(
                e.quantile(tau).unwrap() + 10.0,
                shifted.quantile(tau).unwrap()
            );
        }
    }

    #[test]
    fn quantile_monotone_under_increasing_map() {
        let sample = vec![-2.0, -0.5, 0.1, 1.4, 3.0];
        let cubed: Vec<f64> = sample.iter().map(|x| x * x * x).collect();
        let e = Edf::new(sample).unwrap();
        let g = Edf::new(cubed).unwrap();
        for tau in [0.2, 0.4, 0.6, 0.8, 1.0] {
            let q = e.quantile(tau).unwrap();
            assert_eq!(g.quantile(tau).unwrap(), q * q * q);
        }
    }
}
