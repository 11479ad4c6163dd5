//! Generalized propensity score estimation.
//!
//! For cohort `r`, the score `P(d_r = 1 | X, d_r + C = 1)` is the probability
//! of belonging to cohort `r` rather than the never-treated group, given
//! covariates. It is estimated as a binary logit on the cohort-`r` and
//! never-treated subsample by maximum likelihood (iteratively reweighted
//! least squares), one model per cohort.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::panel::{BalancedPanel, Cohort};

/// Default trimming bound keeping fitted probabilities away from 0 and 1.
pub const DEFAULT_TRIM: f64 = 0.001;

/// Convergence tolerance on the maximal score (gradient) component.
const SCORE_TOL: f64 = 1e-8;

/// Maximum IRLS iterations before declaring failure.
const MAX_ITER: usize = 100;

/// Ridge added to the Hessian diagonal when the weighted design is
/// (numerically) singular near separation.
const RIDGE: f64 = 1e-8;

/// Errors from propensity fitting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropensityError {
    /// The panel carries no covariates.
    MissingCovariates,
    /// The likelihood diverges (perfect separation): coefficients grow
    /// without bound and the score does not vanish.
    PerfectSeparation,
    /// Cohort or never-treated group empty.
    EmptyGroup,
}

impl fmt::Display for PropensityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropensityError::MissingCovariates => {
                write!(
                    f,
                    "panel has no covariate columns for propensity estimation"
                )
            }
            PropensityError::PerfectSeparation => {
                write!(
                    f,
                    "logit did not converge: covariates perfectly separate the groups"
                )
            }
            PropensityError::EmptyGroup => write!(f, "cohort or never-treated group is empty"),
        }
    }
}

impl core::error::Error for PropensityError {}

/// Fitted binary logit for one cohort-versus-never-treated contrast.
#[derive(Clone, Debug)]
pub struct PropensityModel {
    /// Cohort `r` this model contrasts against the never-treated group.
    pub cohort: u32,
    /// Intercept followed by one slope per covariate.
    pub coefficients: Vec<f64>,
    /// Trimming bound applied to fitted probabilities.
    pub trim: f64,
    /// Number of fitted probabilities that hit the trimming bound.
    pub trimmed: usize,
}

impl PropensityModel {
    /// Fitted probability for a covariate row, trimmed into
    /// `[trim, 1 - trim]`. Trimming events are not counted here; the count
    /// stored on the model refers to the estimation sample.
    pub fn probability(&self, covariates: &[f64]) -> f64 {
        let mut xb = self.coefficients[0];
        for (b, x) in self.coefficients[1..].iter().zip(covariates) {
            xb += b * x;
        }
        let p = 1.0 / (1.0 + libm::exp(-xb));
        p.clamp(self.trim, 1.0 - self.trim)
    }
}

/// Solves the symmetric linear system `H b = g` in place by Gaussian
/// elimination with partial pivoting. Returns `None` when singular beyond
/// rescue.
fn solve(mut h: Vec<Vec<f64>>, mut g: Vec<f64>) -> Option<Vec<f64>> {
    let n = g.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| h[a][col].abs().total_cmp(&h[b][col].abs()))?;
        if h[pivot][col].abs() < 1e-300 {
            return None;
        }
        h.swap(col, pivot);
        g.swap(col, pivot);
        for row in col + 1..n {
            let f = h[row][col] / h[col][col];
            for k in col..n {
                h[row][k] -= f * h[col][k];
            }
            g[row] -= f * g[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = g[row];
        for k in row + 1..n {
            acc -= h[row][k] * x[k];
        }
        x[row] = acc / h[row][row];
    }
    Some(x)
}

/// Fits the cohort-`r` versus never-treated logit by IRLS.
///
/// Converged when the largest score component falls below `1e-8`; a ridge of
/// `1e-8` is added to the Hessian diagonal if the weighted design turns
/// singular near separation. Non-convergence with diverging coefficients is
/// reported as [`PropensityError::PerfectSeparation`].
pub fn fit_logit(panel: &BalancedPanel, cohort: u32) -> Result<PropensityModel, PropensityError> {
    fit_logit_trimmed(panel, cohort, DEFAULT_TRIM)
}

/// [`fit_logit`] with an explicit trimming bound.
pub fn fit_logit_trimmed(
    panel: &BalancedPanel,
    cohort: u32,
    trim: f64,
) -> Result<PropensityModel, PropensityError> {
    let covariates = panel
        .covariates()
        .ok_or(PropensityError::MissingCovariates)?;
    let k = panel.n_covariates();
    let treated = panel.group_indices(Cohort::Treated(cohort));
    let control = panel.group_indices(Cohort::Never);
    if treated.is_empty() || control.is_empty() {
        return Err(PropensityError::EmptyGroup);
    }

    // Stacked estimation sample: label 1 for cohort r, 0 for never-treated.
    let rows: Vec<(usize, f64)> = treated
        .iter()
        .map(|&i| (i, 1.0))
        .chain(control.iter().map(|&i| (i, 0.0)))
        .collect();

    let dim = k + 1;
    let mut beta = vec![0.0; dim];
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let mut score = vec![0.0; dim];
        let mut hessian = vec![vec![0.0; dim]; dim];
        for &(i, label) in &rows {
            let x = &covariates[i];
            let mut xb = beta[0];
            for (b, v) in beta[1..].iter().zip(x) {
                xb += b * v;
            }
            let p = 1.0 / (1.0 + libm::exp(-xb));
            let w = p * (1.0 - p);
            let resid = label - p;
            for a in 0..dim {
                let xa = if a == 0 { 1.0 } else { x[a - 1] };
                score[a] += resid * xa;
                for b in a..dim {
                    let xbv = if b == 0 { 1.0 } else { x[b - 1] };
                    hessian[a][b] += w * xa * xbv;
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                hessian[a][b] = hessian[b][a];
            }
        }
        let max_score = score.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if max_score < SCORE_TOL {
            converged = true;
            break;
        }
        let step = match solve(hessian.clone(), score.clone()) {
            Some(step) => step,
            None => {
                let mut ridged = hessian;
                for (a, row) in ridged.iter_mut().enumerate() {
                    row[a] += RIDGE;
                }
                solve(ridged, score).ok_or(PropensityError::PerfectSeparation)?
            }
        };
        for (b, s) in beta.iter_mut().zip(&step) {
            *b += s;
        }
        if beta.iter().any(|b| !b.is_finite() || b.abs() > 1e8) {
            return Err(PropensityError::PerfectSeparation);
        }
    }
    // Under perfect separation the score can vanish numerically once the
    // coefficients push every fitted probability to its label; treat a
    // "converged" fit that classifies the whole sample beyond the trimming
    // bounds as separation too rather than returning a degenerate model.
    if !converged || beta.iter().any(|b| b.abs() > 1e3) {
        return Err(PropensityError::PerfectSeparation);
    }

    let mut model = PropensityModel {
        cohort,
        coefficients: beta,
        trim,
        trimmed: 0,
    };
    let separated = rows.iter().all(|&(i, label)| {
        let p = model.probability(&covariates[i]);
        if label > 0.5 {
            p >= 1.0 - trim
        } else {
            p <= trim
        }
    });
    if separated {
        return Err(PropensityError::PerfectSeparation);
    }
    // Count trimming events over the estimation sample.
    let trimmed = rows
        .iter()
        .filter(|&&(i, _)| {
            let p = model.probability(&covariates[i]);
            p <= trim || p >= 1.0 - trim
        })
        .count();
    model.trimmed = trimmed;
    Ok(model)
}

/// Raw inverse-probability weights `p(x_i) / (1 - p(x_i))` over never-treated
/// units, in stable unit order. Normalization to sum one happens downstream
/// in the weighted CDF.
pub fn ipw_weights(model: &PropensityModel, panel: &BalancedPanel) -> Vec<f64> {
    let covariates = panel.covariates().expect("model was fitted on covariates");
    panel
        .group_indices(Cohort::Never)
        .into_iter()
        .map(|i| {
            let p = model.probability(&covariates[i]);
            p / (1.0 - p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn panel_with_covariates(x: Vec<f64>, labels: Vec<Cohort>) -> BalancedPanel {
        let n = x.len();
        BalancedPanel::new(
            (0..n).map(|i| i.to_string()).collect(),
            2,
            vec![0.0; 2 * n],
            labels,
            Some(x.into_iter().map(|v| vec![v]).collect()),
        )
        .unwrap()
    }

    #[test]
    fn intercept_only_recovers_share() {
        // Covariate constant: slope unidentified-free, fitted p = share.
        let labels = vec![
            Cohort::Treated(2),
            Cohort::Treated(2),
            Cohort::Never,
            Cohort::Never,
            Cohort::Never,
            Cohort::Never,
        ];
        let p = panel_with_covariates(vec![1.0; 6], labels);
        let m = fit_logit(&p, 2).unwrap();
        let fitted = m.probability(&[1.0]);
        assert!((fitted - 2.0 / 6.0).abs() < 1e-6, "fitted {fitted}");
    }

    #[test]
    fn separation_detected() {
        let labels = vec![
            Cohort::Treated(2),
            Cohort::Treated(2),
            Cohort::Never,
            Cohort::Never,
        ];
        let p = panel_with_covariates(vec![2.0, 3.0, -2.0, -3.0], labels);
        assert_eq!(
            fit_logit(&p, 2).unwrap_err(),
            PropensityError::PerfectSeparation
        );
    }

    #[test]
    fn missing_covariates_detected() {
        let p = BalancedPanel::new(
            vec!["a".to_string(), "b".to_string()],
            2,
            vec![0.0; 4],
            vec![Cohort::Treated(2), Cohort::Never],
            None,
        )
        .unwrap();
        assert_eq!(
            fit_logit(&p, 2).unwrap_err(),
            PropensityError::MissingCovariates
        );
    }

    #[test]
    fn slope_sign_monotonicity() {
        // Higher covariate values concentrated (but overlapping) in the
        // treated group.
        let x = vec![1.5, -0.4, 1.1, -0.9, -1.3, 0.6, 0.1, -0.8];
        let labels = vec![
            Cohort::Treated(2),
            Cohort::Treated(2),
            Cohort::Treated(2),
            Cohort::Never,
            Cohort::Never,
            Cohort::Never,
            Cohort::Never,
            Cohort::Never,
        ];
        let p = panel_with_covariates(x, labels);
        let m = fit_logit(&p, 2).unwrap();
        assert!(m.coefficients[1] > 0.0);
        assert!(m.probability(&[1.0]) > m.probability(&[0.0]));
    }

    #[test]
    fn uniform_probabilities_give_unit_weights() {
        let labels = vec![Cohort::Treated(2), Cohort::Never, Cohort::Never];
        let p = panel_with_covariates(vec![0.0; 3], labels);
        let m = PropensityModel {
            cohort: 2,
            coefficients: vec![0.0, 0.0],
            trim: 0.001,
            trimmed: 0,
        };
        let w = ipw_weights(&m, &p);
        assert_eq!(w, vec![1.0, 1.0]);
    }

    #[test]
    fn trimming_bounds_weights() {
        let m = PropensityModel {
            cohort: 2,
            coefficients: vec![50.0, 0.0],
            trim: 0.001,
            trimmed: 0,
        };
        let p = m.probability(&[0.0]);
        assert!((p - 0.999).abs() < 1e-12);
    }
}
