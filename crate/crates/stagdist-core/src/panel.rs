//! Balanced-panel container with staggered-adoption cohort structure.
//!
//! A unit belongs to cohort `r` if it is first treated in period `r`
//! (treatment is irreversible: treated in every period `t >= r`), or to the
//! never-treated comparison group. Periods are integers `1..=T`; no unit may
//! be treated in period 1.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// First-treatment label of a unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cohort {
    /// First treated in the given period `r >= 2`.
    Treated(u32),
    /// Never treated during the sample window.
    Never,
}

/// Validation and lookup errors for panel construction and slicing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PanelError {
    /// A (unit, period) cell is missing or duplicated.
    UnbalancedPanel { unit: String },
    /// A per-period treatment indicator switched from 1 back to 0.
    TreatmentReversal { unit: String, period: u32 },
    /// No never-treated unit exists; the comparison group is empty.
    NoNeverTreated,
    /// Some unit is already treated in the first period.
    TreatedInFirstPeriod { unit: String },
    /// The requested cohort has no units.
    UnknownGroup { cohort: Cohort },
    /// A period outside `1..=T` was requested.
    PeriodOutOfRange { period: u32, horizon: u32 },
    /// A long difference needs two distinct, ordered periods.
    DegenerateWindow { period: u32 },
    /// Covariate vectors must share one length across units.
    CovariateLengthMismatch { unit: String },
}

impl fmt::Display for PanelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PanelError::UnbalancedPanel { unit } => {
                write!(
                    f,
                    "unbalanced panel: unit `{unit}` is missing a period or duplicated"
                )
            }
            PanelError::TreatmentReversal { unit, period } => {
                write!(f, "treatment reversal for unit `{unit}` at period {period}")
            }
            PanelError::NoNeverTreated => write!(f, "panel contains no never-treated unit"),
            PanelError::TreatedInFirstPeriod { unit } => {
                write!(f, "unit `{unit}` is treated in the first period")
            }
            PanelError::UnknownGroup { cohort } => write!(f, "no units in group {cohort:?}"),
            PanelError::PeriodOutOfRange { period, horizon } => {
                write!(f, "period {period} outside 1..={horizon}")
            }
            PanelError::DegenerateWindow { period } => {
                write!(f, "degenerate difference window at period {period}")
            }
            PanelError::CovariateLengthMismatch { unit } => {
                write!(f, "covariate length mismatch for unit `{unit}`")
            }
        }
    }
}

impl core::error::Error for PanelError {}

/// Balanced unit-by-period outcome panel with cohort labels.
///
/// Outcomes are stored row-major: unit `i`'s outcome in period `t` is
/// `outcomes[i * T + (t - 1)]`. Covariates are time-invariant per unit
/// (read at baseline by the ingestion layer).
#[derive(Clone, Debug)]
pub struct BalancedPanel {
    units: Vec<String>,
    horizon: u32,
    outcomes: Vec<f64>,
    cohort: Vec<Cohort>,
    covariates: Option<Vec<Vec<f64>>>,
}

impl BalancedPanel {
    /// Builds a validated panel.
    ///
    /// `outcomes` must hold `units.len() * horizon` cells, row-major by unit.
    /// Always-treated labels (`Treated(r)` with `r <= 1`) are rejected as
    /// [`PanelError::TreatedInFirstPeriod`]; the ingestion layer drops such
    /// units before construction.
    pub fn new(
        units: Vec<String>,
        horizon: u32,
        outcomes: Vec<f64>,
        cohort: Vec<Cohort>,
        covariates: Option<Vec<Vec<f64>>>,
    ) -> Result<Self, PanelError> {
        let n = units.len();
        if outcomes.len() != n * horizon as usize || cohort.len() != n {
            let unit = units
                .get(outcomes.len() / horizon.max(1) as usize)
                .cloned()
                .unwrap_or_default();
            return Err(PanelError::UnbalancedPanel { unit });
        }
        for (i, c) in cohort.iter().enumerate() {
            if let Cohort::Treated(r) = c {
                if *r <= 1 {
                    return Err(PanelError::TreatedInFirstPeriod {
                        unit: units[i].clone(),
                    });
                }
                if *r > horizon {
                    return Err(PanelError::PeriodOutOfRange {
                        period: *r,
                        horizon,
                    });
                }
            }
        }
        if !cohort.iter().any(|c| *c == Cohort::Never) {
            return Err(PanelError::NoNeverTreated);
        }
        if let Some(cov) = &covariates {
            if cov.len() != n {
                return Err(PanelError::UnbalancedPanel {
                    unit: String::new(),
                });
            }
            let k = cov.first().map_or(0, Vec::len);
            if let Some(i) = cov.iter().position(|x| x.len() != k) {
                return Err(PanelError::CovariateLengthMismatch {
                    unit: units[i].clone(),
                });
            }
        }
        Ok(Self {
            units,
            horizon,
            outcomes,
            cohort,
            covariates,
        })
    }

    /// Number of units.
    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    /// Last period `T`.
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Unit identifiers in stable order.
    pub fn units(&self) -> &[String] {
        &self.units
    }

    /// Cohort labels in unit order.
    pub fn cohorts(&self) -> &[Cohort] {
        &self.cohort
    }

    /// Time-invariant covariate rows, if present.
    pub fn covariates(&self) -> Option<&[Vec<f64>]> {
        self.covariates.as_deref()
    }

    /// Number of covariates per unit (0 when absent).
    pub fn n_covariates(&self) -> usize {
        self.covariates
            .as_ref()
            .and_then(|c| c.first())
            .map_or(0, Vec::len)
    }

    /// Outcome of unit index `i` at period `t`.
    pub fn outcome(&self, i: usize, t: u32) -> f64 {
        self.outcomes[i * self.horizon as usize + (t - 1) as usize]
    }

    /// Sorted list of treated cohorts present in the panel.
    pub fn treated_cohorts(&self) -> Vec<u32> {
        let mut rs: Vec<u32> = self
            .cohort
            .iter()
            .filter_map(|c| match c {
                Cohort::Treated(r) => Some(*r),
                Cohort::Never => None,
            })
            .collect();
        rs.sort_unstable();
        rs.dedup();
        rs
    }

    /// Unit indices belonging to `group`, in stable unit order.
    pub fn group_indices(&self, group: Cohort) -> Vec<usize> {
        (0..self.units.len())
            .filter(|&i| self.cohort[i] == group)
            .collect()
    }

    fn check_period(&self, t: u32) -> Result<(), PanelError> {
        if t < 1 || t > self.horizon {
            return Err(PanelError::PeriodOutOfRange {
                period: t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Outcomes of all units in `group` at period `t`, in stable unit order.
    pub fn slice(&self, group: Cohort, t: u32) -> Result<Vec<f64>, PanelError> {
        self.check_period(t)?;
        let idx = self.group_indices(group);
        if idx.is_empty() {
            return Err(PanelError::UnknownGroup { cohort: group });
        }
        Ok(idx.into_iter().map(|i| self.outcome(i, t)).collect())
    }

    /// Per-unit long difference `Y_to - Y_from` for `group`, in stable order.
    pub fn long_difference(
        &self,
        group: Cohort,
        from: u32,
        to: u32,
    ) -> Result<Vec<f64>, PanelError> {
        self.check_period(from)?;
        self.check_period(to)?;
        if from >= to {
            return Err(PanelError::DegenerateWindow { period: from });
        }
        let idx = self.group_indices(group);
        if idx.is_empty() {
            return Err(PanelError::UnknownGroup { cohort: group });
        }
        Ok(idx
            .into_iter()
            .map(|i| self.outcome(i, to) - self.outcome(i, from))
            .collect())
    }

    /// Empirical cohort share `n_r / n` among all units, per treated cohort.
    pub fn cohort_share(&self, r: u32) -> f64 {
        let n_r = self
            .cohort
            .iter()
            .filter(|c| **c == Cohort::Treated(r))
            .count();
        n_r as f64 / self.units.len() as f64
    }

    /// Panel formed by the unit indices in `draws` (repetition allowed, full
    /// time series preserved); used by pair-bootstrap resampling.
    pub fn resample(&self, draws: &[usize]) -> BalancedPanel {
        let horizon = self.horizon as usize;
        let mut units = Vec::with_capacity(draws.len());
        let mut outcomes = Vec::with_capacity(draws.len() * horizon);
        let mut cohort = Vec::with_capacity(draws.len());
        let mut covariates = self
            .covariates
            .as_ref()
            .map(|_| Vec::with_capacity(draws.len()));
        for &i in draws {
            units.push(self.units[i].clone());
            outcomes.extend_from_slice(&self.outcomes[i * horizon..(i + 1) * horizon]);
            cohort.push(self.cohort[i]);
            if let (Some(dst), Some(src)) = (covariates.as_mut(), self.covariates.as_ref()) {
                dst.push(src[i].clone());
            }
        }
        BalancedPanel {
            units,
            horizon: self.horizon,
            outcomes,
            cohort,
            covariates,
        }
    }
}

/// One sampled individual of a repeated cross section.
#[derive(Clone, Debug)]
pub struct CrossSectionRow {
    /// Sampling period of this individual.
    pub period: u32,
    /// Cohort label (period-invariant attribute of the individual).
    pub cohort: Cohort,
    /// Observed outcome.
    pub outcome: f64,
    /// Optional covariates.
    pub covariates: Vec<f64>,
}

/// Repeated cross sections: independent samples per period.
#[derive(Clone, Debug, Default)]
pub struct RepeatedCrossSection {
    rows: Vec<CrossSectionRow>,
}

impl RepeatedCrossSection {
    /// Wraps validated rows.
    pub fn new(rows: Vec<CrossSectionRow>) -> Self {
        Self { rows }
    }

    /// All rows.
    pub fn rows(&self) -> &[CrossSectionRow] {
        &self.rows
    }

    /// Outcomes of `group` sampled in period `t`.
    pub fn sample(&self, group: Cohort, t: u32) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|row| row.period == t && row.cohort == group)
            .map(|row| row.outcome)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn small_panel() -> BalancedPanel {
        // Two units x two periods; A first treated at t=2, B never treated.
        BalancedPanel::new(
            vec!["A".to_string(), "B".to_string()],
            2,
            vec![1.0, 2.0, 3.0, 4.0],
            vec![Cohort::Treated(2), Cohort::Never],
            None,
        )
        .unwrap()
    }

    #[test]
    fn minimal_valid_design() {
        let p = small_panel();
        assert_eq!(p.treated_cohorts(), vec![2]);
        assert_eq!(p.group_indices(Cohort::Never).len(), 1);
        assert_eq!(p.slice(Cohort::Treated(2), 1).unwrap(), vec![1.0]);
    }

    #[test]
    fn treated_in_first_period_rejected() {
        let err = BalancedPanel::new(
            vec!["A".to_string(), "B".to_string()],
            2,
            vec![0.0; 4],
            vec![Cohort::Treated(1), Cohort::Never],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, PanelError::TreatedInFirstPeriod { .. }));
    }

    #[test]
    fn never_treated_required() {
        let err = BalancedPanel::new(
            vec!["A".to_string()],
            2,
            vec![0.0; 2],
            vec![Cohort::Treated(2)],
            None,
        )
        .unwrap_err();
        assert_eq!(err, PanelError::NoNeverTreated);
    }

    #[test]
    fn long_difference_arithmetic() {
        let p = BalancedPanel::new(
            vec!["a".to_string(), "b".to_string()],
            2,
            vec![0.0, 1.0, 2.0, 3.0],
            vec![Cohort::Never, Cohort::Never],
            None,
        )
        .unwrap();
        assert_eq!(
            p.long_difference(Cohort::Never, 1, 2).unwrap(),
            vec![1.0, 1.0]
        );
        assert!(matches!(
            p.long_difference(Cohort::Never, 2, 2),
            Err(PanelError::DegenerateWindow { .. })
        ));
    }

    #[test]
    fn slice_matches_long_difference() {
        let p = small_panel();
        let d = p.long_difference(Cohort::Never, 1, 2).unwrap();
        let hi = p.slice(Cohort::Never, 2).unwrap();
        let lo = p.slice(Cohort::Never, 1).unwrap();
        for ((d, hi), lo) in d.iter().zip(hi).zip(lo) {
            assert_eq!(*d, hi - lo);
        }
    }

    #[test]
    fn unknown_group_on_empty_cohort() {
        let p = small_panel();
        assert!(matches!(
            p.slice(Cohort::Treated(3), 1),
            Err(PanelError::UnknownGroup { .. })
        ));
    }
}
