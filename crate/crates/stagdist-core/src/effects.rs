//! Cohort-time quantile treatment effects, aggregations, and copula
//! diagnostics.
//!
//! The cohort-time parameter is
//! `QTT_{r,t}(tau) = F^{-1}_{Y_t(r)|d_r=1}(tau) - F^{-1}_{Y_t(0)|d_r=1}(tau)`:
//! the gap between the observed treated quantile and the counterfactual
//! quantile at level `tau`. Aggregations average the surface across cohorts
//! at a fixed exposure length (event time) or across all post-treatment
//! cells with cohort-share weights.

use alloc::vec::Vec;
use core::fmt;

use crate::counterfactual::{estimate, CfError, CounterfactualCdf, Method};
use crate::edf::Edf;
use crate::panel::{BalancedPanel, Cohort};

/// Errors from surface construction and aggregation.
#[derive(Clone, Debug, PartialEq)]
pub enum EffectsError {
    /// No cohort satisfies `r + e <= T` for the requested event time.
    NoFeasibleCohort { event_time: u32 },
    /// The surface holds no entries.
    EmptySurface,
    /// The copula diagnostic needs at least two pre-treatment periods.
    InsufficientPrePeriods { cohort: u32 },
    /// Underlying estimation error.
    Counterfactual(CfError),
}

impl fmt::Display for EffectsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EffectsError::NoFeasibleCohort { event_time } => {
                write!(f, "no cohort observed for {event_time} exposure periods")
            }
            EffectsError::EmptySurface => write!(f, "quantile surface is empty"),
            EffectsError::InsufficientPrePeriods { cohort } => {
                write!(f, "cohort {cohort} lacks two pre-treatment periods")
            }
            EffectsError::Counterfactual(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for EffectsError {}

impl From<CfError> for EffectsError {
    fn from(e: CfError) -> Self {
        EffectsError::Counterfactual(e)
    }
}

/// One estimated surface cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QttEntry {
    /// Cohort `r`.
    pub cohort: u32,
    /// Outcome period `t`.
    pub period: u32,
    /// Quantile level.
    pub tau: f64,
    /// Estimated treatment effect at `tau`.
    pub qtt: f64,
    /// Treated sample size for this cell.
    pub n_treated: usize,
    /// Never-treated sample size for this cell.
    pub n_control: usize,
}

/// QTT estimates indexed by cohort, period, and quantile level.
#[derive(Clone, Debug, Default)]
pub struct QttSurface {
    /// Anticipation horizon used throughout the surface.
    pub anticipation: u32,
    /// Quantile grid shared by all cells.
    pub taus: Vec<f64>,
    /// Estimated cells, ordered by (cohort, period, tau).
    pub entries: Vec<QttEntry>,
}

impl QttSurface {
    /// Looks up the estimate at one cell.
    pub fn get(&self, r: u32, t: u32, tau: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.cohort == r && e.period == t && e.tau == tau)
            .map(|e| e.qtt)
    }

    /// Sorted distinct cohorts present.
    pub fn cohorts(&self) -> Vec<u32> {
        let mut rs: Vec<u32> = self.entries.iter().map(|e| e.cohort).collect();
        rs.sort_unstable();
        rs.dedup();
        rs
    }

    /// Largest period present.
    pub fn max_period(&self) -> Option<u32> {
        self.entries.iter().map(|e| e.period).max()
    }
}

/// QTT values for one `(r, t)` cell: treated quantiles minus counterfactual
/// quantiles over the grid.
pub fn qtt_from_cdf(treated: &Edf, cf: &CounterfactualCdf, taus: &[f64]) -> Vec<f64> {
    taus.iter()
        .map(|&tau| {
            // Grids live in (0, 1); both inversions are defined there.
            treated.quantile(tau).unwrap() - cf.quantile(tau).unwrap()
        })
        .collect()
}

/// Estimates QTT for one `(r, t)` pair and appends it to a surface slice.
pub fn qtt(
    panel: &BalancedPanel,
    r: u32,
    t: u32,
    rho: u32,
    taus: &[f64],
    method: Method,
    trim: f64,
) -> Result<Vec<QttEntry>, EffectsError> {
    let cf = estimate(panel, r, t, rho, method, trim)?;
    let treated = Edf::new(panel.slice(Cohort::Treated(r), t).map_err(CfError::from)?)
        .map_err(CfError::from)?;
    let values = qtt_from_cdf(&treated, &cf, taus);
    Ok(taus
        .iter()
        .zip(values)
        .map(|(&tau, qtt)| QttEntry {
            cohort: r,
            period: t,
            tau,
            qtt,
            n_treated: cf.n_treated,
            n_control: cf.n_control,
        })
        .collect())
}

/// Estimates the full surface over every identified `(r, t)` cell
/// (`t >= r - rho` with a valid base period).
pub fn qtt_surface(
    panel: &BalancedPanel,
    rho: u32,
    taus: &[f64],
    method: Method,
    trim: f64,
) -> Result<QttSurface, EffectsError> {
    let mut entries = Vec::new();
    for r in panel.treated_cohorts() {
        if r < rho + 2 {
            continue; // no pre-anticipation base period for this cohort
        }
        for t in (r - rho)..=panel.horizon() {
            entries.extend(qtt(panel, r, t, rho, taus, method, trim)?);
        }
    }
    if entries.is_empty() {
        return Err(EffectsError::EmptySurface);
    }
    Ok(QttSurface {
        anticipation: rho,
        taus: taus.to_vec(),
        entries,
    })
}

/// Kind of aggregation applied to a surface.
#[derive(Clone, Debug, PartialEq)]
pub enum AggregationKind {
    /// Average across cohorts observed `e` periods after first treatment.
    EventTime { event_time: u32 },
    /// Share-weighted average over all post-treatment cells, normalized so
    /// weights sum to one.
    OverallWeighted,
    /// Caller-supplied weights per `(r, t)` cell.
    Custom,
}

/// Aggregated parameter with the weights that produced it.
#[derive(Clone, Debug)]
pub struct Aggregation {
    /// What was aggregated.
    pub kind: AggregationKind,
    /// One value per quantile level, ordered like the input grid.
    pub values: Vec<(f64, f64)>,
    /// Weights applied per `(r, t)` cell (shared across quantile levels).
    pub weights: Vec<(u32, u32, f64)>,
}

/// Event-time aggregation: cohorts exposed for exactly `e` periods, with
/// shares renormalized over the feasible cohorts (`r + e <= T`).
pub fn aggregate_event_time(
    surface: &QttSurface,
    shares: &[(u32, f64)],
    event_time: u32,
) -> Result<Aggregation, EffectsError> {
    let horizon = surface.max_period().ok_or(EffectsError::EmptySurface)?;
    let feasible: Vec<(u32, f64)> = shares
        .iter()
        .copied()
        .filter(|(r, _)| r + event_time <= horizon)
        .collect();
    let total: f64 = feasible.iter().map(|(_, s)| s).sum();
    if feasible.is_empty() || total <= 0.0 {
        return Err(EffectsError::NoFeasibleCohort { event_time });
    }
    let weights: Vec<(u32, u32, f64)> = feasible
        .iter()
        .map(|&(r, s)| (r, r + event_time, s / total))
        .collect();
    let values = weighted_values(surface, &weights)?;
    Ok(Aggregation {
        kind: AggregationKind::EventTime { event_time },
        values,
        weights,
    })
}

/// Overall weighted aggregation over all post-treatment cells: cohort-share
/// weights normalized by their grand total `kappa`.
pub fn aggregate_overall(
    surface: &QttSurface,
    shares: &[(u32, f64)],
) -> Result<Aggregation, EffectsError> {
    let horizon = surface.max_period().ok_or(EffectsError::EmptySurface)?;
    let mut raw: Vec<(u32, u32, f64)> = Vec::new();
    for &(r, s) in shares {
        for t in r..=horizon {
            raw.push((r, t, s));
        }
    }
    let kappa: f64 = raw.iter().map(|(_, _, w)| w).sum();
    if raw.is_empty() || kappa <= 0.0 {
        return Err(EffectsError::EmptySurface);
    }
    let weights: Vec<(u32, u32, f64)> =
        raw.into_iter().map(|(r, t, w)| (r, t, w / kappa)).collect();
    let values = weighted_values(surface, &weights)?;
    Ok(Aggregation {
        kind: AggregationKind::OverallWeighted,
        values,
        weights,
    })
}

/// Aggregation with caller-supplied `(r, t, weight)` cells; weights are
/// normalized to sum one.
pub fn aggregate_custom(
    surface: &QttSurface,
    weights: &[(u32, u32, f64)],
) -> Result<Aggregation, EffectsError> {
    let total: f64 = weights.iter().map(|(_, _, w)| w).sum();
    if weights.is_empty() || total <= 0.0 {
        return Err(EffectsError::EmptySurface);
    }
    let weights: Vec<(u32, u32, f64)> =
        weights.iter().map(|&(r, t, w)| (r, t, w / total)).collect();
    let values = weighted_values(surface, &weights)?;
    Ok(Aggregation {
        kind: AggregationKind::Custom,
        values,
        weights,
    })
}

fn weighted_values(
    surface: &QttSurface,
    weights: &[(u32, u32, f64)],
) -> Result<Vec<(f64, f64)>, EffectsError> {
    surface
        .taus
        .iter()
        .map(|&tau| {
            let mut acc = 0.0;
            for &(r, t, w) in weights {
                let q = surface.get(r, t, tau).ok_or(EffectsError::EmptySurface)?;
                acc += w * q;
            }
            Ok((tau, acc))
        })
        .collect()
}

/// Kendall's tau-b between two paired samples (tie-corrected).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut ties_x = 0i64;
    let mut ties_y = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue; // joint ties drop from both denominator factors
            } else if dx == 0.0 {
                ties_x += 1;
            } else if dy == 0.0 {
                ties_y += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n0 = (n as i64) * (n as i64 - 1) / 2;
    // Single square root of the product keeps tie-free cases exact.
    let denom = libm::sqrt(((n0 - ties_x) * (n0 - ties_y)) as f64);
    if denom == 0.0 {
        return 0.0;
    }
    (concordant - discordant) as f64 / denom
}

/// Copula diagnostic: Kendall's tau-b between the lagged level `Y_{s-1}` and
/// the change `Y_s - Y_{s-1}`, pooled over the given periods `s`, computed
/// side by side for cohort `r` and the never-treated group.
///
/// Under copula invariance the two correlations estimate the same quantity;
/// a visible gap flags dependence differences between the groups.
pub fn kendall_tau_diagnostic(
    panel: &BalancedPanel,
    r: u32,
    periods: &[u32],
) -> Result<(f64, f64), EffectsError> {
    if periods.is_empty() || periods.iter().any(|&s| s < 2 || s > panel.horizon()) {
        return Err(EffectsError::InsufficientPrePeriods { cohort: r });
    }
    let pooled = |group: Cohort| -> Result<(Vec<f64>, Vec<f64>), EffectsError> {
        let idx = panel.group_indices(group);
        if idx.is_empty() {
            return Err(EffectsError::Counterfactual(CfError::EmptyGroup));
        }
        let mut levels = Vec::new();
        let mut changes = Vec::new();
        for &s in periods {
            for &i in &idx {
                let lag = panel.outcome(i, s - 1);
                levels.push(lag);
                changes.push(panel.outcome(i, s) - lag);
            }
        }
        Ok((levels, changes))
    };
    let (lt, ct) = pooled(Cohort::Treated(r))?;
    let (lc, cc) = pooled(Cohort::Never)?;
    Ok((kendall_tau_b(&lt, &ct), kendall_tau_b(&lc, &cc)))
}

/// Pre-treatment diagnostic periods for cohort `r` under anticipation `rho`:
/// every `s` with both `s-1` and `s` strictly before `r - rho`.
pub fn pre_treatment_periods(r: u32, rho: u32) -> Vec<u32> {
    if r < rho + 2 {
        return Vec::new();
    }
    (2..r - rho).collect()
}
