//! Estimators of the counterfactual distribution `F_{Y_t(0) | d_r = 1}`:
//! the distribution of untreated potential outcomes the cohort first treated
//! in period `r` would have exhibited at period `t`.
//!
//! All four routes share one structure. Never-treated units supply long
//! differences `Delta_i = Y_{i,t} - Y_{i,base}` from the base period
//! `base = r - rho - 1` (`rho` is the anticipation horizon). Each unit also
//! contributes an adjustment term mapping its base-period level through the
//! never-treated CDF and back through the treated cohort's base-period
//! quantile function. The counterfactual CDF is the step function jumping at
//! the thresholds `Delta_i + adj_i`.
//!
//! * `estimate_unconditional` uses the raw long differences.
//! * `estimate_ipw` first replaces each `Delta_i` by the matching quantile of
//!   the propensity-reweighted long-difference distribution, so the change
//!   marginal reflects the treated cohort's covariate mix.
//! * `estimate_conditional_discrete` runs the unconditional construction
//!   within each discrete covariate cell and averages cell CDFs with the
//!   treated cohort's covariate frequencies.
//! * `estimate_repeated_cross_section` replaces the within-unit long
//!   difference by a rank-matched difference across independent cross
//!   sections (valid under rank invariance over time).

use alloc::vec::Vec;
use core::fmt;

use crate::edf::{rank_transform, Edf, EdfError, WeightedCdf};
use crate::panel::{BalancedPanel, Cohort, PanelError, RepeatedCrossSection};
use crate::propensity::{ipw_weights, PropensityModel};

/// Identification route used to build a counterfactual CDF.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Unconditional distributional parallel trends.
    Unconditional,
    /// Inverse-probability weighting on a fitted propensity model.
    Ipw,
    /// Cell-by-cell estimation over discrete covariates.
    ConditionalDiscrete,
    /// Repeated cross sections under rank invariance.
    RepeatedCrossSection,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Unconditional => "unconditional",
            Method::Ipw => "ipw",
            Method::ConditionalDiscrete => "conditional",
            Method::RepeatedCrossSection => "rcs",
        };
        write!(f, "{s}")
    }
}

/// Errors from counterfactual estimation.
#[derive(Clone, Debug, PartialEq)]
pub enum CfError {
    /// Cohort `r` or the never-treated group has no units.
    EmptyGroup,
    /// `r - rho - 1 < 1`: no pre-treatment base period exists.
    BasePeriodOutOfRange { cohort: u32, anticipation: u32 },
    /// Requested period precedes the first identified one (`t < r - rho`).
    PeriodBeforeTreatment { cohort: u32, period: u32 },
    /// A covariate cell contains treated units but no never-treated support.
    EmptyCell,
    /// More distinct covariate values than the discrete-cell cap allows.
    NonDiscreteCovariate { distinct: usize, cap: usize },
    /// All IPW weights vanished after trimming.
    ZeroTotalWeight,
    /// A repeated cross section lacks one of the required period samples.
    MissingPeriodSample { period: u32 },
    /// Underlying panel error.
    Panel(PanelError),
    /// Underlying propensity-fitting error.
    Propensity(crate::propensity::PropensityError),
}

impl fmt::Display for CfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfError::EmptyGroup => write!(f, "cohort or never-treated group is empty"),
            CfError::BasePeriodOutOfRange { cohort, anticipation } => write!(
                f,
                "no base period: cohort {cohort} with anticipation {anticipation} needs r - rho - 1 >= 1"
            ),
            CfError::PeriodBeforeTreatment { cohort, period } => {
                write!(f, "period {period} precedes identification for cohort {cohort}")
            }
            CfError::EmptyCell => {
                write!(f, "a covariate cell has treated units but no never-treated units")
            }
            CfError::NonDiscreteCovariate { distinct, cap } => {
                write!(f, "{distinct} distinct covariate values exceed the discrete cap {cap}")
            }
            CfError::ZeroTotalWeight => write!(f, "propensity weights sum to zero"),
            CfError::MissingPeriodSample { period } => {
                write!(f, "repeated cross section has no sample for period {period}")
            }
            CfError::Panel(e) => write!(f, "{e}"),
            CfError::Propensity(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for CfError {}

impl From<PanelError> for CfError {
    fn from(e: PanelError) -> Self {
        match e {
            PanelError::UnknownGroup { .. } => CfError::EmptyGroup,
            other => CfError::Panel(other),
        }
    }
}

impl From<EdfError> for CfError {
    fn from(e: EdfError) -> Self {
        match e {
            EdfError::ZeroTotalWeight => CfError::ZeroTotalWeight,
            _ => CfError::EmptyGroup,
        }
    }
}

/// Estimated counterfactual CDF, stored as its exact jump points so quantile
/// inversion is grid-free.
#[derive(Clone, Debug)]
pub struct CounterfactualCdf {
    /// Cohort `r`.
    pub cohort: u32,
    /// Outcome period `t`.
    pub period: u32,
    /// Anticipation horizon `rho` (base period is `r - rho - 1`).
    pub anticipation: u32,
    /// Identification route.
    pub method: Method,
    /// Step CDF over the implied thresholds.
    steps: WeightedCdf,
    /// Sorted thresholds with their jump masses (parallel to the CDF).
    jumps: Vec<(f64, f64)>,
    /// Treated cohort size `n_{r,t}`.
    pub n_treated: usize,
    /// Never-treated size `n_{0,t}`.
    pub n_control: usize,
}

impl CounterfactualCdf {
    fn from_jumps(
        cohort: u32,
        period: u32,
        anticipation: u32,
        method: Method,
        points: Vec<f64>,
        masses: Vec<f64>,
        n_treated: usize,
        n_control: usize,
    ) -> Result<Self, CfError> {
        let steps = WeightedCdf::new(&points, &masses)?;
        let mut jumps: Vec<(f64, f64)> = points.into_iter().zip(masses).collect();
        jumps.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            cohort,
            period,
            anticipation,
            method,
            steps,
            jumps,
            n_treated,
            n_control,
        })
    }

    /// `F(y)` of the estimated counterfactual distribution.
    pub fn cdf_at(&self, y: f64) -> f64 {
        self.steps.cdf_at(y)
    }

    /// Generalized-inverse quantile of the counterfactual distribution.
    pub fn quantile(&self, tau: f64) -> Result<f64, EdfError> {
        self.steps.quantile(tau)
    }

    /// Sorted jump points with their masses (masses sum to one).
    pub fn jumps(&self) -> &[(f64, f64)] {
        &self.jumps
    }

    /// Mean of the counterfactual distribution: the exact jump-weighted
    /// average of the step quantile function.
    pub fn mean(&self) -> f64 {
        self.jumps.iter().map(|(y, w)| y * w).sum()
    }
}

struct Window {
    base: u32,
}

fn window(panel: &BalancedPanel, r: u32, t: u32, rho: u32) -> Result<Window, CfError> {
    if r < rho + 2 {
        return Err(CfError::BasePeriodOutOfRange {
            cohort: r,
            anticipation: rho,
        });
    }
    let base = r - rho - 1;
    if t < r - rho {
        return Err(CfError::PeriodBeforeTreatment {
            cohort: r,
            period: t,
        });
    }
    if t > panel.horizon() {
        return Err(CfError::Panel(PanelError::PeriodOutOfRange {
            period: t,
            horizon: panel.horizon(),
        }));
    }
    Ok(Window { base })
}

/// Counterfactual CDF under unconditional distributional parallel trends.
///
/// Thresholds are `Delta_i + adj_i` over never-treated units `i`, with
/// `adj_i` the base-period level of `i` rank-mapped into the treated
/// cohort's base-period distribution.
pub fn estimate_unconditional(
    panel: &BalancedPanel,
    r: u32,
    t: u32,
    rho: u32,
) -> Result<CounterfactualCdf, CfError> {
    let w = window(panel, r, t, rho)?;
    let treated_pre = Edf::new(panel.slice(Cohort::Treated(r), w.base)?)?;
    let control_pre = panel.slice(Cohort::Never, w.base)?;
    let control_pre_edf = Edf::new(control_pre.clone())?;
    let delta = panel.long_difference(Cohort::Never, w.base, t)?;
    let adj = rank_transform(&treated_pre, &control_pre_edf, &control_pre);
    let n0 = delta.len();
    let points: Vec<f64> = delta.iter().zip(&adj).map(|(d, a)| d + a).collect();
    CounterfactualCdf::from_jumps(
        r,
        t,
        rho,
        Method::Unconditional,
        points,
        alloc::vec![1.0 / n0 as f64; n0],
        treated_pre.len(),
        n0,
    )
}

/// Counterfactual CDF with inverse-probability reweighting of the change
/// distribution (covariate-informed route).
///
/// Each never-treated long difference is first mapped to the matching
/// quantile of the weighted change distribution, using the expected-rank
/// plotting position `rank / (n0 + 1)`; with uniform weights the map is the
/// identity on sample points. Thresholding then proceeds exactly as in the
/// unconditional estimator.
pub fn estimate_ipw(
    panel: &BalancedPanel,
    r: u32,
    t: u32,
    rho: u32,
    model: &PropensityModel,
) -> Result<CounterfactualCdf, CfError> {
    let w = window(panel, r, t, rho)?;
    let treated_pre = Edf::new(panel.slice(Cohort::Treated(r), w.base)?)?;
    let control_pre = panel.slice(Cohort::Never, w.base)?;
    let control_pre_edf = Edf::new(control_pre.clone())?;
    let delta = panel.long_difference(Cohort::Never, w.base, t)?;
    let weights = ipw_weights(model, panel);
    let reweighted = reweight_changes(&delta, &weights)?;
    let adj = rank_transform(&treated_pre, &control_pre_edf, &control_pre);
    let n0 = delta.len();
    let points: Vec<f64> = reweighted.iter().zip(&adj).map(|(d, a)| d + a).collect();
    CounterfactualCdf::from_jumps(
        r,
        t,
        rho,
        Method::Ipw,
        points,
        alloc::vec![1.0 / n0 as f64; n0],
        treated_pre.len(),
        n0,
    )
}

/// Maps each change onto the quantile of the weighted change distribution at
/// its expected rank, preserving the pairing with the unit's own level
/// adjustment (and hence the observed level-change dependence).
pub fn reweight_changes(delta: &[f64], weights: &[f64]) -> Result<Vec<f64>, CfError> {
    let n0 = delta.len();
    let delta_edf = Edf::new(delta.to_vec())?;
    let weighted = WeightedCdf::new(delta, weights)?;
    Ok(delta
        .iter()
        .map(|&d| {
            let u = delta_edf.rank(d) as f64 / (n0 as f64 + 1.0);
            // u lies in (0, 1): rank >= 1 on sample points.
            weighted.quantile(u).unwrap()
        })
        .collect())
}

/// Default cap on distinct covariate values for the discrete route.
pub const DISCRETE_CELL_CAP: usize = 50;

/// Counterfactual CDF conditioning on discrete covariates cell by cell.
pub fn estimate_conditional_discrete(
    panel: &BalancedPanel,
    r: u32,
    t: u32,
    rho: u32,
) -> Result<CounterfactualCdf, CfError> {
    estimate_conditional_discrete_capped(panel, r, t, rho, DISCRETE_CELL_CAP)
}

/// [`estimate_conditional_discrete`] with an explicit cell cap.
pub fn estimate_conditional_discrete_capped(
    panel: &BalancedPanel,
    r: u32,
    t: u32,
    rho: u32,
    cap: usize,
) -> Result<CounterfactualCdf, CfError> {
    let w = window(panel, r, t, rho)?;
    let covariates = panel.covariates().ok_or(CfError::EmptyGroup)?;
    let treated: Vec<usize> = panel.group_indices(Cohort::Treated(r));
    let control: Vec<usize> = panel.group_indices(Cohort::Never);
    if treated.is_empty() || control.is_empty() {
        return Err(CfError::EmptyGroup);
    }

    // Covariate cells keyed by exact bit patterns (discrete values compare
    // exactly; no tolerance matching).
    let key = |i: usize| -> Vec<u64> { covariates[i].iter().map(|x| x.to_bits()).collect() };
    let mut cells: Vec<(Vec<u64>, Vec<usize>, Vec<usize>)> = Vec::new();
    for &i in treated.iter().chain(&control) {
        let k = key(i);
        let slot = match cells.iter_mut().find(|(ck, _, _)| *ck == k) {
            Some(slot) => slot,
            None => {
                cells.push((k, Vec::new(), Vec::new()));
                cells.last_mut().unwrap()
            }
        };
        if panel.cohorts()[i] == Cohort::Never {
            slot.2.push(i);
        } else {
            slot.1.push(i);
        }
    }
    if cells.len() > cap {
        return Err(CfError::NonDiscreteCovariate {
            distinct: cells.len(),
            cap,
        });
    }

    let n_r = treated.len();
    let mut points = Vec::new();
    let mut masses = Vec::new();
    for (_, cell_treated, cell_control) in &cells {
        if cell_treated.is_empty() {
            continue; // zero treated-frequency weight
        }
        if cell_control.is_empty() {
            return Err(CfError::EmptyCell);
        }
        let pre_tr = Edf::new(
            cell_treated
                .iter()
                .map(|&i| panel.outcome(i, w.base))
                .collect(),
        )?;
        let pre_c: Vec<f64> = cell_control
            .iter()
            .map(|&i| panel.outcome(i, w.base))
            .collect();
        let pre_c_edf = Edf::new(pre_c.clone())?;
        let adj = rank_transform(&pre_tr, &pre_c_edf, &pre_c);
        let cell_weight = cell_treated.len() as f64 / n_r as f64;
        let mass = cell_weight / cell_control.len() as f64;
        for (&i, a) in cell_control.iter().zip(&adj) {
            let d = panel.outcome(i, t) - panel.outcome(i, w.base);
            points.push(d + a);
            masses.push(mass);
        }
    }
    CounterfactualCdf::from_jumps(
        r,
        t,
        rho,
        Method::ConditionalDiscrete,
        points,
        masses,
        n_r,
        control.len(),
    )
}

/// Counterfactual CDF from repeated cross sections under rank invariance.
///
/// Never-treated levels sampled at the base period are matched by rank into
/// the never-treated period-`t` sample, giving the synthetic change
/// `Delta~_i`; thresholding proceeds as in the unconditional estimator.
pub fn estimate_repeated_cross_section(
    rcs: &RepeatedCrossSection,
    r: u32,
    t: u32,
    rho: u32,
) -> Result<CounterfactualCdf, CfError> {
    if r < rho + 2 {
        return Err(CfError::BasePeriodOutOfRange {
            cohort: r,
            anticipation: rho,
        });
    }
    let base = r - rho - 1;
    if t < r - rho {
        return Err(CfError::PeriodBeforeTreatment {
            cohort: r,
            period: t,
        });
    }
    let treated_pre_sample = rcs.sample(Cohort::Treated(r), base);
    if treated_pre_sample.is_empty() {
        return Err(CfError::MissingPeriodSample { period: base });
    }
    let control_pre = rcs.sample(Cohort::Never, base);
    if control_pre.is_empty() {
        return Err(CfError::MissingPeriodSample { period: base });
    }
    let control_t = rcs.sample(Cohort::Never, t);
    if control_t.is_empty() {
        return Err(CfError::MissingPeriodSample { period: t });
    }
    let treated_pre = Edf::new(treated_pre_sample)?;
    let control_pre_edf = Edf::new(control_pre.clone())?;
    let control_t_edf = Edf::new(control_t)?;
    // Rank-matched synthetic change for each base-period never-treated level.
    let matched = rank_transform(&control_t_edf, &control_pre_edf, &control_pre);
    let adj = rank_transform(&treated_pre, &control_pre_edf, &control_pre);
    let n0 = control_pre.len();
    let points: Vec<f64> = control_pre
        .iter()
        .zip(&matched)
        .zip(&adj)
        .map(|((v, m), a)| (m - v) + a)
        .collect();
    CounterfactualCdf::from_jumps(
        r,
        t,
        rho,
        Method::RepeatedCrossSection,
        points,
        alloc::vec![1.0 / n0 as f64; n0],
        treated_pre.len(),
        n0,
    )
}

/// Dispatches to the panel-based estimator for `method`, fitting the
/// propensity model internally for the IPW route.
pub fn estimate(
    panel: &BalancedPanel,
    r: u32,
    t: u32,
    rho: u32,
    method: Method,
    trim: f64,
) -> Result<CounterfactualCdf, CfError> {
    match method {
        Method::Unconditional => estimate_unconditional(panel, r, t, rho),
        Method::Ipw => {
            let model = crate::propensity::fit_logit_trimmed(panel, r, trim)
                .map_err(CfError::Propensity)?;
            estimate_ipw(panel, r, t, rho, &model)
        }
        Method::ConditionalDiscrete => estimate_conditional_discrete(panel, r, t, rho),
        Method::RepeatedCrossSection => {
            // Panel rows reinterpreted as independent per-period samples.
            let mut rows = Vec::with_capacity(panel.n_units() * panel.horizon() as usize);
            for i in 0..panel.n_units() {
                for t in 1..=panel.horizon() {
                    rows.push(crate::panel::CrossSectionRow {
                        period: t,
                        cohort: panel.cohorts()[i],
                        outcome: panel.outcome(i, t),
                        covariates: Vec::new(),
                    });
                }
            }
            estimate_repeated_cross_section(&RepeatedCrossSection::new(rows), r, t, rho)
        }
    }
}

/// Average treatment effect on the treated by integrating the counterfactual
/// quantile function exactly over its step jumps.
pub fn att_from_cdf(cf: &CounterfactualCdf, treated: &Edf) -> f64 {
    treated.mean() - cf.mean()
}
