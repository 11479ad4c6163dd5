//! Pair-bootstrap inference: uniform confidence bands for quantile treatment
//! effects and p-values for the stochastic-dominance statistics.
//!
//! Resampling draws whole units with replacement, preserving each unit's
//! time series. Per-replicate randomness is derived by hashing
//! `(master seed, replicate index)`, so results are identical for any thread
//! count and any scheduling order: replicate `b` always sees the same draws,
//! and replicate outputs are collected in index order before aggregation.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::core::counterfactual::{estimate, CfError, Method};
use crate::core::dominance::{sd_statistics, Direction};
use crate::core::edf::Edf;
use crate::core::effects::{qtt_from_cdf, EffectsError};
use crate::core::panel::{BalancedPanel, Cohort};

/// Interquartile range of the standard normal, `z_0.75 - z_0.25`.
pub const NORMAL_IQR: f64 = 1.3489795;

/// Inference errors.
#[derive(Clone, Debug, PartialEq)]
pub enum InfError {
    /// Fewer than 100 replicates, alpha outside (0, 0.5), or a quantile grid
    /// leaving the interior `[0.05, 0.95]`.
    InvalidInput { message: String },
    /// Some quantile level had identical estimates in every resample, so the
    /// bootstrap scale is zero.
    DegenerateBootstrap { tau: f64 },
    /// A resample lost the whole cohort or the whole never-treated group and
    /// the redraw budget (ten times the replicate count) ran out.
    ResampleGroupCollapse,
    /// Estimation failed on the original sample or a resample.
    Estimation(EffectsError),
}

impl fmt::Display for InfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfError::InvalidInput { message } => write!(f, "{message}"),
            InfError::DegenerateBootstrap { tau } => {
                write!(f, "bootstrap scale is zero at quantile level {tau}")
            }
            InfError::ResampleGroupCollapse => {
                write!(
                    f,
                    "resampling kept collapsing a required group; sample too small"
                )
            }
            InfError::Estimation(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for InfError {}

impl From<EffectsError> for InfError {
    fn from(e: EffectsError) -> Self {
        InfError::Estimation(e)
    }
}

impl From<CfError> for InfError {
    fn from(e: CfError) -> Self {
        InfError::Estimation(EffectsError::Counterfactual(e))
    }
}

/// SplitMix64 finalizer: a well-mixed 64-bit hash.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-replicate seed: hash of the master seed and the
/// replicate index, independent of scheduling order.
pub fn replicate_seed(master: u64, b: u64) -> u64 {
    splitmix64(master ^ splitmix64(b))
}

/// RNG for one replicate.
pub fn replicate_rng(master: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replicate_seed(master, b))
}

/// Uniform confidence band over a quantile grid.
#[derive(Clone, Debug, Serialize)]
pub struct BootstrapBand {
    /// Cohort `r`.
    pub cohort: u32,
    /// Outcome period `t`.
    pub period: u32,
    /// Anticipation horizon.
    pub anticipation: u32,
    /// Quantile grid.
    pub taus: Vec<f64>,
    /// QTT estimates on the original sample.
    pub estimate: Vec<f64>,
    /// Bootstrap-mean point estimates (the band center).
    pub center: Vec<f64>,
    /// Per-level scale: bootstrap interquartile range over the normal IQR.
    pub sigma: Vec<f64>,
    /// Critical value of the sup statistic at level `1 - alpha`.
    pub critical: f64,
    /// Lower band.
    pub lower: Vec<f64>,
    /// Upper band.
    pub upper: Vec<f64>,
    /// Replicate count.
    pub b: usize,
    /// Nominal level.
    pub alpha: f64,
    /// Master seed.
    pub seed: u64,
}

/// Draws resamples until `compute` succeeds on one whose cohort-`r` and
/// never-treated groups are both nonempty. Group collapse and structural
/// estimation degeneracies (empty covariate cell, separation) both count
/// against the shared attempt budget; persistent failure reports
/// [`InfError::ResampleGroupCollapse`].
fn resample_until<T>(
    panel: &BalancedPanel,
    r: u32,
    rng: &mut ChaCha8Rng,
    max_attempts: usize,
    mut compute: impl FnMut(&BalancedPanel) -> Result<T, InfError>,
) -> Result<T, InfError> {
    let n = panel.n_units();
    for _ in 0..max_attempts {
        let draws: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        let resampled = panel.resample(&draws);
        let has_cohort = resampled.cohorts().iter().any(|c| *c == Cohort::Treated(r));
        let has_control = resampled.cohorts().iter().any(|c| *c == Cohort::Never);
        if !(has_cohort && has_control) {
            continue;
        }
        match compute(&resampled) {
            Ok(v) => return Ok(v),
            Err(InfError::Estimation(_)) => continue,
            Err(other) => return Err(other),
        }
    }
    Err(InfError::ResampleGroupCollapse)
}

fn check_grid(taus: &[f64]) -> Result<(), InfError> {
    if taus.is_empty() || taus.iter().any(|&t| !(0.05..=0.95).contains(&t)) {
        return Err(InfError::InvalidInput {
            message: "quantile grid must be nonempty and lie within [0.05, 0.95]".into(),
        });
    }
    Ok(())
}

fn qtt_values(
    panel: &BalancedPanel,
    r: u32,
    t: u32,
    rho: u32,
    taus: &[f64],
    method: Method,
    trim: f64,
) -> Result<Vec<f64>, InfError> {
    let cf = estimate(panel, r, t, rho, method, trim)?;
    let treated = Edf::new(panel.slice(Cohort::Treated(r), t).map_err(CfError::from)?)
        .map_err(CfError::from)?;
    Ok(qtt_from_cdf(&treated, &cf, taus))
}

/// Empirical quantile (inf form) of an unsorted sample.
fn empirical_quantile(values: &[f64], tau: f64) -> f64 {
    Edf::new(values.to_vec()).unwrap().quantile(tau).unwrap()
}

/// Builds the uniform band for `QTT_{r,t}(tau)` over the grid.
///
/// Per resample the whole QTT curve is recomputed; the per-level scale is
/// the bootstrap interquartile range divided by the normal IQR; the sup
/// statistic `I^b = sup_tau sqrt(n) |QTT^b - QTT| / sigma(tau)` yields the
/// critical value as its `1 - alpha` empirical quantile, and the band is
/// the bootstrap mean plus/minus `critical * sigma / sqrt(n)`.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_band(
    panel: &BalancedPanel,
    r: u32,
    t: u32,
    rho: u32,
    taus: &[f64],
    method: Method,
    trim: f64,
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<BootstrapBand, InfError> {
    if b < 100 {
        return Err(InfError::InvalidInput {
            message: "need at least 100 replicates".into(),
        });
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(InfError::InvalidInput {
            message: "alpha must lie in (0, 0.5)".into(),
        });
    }
    check_grid(taus)?;

    let estimate0 = qtt_values(panel, r, t, rho, taus, method, trim)?;
    let max_attempts = 10 * b;
    let replicates: Vec<Vec<f64>> = (0..b)
        .into_par_iter()
        .map(|bi| {
            let mut rng = replicate_rng(seed, bi as u64);
            resample_until(panel, r, &mut rng, max_attempts, |resampled| {
                qtt_values(resampled, r, t, rho, taus, method, trim)
            })
        })
        .collect::<Result<_, InfError>>()?;

    let n = panel.n_units() as f64;
    let k = taus.len();
    let mut sigma = Vec::with_capacity(k);
    let mut center = Vec::with_capacity(k);
    for j in 0..k {
        let column: Vec<f64> = replicates.iter().map(|rep| rep[j]).collect();
        let iqr = empirical_quantile(&column, 0.75) - empirical_quantile(&column, 0.25);
        let s = iqr / NORMAL_IQR;
        if s <= 0.0 {
            return Err(InfError::DegenerateBootstrap { tau: taus[j] });
        }
        sigma.push(s);
        center.push(column.iter().sum::<f64>() / b as f64);
    }
    let sup_stats: Vec<f64> = replicates
        .iter()
        .map(|rep| {
            rep.iter()
                .zip(&estimate0)
                .zip(&sigma)
                .map(|((v, e), s)| (n.sqrt() * (v - e) / s).abs())
                .fold(0.0f64, f64::max)
        })
        .collect();
    let critical = empirical_quantile(&sup_stats, 1.0 - alpha);
    let lower: Vec<f64> = center
        .iter()
        .zip(&sigma)
        .map(|(c, s)| c - critical * s / n.sqrt())
        .collect();
    let upper: Vec<f64> = center
        .iter()
        .zip(&sigma)
        .map(|(c, s)| c + critical * s / n.sqrt())
        .collect();
    Ok(BootstrapBand {
        cohort: r,
        period: t,
        anticipation: rho,
        taus: taus.to_vec(),
        estimate: estimate0,
        center,
        sigma,
        critical,
        lower,
        upper,
        b,
        alpha,
        seed,
    })
}

/// Stochastic-dominance test report.
#[derive(Clone, Debug, Serialize)]
pub struct SdTestResult {
    /// Cohort `r`.
    pub cohort: u32,
    /// Outcome period `t`.
    pub period: u32,
    /// First-order statistic on the original sample.
    pub d: f64,
    /// Second-order statistic on the original sample.
    pub s: f64,
    /// Direction of candidate first-order dominance.
    pub d_direction: String,
    /// Direction of candidate second-order dominance.
    pub s_direction: String,
    /// Bootstrap probability that the first-order statistic is nonpositive.
    pub p_d_nonpositive: f64,
    /// Bootstrap probability that the second-order statistic is nonpositive.
    pub p_s_nonpositive: f64,
    /// First-order dominance declared: point statistic nonpositive and
    /// `P(d <= 0)` above 0.90.
    pub fsd_declared: bool,
    /// Second-order analog of the declaration rule.
    pub ssd_declared: bool,
    /// Replicate count.
    pub b: usize,
    /// Master seed.
    pub seed: u64,
}

fn direction_label(d: Direction) -> String {
    match d {
        Direction::TreatedDominates => "treated".into(),
        Direction::CounterfactualDominates => "counterfactual".into(),
    }
}

/// Pair-bootstrap p-values for the dominance statistics at one `(r, t)`.
#[allow(clippy::too_many_arguments)]
pub fn sd_pair_bootstrap(
    panel: &BalancedPanel,
    r: u32,
    t: u32,
    rho: u32,
    method: Method,
    trim: f64,
    b: usize,
    seed: u64,
) -> Result<SdTestResult, InfError> {
    if b < 100 {
        return Err(InfError::InvalidInput {
            message: "need at least 100 replicates".into(),
        });
    }
    let point = sd_pair_point(panel, r, t, rho, method, trim)?;
    let max_attempts = 10 * b;
    let stats: Vec<(f64, f64)> = (0..b)
        .into_par_iter()
        .map(|bi| {
            let mut rng = replicate_rng(seed, bi as u64);
            resample_until(panel, r, &mut rng, max_attempts, |resampled| {
                sd_pair_point(resampled, r, t, rho, method, trim).map(|s| (s.d, s.s))
            })
        })
        .collect::<Result<_, InfError>>()?;
    let p_d = stats.iter().filter(|(d, _)| *d <= 0.0).count() as f64 / b as f64;
    let p_s = stats.iter().filter(|(_, s)| *s <= 0.0).count() as f64 / b as f64;
    Ok(SdTestResult {
        cohort: r,
        period: t,
        d: point.d,
        s: point.s,
        d_direction: direction_label(point.d_direction),
        s_direction: direction_label(point.s_direction),
        p_d_nonpositive: p_d,
        p_s_nonpositive: p_s,
        fsd_declared: point.d <= 0.0 && p_d > 0.90,
        ssd_declared: point.s <= 0.0 && p_s > 0.90,
        b,
        seed,
    })
}

fn sd_pair_point(
    panel: &BalancedPanel,
    r: u32,
    t: u32,
    rho: u32,
    method: Method,
    trim: f64,
) -> Result<crate::core::dominance::SdStatistics, InfError> {
    let cf = estimate(panel, r, t, rho, method, trim)?;
    let treated = Edf::new(panel.slice(Cohort::Treated(r), t).map_err(CfError::from)?)
        .map_err(CfError::from)?;
    Ok(sd_statistics(&treated, &cf))
}
