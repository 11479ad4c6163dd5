//! Shared helpers for integration tests: naive re-implementations of the
//! distributional primitives and a randomized micro-panel generator.
//!
//! Each test target uses a different subset of these helpers.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use stagdist::core::counterfactual::CounterfactualCdf;
use stagdist::core::panel::{BalancedPanel, Cohort};

/// Agreement tolerance between library and brute-force evaluations.
pub const TOL: f64 = 1e-12;

/// Naive right-continuous empirical CDF: a counting loop.
pub fn o_cdf(sample: &[f64], y: f64) -> f64 {
    sample.iter().filter(|&&x| x <= y).count() as f64 / sample.len() as f64
}

/// Naive generalized-inverse quantile: ceil(n*tau)-th order statistic.
pub fn o_quantile(sample: &[f64], tau: f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let k = (n as f64 * tau - 1e-12).ceil() as usize;
    s[k.clamp(1, n) - 1]
}

/// Naive rank transform of one value through the reference CDF and the
/// target quantile, with the zero-CDF clamp.
pub fn o_rank_map(target: &[f64], reference: &[f64], v: f64) -> f64 {
    let u = o_cdf(reference, v).max(1.0 / reference.len() as f64);
    o_quantile(target, u)
}

/// Weighted step distribution evaluated by sorting pairs and accumulating.
pub struct OWeighted {
    pub points: Vec<f64>,
    pub cum: Vec<f64>,
}

impl OWeighted {
    pub fn new(points: &[f64], weights: &[f64]) -> Self {
        let mut pairs: Vec<(f64, f64)> = points
            .iter()
            .copied()
            .zip(weights.iter().copied())
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = weights.iter().sum();
        let mut cum = Vec::new();
        let mut acc = 0.0;
        for &(_, w) in &pairs {
            acc += w;
            cum.push(acc / total);
        }
        *cum.last_mut().unwrap() = 1.0;
        Self {
            points: pairs.into_iter().map(|p| p.0).collect(),
            cum,
        }
    }

    pub fn cdf_at(&self, y: f64) -> f64 {
        let mut out = 0.0;
        for (p, c) in self.points.iter().zip(&self.cum) {
            if *p <= y {
                out = *c;
            }
        }
        out
    }

    pub fn quantile(&self, tau: f64) -> f64 {
        for (p, c) in self.points.iter().zip(&self.cum) {
            if *c >= tau - 1e-12 {
                return *p;
            }
        }
        *self.points.last().unwrap()
    }
}

/// Compares the estimated distribution against an oracle step distribution
/// on quantile and CDF queries.
pub fn assert_matches(cf: &CounterfactualCdf, oracle: &OWeighted, label: &str) {
    for tau in [0.08, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 0.97, 1.0] {
        let got = cf.quantile(tau).unwrap();
        let want = oracle.quantile(tau);
        assert!(
            (got - want).abs() <= TOL,
            "{label}: quantile({tau}) = {got}, oracle {want}"
        );
    }
    let mut probes: Vec<f64> = oracle.points.clone();
    probes.extend(oracle.points.iter().map(|p| p - 1e-9));
    probes.extend(oracle.points.iter().map(|p| p + 1e-9));
    probes.push(oracle.points[0] - 1.0);
    probes.push(oracle.points.last().unwrap() + 1.0);
    for y in probes {
        let got = cf.cdf_at(y);
        let want = oracle.cdf_at(y);
        assert!(
            (got - want).abs() <= TOL,
            "{label}: cdf({y}) = {got}, oracle {want}"
        );
    }
}

/// A random micro-panel: one treated cohort plus a never-treated group, with
/// outcomes drawn from a coarse grid so ties are common, and covariates for
/// treated units copied from control units so every cell has support.
pub struct Micro {
    pub panel: BalancedPanel,
    pub r: u32,
    pub t: u32,
    pub rho: u32,
}

pub fn random_micro(rng: &mut ChaCha8Rng) -> Micro {
    let horizon = rng.gen_range(2..=4u32);
    let rho = if horizon >= 3 && rng.gen_bool(0.3) {
        1
    } else {
        0
    };
    let r = rng.gen_range((rho + 2)..=horizon);
    let t = rng.gen_range((r - rho)..=horizon);
    let n_treated = rng.gen_range(2..=8usize);
    let n_control = rng.gen_range(2..=8usize);

    let grid = |rng: &mut ChaCha8Rng| (rng.gen_range(-4i32..=4) as f64) * 0.5;
    let cov_pool = [0.0, 1.0, 2.0];
    let control_cov: Vec<f64> = (0..n_control)
        .map(|_| cov_pool[rng.gen_range(0..cov_pool.len())])
        .collect();

    let mut units = Vec::new();
    let mut outcomes = Vec::new();
    let mut cohorts = Vec::new();
    let mut covariates = Vec::new();
    for i in 0..n_treated {
        units.push(format!("t{i}"));
        for _ in 0..horizon {
            outcomes.push(grid(rng));
        }
        cohorts.push(Cohort::Treated(r));
        covariates.push(vec![control_cov[rng.gen_range(0..n_control)]]);
    }
    for (i, &c) in control_cov.iter().enumerate() {
        units.push(format!("c{i}"));
        for _ in 0..horizon {
            outcomes.push(grid(rng));
        }
        cohorts.push(Cohort::Never);
        covariates.push(vec![c]);
    }
    let panel = BalancedPanel::new(units, horizon, outcomes, cohorts, Some(covariates)).unwrap();
    Micro { panel, r, t, rho }
}

/// Base-period treated and control levels plus control long differences,
/// read directly off the panel in unit order.
pub fn raw_pieces(m: &Micro) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let base = m.r - m.rho - 1;
    let p = &m.panel;
    let mut treated_pre = Vec::new();
    let mut control_pre = Vec::new();
    let mut delta = Vec::new();
    for i in 0..p.n_units() {
        match p.cohorts()[i] {
            Cohort::Treated(g) if g == m.r => treated_pre.push(p.outcome(i, base)),
            Cohort::Never => {
                control_pre.push(p.outcome(i, base));
                delta.push(p.outcome(i, m.t) - p.outcome(i, base));
            }
            _ => {}
        }
    }
    (treated_pre, control_pre, delta)
}

/// Runs the brute-force check of all four estimators on one micro-panel.
pub fn check_all_estimators(m: &Micro, rng: &mut ChaCha8Rng, label: &str) {
    use stagdist::core::counterfactual::{
        estimate, estimate_conditional_discrete, estimate_ipw, estimate_unconditional, Method,
    };
    use stagdist::core::propensity::PropensityModel;

    let (treated_pre, control_pre, delta) = raw_pieces(m);
    let p = &m.panel;

    // Unconditional.
    let points: Vec<f64> = delta
        .iter()
        .zip(&control_pre)
        .map(|(d, v)| d + o_rank_map(&treated_pre, &control_pre, *v))
        .collect();
    let masses = vec![1.0 / points.len() as f64; points.len()];
    let oracle = OWeighted::new(&points, &masses);
    let cf = estimate_unconditional(p, m.r, m.t, m.rho).unwrap();
    assert_matches(&cf, &oracle, &format!("{label} unconditional"));

    // IPW with fixed random coefficients: only the reweighting construction
    // is under test, not the likelihood fit.
    let trim = 0.001;
    let model = PropensityModel {
        cohort: m.r,
        coefficients: vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
        trim,
        trimmed: 0,
    };
    let covs = p.covariates().unwrap();
    let mut weights = Vec::new();
    for i in 0..p.n_units() {
        if p.cohorts()[i] == Cohort::Never {
            let xb = model.coefficients[0] + model.coefficients[1] * covs[i][0];
            let prob = (1.0 / (1.0 + (-xb).exp())).clamp(trim, 1.0 - trim);
            weights.push(prob / (1.0 - prob));
        }
    }
    let weighted = OWeighted::new(&delta, &weights);
    let n0 = delta.len();
    let points: Vec<f64> = delta
        .iter()
        .zip(&control_pre)
        .map(|(d, v)| {
            let rank = delta.iter().filter(|&&x| x <= *d).count();
            let reweighted = weighted.quantile(rank as f64 / (n0 as f64 + 1.0));
            reweighted + o_rank_map(&treated_pre, &control_pre, *v)
        })
        .collect();
    let masses = vec![1.0 / n0 as f64; n0];
    let oracle = OWeighted::new(&points, &masses);
    let cf = estimate_ipw(p, m.r, m.t, m.rho, &model).unwrap();
    assert_matches(&cf, &oracle, &format!("{label} ipw"));

    // Conditional on discrete cells.
    let base = m.r - m.rho - 1;
    let mut cell_keys: Vec<u64> = Vec::new();
    for i in 0..p.n_units() {
        let k = covs[i][0].to_bits();
        if !cell_keys.contains(&k) {
            cell_keys.push(k);
        }
    }
    let n_r = p
        .cohorts()
        .iter()
        .filter(|c| **c == Cohort::Treated(m.r))
        .count();
    let mut points = Vec::new();
    let mut masses = Vec::new();
    for key in cell_keys {
        let in_cell = |i: usize| covs[i][0].to_bits() == key;
        let cell_treated: Vec<usize> = (0..p.n_units())
            .filter(|&i| in_cell(i) && p.cohorts()[i] == Cohort::Treated(m.r))
            .collect();
        if cell_treated.is_empty() {
            continue;
        }
        let cell_control: Vec<usize> = (0..p.n_units())
            .filter(|&i| in_cell(i) && p.cohorts()[i] == Cohort::Never)
            .collect();
        assert!(!cell_control.is_empty(), "construction guarantees support");
        let pre_tr: Vec<f64> = cell_treated.iter().map(|&i| p.outcome(i, base)).collect();
        let pre_c: Vec<f64> = cell_control.iter().map(|&i| p.outcome(i, base)).collect();
        let mass = cell_treated.len() as f64 / n_r as f64 / cell_control.len() as f64;
        for &i in &cell_control {
            let d = p.outcome(i, m.t) - p.outcome(i, base);
            points.push(d + o_rank_map(&pre_tr, &pre_c, p.outcome(i, base)));
            masses.push(mass);
        }
    }
    let oracle = OWeighted::new(&points, &masses);
    let cf = estimate_conditional_discrete(p, m.r, m.t, m.rho).unwrap();
    assert_matches(&cf, &oracle, &format!("{label} conditional"));

    // Repeated cross sections (panel rows reinterpreted as samples).
    let mut control_t = Vec::new();
    for i in 0..p.n_units() {
        if p.cohorts()[i] == Cohort::Never {
            control_t.push(p.outcome(i, m.t));
        }
    }
    let points: Vec<f64> = control_pre
        .iter()
        .map(|&v| {
            let matched = o_rank_map(&control_t, &control_pre, v);
            (matched - v) + o_rank_map(&treated_pre, &control_pre, v)
        })
        .collect();
    let masses = vec![1.0 / points.len() as f64; points.len()];
    let oracle = OWeighted::new(&points, &masses);
    let cf = estimate(p, m.r, m.t, m.rho, Method::RepeatedCrossSection, 0.001).unwrap();
    assert_matches(&cf, &oracle, &format!("{label} rcs"));
}
