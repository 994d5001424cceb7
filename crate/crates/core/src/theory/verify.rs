use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    corollary_bound, default_q, lemma_suite, m_constants, bound_rhs, m3_prime, optimal_alpha_scaled,
    AssumptionEstimates, BoundInputs, CheckResult, CheckStatus, EstimateSource, GrowthTracker,
};
use crate::harness::{initial_point, run_on, select_output, RunSpec, Schedule};
use crate::optim::{OptimizerSpec, PadamConfig};
use crate::problems::ProblemSpec;
use crate::sum::compensated_mean;
use crate::{Error, Result};

/// Ratio of empirical left side to bound below which the bound is reported
/// as extremely loose.
pub const LOOSENESS_RATIO: f64 = 1e-4;

/// Stream of the per-seed RNG used for output selection.
const OUTPUT_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremSetup {
    pub problem: ProblemSpec,
    pub config: PadamConfig,
    pub steps: u64,
    pub n_seeds: u64,
    #[serde(default)]
    pub seed: u64,
    /// Constant step size. Defaults to the order-optimal value computed
    /// with `s = 1/2` and constant `alpha_scale`.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "unit")]
    pub alpha_scale: f64,
    /// Defaults to `max(0, 4p - 1)`.
    #[serde(default)]
    pub q: Option<f64>,
}

fn unit() -> f64 {
    1.0
}

impl TheoremSetup {
    pub fn new(problem: ProblemSpec, config: PadamConfig, steps: u64, n_seeds: u64) -> Self {
        TheoremSetup {
            problem,
            config,
            steps,
            n_seeds,
            seed: 0,
            alpha: None,
            alpha_scale: 1.0,
            q: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub status: CheckStatus,
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    #[serde(rename = "M3")]
    pub m3: f64,
    #[serde(rename = "M3_prime")]
    pub m3_prime: Option<f64>,
    pub bound_41: f64,
    pub bound_42: Option<f64>,
    pub empirical_lhs: f64,
    /// `empirical_lhs / bound_41`.
    pub ratio: f64,
    pub extremely_loose: bool,
    pub fitted_s: f64,
    /// Growth exponent used in the bound: the largest per-seed `s_bound`.
    pub s: f64,
    pub alpha: f64,
    pub q: f64,
    pub steps: u64,
    pub d: usize,
    pub n_seeds: u64,
    pub estimates: AssumptionEstimates,
    pub observed_g_inf: f64,
    pub lemma_checks: BTreeMap<String, CheckResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

struct SeedOutcome {
    grad_norm_sq_out: f64,
    vhat1_inv_p_l1: f64,
    s_bound: f64,
    fitted_s: f64,
    observed_g_inf: f64,
    left_box: bool,
    diverged: bool,
}

/// Monte-Carlo check of the expected squared gradient norm at the randomly
/// selected output against the nonconvex bound.
pub fn verify_theorem(setup: &TheoremSetup) -> Result<TheoryReport> {
    if setup.n_seeds == 0 {
        return Err(Error::config("verify_theorem needs at least one seed"));
    }
    let cfg = setup.config;
    cfg.validate()?;
    let problem = setup.problem.build()?;
    let d = problem.dim();
    let constants = problem.constants();
    let (Some(l), Some(g_inf), Some(f_inf)) = (constants.l, constants.g_inf, constants.f_inf) else {
        return Err(Error::Hypothesis(format!(
            "{} does not certify L, G_inf and inf f",
            problem.id()
        )));
    };
    let alpha = match setup.alpha {
        Some(a) => a,
        None => optimal_alpha_scaled(d, setup.steps, 0.5, setup.alpha_scale)?,
    };
    let q = setup.q.unwrap_or_else(|| default_q(cfg.p));
    let schedule = Schedule::constant(alpha);
    let base = RunSpec {
        record_dense: true,
        ..RunSpec::new(setup.problem.clone(), OptimizerSpec::padam(cfg), schedule.clone(), setup.steps, setup.seed)
    };

    let p = cfg.p;
    let eps = cfg.epsilon;
    let outcomes: Vec<SeedOutcome> = (0..setup.n_seeds)
        .into_par_iter()
        .map(|k| -> Result<SeedOutcome> {
            let spec = crate::harness::run_seed(&base, k);
            let trace = run_on(problem.as_ref(), &spec)?;
            let dense = trace.dense.as_ref().ok_or(Error::IncompleteTrace("x"))?;
            let mut growth = GrowthTracker::new(d, g_inf)?;
            for g in &dense.g {
                growth.push(g)?;
            }
            let (s_bound, fitted_s) = if trace.len() >= 2 {
                let est = growth.finish()?;
                (est.s_bound, est.fitted_s)
            } else {
                (0.0, 0.0)
            };
            let grad_norm_sq_out = if trace.meta.diverged {
                f64::NAN
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                rng.set_stream(OUTPUT_STREAM);
                let (_, x_out) = select_output(&trace, &schedule, &mut rng)?;
                problem.exact_grad(&x_out).norm_sq()
            };
            let vhat1 = dense.v_hat.first().map_or(f64::NAN, |v| v.iter().map(|v| (v + eps).powf(-p)).sum());
            Ok(SeedOutcome {
                grad_norm_sq_out,
                vhat1_inv_p_l1: vhat1,
                s_bound,
                fitted_s,
                observed_g_inf: dense.g.iter().map(|g| g.norm_inf()).fold(0.0, f64::max),
                left_box: trace.meta.left_box,
                diverged: trace.meta.diverged,
            })
        })
        .collect::<Result<_>>()?;

    let mut notes = Vec::new();
    let (x1, _) = initial_point(problem.as_ref(), setup.seed);
    let delta_f = (problem.loss(&x1) - f_inf).max(0.0);
    if problem.start().is_none() {
        notes.push("random initial point; delta_f taken at the base seed".to_string());
    }
    let estimates = AssumptionEstimates {
        g_inf,
        l,
        delta_f,
        vhat1_inv_p_l1: compensated_mean(&outcomes.iter().map(|o| o.vhat1_inv_p_l1).collect::<Vec<_>>()),
        source: EstimateSource::Known,
    };
    let s = outcomes.iter().map(|o| o.s_bound).fold(0.0, f64::max);
    let inputs = BoundInputs {
        p,
        q,
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        alpha,
        t: setup.steps,
        d,
        s,
    };
    let m = m_constants(&estimates, &inputs)?;
    let bound_41 = bound_rhs(&estimates, &inputs, &m)?;
    let (m3p, bound_42) = if p <= 0.25 {
        (Some(m3_prime(&estimates, &inputs)?), Some(corollary_bound(&estimates, &inputs)?))
    } else {
        (None, None)
    };
    let empirical_lhs = compensated_mean(&outcomes.iter().map(|o| o.grad_norm_sq_out).collect::<Vec<_>>());
    let observed_g_inf = outcomes.iter().map(|o| o.observed_g_inf).fold(0.0, f64::max);

    let mut inapplicable = false;
    if outcomes.iter().any(|o| o.diverged) {
        notes.push("at least one run diverged".to_string());
        inapplicable = true;
    }
    if outcomes.iter().any(|o| o.left_box) {
        notes.push("iterates left the certified box".to_string());
        inapplicable = true;
    }
    if observed_g_inf > g_inf {
        notes.push(format!("observed gradient coordinate {observed_g_inf} exceeds G_inf = {g_inf}"));
        inapplicable = true;
    }

    let first = run_on(problem.as_ref(), &base)?;
    let lemma_checks = lemma_suite(&first, &cfg, problem.as_ref(), q)?;

    let ratio = empirical_lhs / bound_41;
    let status = if inapplicable {
        CheckStatus::Inapplicable
    } else if empirical_lhs <= bound_41 {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    Ok(TheoryReport {
        status,
        m1: m.m1,
        m2: m.m2,
        m3: m.m3,
        m3_prime: m3p,
        bound_41,
        bound_42,
        empirical_lhs,
        ratio,
        extremely_loose: ratio < LOOSENESS_RATIO,
        fitted_s: compensated_mean(&outcomes.iter().map(|o| o.fitted_s).collect::<Vec<_>>()),
        s,
        alpha,
        q,
        steps: setup.steps,
        d,
        n_seeds: setup.n_seeds,
        estimates,
        observed_g_inf,
        lemma_checks,
        notes,
    })
}
