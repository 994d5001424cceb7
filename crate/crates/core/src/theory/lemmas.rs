use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::harness::{DenseChannels, Trace};
use crate::optim::PadamConfig;
use crate::problems::StochasticProblem;
use crate::{Error, ParamVector, Result};

/// Relative tolerance for the two evaluations of the `z` increment.
pub const A1_TOLERANCE: f64 = 1e-10;
/// Allowed negative slack, relative to `max(1, rhs)`, for the trajectory
/// inequalities.
pub const SLACK_TOLERANCE: f64 = 1e-9;
/// Relative headroom on the boundedness invariants.
pub const BOUND_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub status: CheckStatus,
    /// Smallest slack over all checked steps (`rhs - lhs`, or tolerance
    /// minus residual). Negative means violated.
    pub worst_margin: f64,
    pub steps_checked: usize,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl CheckResult {
    fn inapplicable(note: impl Into<String>) -> Self {
        CheckResult {
            status: CheckStatus::Inapplicable,
            worst_margin: f64::NAN,
            steps_checked: 0,
            note: note.into(),
        }
    }

    fn from_margin(worst_margin: f64, steps_checked: usize, note: String) -> Self {
        CheckResult {
            status: if worst_margin >= 0.0 {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            worst_margin,
            steps_checked,
            note,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

fn dense(trace: &Trace) -> Result<&DenseChannels> {
    let dense = trace.dense.as_ref().ok_or(Error::IncompleteTrace("x"))?;
    let n = trace.len();
    for (name, len) in [("x", dense.x.len()), ("g", dense.g.len()), ("m", dense.m.len()), ("v_hat", dense.v_hat.len())] {
        if len != n {
            return Err(Error::IncompleteTrace(name));
        }
    }
    Ok(dense)
}

/// `alpha * v / (v_hat + eps)^p` coordinate-wise, with `0 / 0 = 0`.
fn precondition(alpha: f64, v: &[f64], v_hat: &[f64], cfg: &PadamConfig) -> Vec<f64> {
    v.iter()
        .zip(v_hat)
        .map(|(&v, &h)| {
            if v == 0.0 {
                0.0
            } else {
                alpha * v / (h + cfg.epsilon).powf(cfg.p)
            }
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(a, b)| a - b).collect()
}

/// Iterate `x_t` for `t` in `0..=T+1` with `x_0 = x_1`.
fn iterate(dense: &DenseChannels, t: usize) -> Option<&ParamVector> {
    match t {
        0 => dense.x.first(),
        t if t <= dense.x.len() => Some(&dense.x[t - 1]),
        t if t == dense.x.len() + 1 => dense.x_final.as_ref(),
        _ => None,
    }
}

fn momentum_ratio(cfg: &PadamConfig) -> f64 {
    cfg.beta1 / (1.0 - cfg.beta1)
}

/// `z_{t+1} - z_t` from the definition `z_t = x_t + k (x_t - x_{t-1})`.
fn z_increment(dense: &DenseChannels, t: usize, k: f64) -> Option<Vec<f64>> {
    let prev = iterate(dense, t - 1)?;
    let cur = iterate(dense, t)?;
    let next = iterate(dense, t + 1)?;
    Some(
        (0..cur.len())
            .map(|i| {
                let z_next = next[i] + k * (next[i] - cur[i]);
                let z_cur = cur[i] + k * (cur[i] - prev[i]);
                z_next - z_cur
            })
            .collect(),
    )
}

/// Compare the definition of the `z` increment with its closed form
/// `k (a_{t-1} D_{t-1} - a_t D_t) m_{t-1} - a_t D_t g_t`,
/// `D_t = (v_hat_t + eps)^(-p)`, `k = beta1 / (1 - beta1)`, `m_0 = 0`.
pub fn check_lemma_a1(trace: &Trace, cfg: &PadamConfig) -> Result<CheckResult> {
    let dense = dense(trace)?;
    let k = momentum_ratio(cfg);
    let alphas = trace.lrs();
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    for t in 1..=trace.len() {
        let Some(by_definition) = z_increment(dense, t, k) else { break };
        let a_t = alphas[t - 1];
        let step_g = precondition(a_t, &dense.g[t - 1], &dense.v_hat[t - 1], cfg);
        let closed: Vec<f64> = if t == 1 {
            step_g.iter().map(|v| -v).collect()
        } else {
            let m_prev = &dense.m[t - 2];
            let old = precondition(alphas[t - 2], m_prev, &dense.v_hat[t - 2], cfg);
            let new = precondition(a_t, m_prev, &dense.v_hat[t - 1], cfg);
            (0..m_prev.len())
                .map(|i| k * (old[i] - new[i]) - step_g[i])
                .collect()
        };
        let scale = by_definition.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let residual = by_definition
            .iter()
            .zip(&closed)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        worst = worst.min(A1_TOLERANCE * (1.0 + scale) - residual);
        checked += 1;
    }
    Ok(CheckResult::from_margin(worst, checked, String::new()))
}

/// Step-size bound on the `z` increment and the gradient gap between `z_t`
/// and `x_t`. The first needs nonincreasing step sizes and a max-tracked
/// denominator; the second needs the smoothness constant and exact
/// gradients from `problem`.
pub fn check_lemma_a2_a3(
    trace: &Trace,
    cfg: &PadamConfig,
    smooth: Option<(&dyn StochasticProblem, f64)>,
) -> Result<(CheckResult, CheckResult)> {
    let dense = dense(trace)?;
    let k = momentum_ratio(cfg);
    let alphas = trace.lrs();

    let a2 = if alphas.windows(2).any(|w| w[1] > w[0]) {
        CheckResult::inapplicable("step sizes increase")
    } else {
        let mut worst = f64::INFINITY;
        let mut checked = 0;
        for t in 1..=trace.len() {
            let Some(dz) = z_increment(dense, t, k) else { break };
            let step = norm(&precondition(alphas[t - 1], &dense.g[t - 1], &dense.v_hat[t - 1], cfg));
            let back = norm(&diff(iterate(dense, t - 1).unwrap(), iterate(dense, t).unwrap()));
            let rhs = step + k * back;
            worst = worst.min(rhs - norm(&dz) + SLACK_TOLERANCE * rhs.max(1.0));
            checked += 1;
        }
        CheckResult::from_margin(worst, checked, String::new())
    };

    let a3 = match smooth {
        None => CheckResult::inapplicable("no smoothness constant"),
        Some((problem, l)) => {
            let mut worst = f64::INFINITY;
            for t in 1..=trace.len() {
                let x = iterate(dense, t).unwrap();
                let back = diff(x, iterate(dense, t - 1).unwrap());
                let z: Vec<f64> = x.iter().zip(&back).map(|(x, b)| x + k * b).collect();
                let gap = norm(&diff(&problem.exact_grad(&z), &problem.exact_grad(x)));
                let rhs = l * k * norm(&back);
                worst = worst.min(rhs - gap + SLACK_TOLERANCE * rhs.max(1.0));
            }
            CheckResult::from_margin(worst, trace.len(), String::new())
        }
    };
    Ok((a2, a3))
}

/// `||m_t||_inf <= G` and `||v_hat_t||_inf <= G^2` at every step, given that
/// every observed gradient coordinate respects `G`.
pub fn check_lemma_a4(trace: &Trace, g_inf: Option<f64>) -> Result<CheckResult> {
    let dense = dense(trace)?;
    let Some(g_inf) = g_inf else {
        return Ok(CheckResult::inapplicable("no gradient bound"));
    };
    if trace.meta.left_box {
        return Ok(CheckResult::inapplicable("iterates left the certified box"));
    }
    let observed = dense.g.iter().map(|g| g.norm_inf()).fold(0.0, f64::max);
    let slack = 1.0 + BOUND_TOLERANCE;
    if observed > g_inf * slack {
        return Ok(CheckResult {
            status: CheckStatus::Fail,
            worst_margin: g_inf - observed,
            steps_checked: trace.len(),
            note: format!("observed gradient coordinate {observed} exceeds certified bound {g_inf}"),
        });
    }
    let mut worst = f64::INFINITY;
    for (m, v) in dense.m.iter().zip(&dense.v_hat) {
        worst = worst
            .min((g_inf * slack - m.norm_inf()) / g_inf)
            .min((g_inf * g_inf * slack - v.norm_inf()) / (g_inf * g_inf));
    }
    Ok(CheckResult::from_margin(worst, trace.len(), String::from("margin relative to G and G^2")))
}

/// Weighted-sum bounds on `sum_t alpha^2 ||D_t m_t||^2` and
/// `sum_t alpha^2 ||D_t g_t||^2`, evaluated on a single realisation.
/// Returns `(momentum form, gradient form)`.
pub fn check_lemma_a5(trace: &Trace, cfg: &PadamConfig, g_inf: Option<f64>, q: f64) -> Result<(CheckResult, CheckResult)> {
    let dense = dense(trace)?;
    let Some(g) = g_inf else {
        let r = CheckResult::inapplicable("no gradient bound");
        return Ok((r.clone(), r));
    };
    let alphas = trace.lrs();
    let alpha = alphas[0];
    if alphas.iter().any(|&a| a != alpha) {
        let r = CheckResult::inapplicable("step size is not constant");
        return Ok((r.clone(), r));
    }
    let p = cfg.p;
    let q_min = (4.0 * p - 1.0).max(0.0);
    if !(q >= q_min - 1e-12 && q <= 1.0) {
        return Err(Error::config(format!("q = {q} outside [{q_min}, 1]")));
    }
    let observed = dense.g.iter().map(|g| g.norm_inf()).fold(0.0, f64::max);
    if observed > g * (1.0 + BOUND_TOLERANCE) {
        let r = CheckResult::inapplicable(format!("observed gradient coordinate {observed} exceeds bound {g}"));
        return Ok((r.clone(), r));
    }
    let gamma = cfg.gamma();
    let t = trace.len() as f64;
    let d = dense.g[0].len();
    let mut col_sq = vec![0.0; d];
    for gt in &dense.g {
        for (c, v) in col_sq.iter_mut().zip(gt.iter()) {
            *c += v * v;
        }
    }
    let col_sum: f64 = col_sq.iter().map(|c| c.sqrt()).sum();
    let common = t.powf((1.0 + q) / 2.0) * (d as f64).powf(q) * alpha * alpha * g.powf(1.0 + q - 4.0 * p)
        / (1.0 - cfg.beta2).powf(2.0 * p)
        * col_sum.powf(1.0 - q);
    let weighted = |series: &[ParamVector]| -> f64 {
        series
            .iter()
            .zip(&dense.v_hat)
            .map(|(v, h)| precondition(alpha, v, h, cfg).iter().map(|x| x * x).sum::<f64>())
            .sum()
    };
    let lhs_g = weighted(&dense.g);
    let rhs_g = common;
    let gradient_form = CheckResult::from_margin(rhs_g - lhs_g, trace.len(), format!("lhs {lhs_g:.6e}, rhs {rhs_g:.6e}"));
    let momentum_form = if gamma >= 1.0 {
        CheckResult::inapplicable(format!("gamma = {gamma} >= 1"))
    } else {
        let lhs = weighted(&dense.m);
        let rhs = common * (1.0 - cfg.beta1) / (1.0 - gamma);
        CheckResult::from_margin(rhs - lhs, trace.len(), format!("lhs {lhs:.6e}, rhs {rhs:.6e}"))
    };
    Ok((momentum_form, gradient_form))
}

/// Run every lemma check on one dense trace.
pub fn lemma_suite(
    trace: &Trace,
    cfg: &PadamConfig,
    problem: &dyn StochasticProblem,
    q: f64,
) -> Result<BTreeMap<String, CheckResult>> {
    let constants = problem.constants();
    let smooth = constants.l.map(|l| (problem, l));
    let mut out = BTreeMap::new();
    out.insert("lemma_a1".to_string(), check_lemma_a1(trace, cfg)?);
    let (a2, a3) = check_lemma_a2_a3(trace, cfg, smooth)?;
    out.insert("lemma_a2".to_string(), a2);
    out.insert("lemma_a3".to_string(), a3);
    out.insert("lemma_a4".to_string(), check_lemma_a4(trace, constants.g_inf)?);
    let (a5m, a5g) = check_lemma_a5(trace, cfg, constants.g_inf, q)?;
    out.insert("lemma_a5_momentum".to_string(), a5m);
    out.insert("lemma_a5_gradient".to_string(), a5g);
    Ok(out)
}
