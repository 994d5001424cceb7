//! Check suites behind `padam verify`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::harness::{run, run_on, RunSpec, Schedule, Trace};
use crate::optim::{OptimizerSpec, PadamConfig, DEFAULT_EPSILON};
use crate::problems::{finite_diff_grad, NoiseKind, NoiseSpec, ProblemSpec, SparseGrowthParams, StochasticProblem};
use crate::theory::{default_q, lemma_suite, verify_theorem, CheckResult, CheckStatus, TheoremSetup, TheoryReport};
use crate::{Error, ParamVector, Result};

/// Largest per-step relative trajectory difference accepted by the
/// reduction checks.
pub const REDUCTION_TOLERANCE: f64 = 1e-12;
/// Largest relative error between analytic and finite-difference gradients.
pub const GRADIENT_TOLERANCE: f64 = 1e-5;
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemmas,
    Theorem,
    Reductions,
    Gradients,
}

fn summary(status: CheckStatus, worst_margin: f64, steps_checked: usize, note: String) -> CheckResult {
    CheckResult {
        status,
        worst_margin,
        steps_checked,
        note,
    }
}

/// `max_t ||a_t - b_t||_inf / ||b_t||_inf` over the iterates of two dense
/// traces. Traces of different length count as infinitely different.
pub fn trajectory_relative_error(a: &Trace, b: &Trace) -> Result<f64> {
    let da = a.dense.as_ref().ok_or(Error::IncompleteTrace("x"))?;
    let db = b.dense.as_ref().ok_or(Error::IncompleteTrace("x"))?;
    if da.x.len() != db.x.len() || da.x_final.is_some() != db.x_final.is_some() {
        return Ok(f64::INFINITY);
    }
    Ok(da
        .iterates()
        .zip(db.iterates())
        .map(|(x, y)| {
            let scale = y.norm_inf();
            let diff = x.sub(y).norm_inf();
            if diff == 0.0 {
                0.0
            } else {
                diff / scale
            }
        })
        .fold(0.0, f64::max))
}

fn identity_check(a: &RunSpec, b: &RunSpec) -> Result<CheckResult> {
    let ta = run(&a.clone().dense())?;
    let tb = run(&b.clone().dense())?;
    let err = trajectory_relative_error(&ta, &tb)?;
    let status = if err <= REDUCTION_TOLERANCE && !ta.meta.diverged {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    Ok(summary(status, REDUCTION_TOLERANCE - err, ta.len(), format!("max relative error {err:.3e}")))
}

/// `p = 1/2` against the Amsgrad rule on Rosenbrock (d = 10, 1000 steps), and
/// `p = 0` with step `alpha` against SGD with momentum `beta1` and step
/// `alpha (1 - beta1)` on a noisy quadratic (10^4 steps).
pub fn reductions_suite() -> Result<BTreeMap<String, CheckResult>> {
    let mut out = BTreeMap::new();
    let rosen = ProblemSpec::Rosenbrock { dim: 10 };
    let lr = 1e-3;
    let padam = OptimizerSpec::padam(PadamConfig::new(0.9, 0.999, 0.5, DEFAULT_EPSILON)?);
    let ams = OptimizerSpec::Amsgrad {
        beta1: 0.9,
        beta2: 0.999,
        epsilon: DEFAULT_EPSILON,
    };
    out.insert(
        "padam_half_is_amsgrad".to_string(),
        identity_check(
            &RunSpec::new(rosen.clone(), padam, Schedule::constant(lr), 1000, 0),
            &RunSpec::new(rosen, ams, Schedule::constant(lr), 1000, 0),
        )?,
    );

    let quad = ProblemSpec::Quadratic {
        dim: 10,
        condition_number: 10.0,
        noise: NoiseSpec::gaussian(0.5),
    };
    let beta1 = 0.9;
    let alpha = 0.01;
    let padam0 = OptimizerSpec::padam(PadamConfig::new(beta1, 0.999, 0.0, DEFAULT_EPSILON)?);
    let sgdm = OptimizerSpec::Sgdm { momentum: beta1 };
    out.insert(
        "padam_zero_is_sgdm".to_string(),
        identity_check(
            &RunSpec::new(quad.clone(), padam0, Schedule::constant(alpha), 10_000, 3),
            &RunSpec::new(quad, sgdm, Schedule::constant(alpha * (1.0 - beta1)), 10_000, 3),
        )?,
    );
    Ok(out)
}

/// Problems covered by the gradient and lemma suites.
pub fn oracle_problems() -> Vec<ProblemSpec> {
    vec![
        ProblemSpec::Quadratic {
            dim: 10,
            condition_number: 10.0,
            noise: NoiseSpec::gaussian(0.5),
        },
        ProblemSpec::Rosenbrock { dim: 10 },
        ProblemSpec::Logistic {
            dim: 10,
            n_samples: 500,
            seed: 0,
        },
        ProblemSpec::SparseGrowth(SparseGrowthParams::default()),
        ProblemSpec::Mlp { task_seed: 0 },
    ]
}

/// Random test point: uniform in `[-r_i, r_i]` with `r_i = min(box_i, 2)`.
pub fn random_point(problem: &dyn StochasticProblem, rng: &mut impl Rng) -> ParamVector {
    let hw = problem.certified_box().half_width;
    ParamVector::from_fn(problem.dim(), |i| rng.random_range(-1.0..=1.0) * hw[i].min(2.0))
}

/// `||fd - g||_2 / ||g||_2` (absolute error when `g = 0`).
pub fn gradient_relative_error(exact: &ParamVector, fd: &ParamVector) -> f64 {
    let diff = fd.sub(exact).norm();
    let scale = exact.norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Analytic against central-difference gradients at `points` random points
/// per problem.
pub fn gradients_suite(points: usize, seed: u64) -> Result<BTreeMap<String, CheckResult>> {
    let mut out = BTreeMap::new();
    for spec in oracle_problems() {
        let problem = spec.build()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..points {
            let x = random_point(problem.as_ref(), &mut rng);
            let fd = finite_diff_grad(problem.as_ref(), &x, FD_STEP)?;
            worst = worst.max(gradient_relative_error(&problem.exact_grad(&x), &fd));
        }
        let status = if worst <= GRADIENT_TOLERANCE {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        out.insert(
            spec.name().to_string(),
            summary(status, GRADIENT_TOLERANCE - worst, points, format!("max relative error {worst:.3e}")),
        );
    }
    Ok(out)
}

/// A randomised trace satisfying the lemma preconditions: constant step
/// size, `beta1 < beta2^(2p)`, and a problem with certified constants.
pub fn random_lemma_case(rng: &mut impl Rng) -> (RunSpec, PadamConfig) {
    let problem = match rng.random_range(0..4) {
        0 => ProblemSpec::Quadratic {
            dim: rng.random_range(2..12),
            condition_number: rng.random_range(1.0..20.0),
            noise: NoiseSpec::gaussian(rng.random_range(0.0..1.0)),
        },
        1 => ProblemSpec::Quadratic {
            dim: rng.random_range(2..12),
            condition_number: rng.random_range(1.0..20.0),
            noise: NoiseSpec {
                kind: if rng.random_bool(0.5) {
                    NoiseKind::CoordinateMask
                } else {
                    NoiseKind::MinibatchIndex
                },
                magnitude: rng.random_range(0.1..1.0),
                sparsity: rng.random_range(0.1..1.0),
            },
        },
        2 => ProblemSpec::Logistic {
            dim: rng.random_range(2..8),
            n_samples: 200,
            seed: rng.random(),
        },
        _ => ProblemSpec::SparseGrowth(SparseGrowthParams {
            dim: rng.random_range(2..10),
            decay: rng.random_range(0.0..1.0),
            seed: rng.random(),
            ..SparseGrowthParams::default()
        }),
    };
    let cfg = loop {
        let p = if rng.random_bool(0.2) { 0.5 } else { rng.random_range(0.0..=0.5) };
        let beta1 = rng.random_range(0.0..0.95);
        let beta2 = rng.random_range(0.9..0.9999);
        let cfg = PadamConfig::new(beta1, beta2, p, DEFAULT_EPSILON).expect("sampled in range");
        if cfg.gamma() < 1.0 {
            break cfg;
        }
    };
    let lr = rng.random_range(1e-3..2e-2);
    let seed = rng.random();
    (RunSpec::new(problem, OptimizerSpec::padam(cfg), Schedule::constant(lr), 500, seed).dense(), cfg)
}

/// Run every lemma check on `n_traces` randomised traces and fold the
/// results per lemma: `fail` if any trace fails, `pass` if at least one
/// passes, `inapplicable` otherwise.
pub fn lemmas_suite(n_traces: usize, seed: u64) -> Result<BTreeMap<String, CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folded: BTreeMap<String, CheckResult> = BTreeMap::new();
    for _ in 0..n_traces {
        let (spec, cfg) = random_lemma_case(&mut rng);
        let problem = spec.problem.build()?;
        let trace = run_on(problem.as_ref(), &spec)?;
        for (name, r) in lemma_suite(&trace, &cfg, problem.as_ref(), default_q(cfg.p))? {
            let entry = folded
                .entry(name)
                .or_insert_with(|| summary(CheckStatus::Inapplicable, f64::INFINITY, 0, String::new()));
            match (entry.status, r.status) {
                (_, CheckStatus::Fail) => entry.status = CheckStatus::Fail,
                (CheckStatus::Inapplicable, CheckStatus::Pass) => entry.status = CheckStatus::Pass,
                _ => {}
            }
            if r.status != CheckStatus::Inapplicable {
                entry.worst_margin = entry.worst_margin.min(r.worst_margin);
                entry.steps_checked += r.steps_checked;
            }
            if r.status == CheckStatus::Fail && entry.note.is_empty() {
                entry.note = format!("{}: {}", problem.id(), r.note);
            }
        }
    }
    for r in folded.values_mut() {
        if r.status == CheckStatus::Inapplicable {
            r.worst_margin = f64::NAN;
        }
    }
    Ok(folded)
}

/// Bound check on the clipped-noise quadratic (d = 10, condition number 10,
/// noise 0.5) with the order-optimal step size, one report per horizon.
pub fn theorem_suite(horizons: &[u64], n_seeds: u64, seed: u64) -> Result<Vec<TheoryReport>> {
    horizons
        .iter()
        .map(|&steps| {
            let mut setup = TheoremSetup::new(
                ProblemSpec::Quadratic {
                    dim: 10,
                    condition_number: 10.0,
                    noise: NoiseSpec::gaussian(0.5),
                },
                PadamConfig::vision(),
                steps,
                n_seeds,
            );
            setup.seed = seed;
            verify_theorem(&setup)
        })
        .collect()
}
