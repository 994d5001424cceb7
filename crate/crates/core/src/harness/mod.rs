//! Deterministic run loop, learning-rate schedules, output selection and
//! trace persistence.
//!
//! A run is fully determined by its [`RunSpec`]. The seed drives two
//! independent ChaCha8 streams: stream 0 supplies the gradient noise and
//! stream 1 the random initial point.

mod batch;
mod output;
mod persist;
mod schedule;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use batch::{aggregate, final_summary, repeat_runs, repeat_runs_serial, run_seed, Aggregate, FinalSummary};
pub use output::{output_weights, select_output, OutputSampler};
pub use persist::{
    read_metadata, read_trace, read_trace_csv, sidecar_path, write_atomic, write_metadata, write_trace,
    write_trace_csv, TRACE_HEADER,
};
pub use schedule::{schedule_lr, Schedule, ScheduleKind};

use crate::optim::{init_state, OptimizerSpec};
use crate::problems::{IterateBox, ProblemSpec, StochasticProblem};
use crate::{Error, ParamVector, Result};

/// Scale of the Gaussian initial point used when the problem declares none.
pub const INIT_SCALE: f64 = 0.1;

const NOISE_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub problem: ProblemSpec,
    pub optimizer: OptimizerSpec,
    pub schedule: Schedule,
    pub steps: u64,
    pub seed: u64,
    #[serde(default)]
    pub record_dense: bool,
    /// Box used to flag iterates that leave the region where the problem's
    /// gradient bound holds. Defaults to the problem's certified box.
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub iterate_box: Option<IterateBox>,
}

impl RunSpec {
    pub fn new(problem: ProblemSpec, optimizer: OptimizerSpec, schedule: Schedule, steps: u64, seed: u64) -> Self {
        RunSpec {
            problem,
            optimizer,
            schedule,
            steps,
            seed,
            record_dense: false,
            iterate_box: None,
        }
    }

    pub fn dense(mut self) -> Self {
        self.record_dense = true;
        self
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        RunSpec {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::config(format!("steps = {} must be >= 2", self.steps)));
        }
        self.optimizer.validate()?;
        self.schedule.validate()
    }
}

/// One row of a trace. `loss` and `grad_norm_sq` are exact values at `x_t`;
/// the learning-rate and `v_hat` columns describe the optimizer state after
/// step `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub loss: f64,
    pub grad_norm_sq: f64,
    pub lr: f64,
    pub eff_lr_min: f64,
    pub eff_lr_max: f64,
    pub vhat_min: f64,
    pub vhat_max: f64,
}

/// Per-step vectors. `x[k]` is `x_{k+1}` before step `k+1`; `g`, `m` and
/// `v_hat` are the values produced by that step. `x_final` is the iterate
/// after the last step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DenseChannels {
    pub x: Vec<ParamVector>,
    pub g: Vec<ParamVector>,
    pub m: Vec<ParamVector>,
    pub v_hat: Vec<ParamVector>,
    pub x_final: Option<ParamVector>,
}

impl DenseChannels {
    /// Iterates `x_1, ..., x_{T+1}` (the last only when the run finished).
    pub fn iterates(&self) -> impl Iterator<Item = &ParamVector> {
        self.x.iter().chain(self.x_final.iter())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub problem: String,
    pub optimizer: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub diverged: bool,
    #[serde(default)]
    pub left_box: bool,
    #[serde(default)]
    pub initial_point: String,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<StepRecord>,
    pub dense: Option<DenseChannels>,
    pub meta: RunMeta,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn lrs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.lr).collect()
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    /// Smallest exact squared gradient norm seen so far.
    pub fn min_grad_norm_sq(&self) -> f64 {
        self.records.iter().map(|r| r.grad_norm_sq).fold(f64::INFINITY, f64::min)
    }
}

/// Build the problem named in `spec` and run it.
pub fn run(spec: &RunSpec) -> Result<Trace> {
    let problem = spec.problem.build()?;
    run_on(problem.as_ref(), spec)
}

/// Run `spec` against an already constructed problem (the `problem` field of
/// `spec` is only recorded in the metadata).
pub fn run_on(problem: &dyn StochasticProblem, spec: &RunSpec) -> Result<Trace> {
    run_inner(problem, spec, None).map(|(trace, _)| trace)
}

/// Re-run `spec` and return the iterate `x_t` (1-based; `t = T + 1` gives the
/// final iterate).
pub fn replay(problem: &dyn StochasticProblem, spec: &RunSpec, t: u64) -> Result<ParamVector> {
    if t == 0 || t > spec.steps + 1 {
        return Err(Error::config(format!("replay index {t} outside 1..={}", spec.steps + 1)));
    }
    let (trace, x) = run_inner(problem, spec, Some(t))?;
    x.ok_or_else(|| {
        Error::config(format!(
            "run diverged after {} steps, before reaching x_{t}",
            trace.len()
        ))
    })
}

pub fn initial_point(problem: &dyn StochasticProblem, seed: u64) -> (ParamVector, &'static str) {
    match problem.start() {
        Some(x) => (x, "problem"),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(INIT_STREAM);
            let x = ParamVector::from_fn(problem.dim(), |_| INIT_SCALE * rng.sample::<f64, _>(StandardNormal));
            (x, "gaussian")
        }
    }
}

fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::NonFinite { .. })
}

fn run_inner(problem: &dyn StochasticProblem, spec: &RunSpec, capture: Option<u64>) -> Result<(Trace, Option<ParamVector>)> {
    spec.validate()?;
    let started = Instant::now();
    let d = problem.dim();
    let bounds = spec.iterate_box.clone().unwrap_or_else(|| problem.certified_box());
    if bounds.half_width.len() != d {
        return Err(Error::Shape {
            expected: d,
            got: bounds.half_width.len(),
        });
    }
    let (mut x, init_kind) = initial_point(problem, spec.seed);
    x.ensure_dim(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(NOISE_STREAM);
    let mut state = init_state(d)?;
    let mut records = Vec::with_capacity(spec.steps as usize);
    let mut dense = spec.record_dense.then(|| DenseChannels {
        x: Vec::with_capacity(spec.steps as usize),
        ..DenseChannels::default()
    });
    let mut captured = None;
    let mut diverged = false;
    let mut left_box = false;

    for t in 1..=spec.steps {
        if capture == Some(t) {
            captured = Some(x.clone());
        }
        left_box |= !bounds.contains(&x);
        let loss = problem.loss(&x);
        let grad_norm_sq = problem.exact_grad(&x).norm_sq();
        if !loss.is_finite() || !grad_norm_sq.is_finite() {
            diverged = true;
            break;
        }
        let xi = problem.sample_xi(t, &mut rng);
        let g = problem.stoch_grad(&x, &xi);
        let lr = spec.schedule.lr(t);
        let (next, outcome) = match spec.optimizer.step(&state, &x, &g, lr) {
            Ok(r) => r,
            Err(e) if is_divergence(&e) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let (vhat_min, vhat_max) = match spec.optimizer.denominator_stat(&next) {
            Some(s) => s
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))),
            None => (0.0, 0.0),
        };
        records.push(StepRecord {
            t,
            loss,
            grad_norm_sq,
            lr,
            eff_lr_min: outcome.effective_lr_min,
            eff_lr_max: outcome.effective_lr_max,
            vhat_min,
            vhat_max,
        });
        if let Some(dense) = dense.as_mut() {
            dense.x.push(std::mem::replace(&mut x, outcome.new_x));
            dense.g.push(g);
            dense.m.push(next.m.clone());
            dense.v_hat.push(next.v_hat.clone());
        } else {
            x = outcome.new_x;
        }
        state = next;
    }
    if !diverged {
        if capture == Some(spec.steps + 1) {
            captured = Some(x.clone());
        }
        left_box |= !bounds.contains(&x);
        if let Some(dense) = dense.as_mut() {
            dense.x_final = Some(x);
        }
    }

    let meta = RunMeta {
        problem: problem.id(),
        optimizer: spec.optimizer.name().to_string(),
        config: serde_json::to_value(spec)?,
        seed: spec.seed,
        diverged,
        left_box,
        initial_point: init_kind.to_string(),
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok((Trace { records, dense, meta }, captured))
}
