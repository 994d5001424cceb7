use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_on, RunSpec, Trace};
use crate::problems::StochasticProblem;
use crate::sum::{mean_std, NeumaierSum};
use crate::Result;

/// Spec for the `k`-th member of a batch: seed `spec.seed + k` (wrapping).
pub fn run_seed(spec: &RunSpec, k: u64) -> RunSpec {
    spec.with_seed(spec.seed.wrapping_add(k))
}

/// Run seeds `spec.seed + k` for `k in 0..n_seeds` in parallel. The result is
/// ordered by `k` whatever the execution order.
pub fn repeat_runs(problem: &dyn StochasticProblem, spec: &RunSpec, n_seeds: u64) -> Result<Vec<Trace>> {
    (0..n_seeds)
        .into_par_iter()
        .map(|k| run_on(problem, &run_seed(spec, k)))
        .collect()
}

pub fn repeat_runs_serial(problem: &dyn StochasticProblem, spec: &RunSpec, n_seeds: u64) -> Result<Vec<Trace>> {
    (0..n_seeds).map(|k| run_on(problem, &run_seed(spec, k))).collect()
}

/// Cross-seed means at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub t: u64,
    pub n: usize,
    pub mean_loss: f64,
    pub mean_grad_norm_sq: f64,
}

/// Per-step means over all traces that reached that step.
pub fn aggregate(traces: &[Trace]) -> Vec<Aggregate> {
    let longest = traces.iter().map(Trace::len).max().unwrap_or(0);
    (0..longest)
        .map(|k| {
            let mut loss = NeumaierSum::new();
            let mut grad = NeumaierSum::new();
            let mut n = 0;
            for r in traces.iter().filter_map(|tr| tr.records.get(k)) {
                loss.add(r.loss);
                grad.add(r.grad_norm_sq);
                n += 1;
            }
            Aggregate {
                t: k as u64 + 1,
                n,
                mean_loss: loss.total() / n as f64,
                mean_grad_norm_sq: grad.total() / n as f64,
            }
        })
        .collect()
}

/// Mean and standard deviation of the final loss and squared gradient norm
/// over the runs that did not diverge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalSummary {
    pub n: usize,
    pub n_diverged: usize,
    pub loss_mean: f64,
    pub loss_std: f64,
    pub grad_norm_sq_mean: f64,
    pub grad_norm_sq_std: f64,
}

pub fn final_summary(traces: &[Trace]) -> FinalSummary {
    let finished: Vec<_> = traces
        .iter()
        .filter(|t| !t.meta.diverged)
        .filter_map(Trace::last)
        .collect();
    let losses: Vec<f64> = finished.iter().map(|r| r.loss).collect();
    let grads: Vec<f64> = finished.iter().map(|r| r.grad_norm_sq).collect();
    let (loss_mean, loss_std) = mean_std(&losses);
    let (grad_norm_sq_mean, grad_norm_sq_std) = mean_std(&grads);
    FinalSummary {
        n: traces.len(),
        n_diverged: traces.len() - finished.len(),
        loss_mean,
        loss_std,
        grad_norm_sq_mean,
        grad_norm_sq_std,
    }
}
