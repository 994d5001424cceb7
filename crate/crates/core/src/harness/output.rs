use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::RngCore;

use super::{schedule_lr, Schedule, Trace};
use crate::{Error, ParamVector, Result};

/// Selection probabilities for the output iterate: entry `k` is the
/// probability of returning `x_{k+2}`, proportional to `alpha_{k+1}`.
pub fn output_weights(schedule: &Schedule, steps: u64) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::config(format!("output selection needs T >= 2, got {steps}")));
    }
    let alphas: Vec<f64> = (1..steps).map(|t| schedule_lr(schedule, t)).collect();
    let total = crate::sum::compensated_sum(alphas.iter().copied());
    Ok(alphas.into_iter().map(|a| a / total).collect())
}

/// Sampler over `t in {2, ..., T}` with `P(t) ~ alpha_{t-1}`.
#[derive(Debug, Clone)]
pub struct OutputSampler {
    dist: WeightedIndex<f64>,
}

impl OutputSampler {
    pub fn new(schedule: &Schedule, steps: u64) -> Result<Self> {
        let weights = output_weights(schedule, steps)?;
        let dist = WeightedIndex::new(&weights)
            .map_err(|e| Error::config(format!("invalid output weights: {e}")))?;
        Ok(OutputSampler { dist })
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> u64 {
        self.dist.sample(rng) as u64 + 2
    }
}

/// Draw the output index `t*` and return `(t*, x_{t*})`. Needs the dense
/// `x` channel; use [`super::replay`] to materialise `x_{t*}` otherwise.
pub fn select_output(trace: &Trace, schedule: &Schedule, rng: &mut dyn RngCore) -> Result<(u64, ParamVector)> {
    let steps = trace.len() as u64;
    let sampler = OutputSampler::new(schedule, steps)?;
    let dense = trace.dense.as_ref().ok_or(Error::IncompleteTrace("x"))?;
    let t = sampler.sample(rng);
    Ok((t, dense.x[(t - 1) as usize].clone()))
}
