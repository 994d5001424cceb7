use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{KnownConstants, StochasticProblem, Xi};
use crate::ParamVector;

pub const MLP_INPUT: usize = 10;
pub const MLP_HIDDEN: usize = 16;
pub const MLP_OUTPUT: usize = 2;
pub const MLP_SAMPLES: usize = 1000;
pub const MLP_BATCH: usize = 32;

const LABEL_FLIP: f64 = 0.1;

const W1: usize = 0;
const B1: usize = W1 + MLP_HIDDEN * MLP_INPUT;
const W2: usize = B1 + MLP_HIDDEN;
const B2: usize = W2 + MLP_OUTPUT * MLP_HIDDEN;
const N_PARAMS: usize = B2 + MLP_OUTPUT;

/// One-hidden-layer tanh network with softmax cross-entropy on a noisy XOR
/// task: inputs are standard normal, the label is `x_0 * x_1 > 0`, and 10% of
/// the labels are flipped.
///
/// Parameters are packed as `W1 (hidden x input, row-major) | b1 | W2
/// (output x hidden, row-major) | b2`. Minibatches of [`MLP_BATCH`] samples
/// are drawn with replacement.
#[derive(Debug, Clone)]
pub struct Mlp {
    task_seed: u64,
    inputs: Vec<[f64; MLP_INPUT]>,
    labels: Vec<usize>,
}

pub fn make_mlp(task_seed: u64) -> Mlp {
    let mut rng = ChaCha8Rng::seed_from_u64(task_seed);
    let mut inputs = Vec::with_capacity(MLP_SAMPLES);
    let mut labels = Vec::with_capacity(MLP_SAMPLES);
    for _ in 0..MLP_SAMPLES {
        let mut x = [0.0; MLP_INPUT];
        for v in x.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let mut y = usize::from(x[0] * x[1] > 0.0);
        if rng.random_bool(LABEL_FLIP) {
            y = 1 - y;
        }
        inputs.push(x);
        labels.push(y);
    }
    Mlp {
        task_seed,
        inputs,
        labels,
    }
}

impl Mlp {
    pub fn n_params() -> usize {
        N_PARAMS
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    fn logits(w: &[f64], x: &[f64; MLP_INPUT], hidden: &mut [f64; MLP_HIDDEN]) -> [f64; MLP_OUTPUT] {
        for (h, out) in hidden.iter_mut().enumerate() {
            let row = &w[W1 + h * MLP_INPUT..W1 + (h + 1) * MLP_INPUT];
            let z: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[B1 + h];
            *out = z.tanh();
        }
        let mut logits = [0.0; MLP_OUTPUT];
        for (k, out) in logits.iter_mut().enumerate() {
            let row = &w[W2 + k * MLP_HIDDEN..W2 + (k + 1) * MLP_HIDDEN];
            *out = row.iter().zip(hidden.iter()).map(|(a, b)| a * b).sum::<f64>() + w[B2 + k];
        }
        logits
    }

    /// Cross-entropy and softmax probabilities for one sample.
    fn sample_loss(logits: &[f64; MLP_OUTPUT], y: usize) -> (f64, [f64; MLP_OUTPUT]) {
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs = [0.0; MLP_OUTPUT];
        let mut z = 0.0;
        for (p, l) in probs.iter_mut().zip(logits) {
            *p = (l - top).exp();
            z += *p;
        }
        for p in probs.iter_mut() {
            *p /= z;
        }
        (top + z.ln() - logits[y], probs)
    }

    fn batch_loss(&self, w: &[f64], idx: impl Iterator<Item = usize>) -> f64 {
        let mut hidden = [0.0; MLP_HIDDEN];
        let mut total = 0.0;
        let mut n = 0usize;
        for i in idx {
            let logits = Self::logits(w, &self.inputs[i], &mut hidden);
            total += Self::sample_loss(&logits, self.labels[i]).0;
            n += 1;
        }
        total / n as f64
    }

    fn batch_grad(&self, w: &[f64], idx: impl Iterator<Item = usize>) -> ParamVector {
        let mut grad = ParamVector::zeros(N_PARAMS);
        let mut hidden = [0.0; MLP_HIDDEN];
        let mut n = 0usize;
        for i in idx {
            let x = &self.inputs[i];
            let logits = Self::logits(w, x, &mut hidden);
            let (_, mut delta) = Self::sample_loss(&logits, self.labels[i]);
            delta[self.labels[i]] -= 1.0;
            let mut back = [0.0; MLP_HIDDEN];
            for (k, d) in delta.iter().enumerate() {
                grad[B2 + k] += d;
                for h in 0..MLP_HIDDEN {
                    grad[W2 + k * MLP_HIDDEN + h] += d * hidden[h];
                    back[h] += d * w[W2 + k * MLP_HIDDEN + h];
                }
            }
            for h in 0..MLP_HIDDEN {
                let dz = back[h] * (1.0 - hidden[h] * hidden[h]);
                grad[B1 + h] += dz;
                for (j, xj) in x.iter().enumerate() {
                    grad[W1 + h * MLP_INPUT + j] += dz * xj;
                }
            }
            n += 1;
        }
        let scale = 1.0 / n as f64;
        for g in grad.iter_mut() {
            *g *= scale;
        }
        grad
    }

    /// Fraction of training samples classified correctly.
    pub fn accuracy(&self, w: &[f64]) -> f64 {
        let mut hidden = [0.0; MLP_HIDDEN];
        let correct = self
            .inputs
            .iter()
            .zip(&self.labels)
            .filter(|(x, y)| {
                let l = Self::logits(w, x, &mut hidden);
                usize::from(l[1] > l[0]) == **y
            })
            .count();
        correct as f64 / MLP_SAMPLES as f64
    }
}

impl StochasticProblem for Mlp {
    fn id(&self) -> String {
        format!("mlp(task_seed={})", self.task_seed)
    }

    fn dim(&self) -> usize {
        N_PARAMS
    }

    fn loss(&self, x: &[f64]) -> f64 {
        self.batch_loss(x, 0..MLP_SAMPLES)
    }

    fn exact_grad(&self, x: &[f64]) -> ParamVector {
        self.batch_grad(x, 0..MLP_SAMPLES)
    }

    fn sample_xi(&self, _t: u64, rng: &mut dyn RngCore) -> Xi {
        Xi::Batch(
            (0..MLP_BATCH)
                .map(|_| rng.random_range(0..MLP_SAMPLES))
                .collect(),
        )
    }

    fn eval(&self, x: &[f64], xi: &Xi) -> f64 {
        match xi {
            Xi::Batch(b) => self.batch_loss(x, b.iter().copied()),
            Xi::Index(i) => self.batch_loss(x, std::iter::once(*i)),
            _ => self.loss(x),
        }
    }

    fn stoch_grad(&self, x: &[f64], xi: &Xi) -> ParamVector {
        match xi {
            Xi::Batch(b) => self.batch_grad(x, b.iter().copied()),
            Xi::Index(i) => self.batch_grad(x, std::iter::once(*i)),
            _ => self.exact_grad(x),
        }
    }

    /// Only `f_inf >= 0` is known for cross-entropy; no smoothness or
    /// gradient bound is certified.
    fn constants(&self) -> KnownConstants {
        KnownConstants::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count() {
        assert_eq!(make_mlp(0).dim(), 210);
    }

    #[test]
    fn zero_weights_give_ln2() {
        let p = make_mlp(3);
        let w = vec![0.0; N_PARAMS];
        assert!((p.loss(&w) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn labels_are_roughly_balanced() {
        let p = make_mlp(1);
        let ones = p.labels().iter().filter(|y| **y == 1).count();
        assert!((400..600).contains(&ones), "{ones}");
    }

    #[test]
    fn batch_of_everything_matches_exact_grad() {
        let p = make_mlp(2);
        let w: Vec<f64> = (0..N_PARAMS).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.03).collect();
        let g = p.stoch_grad(&w, &Xi::Batch((0..MLP_SAMPLES).collect()));
        let e = p.exact_grad(&w);
        for (a, b) in g.iter().zip(e.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
