use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, IterateBox, KnownConstants, StochasticProblem, Xi};
use crate::{Error, ParamVector, Result};

/// Quadratic whose gradient noise is switched on coordinate-by-coordinate
/// with a probability that decays in the step index:
///
/// ```text
/// g_t = Lambda x + sigma * mask_t * r_t,   P(mask_{t,i} = 1) = sparsity * t^(-decay)
/// ```
///
/// with `r_t` Rademacher. The noise is zero-mean, so the oracle is unbiased,
/// and the cumulative per-coordinate noise energy grows like
/// `t^(1 - decay)` (like `log t` at `decay = 1`). Cumulative gradient norms
/// therefore grow with exponent `s = (1 - decay) / 2`.
///
/// The spectrum is log-spaced in `[1 / condition_number, 1]` and the start
/// puts equal initial suboptimality `1/2` in every eigendirection
/// (`|x_1,i| = lambda_i^(-1/2)`), which gives sublinear, power-law decay of
/// the gradient norm under constant step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseGrowthParams {
    pub dim: usize,
    pub sparsity: f64,
    pub decay: f64,
    pub noise_magnitude: f64,
    pub condition_number: f64,
    pub seed: u64,
}

impl Default for SparseGrowthParams {
    fn default() -> Self {
        SparseGrowthParams {
            dim: 20,
            sparsity: 1.0,
            decay: 1.0,
            noise_magnitude: 1.0,
            condition_number: 1e4,
            seed: 0,
        }
    }
}

impl SparseGrowthParams {
    /// Growth exponent the noise schedule is built to realise.
    pub fn target_growth(&self) -> f64 {
        ((1.0 - self.decay) / 2.0).clamp(0.0, 0.5)
    }
}

#[derive(Debug, Clone)]
pub struct SparseGrowth {
    params: SparseGrowthParams,
    eigenvalues: Vec<f64>,
    start: ParamVector,
}

pub fn make_sparse_growth(d: usize, sparsity: f64, decay: f64, seed: u64) -> Result<SparseGrowth> {
    SparseGrowth::new(SparseGrowthParams {
        dim: d,
        sparsity,
        decay,
        seed,
        ..SparseGrowthParams::default()
    })
}

impl SparseGrowth {
    pub fn new(params: SparseGrowthParams) -> Result<Self> {
        let d = params.dim;
        if d == 0 {
            return Err(Error::InvalidDimension(d));
        }
        if !(params.sparsity > 0.0 && params.sparsity <= 1.0) {
            return Err(Error::config(format!(
                "sparsity {} outside (0, 1]",
                params.sparsity
            )));
        }
        if !(params.decay >= 0.0 && params.decay.is_finite()) {
            return Err(Error::config(format!("decay {} must be >= 0", params.decay)));
        }
        if !(params.noise_magnitude >= 0.0 && params.noise_magnitude.is_finite()) {
            return Err(Error::config("noise magnitude must be finite and >= 0"));
        }
        if !(params.condition_number >= 1.0 && params.condition_number.is_finite()) {
            return Err(Error::config("condition number must be >= 1"));
        }
        let kappa = params.condition_number;
        let eigenvalues: Vec<f64> = if d == 1 {
            vec![1.0]
        } else {
            (0..d)
                .map(|i| kappa.powf(i as f64 / (d - 1) as f64) / kappa)
                .collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let start = eigenvalues
            .iter()
            .map(|l| {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                sign / l.sqrt()
            })
            .collect::<Vec<_>>()
            .into();
        Ok(SparseGrowth {
            params,
            eigenvalues,
            start,
        })
    }

    pub fn params(&self) -> &SparseGrowthParams {
        &self.params
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Probability that a coordinate's noise is active at step `t`.
    pub fn activation_probability(&self, t: u64) -> f64 {
        (self.params.sparsity * (t.max(1) as f64).powf(-self.params.decay)).min(1.0)
    }
}

impl StochasticProblem for SparseGrowth {
    fn id(&self) -> String {
        format!(
            "sparse-growth(d={},sparsity={},decay={})",
            self.params.dim, self.params.sparsity, self.params.decay
        )
    }

    fn dim(&self) -> usize {
        self.params.dim
    }

    fn loss(&self, x: &[f64]) -> f64 {
        0.5 * self
            .eigenvalues
            .iter()
            .zip(x)
            .map(|(l, x)| l * x * x)
            .sum::<f64>()
    }

    fn exact_grad(&self, x: &[f64]) -> ParamVector {
        self.eigenvalues.iter().zip(x).map(|(l, x)| l * x).collect::<Vec<_>>().into()
    }

    fn sample_xi(&self, t: u64, rng: &mut dyn RngCore) -> Xi {
        let p = self.activation_probability(t);
        let sigma = self.params.noise_magnitude;
        Xi::Additive(ParamVector::from_fn(self.dim(), |_| {
            let active = rng.random_bool(p);
            let sign = if rng.random_bool(0.5) { sigma } else { -sigma };
            if active {
                sign
            } else {
                0.0
            }
        }))
    }

    fn eval(&self, x: &[f64], xi: &Xi) -> f64 {
        match xi {
            Xi::Additive(n) => self.loss(x) + dot(n, x),
            _ => self.loss(x),
        }
    }

    fn stoch_grad(&self, x: &[f64], xi: &Xi) -> ParamVector {
        let mut g = self.exact_grad(x);
        if let Xi::Additive(n) = xi {
            super::axpy_in_place(&mut g, 1.0, n);
        }
        g
    }

    /// On the box `|x_i| <= 2 / sqrt(lambda_i)` each gradient coordinate is
    /// at most `2 sqrt(lambda_i) + sigma <= 2 + sigma`.
    fn constants(&self) -> KnownConstants {
        let top = self.eigenvalues.iter().cloned().fold(0.0, f64::max);
        KnownConstants {
            l: Some(top),
            g_inf: Some(2.0 * top.sqrt() + self.params.noise_magnitude),
            f_inf: Some(0.0),
        }
    }

    fn certified_box(&self) -> IterateBox {
        IterateBox {
            half_width: self.eigenvalues.iter().map(|l| 2.0 / l.sqrt()).collect(),
        }
    }

    fn start(&self) -> Option<ParamVector> {
        Some(self.start.clone())
    }
}
