use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{
    dot, IterateBox, KnownConstants, NoiseKind, NoiseSpec, StochasticProblem, Xi,
    DEFAULT_BOX_HALF_WIDTH,
};
use crate::{Error, ParamVector, Result};

/// Gaussian noise is truncated at this many standard deviations so that the
/// stochastic gradient is almost surely bounded.
pub const TRUNCATION_SIGMAS: f64 = 4.0;

const OFFSET_TABLE_LEN: usize = 64;

/// `f(x) = 1/2 sum_i lambda_i x_i^2` with log-spaced `lambda` in `[1, kappa]`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    eigenvalues: Vec<f64>,
    noise: NoiseSpec,
    offsets: Vec<Vec<f64>>,
    noise_bound: f64,
}

pub fn make_quadratic(d: usize, condition_number: f64, noise: NoiseSpec) -> Result<Quadratic> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    if !(condition_number >= 1.0 && condition_number.is_finite()) {
        return Err(Error::config(format!(
            "condition number {condition_number} must be >= 1"
        )));
    }
    noise.validate()?;
    let eigenvalues = if d == 1 {
        vec![condition_number]
    } else {
        (0..d)
            .map(|i| condition_number.powf(i as f64 / (d - 1) as f64))
            .collect()
    };
    let (offsets, noise_bound) = match noise.kind {
        NoiseKind::MinibatchIndex => offset_table(d, noise.magnitude),
        NoiseKind::AdditiveGaussian | NoiseKind::CoordinateMask => {
            (Vec::new(), TRUNCATION_SIGMAS * noise.magnitude)
        }
    };
    Ok(Quadratic {
        eigenvalues,
        noise,
        offsets,
        noise_bound,
    })
}

/// Fixed zero-mean table of gradient offsets, bounded by `2 * magnitude`.
fn offset_table(d: usize, magnitude: f64) -> (Vec<Vec<f64>>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 ^ d as u64);
    let mut table: Vec<Vec<f64>> = (0..OFFSET_TABLE_LEN)
        .map(|_| {
            (0..d)
                .map(|_| magnitude * rng.random_range(-1.0..=1.0))
                .collect()
        })
        .collect();
    for i in 0..d {
        let mean = table.iter().map(|row| row[i]).sum::<f64>() / OFFSET_TABLE_LEN as f64;
        for row in table.iter_mut() {
            row[i] -= mean;
        }
    }
    let bound = table
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    (table, bound)
}

impl Quadratic {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    /// Almost-sure bound on the magnitude of one noise coordinate.
    pub fn noise_bound(&self) -> f64 {
        self.noise_bound
    }

    fn truncated_normal(&self, rng: &mut dyn RngCore) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        let s = self.noise.magnitude;
        (s * z).clamp(-TRUNCATION_SIGMAS * s, TRUNCATION_SIGMAS * s)
    }
}

impl StochasticProblem for Quadratic {
    fn id(&self) -> String {
        format!(
            "quadratic(d={},kappa={})",
            self.eigenvalues.len(),
            self.eigenvalues.last().copied().unwrap_or(1.0)
        )
    }

    fn dim(&self) -> usize {
        self.eigenvalues.len()
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

    fn sample_xi(&self, _t: u64, rng: &mut dyn RngCore) -> Xi {
        if self.noise.magnitude == 0.0 {
            return Xi::None;
        }
        let d = self.dim();
        match self.noise.kind {
            NoiseKind::AdditiveGaussian => {
                Xi::Additive(ParamVector::from_fn(d, |_| self.truncated_normal(rng)))
            }
            NoiseKind::CoordinateMask => {
                let sparsity = self.noise.sparsity;
                Xi::Additive(ParamVector::from_fn(d, |_| {
                    let active = rng.random_bool(sparsity);
                    let z = self.truncated_normal(rng);
                    if active {
                        z
                    } else {
                        0.0
                    }
                }))
            }
            NoiseKind::MinibatchIndex => Xi::Index(rng.random_range(0..self.offsets.len())),
        }
    }

    fn eval(&self, x: &[f64], xi: &Xi) -> f64 {
        let base = self.loss(x);
        match xi {
            Xi::Additive(n) => base + dot(n, x),
            Xi::Index(k) => base + dot(&self.offsets[*k], x),
            _ => base,
        }
    }

    fn stoch_grad(&self, x: &[f64], xi: &Xi) -> ParamVector {
        let mut g = self.exact_grad(x);
        match xi {
            Xi::Additive(n) => super::axpy_in_place(&mut g, 1.0, n),
            Xi::Index(k) => super::axpy_in_place(&mut g, 1.0, &self.offsets[*k]),
            _ => {}
        }
        g
    }

    fn constants(&self) -> KnownConstants {
        let l = self.eigenvalues.iter().cloned().fold(0.0, f64::max);
        KnownConstants {
            l: Some(l),
            g_inf: Some(l * DEFAULT_BOX_HALF_WIDTH + self.noise_bound),
            f_inf: Some(0.0),
        }
    }

    fn certified_box(&self) -> IterateBox {
        IterateBox::uniform(self.dim(), DEFAULT_BOX_HALF_WIDTH)
    }

    fn start(&self) -> Option<ParamVector> {
        Some(vec![1.0; self.dim()].into())
    }
}
