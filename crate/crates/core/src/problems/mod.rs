//! Stochastic objectives `f(x) = E_xi f(x; xi)`.
//!
//! Each problem exposes the exact objective and gradient, a stochastic
//! gradient oracle driven by a caller-supplied RNG, and whatever constants
//! it can certify: the smoothness constant `L`, a uniform bound `G_inf` on
//! stochastic-gradient coordinates (valid on the declared [`IterateBox`]) and
//! the optimal value.
//!
//! The suite (quadratic, Rosenbrock, logistic regression, sparse-growth
//! quadratic, small MLP) is a desk-scale choice of test functions; none of
//! them is meant to stand in for a particular large-scale benchmark.

mod fd;
mod logistic;
mod mlp;
mod quadratic;
mod rosenbrock;
mod sparse;

use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use fd::finite_diff_grad;
pub use logistic::{make_logistic, Logistic, LOGISTIC_RIDGE};
pub use mlp::{make_mlp, Mlp, MLP_BATCH, MLP_HIDDEN, MLP_INPUT, MLP_OUTPUT, MLP_SAMPLES};
pub use quadratic::{make_quadratic, Quadratic};
pub use rosenbrock::{make_rosenbrock, Rosenbrock};
pub use sparse::{make_sparse_growth, SparseGrowth, SparseGrowthParams};

use crate::{Error, ParamVector, Result};

/// Default half-width of the box on which `G_inf` is certified.
pub const DEFAULT_BOX_HALF_WIDTH: f64 = 10.0;

/// One realisation of the noise variable.
#[derive(Debug, Clone, PartialEq)]
pub enum Xi {
    /// Deterministic oracle.
    None,
    /// Additive perturbation of the gradient (and the matching linear term
    /// of the sampled objective).
    Additive(ParamVector),
    /// Index of a single training sample.
    Index(usize),
    /// Minibatch of training-sample indices, drawn with replacement.
    Batch(Vec<usize>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KnownConstants {
    pub l: Option<f64>,
    pub g_inf: Option<f64>,
    pub f_inf: Option<f64>,
}

/// Axis-aligned symmetric box `|x_i| <= half_width_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateBox {
    pub half_width: Vec<f64>,
}

impl IterateBox {
    pub fn uniform(d: usize, half_width: f64) -> Self {
        IterateBox {
            half_width: vec![half_width; d],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.half_width.len()
            && x.iter().zip(&self.half_width).all(|(x, h)| x.abs() <= *h)
    }
}

pub trait StochasticProblem: Send + Sync {
    /// Short identifier recorded in trace metadata.
    fn id(&self) -> String;

    fn dim(&self) -> usize;

    /// Exact objective `f(x)`.
    fn loss(&self, x: &[f64]) -> f64;

    fn exact_grad(&self, x: &[f64]) -> ParamVector;

    /// Draw the noise for step `t` (1-based). Problems with step-dependent
    /// noise schedules use `t`; the rest ignore it.
    fn sample_xi(&self, t: u64, rng: &mut dyn RngCore) -> Xi;

    /// Sampled objective `f(x; xi)`.
    fn eval(&self, x: &[f64], xi: &Xi) -> f64;

    fn stoch_grad(&self, x: &[f64], xi: &Xi) -> ParamVector;

    fn constants(&self) -> KnownConstants;

    /// Box on which `constants().g_inf` holds.
    fn certified_box(&self) -> IterateBox {
        IterateBox::uniform(self.dim(), DEFAULT_BOX_HALF_WIDTH)
    }

    /// Problem-declared initial point, if any.
    fn start(&self) -> Option<ParamVector> {
        None
    }

    /// `E_xi[stoch_grad(x, xi)] = exact_grad(x)` holds for this problem.
    fn unbiased(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Gaussian noise truncated at four standard deviations.
    AdditiveGaussian,
    /// Noise drawn from a fixed, zero-mean table of offsets.
    MinibatchIndex,
    /// Truncated Gaussian noise applied to a random subset of coordinates.
    CoordinateMask,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub magnitude: f64,
    #[serde(default = "one")]
    pub sparsity: f64,
}

fn one() -> f64 {
    1.0
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            kind: NoiseKind::AdditiveGaussian,
            magnitude: 0.0,
            sparsity: 1.0,
        }
    }

    pub fn gaussian(magnitude: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::AdditiveGaussian,
            magnitude,
            sparsity: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.magnitude.is_finite() && self.magnitude >= 0.0) {
            return Err(Error::config(format!(
                "noise magnitude {} must be finite and >= 0",
                self.magnitude
            )));
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::config(format!("noise sparsity {} outside [0, 1]", self.sparsity)));
        }
        Ok(())
    }
}

/// Serializable problem selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        dim: usize,
        condition_number: f64,
        noise: NoiseSpec,
    },
    Rosenbrock {
        dim: usize,
    },
    Logistic {
        dim: usize,
        n_samples: usize,
        seed: u64,
    },
    SparseGrowth(SparseGrowthParams),
    Mlp {
        task_seed: u64,
    },
}

pub const PROBLEM_NAMES: [&str; 5] = ["quadratic", "rosenbrock", "logistic", "sparse-growth", "mlp"];

impl ProblemSpec {
    pub fn build(&self) -> Result<Box<dyn StochasticProblem>> {
        Ok(match self {
            ProblemSpec::Quadratic {
                dim,
                condition_number,
                noise,
            } => Box::new(make_quadratic(*dim, *condition_number, *noise)?),
            ProblemSpec::Rosenbrock { dim } => Box::new(make_rosenbrock(*dim)?),
            ProblemSpec::Logistic {
                dim,
                n_samples,
                seed,
            } => Box::new(make_logistic(*dim, *n_samples, *seed)?),
            ProblemSpec::SparseGrowth(params) => Box::new(SparseGrowth::new(params.clone())?),
            ProblemSpec::Mlp { task_seed } => Box::new(make_mlp(*task_seed)),
        })
    }

    /// Kind name, as accepted by [`ProblemSpec::from_name`].
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Quadratic { .. } => "quadratic",
            ProblemSpec::Rosenbrock { .. } => "rosenbrock",
            ProblemSpec::Logistic { .. } => "logistic",
            ProblemSpec::SparseGrowth(_) => "sparse-growth",
            ProblemSpec::Mlp { .. } => "mlp",
        }
    }

    /// Default parameters for a problem name, as used by the CLI.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "quadratic" => ProblemSpec::Quadratic {
                dim: 10,
                condition_number: 10.0,
                noise: NoiseSpec::gaussian(0.5),
            },
            "rosenbrock" => ProblemSpec::Rosenbrock { dim: 10 },
            "logistic" => ProblemSpec::Logistic {
                dim: 10,
                n_samples: 500,
                seed: 0,
            },
            "sparse-growth" => ProblemSpec::SparseGrowth(SparseGrowthParams::default()),
            "mlp" => ProblemSpec::Mlp { task_seed: 0 },
            other => {
                return Err(Error::config(format!(
                    "unknown problem `{other}`; valid names: {}",
                    PROBLEM_NAMES.join(", ")
                )))
            }
        })
    }
}

pub(crate) fn axpy_in_place(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}
