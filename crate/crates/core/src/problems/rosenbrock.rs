use rand::RngCore;

use super::{KnownConstants, StochasticProblem, Xi};
use crate::{Error, ParamVector, Result};

/// Chained Rosenbrock function, minimised at the all-ones vector.
/// Deterministic: the stochastic gradient is the exact gradient.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    dim: usize,
}

pub fn make_rosenbrock(d: usize) -> Result<Rosenbrock> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(Rosenbrock { dim: d })
}

impl StochasticProblem for Rosenbrock {
    fn id(&self) -> String {
        format!("rosenbrock(d={})", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    fn exact_grad(&self, x: &[f64]) -> ParamVector {
        let d = self.dim;
        let mut g = vec![0.0; d];
        for i in 0..d - 1 {
            let r = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * r - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * r;
        }
        g.into()
    }

    fn sample_xi(&self, _t: u64, _rng: &mut dyn RngCore) -> Xi {
        Xi::None
    }

    fn eval(&self, x: &[f64], _xi: &Xi) -> f64 {
        self.loss(x)
    }

    fn stoch_grad(&self, x: &[f64], _xi: &Xi) -> ParamVector {
        self.exact_grad(x)
    }

    fn constants(&self) -> KnownConstants {
        KnownConstants {
            l: None,
            g_inf: None,
            f_inf: Some(0.0),
        }
    }

    /// The classical `(-1.2, 1, -1.2, 1, ...)` start.
    fn start(&self) -> Option<ParamVector> {
        Some(ParamVector::from_fn(self.dim, |i| if i % 2 == 0 { -1.2 } else { 1.0 }))
    }
}
