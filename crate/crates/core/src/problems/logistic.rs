use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{dot, IterateBox, KnownConstants, StochasticProblem, Xi};
use crate::{Error, ParamVector, Result};

/// Ridge coefficient added to the mean logistic loss.
pub const LOGISTIC_RIDGE: f64 = 1e-3;

const MARGIN: f64 = 0.05;
const BOX_HALF_WIDTH: f64 = 100.0;

/// Ridge-regularised logistic regression on seeded, linearly separable data.
/// `xi` is the index of one training sample.
#[derive(Debug, Clone)]
pub struct Logistic {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    smoothness: f64,
    optimum: ParamVector,
    f_inf: f64,
}

pub fn make_logistic(d: usize, n_samples: usize, seed: u64) -> Result<Logistic> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    if n_samples == 0 {
        return Err(Error::config("logistic problem needs at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut teacher: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = teacher.iter().map(|w| w * w).sum::<f64>().sqrt();
    teacher.iter_mut().for_each(|w| *w /= norm);

    let mut features = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    while features.len() < n_samples {
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let score = dot(&a, &teacher);
        if score.abs() < MARGIN {
            continue;
        }
        labels.push(score.signum());
        features.push(a);
    }

    let n = n_samples as f64;
    let gram = features.iter().fold(DMatrix::<f64>::zeros(d, d), |acc, a| {
        let v = DVector::from_column_slice(a);
        acc + &v * v.transpose()
    }) / n;
    let top = gram.symmetric_eigenvalues().max();
    let smoothness = 0.25 * top + LOGISTIC_RIDGE;

    let mut problem = Logistic {
        features,
        labels,
        smoothness,
        optimum: ParamVector::zeros(d),
        f_inf: 0.0,
    };
    let optimum = problem.newton_optimum(1e-12, 100);
    problem.f_inf = problem.loss(&optimum);
    problem.optimum = optimum;
    Ok(problem)
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Logistic {
    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    /// Regularised minimiser found by damped Newton iteration at construction.
    pub fn optimum(&self) -> &ParamVector {
        &self.optimum
    }

    fn sample_loss(&self, x: &[f64], k: usize) -> f64 {
        softplus(-self.labels[k] * dot(&self.features[k], x))
            + 0.5 * LOGISTIC_RIDGE * dot(x, x)
    }

    fn add_sample_grad(&self, x: &[f64], k: usize, scale: f64, out: &mut [f64]) {
        let y = self.labels[k];
        let a = &self.features[k];
        let w = -y * sigmoid(-y * dot(a, x)) * scale;
        super::axpy_in_place(out, w, a);
    }

    /// Damped Newton iteration from the origin, stopping when the full
    /// gradient norm falls below `tol`.
    pub fn newton_optimum(&self, tol: f64, max_iter: usize) -> ParamVector {
        let d = self.dim();
        let n = self.n_samples() as f64;
        let mut x = vec![0.0; d];
        for _ in 0..max_iter {
            let g = self.exact_grad(&x);
            if g.norm() <= tol {
                break;
            }
            let mut h = DMatrix::<f64>::identity(d, d) * LOGISTIC_RIDGE;
            for (a, _) in self.features.iter().zip(&self.labels) {
                let s = sigmoid(dot(a, &x));
                let v = DVector::from_column_slice(a);
                h += (&v * v.transpose()) * (s * (1.0 - s) / n);
            }
            let rhs = DVector::from_column_slice(&g);
            let Some(chol) = h.cholesky() else { break };
            let dir = chol.solve(&rhs);
            let f0 = self.loss(&x);
            let slope = -dot(&g, dir.as_slice());
            let mut step = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(x, d)| x - step * d).collect();
                if self.loss(&trial) <= f0 + 1e-4 * step * slope || step < 1e-10 {
                    x = trial;
                    break;
                }
                step *= 0.5;
            }
        }
        x.into()
    }
}

impl StochasticProblem for Logistic {
    fn id(&self) -> String {
        format!("logistic(d={},n={})", self.dim(), self.n_samples())
    }

    fn dim(&self) -> usize {
        self.optimum.dim()
    }

    fn loss(&self, x: &[f64]) -> f64 {
        let data: f64 = self
            .features
            .iter()
            .zip(&self.labels)
            .map(|(a, y)| softplus(-y * dot(a, x)))
            .sum::<f64>()
            / self.n_samples() as f64;
        data + 0.5 * LOGISTIC_RIDGE * dot(x, x)
    }

    fn exact_grad(&self, x: &[f64]) -> ParamVector {
        let mut g: Vec<f64> = x.iter().map(|x| LOGISTIC_RIDGE * x).collect();
        let scale = 1.0 / self.n_samples() as f64;
        for k in 0..self.n_samples() {
            self.add_sample_grad(x, k, scale, &mut g);
        }
        g.into()
    }

    fn sample_xi(&self, _t: u64, rng: &mut dyn RngCore) -> Xi {
        Xi::Index(rng.random_range(0..self.n_samples()))
    }

    fn eval(&self, x: &[f64], xi: &Xi) -> f64 {
        match xi {
            Xi::Index(k) => self.sample_loss(x, *k),
            _ => self.loss(x),
        }
    }

    fn stoch_grad(&self, x: &[f64], xi: &Xi) -> ParamVector {
        match xi {
            Xi::Index(k) => {
                let mut g: Vec<f64> = x.iter().map(|x| LOGISTIC_RIDGE * x).collect();
                self.add_sample_grad(x, *k, 1.0, &mut g);
                g.into()
            }
            _ => self.exact_grad(x),
        }
    }

    /// Features lie in `[-1, 1]^d` and the sigmoid factor is below one, so
    /// each stochastic-gradient coordinate is at most `1 + ridge * B` on the
    /// box `|x_i| <= B`.
    fn constants(&self) -> KnownConstants {
        KnownConstants {
            l: Some(self.smoothness),
            g_inf: Some(1.0 + LOGISTIC_RIDGE * BOX_HALF_WIDTH),
            f_inf: Some(self.f_inf),
        }
    }

    fn certified_box(&self) -> IterateBox {
        IterateBox::uniform(self.dim(), BOX_HALF_WIDTH)
    }
}
