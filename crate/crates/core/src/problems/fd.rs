use super::StochasticProblem;
use crate::{Error, ParamVector, Result};

/// Central-difference approximation of the exact gradient,
/// `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff_grad(problem: &dyn StochasticProblem, x: &[f64], h: f64) -> Result<ParamVector> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::config(format!("finite-difference step {h} must be > 0")));
    }
    if x.len() != problem.dim() {
        return Err(Error::Shape {
            expected: problem.dim(),
            got: x.len(),
        });
    }
    let mut probe = x.to_vec();
    let mut grad = ParamVector::zeros(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = problem.loss(&probe);
        probe[i] = orig - h;
        let down = problem.loss(&probe);
        probe[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    grad.ensure_finite("finite-difference gradient")?;
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_logistic, make_mlp, make_quadratic, make_rosenbrock, NoiseSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn rejects_bad_step() {
        let q = make_quadratic(3, 2.0, NoiseSpec::none()).unwrap();
        assert!(finite_diff_grad(&q, &[0.0; 3], 0.0).is_err());
        assert!(finite_diff_grad(&q, &[0.0; 3], f64::NAN).is_err());
        assert!(finite_diff_grad(&q, &[0.0; 2], 1e-5).is_err());
    }

    #[test]
    fn rosenbrock_at_random_points() {
        let r = make_rosenbrock(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            let fd = finite_diff_grad(&r, &x, 1e-5).unwrap();
            assert!(max_rel_err(&r.exact_grad(&x), &fd) < 1e-5);
        }
    }

    #[test]
    fn logistic_and_mlp() {
        let l = make_logistic(5, 50, 1).unwrap();
        let x = vec![0.3, -0.2, 0.5, 0.1, -0.7];
        let fd = finite_diff_grad(&l, &x, 1e-5).unwrap();
        assert!(max_rel_err(&l.exact_grad(&x), &fd) < 1e-7);

        let m = make_mlp(0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w: Vec<f64> = (0..m.dim()).map(|_| rng.random_range(-0.5..0.5)).collect();
        let fd = finite_diff_grad(&m, &w, 1e-5).unwrap();
        assert!(max_rel_err(&m.exact_grad(&w), &fd) < 1e-6);
    }

    #[test]
    fn error_shrinks_with_step_until_roundoff() {
        let r = make_rosenbrock(3).unwrap();
        let x = [0.5, -0.3, 1.2];
        let exact = r.exact_grad(&x);
        let errs: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|h| max_rel_err(&exact, &finite_diff_grad(&r, &x, *h).unwrap()))
            .collect();
        // Central differences are second order.
        assert!(errs[1] < errs[0] / 50.0);
        assert!(errs[2] < errs[1] / 50.0);
    }
}
