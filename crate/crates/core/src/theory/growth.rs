use serde::{Deserialize, Serialize};

use crate::{Error, ParamVector, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    /// Smallest `s` in `[0, 1/2]` with `||g_{1:T,i}||_2 <= G T^s` for every
    /// coordinate, clamped to that interval.
    pub s_bound: f64,
    /// Least-squares slope of `log max_i ||g_{1:t,i}||_2` against `log t`
    /// over the second half of the run.
    pub fitted_s: f64,
    /// The history contained no nonzero gradient.
    pub all_zero: bool,
    pub steps: u64,
}

/// Streaming accumulator of per-coordinate cumulative gradient norms.
#[derive(Debug, Clone)]
pub struct GrowthTracker {
    g_inf: f64,
    sum_sq: Vec<f64>,
    max_norm: Vec<f64>,
}

impl GrowthTracker {
    pub fn new(d: usize, g_inf: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if !(g_inf > 0.0 && g_inf.is_finite()) {
            return Err(Error::config(format!("G_inf = {g_inf} must be > 0")));
        }
        Ok(GrowthTracker {
            g_inf,
            sum_sq: vec![0.0; d],
            max_norm: Vec::new(),
        })
    }

    pub fn push(&mut self, g: &[f64]) -> Result<()> {
        if g.len() != self.sum_sq.len() {
            return Err(Error::Shape {
                expected: self.sum_sq.len(),
                got: g.len(),
            });
        }
        let mut top = 0.0f64;
        for (acc, gi) in self.sum_sq.iter_mut().zip(g) {
            *acc += gi * gi;
            top = top.max(*acc);
        }
        self.max_norm.push(top.sqrt());
        Ok(())
    }

    pub fn finish(&self) -> Result<GrowthEstimate> {
        let steps = self.max_norm.len() as u64;
        if steps < 2 {
            return Err(Error::config(format!("growth estimate needs T >= 2, got {steps}")));
        }
        let top = *self.max_norm.last().unwrap_or(&0.0);
        if top == 0.0 {
            return Ok(GrowthEstimate {
                s_bound: 0.0,
                fitted_s: 0.0,
                all_zero: true,
                steps,
            });
        }
        let log_t = (steps as f64).ln();
        let s_bound = (top / self.g_inf).ln() / log_t;
        Ok(GrowthEstimate {
            s_bound: s_bound.clamp(0.0, 0.5),
            fitted_s: self.fitted_slope(),
            all_zero: false,
            steps,
        })
    }

    fn fitted_slope(&self) -> f64 {
        let n = self.max_norm.len();
        let points: Vec<(f64, f64)> = (n / 2..n)
            .filter(|&k| self.max_norm[k] > 0.0)
            .map(|k| (((k + 1) as f64).ln(), self.max_norm[k].ln()))
            .collect();
        least_squares_slope(&points).unwrap_or(0.0)
    }
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn estimate_growth_s(grad_history: &[ParamVector], g_inf: f64) -> Result<GrowthEstimate> {
    let d = grad_history.first().map_or(0, |g| g.dim());
    let mut tracker = GrowthTracker::new(d.max(1), g_inf)?;
    for g in grad_history {
        tracker.push(g)?;
    }
    tracker.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_worst_case_is_one_half() {
        let g = 2.5;
        let hist: Vec<ParamVector> = (0..400).map(|_| vec![g, -g, g].into()).collect();
        let est = estimate_growth_s(&hist, g).unwrap();
        assert!((est.s_bound - 0.5).abs() < 1e-12);
        assert!((est.fitted_s - 0.5).abs() < 1e-9);
    }

    #[test]
    fn single_spike_flattens() {
        let mut hist: Vec<ParamVector> = (0..10_000).map(|_| vec![0.0, 0.0].into()).collect();
        hist[0] = vec![1.0, 0.0].into();
        let est = estimate_growth_s(&hist, 1.0).unwrap();
        assert_eq!(est.s_bound, 0.0);
        assert!(est.fitted_s.abs() < 1e-12);
    }

    #[test]
    fn all_zero_is_flagged() {
        let hist: Vec<ParamVector> = (0..10).map(|_| ParamVector::zeros(3)).collect();
        let est = estimate_growth_s(&hist, 1.0).unwrap();
        assert!(est.all_zero);
        assert_eq!(est.s_bound, 0.0);
    }

    #[test]
    fn rejects_short_or_bad_input() {
        assert!(estimate_growth_s(&[vec![1.0].into()], 1.0).is_err());
        assert!(estimate_growth_s(&[vec![1.0].into(), vec![1.0].into()], 0.0).is_err());
    }
}
