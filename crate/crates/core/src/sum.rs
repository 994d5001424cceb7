//! Compensated (Neumaier) summation.
//!
//! Batch aggregates are accumulated with this so that reordering the
//! per-seed contributions perturbs the result by far less than 1e-12.

#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<NeumaierSum>().total()
}

pub fn compensated_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Sample mean and (n-1)-normalised standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let mean = compensated_mean(values);
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, (ss / (values.len() - 1) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        let naive: f64 = [1.0, 1e100, 1.0, -1e100].iter().sum();
        assert_eq!(naive, 0.0);
        assert_eq!(compensated_sum([1.0, 1e100, 1.0, -1e100]), 2.0);
    }

    #[test]
    fn order_invariant_on_mixed_magnitudes() {
        let values: Vec<f64> = (0..1000)
            .map(|i| ((i * 7919) % 1000) as f64 * 1e-3 + if i % 3 == 0 { 1e8 } else { 0.0 })
            .collect();
        let forward = compensated_sum(values.iter().copied());
        let backward = compensated_sum(values.iter().rev().copied());
        assert!((forward - backward).abs() <= 1e-12 * forward.abs());
    }

    #[test]
    fn mean_std_simple() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
