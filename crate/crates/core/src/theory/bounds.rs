use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateSource {
    Known,
    Estimated,
}

/// Problem-side quantities entering the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionEstimates {
    /// Uniform bound on stochastic-gradient coordinates.
    pub g_inf: f64,
    /// Smoothness constant.
    pub l: f64,
    /// `f(x_1) - inf f`.
    pub delta_f: f64,
    /// `E || (v_hat_1 + eps)^(-p) ||_1`.
    pub vhat1_inv_p_l1: f64,
    pub source: EstimateSource,
}

impl AssumptionEstimates {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !positive(self.g_inf) || !positive(self.l) {
            return Err(Error::config(format!(
                "G_inf = {} and L = {} must be finite and > 0",
                self.g_inf, self.l
            )));
        }
        if !nonneg(self.delta_f) || !nonneg(self.vhat1_inv_p_l1) {
            return Err(Error::config(format!(
                "delta_f = {} and E||vhat_1^-p||_1 = {} must be finite and >= 0",
                self.delta_f, self.vhat1_inv_p_l1
            )));
        }
        Ok(())
    }
}

/// Algorithm-side quantities entering the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub p: f64,
    pub q: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub alpha: f64,
    pub t: u64,
    pub d: usize,
    pub s: f64,
}

/// Smallest admissible `q`, `max(0, 4p - 1)`.
pub fn default_q(p: f64) -> f64 {
    (4.0 * p - 1.0).max(0.0)
}

impl BoundInputs {
    pub fn gamma(&self) -> f64 {
        self.beta1 / self.beta2.powf(2.0 * self.p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.p) {
            return Err(Error::config(format!("p = {} outside [0, 1/2]", self.p)));
        }
        let q_min = default_q(self.p);
        if !(self.q >= q_min - 1e-12 && self.q <= 1.0) {
            return Err(Error::config(format!("q = {} outside [{q_min}, 1]", self.q)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(Error::config(format!(
                "beta1 = {} must lie in [0, 1) and beta2 = {} in (0, 1)",
                self.beta1, self.beta2
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config(format!("alpha = {} must be > 0", self.alpha)));
        }
        if self.t < 2 || self.d == 0 {
            return Err(Error::config(format!("need T >= 2 and d >= 1, got T = {}, d = {}", self.t, self.d)));
        }
        if !(0.0..=0.5).contains(&self.s) {
            return Err(Error::config(format!("s = {} outside [0, 1/2]", self.s)));
        }
        let gamma = self.gamma();
        if gamma >= 1.0 {
            return Err(Error::Hypothesis(format!(
                "gamma = beta1 / beta2^(2p) = {gamma} must be < 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MConstants {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

pub fn m_constants(est: &AssumptionEstimates, inputs: &BoundInputs) -> Result<MConstants> {
    est.validate()?;
    inputs.validate()?;
    let BoundInputs { p, q, beta1, beta2, d, .. } = *inputs;
    let g = est.g_inf;
    let m1 = 2.0 * g.powf(2.0 * p) * est.delta_f;
    let m2 = 4.0 * g.powf(2.0 + 2.0 * p) * est.vhat1_inv_p_l1 / (d as f64 * (1.0 - beta1)) + 4.0 * g * g;
    let lg = est.l * g.powf(1.0 + q - 2.0 * p);
    let damp = (1.0 - beta2).powf(2.0 * p);
    let momentum = (beta1 / (1.0 - beta1)).powi(2);
    let m3 = 4.0 * lg / damp + 8.0 * lg * (1.0 - beta1) / (damp * (1.0 - inputs.gamma())) * momentum;
    Ok(MConstants { m1, m2, m3 })
}

/// `M1 / (T alpha) + M2 d / T + M3 alpha d G^(1-q) / T^((1-q)(1/2-s))`.
pub fn bound_rhs(est: &AssumptionEstimates, inputs: &BoundInputs, m: &MConstants) -> Result<f64> {
    est.validate()?;
    inputs.validate()?;
    let t = inputs.t as f64;
    let d = inputs.d as f64;
    let q = inputs.q;
    Ok(m.m1 / (t * inputs.alpha)
        + m.m2 * d / t
        + m.m3 * inputs.alpha * d * est.g_inf.powf(1.0 - q) / t.powf((1.0 - q) * (0.5 - inputs.s)))
}

/// `M3'`, the `q = 0` specialisation of `M3`.
pub fn m3_prime(est: &AssumptionEstimates, inputs: &BoundInputs) -> Result<f64> {
    let BoundInputs { p, beta1, beta2, .. } = *inputs;
    if p > 0.25 {
        return Err(Error::config(format!("corollary bound needs p <= 1/4, got {p}")));
    }
    BoundInputs { q: 0.0, ..*inputs }.validate()?;
    est.validate()?;
    let gamma = beta1 / beta2.powf(2.0 * p);
    let base = est.l * est.g_inf.powf(1.0 - 2.0 * p) / (1.0 - beta2).powf(2.0 * p);
    Ok(4.0 * base + 8.0 * base * (1.0 - beta1) / (1.0 - gamma) * (beta1 / (1.0 - beta1)).powi(2))
}

/// Bound for `p <= 1/4` with `q = 0`:
/// `M1 / (T alpha) + M2 d / T + M3' alpha d G / T^(1/2 - s)`.
/// `inputs.q` is ignored.
pub fn corollary_bound(est: &AssumptionEstimates, inputs: &BoundInputs) -> Result<f64> {
    let m3p = m3_prime(est, inputs)?;
    let BoundInputs { p, beta1, alpha, .. } = *inputs;
    let t = inputs.t as f64;
    let d = inputs.d as f64;
    let g = est.g_inf;
    let m1 = 2.0 * g.powf(2.0 * p) * est.delta_f;
    let m2 = 4.0 * g.powf(2.0 + 2.0 * p) * est.vhat1_inv_p_l1 / (d * (1.0 - beta1)) + 4.0 * g * g;
    Ok(m1 / (t * alpha) + m2 * d / t + m3p * alpha * d * g / t.powf(0.5 - inputs.s))
}

/// `c / (d^(1/2) T^(1/4 + s/2))`.
pub fn optimal_alpha_scaled(d: usize, t: u64, s: f64, c: f64) -> Result<f64> {
    if d == 0 || t == 0 {
        return Err(Error::config(format!("need d, T >= 1, got d = {d}, T = {t}")));
    }
    if !(0.0..=0.5).contains(&s) {
        return Err(Error::config(format!("s = {s} outside [0, 1/2]")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::config(format!("step-size constant {c} must be > 0")));
    }
    Ok(c / ((d as f64).sqrt() * (t as f64).powf(0.25 + 0.5 * s)))
}

/// Order-optimal constant step size with unit constant.
pub fn optimal_alpha(d: usize, t: u64, s: f64) -> Result<f64> {
    optimal_alpha_scaled(d, t, s, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est() -> AssumptionEstimates {
        AssumptionEstimates {
            g_inf: 3.0,
            l: 2.0,
            delta_f: 5.0,
            vhat1_inv_p_l1: 7.0,
            source: EstimateSource::Known,
        }
    }

    fn inputs() -> BoundInputs {
        BoundInputs {
            p: 0.125,
            q: 0.0,
            beta1: 0.9,
            beta2: 0.999,
            alpha: 0.01,
            t: 1000,
            d: 10,
            s: 0.25,
        }
    }

    #[test]
    fn zero_momentum_unit_g() {
        let e = AssumptionEstimates {
            g_inf: 1.0,
            ..est()
        };
        let i = BoundInputs {
            p: 0.0,
            beta1: 0.0,
            ..inputs()
        };
        let m = m_constants(&e, &i).unwrap();
        assert_eq!(m.m1, 2.0 * e.delta_f);
        assert_eq!(m.m3, 4.0 * e.l);
        let i = BoundInputs { beta1: 0.0, ..inputs() };
        let m = m_constants(&est(), &i).unwrap();
        let first = 4.0 * 2.0 * 3f64.powf(0.75) / 0.001f64.powf(0.25);
        assert!((m.m3 - first).abs() < 1e-12 * first);
    }

    #[test]
    fn hypothesis_and_q_range() {
        let i = BoundInputs {
            beta1: 0.999,
            beta2: 0.99,
            p: 0.5,
            q: 1.0,
            ..inputs()
        };
        assert!(matches!(m_constants(&est(), &i), Err(Error::Hypothesis(_))));
        let i = BoundInputs { p: 0.4, q: 0.5, ..inputs() };
        assert!(matches!(m_constants(&est(), &i), Err(Error::InvalidConfig(_))));
        assert!(m_constants(&est(), &BoundInputs { p: 0.4, q: 0.6, ..inputs() }).is_ok());
    }

    #[test]
    fn doubling_t_at_worst_case_growth() {
        let e = est();
        let i = BoundInputs { s: 0.5, ..inputs() };
        let m = m_constants(&e, &i).unwrap();
        let t = inputs().t as f64;
        let third = m.m3 * i.alpha * 10.0 * e.g_inf;
        let first_two = bound_rhs(&e, &i, &m).unwrap() - third;
        let i2 = BoundInputs { t: 2000, ..i };
        let first_two2 = bound_rhs(&e, &i2, &m).unwrap() - third;
        assert!((first_two2 - first_two / 2.0).abs() < 1e-12 * first_two);
        assert!(first_two > 0.0 && t > 0.0);
    }

    #[test]
    fn q_one_removes_t_decay() {
        let e = est();
        let i = BoundInputs { q: 1.0, s: 0.0, ..inputs() };
        let m = m_constants(&e, &i).unwrap();
        let rhs = bound_rhs(&e, &i, &m).unwrap();
        let expected = m.m1 / (1000.0 * 0.01) + m.m2 * 10.0 / 1000.0 + m.m3 * 0.01 * 10.0;
        assert!((rhs - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn corollary_matches_at_q_zero() {
        let e = est();
        for p in [0.0, 0.0625, 0.125, 0.25] {
            let i = BoundInputs { p, ..inputs() };
            let m = m_constants(&e, &i).unwrap();
            let a = bound_rhs(&e, &i, &m).unwrap();
            let b = corollary_bound(&e, &i).unwrap();
            assert!((a - b).abs() <= 1e-12 * a, "p={p}: {a} vs {b}");
        }
        assert!(corollary_bound(&e, &BoundInputs { p: 0.3, q: 0.2, ..inputs() }).is_err());
    }

    #[test]
    fn alpha_values() {
        assert_eq!(optimal_alpha(1, 1, 0.3).unwrap(), 1.0);
        assert!((optimal_alpha(100, 10_000, 0.5).unwrap() - 1e-3).abs() < 1e-18);
        let a = optimal_alpha(5, 1000, 0.5).unwrap();
        let b = optimal_alpha(5, 4000, 0.5).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(optimal_alpha(0, 10, 0.1).is_err());
        assert!(optimal_alpha(3, 10, 0.6).is_err());
    }

    #[test]
    fn defaults() {
        assert_eq!(default_q(0.125), 0.0);
        assert_eq!(default_q(0.5), 1.0);
        assert!((default_q(0.4) - 0.6).abs() < 1e-15);
    }
}
