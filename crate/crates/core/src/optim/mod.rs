//! Optimizer state machines.
//!
//! Every rule is a pure transition `(state, x, g, lr) -> (state', outcome)`:
//! the caller receives the successor state and the new iterate, and the input
//! state is left untouched. This keeps trajectory-equality comparisons
//! between rules unambiguous.
//!
//! All rules divide by a guarded denominator `(v + eps)^p`. When `eps = 0`
//! and a coordinate's second-moment statistic is exactly zero, its first
//! moment is necessarily zero as well and the coordinate contributes no
//! update (the 0/0 case is taken as its analytic limit, 0).

mod rules;

use serde::{Deserialize, Serialize};

pub use rules::{
    adagrad_step, adam_step, adamw_step, amsgrad_step, padam_step, sgd_momentum_step,
};

use crate::{Error, ParamVector, Result};

pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Hyperparameters of the partially adaptive rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PadamConfig {
    pub beta1: f64,
    pub beta2: f64,
    /// Partial-adaptivity exponent applied to the max second moment.
    pub p: f64,
    pub epsilon: f64,
}

impl PadamConfig {
    pub fn new(beta1: f64, beta2: f64, p: f64, epsilon: f64) -> Result<Self> {
        let cfg = PadamConfig {
            beta1,
            beta2,
            p,
            epsilon,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `p = 1/8`, `beta1 = 0.9`, `beta2 = 0.999`: the image-classification regime.
    pub fn vision() -> Self {
        PadamConfig {
            beta1: 0.9,
            beta2: 0.999,
            p: 0.125,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_betas(self.beta1, self.beta2)?;
        validate_epsilon(self.epsilon)?;
        if !(0.0..=0.5).contains(&self.p) {
            return Err(Error::config(format!("p = {} outside [0, 1/2]", self.p)));
        }
        Ok(())
    }

    /// `beta1 / beta2^(2p)`.
    pub fn gamma(&self) -> f64 {
        self.beta1 / self.beta2.powf(2.0 * self.p)
    }

    /// Warning text when `beta1 < beta2^(2p)` fails. The rule itself still
    /// runs; only the convergence guarantee is lost.
    pub fn theory_warning(&self) -> Option<String> {
        if self.beta1 < self.beta2.powf(2.0 * self.p) {
            None
        } else {
            Some(format!(
                "beta1 = {} is not below beta2^(2p) = {}; convergence bound does not apply",
                self.beta1,
                self.beta2.powf(2.0 * self.p)
            ))
        }
    }
}

impl Default for PadamConfig {
    fn default() -> Self {
        Self::vision()
    }
}

pub(crate) fn validate_betas(beta1: f64, beta2: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta1) {
        return Err(Error::config(format!("beta1 = {beta1} outside [0, 1)")));
    }
    if !(beta2 > 0.0 && beta2 <= 1.0) {
        return Err(Error::config(format!("beta2 = {beta2} outside (0, 1]")));
    }
    Ok(())
}

pub(crate) fn validate_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::config(format!("epsilon = {epsilon} must be finite and >= 0")));
    }
    Ok(())
}

/// Moment estimates carried between steps.
///
/// `m` doubles as the heavy-ball buffer for SGD with momentum; `v` holds the
/// exponential second moment (or Adagrad's running mean of squared
/// gradients); `v_hat` is the running elementwise maximum of `v` and is only
/// advanced by max-tracking rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptState {
    pub m: ParamVector,
    pub v: ParamVector,
    pub v_hat: ParamVector,
    pub t: u64,
}

impl OptState {
    pub fn dim(&self) -> usize {
        self.m.dim()
    }
}

pub fn init_state(d: usize) -> Result<OptState> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(OptState {
        m: ParamVector::zeros(d),
        v: ParamVector::zeros(d),
        v_hat: ParamVector::zeros(d),
        t: 0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub new_x: ParamVector,
    pub effective_lr_min: f64,
    pub effective_lr_max: f64,
}

/// Extremes over coordinates of `lr / (v_hat_i + eps)^p`.
pub fn effective_lr_bounds(state: &OptState, lr: f64, p: f64, epsilon: f64) -> Result<(f64, f64)> {
    if state.t == 0 {
        return Err(Error::NotStarted);
    }
    Ok(lr_extremes(&state.v_hat, lr, p, epsilon))
}

pub(crate) fn lr_extremes(denominator_stat: &[f64], lr: f64, p: f64, epsilon: f64) -> (f64, f64) {
    denominator_stat
        .iter()
        .map(|&s| lr / (s + epsilon).powf(p))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            (lo.min(e), hi.max(e))
        })
}

/// Serializable optimizer selector used by the harness and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum OptimizerSpec {
    Padam {
        beta1: f64,
        beta2: f64,
        p: f64,
        epsilon: f64,
    },
    Amsgrad {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    Adamw {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
        weight_decay: f64,
    },
    Sgdm {
        momentum: f64,
    },
    Adagrad {
        epsilon: f64,
    },
}

pub const OPTIMIZER_NAMES: [&str; 6] = ["padam", "adam", "amsgrad", "sgdm", "adagrad", "adamw"];

impl OptimizerSpec {
    pub fn padam(cfg: PadamConfig) -> Self {
        OptimizerSpec::Padam {
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            p: cfg.p,
            epsilon: cfg.epsilon,
        }
    }

    /// Defaults for a named optimizer, following the image-classification
    /// hyperparameters (adaptive methods other than Padam use `beta2 = 0.99`
    /// for Adam/Amsgrad and `0.999` otherwise).
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "padam" => OptimizerSpec::padam(PadamConfig::vision()),
            "amsgrad" => OptimizerSpec::Amsgrad {
                beta1: 0.9,
                beta2: 0.99,
                epsilon: DEFAULT_EPSILON,
            },
            "adam" => OptimizerSpec::Adam {
                beta1: 0.9,
                beta2: 0.99,
                epsilon: DEFAULT_EPSILON,
            },
            "adamw" => OptimizerSpec::Adamw {
                beta1: 0.9,
                beta2: 0.999,
                epsilon: DEFAULT_EPSILON,
                weight_decay: 2.5e-2,
            },
            "sgdm" => OptimizerSpec::Sgdm { momentum: 0.9 },
            "adagrad" => OptimizerSpec::Adagrad {
                epsilon: DEFAULT_EPSILON,
            },
            other => {
                return Err(Error::config(format!(
                    "unknown optimizer `{other}`; valid names: {}",
                    OPTIMIZER_NAMES.join(", ")
                )))
            }
        })
    }

    /// Base learning rate used when none is given: 0.1 for SGD with momentum
    /// and Padam, 0.001 for the other adaptive methods.
    pub fn default_lr(&self) -> f64 {
        match self {
            OptimizerSpec::Padam { .. } | OptimizerSpec::Sgdm { .. } => 0.1,
            _ => 1e-3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerSpec::Padam { .. } => "padam",
            OptimizerSpec::Amsgrad { .. } => "amsgrad",
            OptimizerSpec::Adam { .. } => "adam",
            OptimizerSpec::Adamw { .. } => "adamw",
            OptimizerSpec::Sgdm { .. } => "sgdm",
            OptimizerSpec::Adagrad { .. } => "adagrad",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            OptimizerSpec::Padam {
                beta1,
                beta2,
                p,
                epsilon,
            } => PadamConfig::new(beta1, beta2, p, epsilon).map(|_| ()),
            OptimizerSpec::Amsgrad {
                beta1,
                beta2,
                epsilon,
            }
            | OptimizerSpec::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                validate_betas(beta1, beta2)?;
                validate_epsilon(epsilon)
            }
            OptimizerSpec::Adamw {
                beta1,
                beta2,
                epsilon,
                weight_decay,
            } => {
                validate_betas(beta1, beta2)?;
                validate_epsilon(epsilon)?;
                if !(weight_decay >= 0.0 && weight_decay.is_finite()) {
                    return Err(Error::config(format!("weight_decay = {weight_decay} must be >= 0")));
                }
                Ok(())
            }
            OptimizerSpec::Sgdm { momentum } => {
                if !(0.0..1.0).contains(&momentum) {
                    return Err(Error::config(format!("momentum = {momentum} outside [0, 1)")));
                }
                Ok(())
            }
            OptimizerSpec::Adagrad { epsilon } => validate_epsilon(epsilon),
        }
    }

    /// The equivalent partially adaptive configuration for max-tracking
    /// rules (Amsgrad is the `p = 1/2` member of the family).
    pub fn as_padam(&self) -> Option<PadamConfig> {
        match *self {
            OptimizerSpec::Padam {
                beta1,
                beta2,
                p,
                epsilon,
            } => Some(PadamConfig {
                beta1,
                beta2,
                p,
                epsilon,
            }),
            OptimizerSpec::Amsgrad {
                beta1,
                beta2,
                epsilon,
            } => Some(PadamConfig {
                beta1,
                beta2,
                p: 0.5,
                epsilon,
            }),
            _ => None,
        }
    }

    /// Whether the rule keeps `v_hat` as a running maximum.
    pub fn tracks_max(&self) -> bool {
        self.as_padam().is_some()
    }

    pub fn step(
        &self,
        state: &OptState,
        x: &ParamVector,
        g: &ParamVector,
        lr: f64,
    ) -> Result<(OptState, StepOutcome)> {
        match *self {
            OptimizerSpec::Padam {
                beta1,
                beta2,
                p,
                epsilon,
            } => padam_step(
                state,
                x,
                g,
                lr,
                &PadamConfig {
                    beta1,
                    beta2,
                    p,
                    epsilon,
                },
            ),
            OptimizerSpec::Amsgrad {
                beta1,
                beta2,
                epsilon,
            } => amsgrad_step(state, x, g, lr, beta1, beta2, epsilon),
            OptimizerSpec::Adam {
                beta1,
                beta2,
                epsilon,
            } => adam_step(state, x, g, lr, beta1, beta2, epsilon),
            OptimizerSpec::Adamw {
                beta1,
                beta2,
                epsilon,
                weight_decay,
            } => adamw_step(state, x, g, lr, beta1, beta2, epsilon, weight_decay),
            OptimizerSpec::Sgdm { momentum } => sgd_momentum_step(state, x, g, lr, momentum),
            OptimizerSpec::Adagrad { epsilon } => adagrad_step(state, x, g, lr, epsilon),
        }
    }

    /// The per-coordinate statistic the rule divides by: `v_hat` for
    /// max-tracking rules, `v` for Adam/AdamW/Adagrad, nothing for SGD.
    pub fn denominator_stat<'a>(&self, state: &'a OptState) -> Option<&'a [f64]> {
        match self {
            OptimizerSpec::Padam { .. } | OptimizerSpec::Amsgrad { .. } => Some(&state.v_hat),
            OptimizerSpec::Adam { .. }
            | OptimizerSpec::Adamw { .. }
            | OptimizerSpec::Adagrad { .. } => Some(&state.v),
            OptimizerSpec::Sgdm { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_state_is_zero() {
        let s = init_state(3).unwrap();
        assert_eq!(s.m.as_slice(), &[0.0; 3]);
        assert_eq!(s.v.as_slice(), &[0.0; 3]);
        assert_eq!(s.v_hat.as_slice(), &[0.0; 3]);
        assert_eq!(s.t, 0);
        let s = init_state(1).unwrap();
        assert_eq!(s.v_hat.as_slice(), &[0.0]);
    }

    #[test]
    fn init_state_large() {
        let s = init_state(1_000_000).unwrap();
        assert_eq!(s.dim(), 1_000_000);
        assert!(s.v_hat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_state_rejects_zero_dim() {
        assert!(matches!(init_state(0), Err(Error::InvalidDimension(0))));
    }

    #[test]
    fn p_range_enforced() {
        assert!(PadamConfig::new(0.9, 0.999, 0.0, 0.0).is_ok());
        assert!(PadamConfig::new(0.9, 0.999, 0.5, 0.0).is_ok());
        assert!(PadamConfig::new(0.9, 0.999, 0.51, 0.0).is_err());
        assert!(PadamConfig::new(0.9, 0.999, -0.01, 0.0).is_err());
        assert!(PadamConfig::new(1.0, 0.999, 0.1, 0.0).is_err());
        assert!(PadamConfig::new(0.9, 0.0, 0.1, 0.0).is_err());
        assert!(PadamConfig::new(0.9, 0.999, 0.1, -1.0).is_err());
    }

    #[test]
    fn vision_regime_accepted_and_satisfies_theory_precondition() {
        let cfg = PadamConfig::vision();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.p, 0.125);
        assert!(cfg.theory_warning().is_none());
        assert!(cfg.gamma() < 1.0);
    }

    #[test]
    fn theory_warning_is_not_a_construction_error() {
        // beta2^(2p) = 0.5 < beta1
        let cfg = PadamConfig::new(0.9, 0.25, 0.5, 1e-8).unwrap();
        assert!(cfg.theory_warning().is_some());
    }

    #[test]
    fn effective_lr_requires_started_state() {
        let s = init_state(2).unwrap();
        assert!(matches!(
            effective_lr_bounds(&s, 0.1, 0.125, 0.0),
            Err(Error::NotStarted)
        ));
    }

    #[test]
    fn effective_lr_p_zero_is_lr() {
        let mut s = init_state(3).unwrap();
        s.t = 1;
        s.v_hat = vec![0.04, 3e-8, 1.0].into();
        let (lo, hi) = effective_lr_bounds(&s, 0.1, 0.0, 0.0).unwrap();
        assert_eq!(lo, 0.1);
        assert_eq!(hi, 0.1);
    }

    #[test]
    fn effective_lr_ratio_matches_vhat_spread() {
        let mut s = init_state(2).unwrap();
        s.t = 5;
        s.v_hat = vec![0.04, 3e-8].into();
        let (lo, hi) = effective_lr_bounds(&s, 0.1, 0.125, 0.0).unwrap();
        let expected = (0.04f64 / 3e-8).powf(0.125);
        assert!((hi / lo - expected).abs() < 1e-12 * expected);
        // (1.333e6)^(1/8)
        assert!((expected - 5.829313).abs() < 1e-5);
    }

    #[test]
    fn effective_lr_equal_vhat() {
        let mut s = init_state(4).unwrap();
        s.t = 1;
        s.v_hat = vec![0.3; 4].into();
        let (lo, hi) = effective_lr_bounds(&s, 0.01, 0.25, 1e-8).unwrap();
        assert_eq!(lo, hi);
    }

    #[test]
    fn names_round_trip() {
        for name in OPTIMIZER_NAMES {
            let spec = OptimizerSpec::from_name(name).unwrap();
            assert_eq!(spec.name(), name);
            spec.validate().unwrap();
            let json = serde_json::to_string(&spec).unwrap();
            let back: OptimizerSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(back, spec);
        }
        assert!(OptimizerSpec::from_name("yogi").is_err());
    }

    #[test]
    fn default_learning_rates() {
        assert_eq!(OptimizerSpec::from_name("padam").unwrap().default_lr(), 0.1);
        assert_eq!(OptimizerSpec::from_name("sgdm").unwrap().default_lr(), 0.1);
        assert_eq!(OptimizerSpec::from_name("adam").unwrap().default_lr(), 1e-3);
        assert_eq!(OptimizerSpec::from_name("amsgrad").unwrap().default_lr(), 1e-3);
    }
}
