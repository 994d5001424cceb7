use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::harness::{RunSpec, Schedule, ScheduleKind};
use crate::optim::{OptimizerSpec, OPTIMIZER_NAMES};
use crate::problems::ProblemSpec;
use crate::{Error, Result};

pub const DEFAULT_STEPS: u64 = 1000;
pub const DEFAULT_P_LIST: [f64; 5] = [0.4, 0.25, 0.2, 0.125, 0.0625];

/// Named hyperparameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Image-classification settings: lr 0.1 for sgdm/padam (p = 1/8), 0.001
    /// for the other adaptive methods, beta2 = 0.99 for adam/amsgrad, AdamW
    /// weight decay 2.5e-2, x0.1 decay at 50% and 75% of the run.
    PaperVision,
    /// Two-layer recurrent language-model settings: sgdm lr 1, padam lr 0.01
    /// with p = 0.4, other adaptive methods lr 0.001, beta = (0.9, 0.999),
    /// AdamW weight decay 4e-4, x0.1 decay at 50% and 75% of the run.
    PaperLstmIsh,
}

impl Preset {
    /// Optimizer hyperparameters and base learning rate for `name`.
    pub fn optimizer(self, name: &str) -> Result<(OptimizerSpec, f64)> {
        let spec = OptimizerSpec::from_name(name)?;
        Ok(match self {
            Preset::PaperVision => {
                let lr = spec.default_lr();
                (spec, lr)
            }
            Preset::PaperLstmIsh => match spec {
                OptimizerSpec::Sgdm { .. } => (OptimizerSpec::Sgdm { momentum: 0.9 }, 1.0),
                OptimizerSpec::Padam { beta1, epsilon, .. } => (
                    OptimizerSpec::Padam {
                        beta1,
                        beta2: 0.999,
                        p: 0.4,
                        epsilon,
                    },
                    0.01,
                ),
                OptimizerSpec::Adam { beta1, epsilon, .. } => (
                    OptimizerSpec::Adam {
                        beta1,
                        beta2: 0.999,
                        epsilon,
                    },
                    1e-3,
                ),
                OptimizerSpec::Amsgrad { beta1, epsilon, .. } => (
                    OptimizerSpec::Amsgrad {
                        beta1,
                        beta2: 0.999,
                        epsilon,
                    },
                    1e-3,
                ),
                OptimizerSpec::Adamw { beta1, epsilon, .. } => (
                    OptimizerSpec::Adamw {
                        beta1,
                        beta2: 0.999,
                        epsilon,
                        weight_decay: 4e-4,
                    },
                    1e-3,
                ),
                OptimizerSpec::Adagrad { .. } => (spec, 1e-3),
            },
        })
    }

    pub fn schedule(self, base_lr: f64, steps: u64) -> Schedule {
        Schedule::two_stage_decay(base_lr, steps)
    }
}

/// Experiment description loadable from JSON. Every field is optional in the
/// file; [`ExperimentConfig::resolve`] fills the gaps and the resolved form is
/// echoed into the output metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub problem: Option<ProblemSpec>,
    pub optimizer: Option<OptimizerSpec>,
    pub schedule: Option<Schedule>,
    pub preset: Option<Preset>,
    pub steps: u64,
    pub seed: u64,
    pub seeds: u64,
    pub record_dense: bool,
    pub out_dir: PathBuf,
    pub p_list: Vec<f64>,
    pub optimizers: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: None,
            optimizer: None,
            schedule: None,
            preset: None,
            steps: DEFAULT_STEPS,
            seed: 0,
            seeds: 1,
            record_dense: false,
            out_dir: PathBuf::from("out"),
            p_list: DEFAULT_P_LIST.to_vec(),
            optimizers: OPTIMIZER_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Command-line overrides, applied on top of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub problem: Option<String>,
    pub optimizer: Option<String>,
    pub p: Option<f64>,
    pub lr: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
    pub momentum: Option<f64>,
    pub weight_decay: Option<f64>,
    pub schedule: Option<ScheduleKind>,
    pub milestones: Option<Vec<u64>>,
    pub decay_factor: Option<f64>,
    pub steps: Option<u64>,
    pub seed: Option<u64>,
    pub seeds: Option<u64>,
    pub record_dense: bool,
    pub out_dir: Option<PathBuf>,
    pub p_list: Option<Vec<f64>>,
    pub optimizers: Option<Vec<String>>,
}

impl Overrides {
    fn touches_schedule(&self) -> bool {
        self.lr.is_some() || self.schedule.is_some() || self.milestones.is_some() || self.decay_factor.is_some()
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

fn apply_hyperparameters(spec: &mut OptimizerSpec, o: &Overrides, strict: bool) -> Result<()> {
    let mut unused = Vec::new();
    let mut set = |slot: Option<&mut f64>, value: Option<f64>, flag: &'static str| match (slot, value) {
        (Some(slot), Some(v)) => *slot = v,
        (None, Some(_)) => unused.push(flag),
        _ => {}
    };
    match spec {
        OptimizerSpec::Padam {
            beta1,
            beta2,
            p,
            epsilon,
        } => {
            set(Some(beta1), o.beta1, "--beta1");
            set(Some(beta2), o.beta2, "--beta2");
            set(Some(p), o.p, "--p");
            set(Some(epsilon), o.epsilon, "--epsilon");
            set(None, o.momentum, "--momentum");
            set(None, o.weight_decay, "--weight-decay");
        }
        OptimizerSpec::Amsgrad { beta1, beta2, epsilon } | OptimizerSpec::Adam { beta1, beta2, epsilon } => {
            set(Some(beta1), o.beta1, "--beta1");
            set(Some(beta2), o.beta2, "--beta2");
            set(Some(epsilon), o.epsilon, "--epsilon");
            set(None, o.p, "--p");
            set(None, o.momentum, "--momentum");
            set(None, o.weight_decay, "--weight-decay");
        }
        OptimizerSpec::Adamw {
            beta1,
            beta2,
            epsilon,
            weight_decay,
        } => {
            set(Some(beta1), o.beta1, "--beta1");
            set(Some(beta2), o.beta2, "--beta2");
            set(Some(epsilon), o.epsilon, "--epsilon");
            set(Some(weight_decay), o.weight_decay, "--weight-decay");
            set(None, o.p, "--p");
            set(None, o.momentum, "--momentum");
        }
        OptimizerSpec::Sgdm { momentum } => {
            set(Some(momentum), o.momentum.or(o.beta1), "--momentum");
            set(None, o.p, "--p");
            set(None, o.beta2, "--beta2");
            set(None, o.epsilon, "--epsilon");
            set(None, o.weight_decay, "--weight-decay");
        }
        OptimizerSpec::Adagrad { epsilon } => {
            set(Some(epsilon), o.epsilon, "--epsilon");
            set(None, o.p, "--p");
            set(None, o.beta1, "--beta1");
            set(None, o.beta2, "--beta2");
            set(None, o.momentum, "--momentum");
            set(None, o.weight_decay, "--weight-decay");
        }
    }
    if strict && !unused.is_empty() {
        return Err(Error::config(format!(
            "{} not applicable to optimizer `{}`",
            unused.join(", "),
            spec.name()
        )));
    }
    spec.validate()
}

impl ExperimentConfig {
    /// Merge `overrides` into `self` and fill every optional field.
    pub fn resolve(mut self, o: &Overrides) -> Result<ExperimentConfig> {
        if let Some(preset) = o.preset {
            self.preset = Some(preset);
        }
        if let Some(name) = &o.problem {
            self.problem = Some(ProblemSpec::from_name(name)?);
        }
        if self.problem.is_none() {
            return Err(Error::config("missing required --problem (or `problem` in the config file)"));
        }
        if let Some(v) = o.steps {
            self.steps = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.seeds {
            self.seeds = v;
        }
        if self.seeds == 0 {
            return Err(Error::config("--seeds must be >= 1"));
        }
        self.record_dense |= o.record_dense;
        if let Some(v) = &o.out_dir {
            self.out_dir = v.clone();
        }
        if let Some(v) = &o.p_list {
            self.p_list = v.clone();
        }
        if let Some(v) = &o.optimizers {
            self.optimizers = v.clone();
        }

        let rebuild_optimizer = o.optimizer.is_some() || self.optimizer.is_none();
        let preset_lr = if rebuild_optimizer {
            let name = o.optimizer.as_deref().unwrap_or("padam");
            let (spec, lr) = match self.preset {
                Some(preset) => preset.optimizer(name)?,
                None => {
                    let spec = OptimizerSpec::from_name(name)?;
                    let lr = spec.default_lr();
                    (spec, lr)
                }
            };
            self.optimizer = Some(spec);
            Some(lr)
        } else {
            None
        };
        let optimizer = self.optimizer.as_mut().expect("optimizer resolved above");
        apply_hyperparameters(optimizer, o, true)?;

        if self.schedule.is_none() || o.touches_schedule() || rebuild_optimizer {
            let base = self.schedule.clone();
            let base_lr = o
                .lr
                .or(preset_lr)
                .or(base.as_ref().map(|s| s.base_lr))
                .unwrap_or_else(|| optimizer.default_lr());
            let kind = o.schedule.or(base.as_ref().map(|s| s.kind)).unwrap_or(if self.preset.is_some() {
                ScheduleKind::Multistage
            } else {
                ScheduleKind::Constant
            });
            let mut schedule = match (kind, self.preset) {
                (ScheduleKind::Multistage, Some(preset)) if base.is_none() => preset.schedule(base_lr, self.steps),
                _ => Schedule {
                    kind,
                    base_lr,
                    ..base.unwrap_or_else(|| Schedule::constant(base_lr))
                },
            };
            if let Some(m) = &o.milestones {
                schedule.milestones = m.clone();
            }
            if let Some(f) = o.decay_factor {
                schedule.decay_factor = f;
            }
            self.schedule = Some(schedule);
        }
        self.schedule.as_ref().expect("schedule resolved above").validate()?;
        self.run_spec()?.validate()?;
        Ok(self)
    }

    /// The run described by a resolved config.
    pub fn run_spec(&self) -> Result<RunSpec> {
        let missing = |what: &str| Error::config(format!("config is missing `{what}`"));
        Ok(RunSpec {
            record_dense: self.record_dense,
            ..RunSpec::new(
                self.problem.clone().ok_or_else(|| missing("problem"))?,
                self.optimizer.clone().ok_or_else(|| missing("optimizer"))?,
                self.schedule.clone().ok_or_else(|| missing("schedule"))?,
                self.steps,
                self.seed,
            )
        })
    }

    /// Optimizer and schedule for `name` under this config's preset, with
    /// applicable hyperparameter overrides.
    pub fn optimizer_variant(&self, name: &str, o: &Overrides) -> Result<(OptimizerSpec, Schedule)> {
        let (mut spec, lr) = match self.preset {
            Some(preset) => preset.optimizer(name)?,
            None => {
                let spec = OptimizerSpec::from_name(name)?;
                let lr = spec.default_lr();
                (spec, lr)
            }
        };
        apply_hyperparameters(&mut spec, o, false)?;
        let template = self.schedule.clone().unwrap_or_else(|| Schedule::constant(lr));
        let schedule = Schedule {
            base_lr: o.lr.unwrap_or(lr),
            ..template
        };
        schedule.validate()?;
        Ok((spec, schedule))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_problem() -> Overrides {
        Overrides {
            problem: Some("rosenbrock".into()),
            ..Overrides::default()
        }
    }

    #[test]
    fn missing_problem_is_config_error() {
        assert!(matches!(
            ExperimentConfig::default().resolve(&Overrides::default()),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn flags_override_defaults() {
        let o = Overrides {
            optimizer: Some("padam".into()),
            p: Some(0.125),
            lr: Some(0.1),
            beta1: Some(0.9),
            beta2: Some(0.999),
            steps: Some(20_000),
            seed: Some(7),
            ..with_problem()
        };
        let c = ExperimentConfig::default().resolve(&o).unwrap();
        assert_eq!(c.steps, 20_000);
        assert_eq!(c.seed, 7);
        assert_eq!(c.schedule.as_ref().unwrap(), &Schedule::constant(0.1));
        assert!(matches!(c.optimizer, Some(OptimizerSpec::Padam { p, .. }) if p == 0.125));
    }

    #[test]
    fn inapplicable_flag_rejected() {
        let o = Overrides {
            optimizer: Some("adam".into()),
            p: Some(0.1),
            ..with_problem()
        };
        assert!(ExperimentConfig::default().resolve(&o).is_err());
    }

    #[test]
    fn vision_preset_schedule() {
        let o = Overrides {
            preset: Some(Preset::PaperVision),
            optimizer: Some("adam".into()),
            steps: Some(200),
            ..with_problem()
        };
        let c = ExperimentConfig::default().resolve(&o).unwrap();
        let s = c.schedule.unwrap();
        assert_eq!(s.kind, ScheduleKind::Multistage);
        assert_eq!(s.base_lr, 1e-3);
        assert_eq!(s.milestones, vec![100, 150]);
        assert!(matches!(c.optimizer, Some(OptimizerSpec::Adam { beta2, .. }) if beta2 == 0.99));
    }

    #[test]
    fn lstm_preset_values() {
        let (s, lr) = Preset::PaperLstmIsh.optimizer("sgdm").unwrap();
        assert_eq!((s, lr), (OptimizerSpec::Sgdm { momentum: 0.9 }, 1.0));
        let (s, lr) = Preset::PaperLstmIsh.optimizer("padam").unwrap();
        assert_eq!(lr, 0.01);
        assert!(matches!(s, OptimizerSpec::Padam { p, beta2, .. } if p == 0.4 && beta2 == 0.999));
        let (s, _) = Preset::PaperLstmIsh.optimizer("adamw").unwrap();
        assert!(matches!(s, OptimizerSpec::Adamw { weight_decay, .. } if weight_decay == 4e-4));
    }

    #[test]
    fn unknown_keys_rejected_and_resolved_config_round_trips() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"stepz": 3}"#).is_err());
        let c = ExperimentConfig::default().resolve(&with_problem()).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.clone().resolve(&Overrides::default()).unwrap(), c);
    }
}
