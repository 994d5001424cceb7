use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    InvSqrt,
    Multistage,
}

/// Learning-rate schedule indexed by 1-based step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub base_lr: f64,
    /// Steps at which a multistage schedule multiplies the rate by
    /// `decay_factor`. Ignored by the other kinds.
    #[serde(default)]
    pub milestones: Vec<u64>,
    #[serde(default = "unit")]
    pub decay_factor: f64,
}

fn unit() -> f64 {
    1.0
}

impl Schedule {
    pub fn constant(base_lr: f64) -> Self {
        Schedule {
            kind: ScheduleKind::Constant,
            base_lr,
            milestones: Vec::new(),
            decay_factor: 1.0,
        }
    }

    pub fn inv_sqrt(base_lr: f64) -> Self {
        Schedule {
            kind: ScheduleKind::InvSqrt,
            ..Schedule::constant(base_lr)
        }
    }

    pub fn multistage(base_lr: f64, milestones: Vec<u64>, decay_factor: f64) -> Self {
        Schedule {
            kind: ScheduleKind::Multistage,
            base_lr,
            milestones,
            decay_factor,
        }
    }

    /// Multistage schedule with a x0.1 decay at 50% and 75% of `steps`.
    pub fn two_stage_decay(base_lr: f64, steps: u64) -> Self {
        Schedule::multistage(base_lr, vec![steps / 2, steps * 3 / 4], 0.1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::config(format!("base_lr = {} must be > 0", self.base_lr)));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(Error::config(format!(
                "decay_factor = {} outside (0, 1]",
                self.decay_factor
            )));
        }
        if self.milestones.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::config("milestones must be sorted"));
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        match self.kind {
            ScheduleKind::Constant => true,
            ScheduleKind::InvSqrt => false,
            ScheduleKind::Multistage => self.milestones.is_empty() || self.decay_factor == 1.0,
        }
    }

    pub fn lr(&self, t: u64) -> f64 {
        schedule_lr(self, t)
    }
}

/// `alpha_t` for 1-based `t` (`t = 0` is treated as `t = 1`).
pub fn schedule_lr(schedule: &Schedule, t: u64) -> f64 {
    let t = t.max(1);
    match schedule.kind {
        ScheduleKind::Constant => schedule.base_lr,
        ScheduleKind::InvSqrt => schedule.base_lr / (t as f64).sqrt(),
        ScheduleKind::Multistage => {
            let passed = schedule.milestones.iter().filter(|&&m| m <= t).count();
            schedule.base_lr * schedule.decay_factor.powi(passed as i32)
        }
    }
}
