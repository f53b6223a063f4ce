use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step-size rule `eta_t`, indexed from `t = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant { base: f64 },
    /// `base / sqrt(t)`.
    SqrtDecay { base: f64 },
    /// `2 / (mu (t + 1))` for objectives `mu`-strongly convex in the outer variable.
    StronglyConvex { mu: f64 },
    Explicit { sequence: Vec<f64> },
}

impl StepSchedule {
    pub fn constant(base: f64) -> Result<Self> {
        positive("base", base)?;
        Ok(StepSchedule::Constant { base })
    }

    pub fn sqrt_decay(base: f64) -> Result<Self> {
        positive("base", base)?;
        Ok(StepSchedule::SqrtDecay { base })
    }

    pub fn strongly_convex(mu: f64) -> Result<Self> {
        positive("mu", mu)?;
        Ok(StepSchedule::StronglyConvex { mu })
    }

    pub fn explicit(sequence: Vec<f64>) -> Result<Self> {
        if sequence.is_empty() {
            return Err(Error::InvalidArgument("explicit schedule is empty".into()));
        }
        for v in &sequence {
            positive("explicit step", *v)?;
        }
        Ok(StepSchedule::Explicit { sequence })
    }

    /// Checks the schedule can supply `iterations` positive steps.
    pub fn validate(&self, iterations: usize) -> Result<()> {
        match self {
            StepSchedule::Constant { base } | StepSchedule::SqrtDecay { base } => positive("base", *base),
            StepSchedule::StronglyConvex { mu } => positive("mu", *mu),
            StepSchedule::Explicit { sequence } => {
                for v in sequence {
                    positive("explicit step", *v)?;
                }
                if sequence.len() < iterations {
                    return Err(Error::InvalidArgument(format!(
                        "explicit schedule has {} steps, {} needed",
                        sequence.len(),
                        iterations
                    )));
                }
                Ok(())
            }
        }
    }

    /// `eta_t` for `t >= 1`.
    pub fn step(&self, t: usize) -> f64 {
        debug_assert!(t >= 1);
        let t = t.max(1);
        match self {
            StepSchedule::Constant { base } => *base,
            StepSchedule::SqrtDecay { base } => base / (t as f64).sqrt(),
            StepSchedule::StronglyConvex { mu } => 2.0 / (mu * (t as f64 + 1.0)),
            StepSchedule::Explicit { sequence } => sequence[(t - 1).min(sequence.len() - 1)],
        }
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} must be positive and finite, got {v}")))
    }
}
