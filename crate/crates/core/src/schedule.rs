//! Noise schedules and sampler configuration.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Noise level as a function of the iteration index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSchedule {
    Constant {
        sigma: f64,
    },
    /// Half-cosine decay from `sigma_max` to `sigma_min` over `anneal_steps`,
    /// then `tail_steps` iterations held at `sigma_min`.
    CosineAnneal {
        sigma_max: f64,
        sigma_min: f64,
        anneal_steps: usize,
        tail_steps: usize,
    },
}

impl NoiseSchedule {
    pub fn constant(sigma: f64) -> Self {
        Self::Constant { sigma }
    }

    pub fn cosine(sigma_max: f64, sigma_min: f64, anneal_steps: usize, tail_steps: usize) -> Self {
        Self::CosineAnneal {
            sigma_max,
            sigma_min,
            anneal_steps,
            tail_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant { sigma } => ensure_positive("sigma", sigma),
            Self::CosineAnneal {
                sigma_max,
                sigma_min,
                ..
            } => {
                ensure_positive("sigma_max", sigma_max)?;
                ensure_positive("sigma_min", sigma_min)?;
                if sigma_min > sigma_max {
                    return Err(Error::InvalidArgument(format!(
                        "sigma_min {sigma_min} exceeds sigma_max {sigma_max}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Natural run length of the schedule, if it has one.
    pub fn natural_len(&self) -> Option<usize> {
        match *self {
            Self::Constant { .. } => None,
            Self::CosineAnneal {
                anneal_steps,
                tail_steps,
                ..
            } => Some(anneal_steps + tail_steps),
        }
    }

    pub fn sigma_at(&self, t: usize) -> f64 {
        schedule_sigma(self, t)
    }
}

/// Noise level at iteration `t`.
pub fn schedule_sigma(schedule: &NoiseSchedule, t: usize) -> f64 {
    match *schedule {
        NoiseSchedule::Constant { sigma } => sigma,
        NoiseSchedule::CosineAnneal {
            sigma_max,
            sigma_min,
            anneal_steps,
            ..
        } => {
            if t >= anneal_steps {
                sigma_min
            } else {
                let phase = PI * t as f64 / anneal_steps as f64;
                sigma_min + (sigma_max - sigma_min) * 0.5 * (1.0 + phase.cos())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub schedule: NoiseSchedule,
    /// Guidance strength; doubles as the Adam learning rate.
    pub beta: f64,
    /// Optional weighting rate with `beta = eta * sigma^2 / 2`.
    pub eta: Option<f64>,
    pub steps: usize,
    pub adam: AdamParams,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(schedule: NoiseSchedule, beta: f64, steps: usize, seed: u64) -> Self {
        Self {
            schedule,
            beta,
            eta: None,
            steps,
            adam: AdamParams::default(),
            seed,
        }
    }

    /// Constant-noise config whose `beta` is derived from `eta`.
    pub fn from_eta(sigma: f64, eta: f64, steps: usize, seed: u64) -> Self {
        Self {
            schedule: NoiseSchedule::constant(sigma),
            beta: eta * sigma * sigma / 2.0,
            eta: Some(eta),
            steps,
            adam: AdamParams::default(),
            seed,
        }
    }

    /// Sparse-scan defaults: constant sigma 0.05, beta 0.03, 2000 steps.
    pub fn sparse_default(seed: u64) -> Self {
        Self::new(NoiseSchedule::constant(0.05), 0.03, 2000, seed)
    }

    /// Incomplete-scan defaults: cosine 0.2 -> 0.02 over 4000 steps plus 1000 at 0.02.
    pub fn incomplete_default(seed: u64) -> Self {
        Self::new(NoiseSchedule::cosine(0.2, 0.02, 4000, 1000), 0.03, 5000, seed)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be >= 0, got {}", self.beta)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be positive".into()));
        }
        if let Some(eta) = self.eta {
            ensure_positive("eta", eta)?;
            if let NoiseSchedule::Constant { sigma } = self.schedule {
                let implied = eta * sigma * sigma / 2.0;
                if (implied - self.beta).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "beta {} inconsistent with eta {eta} at sigma {sigma} (expected {implied})",
                        self.beta
                    )));
                }
            }
        }
        Ok(())
    }
}
