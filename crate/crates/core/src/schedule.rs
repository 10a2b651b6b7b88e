//! Activation-probability schedules and the activation-bit sampler.
//!
//! A schedule maps the iteration index to the probability `p_k` that a node
//! is active at iteration `k`. The sampler draws one uniform per node per
//! iteration regardless of the outcome, so traces driven by different
//! schedules stay aligned under a shared activation stream.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("invalid schedule parameter: {0}")]
    InvalidParam(String),
    #[error("tuned sigma requires c * alpha * mu < 1, got {0}")]
    SigmaOutOfRange(f64),
}

/// Activation-probability policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActivationSchedule {
    /// `p_k = 1`: standard operation, no idling.
    AlwaysOn,
    /// `p_k = 1 - sigma^(k+1)`, non-decreasing to one.
    GeometricToOne { sigma: f64 },
    /// `p_k = p_max (1 - sigma^(k+1))`: geometric growth capped away from one.
    CappedGeometric { p_max: f64, sigma: f64 },
    /// `p_k = p` for all k.
    Constant { p: f64 },
    /// `p_k = max(p_floor, 1 - min(sigma, sigma_cap)^(k+1))`.
    Safeguarded {
        sigma: f64,
        p_floor: f64,
        sigma_cap: f64,
    },
}

impl ActivationSchedule {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        let check_prob = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(ScheduleError::InvalidParam(format!(
                    "{name} must be in (0,1], got {v}"
                )))
            }
        };
        let check_sigma = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(ScheduleError::InvalidParam(format!(
                    "{name} must be in (0,1), got {v}"
                )))
            }
        };
        match *self {
            ActivationSchedule::AlwaysOn => Ok(()),
            ActivationSchedule::GeometricToOne { sigma } => check_sigma("sigma", sigma),
            ActivationSchedule::CappedGeometric { p_max, sigma } => {
                check_prob("p_max", p_max)?;
                check_sigma("sigma", sigma)
            }
            ActivationSchedule::Constant { p } => check_prob("p", p),
            ActivationSchedule::Safeguarded {
                sigma,
                p_floor,
                sigma_cap,
            } => {
                check_sigma("sigma", sigma)?;
                check_prob("p_floor", p_floor)?;
                check_sigma("sigma_cap", sigma_cap)
            }
        }
    }

    /// `p_k` for iteration `k`.
    pub fn probability_at(&self, k: u64) -> f64 {
        match *self {
            ActivationSchedule::AlwaysOn => 1.0,
            ActivationSchedule::GeometricToOne { sigma } => 1.0 - sigma.powi(k as i32 + 1),
            ActivationSchedule::CappedGeometric { p_max, sigma } => {
                p_max * (1.0 - sigma.powi(k as i32 + 1))
            }
            ActivationSchedule::Constant { p } => p,
            ActivationSchedule::Safeguarded {
                sigma,
                p_floor,
                sigma_cap,
            } => p_floor.max(1.0 - sigma.min(sigma_cap).powi(k as i32 + 1)),
        }
    }

    /// Lower bound on `p_k` over all iterations.
    pub fn p_min(&self) -> f64 {
        match *self {
            ActivationSchedule::AlwaysOn => 1.0,
            ActivationSchedule::GeometricToOne { .. }
            | ActivationSchedule::CappedGeometric { .. } => self.probability_at(0),
            ActivationSchedule::Constant { p } => p,
            ActivationSchedule::Safeguarded { .. } => self.probability_at(0),
        }
    }

    /// True for policies whose `p_k` converges to one.
    pub fn converges_to_one(&self) -> bool {
        matches!(
            self,
            ActivationSchedule::AlwaysOn
                | ActivationSchedule::GeometricToOne { .. }
                | ActivationSchedule::Safeguarded { .. }
        )
    }
}

/// Recommended geometric decay `sigma = 1 - c * alpha * mu`.
pub fn tuned_sigma(alpha: f64, mu: f64, c: f64) -> Result<f64, ScheduleError> {
    let prod = c * alpha * mu;
    if prod >= 1.0 {
        return Err(ScheduleError::SigmaOutOfRange(prod));
    }
    Ok(1.0 - prod)
}

/// Draws `n` i.i.d. Bernoulli(`p_k`) activation bits.
///
/// Always consumes exactly `n` uniforms from the stream so that schedule
/// choice does not shift the stream position.
pub fn sample_activations(p_k: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
    debug_assert!(p_k > 0.0 && p_k <= 1.0);
    (0..n).map(|_| rng.random::<f64>() < p_k).collect()
}
