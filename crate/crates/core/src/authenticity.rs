//! Authenticity loss as KL divergence from a reference distribution to the
//! model's distribution, plus a retrieval-response curve that maps a number of
//! retrieval calls to an expected loss.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ValidationError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuthError {
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("probability {index} is {value}, expected a finite value >= 0")]
    InvalidProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1 within 1e-9")]
    NotNormalized { sum: f64 },
    #[error("alphabet mismatch: q has {q_len} outcomes, p has {p_len}")]
    AlphabetMismatch { q_len: usize, p_len: usize },
    #[error("outcome {index} has reference mass {q} but model mass 0; divergence is infinite")]
    UnsupportedMass { index: usize, q: f64 },
    #[error("no contexts supplied")]
    NoContexts,
}

/// A probability vector over a finite outcome alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    probabilities: Vec<f64>,
}

impl DiscreteDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(probabilities: Vec<f64>) -> Result<Self, AuthError> {
        if probabilities.is_empty() {
            return Err(AuthError::EmptyDistribution);
        }
        if let Some((index, &value)) = probabilities.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(AuthError::InvalidProbability { index, value });
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(AuthError::NotNormalized { sum });
        }
        let probabilities = if sum == 1.0 { probabilities } else { probabilities.iter().map(|p| p / sum).collect() };
        Ok(Self { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

impl<'de> Deserialize<'de> for DiscreteDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let probabilities = Vec::<f64>::deserialize(deserializer)?;
        DiscreteDistribution::new(probabilities).map_err(serde::de::Error::custom)
    }
}

/// Componentwise tolerance under which two distributions count as equal.
pub const EQUALITY_TOLERANCE: f64 = 1e-12;

/// `D_KL(q || p)` in nats, with `0 * ln(0 / p) = 0`.
///
/// Summed as `q * (d - ln(1 + d))` with `d = (p - q) / q` (plus `p` where
/// `q = 0`). Each term is non-negative and the extra `p - q` parts cancel for
/// normalized inputs, so the result is never negative and stays positive for
/// nearly equal distributions. Distributions equal within
/// [`EQUALITY_TOLERANCE`] componentwise give exactly 0.
pub fn kl_divergence(q: &DiscreteDistribution, p: &DiscreteDistribution) -> Result<f64, AuthError> {
    if q.len() != p.len() {
        return Err(AuthError::AlphabetMismatch { q_len: q.len(), p_len: p.len() });
    }
    let pairs = || q.probabilities.iter().zip(&p.probabilities);
    if let Some((index, (&qi, _))) = pairs().enumerate().find(|(_, (&qi, &pi))| qi > 0.0 && pi == 0.0) {
        return Err(AuthError::UnsupportedMass { index, q: qi });
    }
    if pairs().all(|(qi, pi)| (qi - pi).abs() <= EQUALITY_TOLERANCE) {
        return Ok(0.0);
    }
    let total = pairs()
        .map(|(&qi, &pi)| {
            if qi == 0.0 {
                pi
            } else {
                let d = (pi - qi) / qi;
                qi * (d - d.ln_1p())
            }
        })
        .sum();
    Ok(total)
}

/// Worst-case divergence over a finite set of `(q, p)` contexts.
pub fn auth_loss<'a, I>(contexts: I) -> Result<f64, AuthError>
where
    I: IntoIterator<Item = (&'a DiscreteDistribution, &'a DiscreteDistribution)>,
{
    let mut worst: Option<f64> = None;
    for (q, p) in contexts {
        let kl = kl_divergence(q, p)?;
        worst = Some(worst.map_or(kl, |w| w.max(kl)));
    }
    worst.ok_or(AuthError::NoContexts)
}

/// Exponential-decay model of authenticity loss versus retrieval count:
/// `eps_free * gamma^R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuthCurve {
    /// Loss with zero retrievals, in nats.
    pub eps_free: f64,
    /// Multiplicative decay per retrieval, in (0, 1).
    pub gamma: f64,
}

impl AuthCurve {
    pub fn validate(&self) -> Result<(), ValidationError> {
        crate::model::non_negative("eps_free", self.eps_free)?;
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(ValidationError::new(
                "gamma",
                format!("must lie strictly between 0 and 1, got {}", self.gamma),
            ));
        }
        Ok(())
    }
}

pub fn auth_response_curve(retrievals: u64, curve: &AuthCurve) -> f64 {
    let decay = match i32::try_from(retrievals) {
        Ok(r) => curve.gamma.powi(r),
        Err(_) => curve.gamma.powf(retrievals as f64),
    };
    curve.eps_free * decay
}

/// Smallest `R` with `auth_response_curve(R) <= eps_h`.
pub fn min_retrievals_for(eps_h: f64, curve: &AuthCurve) -> u64 {
    if curve.eps_free <= eps_h {
        return 0;
    }
    let estimate = ((eps_h / curve.eps_free).ln() / curve.gamma.ln()).ceil();
    let mut r = if estimate.is_finite() && estimate > 0.0 { estimate as u64 } else { 0 };
    // The closed form can land one step off after rounding; settle on the curve itself.
    while auth_response_curve(r, curve) > eps_h {
        r += 1;
    }
    while r > 0 && auth_response_curve(r - 1, curve) <= eps_h {
        r -= 1;
    }
    r
}
