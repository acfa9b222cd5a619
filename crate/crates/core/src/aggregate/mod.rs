//! Scalarization of per-property scores and advantages.
//!
//! Three aggregators are provided: the arithmetic mean (linear
//! scalarization), the geometric mean, and the log-sum-exp soft minimum
//! `-(1/k) ln Σ exp(-k x_i)`. With `k = 1` the soft minimum is exactly the
//! decoupled-advantage aggregation used by GDPO.

mod pareto;

use serde::{Deserialize, Serialize};

pub use pareto::{contour_data, pareto_argmax, FrontShape, GridSpec, Location, ParetoFront, ParetoOptimum};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationKind {
    ArithmeticMean,
    GeometricMean,
    LseSoftmin,
}

impl std::fmt::Display for AggregationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AggregationKind::ArithmeticMean => "arithmetic_mean",
            AggregationKind::GeometricMean => "geometric_mean",
            AggregationKind::LseSoftmin => "lse_softmin",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregator {
    pub kind: AggregationKind,
    /// Soft-min temperature `k`; ignored by the means.
    pub temperature: f64,
}

impl Aggregator {
    pub fn new(kind: AggregationKind, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(Aggregator { kind, temperature })
    }

    pub fn arithmetic() -> Self {
        Aggregator { kind: AggregationKind::ArithmeticMean, temperature: 1.0 }
    }

    pub fn geometric() -> Self {
        Aggregator { kind: AggregationKind::GeometricMean, temperature: 1.0 }
    }

    pub fn softmin(k: f64) -> Result<Self> {
        Self::new(AggregationKind::LseSoftmin, k)
    }

    /// The unit-temperature soft minimum `-ln Σ exp(-x_i)` applied to
    /// decoupled advantages.
    pub fn gdpo_softmin() -> Self {
        Aggregator { kind: AggregationKind::LseSoftmin, temperature: 1.0 }
    }

    pub fn apply(&self, values: &[f64]) -> Result<f64> {
        match self.kind {
            AggregationKind::ArithmeticMean => arithmetic_mean(values),
            AggregationKind::GeometricMean => geometric_mean(values),
            AggregationKind::LseSoftmin => lse_softmin(values, self.temperature),
        }
    }
}

pub fn arithmetic_mean(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Empty("arithmetic_mean input"));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// `(Π scores)^(1/N)`, computed in log space. Any zero entry gives 0.
/// The result is clamped to `[min, AM]` so rounding in `exp(ln x)` can never
/// push it past either mean inequality.
pub fn geometric_mean(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Empty("geometric_mean input"));
    }
    let mut log_sum = 0.0;
    let mut zero = false;
    for &s in scores {
        if s < 0.0 || s.is_nan() {
            return Err(Error::NegativeInput(s));
        }
        if s == 0.0 {
            zero = true;
        } else {
            log_sum += s.ln();
        }
    }
    if zero {
        return Ok(0.0);
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let am = arithmetic_mean(scores)?;
    Ok((log_sum / scores.len() as f64).exp().clamp(min, am.max(min)))
}

/// `-(1/k) ln Σ exp(-k x_i)`, shifted by the minimum so it never overflows.
pub fn lse_softmin(values: &[f64], k: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("lse_softmin input"));
    }
    if !(k > 0.0) {
        return Err(Error::NonPositive(k));
    }
    let m = values.iter().copied().fold(f64::INFINITY, f64::min);
    let s: f64 = values.iter().map(|&x| (-k * (x - m)).exp()).sum();
    Ok(m - s.ln() / k)
}

/// `∂GM/∂r_j = GM / (N r_j)`.
pub fn gm_gradient(scores: &[f64]) -> Result<Vec<f64>> {
    if let Some(&bad) = scores.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::NonPositive(bad));
    }
    let gm = geometric_mean(scores)?;
    let n = scores.len() as f64;
    Ok(scores.iter().map(|&r| gm / (n * r)).collect())
}

/// `∂LSE/∂x_j = softmax(-k x)_j`.
pub fn lse_gradient(values: &[f64], k: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Empty("lse_gradient input"));
    }
    if !(k > 0.0) {
        return Err(Error::NonPositive(k));
    }
    let m = values.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = values.iter().map(|&x| (-k * (x - m)).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}
