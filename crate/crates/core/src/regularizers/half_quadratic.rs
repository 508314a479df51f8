//! Half-quadratic auxiliary functions `K(b, f, φ)` with `inf_b K = J`.
//!
//! For each separable penalty `λ Σ ρ(|fᵢ|²)` there is a per-pixel function
//! `κ(b, t)` convex in `b > 0` with `min_b κ(b, t) = ρ(t)` attained at
//! `b* = ρ'(t)`, so that
//!
//! ```text
//! K(b, f, φ) = ‖g − C(φ) f‖² + λ Σ κ(bᵢ, |fᵢ|²)
//! ```
//!
//! is quadratic in `f` for fixed `b` and its `f`-minimiser solves the same
//! normal equations as a frozen-weight WAMA step.

use alloc::vec::Vec;

use super::{separable_weight, Penalty, RegularizerSpec};
use crate::error::{Error, Result};
use crate::forward_model::ComplexImage;
use crate::math;

/// Strictly positive auxiliary vector `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryB {
    values: Vec<f64>,
}

impl AuxiliaryB {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().all(|&b| b.is_finite() && b > 0.0) {
            Ok(Self { values })
        } else {
            Err(Error::invalid("b", "every entry must be finite and strictly positive"))
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn unsupported(operation: &'static str, penalty: Penalty) -> Error {
    Error::Unsupported {
        operation,
        penalty: penalty.name(),
    }
}

/// Minimiser `b*(f)` of `K(·, f, φ)`; coincides with the WAMA weight diagonal.
pub fn auxiliary_b_star(spec: &RegularizerSpec, f: &ComplexImage) -> Result<AuxiliaryB> {
    spec.validate()?;
    if let Penalty::ApproxTv { .. } = spec.penalty {
        return Err(unsupported("auxiliary_b_star", spec.penalty));
    }
    let values = f
        .as_slice()
        .iter()
        .map(|z| separable_weight(spec.penalty, z.norm_sqr()))
        .collect();
    // b* can underflow to 0 for Welsh at very large |f|
    AuxiliaryB::new(values)
}

fn kappa(penalty: Penalty, b: f64, t: f64) -> f64 {
    match penalty {
        Penalty::Cauchy { gamma } => (t + gamma * gamma) * b - math::ln(gamma * b) - 1.0,
        Penalty::Welsh { delta } => {
            let two_d2 = 2.0 * delta * delta;
            (t - two_d2) * b + two_d2 * b * math::ln(two_d2 * b) + 1.0
        }
        Penalty::GemanMcClure { delta } => {
            let two_d2 = 2.0 * delta * delta;
            (t + two_d2) * b - 2.0 * core::f64::consts::SQRT_2 * delta * math::sqrt(b) + 1.0
        }
        Penalty::ApproxLp { p, beta } => {
            b * (t + beta) + 0.5 * (2.0 - p) * math::pow(2.0 * b / p, p / (p - 2.0))
        }
        Penalty::ApproxTv { .. } => unreachable!("checked by caller"),
    }
}

/// `K(b, f, φ)` given the data-fidelity term `‖g − C(φ) f‖²`.
pub fn k_value(spec: &RegularizerSpec, b: &AuxiliaryB, f: &ComplexImage, fidelity: f64) -> Result<f64> {
    spec.validate()?;
    if let Penalty::ApproxTv { .. } = spec.penalty {
        return Err(unsupported("k_value", spec.penalty));
    }
    Error::check_len("auxiliary vector", f.len(), b.len())?;
    let sum: f64 = b
        .values()
        .iter()
        .zip(f.as_slice())
        .map(|(&bi, z)| kappa(spec.penalty, bi, z.norm_sqr()))
        .sum();
    Ok(fidelity + spec.lambda * sum)
}
