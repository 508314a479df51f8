use alloc::vec::Vec;

use super::{Penalty, RegularizerSpec};
use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::Complex;

/// Scalar objective minimised by the magnitude prox:
/// `½(|x| − y)² − μλ ln(γ / (γ² + y²))`.
pub fn cauchy_envelope(y: f64, x_abs: f64, gamma: f64, mu_lambda: f64) -> f64 {
    let d = x_abs - y;
    0.5 * d * d - mu_lambda * (math::ln(gamma) - math::ln(gamma * gamma + y * y))
}

/// Magnitude of the Cauchy proximal point for an input of modulus `x_abs`.
///
/// Requires `γ ≥ √(μλ)/2`, which makes the envelope convex; the stationarity
/// cubic `y³ − |x|y² + (γ² + 2μλ)y − γ²|x| = 0` then has exactly one real
/// root, obtained with Cardano's formula on the depressed cubic
/// `z³ + p z − q = 0`, `y = |x|/3 + z`.
pub fn cauchy_prox_magnitude(x_abs: f64, gamma: f64, mu_lambda: f64) -> Result<f64> {
    if !(x_abs.is_finite() && x_abs >= 0.0) {
        return Err(Error::invalid("x_abs", "must be finite and non-negative"));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid("gamma", "must be finite and strictly positive"));
    }
    if !(mu_lambda.is_finite() && mu_lambda >= 0.0) {
        return Err(Error::invalid("mu_lambda", "must be finite and non-negative"));
    }
    check_convexity(gamma, mu_lambda)?;
    if mu_lambda == 0.0 || x_abs == 0.0 {
        return Ok(if mu_lambda == 0.0 { x_abs } else { 0.0 });
    }

    let g2 = gamma * gamma;
    let x = x_abs;
    let p = g2 + 2.0 * mu_lambda - x * x / 3.0;
    let q = g2 * x + 2.0 * x * x * x / 27.0 - (g2 + 2.0 * mu_lambda) * x / 3.0;
    let mut disc = p * p * p / 27.0 + q * q / 4.0;
    if disc < 0.0 {
        // only reachable through rounding at the convexity boundary
        debug_assert!(disc > -1e-9 * (p * p * p / 27.0).abs().max(q * q / 4.0).max(1e-300));
        disc = 0.0;
    }
    let root = math::sqrt(disc);
    // s·t = −p/3; take the cube root on the side without cancellation and
    // recover the other factor from the product.
    let (s, t) = if q >= 0.0 {
        let s = math::cbrt(0.5 * q + root);
        let t = if s != 0.0 { -p / (3.0 * s) } else { math::cbrt(0.5 * q - root) };
        (s, t)
    } else {
        let t = math::cbrt(0.5 * q - root);
        let s = if t != 0.0 { -p / (3.0 * t) } else { math::cbrt(0.5 * q + root) };
        (s, t)
    };
    let y = x / 3.0 + s + t;
    Ok(y.clamp(0.0, x))
}

pub(crate) fn check_convexity(gamma: f64, mu_lambda: f64) -> Result<()> {
    // relative slack absorbs rounding when γ is set exactly at the boundary
    if 2.0 * gamma < math::sqrt(mu_lambda) * (1.0 - 1e-12) {
        return Err(Error::invalid(
            "gamma",
            alloc::format!(
                "γ = {gamma} violates γ ≥ √(μλ)/2 = {} required for a convex prox envelope",
                0.5 * math::sqrt(mu_lambda)
            ),
        ));
    }
    Ok(())
}

/// Componentwise complex Cauchy prox with `μλ = mu_lambda`: each output keeps
/// the argument of its input (argument 0 for a zero input) and takes the
/// magnitude from [`cauchy_prox_magnitude`].
pub fn complex_prox_cauchy(x: &[Complex], gamma: f64, mu_lambda: f64) -> Result<Vec<Complex>> {
    let mut out = Vec::with_capacity(x.len());
    for &z in x {
        let r = linalg::abs(z);
        let m = cauchy_prox_magnitude(r, gamma, mu_lambda)?;
        out.push(if r == 0.0 { Complex::new(m, 0.0) } else { z * (m / r) });
    }
    Ok(out)
}

/// `prox_{μλR}(x)` for a Cauchy [`RegularizerSpec`].
pub fn complex_prox(x: &[Complex], spec: &RegularizerSpec, mu: f64) -> Result<Vec<Complex>> {
    spec.validate()?;
    match spec.penalty {
        Penalty::Cauchy { gamma } => complex_prox_cauchy(x, gamma, mu * spec.lambda),
        other => Err(Error::Unsupported {
            operation: "complex_prox",
            penalty: other.name(),
        }),
    }
}
