//! Penalties `R(f)` acting on pixel magnitudes, their Wirtinger weight
//! operators `W(f)` (so that `∇_f R = W(f) f`), the closed-form
//! magnitude-Cauchy proximal operator, and half-quadratic auxiliary
//! functions.

mod half_quadratic;
mod prox;
mod tv;

use alloc::vec::Vec;

pub use half_quadratic::{auxiliary_b_star, k_value, AuxiliaryB};
pub(crate) use prox::check_convexity;
pub use prox::{cauchy_envelope, cauchy_prox_magnitude, complex_prox, complex_prox_cauchy};
pub use tv::{tv_gradients, tv_weight_operator, DifferenceMatrix, TvWeightOperator};

use crate::error::{Error, Result};
use crate::forward_model::ComplexImage;
use crate::math;
use crate::Complex;

/// Penalty family and its shape constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    /// `−ln(γ / (γ² + |fᵢ|²))`
    Cauchy { gamma: f64 },
    /// `(|fᵢ|² + β)^{p/2}`
    ApproxLp { p: f64, beta: f64 },
    /// `√(|∇ᵢF|² + |∇ⱼF|² + β)` summed over pixels
    ApproxTv { beta: f64 },
    /// `1 − exp(−|fᵢ|² / 2δ²)`
    Welsh { delta: f64 },
    /// `|fᵢ|² / (2δ² + |fᵢ|²)`
    GemanMcClure { delta: f64 },
}

impl Penalty {
    pub fn name(&self) -> &'static str {
        match self {
            Penalty::Cauchy { .. } => "cauchy",
            Penalty::ApproxLp { .. } => "approx-lp",
            Penalty::ApproxTv { .. } => "approx-tv",
            Penalty::Welsh { .. } => "welsh",
            Penalty::GemanMcClure { .. } => "geman-mcclure",
        }
    }
}

/// A penalty together with its regularisation weight λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizerSpec {
    pub penalty: Penalty,
    pub lambda: f64,
}

impl RegularizerSpec {
    pub fn new(penalty: Penalty, lambda: f64) -> Result<Self> {
        let spec = Self { penalty, lambda };
        spec.validate()?;
        Ok(spec)
    }

    pub fn cauchy(gamma: f64, lambda: f64) -> Result<Self> {
        Self::new(Penalty::Cauchy { gamma }, lambda)
    }

    /// λ may be zero (pure least squares); every shape constant must be
    /// strictly positive and `0 < p ≤ 1`.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::invalid("lambda", "must be finite and non-negative"));
        }
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be finite and strictly positive"))
            }
        };
        match self.penalty {
            Penalty::Cauchy { gamma } => positive("gamma", gamma),
            Penalty::ApproxLp { p, beta } => {
                positive("beta", beta)?;
                if p.is_finite() && p > 0.0 && p <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid("p", "must lie in (0, 1]"))
                }
            }
            Penalty::ApproxTv { beta } => positive("beta", beta),
            Penalty::Welsh { delta } | Penalty::GemanMcClure { delta } => positive("delta", delta),
        }
    }
}

/// Per-pixel penalty `ρ(|f|²)` for the separable penalties.
fn separable_value(penalty: Penalty, t: f64) -> f64 {
    match penalty {
        Penalty::Cauchy { gamma } => math::ln(gamma * gamma + t) - math::ln(gamma),
        Penalty::ApproxLp { p, beta } => math::pow(t + beta, 0.5 * p),
        Penalty::Welsh { delta } => 1.0 - math::exp(-t / (2.0 * delta * delta)),
        Penalty::GemanMcClure { delta } => t / (2.0 * delta * delta + t),
        Penalty::ApproxTv { .. } => unreachable!("TV is not separable"),
    }
}

/// Per-pixel weight `sᵢ = ρ'(|fᵢ|²)` so that `(∇_f R)ᵢ = sᵢ fᵢ`.
fn separable_weight(penalty: Penalty, t: f64) -> f64 {
    match penalty {
        Penalty::Cauchy { gamma } => 1.0 / (gamma * gamma + t),
        Penalty::ApproxLp { p, beta } => p / (2.0 * math::pow(t + beta, 1.0 - 0.5 * p)),
        Penalty::Welsh { delta } => {
            let two_d2 = 2.0 * delta * delta;
            math::exp(-t / two_d2) / two_d2
        }
        Penalty::GemanMcClure { delta } => {
            let two_d2 = 2.0 * delta * delta;
            two_d2 / ((two_d2 + t) * (two_d2 + t))
        }
        Penalty::ApproxTv { .. } => unreachable!("TV is not separable"),
    }
}

/// `λ·R(f)`.
pub fn penalty_value(spec: &RegularizerSpec, f: &ComplexImage) -> Result<f64> {
    spec.validate()?;
    let r = match spec.penalty {
        Penalty::ApproxTv { beta } => {
            let (dv, dh) = tv_gradients(f);
            dv.iter()
                .zip(&dh)
                .map(|(a, c)| math::sqrt(a.norm_sqr() + c.norm_sqr() + beta))
                .sum()
        }
        penalty => f
            .as_slice()
            .iter()
            .map(|z| separable_value(penalty, z.norm_sqr()))
            .sum::<f64>(),
    };
    Ok(spec.lambda * r)
}

/// Diagonal of `W(f)` for the separable penalties.
pub fn weight_diagonal(spec: &RegularizerSpec, f: &ComplexImage) -> Result<Vec<f64>> {
    spec.validate()?;
    if let Penalty::ApproxTv { .. } = spec.penalty {
        return Err(Error::Unsupported {
            operation: "weight_diagonal",
            penalty: spec.penalty.name(),
        });
    }
    Ok(f
        .as_slice()
        .iter()
        .map(|z| separable_weight(spec.penalty, z.norm_sqr()))
        .collect())
}

/// `W(f)`: either a positive diagonal or the total-variation form.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightOperator {
    Diagonal(Vec<f64>),
    TotalVariation(TvWeightOperator),
}

impl WeightOperator {
    pub fn len(&self) -> usize {
        match self {
            WeightOperator::Diagonal(s) => s.len(),
            WeightOperator::TotalVariation(tv) => tv.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `out = W v`
    pub fn apply_into(&self, v: &[Complex], out: &mut [Complex]) {
        match self {
            WeightOperator::Diagonal(s) => {
                for ((o, x), w) in out.iter_mut().zip(v).zip(s) {
                    *o = x * *w;
                }
            }
            WeightOperator::TotalVariation(tv) => tv.apply_into(v, out),
        }
    }

    pub fn apply(&self, v: &[Complex]) -> Vec<Complex> {
        let mut out = alloc::vec![Complex::new(0.0, 0.0); v.len()];
        self.apply_into(v, &mut out);
        out
    }

    /// Smallest diagonal weight (for TV: smallest of the `S′` factors).
    pub fn min_weight(&self) -> f64 {
        match self {
            WeightOperator::Diagonal(s) => s.iter().copied().fold(f64::INFINITY, f64::min),
            WeightOperator::TotalVariation(tv) => tv.s_prime().iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// `W(f)` for any penalty; TV requires the image to carry its 2D shape,
/// which [`ComplexImage`] always does.
pub fn weight_operator(spec: &RegularizerSpec, f: &ComplexImage) -> Result<WeightOperator> {
    match spec.penalty {
        Penalty::ApproxTv { .. } => Ok(WeightOperator::TotalVariation(tv_weight_operator(spec, f)?)),
        _ => Ok(WeightOperator::Diagonal(weight_diagonal(spec, f)?)),
    }
}

/// Wirtinger gradient `λ W(f) f` of `λ R(f)`.
pub fn penalty_gradient(spec: &RegularizerSpec, f: &ComplexImage) -> Result<Vec<Complex>> {
    let w = weight_operator(spec, f)?;
    let mut g = w.apply(f.as_slice());
    for z in g.iter_mut() {
        *z *= spec.lambda;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn image(values: &[(f64, f64)], rows: usize, cols: usize) -> ComplexImage {
        ComplexImage::new(rows, cols, values.iter().map(|&(a, b)| Complex::new(a, b)).collect()).unwrap()
    }

    #[test]
    fn cauchy_value_at_zero() {
        let spec = RegularizerSpec::cauchy(0.3, 2.0).unwrap();
        let f = ComplexImage::zeros(3, 2);
        let expected = -2.0 * 6.0 * (1.0_f64 / 0.3).ln();
        assert!((penalty_value(&spec, &f).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn welsh_value_at_zero() {
        let spec = RegularizerSpec::new(Penalty::Welsh { delta: 0.7 }, 3.0).unwrap();
        assert_eq!(penalty_value(&spec, &ComplexImage::zeros(4, 4)).unwrap(), 0.0);
    }

    #[test]
    fn cauchy_value_hand_evaluated() {
        let spec = RegularizerSpec::cauchy(1.0, 1.0).unwrap();
        let f = image(&[(1.0, 0.0), (0.0, 0.0)], 2, 1);
        assert!((penalty_value(&spec, &f).unwrap() - 2.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn other_penalties_hand_evaluated() {
        let f = image(&[(0.6, 0.8)], 1, 1); // |f|² = 1
        let lp = RegularizerSpec::new(Penalty::ApproxLp { p: 1.0, beta: 0.21 }, 2.0).unwrap();
        assert!((penalty_value(&lp, &f).unwrap() - 2.0 * 1.1).abs() < 1e-12);
        let gm = RegularizerSpec::new(Penalty::GemanMcClure { delta: 1.0 }, 1.0).unwrap();
        assert!((penalty_value(&gm, &f).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let welsh = RegularizerSpec::new(Penalty::Welsh { delta: 1.0 }, 1.0).unwrap();
        assert!((penalty_value(&welsh, &f).unwrap() - (1.0 - (-0.5_f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn weight_examples() {
        let zero = ComplexImage::zeros(2, 2);
        let cauchy = RegularizerSpec::cauchy(1.0, 1.0).unwrap();
        assert_eq!(weight_diagonal(&cauchy, &zero).unwrap(), vec![1.0; 4]);

        let unit = image(&[(0.0, 1.0), (1.0, 0.0)], 2, 1);
        let lp = RegularizerSpec::new(Penalty::ApproxLp { p: 1.0, beta: 0.01 }, 1.0).unwrap();
        let expected = 1.0 / (2.0 * 1.01_f64.sqrt());
        for s in weight_diagonal(&lp, &unit).unwrap() {
            assert!((s - expected).abs() < 1e-15);
        }

        let welsh = RegularizerSpec::new(Penalty::Welsh { delta: 1.0 }, 1.0).unwrap();
        assert_eq!(weight_diagonal(&welsh, &zero).unwrap(), vec![0.5; 4]);
    }

    #[test]
    fn tv_routed_to_weight_diagonal_is_rejected() {
        let spec = RegularizerSpec::new(Penalty::ApproxTv { beta: 1.0 }, 1.0).unwrap();
        assert!(matches!(
            weight_diagonal(&spec, &ComplexImage::zeros(2, 2)),
            Err(Error::Unsupported { .. })
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(RegularizerSpec::cauchy(0.0, 1.0).is_err());
        assert!(RegularizerSpec::cauchy(1.0, -1.0).is_err());
        assert!(RegularizerSpec::new(Penalty::ApproxLp { p: 2.0, beta: 1.0 }, 1.0).is_err());
        assert!(RegularizerSpec::new(Penalty::ApproxLp { p: 0.0, beta: 1.0 }, 1.0).is_err());
        assert!(RegularizerSpec::new(Penalty::Welsh { delta: f64::NAN }, 1.0).is_err());
        assert!(RegularizerSpec::new(Penalty::ApproxLp { p: 1.0, beta: 1.0 }, 1.0).is_ok());
    }
}
