//! Joint cost, gauge-aligned mean squared error and normalised-intensity
//! entropy.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::forward_model::{rotate_vector_blocks, ComplexImage, ObservationMatrix, PhaseErrorVector, PhaseHistory};
use crate::linalg;
use crate::math;
use crate::regularizers::{penalty_value, RegularizerSpec};
use crate::Complex;

/// `‖g − C(φ) f‖²` evaluated from the clean matrix.
pub fn fidelity(c_clean: &ObservationMatrix, phi: &PhaseErrorVector, f: &ComplexImage, g: &PhaseHistory) -> Result<f64> {
    Error::check_len("phase error vector", c_clean.blocks(), phi.len())?;
    Error::check_len("phase history", c_clean.rows(), g.len())?;
    let mut y = c_clean.matvec(f.as_slice())?;
    rotate_vector_blocks(&mut y, c_clean.block_len(), phi);
    Ok(linalg::distance_sqr(&y, g.as_slice()))
}

/// `J(f, φ) = ‖g − C(φ) f‖² + λ R(f)`.
pub fn cost_j(
    c_clean: &ObservationMatrix,
    phi: &PhaseErrorVector,
    f: &ComplexImage,
    g: &PhaseHistory,
    spec: &RegularizerSpec,
) -> Result<f64> {
    Ok(fidelity(c_clean, phi, f, g)? + penalty_value(spec, f)?)
}

/// `e^{jc} f̂` with `c = arg(f̂ᴴ f_ref)`, the global phase minimising
/// `‖e^{jc} f̂ − f_ref‖`.
pub fn align_global_phase(f_hat: &ComplexImage, f_ref: &ComplexImage) -> Result<ComplexImage> {
    Error::check_len("reference image", f_hat.len(), f_ref.len())?;
    let inner = linalg::dot(f_hat.as_slice(), f_ref.as_slice());
    if inner == Complex::new(0.0, 0.0) {
        return Ok(f_hat.clone());
    }
    let rot = math::cis(math::atan2(inner.im, inner.re));
    f_hat.with_data(linalg::scale(rot, f_hat.as_slice()))
}

/// `(1/N) Σ |f̂ᵢ − f_refᵢ|²` without any alignment.
pub fn mse_raw(f_hat: &ComplexImage, f_ref: &ComplexImage) -> Result<f64> {
    Error::check_len("reference image", f_hat.len(), f_ref.len())?;
    if f_hat.is_empty() {
        return Ok(0.0);
    }
    Ok(linalg::distance_sqr(f_hat.as_slice(), f_ref.as_slice()) / f_hat.len() as f64)
}

/// Mean squared error after removing the best global phase from `f_hat`.
pub fn mse(f_hat: &ComplexImage, f_ref: &ComplexImage) -> Result<f64> {
    mse_raw(&align_global_phase(f_hat, f_ref)?, f_ref)
}

/// `−Σ pᵢ ln pᵢ` with `pᵢ = |fᵢ|² / Σ|f_j|²`.
pub fn entropy(f: &ComplexImage) -> Result<f64> {
    let intensities: Vec<f64> = f.as_slice().iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = intensities.iter().sum();
    if total == 0.0 {
        return Err(Error::ZeroImage);
    }
    let h: f64 = intensities
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| {
            let p = v / total;
            -p * math::ln(p)
        })
        .sum();
    // rounding can leave a tiny negative value for a single pixel
    Ok(h.max(0.0))
}

/// Scores of one reconstruction against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub mse: f64,
    pub mse_raw: f64,
    pub entropy: f64,
    pub final_cost: f64,
    pub iterations: usize,
}

impl EvalReport {
    pub fn evaluate(f_hat: &ComplexImage, f_ref: &ComplexImage, final_cost: f64, iterations: usize) -> Result<Self> {
        Ok(Self {
            mse: mse(f_hat, f_ref)?,
            mse_raw: mse_raw(f_hat, f_ref)?,
            entropy: entropy(f_hat)?,
            final_cost,
            iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward_model::{apply_phase_error, build_observation_matrix, RadarParams, SceneGrid};
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sar(size: usize) -> ObservationMatrix {
        let params = RadarParams::default();
        build_observation_matrix(&params, &SceneGrid::matched(&params, size, size).unwrap()).unwrap()
    }

    fn random_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexImage {
        let data = (0..rows * cols)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        ComplexImage::new(rows, cols, data).unwrap()
    }

    #[test]
    fn cost_of_zero_image_and_zero_data() {
        let c = sar(4);
        let (gamma, lambda) = (0.5, 2.0);
        let spec = RegularizerSpec::cauchy(gamma, lambda).unwrap();
        let g = PhaseHistory::new(vec![Complex::new(0.0, 0.0); 16]);
        let j = cost_j(&c, &PhaseErrorVector::zeros(4), &ComplexImage::zeros(4, 4), &g, &spec).unwrap();
        let expected = -lambda * 16.0 * (1.0 / gamma).ln();
        assert!((j - expected).abs() < 1e-12);
    }

    #[test]
    fn exact_fit_leaves_only_the_penalty() {
        let c = sar(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_image(&mut rng, 4, 4);
        let phi = PhaseErrorVector::new(vec![0.1, -2.0, 3.0, 1.0]);
        let g = PhaseHistory::new(apply_phase_error(&c, &phi).unwrap().matvec(f.as_slice()).unwrap());
        let spec = RegularizerSpec::cauchy(0.5, 2.0).unwrap();
        let j = cost_j(&c, &phi, &f, &g, &spec).unwrap();
        let p = penalty_value(&spec, &f).unwrap();
        assert!((j - p).abs() < 1e-10 * p.abs());
    }

    #[test]
    fn cost_matches_term_by_term_evaluation() {
        let c = sar(4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_image(&mut rng, 4, 4);
        let g = PhaseHistory::new(random_image(&mut rng, 4, 4).into_vec());
        let phi = PhaseErrorVector::new((0..4).map(|_| rng.random_range(-3.0..3.0)).collect());
        let (gamma, lambda) = (0.7, 1.5);
        let spec = RegularizerSpec::cauchy(gamma, lambda).unwrap();
        let mut manual = 0.0;
        for r in 0..16 {
            let m = r / 4;
            let rot = Complex::from_polar(1.0, phi.angles()[m]);
            let mut y = Complex::new(0.0, 0.0);
            for i in 0..16 {
                y += rot * c.entry(r, i) * f.as_slice()[i];
            }
            manual += (g.samples[r] - y).norm_sqr();
        }
        for z in f.as_slice() {
            manual -= lambda * (gamma / (gamma * gamma + z.norm_sqr())).ln();
        }
        let j = cost_j(&c, &phi, &f, &g, &spec).unwrap();
        assert!((j - manual).abs() < 1e-12 * manual.abs());
    }

    #[test]
    fn mse_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_image(&mut rng, 3, 3);
        assert_eq!(mse(&f, &f).unwrap(), 0.0);
        let rotated = f.with_data(linalg::scale(Complex::from_polar(1.0, 2.2), f.as_slice())).unwrap();
        assert!(mse(&rotated, &f).unwrap() < 1e-28);
        assert!(mse_raw(&rotated, &f).unwrap() > 0.1);

        // hand-computed: aligned phase is 0 since f̂ᴴ f_ref = 1 + 0 + 2 is real
        let a = ComplexImage::new(3, 1, vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0), Complex::new(2.0, 0.0)]).unwrap();
        let b = ComplexImage::new(3, 1, vec![Complex::new(1.0, 0.0), Complex::new(0.0, 1.0), Complex::new(1.0, 0.0)]).unwrap();
        assert!((mse(&a, &b).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mse_is_symmetric_after_alignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let a = random_image(&mut rng, 4, 4);
            let b = random_image(&mut rng, 4, 4);
            assert!((mse(&a, &b).unwrap() - mse(&b, &a).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_examples() {
        let mut single = ComplexImage::zeros(4, 4);
        single.as_mut_slice()[5] = Complex::new(0.0, 3.0);
        assert_eq!(entropy(&single).unwrap(), 0.0);

        let flat = ComplexImage::new(2, 3, vec![Complex::from_polar(2.0, 0.4); 6]).unwrap();
        assert!((entropy(&flat).unwrap() - 6f64.ln()).abs() < 1e-14);

        let two = ComplexImage::new(2, 1, vec![Complex::new(3f64.sqrt(), 0.0), Complex::new(0.0, 1.0)]).unwrap();
        let expected = -(0.75 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((entropy(&two).unwrap() - expected).abs() < 1e-15);

        assert_eq!(entropy(&ComplexImage::zeros(2, 2)), Err(Error::ZeroImage));
    }

    #[test]
    fn entropy_is_bounded_and_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let f = random_image(&mut rng, 5, 5);
            let h = entropy(&f).unwrap();
            assert!((0.0..=25f64.ln() + 1e-12).contains(&h));
            let scaled = f.with_data(linalg::scale(Complex::new(-3.0, 7.0), f.as_slice())).unwrap();
            assert!((entropy(&scaled).unwrap() - h).abs() < 1e-12);
        }
    }
}
