//! Small dense complex-vector kernels shared by the solvers.
//!
//! All reductions run sequentially in index order, so results are bitwise
//! reproducible.

use alloc::vec::Vec;

use crate::math;
use crate::Complex;

/// Hermitian inner product `⟨a, b⟩ = aᴴ b = Σ conj(aᵢ) bᵢ`.
pub fn dot(a: &[Complex], b: &[Complex]) -> Complex {
    debug_assert_eq!(a.len(), b.len());
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex::new(re, im)
}

pub fn norm_sqr(a: &[Complex]) -> f64 {
    a.iter().map(|z| z.re * z.re + z.im * z.im).sum()
}

pub fn norm(a: &[Complex]) -> f64 {
    math::sqrt(norm_sqr(a))
}

/// Modulus of a single complex number.
#[inline]
pub fn abs(z: Complex) -> f64 {
    math::hypot(z.re, z.im)
}

/// Principal argument in `(−π, π]`.
#[inline]
pub fn arg(z: Complex) -> f64 {
    math::atan2(z.im, z.re)
}

#[inline]
pub fn cis(theta: f64) -> Complex {
    math::cis(theta)
}

pub fn sub(a: &[Complex], b: &[Complex]) -> Vec<Complex> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn distance_sqr(a: &[Complex], b: &[Complex]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d.re * d.re + d.im * d.im
        })
        .sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: Complex, x: &[Complex], y: &mut [Complex]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: Complex, x: &[Complex]) -> Vec<Complex> {
    x.iter().map(|v| alpha * v).collect()
}

/// Relative change `‖new − old‖ / ‖old‖`.
///
/// When `‖old‖ = 0` the change is reported as `0` if `new` is also zero and
/// as `+∞` otherwise, so a caller comparing against a tolerance keeps
/// iterating out of a zero start.
pub fn relative_change(new: &[Complex], old: &[Complex]) -> f64 {
    let denom = norm(old);
    let num = math::sqrt(distance_sqr(new, old));
    if denom == 0.0 {
        if norm_sqr(new) == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / denom
    }
}

/// Wrap an angle to `[−π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    use core::f64::consts::{PI, TAU};
    let mut w = theta - TAU * math::floor((theta + PI) / TAU);
    // floor rounding can land exactly on +π for inputs just below an odd multiple
    if w >= PI {
        w -= TAU;
    }
    if w < -PI {
        w = -PI;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn dot_conjugates_left_argument() {
        let a = [Complex::new(0.0, 1.0)];
        let b = [Complex::new(0.0, 1.0)];
        assert_eq!(dot(&a, &b), Complex::new(1.0, 0.0));
    }

    #[test]
    fn wrap_angle_half_open_interval() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!((wrap_angle(3.0 * PI + 0.25) - (-PI + 0.25)).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
        for k in -20..20 {
            let w = wrap_angle(0.1 * k as f64 * PI + 0.013);
            assert!((-PI..PI).contains(&w));
        }
    }

    #[test]
    fn relative_change_zero_denominator() {
        let zero = [Complex::new(0.0, 0.0); 3];
        let one = [Complex::new(1.0, 0.0); 3];
        assert_eq!(relative_change(&zero, &zero), 0.0);
        assert!(relative_change(&one, &zero).is_infinite());
        assert!((relative_change(&zero, &one) - 1.0).abs() < 1e-15);
    }
}
