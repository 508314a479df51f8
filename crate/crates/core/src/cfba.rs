//! Complex forward–backward splitting for the magnitude-Cauchy image
//! sub-problem
//!
//! ```text
//! min_f  H(f) + G(f),   H(f) = ‖g − C f‖²,   G(f) = −λ Σ ln(γ / (γ² + |fᵢ|²))
//! ```
//!
//! Each iteration takes a Wirtinger gradient step of stride `2μ` followed by
//! the componentwise magnitude prox:
//! `o ← prox_{μG}(o − 2μ Cᴴ(C o − g))`.
//!
//! The step size is tied to `L = λ_max(CᴴC)` through `μ ≤ 1/L`; because
//! `C(φ)ᴴC(φ) = CᴴC` for any block phase rotation, `L` only needs to be
//! estimated once per observation matrix.
//!
//! [`RealLifting`] and [`run_lifted_fb`] run the same algorithm on the
//! stacked real vector `(Re f, Im f)` and exist to cross-check the complex
//! iteration.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forward_model::{ComplexImage, ObservationMatrix, PhaseHistory};
use crate::linalg;
use crate::math;
use crate::regularizers::{
    self, cauchy_prox_magnitude, complex_prox_cauchy, penalty_value, Penalty, RegularizerSpec,
};
use crate::Complex;

/// Safety factor applied to the power-iteration eigenvalue estimate.
pub const LIPSCHITZ_SAFETY: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfbaConfig {
    /// Step size μ; the gradient stride is `2μ`.
    pub mu: f64,
    pub max_inner_iters: usize,
    pub inner_rel_tol: f64,
    /// Spectral bound `L ≥ λ_max(CᴴC)`.
    pub lipschitz: f64,
}

impl CfbaConfig {
    pub const DEFAULT_STEP_MULTIPLIER: f64 = 0.9;
    pub const DEFAULT_MAX_INNER_ITERS: usize = 500;
    pub const DEFAULT_INNER_REL_TOL: f64 = 1e-3;

    /// `μ = step_multiplier / L` with the default inner budget.
    pub fn from_lipschitz(lipschitz: f64, step_multiplier: f64) -> Self {
        Self {
            mu: step_multiplier / lipschitz,
            max_inner_iters: Self::DEFAULT_MAX_INNER_ITERS,
            inner_rel_tol: Self::DEFAULT_INNER_REL_TOL,
            lipschitz,
        }
    }

    /// Checks `0 < μ ≤ 1/L`, the inner budget, and `γ ≥ √(μλ)/2` for a
    /// Cauchy spec.
    pub fn validate(&self, spec: &RegularizerSpec) -> Result<()> {
        spec.validate()?;
        if !(self.lipschitz.is_finite() && self.lipschitz > 0.0) {
            return Err(Error::invalid("lipschitz", "must be finite and strictly positive"));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::invalid("mu", "must be finite and strictly positive"));
        }
        if self.mu * self.lipschitz > 1.0 + 1e-12 {
            return Err(Error::invalid(
                "mu",
                alloc::format!("μ = {} exceeds 1/L = {}", self.mu, 1.0 / self.lipschitz),
            ));
        }
        if self.max_inner_iters == 0 {
            return Err(Error::invalid("max_inner_iters", "must be at least 1"));
        }
        if !(self.inner_rel_tol.is_finite() && self.inner_rel_tol > 0.0) {
            return Err(Error::invalid("inner_rel_tol", "must be finite and strictly positive"));
        }
        match spec.penalty {
            Penalty::Cauchy { gamma } => {
                regularizers::check_convexity(gamma, self.mu * spec.lambda)
            }
            other => Err(Error::Unsupported {
                operation: "CFBA",
                penalty: other.name(),
            }),
        }
    }
}

/// `∇_f ‖g − C f‖² = Cᴴ(C f − g)` in the Wirtinger sense.
pub fn wirtinger_grad_fidelity(
    c: &ObservationMatrix,
    f: &ComplexImage,
    g: &PhaseHistory,
) -> Result<Vec<Complex>> {
    Error::check_len("phase history", c.rows(), g.len())?;
    let mut r = c.matvec(f.as_slice())?;
    for (ri, gi) in r.iter_mut().zip(g.as_slice()) {
        *ri -= gi;
    }
    c.adjoint_matvec(&r)
}

/// Norm of the Wirtinger stationarity residual `Cᴴ(C f − g) + λ W(f) f`.
pub fn stationarity_residual(
    c: &ObservationMatrix,
    f: &ComplexImage,
    g: &PhaseHistory,
    spec: &RegularizerSpec,
) -> Result<f64> {
    let mut grad = wirtinger_grad_fidelity(c, f, g)?;
    let reg = regularizers::penalty_gradient(spec, f)?;
    for (a, b) in grad.iter_mut().zip(&reg) {
        *a += b;
    }
    Ok(linalg::norm(&grad))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    /// Inflated bound `LIPSCHITZ_SAFETY · λ̂_max`.
    pub value: f64,
    /// Raw Rayleigh-quotient estimate of `λ_max(CᴴC)`.
    pub eigenvalue: f64,
    /// Set when `CᴴC` annihilated the iterate (zero operator).
    pub degenerate: bool,
}

/// Power iteration on `CᴴC` from a seeded random start.
pub fn estimate_lipschitz(c: &ObservationMatrix, iters: usize, seed: u64) -> Result<LipschitzEstimate> {
    if iters == 0 {
        return Err(Error::invalid("iters", "power iteration needs at least one step"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex> = (0..c.cols())
        .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let degenerate = LipschitzEstimate {
        value: 0.0,
        eigenvalue: 0.0,
        degenerate: true,
    };
    let mut scratch = vec![Complex::new(0.0, 0.0); c.rows()];
    let mut w = vec![Complex::new(0.0, 0.0); c.cols()];
    let mut eigenvalue = 0.0;
    for _ in 0..iters {
        let nv = linalg::norm(&v);
        if nv == 0.0 {
            return Ok(degenerate);
        }
        for z in v.iter_mut() {
            *z /= nv;
        }
        c.matvec_into(&v, &mut scratch)?;
        c.adjoint_matvec_into(&scratch, &mut w)?;
        // Rayleigh quotient vᴴCᴴCv = ‖Cv‖²
        eigenvalue = linalg::norm_sqr(&scratch);
        core::mem::swap(&mut v, &mut w);
    }
    if eigenvalue == 0.0 {
        return Ok(degenerate);
    }
    Ok(LipschitzEstimate {
        value: LIPSCHITZ_SAFETY * eigenvalue,
        eigenvalue,
        degenerate: false,
    })
}

/// One inner iteration record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerStep {
    /// Iteration index `k` of the iterate `o⁽ᵏ⁾` this row describes.
    pub k: usize,
    /// `J_n(o⁽ᵏ⁾) = ‖g − C o⁽ᵏ⁾‖² + G(o⁽ᵏ⁾)`.
    pub objective: f64,
    /// `‖o⁽ᵏ⁾ − o⁽ᵏ⁻¹⁾‖ / ‖o⁽ᵏ⁻¹⁾‖`; `None` for `k = 0`.
    pub rel_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfbaOutcome {
    pub image: ComplexImage,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<InnerStep>,
}

struct CfbaStepper<'a> {
    c: &'a ObservationMatrix,
    g: &'a [Complex],
    gamma: f64,
    mu: f64,
    mu_lambda: f64,
    residual: Vec<Complex>,
    grad: Vec<Complex>,
}

impl<'a> CfbaStepper<'a> {
    fn new(c: &'a ObservationMatrix, g: &'a PhaseHistory, spec: &RegularizerSpec, mu: f64) -> Result<Self> {
        Error::check_len("phase history", c.rows(), g.len())?;
        let gamma = match spec.penalty {
            Penalty::Cauchy { gamma } => gamma,
            other => {
                return Err(Error::Unsupported {
                    operation: "CFBA",
                    penalty: other.name(),
                })
            }
        };
        Ok(Self {
            c,
            g: g.as_slice(),
            gamma,
            mu,
            mu_lambda: mu * spec.lambda,
            residual: vec![Complex::new(0.0, 0.0); c.rows()],
            grad: vec![Complex::new(0.0, 0.0); c.cols()],
        })
    }

    /// Residual `C o − g` into `self.residual`; returns `‖C o − g‖²`.
    fn fidelity(&mut self, o: &[Complex]) -> Result<f64> {
        self.c.matvec_into(o, &mut self.residual)?;
        for (r, g) in self.residual.iter_mut().zip(self.g) {
            *r -= g;
        }
        Ok(linalg::norm_sqr(&self.residual))
    }

    /// Forward–backward step from `o`; `self.residual` must hold `C o − g`.
    fn step(&mut self, o: &[Complex]) -> Result<Vec<Complex>> {
        self.c.adjoint_matvec_into(&self.residual, &mut self.grad)?;
        let stride = 2.0 * self.mu;
        let z: Vec<Complex> = o.iter().zip(&self.grad).map(|(x, d)| x - d * stride).collect();
        complex_prox_cauchy(&z, self.gamma, self.mu_lambda)
    }
}

/// Run the complex forward–backward iteration from `f0` until the relative
/// change drops to `inner_rel_tol` or `max_inner_iters` steps were taken.
pub fn cfba_inner(
    c: &ObservationMatrix,
    g: &PhaseHistory,
    f0: &ComplexImage,
    spec: &RegularizerSpec,
    cfg: &CfbaConfig,
) -> Result<CfbaOutcome> {
    cfg.validate(spec)?;
    Error::check_len("initial image", c.cols(), f0.len())?;
    let mut stepper = CfbaStepper::new(c, g, spec, cfg.mu)?;
    let mut o = f0.as_slice().to_vec();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last_change = None;

    for k in 0..cfg.max_inner_iters {
        let objective = stepper.fidelity(&o)? + penalty_of(spec, f0, &o)?;
        trace.push(InnerStep {
            k,
            objective,
            rel_change: last_change,
        });
        let next = stepper.step(&o)?;
        let change = linalg::relative_change(&next, &o);
        o = next;
        iterations = k + 1;
        last_change = Some(change);
        if change <= cfg.inner_rel_tol {
            converged = true;
            break;
        }
    }
    let objective = stepper.fidelity(&o)? + penalty_of(spec, f0, &o)?;
    trace.push(InnerStep {
        k: iterations,
        objective,
        rel_change: last_change,
    });

    Ok(CfbaOutcome {
        image: f0.with_data(o)?,
        iterations,
        converged,
        trace,
    })
}

/// Exactly `iters` forward–backward steps without early stopping; returns
/// `o⁽⁰⁾ … o⁽ⁱᵗᵉʳˢ⁾`.
pub fn cfba_iterates(
    c: &ObservationMatrix,
    g: &PhaseHistory,
    f0: &ComplexImage,
    spec: &RegularizerSpec,
    cfg: &CfbaConfig,
    iters: usize,
) -> Result<Vec<Vec<Complex>>> {
    cfg.validate(spec)?;
    Error::check_len("initial image", c.cols(), f0.len())?;
    let mut stepper = CfbaStepper::new(c, g, spec, cfg.mu)?;
    let mut out = Vec::with_capacity(iters + 1);
    out.push(f0.as_slice().to_vec());
    for _ in 0..iters {
        let current = out.last().expect("non-empty");
        stepper.fidelity(current)?;
        let next = stepper.step(current)?;
        out.push(next);
    }
    Ok(out)
}

fn penalty_of(spec: &RegularizerSpec, shape: &ComplexImage, o: &[Complex]) -> Result<f64> {
    penalty_value(spec, &shape.with_data(o.to_vec())?)
}

/// Real `2R × 2N` representation `[[Re C, −Im C], [Im C, Re C]]` of a complex
/// `R × N` matrix, acting on `(Re f, Im f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealLifting {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl RealLifting {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// `C̃ u`
    pub fn matvec(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `C̃ᵀ v`
    pub fn transpose_matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (row, &vr) in self.data.chunks_exact(self.cols).zip(v) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vr;
            }
        }
        out
    }
}

pub fn lift_real(c: &ObservationMatrix) -> RealLifting {
    let (r, n) = (c.rows(), c.cols());
    let cols = 2 * n;
    let mut data = vec![0.0; 2 * r * cols];
    for i in 0..r {
        for j in 0..n {
            let z = c.entry(i, j);
            data[i * cols + j] = z.re;
            data[i * cols + n + j] = -z.im;
            data[(i + r) * cols + j] = z.im;
            data[(i + r) * cols + n + j] = z.re;
        }
    }
    RealLifting { data, rows: 2 * r, cols }
}

/// `(Re v₁ … Re v_N, Im v₁ … Im v_N)`
pub fn lift_vector(v: &[Complex]) -> Vec<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

pub fn unlift_vector(u: &[f64]) -> Vec<Complex> {
    let n = u.len() / 2;
    (0..n).map(|i| Complex::new(u[i], u[i + n])).collect()
}

/// Real forward–backward splitting on the lifted problem
/// `min_u ‖g̃ − C̃u‖² − λ Σ ln(γ / (γ² + u_i² + u_{i+N}²))`, with the group
/// prox acting on each pair `(u_i, u_{i+N})`. Returns `u⁽⁰⁾ … u⁽ⁱᵗᵉʳˢ⁾`.
pub fn run_lifted_fb(
    lift: &RealLifting,
    g: &[f64],
    u0: &[f64],
    spec: &RegularizerSpec,
    mu: f64,
    iters: usize,
) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    Error::check_len("lifted phase history", lift.rows(), g.len())?;
    Error::check_len("lifted start", lift.cols(), u0.len())?;
    let gamma = match spec.penalty {
        Penalty::Cauchy { gamma } => gamma,
        other => {
            return Err(Error::Unsupported {
                operation: "lifted FB",
                penalty: other.name(),
            })
        }
    };
    let mu_lambda = mu * spec.lambda;
    let n = lift.cols() / 2;
    let mut out = Vec::with_capacity(iters + 1);
    out.push(u0.to_vec());
    for _ in 0..iters {
        let u = out.last().expect("non-empty");
        let mut residual = lift.matvec(u);
        for (r, gi) in residual.iter_mut().zip(g) {
            *r -= gi;
        }
        let grad = lift.transpose_matvec(&residual);
        let w: Vec<f64> = u.iter().zip(&grad).map(|(a, d)| a - 2.0 * mu * d).collect();
        let mut next = vec![0.0; 2 * n];
        for i in 0..n {
            let (a, b) = (w[i], w[i + n]);
            let r = math::hypot(a, b);
            let m = cauchy_prox_magnitude(r, gamma, mu_lambda)?;
            if r == 0.0 {
                next[i] = m;
            } else {
                next[i] = a * (m / r);
                next[i + n] = b * (m / r);
            }
        }
        out.push(next);
    }
    Ok(out)
}
