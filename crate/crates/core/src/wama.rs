//! Wirtinger alternating minimisation: the image update freezes the weight
//! operator at the previous iterate and solves
//!
//! ```text
//! [Cᴴ C + λ W(f_prev)] f = Cᴴ g
//! ```
//!
//! with complex conjugate gradients. `C` is passed already rotated by the
//! current phase estimate.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forward_model::{ComplexImage, ObservationMatrix, PhaseHistory};
use crate::linalg;
use crate::regularizers::{weight_operator, RegularizerSpec, WeightOperator};
use crate::Complex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WamaConfig {
    pub cg_max_iters: usize,
    /// Stop once `‖r‖ ≤ cg_rel_tol · ‖b‖`.
    pub cg_rel_tol: f64,
    /// Optional Tikhonov shift added to the normal operator.
    pub damping: f64,
    /// Number of frozen-weight solves per image update.
    pub fixed_point_steps: usize,
}

impl Default for WamaConfig {
    fn default() -> Self {
        Self {
            cg_max_iters: 1000,
            cg_rel_tol: 1e-8,
            damping: 0.0,
            fixed_point_steps: 1,
        }
    }
}

impl WamaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cg_max_iters == 0 {
            return Err(Error::invalid("cg_max_iters", "must be at least 1"));
        }
        if !(self.cg_rel_tol.is_finite() && self.cg_rel_tol > 0.0) {
            return Err(Error::invalid("cg_rel_tol", "must be finite and strictly positive"));
        }
        if !(self.damping.is_finite() && self.damping >= 0.0) {
            return Err(Error::invalid("damping", "must be finite and non-negative"));
        }
        if self.fixed_point_steps == 0 {
            return Err(Error::invalid("fixed_point_steps", "must be at least 1"));
        }
        Ok(())
    }
}

/// A linear operator assumed Hermitian positive definite by [`cg_solve`].
pub trait HermitianOperator {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[Complex], out: &mut [Complex]);

    fn apply(&self, x: &[Complex]) -> Vec<Complex> {
        let mut out = vec![Complex::new(0.0, 0.0); self.dim()];
        self.apply_into(x, &mut out);
        out
    }
}

/// Dense row-major square operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    n: usize,
    data: Vec<Complex>,
}

impl DenseOperator {
    pub fn new(n: usize, data: Vec<Complex>) -> Result<Self> {
        Error::check_len("dense operator", n * n, data.len())?;
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex::new(1.0, 0.0);
        }
        Self { n, data }
    }
}

impl HermitianOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[Complex], out: &mut [Complex]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.n)) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// `A = CᴴC + λW + δI` together with its right-hand side `Cᴴg`.
#[derive(Debug, Clone)]
pub struct NormalSystem<'a> {
    c: &'a ObservationMatrix,
    weights: WeightOperator,
    lambda: f64,
    damping: f64,
    rhs: Vec<Complex>,
}

impl NormalSystem<'_> {
    pub fn rhs(&self) -> &[Complex] {
        &self.rhs
    }

    pub fn weights(&self) -> &WeightOperator {
        &self.weights
    }
}

impl HermitianOperator for NormalSystem<'_> {
    fn dim(&self) -> usize {
        self.c.cols()
    }

    fn apply_into(&self, x: &[Complex], out: &mut [Complex]) {
        let mut scratch = vec![Complex::new(0.0, 0.0); self.c.rows()];
        self.c.matvec_into(x, &mut scratch).expect("dimensions checked at assembly");
        self.c
            .adjoint_matvec_into(&scratch, out)
            .expect("dimensions checked at assembly");
        let mut weighted = vec![Complex::new(0.0, 0.0); x.len()];
        self.weights.apply_into(x, &mut weighted);
        for ((o, w), xi) in out.iter_mut().zip(&weighted).zip(x) {
            *o += w * self.lambda + xi * self.damping;
        }
    }
}

pub fn assemble_normal_system<'a>(
    c: &'a ObservationMatrix,
    g: &PhaseHistory,
    f_prev: &ComplexImage,
    spec: &RegularizerSpec,
    damping: f64,
) -> Result<NormalSystem<'a>> {
    spec.validate()?;
    Error::check_len("phase history", c.rows(), g.len())?;
    Error::check_len("image", c.cols(), f_prev.len())?;
    if !(damping.is_finite() && damping >= 0.0) {
        return Err(Error::invalid("damping", "must be finite and non-negative"));
    }
    Ok(NormalSystem {
        c,
        weights: weight_operator(spec, f_prev)?,
        lambda: spec.lambda,
        damping,
        rhs: c.adjoint_matvec(g.as_slice())?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Converged,
    MaxIterations,
    /// Non-positive curvature `pᴴAp`: the operator is not positive definite.
    Breakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub solution: Vec<Complex>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub status: CgStatus,
    /// `‖rᵢ‖ / ‖b‖` after each iteration, starting with the initial residual.
    pub residual_history: Vec<f64>,
    /// Curvature `pᴴAp` at breakdown, if any.
    pub breakdown_curvature: Option<f64>,
}

/// Conjugate gradients for a Hermitian positive definite operator.
///
/// The recursion is restarted from the true residual every `dim` iterations.
pub fn cg_solve<A: HermitianOperator + ?Sized>(
    op: &A,
    rhs: &[Complex],
    x0: Option<&[Complex]>,
    cfg: &WamaConfig,
) -> Result<CgOutcome> {
    cg_solve_observed(op, rhs, x0, cfg, |_, _| {})
}

/// [`cg_solve`] calling `observe(i, xᵢ)` after every iteration.
pub fn cg_solve_observed<A, F>(
    op: &A,
    rhs: &[Complex],
    x0: Option<&[Complex]>,
    cfg: &WamaConfig,
    mut observe: F,
) -> Result<CgOutcome>
where
    A: HermitianOperator + ?Sized,
    F: FnMut(usize, &[Complex]),
{
    cfg.validate()?;
    let n = op.dim();
    Error::check_len("right-hand side", n, rhs.len())?;
    let zero = Complex::new(0.0, 0.0);
    let b_norm = linalg::norm(rhs);
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: vec![zero; n],
            iterations: 0,
            relative_residual: 0.0,
            status: CgStatus::Converged,
            residual_history: vec![0.0],
            breakdown_curvature: None,
        });
    }

    let mut x = match x0 {
        Some(x0) => {
            Error::check_len("initial guess", n, x0.len())?;
            x0.to_vec()
        }
        None => vec![zero; n],
    };
    let mut ap = vec![zero; n];
    let true_residual = |x: &[Complex], ap: &mut [Complex]| -> Vec<Complex> {
        op.apply_into(x, ap);
        rhs.iter().zip(ap.iter()).map(|(b, a)| b - a).collect()
    };
    let mut r = true_residual(&x, &mut ap);
    let mut p = r.clone();
    let mut rs = linalg::norm_sqr(&r);
    let mut history = vec![crate::math::sqrt(rs) / b_norm];
    let mut status = CgStatus::MaxIterations;
    let mut breakdown_curvature = None;
    let mut iterations = 0;

    if history[0] <= cfg.cg_rel_tol {
        status = CgStatus::Converged;
    } else {
        for it in 1..=cfg.cg_max_iters {
            op.apply_into(&p, &mut ap);
            let curvature = linalg::dot(&p, &ap).re;
            if !(curvature.is_finite() && curvature > 0.0) {
                status = CgStatus::Breakdown;
                breakdown_curvature = Some(curvature);
                break;
            }
            let alpha = Complex::new(rs / curvature, 0.0);
            linalg::axpy(alpha, &p, &mut x);
            linalg::axpy(-alpha, &ap, &mut r);
            iterations = it;
            observe(it, &x);

            if it % n == 0 {
                r = true_residual(&x, &mut ap);
                p.copy_from_slice(&r);
                rs = linalg::norm_sqr(&r);
            } else {
                let rs_new = linalg::norm_sqr(&r);
                let beta = rs_new / rs;
                for (pi, ri) in p.iter_mut().zip(&r) {
                    *pi = ri + *pi * beta;
                }
                rs = rs_new;
            }
            let rel = crate::math::sqrt(rs) / b_norm;
            history.push(rel);
            if rel <= cfg.cg_rel_tol {
                status = CgStatus::Converged;
                break;
            }
        }
    }

    Ok(CgOutcome {
        solution: x,
        iterations,
        relative_residual: *history.last().expect("non-empty"),
        status,
        residual_history: history,
        breakdown_curvature,
    })
}

/// Largest normalised asymmetry `|⟨Av, w⟩ − ⟨v, Aw⟩| / (‖v‖‖w‖)` over
/// `trials` random probe pairs.
pub fn hermitian_defect<A: HermitianOperator + ?Sized>(op: &A, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = op.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mut draw = || -> Vec<Complex> {
            (0..n)
                .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        };
        let v = draw();
        let w = draw();
        let lhs = linalg::dot(&op.apply(&v), &w);
        let rhs = linalg::dot(&v, &op.apply(&w));
        worst = worst.max(linalg::abs(lhs - rhs) / (linalg::norm(&v) * linalg::norm(&w)));
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct WamaStep {
    pub image: ComplexImage,
    /// CG iterations summed over the fixed-point steps.
    pub cg_iterations: usize,
    pub cg_status: CgStatus,
    pub cg_relative_residual: f64,
    /// `‖[CᴴC + λW(f)] f − Cᴴg‖ / ‖Cᴴg‖` at the returned image.
    pub fixed_point_residual: f64,
}

/// One image update: `fixed_point_steps` frozen-weight solves, each warm
/// started from the previous image.
pub fn wama_f_step(
    c: &ObservationMatrix,
    g: &PhaseHistory,
    f_prev: &ComplexImage,
    spec: &RegularizerSpec,
    cfg: &WamaConfig,
) -> Result<WamaStep> {
    cfg.validate()?;
    let mut f = f_prev.clone();
    let mut cg_iterations = 0;
    let mut last = None;
    for _ in 0..cfg.fixed_point_steps {
        let system = assemble_normal_system(c, g, &f, spec, cfg.damping)?;
        let out = cg_solve(&system, system.rhs(), Some(f.as_slice()), cfg)?;
        cg_iterations += out.iterations;
        if out.status == CgStatus::Breakdown {
            return Err(Error::CgBreakdown {
                iteration: out.iterations + 1,
                curvature: out.breakdown_curvature.unwrap_or(f64::NAN),
            });
        }
        f = f.with_data(out.solution)?;
        last = Some((out.status, out.relative_residual));
    }
    let (cg_status, cg_relative_residual) = last.expect("at least one fixed-point step");

    let system = assemble_normal_system(c, g, &f, spec, cfg.damping)?;
    let applied = system.apply(f.as_slice());
    let b_norm = linalg::norm(system.rhs());
    let gap = linalg::norm(&linalg::sub(&applied, system.rhs()));
    let fixed_point_residual = if b_norm > 0.0 { gap / b_norm } else { gap };

    Ok(WamaStep {
        image: f,
        cg_iterations,
        cg_status,
        cg_relative_residual,
        fixed_point_residual,
    })
}
