//! Alternating minimisation of `J(f, φ) = ‖g − C(φ) f‖² + λ R(f)`.
//!
//! Each outer iteration runs one image update with the chosen engine against
//! the current corrupted matrix `C(φ⁽ⁿ⁾)`, then replaces every aperture phase
//! by its closed-form minimiser and re-rotates the clean matrix.
//! Iteration starts from `f⁽⁰⁾ = Cᴴ g`, `φ⁽⁰⁾ = 0` and stops when
//! `n ≥ outer_max_iters` or `‖f⁽ⁿ⁺¹⁾ − f⁽ⁿ⁾‖ / ‖f⁽ⁿ⁾‖ ≤ outer_rel_tol`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::cfba::{cfba_inner, CfbaConfig};
use crate::error::{Error, Result};
use crate::forward_model::{
    adjoint_image, apply_phase_error, rotate_blocks_into, ComplexImage, ObservationMatrix, PhaseErrorVector,
    PhaseHistory,
};
use crate::linalg;
use crate::math;
use crate::regularizers::{penalty_value, RegularizerSpec};
use crate::wama::{wama_f_step, WamaConfig};
use crate::Complex;

/// Image-update engine together with its configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    Cfba(CfbaConfig),
    Wama(WamaConfig),
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Cfba(_) => "cfba",
            Engine::Wama(_) => "wama",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutofocusConfig {
    pub engine: Engine,
    pub outer_max_iters: usize,
    pub outer_rel_tol: f64,
    pub spec: RegularizerSpec,
    /// Optional search over cross-range shift hypotheses once the
    /// alternation has converged.
    pub shift_search: Option<ShiftSearch>,
}

/// Cross-range shift hypotheses tried after convergence.
///
/// Shifting the scene by `k` columns while adding `k·ramp` to the phases
/// (see [`crate::forward_model::cross_range_shift_ramp`]) leaves the data
/// almost unchanged, so the alternation can settle on a translated copy of
/// the scene. Each hypothesis `φ̂ + k·ramp` is restarted from `C(φ)ᴴg`,
/// polished for `polish_iters` outer iterations, and adopted if its cost is
/// lower; the alternation then resumes from the winner. Every accepted move
/// lowers `J`, so the cost trace stays nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSearch {
    pub ramp: Vec<f64>,
    pub max_shift: usize,
    pub polish_iters: usize,
}
impl AutofocusConfig {
    pub const DEFAULT_OUTER_MAX_ITERS: usize = 300;
    pub const DEFAULT_OUTER_REL_TOL: f64 = 1e-3;

    pub fn new(engine: Engine, spec: RegularizerSpec) -> Self {
        Self {
            engine,
            outer_max_iters: Self::DEFAULT_OUTER_MAX_ITERS,
            outer_rel_tol: Self::DEFAULT_OUTER_REL_TOL,
            spec,
            shift_search: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer_max_iters == 0 {
            return Err(Error::invalid("outer_max_iters", "must be at least 1"));
        }
        if !(self.outer_rel_tol.is_finite() && self.outer_rel_tol > 0.0) {
            return Err(Error::invalid("outer_rel_tol", "must be finite and strictly positive"));
        }
        if let Some(search) = &self.shift_search {
            if search.ramp.iter().any(|r| !r.is_finite()) {
                return Err(Error::invalid("shift_search.ramp", "must be finite"));
            }
            if search.polish_iters == 0 {
                return Err(Error::invalid("shift_search.polish_iters", "must be at least 1"));
            }
        }
        match &self.engine {
            Engine::Cfba(cfg) => cfg.validate(&self.spec),
            Engine::Wama(cfg) => {
                self.spec.validate()?;
                cfg.validate()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub n: usize,
    /// `J(f⁽ⁿ⁾, φ⁽ⁿ⁾)`
    pub cost: f64,
    /// `‖f⁽ⁿ⁾ − f⁽ⁿ⁻¹⁾‖ / ‖f⁽ⁿ⁻¹⁾‖`; `None` for `n = 0`.
    pub rel_change: Option<f64>,
    /// Inner iterations (CFBA steps or CG iterations) spent producing `f⁽ⁿ⁾`.
    pub inner_iterations: usize,
    /// Seconds since the start of the run; only recorded with the `std` feature.
    pub elapsed_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostTrace {
    pub entries: Vec<TraceEntry>,
}

impl CostTrace {
    pub fn costs(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.cost).collect()
    }

    /// Largest relative increase `(J⁽ⁿ⁺¹⁾ − J⁽ⁿ⁾) / |J⁽ⁿ⁾|`; negative or zero
    /// for a nonincreasing trace.
    pub fn max_relative_increase(&self) -> f64 {
        self.entries
            .windows(2)
            .map(|w| (w[1].cost - w[0].cost) / w[0].cost.abs().max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_nonincreasing(&self, slack: f64) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[1].cost <= w[0].cost + slack * w[0].cost.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutofocusResult {
    pub f_hat: ComplexImage,
    pub phi_hat: PhaseErrorVector,
    pub trace: CostTrace,
    /// The relative-change criterion fired before the iteration budget ran out.
    pub converged: bool,
    pub iterations: usize,
}

/// Snapshot handed to the observer of [`run_autofocus_observed`] after the
/// initial point and after every outer iteration.
#[derive(Debug, Clone, Copy)]
pub struct IterationState<'a> {
    pub n: usize,
    pub f: &'a ComplexImage,
    pub phi: &'a PhaseErrorVector,
    /// `‖g − C(φ⁽ⁿ⁾) f⁽ⁿ⁾‖²`
    pub fidelity: f64,
    pub cost: f64,
}

/// Per-aperture minimiser of `‖g_m − e^{jφ} C_m f‖²`: the angle of
/// `(C_m f)ᴴ g_m`, or 0 where `C_m f` vanishes.
pub fn phase_update(c_clean: &ObservationMatrix, g: &PhaseHistory, f: &ComplexImage) -> Result<PhaseErrorVector> {
    Ok(phase_update_with_fidelity(c_clean, g, f)?.0)
}

/// [`phase_update`] together with the fidelity `‖g − C(φ̂) f‖²` at the new
/// phases, sharing the single product `C f`.
fn phase_update_with_fidelity(
    c_clean: &ObservationMatrix,
    g: &PhaseHistory,
    f: &ComplexImage,
) -> Result<(PhaseErrorVector, f64)> {
    Error::check_len("phase history", c_clean.rows(), g.len())?;
    let projected = c_clean.matvec(f.as_slice())?;
    let k = c_clean.block_len();
    let mut angles = Vec::with_capacity(c_clean.blocks());
    let mut fidelity = 0.0;
    for (y, gm) in projected.chunks_exact(k).zip(g.as_slice().chunks_exact(k)) {
        let inner = linalg::dot(y, gm);
        let angle = if inner == Complex::new(0.0, 0.0) {
            0.0
        } else {
            math::atan2(inner.im, inner.re)
        };
        let rot = math::cis(angle);
        fidelity += y.iter().zip(gm).map(|(a, b)| (b - rot * a).norm_sqr()).sum::<f64>();
        angles.push(angle);
    }
    Ok((PhaseErrorVector::new(angles), fidelity))
}

/// `C(φ)` built from the clean matrix.
pub fn update_corrupted_matrix(c_clean: &ObservationMatrix, phi: &PhaseErrorVector) -> Result<ObservationMatrix> {
    apply_phase_error(c_clean, phi)
}

/// Circular mean `c` of `φ̂_m − φ_m`: the global gauge constant that best
/// aligns an estimate with a reference.
pub fn global_phase_offset(phi_hat: &PhaseErrorVector, phi_ref: &PhaseErrorVector) -> Result<f64> {
    Error::check_len("phase error vector", phi_ref.len(), phi_hat.len())?;
    let sum: Complex = phi_hat
        .angles()
        .iter()
        .zip(phi_ref.angles())
        .map(|(a, b)| math::cis(a - b))
        .sum();
    Ok(if sum == Complex::new(0.0, 0.0) {
        0.0
    } else {
        math::atan2(sum.im, sum.re)
    })
}

/// `wrap(φ̂_m − c − φ_m)` with `c` from [`global_phase_offset`].
pub fn aligned_phase_residuals(phi_hat: &PhaseErrorVector, phi_ref: &PhaseErrorVector) -> Result<Vec<f64>> {
    let c = global_phase_offset(phi_hat, phi_ref)?;
    Ok(phi_hat
        .angles()
        .iter()
        .zip(phi_ref.angles())
        .map(|(a, b)| linalg::wrap_angle(a - c - b))
        .collect())
}

/// `max_m |wrap(φ̂_m − c − φ_m)|` after removing the global constant.
pub fn max_aligned_phase_error(phi_hat: &PhaseErrorVector, phi_ref: &PhaseErrorVector) -> Result<f64> {
    Ok(aligned_phase_residuals(phi_hat, phi_ref)?
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max))
}

#[cfg(feature = "std")]
struct Clock(std::time::Instant);

#[cfg(feature = "std")]
impl Clock {
    fn start() -> Self {
        Self(std::time::Instant::now())
    }

    fn elapsed(&self) -> Option<f64> {
        Some(self.0.elapsed().as_secs_f64())
    }
}

#[cfg(not(feature = "std"))]
struct Clock;

#[cfg(not(feature = "std"))]
impl Clock {
    fn start() -> Self {
        Clock
    }

    fn elapsed(&self) -> Option<f64> {
        None
    }
}

pub fn run_autofocus(c_clean: &ObservationMatrix, g: &PhaseHistory, cfg: &AutofocusConfig) -> Result<AutofocusResult> {
    run_autofocus_observed(c_clean, g, cfg, |_| {})
}

/// Current iterate of the alternation.
struct Iterate {
    f: ComplexImage,
    phi: PhaseErrorVector,
    c_phi: ObservationMatrix,
    fidelity: f64,
    cost: f64,
}

impl Iterate {
    /// `f = C(φ)ᴴ g` at the given phases.
    fn start(c_clean: &ObservationMatrix, g: &PhaseHistory, spec: &RegularizerSpec, phi: PhaseErrorVector) -> Result<Self> {
        let c_phi = apply_phase_error(c_clean, &phi)?;
        let f = adjoint_image(&c_phi, g)?;
        let fidelity = linalg::distance_sqr(&c_phi.matvec(f.as_slice())?, g.as_slice());
        let cost = fidelity + penalty_value(spec, &f)?;
        Ok(Self {
            f,
            phi,
            c_phi,
            fidelity,
            cost,
        })
    }

    /// One image step followed by one phase step. Returns the relative image
    /// change and the inner iteration count.
    fn advance(&mut self, c_clean: &ObservationMatrix, g: &PhaseHistory, cfg: &AutofocusConfig) -> Result<(f64, usize)> {
        let spec = &cfg.spec;
        let (f_next, inner) = match &cfg.engine {
            Engine::Cfba(engine) => {
                let out = cfba_inner(&self.c_phi, g, &self.f, spec, engine)?;
                (out.image, out.iterations)
            }
            Engine::Wama(engine) => {
                let out = wama_f_step(&self.c_phi, g, &self.f, spec, engine)?;
                (out.image, out.cg_iterations)
            }
        };
        let (phi_next, fidelity) = phase_update_with_fidelity(c_clean, g, &f_next)?;
        rotate_blocks_into(c_clean, &phi_next, &mut self.c_phi)?;
        self.cost = fidelity + penalty_value(spec, &f_next)?;
        self.fidelity = fidelity;
        let rel_change = linalg::relative_change(f_next.as_slice(), self.f.as_slice());
        self.f = f_next;
        self.phi = phi_next;
        Ok((rel_change, inner))
    }
}

/// [`run_autofocus`] reporting every iterate to `observe`.
pub fn run_autofocus_observed<F>(
    c_clean: &ObservationMatrix,
    g: &PhaseHistory,
    cfg: &AutofocusConfig,
    mut observe: F,
) -> Result<AutofocusResult>
where
    F: FnMut(IterationState<'_>),
{
    cfg.validate()?;
    Error::check_len("phase history", c_clean.rows(), g.len())?;
    if let Some(search) = &cfg.shift_search {
        Error::check_len("shift ramp", c_clean.blocks(), search.ramp.len())?;
    }
    let clock = Clock::start();
    let mut state = Iterate::start(c_clean, g, &cfg.spec, PhaseErrorVector::zeros(c_clean.blocks()))?;
    let mut trace = CostTrace::default();
    let mut record = |state: &Iterate, n: usize, rel_change: Option<f64>, inner_iterations: usize, trace: &mut CostTrace| {
        trace.entries.push(TraceEntry {
            n,
            cost: state.cost,
            rel_change,
            inner_iterations,
            elapsed_s: clock.elapsed(),
        });
        observe(IterationState {
            n,
            f: &state.f,
            phi: &state.phi,
            fidelity: state.fidelity,
            cost: state.cost,
        });
    };
    record(&state, 0, None, 0, &mut trace);

    let mut n = 0;
    let mut converged = false;
    let mut searched = false;
    while n < cfg.outer_max_iters {
        let (rel_change, inner) = state.advance(c_clean, g, cfg).map_err(|e| outer_error(n + 1, e))?;
        n += 1;
        record(&state, n, Some(rel_change), inner, &mut trace);
        converged = rel_change <= cfg.outer_rel_tol;
        if !converged {
            continue;
        }
        let Some(search) = cfg.shift_search.as_ref().filter(|_| !searched) else {
            break;
        };
        searched = true;
        if let Some(better) = search_shifts(c_clean, g, cfg, search, &state).map_err(|e| outer_error(n + 1, e))? {
            let rel_change = linalg::relative_change(better.f.as_slice(), state.f.as_slice());
            state = better;
            n += 1;
            record(&state, n, Some(rel_change), 0, &mut trace);
            converged = false;
        } else {
            break;
        }
    }

    Ok(AutofocusResult {
        f_hat: state.f,
        phi_hat: state.phi,
        trace,
        converged,
        iterations: n,
    })
}

fn outer_error(iteration: usize, source: Error) -> Error {
    Error::Outer {
        iteration,
        source: Box::new(source),
    }
}

/// Restart the alternation from `φ̂ + k·ramp` for every `k` in
/// `±1 … ±max_shift`, polish each hypothesis briefly, and return the lowest
/// cost iterate if it improves on `current`.
fn search_shifts(
    c_clean: &ObservationMatrix,
    g: &PhaseHistory,
    cfg: &AutofocusConfig,
    search: &ShiftSearch,
    current: &Iterate,
) -> Result<Option<Iterate>> {
    let mut best: Option<Iterate> = None;
    for k in 1..=search.max_shift as i64 {
        for shift in [k, -k] {
            let angles = current
                .phi
                .angles()
                .iter()
                .zip(&search.ramp)
                .map(|(a, r)| a + shift as f64 * r)
                .collect();
            let mut candidate = Iterate::start(c_clean, g, &cfg.spec, PhaseErrorVector::new(angles))?;
            for _ in 0..search.polish_iters {
                let (rel_change, _) = candidate.advance(c_clean, g, cfg)?;
                if rel_change <= cfg.outer_rel_tol {
                    break;
                }
            }
            let threshold = best.as_ref().map_or(current.cost, |b| b.cost);
            if candidate.cost < threshold {
                best = Some(candidate);
            }
        }
    }
    Ok(best)
}

/// Default Cauchy shape for autofocus runs: the smallest `γ` that keeps the
/// forward–backward objective monotone at step `μ = 0.9/L`.
pub fn descent_safe_gamma(lambda: f64, lipschitz: f64) -> f64 {
    // λ/(4γ²) ≤ 0.22 L
    math::sqrt(lambda / (0.88 * lipschitz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::cfba::estimate_lipschitz;
    use crate::forward_model::{build_observation_matrix, simulate_phase_history, PhaseErrorModel, RadarParams, SceneGrid};
    use crate::regularizers::{auxiliary_b_star, k_value, AuxiliaryB, Penalty};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sar(size: usize) -> ObservationMatrix {
        let params = RadarParams::default();
        let grid = SceneGrid::matched(&params, size, size).unwrap();
        build_observation_matrix(&params, &grid).unwrap()
    }

    fn sparse_scene(size: usize, seed: u64) -> ComplexImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mags: Vec<f64> = (0..size * size)
            .map(|_| if rng.random_bool(0.1) { 1.0 } else { 0.0 })
            .collect();
        ComplexImage::from_magnitudes(size, size, &mags).unwrap()
    }

    fn random_block(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex> {
        (0..n)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn aligned_data_gives_zero_phase() {
        let c = sar(4);
        let f = sparse_scene(4, 1);
        let g = PhaseHistory::new(c.matvec(f.as_slice()).unwrap());
        let phi = phase_update(&c, &g, &f).unwrap();
        assert!(phi.angles().iter().all(|a| a.abs() < 1e-12));
    }

    #[test]
    fn exact_rotation_is_recovered() {
        let c = sar(4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = ComplexImage::new(4, 4, random_block(&mut rng, 16)).unwrap();
        let thetas = [core::f64::consts::FRAC_PI_2, -core::f64::consts::FRAC_PI_2, 0.3, -2.9];
        let phi = PhaseErrorVector::new(thetas.to_vec());
        let g = simulate_phase_history(&c, &f, &phi, 0.0, 0).unwrap();
        let est = phase_update(&c, &g, &f).unwrap();
        for (a, b) in est.angles().iter().zip(thetas) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn matches_grid_search_on_noisy_data() {
        let c = sar(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = ComplexImage::new(4, 4, random_block(&mut rng, 16)).unwrap();
        let g = PhaseHistory::new(random_block(&mut rng, 16));
        let est = phase_update(&c, &g, &f).unwrap();
        let y = c.matvec(f.as_slice()).unwrap();
        let steps = 1_000_000;
        for m in 0..4 {
            let (ym, gm) = (&y[m * 4..m * 4 + 4], &g.samples[m * 4..m * 4 + 4]);
            let mut best = (f64::INFINITY, 0.0);
            for i in 0..steps {
                let phi = -core::f64::consts::PI + 2.0 * core::f64::consts::PI * i as f64 / steps as f64;
                let rot = Complex::from_polar(1.0, phi);
                let v: f64 = ym.iter().zip(gm).map(|(a, b)| (b - rot * a).norm_sqr()).sum();
                if v < best.0 {
                    best = (v, phi);
                }
            }
            let diff = linalg::wrap_angle(est.angles()[m] - best.1).abs();
            assert!(diff < 1e-5, "aperture {m}: {diff}");
        }
    }

    #[test]
    fn zero_projection_gives_zero_phase() {
        let c = sar(4);
        let g = PhaseHistory::new(vec![Complex::new(1.0, 1.0); 16]);
        let phi = phase_update(&c, &g, &ComplexImage::zeros(4, 4)).unwrap();
        assert!(phi.angles().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn phase_step_never_increases_fidelity() {
        let c = sar(4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let f = ComplexImage::new(4, 4, random_block(&mut rng, 16)).unwrap();
            let g = PhaseHistory::new(random_block(&mut rng, 16));
            let old = PhaseErrorVector::new((0..4).map(|_| rng.random_range(-3.0..3.0)).collect());
            let before = linalg::distance_sqr(&apply_phase_error(&c, &old).unwrap().matvec(f.as_slice()).unwrap(), g.as_slice());
            let (phi, after) = phase_update_with_fidelity(&c, &g, &f).unwrap();
            let direct = linalg::distance_sqr(&apply_phase_error(&c, &phi).unwrap().matvec(f.as_slice()).unwrap(), g.as_slice());
            assert!((after - direct).abs() < 1e-10 * direct.max(1.0));
            assert!(after <= before);
        }
    }

    #[test]
    fn gauge_leaves_fidelity_invariant() {
        let c = sar(4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = ComplexImage::new(4, 4, random_block(&mut rng, 16)).unwrap();
        let g = PhaseHistory::new(random_block(&mut rng, 16));
        let phi = PhaseErrorVector::new((0..4).map(|_| rng.random_range(-3.0..3.0)).collect());
        let shift = 1.1;
        let f2 = f.with_data(linalg::scale(math::cis(shift), f.as_slice())).unwrap();
        let phi2 = PhaseErrorVector::new(phi.angles().iter().map(|a| a - shift).collect());
        let a = linalg::distance_sqr(&apply_phase_error(&c, &phi).unwrap().matvec(f.as_slice()).unwrap(), g.as_slice());
        let b = linalg::distance_sqr(&apply_phase_error(&c, &phi2).unwrap().matvec(f2.as_slice()).unwrap(), g.as_slice());
        assert!((a - b).abs() < 1e-10 * a);
        assert!(max_aligned_phase_error(&phi2, &phi).unwrap() < 1e-12);
    }

    #[test]
    fn global_offset_handles_wraparound() {
        let truth = PhaseErrorVector::new(vec![3.0, -3.0, 0.5]);
        let est = PhaseErrorVector::new(truth.angles().iter().map(|a| a + 0.4).collect());
        assert!((global_phase_offset(&est, &truth).unwrap() - 0.4).abs() < 1e-12);
        assert!(max_aligned_phase_error(&est, &truth).unwrap() < 1e-12);
    }

    fn cfba_config(c: &ObservationMatrix, lambda: f64) -> AutofocusConfig {
        let l = estimate_lipschitz(c, 100, 0).unwrap().value;
        let spec = RegularizerSpec::cauchy(descent_safe_gamma(lambda, l), lambda).unwrap();
        AutofocusConfig::new(Engine::Cfba(CfbaConfig::from_lipschitz(l, 0.9)), spec)
    }

    #[test]
    fn zero_phase_error_stays_near_zero_with_wama() {
        let c = sar(8);
        let f = sparse_scene(8, 6);
        let g = PhaseHistory::new(c.matvec(f.as_slice()).unwrap());
        let spec = RegularizerSpec::cauchy(0.5, 0.1).unwrap();
        let cfg = AutofocusConfig::new(Engine::Wama(WamaConfig::default()), spec);
        let out = run_autofocus(&c, &g, &cfg).unwrap();
        assert!(out.converged);
        let zero = PhaseErrorVector::zeros(8);
        let worst = max_aligned_phase_error(&out.phi_hat, &zero).unwrap();
        assert!(worst < 1e-3, "max phase {worst}");
        assert!(out.phi_hat.angles().iter().all(|a| a.abs() < 1e-3));
    }

    #[test]
    fn cost_trace_descends_for_both_engines() {
        let c = sar(8);
        let f = sparse_scene(8, 7);
        let phi = PhaseErrorModel::Uniform.generate(8, 3).unwrap();
        let g = simulate_phase_history(&c, &f, &phi, 0.05, 4).unwrap();
        let lambda = 2.0;
        let cfba = cfba_config(&c, lambda);
        let wama = AutofocusConfig::new(Engine::Wama(WamaConfig::default()), cfba.spec);
        for cfg in [cfba, wama] {
            let out = run_autofocus(&c, &g, &cfg).unwrap();
            assert!(
                out.trace.is_nonincreasing(1e-9),
                "{}: max relative increase {}",
                cfg.engine.name(),
                out.trace.max_relative_increase()
            );
            assert_eq!(out.trace.entries.len(), out.iterations + 1);
            assert!(out.phi_hat.angles().iter().all(|a| (-core::f64::consts::PI..core::f64::consts::PI).contains(a)));
        }
    }

    #[test]
    fn observer_costs_match_independent_evaluation() {
        let c = sar(4);
        let f = sparse_scene(4, 8);
        let phi = PhaseErrorModel::Uniform.generate(4, 1).unwrap();
        let g = simulate_phase_history(&c, &f, &phi, 0.01, 2).unwrap();
        let cfg = cfba_config(&c, 1.0);
        let mut seen = 0;
        run_autofocus_observed(&c, &g, &cfg, |state| {
            let j = crate::metrics::cost_j(&c, state.phi, state.f, &g, &cfg.spec).unwrap();
            assert!((j - state.cost).abs() < 1e-9 * j.abs());
            seen += 1;
        })
        .unwrap();
        assert!(seen >= 2);
    }

    #[test]
    fn half_quadratic_function_descends_under_wama() {
        let c = sar(8);
        let f = sparse_scene(8, 9);
        let phi = PhaseErrorModel::Uniform.generate(8, 5).unwrap();
        let g = simulate_phase_history(&c, &f, &phi, 0.05, 6).unwrap();
        for spec in [
            RegularizerSpec::cauchy(0.3, 2.0).unwrap(),
            // δ on the scale of |Cᴴg| so the Welsh weights stay representable at f⁽⁰⁾
            RegularizerSpec::new(Penalty::Welsh { delta: 8.0 }, 2.0).unwrap(),
            RegularizerSpec::new(Penalty::GemanMcClure { delta: 8.0 }, 2.0).unwrap(),
            RegularizerSpec::new(Penalty::ApproxLp { p: 1.0, beta: 0.01 }, 2.0).unwrap(),
        ] {
            let mut cfg = AutofocusConfig::new(Engine::Wama(WamaConfig::default()), spec);
            cfg.outer_max_iters = 25;
            // K(b⁽ⁿ⁾, f⁽ⁿ⁾, φ⁽ⁿ⁾) with b⁽ⁿ⁾ = b*(f⁽ⁿ⁻¹⁾), b⁽⁰⁾ = b*(f⁽⁰⁾)
            let mut prev_f: Option<ComplexImage> = None;
            let mut ks = Vec::new();
            run_autofocus_observed(&c, &g, &cfg, |state| {
                let b: AuxiliaryB = auxiliary_b_star(&spec, prev_f.as_ref().unwrap_or(state.f)).unwrap();
                ks.push(k_value(&spec, &b, state.f, state.fidelity).unwrap());
                prev_f = Some(state.f.clone());
            })
            .unwrap();
            for w in ks.windows(2) {
                assert!(w[1] <= w[0] + 1e-9 * w[0].abs(), "{}: {} → {}", spec.penalty.name(), w[0], w[1]);
            }
        }
    }

    #[test]
    fn config_rejects_cfba_with_other_penalties() {
        let spec = RegularizerSpec::new(Penalty::Welsh { delta: 1.0 }, 1.0).unwrap();
        let cfg = AutofocusConfig::new(Engine::Cfba(CfbaConfig::from_lipschitz(1.0, 0.9)), spec);
        assert!(cfg.validate().is_err());
        let mut ok = AutofocusConfig::new(Engine::Wama(WamaConfig::default()), spec);
        assert!(ok.validate().is_ok());
        ok.outer_max_iters = 0;
        assert!(ok.validate().is_err());
    }
}
