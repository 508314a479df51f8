//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines appear in `cargo test` output; exits non-zero if any fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sarfocus::config::{EngineKind, ExperimentConfig};
use sarfocus::experiment::Experiment;
use sarfocus::run_experiment;
use sarfocus_core::autofocus::run_autofocus;
use sarfocus_core::cfba::{
    cfba_iterates, estimate_lipschitz, lift_real, lift_vector, run_lifted_fb, unlift_vector, wirtinger_grad_fidelity,
    CfbaConfig,
};
use sarfocus_core::forward_model::{apply_phase_error, build_observation_matrix, simulate_phase_history};
use sarfocus_core::metrics::{cost_j, fidelity};
use sarfocus_core::regularizers::{
    auxiliary_b_star, cauchy_envelope, cauchy_prox_magnitude, k_value, penalty_value, tv_weight_operator,
    AuxiliaryB, DifferenceMatrix,
};
use sarfocus_core::wama::{cg_solve_observed, DenseOperator, WamaConfig};
use sarfocus_core::{
    linalg, Complex, ComplexImage, ObservationMatrix, Penalty, PhaseErrorVector, PhaseHistory, RadarParams,
    RegularizerSpec, SceneGrid,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn random_complex(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Complex> {
    (0..n)
        .map(|_| Complex::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
        .collect()
}

fn sar_matrix(size: usize) -> ObservationMatrix {
    let params = RadarParams::default();
    build_observation_matrix(&params, &SceneGrid::matched(&params, size, size).unwrap()).unwrap()
}

/// Argmin of the convex prox envelope on the `step` lattice of `[0, x]`:
/// a coarse pass locates the basin, a fine pass scans it at full resolution.
fn lattice_argmin(x: f64, gamma: f64, ml: f64, step: f64) -> f64 {
    let scan = |lo: f64, hi: f64, h: f64| {
        let n = ((hi - lo) / h).round() as usize;
        (0..=n)
            .map(|i| (lo + i as f64 * h).min(x))
            .map(|y| (cauchy_envelope(y, x, gamma, ml), y))
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a })
            .1
    };
    let coarse = 1e3 * step;
    let centre = scan(0.0, x, coarse);
    let lo = ((centre - coarse) / step).floor().max(0.0) * step;
    scan(lo, (centre + coarse).min(x), step)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_gap, mut worst_stat) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let x = rng.random_range(0.0..=10.0);
        let ml = rng.random_range(0.0..4.0);
        let gamma = 0.5 * f64::sqrt(ml) + rng.random_range(0.0..3.0);
        let gamma = gamma.max(1e-3);
        let y = cauchy_prox_magnitude(x, gamma, ml).unwrap();
        worst_gap = worst_gap.max((y - lattice_argmin(x, gamma, ml, 1e-6)).abs());
        // derivative of ½(x − y)² − μλ ln(γ/(γ² + y²))
        let stat = if y > 0.0 { (y - x + 2.0 * ml * y / (gamma * gamma + y * y)).abs() } else { 0.0 };
        worst_stat = worst_stat.max(stat);
    }
    Outcome::new(
        worst_gap < 1e-4 && worst_stat < 1e-8,
        format!("max |closed form − grid| {worst_gap:.2e}, max stationarity residual {worst_stat:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let size = 8;
    let c = sar_matrix(size);
    let scene = sarfocus::scenes::make_builtin_scene("points", size).unwrap();
    let phi = PhaseErrorVector::new((0..size).map(|m| 0.4 * m as f64 - 1.0).collect());
    let c_phi = apply_phase_error(&c, &phi).unwrap();
    let g = simulate_phase_history(&c_phi, &scene, &PhaseErrorVector::zeros(size), 0.05, 3).unwrap();
    let l = estimate_lipschitz(&c_phi, 200, 0).unwrap().value;
    let lambda = 0.05 * l;
    let spec = RegularizerSpec::cauchy((lambda / l).sqrt(), lambda).unwrap();
    let cfg = CfbaConfig::from_lipschitz(l, 0.9);
    let f0 = ComplexImage::zeros(size, size);
    let complex = cfba_iterates(&c_phi, &g, &f0, &spec, &cfg, 50).unwrap();
    let lift = lift_real(&c_phi);
    let real = run_lifted_fb(&lift, &lift_vector(g.as_slice()), &lift_vector(f0.as_slice()), &spec, cfg.mu, 50).unwrap();
    let worst = complex
        .iter()
        .zip(&real)
        .map(|(o, u)| linalg::norm(&linalg::sub(o, &unlift_vector(u))))
        .fold(0.0, f64::max);
    Outcome::new(
        complex.len() == 51 && real.len() == 51 && worst < 1e-8,
        format!("max iterate discrepancy over 50 iterations {worst:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for (scene, size) in [("points", 32), ("blocks", 32), ("constant", 16)] {
        let mut cfg = ExperimentConfig::default();
        cfg.scene.builtin = Some(scene.into());
        cfg.scene.size = size;
        cfg.autofocus.shift_search = false;
        let exp = Experiment::prepare(cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let sim = exp.simulate(dir.path()).unwrap();
        for kind in [EngineKind::Cfba, EngineKind::Wama] {
            let af = exp.config.autofocus_config(kind, exp.lipschitz, &exp.ramp).unwrap();
            let result = run_autofocus(&exp.matrix, &sim.g, &af).unwrap();
            let ok = result.trace.is_nonincreasing(1e-9);
            pass &= ok;
            details.push(format!(
                "{scene}/{}: {} iters, max rel increase {:.1e}",
                kind.name(),
                result.iterations,
                result.trace.max_relative_increase()
            ));
        }
    }
    Outcome::new(pass, details.join("; "))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn run_seed(seed: u64, noiseless: bool, shift_search: bool, dir: &Path) -> sarfocus::Report {
    let mut cfg = ExperimentConfig::default();
    cfg.reseed(seed);
    cfg.autofocus.shift_search = shift_search;
    if noiseless {
        cfg.noise.snr_db = None;
        cfg.noise.sigma = Some(0.0);
    }
    run_experiment(cfg, dir).unwrap()
}

fn criterion_4() -> Outcome {
    let mut ratios = [Vec::new(), Vec::new()];
    let mut every_seed = true;
    for seed in SEEDS {
        let dir = tempfile::tempdir().unwrap();
        let report = run_seed(seed, false, true, dir.path());
        let base = report.row("baseline").unwrap().eval.mse;
        for (i, name) in ["cfba", "wama"].iter().enumerate() {
            let mse = report.row(name).unwrap().eval.mse;
            every_seed &= mse < base;
            ratios[i].push(base / mse);
        }
    }
    let fmt = |v: &[f64]| v.iter().map(|r| format!("{r:.1}")).collect::<Vec<_>>().join(",");
    let (mc, mw) = (median(ratios[0].clone()), median(ratios[1].clone()));
    Outcome::new(
        every_seed && mc >= 5.0 && mw >= 5.0,
        format!(
            "baseline/engine MSE ratios cfba [{}] median {mc:.1}, wama [{}] median {mw:.1}",
            fmt(&ratios[0]),
            fmt(&ratios[1])
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for seed in SEEDS {
        let dir = tempfile::tempdir().unwrap();
        let report = run_seed(seed, true, true, dir.path());
        let c = report.row("cfba").unwrap().max_phase_error_rad;
        let w = report.row("wama").unwrap().max_phase_error_rad;
        pass &= c.min(w) < 0.05;
        details.push(format!("seed {seed}: cfba {c:.4} wama {w:.4}"));
    }
    Outcome::new(pass, format!("max aligned phase error (rad) {}", details.join("; ")))
}

fn criterion_6() -> Outcome {
    let c = sar_matrix(4);
    let specs = [
        RegularizerSpec::cauchy(0.7, 1.3).unwrap(),
        RegularizerSpec::new(Penalty::Welsh { delta: 0.8 }, 0.9).unwrap(),
        RegularizerSpec::new(Penalty::GemanMcClure { delta: 0.6 }, 2.0).unwrap(),
        RegularizerSpec::new(Penalty::ApproxLp { p: 1.0, beta: 0.05 }, 1.1).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut worst_identity, mut violations) = (0.0f64, 0usize);
    for _ in 0..100 {
        let f = ComplexImage::new(4, 4, random_complex(&mut rng, 16, 2.0)).unwrap();
        let phi = PhaseErrorVector::new((0..4).map(|_| rng.random_range(-3.0..3.0)).collect());
        let g = PhaseHistory::new(random_complex(&mut rng, 16, 5.0));
        let fid = fidelity(&c, &phi, &f, &g).unwrap();
        for spec in &specs {
            let j = cost_j(&c, &phi, &f, &g, spec).unwrap();
            let b_star = auxiliary_b_star(spec, &f).unwrap();
            let k_star = k_value(spec, &b_star, &f, fid).unwrap();
            worst_identity = worst_identity.max((k_star - j).abs() / j.abs().max(f64::MIN_POSITIVE));
            for _ in 0..100 {
                let b = AuxiliaryB::new(b_star.values().iter().map(|&v| v * rng.random_range(0.1..10.0)).collect())
                    .unwrap();
                if k_value(spec, &b, &f, fid).unwrap() < k_star - 1e-12 * k_star.abs() {
                    violations += 1;
                }
            }
        }
    }
    Outcome::new(
        worst_identity < 1e-10 && violations == 0,
        format!("max |K(b*) − J|/|J| {worst_identity:.2e}, {violations} perturbations below K(b*)"),
    )
}

fn criterion_7() -> Outcome {
    let n = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let (mut bound_violations, mut worst_solve, mut worst_slack) = (0usize, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let b = DMatrix::from_vec(n, n, random_complex(&mut rng, n * n, 1.0));
        let shift = rng.random_range(0.5..5.0);
        let a = b.adjoint() * &b + DMatrix::identity(n, n) * Complex::new(shift, 0.0);
        let op = DenseOperator::new(n, (0..n * n).map(|k| a[(k / n, k % n)]).collect()).unwrap();
        let eig = a.clone().symmetric_eigenvalues();
        let (lo, hi) = eig.iter().fold((f64::MAX, f64::MIN), |(l, h), &e| (l.min(e), h.max(e)));
        let kappa = hi / lo;
        let rate = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
        let rhs = random_complex(&mut rng, n, 1.0);
        let exact = a.clone().lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
        let a_norm = |x: &[Complex]| {
            let e = DVector::from_iterator(n, x.iter().zip(exact.iter()).map(|(p, q)| p - q));
            (e.adjoint() * &a * &e)[(0, 0)].re.max(0.0).sqrt()
        };
        let e0 = a_norm(&vec![Complex::new(0.0, 0.0); n]);
        let cfg = WamaConfig {
            cg_max_iters: 4 * n,
            cg_rel_tol: 1e-13,
            ..WamaConfig::default()
        };
        let out = cg_solve_observed(&op, &rhs, None, &cfg, |i, x| {
            let bound = 2.0 * rate.powi(i as i32) * e0;
            let err = a_norm(x);
            // rounding floor once the iterate has converged
            if err > bound * (1.0 + 1e-9) + 1e-12 * e0 {
                bound_violations += 1;
            }
            worst_slack = worst_slack.max(err / bound);
        })
        .unwrap();
        let exact: Vec<Complex> = exact.iter().copied().collect();
        worst_solve = worst_solve.max(linalg::norm(&linalg::sub(&out.solution, &exact)) / linalg::norm(&exact));
    }
    Outcome::new(
        bound_violations == 0 && worst_solve < 1e-7,
        format!(
            "{bound_violations} bound violations (max error/bound {worst_slack:.2}), max rel. solve error {worst_solve:.2e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let c0 = sar_matrix(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let phi = PhaseErrorVector::new((0..4).map(|_| rng.random_range(-3.0..3.0)).collect());
        let c = apply_phase_error(&c0, &phi).unwrap();
        let f = ComplexImage::new(4, 4, random_complex(&mut rng, 16, 1.0)).unwrap();
        let g = PhaseHistory::new(random_complex(&mut rng, 16, 4.0));
        let grad = wirtinger_grad_fidelity(&c, &f, &g).unwrap();
        let h = |u: &[f64]| linalg::distance_sqr(&c.matvec(&unlift_vector(u)).unwrap(), g.as_slice());
        let u = lift_vector(f.as_slice());
        let step = 1e-6;
        let fd: Vec<f64> = (0..u.len())
            .map(|i| {
                let mut plus = u.clone();
                plus[i] += step;
                let mut minus = u.clone();
                minus[i] -= step;
                (h(&plus) - h(&minus)) / (2.0 * step)
            })
            .collect();
        let n = f.len();
        let expected: Vec<Complex> = (0..n).map(|i| Complex::new(0.5 * fd[i], 0.5 * fd[i + n])).collect();
        worst = worst.max(linalg::norm(&linalg::sub(&grad, &expected)) / linalg::norm(&expected));
    }
    Outcome::new(worst < 1e-5, format!("max relative gradient error {worst:.2e}"))
}

fn criterion_9() -> Outcome {
    let (rows, cols) = (8, 8);
    let zero = Complex::new(0.0, 0.0);
    let mut mismatches = 0usize;
    let mut worst_grad = 0.0f64;
    let spec = RegularizerSpec::new(Penalty::ApproxTv { beta: 0.05 }, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for _ in 0..5 {
        let f = ComplexImage::new(rows, cols, random_complex(&mut rng, rows * cols, 1.0)).unwrap();
        let at = |i: usize, j: usize| f.get(i, j);
        let grad_i = |i: usize, j: usize| if i > 0 { at(i, j) - at(i - 1, j) } else { zero };
        let grad_j = |i: usize, j: usize| if j > 0 { at(i, j) - at(i, j - 1) } else { zero };
        let d = [
            DifferenceMatrix::vertical(rows, cols).apply(f.as_slice()),
            DifferenceMatrix::horizontal(rows, cols).apply(f.as_slice()),
            DifferenceMatrix::negated_next_horizontal(rows, cols).apply(f.as_slice()),
            DifferenceMatrix::negated_next_vertical(rows, cols).apply(f.as_slice()),
        ];
        for j in 0..cols {
            for i in 0..rows {
                let k = j * rows + i;
                let expected = [
                    grad_i(i, j),
                    grad_j(i, j),
                    if j + 1 < cols { -grad_j(i, j + 1) } else { zero },
                    if i + 1 < rows { -grad_i(i + 1, j) } else { zero },
                ];
                mismatches += (0..4).filter(|&m| d[m][k] != expected[m]).count();
            }
        }

        let n = f.len();
        let dense = tv_weight_operator(&spec, &f).unwrap().to_dense();
        let wf: Vec<Complex> = (0..n)
            .map(|r| (0..n).map(|c| f.as_slice()[c] * dense[r * n + c]).sum())
            .collect();
        let h = 1e-6;
        let r = |g: &ComplexImage| penalty_value(&spec, g).unwrap();
        let fd: Vec<Complex> = (0..n)
            .map(|k| {
                let mut parts = [0.0; 2];
                for (p, dir) in [Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)].iter().enumerate() {
                    let mut plus = f.clone();
                    plus.as_mut_slice()[k] += dir * h;
                    let mut minus = f.clone();
                    minus.as_mut_slice()[k] -= dir * h;
                    parts[p] = (r(&plus) - r(&minus)) / (2.0 * h);
                }
                Complex::new(0.5 * parts[0], 0.5 * parts[1])
            })
            .collect();
        worst_grad = worst_grad.max(linalg::norm(&linalg::sub(&wf, &fd)) / linalg::norm(&fd));
    }
    Outcome::new(
        mismatches == 0 && worst_grad < 1e-5,
        format!("{mismatches} difference-relation mismatches, max rel. W(f)f vs gradient error {worst_grad:.2e}"),
    )
}

fn criterion_10() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let mut cfg = ExperimentConfig::default();
        cfg.output.trace = true;
        run_experiment(cfg, d.path()).unwrap();
    }
    let listing = |p: &Path| {
        let mut names: Vec<String> = std::fs::read_dir(p)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        names
    };
    let names = listing(dirs[0].path());
    let csvs = names.iter().filter(|n| n.ends_with(".csv")).count();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(dirs[0].path().join(n)).unwrap() != std::fs::read(dirs[1].path().join(n)).unwrap_or_default())
        .collect();
    Outcome::new(
        names == listing(dirs[1].path()) && differing.is_empty() && csvs >= 10,
        format!("{} files ({csvs} CSV) compared, differing: {differing:?}", names.len()),
    )
}

/// Not a criterion: the alternation without the shift search on the
/// criterion-4 setup, to show what the search contributes.
fn plain_alternation_note() -> String {
    let dir = tempfile::tempdir().unwrap();
    let report = run_seed(1, false, false, dir.path());
    let base = report.row("baseline").unwrap().eval.mse;
    ["cfba", "wama"]
        .iter()
        .map(|name| {
            let row = report.row(name).unwrap();
            format!(
                "{name} MSE ratio {:.2}, max phase error {:.3} rad",
                base / row.eval.mse,
                row.max_phase_error_rad
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Number, runtime limit and check.
type Criterion = (u32, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, Duration::from_secs(10), criterion_1),
        (2, Duration::from_secs(30), criterion_2),
        (3, Duration::from_secs(300), criterion_3),
        (4, Duration::from_secs(600), criterion_4),
        (5, Duration::from_secs(600), criterion_5),
        (6, Duration::from_secs(30), criterion_6),
        (7, Duration::from_secs(30), criterion_7),
        (8, Duration::from_secs(10), criterion_8),
        (9, Duration::from_secs(60), criterion_9),
        (10, Duration::from_secs(600), criterion_10),
    ];
    let mut failed = 0;
    for (id, limit, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let pass = outcome.pass && elapsed <= limit;
        failed += usize::from(!pass);
        println!(
            "criterion {id:>2}: {} ({:.1} s of {} s) {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            outcome.detail
        );
    }
    println!("info: single seed without shift search: {}", plain_alternation_note());
    if failed == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 10 criteria failed");
        ExitCode::FAILURE
    }
}
