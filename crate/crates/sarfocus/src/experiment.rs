//! Simulation, autofocus and evaluation stages of one experiment.
//!
//! The stages communicate only through files in the output directory, so
//! `run` produces exactly what `simulate`, `autofocus` and `evaluate` produce
//! when invoked one after another. CSV floats round-trip exactly, which keeps
//! the two paths bit-identical.
//!
//! Images are scored in the data domain: an estimate `f` is compared through
//! its reprojection `CᴴC f` against the matched-filter image of the
//! phase-error-free history. Both sides then share the same point spread, so
//! neither the unknown image scale nor the transfer function of `C` biases
//! the comparison.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sarfocus_core::autofocus::{max_aligned_phase_error, run_autofocus, AutofocusResult};
use sarfocus_core::cfba::estimate_lipschitz;
use sarfocus_core::forward_model::{
    adjoint_image, build_observation_matrix, cross_range_shift_ramp, sigma_for_snr, simulate_phase_history,
};
use sarfocus_core::metrics::{cost_j, EvalReport};
use sarfocus_core::{ComplexImage, ObservationMatrix, PhaseErrorVector, PhaseHistory, RegularizerSpec, SceneGrid};

use crate::config::{EngineKind, ExperimentConfig, GridKind, NoiseLevel};
use crate::error::HarnessError;
use crate::io;
use crate::scenes::make_builtin_scene;

/// Seed of the power iteration for `L`; fixed so `L` is a function of the
/// geometry alone.
const LIPSCHITZ_SEED: u64 = 0;

pub const SCENE_CSV: &str = "scene.csv";
pub const PHASE_ERRORS_CSV: &str = "phase_errors.csv";
pub const PHASE_HISTORY_CSV: &str = "phase_history.csv";
pub const CLEAN_HISTORY_CSV: &str = "phase_history_clean.csv";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";

pub const REPORT_HEADER: [&str; 8] = [
    "name",
    "mse",
    "mse_raw",
    "entropy",
    "final_cost",
    "iterations",
    "converged",
    "max_phase_error_rad",
];

/// Per-engine artifact names.
pub fn engine_file(kind: EngineKind, suffix: &str) -> String {
    format!("{}_{suffix}", kind.name())
}

/// Geometry, scene and derived constants shared by all stages.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub scene: ComplexImage,
    pub grid: SceneGrid,
    pub matrix: ObservationMatrix,
    /// Lipschitz constant of the fidelity gradient (with safety margin).
    pub lipschitz: f64,
    /// One-column cross-range shift ramp of the grid.
    pub ramp: Vec<f64>,
}

/// Simulated data written by [`Experiment::simulate`].
#[derive(Debug, Clone)]
pub struct Simulation {
    pub phi: PhaseErrorVector,
    pub g: PhaseHistory,
    /// Same noise realisation without phase errors.
    pub g_clean: PhaseHistory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub eval: EvalReport,
    pub converged: Option<bool>,
    /// Largest gauge-aligned phase error against the true phases.
    pub max_phase_error_rad: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    /// Free-form `key: value` lines describing the setup.
    pub context: Vec<(String, String)>,
}

impl Report {
    pub fn row(&self, name: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.name.clone(),
                    r.eval.mse.to_string(),
                    r.eval.mse_raw.to_string(),
                    r.eval.entropy.to_string(),
                    r.eval.final_cost.to_string(),
                    r.eval.iterations.to_string(),
                    r.converged.map(|c| c.to_string()).unwrap_or_default(),
                    r.max_phase_error_rad.to_string(),
                ]
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.context {
            let _ = writeln!(out, "{k}: {v}");
        }
        let _ = writeln!(
            out,
            "\n{:<10} {:>12} {:>12} {:>9} {:>14} {:>6} {:>10}",
            "name", "mse", "mse_raw", "entropy", "final_cost", "iters", "max_dphi"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<10} {:>12.4e} {:>12.4e} {:>9.4} {:>14.6e} {:>6} {:>10.4}",
                r.name, r.eval.mse, r.eval.mse_raw, r.eval.entropy, r.eval.final_cost, r.eval.iterations, r.max_phase_error_rad
            );
        }
        if let (Some(base), true) = (self.row("baseline"), self.rows.len() > 2) {
            out.push('\n');
            for r in self.rows.iter().filter(|r| r.name != "baseline" && r.name != "truth") {
                let _ = writeln!(out, "{}: mse improvement over baseline {:.2}x", r.name, base.eval.mse / r.eval.mse);
            }
        }
        out
    }
}

impl Experiment {
    /// Loads the scene, builds the observation matrix and estimates `L`.
    pub fn prepare(config: ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let scene = match (&config.scene.path, &config.scene.builtin) {
            (Some(path), _) => io::read_scene_image(path)?,
            (None, name) => make_builtin_scene(name.as_deref().unwrap_or("points"), config.scene.size)?,
        };
        let params = config.radar.params();
        let (rows, cols) = scene.shape();
        let grid = match config.radar.grid {
            GridKind::Matched => SceneGrid::matched(&params, rows, cols)?,
            GridKind::Inscribed => SceneGrid::inscribed(rows, cols, params.patch_radius_m)?,
        };
        let matrix = build_observation_matrix(&params, &grid)?;
        let estimate = estimate_lipschitz(&matrix, config.cfba.power_iters, LIPSCHITZ_SEED)?;
        if estimate.degenerate {
            return Err(HarnessError::config("radar", "the observation matrix is zero"));
        }
        let ramp = cross_range_shift_ramp(&params, &grid)?;
        Ok(Self {
            config,
            scene,
            grid,
            matrix,
            lipschitz: estimate.value,
            ramp,
        })
    }

    pub fn spec(&self) -> Result<RegularizerSpec, HarnessError> {
        self.config.regularizer.spec(self.lipschitz)
    }

    pub fn true_phases(&self) -> Result<PhaseErrorVector, HarnessError> {
        let m = self.matrix.blocks();
        Ok(match self.config.phase_error.model() {
            Some(model) => model.generate(m, self.config.phase_error.seed)?,
            None => PhaseErrorVector::zeros(m),
        })
    }

    pub fn noise_sigma(&self) -> Result<f64, HarnessError> {
        Ok(match self.config.noise.level() {
            NoiseLevel::Sigma(sigma) => sigma,
            NoiseLevel::SnrDb(snr) => sigma_for_snr(&self.matrix.matvec(self.scene.as_slice())?, snr),
        })
    }

    /// Draws the phase errors and noise and writes the scene and both phase
    /// histories.
    pub fn simulate(&self, dir: &Path) -> Result<Simulation, HarnessError> {
        let phi = self.true_phases()?;
        let sigma = self.noise_sigma()?;
        let seed = self.config.noise.seed;
        let g = simulate_phase_history(&self.matrix, &self.scene, &phi, sigma, seed)?;
        let zero = PhaseErrorVector::zeros(phi.len());
        let g_clean = simulate_phase_history(&self.matrix, &self.scene, &zero, sigma, seed)?;
        io::write_image(&dir.join(SCENE_CSV), &self.scene)?;
        io::write_magnitude_pgm(&dir.join("scene.pgm"), &self.scene, self.config.output.contrast)?;
        io::write_phases(&dir.join(PHASE_ERRORS_CSV), &phi)?;
        io::write_phase_history(&dir.join(PHASE_HISTORY_CSV), &g)?;
        io::write_phase_history(&dir.join(CLEAN_HISTORY_CSV), &g_clean)?;
        Ok(Simulation { phi, g, g_clean })
    }

    fn read_history(&self, path: &Path) -> Result<PhaseHistory, HarnessError> {
        let g = io::read_phase_history(path)?;
        if g.len() != self.matrix.rows() {
            return Err(HarnessError::format(
                path,
                format!("{} samples, the configured geometry needs {}", g.len(), self.matrix.rows()),
            ));
        }
        Ok(g)
    }

    /// Autofocuses the corrupted history in `dir` with one engine and
    /// writes the image, phases, run summary and optionally the trace.
    pub fn autofocus(&self, dir: &Path, kind: EngineKind) -> Result<AutofocusResult, HarnessError> {
        let g = self.read_history(&dir.join(PHASE_HISTORY_CSV))?;
        let cfg = self.config.autofocus_config(kind, self.lipschitz, &self.ramp)?;
        let result = run_autofocus(&self.matrix, &g, &cfg)?;
        io::write_image(&dir.join(engine_file(kind, "image.csv")), &result.f_hat)?;
        io::write_phases(&dir.join(engine_file(kind, "phase.csv")), &result.phi_hat)?;
        io::write_magnitude_pgm(
            &dir.join(format!("{}.pgm", kind.name())),
            &result.f_hat,
            self.config.output.contrast,
        )?;
        io::write_table(
            &dir.join(engine_file(kind, "run.csv")),
            &["iterations", "converged"],
            vec![vec![result.iterations.to_string(), result.converged.to_string()]],
        )?;
        if self.config.output.trace {
            io::write_trace(&dir.join(engine_file(kind, "trace.csv")), &result.trace)?;
        }
        Ok(result)
    }

    /// `CᴴC f`, the reprojection used for scoring.
    fn reproject(&self, f: &ComplexImage) -> Result<ComplexImage, HarnessError> {
        let y = self.matrix.matvec(f.as_slice())?;
        Ok(adjoint_image(&self.matrix, &PhaseHistory::new(y))?)
    }

    fn read_run_summary(&self, path: &Path) -> Result<(usize, bool), HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let line = text.lines().nth(1).unwrap_or("");
        let mut cells = line.split(',');
        let iterations = cells.next().and_then(|v| v.trim().parse().ok());
        let converged = cells.next().and_then(|v| v.trim().parse().ok());
        match (iterations, converged) {
            (Some(i), Some(c)) => Ok((i, c)),
            _ => Err(HarnessError::format(path, "expected `iterations,converged` and one data row")),
        }
    }

    /// Scores the baseline and every configured engine against the
    /// phase-error-free reconstruction and writes the report.
    pub fn evaluate(&self, dir: &Path) -> Result<Report, HarnessError> {
        let spec = self.spec()?;
        let g = self.read_history(&dir.join(PHASE_HISTORY_CSV))?;
        let g_clean = self.read_history(&dir.join(CLEAN_HISTORY_CSV))?;
        let phi_path = dir.join(PHASE_ERRORS_CSV);
        let phi = io::read_phases(&phi_path)?;
        if phi.len() != self.matrix.blocks() {
            return Err(HarnessError::format(&phi_path, "aperture count does not match the geometry"));
        }
        let contrast = self.config.output.contrast;

        let truth = adjoint_image(&self.matrix, &g_clean)?;
        let baseline = adjoint_image(&self.matrix, &g)?;
        io::write_magnitude_pgm(&dir.join("truth.pgm"), &truth, contrast)?;
        io::write_magnitude_pgm(&dir.join("baseline.pgm"), &baseline, contrast)?;

        let zeros = PhaseErrorVector::zeros(phi.len());
        let mut rows = vec![
            ReportRow {
                name: "truth".into(),
                eval: EvalReport::evaluate(&truth, &truth, cost_j(&self.matrix, &phi, &self.scene, &g, &spec)?, 0)?,
                converged: None,
                max_phase_error_rad: 0.0,
            },
            ReportRow {
                name: "baseline".into(),
                eval: EvalReport::evaluate(&baseline, &truth, cost_j(&self.matrix, &zeros, &baseline, &g, &spec)?, 0)?,
                converged: None,
                max_phase_error_rad: max_aligned_phase_error(&zeros, &phi)?,
            },
        ];
        for &kind in &self.config.autofocus.engines {
            let f_hat = io::read_image(&dir.join(engine_file(kind, "image.csv")))?;
            if f_hat.shape() != self.scene.shape() {
                return Err(HarnessError::format(
                    dir.join(engine_file(kind, "image.csv")),
                    "image shape does not match the scene",
                ));
            }
            let phi_hat = io::read_phases(&dir.join(engine_file(kind, "phase.csv")))?;
            let (iterations, converged) = self.read_run_summary(&dir.join(engine_file(kind, "run.csv")))?;
            let cost = cost_j(&self.matrix, &phi_hat, &f_hat, &g, &spec)?;
            rows.push(ReportRow {
                name: kind.name().into(),
                eval: EvalReport::evaluate(&self.reproject(&f_hat)?, &truth, cost, iterations)?,
                converged: Some(converged),
                max_phase_error_rad: max_aligned_phase_error(&phi_hat, &phi)?,
            });
        }

        let report = Report {
            rows,
            context: self.context(&spec)?,
        };
        io::write_table(&dir.join(REPORT_CSV), &REPORT_HEADER, report.csv_rows())?;
        io::write_text(&dir.join(REPORT_TXT), &report.to_text())?;
        Ok(report)
    }

    fn context(&self, spec: &RegularizerSpec) -> Result<Vec<(String, String)>, HarnessError> {
        let cfg = &self.config;
        let scene = match (&cfg.scene.path, &cfg.scene.builtin) {
            (Some(p), _) => p.display().to_string(),
            (None, name) => name.clone().unwrap_or_else(|| "points".into()),
        };
        let (rows, cols) = self.scene.shape();
        Ok(vec![
            ("scene".into(), format!("{scene} ({rows}x{cols})")),
            ("phase error".into(), format!("{:?}, seed {}", cfg.phase_error.model, cfg.phase_error.seed)),
            ("noise sigma".into(), format!("{:e}, seed {}", self.noise_sigma()?, cfg.noise.seed)),
            ("lipschitz".into(), format!("{:e}", self.lipschitz)),
            ("penalty".into(), format!("{:?}, lambda {:e}", spec.penalty, spec.lambda)),
        ])
    }
}

/// All three stages into `dir`.
pub fn run_experiment(config: ExperimentConfig, dir: &Path) -> Result<Report, HarnessError> {
    let experiment = Experiment::prepare(config)?;
    experiment.simulate(dir)?;
    for &kind in &experiment.config.autofocus.engines {
        experiment.autofocus(dir, kind)?;
    }
    experiment.evaluate(dir)
}

/// Output directory: the explicit override if any, else the config's.
pub fn output_dir(config: &ExperimentConfig, overridden: Option<PathBuf>) -> PathBuf {
    overridden.unwrap_or_else(|| config.output.dir.clone())
}
