//! Experiment configuration as a TOML document.
//!
//! Every section and every field is optional; omitted values fall back to the
//! defaults printed by `sarfocus defaults`. Unknown keys are rejected so a
//! typo never silently runs the default experiment.

use std::path::{Path, PathBuf};

use sarfocus_core::autofocus::{descent_safe_gamma, AutofocusConfig, Engine, ShiftSearch};
use sarfocus_core::cfba::CfbaConfig;
use sarfocus_core::wama::WamaConfig;
use sarfocus_core::forward_model::PhaseErrorModel;
use sarfocus_core::{Penalty, RadarParams, RegularizerSpec};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::scenes::BUILTIN_SCENES;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: SceneSection,
    pub radar: RadarSection,
    pub phase_error: PhaseErrorSection,
    pub noise: NoiseSection,
    pub regularizer: RegularizerSection,
    pub autofocus: AutofocusSection,
    pub cfba: CfbaSection,
    pub wama: WamaSection,
    pub output: OutputSection,
}

/// Either a built-in scene name or a grayscale image path. A relative path
/// is resolved against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    #[serde(default)]
    pub builtin: Option<String>,
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Side length of built-in scenes; ignored for image files.
    #[serde(default = "default_scene_size")]
    pub size: usize,
}

fn default_scene_size() -> usize {
    32
}

impl Default for SceneSection {
    fn default() -> Self {
        Self {
            builtin: Some("points".into()),
            path: None,
            size: default_scene_size(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    /// Pixel spacing matched to the sampled spatial-frequency band.
    Matched,
    /// Square grid inscribed in the patch circle.
    Inscribed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarSection {
    pub carrier_freq_rad_s: f64,
    pub chirp_rate_rad_s2: f64,
    pub pulse_duration_s: f64,
    pub angular_range_rad: f64,
    pub demodulation_time_s: f64,
    pub light_speed_m_s: f64,
    pub patch_radius_m: f64,
    pub grid: GridKind,
}

impl Default for RadarSection {
    fn default() -> Self {
        let p = RadarParams::default();
        Self {
            carrier_freq_rad_s: p.carrier_freq_rad_s,
            chirp_rate_rad_s2: p.chirp_rate_rad_s2,
            pulse_duration_s: p.pulse_duration_s,
            angular_range_rad: p.angular_range_rad,
            demodulation_time_s: p.demodulation_time_s,
            light_speed_m_s: p.light_speed_m_s,
            patch_radius_m: p.patch_radius_m,
            grid: GridKind::Matched,
        }
    }
}

impl RadarSection {
    pub fn params(&self) -> RadarParams {
        RadarParams {
            carrier_freq_rad_s: self.carrier_freq_rad_s,
            chirp_rate_rad_s2: self.chirp_rate_rad_s2,
            pulse_duration_s: self.pulse_duration_s,
            angular_range_rad: self.angular_range_rad,
            demodulation_time_s: self.demodulation_time_s,
            light_speed_m_s: self.light_speed_m_s,
            patch_radius_m: self.patch_radius_m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseModelKind {
    None,
    Uniform,
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseErrorSection {
    pub model: PhaseModelKind,
    /// Highest power of the polynomial model.
    pub order: usize,
    pub amplitude_rad: f64,
    pub seed: u64,
}

impl Default for PhaseErrorSection {
    fn default() -> Self {
        Self {
            model: PhaseModelKind::Uniform,
            order: 3,
            amplitude_rad: std::f64::consts::PI,
            seed: 1,
        }
    }
}

impl PhaseErrorSection {
    pub fn model(&self) -> Option<PhaseErrorModel> {
        match self.model {
            PhaseModelKind::None => None,
            PhaseModelKind::Uniform => Some(PhaseErrorModel::Uniform),
            PhaseModelKind::Polynomial => Some(PhaseErrorModel::Polynomial {
                order: self.order,
                amplitude_rad: self.amplitude_rad,
            }),
        }
    }
}

/// Noise level as an SNR in dB or a per-component standard deviation, not
/// both. With neither set the default SNR applies; `sigma = 0` is noiseless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default = "default_noise_seed")]
    pub seed: u64,
}

pub const DEFAULT_SNR_DB: f64 = 30.0;

fn default_noise_seed() -> u64 {
    2
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            snr_db: Some(DEFAULT_SNR_DB),
            sigma: None,
            seed: default_noise_seed(),
        }
    }
}

/// How the noise level is specified once defaults are applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    SnrDb(f64),
    Sigma(f64),
}

impl NoiseSection {
    pub fn level(&self) -> NoiseLevel {
        match (self.snr_db, self.sigma) {
            (_, Some(sigma)) => NoiseLevel::Sigma(sigma),
            (Some(snr), None) => NoiseLevel::SnrDb(snr),
            (None, None) => NoiseLevel::SnrDb(DEFAULT_SNR_DB),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenaltyKind {
    #[serde(rename = "cauchy")]
    Cauchy,
    #[serde(rename = "approx-lp")]
    ApproxLp,
    #[serde(rename = "approx-tv")]
    ApproxTv,
    #[serde(rename = "welsh")]
    Welsh,
    #[serde(rename = "geman-mcclure")]
    GemanMcClure,
}

/// Penalty and weight. `lambda` is absolute when given, otherwise
/// `lambda_rel · L` with `L` the Lipschitz constant of the fidelity gradient.
/// The Cauchy `gamma` defaults to the smallest value that keeps the
/// forward–backward objective monotone at the configured step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerSection {
    #[serde(default = "default_penalty")]
    pub penalty: PenaltyKind,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_lambda_rel")]
    pub lambda_rel: f64,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_penalty() -> PenaltyKind {
    PenaltyKind::Cauchy
}
fn default_lambda_rel() -> f64 {
    0.1
}
fn default_p() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    0.01
}
fn default_delta() -> f64 {
    1.0
}

impl Default for RegularizerSection {
    fn default() -> Self {
        Self {
            penalty: default_penalty(),
            lambda: None,
            lambda_rel: default_lambda_rel(),
            gamma: None,
            p: default_p(),
            beta: default_beta(),
            delta: default_delta(),
        }
    }
}

impl RegularizerSection {
    pub fn spec(&self, lipschitz: f64) -> Result<RegularizerSpec, HarnessError> {
        let lambda = self.lambda.unwrap_or(self.lambda_rel * lipschitz);
        let penalty = match self.penalty {
            PenaltyKind::Cauchy => Penalty::Cauchy {
                gamma: self.gamma.unwrap_or_else(|| descent_safe_gamma(lambda, lipschitz)),
            },
            PenaltyKind::ApproxLp => Penalty::ApproxLp {
                p: self.p,
                beta: self.beta,
            },
            PenaltyKind::ApproxTv => Penalty::ApproxTv { beta: self.beta },
            PenaltyKind::Welsh => Penalty::Welsh { delta: self.delta },
            PenaltyKind::GemanMcClure => Penalty::GemanMcClure { delta: self.delta },
        };
        Ok(RegularizerSpec::new(penalty, lambda)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    Cfba,
    Wama,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Cfba => "cfba",
            EngineKind::Wama => "wama",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutofocusSection {
    #[serde(default = "default_engines")]
    pub engines: Vec<EngineKind>,
    #[serde(default = "default_outer_max_iters")]
    pub outer_max_iters: usize,
    #[serde(default = "default_outer_rel_tol")]
    pub outer_rel_tol: f64,
    /// Try cross-range shift hypotheses after the alternation converges.
    #[serde(default = "default_shift_search")]
    pub shift_search: bool,
    #[serde(default = "default_shift_polish_iters")]
    pub shift_polish_iters: usize,
    /// Largest shift tried, in columns; half the scene width when omitted.
    #[serde(default)]
    pub max_shift: Option<usize>,
}

fn default_engines() -> Vec<EngineKind> {
    vec![EngineKind::Cfba, EngineKind::Wama]
}
fn default_outer_max_iters() -> usize {
    AutofocusConfig::DEFAULT_OUTER_MAX_ITERS
}
fn default_outer_rel_tol() -> f64 {
    AutofocusConfig::DEFAULT_OUTER_REL_TOL
}
fn default_shift_search() -> bool {
    true
}
fn default_shift_polish_iters() -> usize {
    5
}

impl Default for AutofocusSection {
    fn default() -> Self {
        Self {
            engines: default_engines(),
            outer_max_iters: default_outer_max_iters(),
            outer_rel_tol: default_outer_rel_tol(),
            shift_search: default_shift_search(),
            shift_polish_iters: default_shift_polish_iters(),
            max_shift: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfbaSection {
    /// Step `μ = step_multiplier / L`; must not exceed 1.
    pub step_multiplier: f64,
    pub max_inner_iters: usize,
    pub inner_rel_tol: f64,
    /// Power iterations used to estimate `L`.
    pub power_iters: usize,
}

impl Default for CfbaSection {
    fn default() -> Self {
        let base = CfbaConfig::from_lipschitz(1.0, 0.9);
        Self {
            step_multiplier: 0.9,
            max_inner_iters: base.max_inner_iters,
            inner_rel_tol: base.inner_rel_tol,
            power_iters: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WamaSection {
    pub cg_max_iters: usize,
    pub cg_rel_tol: f64,
    pub damping: f64,
    pub fixed_point_steps: usize,
}

impl Default for WamaSection {
    fn default() -> Self {
        let w = WamaConfig::default();
        Self {
            cg_max_iters: w.cg_max_iters,
            cg_rel_tol: w.cg_rel_tol,
            damping: w.damping,
            fixed_point_steps: w.fixed_point_steps,
        }
    }
}

impl From<WamaSection> for WamaConfig {
    fn from(s: WamaSection) -> Self {
        WamaConfig {
            cg_max_iters: s.cg_max_iters,
            cg_rel_tol: s.cg_rel_tol,
            damping: s.damping,
            fixed_point_steps: s.fixed_point_steps,
        }
    }
}

/// Artifact directory (relative to the working directory) and rendering
/// switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Also write per-iteration cost traces.
    pub trace: bool,
    /// Percentile contrast stretch for the graymap images.
    pub contrast: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            trace: false,
            contrast: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::config(field_of(&e), e.message().to_string()))
    }

    /// Reads and validates a config file; a relative `scene.path` is made
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(scene) = cfg.scene.path.as_mut().filter(|p| p.is_relative()) {
            if let Some(dir) = path.parent() {
                *scene = dir.join(&*scene);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The defaults as a TOML document.
    pub fn defaults_toml() -> String {
        toml::to_string(&Self::default()).expect("default config serializes")
    }

    /// Sets the phase-error seed to `seed` and the noise seed to `seed + 1`.
    pub fn reseed(&mut self, seed: u64) {
        self.phase_error.seed = seed;
        self.noise.seed = seed.wrapping_add(1);
    }

    /// Checks everything that does not need the observation matrix; the
    /// remaining numeric checks happen when the experiment is prepared.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |field: &str, reason: &str| Err(HarnessError::config(field, reason));
        match (&self.scene.builtin, &self.scene.path) {
            (Some(_), Some(_)) => return bad("scene", "set either `builtin` or `path`, not both"),
            (Some(name), None) if !BUILTIN_SCENES.contains(&name.as_str()) => {
                return Err(HarnessError::config(
                    "scene.builtin",
                    format!("unknown scene {name:?}; expected one of {BUILTIN_SCENES:?}"),
                ))
            }
            _ => {}
        }
        if self.scene.size == 0 {
            return bad("scene.size", "must be at least 1");
        }
        if let Err(e) = self.radar.params().validate() {
            return Err(HarnessError::config("radar", e.to_string()));
        }
        if self.phase_error.model == PhaseModelKind::Polynomial {
            if self.phase_error.order < 2 {
                return bad("phase_error.order", "must be at least 2");
            }
            if !(self.phase_error.amplitude_rad.is_finite() && self.phase_error.amplitude_rad >= 0.0) {
                return bad("phase_error.amplitude_rad", "must be finite and non-negative");
            }
        }
        match (self.noise.snr_db, self.noise.sigma) {
            (Some(_), Some(_)) => return bad("noise", "set either `snr_db` or `sigma`, not both"),
            (Some(snr), None) if !snr.is_finite() => return bad("noise.snr_db", "must be finite"),
            (None, Some(sigma)) if !(sigma.is_finite() && sigma >= 0.0) => {
                return bad("noise.sigma", "must be finite and non-negative")
            }
            _ => {}
        }
        let reg = &self.regularizer;
        if let Some(lambda) = reg.lambda {
            if !(lambda.is_finite() && lambda >= 0.0) {
                return bad("regularizer.lambda", "must be finite and non-negative");
            }
        } else if !(reg.lambda_rel.is_finite() && reg.lambda_rel >= 0.0) {
            return bad("regularizer.lambda_rel", "must be finite and non-negative");
        }
        if let Some(gamma) = reg.gamma {
            if !(gamma.is_finite() && gamma > 0.0) {
                return bad("regularizer.gamma", "must be finite and strictly positive");
            }
        }
        let af = &self.autofocus;
        if af.engines.is_empty() {
            return bad("autofocus.engines", "list at least one engine");
        }
        if af.engines.contains(&EngineKind::Cfba) && reg.penalty != PenaltyKind::Cauchy {
            return bad("regularizer.penalty", "the cfba engine only supports the cauchy penalty");
        }
        if af.outer_max_iters == 0 {
            return bad("autofocus.outer_max_iters", "must be at least 1");
        }
        if !(af.outer_rel_tol.is_finite() && af.outer_rel_tol > 0.0) {
            return bad("autofocus.outer_rel_tol", "must be finite and strictly positive");
        }
        if af.shift_search && af.shift_polish_iters == 0 {
            return bad("autofocus.shift_polish_iters", "must be at least 1");
        }
        let cfba = &self.cfba;
        if !(cfba.step_multiplier > 0.0 && cfba.step_multiplier <= 1.0) {
            return bad("cfba.step_multiplier", "must lie in (0, 1]");
        }
        if cfba.max_inner_iters == 0 {
            return bad("cfba.max_inner_iters", "must be at least 1");
        }
        if !(cfba.inner_rel_tol.is_finite() && cfba.inner_rel_tol > 0.0) {
            return bad("cfba.inner_rel_tol", "must be finite and strictly positive");
        }
        if cfba.power_iters == 0 {
            return bad("cfba.power_iters", "must be at least 1");
        }
        if let Err(e) = WamaConfig::from(self.wama).validate() {
            return Err(HarnessError::config("wama", e.to_string()));
        }
        Ok(())
    }

    /// Image-update engine of the given kind for Lipschitz constant `L`.
    pub fn engine(&self, kind: EngineKind, lipschitz: f64) -> Engine {
        match kind {
            EngineKind::Cfba => {
                let mut cfg = CfbaConfig::from_lipschitz(lipschitz, self.cfba.step_multiplier);
                cfg.max_inner_iters = self.cfba.max_inner_iters;
                cfg.inner_rel_tol = self.cfba.inner_rel_tol;
                Engine::Cfba(cfg)
            }
            EngineKind::Wama => Engine::Wama(self.wama.into()),
        }
    }

    /// Full autofocus configuration; `ramp` is the one-column shift phase
    /// ramp of the scene grid.
    pub fn autofocus_config(
        &self,
        kind: EngineKind,
        lipschitz: f64,
        ramp: &[f64],
    ) -> Result<AutofocusConfig, HarnessError> {
        let spec = self.regularizer.spec(lipschitz)?;
        let mut cfg = AutofocusConfig::new(self.engine(kind, lipschitz), spec);
        cfg.outer_max_iters = self.autofocus.outer_max_iters;
        cfg.outer_rel_tol = self.autofocus.outer_rel_tol;
        if self.autofocus.shift_search {
            cfg.shift_search = Some(ShiftSearch {
                ramp: ramp.to_vec(),
                max_shift: self.autofocus.max_shift.unwrap_or(ramp.len() / 2),
                polish_iters: self.autofocus.shift_polish_iters,
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Dotted key path from a TOML error message, or `"config"`.
fn field_of(err: &toml::de::Error) -> String {
    // serde reports unknown or mistyped keys as "... `key` ..." in the message
    err.message()
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "config".into())
}
