//! Discretised spotlight-mode observation model.
//!
//! A scene of `rows × cols` pixels is observed from `M = cols` aperture
//! positions with `K = rows` fast-time samples each, so the observation
//! matrix is square (`N × N`, `N = rows·cols`). Row `m·K + k` of the matrix
//! holds the kernel `exp(−j U(t_k) (x cos θ_m + y sin θ_m))` evaluated at
//! every pixel, where
//!
//! ```text
//! U(t) = (2 / c) (ω₀ + 2α (t − τ₀))
//! ```
//!
//! Fast-time samples are spread uniformly over `[τ₀, τ₀ + T]` and look angles
//! uniformly over `[−span/2, +span/2]`, so boresight is `θ = 0`.
//!
//! Images are flattened column-major: pixel `(r, c)` lives at index
//! `c·rows + r`. Rows run along range (`x`), columns along cross-range (`y`).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{self, wrap_angle};
use crate::math;
use crate::Complex;

/// ChaCha stream used for phase-error draws.
const PHASE_STREAM: u64 = 0x5048_4153;
/// ChaCha stream used for receiver noise.
const NOISE_STREAM: u64 = 0x4e4f_4953;

/// Speed of light used by the default parameter set, m/s.
pub const LIGHT_SPEED_M_S: f64 = 2.998e8;

/// Radar system parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarParams {
    /// Carrier frequency ω₀, rad/s.
    pub carrier_freq_rad_s: f64,
    /// α, where the transmitted chirp is `exp(j(ω₀t + αt²))` (so 2α is the chirp rate), rad/s².
    pub chirp_rate_rad_s2: f64,
    /// Pulse duration T, s.
    pub pulse_duration_s: f64,
    /// Total look-angle span, rad.
    pub angular_range_rad: f64,
    /// Demodulation time τ₀, s.
    pub demodulation_time_s: f64,
    pub light_speed_m_s: f64,
    /// Radius of the imaged ground patch, m.
    pub patch_radius_m: f64,
}

impl RadarParams {
    /// Default scene standoff range used to derive τ₀ = 2R₀/c.
    pub const DEFAULT_STANDOFF_M: f64 = 10_000.0;
    pub const DEFAULT_PATCH_RADIUS_M: f64 = 20.0;

    /// X-band system: ω₀ = 2π·10¹⁰ rad/s, chirp rate 2π·10¹² rad/s²,
    /// T = 0.4 ms, 2.3° aperture.
    pub fn x_band(standoff_m: f64, patch_radius_m: f64) -> Self {
        Self {
            carrier_freq_rad_s: 2.0 * PI * 1e10,
            chirp_rate_rad_s2: PI * 1e12,
            pulse_duration_s: 4e-4,
            angular_range_rad: 2.3_f64.to_radians(),
            demodulation_time_s: 2.0 * standoff_m / LIGHT_SPEED_M_S,
            light_speed_m_s: LIGHT_SPEED_M_S,
            patch_radius_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("carrier_freq_rad_s", self.carrier_freq_rad_s),
            ("chirp_rate_rad_s2", self.chirp_rate_rad_s2),
            ("pulse_duration_s", self.pulse_duration_s),
            ("angular_range_rad", self.angular_range_rad),
            ("demodulation_time_s", self.demodulation_time_s),
            ("light_speed_m_s", self.light_speed_m_s),
            ("patch_radius_m", self.patch_radius_m),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(name, "must be finite and strictly positive"));
            }
        }
        if self.angular_range_rad >= PI {
            return Err(Error::invalid("angular_range_rad", "must be below π"));
        }
        Ok(())
    }

    /// Spatial frequency `U(t)` in rad/m.
    pub fn spatial_frequency(&self, t: f64) -> f64 {
        2.0 / self.light_speed_m_s
            * (self.carrier_freq_rad_s + 2.0 * self.chirp_rate_rad_s2 * (t - self.demodulation_time_s))
    }

    /// `count` fast-time instants spread uniformly over `[τ₀, τ₀ + T]`.
    pub fn fast_time_samples(&self, count: usize) -> Vec<f64> {
        uniform_span(self.demodulation_time_s, self.pulse_duration_s, count)
    }

    /// `count` look angles spread uniformly over `[−span/2, span/2]`.
    pub fn look_angles(&self, count: usize) -> Vec<f64> {
        uniform_span(-0.5 * self.angular_range_rad, self.angular_range_rad, count)
    }

    /// Range pixel spacing at which `samples` fast-time samples cover exactly
    /// one period of the sampled spatial-frequency grid.
    pub fn matched_range_spacing(&self, samples: usize) -> f64 {
        let band = self.spatial_frequency(self.demodulation_time_s + self.pulse_duration_s)
            - self.spatial_frequency(self.demodulation_time_s);
        matched_spacing(band, samples)
    }

    /// Cross-range counterpart of [`Self::matched_range_spacing`], evaluated at
    /// the centre spatial frequency.
    pub fn matched_cross_range_spacing(&self, apertures: usize) -> f64 {
        let centre = self.spatial_frequency(self.demodulation_time_s + 0.5 * self.pulse_duration_s);
        let band = 2.0 * centre * math::sin_cos(0.5 * self.angular_range_rad).0;
        matched_spacing(band, apertures)
    }
}

impl Default for RadarParams {
    fn default() -> Self {
        Self::x_band(Self::DEFAULT_STANDOFF_M, Self::DEFAULT_PATCH_RADIUS_M)
    }
}

fn uniform_span(start: f64, width: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start + 0.5 * width],
        _ => (0..count)
            .map(|i| start + width * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

fn matched_spacing(band: f64, samples: usize) -> f64 {
    if samples <= 1 {
        return 2.0 * PI / band;
    }
    2.0 * PI * (samples - 1) as f64 / (samples as f64 * band)
}

/// Pixel layout of the reconstructed scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGrid {
    rows: usize,
    cols: usize,
    coords: Vec<(f64, f64)>,
}

impl SceneGrid {
    /// Uniform Cartesian grid centred on the origin with spacing `dx` along
    /// range (rows) and `dy` along cross-range (columns).
    pub fn uniform(rows: usize, cols: usize, dx: f64, dy: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(dx.is_finite() && dx > 0.0 && dy.is_finite() && dy > 0.0) {
            return Err(Error::invalid("pixel spacing", "must be finite and positive"));
        }
        let x0 = 0.5 * (rows - 1) as f64;
        let y0 = 0.5 * (cols - 1) as f64;
        let mut coords = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                coords.push(((r as f64 - x0) * dx, (c as f64 - y0) * dy));
            }
        }
        Ok(Self { rows, cols, coords })
    }

    /// Grid filling the square inscribed in a disc of the given radius.
    pub fn inscribed(rows: usize, cols: usize, radius: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyGrid);
        }
        let side = radius * core::f64::consts::SQRT_2;
        Self::uniform(rows, cols, side / rows as f64, side / cols as f64)
    }

    /// Grid whose spacing matches the sampled spatial-frequency support of
    /// `params`, which keeps `CᴴC` close to a scaled identity.
    pub fn matched(params: &RadarParams, rows: usize, cols: usize) -> Result<Self> {
        params.validate()?;
        Self::uniform(
            rows,
            cols,
            params.matched_range_spacing(rows),
            params.matched_cross_range_spacing(cols),
        )
    }

    /// Grid with explicit pixel coordinates, listed column-major.
    pub fn from_coords(rows: usize, cols: usize, coords: Vec<(f64, f64)>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyGrid);
        }
        Error::check_len("scene grid coordinates", rows * cols, coords.len())?;
        Ok(Self { rows, cols, coords })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[(f64, f64)] {
        &self.coords
    }

    /// Largest distance of any pixel from the patch centre.
    pub fn max_radius(&self) -> f64 {
        self.coords
            .iter()
            .map(|&(x, y)| math::hypot(x, y))
            .fold(0.0, f64::max)
    }
}

/// Complex reflectivity image, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl ComplexImage {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyGrid);
        }
        Error::check_len("image data", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(0.0, 0.0); rows * cols],
        }
    }

    /// Real, non-negative reflectivity with zero phase.
    pub fn from_magnitudes(rows: usize, cols: usize, magnitudes: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            magnitudes.iter().map(|&m| Complex::new(m, 0.0)).collect(),
        )
    }

    /// Same shape as `self`, new contents.
    pub fn with_data(&self, data: Vec<Complex>) -> Result<Self> {
        Self::new(self.rows, self.cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        col * self.rows + row
    }

    pub fn get(&self, row: usize, col: usize) -> Complex {
        self.data[self.index(row, col)]
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex> {
        self.data
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.data.iter().map(|&z| linalg::abs(z)).collect()
    }
}

/// Dense observation matrix partitioned into aperture blocks.
///
/// Block `m` occupies rows `m·K .. (m+1)·K`. Matrices produced by
/// [`build_observation_matrix`] have unit-modulus entries; arbitrary
/// operators can be wrapped with [`ObservationMatrix::from_row_major`].
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    data: Vec<Complex>,
    blocks: usize,
    block_len: usize,
    image_rows: usize,
    image_cols: usize,
}

impl ObservationMatrix {
    /// Wrap a row-major `(blocks·block_len) × (image_rows·image_cols)` matrix.
    /// Entry moduli are not checked.
    pub fn from_row_major(
        data: Vec<Complex>,
        blocks: usize,
        block_len: usize,
        image_rows: usize,
        image_cols: usize,
    ) -> Result<Self> {
        if blocks == 0 || block_len == 0 || image_rows == 0 || image_cols == 0 {
            return Err(Error::EmptyGrid);
        }
        Error::check_len(
            "observation matrix entries",
            blocks * block_len * image_rows * image_cols,
            data.len(),
        )?;
        Ok(Self {
            data,
            blocks,
            block_len,
            image_rows,
            image_cols,
        })
    }

    /// Number of rows (`M·K`).
    pub fn rows(&self) -> usize {
        self.blocks * self.block_len
    }

    /// Number of columns (pixels, `N`).
    pub fn cols(&self) -> usize {
        self.image_rows * self.image_cols
    }

    /// Number of aperture positions `M`.
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Rows per aperture block `K`.
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn image_shape(&self) -> (usize, usize) {
        (self.image_rows, self.image_cols)
    }

    pub fn block_rows(&self, m: usize) -> Range<usize> {
        m * self.block_len..(m + 1) * self.block_len
    }

    pub fn row(&self, r: usize) -> &[Complex] {
        let n = self.cols();
        &self.data[r * n..(r + 1) * n]
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex {
        self.data[r * self.cols() + c]
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    /// Largest `| |c_ij| − 1 |` over all entries.
    pub fn max_modulus_deviation(&self) -> f64 {
        self.data
            .iter()
            .map(|&z| (linalg::abs(z) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `y = C x`
    pub fn matvec(&self, x: &[Complex]) -> Result<Vec<Complex>> {
        let mut y = vec![Complex::new(0.0, 0.0); self.rows()];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_into(&self, x: &[Complex], y: &mut [Complex]) -> Result<()> {
        Error::check_len("C·x input", self.cols(), x.len())?;
        Error::check_len("C·x output", self.rows(), y.len())?;
        let n = self.cols();
        for (yr, row) in y.iter_mut().zip(self.data.chunks_exact(n)) {
            let mut re = 0.0;
            let mut im = 0.0;
            for (a, b) in row.iter().zip(x) {
                re += a.re * b.re - a.im * b.im;
                im += a.re * b.im + a.im * b.re;
            }
            *yr = Complex::new(re, im);
        }
        Ok(())
    }

    /// `y = Cᴴ x`
    pub fn adjoint_matvec(&self, x: &[Complex]) -> Result<Vec<Complex>> {
        let mut y = vec![Complex::new(0.0, 0.0); self.cols()];
        self.adjoint_matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn adjoint_matvec_into(&self, x: &[Complex], y: &mut [Complex]) -> Result<()> {
        Error::check_len("Cᴴ·x input", self.rows(), x.len())?;
        Error::check_len("Cᴴ·x output", self.cols(), y.len())?;
        y.fill(Complex::new(0.0, 0.0));
        let n = self.cols();
        for (xr, row) in x.iter().zip(self.data.chunks_exact(n)) {
            let (xre, xim) = (xr.re, xr.im);
            if xre == 0.0 && xim == 0.0 {
                continue;
            }
            for (yj, c) in y.iter_mut().zip(row) {
                // conj(c) * x
                yj.re += c.re * xre + c.im * xim;
                yj.im += c.re * xim - c.im * xre;
            }
        }
        Ok(())
    }

    /// `C_m x` for a single aperture block.
    pub fn block_matvec(&self, m: usize, x: &[Complex]) -> Result<Vec<Complex>> {
        Error::check_len("C_m·x input", self.cols(), x.len())?;
        if m >= self.blocks {
            return Err(Error::DimensionMismatch {
                context: "aperture block index",
                expected: self.blocks,
                actual: m,
            });
        }
        let n = self.cols();
        let rows = &self.data[m * self.block_len * n..(m + 1) * self.block_len * n];
        Ok(rows
            .chunks_exact(n)
            .map(|row| {
                let mut acc = Complex::new(0.0, 0.0);
                for (a, b) in row.iter().zip(x) {
                    acc += a * b;
                }
                acc
            })
            .collect())
    }
}

/// One phase-error angle per aperture position, wrapped to `[−π, π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseErrorVector {
    angles: Vec<f64>,
}

impl PhaseErrorVector {
    pub fn new(angles: Vec<f64>) -> Self {
        Self {
            angles: angles.into_iter().map(wrap_angle).collect(),
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            angles: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn negated(&self) -> Self {
        Self::new(self.angles.iter().map(|a| -a).collect())
    }
}

/// How synthetic phase errors are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseErrorModel {
    /// i.i.d. uniform on `[−π, π)` per aperture.
    Uniform,
    /// `Σ_{k=2}^{order} a_k u^k` over `u ∈ [−1, 1]` with `a_k ~ U[−amplitude, amplitude]`.
    Polynomial { order: usize, amplitude_rad: f64 },
}

impl PhaseErrorModel {
    pub fn generate(&self, apertures: usize, seed: u64) -> Result<PhaseErrorVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(PHASE_STREAM);
        match *self {
            PhaseErrorModel::Uniform => Ok(PhaseErrorVector::new(
                (0..apertures).map(|_| rng.random_range(-PI..PI)).collect(),
            )),
            PhaseErrorModel::Polynomial {
                order,
                amplitude_rad,
            } => {
                if order < 2 {
                    return Err(Error::invalid("order", "polynomial phase error needs order ≥ 2"));
                }
                if !(amplitude_rad.is_finite() && amplitude_rad >= 0.0) {
                    return Err(Error::invalid("amplitude_rad", "must be finite and non-negative"));
                }
                let coeffs: Vec<f64> = (2..=order)
                    .map(|_| rng.random_range(-1.0..=1.0) * amplitude_rad)
                    .collect();
                let u = uniform_span(-1.0, 2.0, apertures);
                Ok(PhaseErrorVector::new(
                    u.iter()
                        .map(|&u| {
                            coeffs
                                .iter()
                                .enumerate()
                                .map(|(i, a)| a * math::pow(u, (i + 2) as f64))
                                .sum()
                        })
                        .collect(),
                ))
            }
        }
    }
}

/// Recorded (possibly corrupted) phase history `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseHistory {
    pub samples: Vec<Complex>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl PhaseHistory {
    pub fn new(samples: Vec<Complex>) -> Self {
        Self {
            samples,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.samples
    }
}

/// Per-aperture phase `U_c · Δy · sin θ_m` that a one-column cross-range
/// shift of the scene adds to the data, with `U_c` the centre spatial
/// frequency and `Δy` the column spacing of `grid`. Moving the scene by `k`
/// columns changes the data like adding `−k·ramp` to the phases, up to the
/// spread of `U` over the band, so linear phase errors are barely observable.
pub fn cross_range_shift_ramp(params: &RadarParams, grid: &SceneGrid) -> Result<Vec<f64>> {
    params.validate()?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let dy = if grid.cols() > 1 {
        grid.coords()[grid.rows()].1 - grid.coords()[0].1
    } else {
        0.0
    };
    let centre = params.spatial_frequency(params.demodulation_time_s + 0.5 * params.pulse_duration_s);
    Ok(params
        .look_angles(grid.cols())
        .into_iter()
        .map(|theta| centre * dy * math::sin_cos(theta).0)
        .collect())
}

/// Assemble the `N × N` observation matrix for `grid` under `params`.
pub fn build_observation_matrix(params: &RadarParams, grid: &SceneGrid) -> Result<ObservationMatrix> {
    params.validate()?;
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let radius = params.patch_radius_m;
    for (index, &(x, y)) in grid.coords().iter().enumerate() {
        if x * x + y * y > radius * radius * (1.0 + 1e-12) {
            return Err(Error::PixelOutsidePatch {
                index,
                x,
                y,
                radius,
            });
        }
    }

    let apertures = grid.cols();
    let samples = grid.rows();
    let n = grid.len();
    let freqs: Vec<f64> = params
        .fast_time_samples(samples)
        .into_iter()
        .map(|t| params.spatial_frequency(t))
        .collect();
    let angles = params.look_angles(apertures);

    let mut data = Vec::with_capacity(apertures * samples * n);
    let mut projection = vec![0.0; n];
    for &theta in &angles {
        let (sin_t, cos_t) = math::sin_cos(theta);
        for (p, &(x, y)) in projection.iter_mut().zip(grid.coords()) {
            *p = x * cos_t + y * sin_t;
        }
        for &u in &freqs {
            data.extend(projection.iter().map(|&p| math::cis(-u * p)));
        }
    }
    ObservationMatrix::from_row_major(data, apertures, samples, grid.rows(), grid.cols())
}

/// `C(φ)`: block `m` of `c` multiplied by `e^{jφ_m}`.
pub fn apply_phase_error(c: &ObservationMatrix, phi: &PhaseErrorVector) -> Result<ObservationMatrix> {
    let mut out = c.clone();
    rotate_blocks_into(c, phi, &mut out)?;
    Ok(out)
}

/// Like [`apply_phase_error`] but reuses the storage of `out`, which must
/// have the same layout as `c`.
pub fn rotate_blocks_into(
    c: &ObservationMatrix,
    phi: &PhaseErrorVector,
    out: &mut ObservationMatrix,
) -> Result<()> {
    Error::check_len("phase error vector", c.blocks(), phi.len())?;
    Error::check_len("rotated matrix rows", c.rows(), out.rows())?;
    Error::check_len("rotated matrix cols", c.cols(), out.cols())?;
    let block_size = c.block_len() * c.cols();
    for ((dst, src), &angle) in out
        .data
        .chunks_exact_mut(block_size)
        .zip(c.data.chunks_exact(block_size))
        .zip(phi.angles())
    {
        let rot = math::cis(angle);
        for (d, s) in dst.iter_mut().zip(src) {
            *d = rot * s;
        }
    }
    Ok(())
}

/// Multiply block `m` of a phase-history-shaped vector by `e^{jφ_m}` in place.
pub(crate) fn rotate_vector_blocks(v: &mut [Complex], block_len: usize, phi: &PhaseErrorVector) {
    for (chunk, &angle) in v.chunks_exact_mut(block_len).zip(phi.angles()) {
        let rot = math::cis(angle);
        for z in chunk {
            *z *= rot;
        }
    }
}

/// `g = C(φ) f + n` with circular Gaussian noise of standard deviation
/// `noise_sigma` on each of the real and imaginary parts.
pub fn simulate_phase_history(
    c: &ObservationMatrix,
    f: &ComplexImage,
    phi: &PhaseErrorVector,
    noise_sigma: f64,
    seed: u64,
) -> Result<PhaseHistory> {
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::invalid("noise_sigma", "must be finite and non-negative"));
    }
    Error::check_len("phase error vector", c.blocks(), phi.len())?;
    let mut samples = c.matvec(f.as_slice())?;
    rotate_vector_blocks(&mut samples, c.block_len(), phi);
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(NOISE_STREAM);
        let normal = Normal::new(0.0, noise_sigma)
            .map_err(|_| Error::invalid("noise_sigma", "rejected by the normal sampler"))?;
        for z in samples.iter_mut() {
            let re = normal.sample(&mut rng);
            let im = normal.sample(&mut rng);
            *z += Complex::new(re, im);
        }
    }
    Ok(PhaseHistory {
        samples,
        noise_sigma,
        seed,
    })
}

/// Per-component noise standard deviation giving `snr_db` relative to the
/// noiseless signal energy: `SNR = ‖signal‖² / (2σ²·len)`.
pub fn sigma_for_snr(signal: &[Complex], snr_db: f64) -> f64 {
    if signal.is_empty() {
        return 0.0;
    }
    let energy = linalg::norm_sqr(signal);
    let snr = math::pow(10.0, snr_db / 10.0);
    math::sqrt(energy / (2.0 * snr * signal.len() as f64))
}

/// `Cᴴ g`, the matched-filter image without autofocus.
pub fn adjoint_image(c: &ObservationMatrix, g: &PhaseHistory) -> Result<ComplexImage> {
    let data = c.adjoint_matvec(g.as_slice())?;
    let (rows, cols) = c.image_shape();
    ComplexImage::new(rows, cols, data)
}
