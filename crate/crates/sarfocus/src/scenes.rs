//! Built-in synthetic reflectivity scenes.
//!
//! All scenes have zero phase and magnitudes in `[0, 1]`. Positions are given
//! as fractions of the side length and mapped to pixels with
//! `⌊fraction · size⌋`.

use sarfocus_core::ComplexImage;

use crate::error::HarnessError;

pub const BUILTIN_SCENES: [&str; 3] = ["points", "blocks", "constant"];

/// Unit reflectors of the `points` scene as `(row, col)` fractions.
///
/// The spacing is deliberately irregular: a periodic lattice concentrates the
/// cross-range spectrum on a few apertures and leaves the others without
/// signal to estimate their phase from.
pub const POINT_FRACTIONS: [(f64, f64); 12] = [
    (0.15, 0.20),
    (0.15, 0.55),
    (0.28, 0.80),
    (0.35, 0.35),
    (0.42, 0.92),
    (0.50, 0.12),
    (0.50, 0.62),
    (0.62, 0.45),
    (0.70, 0.85),
    (0.80, 0.25),
    (0.85, 0.55),
    (0.92, 0.08),
];

/// Rectangles `(row_start, row_end, col_start, col_end, magnitude)` of the
/// `blocks` scene, half-open in fractions of the side.
pub const BLOCKS: [(f64, f64, f64, f64, f64); 3] = [
    (0.15, 0.40, 0.10, 0.35, 1.0),
    (0.55, 0.85, 0.20, 0.45, 0.6),
    (0.25, 0.70, 0.60, 0.80, 0.8),
];

fn to_pixel(fraction: f64, size: usize) -> usize {
    ((fraction * size as f64).floor() as usize).min(size - 1)
}

/// Pixel coordinates `(row, col)` of the `points` reflectors for a square
/// scene of the given side.
pub fn point_pixels(size: usize) -> Vec<(usize, usize)> {
    let mut pixels: Vec<(usize, usize)> = POINT_FRACTIONS
        .iter()
        .map(|&(r, c)| (to_pixel(r, size), to_pixel(c, size)))
        .collect();
    pixels.sort_unstable();
    pixels.dedup();
    pixels
}

pub fn make_builtin_scene(name: &str, size: usize) -> Result<ComplexImage, HarnessError> {
    if size == 0 {
        return Err(HarnessError::config("scene.size", "must be at least 1"));
    }
    let mut magnitudes = vec![0.0; size * size];
    let at = |r: usize, c: usize| c * size + r;
    match name {
        "points" => {
            for (r, c) in point_pixels(size) {
                magnitudes[at(r, c)] = 1.0;
            }
        }
        "blocks" => {
            for &(r0, r1, c0, c1, value) in &BLOCKS {
                for r in to_pixel(r0, size)..to_pixel(r1, size) {
                    for c in to_pixel(c0, size)..to_pixel(c1, size) {
                        magnitudes[at(r, c)] = value;
                    }
                }
            }
        }
        "constant" => magnitudes.fill(1.0),
        other => {
            return Err(HarnessError::config(
                "scene.builtin",
                format!("unknown scene {other:?}; expected one of {BUILTIN_SCENES:?}"),
            ))
        }
    }
    Ok(ComplexImage::from_magnitudes(size, size, &magnitudes)?)
}
