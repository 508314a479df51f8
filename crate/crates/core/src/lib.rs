//! Joint reconstruction of complex SAR reflectivity images and 1D azimuth
//! phase errors.
//!
//! The crate is organised around the alternating minimisation of
//!
//! ```text
//! J(f, φ) = ‖g − C(φ) f‖² + λ R(f)
//! ```
//!
//! where `C(φ)` is a spotlight-mode observation matrix whose aperture blocks
//! carry an unknown phase rotation each. Two interchangeable image solvers
//! are provided:
//!
//! * [`cfba`]: complex forward–backward splitting with the closed-form
//!   magnitude-Cauchy proximal operator;
//! * [`wama`]: a single fixed-point step of the Wirtinger normal equations,
//!   solved with complex conjugate gradients.
//!
//! The phase errors are updated in closed form by [`autofocus::phase_update`]
//! and the outer loop lives in [`autofocus::run_autofocus`].
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled; wall-clock timing in cost traces is only recorded with `std`.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod autofocus;
pub mod cfba;
pub mod error;
pub mod forward_model;
pub mod linalg;
mod math;
pub mod metrics;
pub mod regularizers;
pub mod wama;

pub use error::{Error, Result};
pub use num_complex::Complex64 as Complex;

pub use autofocus::{run_autofocus, AutofocusConfig, AutofocusResult, CostTrace, Engine};
pub use forward_model::{
    ComplexImage, ObservationMatrix, PhaseErrorVector, PhaseHistory, RadarParams, SceneGrid,
};
pub use regularizers::{Penalty, RegularizerSpec};
