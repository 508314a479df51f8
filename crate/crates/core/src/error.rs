use alloc::boxed::Box;
use alloc::string::String;

/// Errors reported by the reconstruction pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("scene grid is empty")]
    EmptyGrid,

    #[error("pixel {index} at ({x} m, {y} m) lies outside the patch radius {radius} m")]
    PixelOutsidePatch {
        index: usize,
        x: f64,
        y: f64,
        radius: f64,
    },

    #[error("{operation} is not defined for the {penalty} penalty")]
    Unsupported {
        operation: &'static str,
        penalty: &'static str,
    },

    #[error("conjugate gradient broke down at iteration {iteration} (non-positive curvature {curvature:e})")]
    CgBreakdown { iteration: usize, curvature: f64 },

    #[error("entropy is undefined for an all-zero image")]
    ZeroImage,

    #[error("outer iteration {iteration}: {source}")]
    Outer {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                context,
                expected,
                actual,
            })
        }
    }
}
