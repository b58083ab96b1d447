//! Closed frequency regions that bound the spectrum of a field.

use crate::error::{param, Result};

/// Relative slack used for closed-boundary membership tests.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Frequency support of a field. Frequencies are angular (rad per unit of the
/// corresponding axis). All regions are closed: a frequency on the boundary is
/// inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandRegion {
    /// One-dimensional band `[-rho, rho]`.
    Interval { rho: f64 },
    /// Two-dimensional rectangle `[-rho_x, rho_x] x [-rho_y, rho_y]`.
    Rectangle { rho_x: f64, rho_y: f64 },
    /// Two-dimensional strip bounded on `axis` only.
    Strip { axis: usize, rho: f64 },
    /// Far-field wave spectrum on the `(omega_x, omega_t)` plane: the bow-tie
    /// `|omega_x| <= |omega_t| / c`, truncated at `|omega_t| <= rho_t`.
    WaveCone { rho_t: f64, c: f64 },
}

impl BandRegion {
    pub fn interval(rho: f64) -> Result<Self> {
        let b = BandRegion::Interval { rho };
        b.validate()?;
        Ok(b)
    }

    pub fn square(rho: f64) -> Result<Self> {
        Self::rectangle(rho, rho)
    }

    pub fn rectangle(rho_x: f64, rho_y: f64) -> Result<Self> {
        let b = BandRegion::Rectangle { rho_x, rho_y };
        b.validate()?;
        Ok(b)
    }

    pub fn strip(axis: usize, rho: f64) -> Result<Self> {
        let b = BandRegion::Strip { axis, rho };
        b.validate()?;
        Ok(b)
    }

    pub fn wave_cone(rho_t: f64, c: f64) -> Result<Self> {
        let b = BandRegion::WaveCone { rho_t, c };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(param(format!("band {name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            BandRegion::Interval { rho } => positive("rho", rho),
            BandRegion::Rectangle { rho_x, rho_y } => {
                positive("rho_x", rho_x)?;
                positive("rho_y", rho_y)
            }
            BandRegion::Strip { axis, rho } => {
                if axis > 1 {
                    return Err(param(format!("strip axis must be 0 or 1, got {axis}")));
                }
                positive("rho", rho)
            }
            BandRegion::WaveCone { rho_t, c } => {
                positive("rho_t", rho_t)?;
                positive("c", c)
            }
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            BandRegion::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Largest `|omega|` reached along each axis, `None` when unbounded.
    /// The second entry is `Some(0.0)` for one-dimensional bands.
    pub fn extent(&self) -> [Option<f64>; 2] {
        match *self {
            BandRegion::Interval { rho } => [Some(rho), Some(0.0)],
            BandRegion::Rectangle { rho_x, rho_y } => [Some(rho_x), Some(rho_y)],
            BandRegion::Strip { axis: 0, rho } => [Some(rho), None],
            BandRegion::Strip { rho, .. } => [None, Some(rho)],
            BandRegion::WaveCone { rho_t, c } => [Some(rho_t / c), Some(rho_t)],
        }
    }

    pub fn contains(&self, w: [f64; 2]) -> bool {
        let le = |a: f64, b: f64| a <= b * (1.0 + BOUNDARY_SLACK) + BOUNDARY_SLACK * f64::EPSILON;
        match *self {
            BandRegion::Interval { rho } => le(w[0].abs(), rho),
            BandRegion::Rectangle { rho_x, rho_y } => le(w[0].abs(), rho_x) && le(w[1].abs(), rho_y),
            BandRegion::Strip { axis, rho } => le(w[axis].abs(), rho),
            BandRegion::WaveCone { rho_t, c } => {
                le(w[1].abs(), rho_t) && le(w[0].abs() * c, w[1].abs())
            }
        }
    }
}
