//! Physical and chemical parameters of the channel.
//!
//! Everything is strict SI: lengths in meters, `D_A` in m²/s, `k_f` in m³/s
//! (volume per molecule per second), `k_b` and `k_d` in 1/s. Unit conversion
//! from configuration files happens in the harness, never here.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Unvalidated field values. Turn them into [`ChannelParams`] with
/// [`ChannelParams::new`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawParams {
    /// Receiver radius `a` (m).
    pub a: f64,
    /// Transmitter distance from the receiver center `r0` (m).
    pub r0: f64,
    /// Diffusion coefficient `D_A` (m²/s).
    pub diffusion: f64,
    /// Forward surface reaction constant `k_f` (m³/s).
    pub k_f: f64,
    /// Backward reaction constant `k_b` (1/s).
    pub k_b: f64,
    /// Degradation constant `k_d` (1/s).
    pub k_d: f64,
    /// Number of released molecules `N_A`.
    pub n_molecules: u64,
}

impl RawParams {
    /// Geometry and diffusion used in every experiment of the reference
    /// setup: `a = 0.5 µm`, `r0 = 1 µm`, `D_A = 5e-9 m²/s`, `N_A = 5000`,
    /// `k_f = 3.14e-14 m³/s`, no backward reaction and no degradation.
    pub const fn baseline() -> Self {
        RawParams {
            a: 0.5e-6,
            r0: 1.0e-6,
            diffusion: 5.0e-9,
            k_f: 3.14e-14,
            k_b: 0.0,
            k_d: 0.0,
            n_molecules: 5000,
        }
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("transmitter distance r0 = {r0:e} m must exceed receiver radius a = {a:e} m")]
    Geometry { a: f64, r0: f64 },
    #[error("{field} = {value:e} is out of its domain ({requirement})")]
    Domain {
        field: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("{field} is not finite")]
    NonFinite { field: &'static str },
}

/// Every violation found while validating a [`RawParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid channel parameters: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParamError {}

/// Validated, immutable parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    raw: RawParams,
}

impl ChannelParams {
    /// Validates `raw`, reporting every violation rather than the first.
    pub fn new(raw: RawParams) -> Result<Self, ParamError> {
        let mut violations = Vec::new();
        let fields = [
            ("a", raw.a),
            ("r0", raw.r0),
            ("D_A", raw.diffusion),
            ("k_f", raw.k_f),
            ("k_b", raw.k_b),
            ("k_d", raw.k_d),
        ];
        for (field, value) in fields {
            if !value.is_finite() {
                violations.push(Violation::NonFinite { field });
            }
        }
        for (field, value) in [("a", raw.a), ("D_A", raw.diffusion)] {
            if value.is_finite() && value <= 0.0 {
                violations.push(Violation::Domain {
                    field,
                    value,
                    requirement: "> 0",
                });
            }
        }
        for (field, value) in [("k_f", raw.k_f), ("k_b", raw.k_b), ("k_d", raw.k_d)] {
            if value.is_finite() && value < 0.0 {
                violations.push(Violation::Domain {
                    field,
                    value,
                    requirement: ">= 0",
                });
            }
        }
        if raw.a.is_finite() && raw.r0.is_finite() && raw.r0 <= raw.a {
            violations.push(Violation::Geometry {
                a: raw.a,
                r0: raw.r0,
            });
        }
        if violations.is_empty() {
            Ok(ChannelParams { raw })
        } else {
            Err(ParamError { violations })
        }
    }

    pub fn baseline() -> Self {
        ChannelParams {
            raw: RawParams::baseline(),
        }
    }

    pub fn raw(&self) -> RawParams {
        self.raw
    }

    pub fn a(&self) -> f64 {
        self.raw.a
    }

    pub fn r0(&self) -> f64 {
        self.raw.r0
    }

    pub fn diffusion(&self) -> f64 {
        self.raw.diffusion
    }

    pub fn k_f(&self) -> f64 {
        self.raw.k_f
    }

    pub fn k_b(&self) -> f64 {
        self.raw.k_b
    }

    pub fn k_d(&self) -> f64 {
        self.raw.k_d
    }

    pub fn n_molecules(&self) -> u64 {
        self.raw.n_molecules
    }

    /// Diffusion-limited rate constant `k_D = 4π a D_A` (m³/s).
    pub fn diffusion_limited_rate(&self) -> f64 {
        4.0 * PI * self.raw.a * self.raw.diffusion
    }

    /// `√D_A / a`, the inverse-root-time scale of the receiver (s^-1/2).
    pub fn root_rate(&self) -> f64 {
        self.raw.diffusion.sqrt() / self.raw.a
    }

    /// Re-validates after applying `f` to a copy of the raw fields.
    pub fn with(&self, f: impl FnOnce(&mut RawParams)) -> Result<Self, ParamError> {
        let mut raw = self.raw;
        f(&mut raw);
        ChannelParams::new(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_is_valid() {
        let p = ChannelParams::new(RawParams::baseline()).unwrap();
        assert_eq!(p, ChannelParams::baseline());
    }

    #[test]
    fn kd_rate_matches_direct_arithmetic() {
        let p = ChannelParams::baseline();
        let expected = 4.0 * PI * 0.5e-6 * 5e-9;
        assert!((p.diffusion_limited_rate() - expected).abs() <= 1e-15 * expected);
        assert!((p.diffusion_limited_rate() - 3.1416e-14).abs() < 1e-18);
    }

    #[test]
    fn kd_rate_is_linear_in_diffusion() {
        let p = ChannelParams::baseline();
        let q = p.with(|r| r.diffusion *= 2.0).unwrap();
        assert_eq!(q.diffusion_limited_rate(), 2.0 * p.diffusion_limited_rate());
    }

    #[test]
    fn kd_rate_unit_normalization() {
        let p = ChannelParams::new(RawParams {
            a: 1.0,
            r0: 2.0,
            diffusion: 1.0 / (4.0 * PI),
            ..RawParams::baseline()
        })
        .unwrap();
        assert!((p.diffusion_limited_rate() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn touching_transmitter_is_a_geometry_error() {
        let err = ChannelParams::baseline().with(|r| r.r0 = r.a).unwrap_err();
        assert!(matches!(err.violations[..], [Violation::Geometry { .. }]));
    }

    #[test]
    fn negative_degradation_is_a_domain_error() {
        let err = ChannelParams::baseline().with(|r| r.k_d = -1.0).unwrap_err();
        assert!(matches!(
            err.violations[..],
            [Violation::Domain { field: "k_d", .. }]
        ));
    }

    #[test]
    fn all_violations_are_reported() {
        let err = ChannelParams::new(RawParams {
            a: -1.0,
            r0: f64::NAN,
            diffusion: 0.0,
            k_f: -2.0,
            k_b: f64::INFINITY,
            k_d: -3.0,
            n_molecules: 1,
        })
        .unwrap_err();
        assert_eq!(err.violations.len(), 6);
        assert!(err.to_string().contains("k_f"));
    }
}
