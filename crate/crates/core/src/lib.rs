//! Diffusive molecular channel with a reactive receiver: a spherical
//! receiver of radius `a` that binds molecules reversibly (`k_f`, `k_b`)
//! while free molecules degrade (`k_d`).
//!
//! The expected number of bound molecules is computed three ways:
//! [`analytic`] in closed form, [`oracle`] by numerically inverting the
//! Laplace-domain solution, and [`sim`] by Brownian particle simulation.
//! [`harness`] runs parameter sweeps over all of them.

#![allow(clippy::excessive_precision)]

pub mod analytic;
pub(crate) mod cubic;
pub mod harness;
pub mod oracle;
pub mod params;
pub mod quad;
pub mod series;
pub mod sim;
pub mod specfun;
