//! Overlap kernel of one Brownian step and the radial re-placement
//! distribution for released molecules.

use std::f64::consts::PI;

use crate::params::ChannelParams;
use crate::quad;
use crate::specfun::erfc_real;

use super::SimError;

/// Grid size of the tabulated re-placement distribution.
pub const SAMPLER_POINTS: usize = 4096;
/// The kernel is negligible beyond `a + SUPPORT_SIGMAS·σ`.
pub const SUPPORT_SIGMAS: f64 = 10.0;

/// Kernel width, `σ² = 4 D Δt`.
pub fn kernel_sigma(dt: f64, params: &ChannelParams) -> f64 {
    (4.0 * params.diffusion() * dt).sqrt()
}

fn check_step(dt: f64) -> Result<(), SimError> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(SimError::Domain(format!("step must be positive, got {dt:e}")))
    }
}

/// Probability that a molecule at radius `r` lands inside the receiver
/// after one step of length `dt`.
///
/// The first term is scaled by `σ`: the printed coefficient `a` gives
/// negative values near the surface and disagrees with direct sampling.
pub fn overlap_probability(r: f64, dt: f64, params: &ChannelParams) -> Result<f64, SimError> {
    check_step(dt)?;
    let a = params.a();
    if !(r.is_finite() && r >= a) {
        return Err(SimError::Domain(format!(
            "radius {r:e} m is inside the receiver (a = {a:e} m)"
        )));
    }
    Ok(overlap_unchecked(r, a, kernel_sigma(dt, params)))
}

fn overlap_unchecked(r: f64, a: f64, sigma: f64) -> f64 {
    let gauss = sigma / (2.0 * r * PI.sqrt())
        * ((-(r + a) * (r + a) / (sigma * sigma)).exp()
            - (-(r - a) * (r - a) / (sigma * sigma)).exp());
    // erf((r+a)/σ) + erf((a-r)/σ) written through erfc to keep the tail.
    let erfs = erfc_real((r - a) / sigma).unwrap_or(0.0) - erfc_real((r + a) / sigma).unwrap_or(0.0);
    let p = gauss + 0.5 * erfs;
    if (-1e-15..0.0).contains(&p) {
        0.0
    } else {
        p
    }
}

/// `ρ = ∫_a^∞ Pr(ovr | r) r² dr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rho {
    pub value: f64,
    pub error: f64,
    /// Estimate of the neglected integral beyond `a + 10σ`.
    pub tail_bound: f64,
}

pub fn compute_rho(dt: f64, params: &ChannelParams) -> Result<Rho, SimError> {
    check_step(dt)?;
    let a = params.a();
    let sigma = kernel_sigma(dt, params);
    let hi = a + SUPPORT_SIGMAS * sigma;
    let integral = quad::integrate(
        |r| overlap_unchecked(r, a, sigma) * r * r,
        a,
        hi,
        &[a + sigma, a + 3.0 * sigma],
        1e-12,
        0.0,
    )?;
    Ok(Rho {
        value: integral.value,
        error: integral.error,
        tail_bound: overlap_unchecked(hi, a, sigma) * hi * hi * sigma,
    })
}

/// Forward acceptance probability `k_f Δt / (4πρ)`.
pub fn acceptance_probability(rho: f64, dt: f64, params: &ChannelParams) -> f64 {
    params.k_f() * dt / (4.0 * PI * rho)
}

/// Tabulated inverse CDF of the density `Pr(ovr | r) r² / ρ` on
/// `[a, a + 10σ]`.
#[derive(Debug, Clone)]
pub struct OverlapSampler {
    radii: Vec<f64>,
    cdf: Vec<f64>,
    /// Normalized density at the grid radii.
    density: Vec<f64>,
    rho: f64,
}

const GL_X: [f64; 5] = [
    -0.906_179_845_938_664_0,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664_0,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

impl OverlapSampler {
    pub fn new(dt: f64, params: &ChannelParams) -> Result<Self, SimError> {
        check_step(dt)?;
        let a = params.a();
        let sigma = kernel_sigma(dt, params);
        let hi = a + SUPPORT_SIGMAS * sigma;
        let n = SAMPLER_POINTS;
        let ratio = (hi / a).ln();
        let mut radii: Vec<f64> = (0..n)
            .map(|i| a * (ratio * i as f64 / (n - 1) as f64).exp())
            .collect();
        radii[0] = a;
        radii[n - 1] = hi;

        let f = |r: f64| overlap_unchecked(r, a, sigma) * r * r;
        let mut cdf = Vec::with_capacity(n);
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in radii.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            acc += half
                * GL_X
                    .iter()
                    .zip(GL_W)
                    .map(|(x, wt)| wt * f(mid + half * x))
                    .sum::<f64>();
            cdf.push(acc);
        }
        let rho = acc;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(SimError::Domain(format!("overlap normalizer is {rho:e}")));
        }
        for c in cdf.iter_mut() {
            *c /= rho;
        }
        cdf[n - 1] = 1.0;
        let density = radii.iter().map(|&r| f(r) / rho).collect();
        Ok(OverlapSampler {
            radii,
            cdf,
            density,
            rho,
        })
    }

    /// Normalizer accumulated from the tabulation.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Radius with `CDF(r) = u`, `u ∈ [0, 1)`.
    ///
    /// Within a cell the CDF is a cubic Hermite interpolant using the
    /// tabulated density as slope, with Fritsch–Carlson limiting so it
    /// stays monotone; the cubic is inverted by safeguarded Newton.
    pub fn sample(&self, u: f64) -> f64 {
        let n = self.radii.len();
        // First index with cdf > u; the cell is [i - 1, i].
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, n - 1);
        let (r0, r1) = (self.radii[i - 1], self.radii[i]);
        let (f0, f1) = (self.cdf[i - 1], self.cdf[i]);
        let h = r1 - r0;
        let df = f1 - f0;
        if df <= 0.0 {
            return r0;
        }
        let secant = df / h;
        let (mut m0, mut m1) = (self.density[i - 1], self.density[i]);
        let (alpha, beta) = (m0 / secant, m1 / secant);
        let norm = alpha * alpha + beta * beta;
        if norm > 9.0 {
            let tau = 3.0 / norm.sqrt();
            m0 *= tau;
            m1 *= tau;
        }
        // Hermite basis on s ∈ [0, 1].
        let value = |s: f64| {
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * f0
                + (s3 - 2.0 * s2 + s) * h * m0
                + (-2.0 * s3 + 3.0 * s2) * f1
                + (s3 - s2) * h * m1
        };
        let slope = |s: f64| {
            let s2 = s * s;
            (6.0 * s2 - 6.0 * s) * f0
                + (3.0 * s2 - 4.0 * s + 1.0) * h * m0
                + (-6.0 * s2 + 6.0 * s) * f1
                + (3.0 * s2 - 2.0 * s) * h * m1
        };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut s = ((u - f0) / df).clamp(0.0, 1.0);
        for _ in 0..50 {
            let g = value(s) - u;
            if g.abs() <= 1e-15 * df.max(f64::MIN_POSITIVE) {
                break;
            }
            if g > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let d = slope(s);
            let next = if d > 0.0 { s - g / d } else { f64::NAN };
            s = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 1e-15 {
                break;
            }
        }
        r0 + s * h
    }
}
