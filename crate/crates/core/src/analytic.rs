//! Closed-form channel model.
//!
//! The Laplace-domain denominator is a cubic in `√(s + k_d)`; its negated
//! roots `α, β, γ` and the partial-fraction residues `η1..η3` parameterize
//! the time-domain Green's function and the channel impulse response. Both
//! are sums of three `W(n, m)` kernels which are complex individually
//! whenever two roots form a conjugate pair, and real in sum.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::cubic;
use crate::oracle;
use crate::params::ChannelParams;
use crate::quad::{self, QuadError};
use crate::series::{validate_grid, SeriesError, SignalSeries};
use crate::specfun::{w_paper_scaled, SpecFunError};

/// Relative imaginary residue tolerated in a sum of `W` terms.
pub const REALNESS_TOL: f64 = 1e-9;
/// Pairwise root separation below this fraction of the root scale marks
/// the triple degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Probabilities this far outside `[0, 1]` are clamped; further is an error.
pub const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("roots are degenerate (min separation {separation:e} < {threshold:e}); use the Laplace oracle")]
    DegenerateRoots { separation: f64, threshold: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("{0}")]
    Domain(String),
    #[error("imaginary leak {imag:e} against term scale {scale:e}")]
    ImaginaryLeak { imag: f64, scale: f64 },
    #[error("probability {0:e} outside [0, 1]")]
    Range(f64),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("oracle fallback failed: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, AnalyticError>;

/// Negated cubic roots and their residues, all in s^-1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootTriple {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub eta1: Complex64,
    pub eta2: Complex64,
    pub eta3: Complex64,
}

impl RootTriple {
    pub fn roots(&self) -> [Complex64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    pub fn residues(&self) -> [Complex64; 3] {
        [self.eta1, self.eta2, self.eta3]
    }

    /// Builds the triple from roots in the given order, computing the
    /// residues. Callers are responsible for separation.
    pub fn from_roots(alpha: Complex64, beta: Complex64, gamma: Complex64) -> Self {
        let (a, b, g) = (alpha, beta, gamma);
        RootTriple {
            alpha,
            beta,
            gamma,
            eta1: a * (g + a) * (a + b) / ((g - a) * (a - b)),
            eta2: b * (g + b) * (a + b) / ((b - g) * (a - b)),
            eta3: g * (g + b) * (a + g) / ((b - g) * (g - a)),
        }
    }

    /// Weights of the three `W` terms in the impulse response.
    pub fn impulse_weights(&self) -> [Complex64; 3] {
        let (a, b, g) = (self.alpha, self.beta, self.gamma);
        [
            a / ((g - a) * (a - b)),
            b / ((b - g) * (a - b)),
            g / ((b - g) * (g - a)),
        ]
    }

    pub fn min_separation(&self) -> f64 {
        let [a, b, g] = self.roots();
        (a - b).norm().min((b - g).norm()).min((g - a).norm())
    }
}

/// Coefficients `[c2, c1, c0]` of the monic cubic `x³ + c2 x² + c1 x + c0`
/// whose roots are `-α, -β, -γ`.
pub fn cubic_coefficients(params: &ChannelParams) -> [f64; 3] {
    let ratio = params.k_f() / params.diffusion_limited_rate();
    let root_rate = params.root_rate();
    let c2 = (1.0 + ratio) * root_rate;
    let c1 = params.k_b() - params.k_d();
    let c0 = params.k_b() * root_rate - params.k_d() * c2;
    [c2, c1, c0]
}

/// Solves the root system and computes the residues.
///
/// Roots are ordered by (real part, imaginary part). Fails with
/// [`AnalyticError::DegenerateRoots`] when two roots (nearly) coincide,
/// e.g. `k_b = k_d = 0`, where the cubic is `x²(x + c2)`.
pub fn solve_roots(params: &ChannelParams) -> Result<RootTriple> {
    let coeffs = cubic_coefficients(params);
    let mut alphas = cubic::solve_monic(coeffs).map(|x| -x);
    if alphas.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return Err(AnalyticError::NonFinite("cubic roots"));
    }
    alphas.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let [alpha, beta, gamma] = alphas;

    let scale = alphas
        .iter()
        .map(|a| a.norm())
        .fold(params.root_rate(), f64::max);
    let threshold = DEGENERACY_TOL * scale;
    let separation = (alpha - beta)
        .norm()
        .min((beta - gamma).norm())
        .min((gamma - alpha).norm());
    if separation < threshold {
        return Err(AnalyticError::DegenerateRoots {
            separation,
            threshold,
        });
    }
    let triple = RootTriple::from_roots(alpha, beta, gamma);
    if triple
        .residues()
        .iter()
        .any(|e| !(e.re.is_finite() && e.im.is_finite()))
    {
        return Err(AnalyticError::NonFinite("residues"));
    }
    Ok(triple)
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(AnalyticError::Domain(format!("time must be positive, got {t:e}")))
    }
}

/// Sums `Σ w_i · exp(-k_d t) W(n, root_i √t)` and checks that it is real.
fn weighted_kernel_sum(
    weights: [Complex64; 3],
    roots: [Complex64; 3],
    n: f64,
    t: f64,
    k_d: f64,
) -> Result<f64> {
    let sqrt_t = t.sqrt();
    let n = Complex64::new(n, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (w, root) in weights.iter().zip(roots) {
        let term = w * w_paper_scaled(n, root * sqrt_t, -k_d * t)?;
        scale += term.norm();
        sum += term;
    }
    if !(sum.re.is_finite() && sum.im.is_finite()) {
        return Err(AnalyticError::NonFinite("W-term sum"));
    }
    if scale > 0.0 && sum.im.abs() > REALNESS_TOL * scale {
        return Err(AnalyticError::ImaginaryLeak {
            imag: sum.im,
            scale,
        });
    }
    Ok(sum.re)
}

/// Probability density (m⁻³) of a free molecule at radius `r` and time `t`.
///
/// The residue-weighted `W` sum is added to the free and image Gaussians;
/// with `η1..η3` as defined in [`RootTriple::from_roots`] this is the exact
/// inverse of the Laplace-domain solution (see `oracle::laplace_green`).
pub fn green_function(r: f64, t: f64, params: &ChannelParams, roots: &RootTriple) -> Result<f64> {
    check_time(t)?;
    let (a, r0, d, k_d) = (params.a(), params.r0(), params.diffusion(), params.k_d());
    if !(r.is_finite() && r >= a) {
        return Err(AnalyticError::Domain(format!(
            "radius {r:e} m is inside the receiver (a = {a:e} m)"
        )));
    }
    let four_dt = 4.0 * d * t;
    let image = r + r0 - 2.0 * a;
    let gauss = ((-k_d * t - (r - r0).powi(2) / four_dt).exp()
        + (-k_d * t - image * image / four_dt).exp())
        / (8.0 * PI * r * r0 * (PI * d * t).sqrt());
    let n = image / four_dt.sqrt();
    let w_sum = weighted_kernel_sum(roots.residues(), roots.roots(), n, t, k_d)?;
    let value = gauss + w_sum / (4.0 * PI * r * r0 * d.sqrt());
    if !value.is_finite() {
        return Err(AnalyticError::NonFinite("green function"));
    }
    Ok(value)
}

/// Channel impulse response: probability that a molecule released at `r0`
/// is bound at the receiver at time `t`.
pub fn impulse_response(t: f64, params: &ChannelParams, roots: &RootTriple) -> Result<f64> {
    check_time(t)?;
    let (a, r0, d) = (params.a(), params.r0(), params.diffusion());
    let n = (r0 - a) / (4.0 * d * t).sqrt();
    let sum = weighted_kernel_sum(roots.impulse_weights(), roots.roots(), n, t, params.k_d())?;
    let value = params.k_f() / (4.0 * PI * r0 * a * d.sqrt()) * sum;
    clamp_probability(value)
}

pub(crate) fn clamp_probability(value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(AnalyticError::NonFinite("probability"));
    }
    if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&value) {
        return Err(AnalyticError::Range(value));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// `S(t) = 1 - P_AC(t)`.
pub fn survival_probability(t: f64, params: &ChannelParams, roots: &RootTriple) -> Result<f64> {
    Ok(1.0 - impulse_response(t, params, roots)?)
}

/// Expected number of bound molecules `N_A · P_AC(t)` on `grid`.
pub fn expected_received(grid: &[f64], params: &ChannelParams) -> Result<SignalSeries> {
    validate_grid(grid)?;
    let roots = solve_roots(params)?;
    let n = params.n_molecules() as f64;
    let values = grid
        .iter()
        .map(|&t| impulse_response(t, params, &roots).map(|p| n * p))
        .collect::<Result<Vec<_>>>()?;
    let series = SignalSeries::new(grid.to_vec(), values)?;
    series.check_bounds(n)?;
    Ok(series)
}

/// How a channel response value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    ClosedForm,
    /// Roots were degenerate; the Laplace-domain solution was inverted
    /// numerically instead.
    OracleFallback,
}

/// Like [`expected_received`], but falls back to numerical Laplace inversion
/// when the root triple is degenerate.
pub fn expected_received_or_fallback(
    grid: &[f64],
    params: &ChannelParams,
) -> Result<(SignalSeries, Evaluation)> {
    match expected_received(grid, params) {
        Ok(series) => Ok((series, Evaluation::ClosedForm)),
        Err(AnalyticError::DegenerateRoots { .. }) => {
            let series = oracle::expected_received_via_oracle(grid, params)
                .map_err(|e| AnalyticError::Oracle(e.to_string()))?;
            Ok((series, Evaluation::OracleFallback))
        }
        Err(e) => Err(e),
    }
}

/// `P_AC(t)` by the closed form, or by the oracle when the roots are
/// degenerate.
pub fn channel_response(t: f64, params: &ChannelParams) -> Result<(f64, Evaluation)> {
    match solve_roots(params) {
        Ok(roots) => Ok((impulse_response(t, params, &roots)?, Evaluation::ClosedForm)),
        Err(AnalyticError::DegenerateRoots { .. }) => {
            let p = oracle::impulse_response_via_oracle(t, params)
                .map_err(|e| AnalyticError::Oracle(e.to_string()))?;
            Ok((p, Evaluation::OracleFallback))
        }
        Err(e) => Err(e),
    }
}

/// Probability that the molecule is still free at time `t`:
/// `∫ 4πr² P_A(r, t) dr` over `[a, r0 + 12·√(2 D_A t)]`.
pub fn free_probability(t: f64, params: &ChannelParams, roots: &RootTriple) -> Result<f64> {
    check_time(t)?;
    let spread = (2.0 * params.diffusion() * t).sqrt();
    let hi = params.r0() + 12.0 * spread;
    let mut failure = None;
    let integral = quad::integrate(
        |r| match green_function(r, t, params, roots) {
            Ok(g) => 4.0 * PI * r * r * g,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        params.a(),
        hi,
        &[params.r0() - spread, params.r0(), params.r0() + spread],
        1e-10,
        0.0,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(integral?.value)
}
