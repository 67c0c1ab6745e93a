//! Laplace-domain channel solution and fixed-Talbot numerical inversion.
//!
//! Everything here is computed from the transformed diffusion problem
//! directly; the only shared pieces with [`crate::analytic`] are the
//! parameters and, in [`check_partial_fractions`], the root triple under
//! test.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::analytic::{self, AnalyticError, RootTriple};
use crate::params::ChannelParams;
use crate::series::{validate_grid, SeriesError, SignalSeries};

pub const DEFAULT_NODES: usize = 32;
/// Relative disagreement between `M` and `2M` nodes that raises a warning.
pub const DOUBLING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceWarning {
    pub t: f64,
    pub value: f64,
    pub doubled: f64,
    pub relative: f64,
}

impl std::fmt::Display for ConvergenceWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Talbot node doubling disagrees at t = {:e}: {:e} vs {:e} (relative {:e})",
            self.t, self.value, self.doubled, self.relative
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{0}")]
    Domain(String),
    #[error("s = {0} lies on the branch cut of sqrt(s + k_d)")]
    Branch(Complex64),
    #[error("transform not finite on the contour at t = {t:e}, node {node}")]
    Contour { t: f64, node: Complex64 },
    #[error("{0}")]
    Convergence(ConvergenceWarning),
    #[error("probability {0:e} outside [0, 1]")]
    Range(f64),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// What a [`LaplaceEvaluator`] transforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Free-molecule density at radius `r` (m).
    GreenAtR(f64),
    /// Bound probability, the time integral of the net surface flux.
    ImpulseResponse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceEvaluator {
    pub params: ChannelParams,
    pub target: Target,
    pub nodes: usize,
}

impl LaplaceEvaluator {
    pub fn new(params: ChannelParams, target: Target) -> Result<Self> {
        if let Target::GreenAtR(r) = target {
            check_radius(r, &params)?;
        }
        Ok(LaplaceEvaluator {
            params,
            target,
            nodes: DEFAULT_NODES,
        })
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    /// The transform at `s`.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let u = shifted(s, &self.params)?;
        let (amp, delay) = self.split(u);
        Ok(amp * (-delay * u.sqrt()).exp())
    }

    /// Writes the transform as `amp(u) · exp(-delay·√u)` with `u = s + k_d`
    /// so the contour sum can fold the exponential into `e^{ut}` and avoid
    /// overflow at short times.
    fn split(&self, u: Complex64) -> (Complex64, f64) {
        let p = &self.params;
        let sqrt_d = p.diffusion().sqrt();
        match self.target {
            Target::GreenAtR(r) => {
                let near = (r - p.r0()).abs();
                let far = r + p.r0() - 2.0 * p.a();
                let x = u.sqrt();
                let q = reaction_factor(u, p);
                let den = 8.0 * PI * r * p.r0() * sqrt_d * x;
                let amp = (1.0 + (1.0 - 2.0 * q) * (-(far - near) / sqrt_d * x).exp()) / den;
                (amp, near / sqrt_d)
            }
            Target::ImpulseResponse => (flux_over_s_amplitude(u, p), (p.r0() - p.a()) / sqrt_d),
        }
    }

    fn talbot(&self) -> Talbot {
        let p = &self.params;
        let delay = match self.target {
            Target::GreenAtR(r) => (r - p.r0()).abs(),
            Target::ImpulseResponse => p.r0() - p.a(),
        } / p.diffusion().sqrt();
        Talbot {
            nodes: self.nodes,
            shift: p.k_d(),
            delay,
            ..Talbot::new(self.nodes)
        }
        .around_poles(&principal_poles(analytic::cubic_coefficients(p)))
    }
}

fn check_radius(r: f64, params: &ChannelParams) -> Result<()> {
    if r.is_finite() && r >= params.a() {
        Ok(())
    } else {
        Err(OracleError::Domain(format!(
            "radius {r:e} m is inside the receiver (a = {:e} m)",
            params.a()
        )))
    }
}

/// `u = s + k_d`, rejecting the cut `u ∈ (-∞, 0]`.
fn shifted(s: Complex64, params: &ChannelParams) -> Result<Complex64> {
    let u = s + params.k_d();
    if !(u.re.is_finite() && u.im.is_finite()) || (u.im == 0.0 && u.re <= 0.0) {
        return Err(OracleError::Branch(s));
    }
    Ok(u)
}

/// `q = (k_D + g) / (a k_D κ + k_D + g)` with `g = k_f s/(s + k_b)`,
/// multiplied through by `s + k_b`.
fn reaction_factor(u: Complex64, p: &ChannelParams) -> Complex64 {
    let s = u - p.k_d();
    let k_dl = p.diffusion_limited_rate();
    let kappa = u.sqrt() / p.diffusion().sqrt();
    let num = k_dl * (s + p.k_b()) + p.k_f() * s;
    let den = (p.a() * k_dl * kappa + k_dl) * (s + p.k_b()) + p.k_f() * s;
    num / den
}

/// `a k_D ∂P̄/∂r|_a / s` without the `exp(-κ(r0 - a))` factor. The radial
/// derivative reduces to `2 E κ g / (a k_D κ + k_D + g)` and the `s` in
/// `g` cancels the time integration's `1/s`.
fn flux_over_s_amplitude(u: Complex64, p: &ChannelParams) -> Complex64 {
    let s = u - p.k_d();
    let k_dl = p.diffusion_limited_rate();
    let sqrt_d = p.diffusion().sqrt();
    let x = u.sqrt();
    let kappa = x / sqrt_d;
    let e = 1.0 / (8.0 * PI * p.a() * p.r0() * sqrt_d * x);
    let den = (p.a() * k_dl * kappa + k_dl) * (s + p.k_b()) + p.k_f() * s;
    2.0 * p.a() * k_dl * p.k_f() * e * kappa / den
}

fn green_unchecked(r: f64, u: Complex64, p: &ChannelParams) -> Complex64 {
    let sqrt_d = p.diffusion().sqrt();
    let x = u.sqrt();
    let kappa = x / sqrt_d;
    let den = 8.0 * PI * r * p.r0() * sqrt_d * x;
    let image = (-kappa * (r + p.r0() - 2.0 * p.a())).exp();
    let free = (-kappa * (r - p.r0()).abs()).exp();
    let q = reaction_factor(u, p);
    (free + image - 2.0 * q * image) / den
}

/// Transformed free-molecule density `P̄_A(r, s)`: free term, image term
/// and the reaction correction.
pub fn laplace_green(r: f64, s: Complex64, params: &ChannelParams) -> Result<Complex64> {
    check_radius(r, params)?;
    let u = shifted(s, params)?;
    Ok(green_unchecked(r, u, params))
}

/// Transformed bound probability `P̄_AC(s) = a k_D ∂P̄_A/∂r|_a / s`.
pub fn laplace_impulse_response(s: Complex64, params: &ChannelParams) -> Result<Complex64> {
    LaplaceEvaluator::new(*params, Target::ImpulseResponse)?.eval(s)
}

/// Relative residual of the reactive boundary condition
/// `∂P̄/∂r|_a = k_f s / (a k_D (s + k_b)) · P̄(a, s)`, with the derivative
/// taken by a Richardson-extrapolated central difference.
pub fn check_boundary_condition(s: Complex64, params: &ChannelParams) -> Result<f64> {
    let u = shifted(s, params)?;
    let a = params.a();
    let h = 1e-6 * a;
    let central = |h: f64| {
        (green_unchecked(a + h, u, params) - green_unchecked(a - h, u, params)) / (2.0 * h)
    };
    let derivative = (4.0 * central(h / 2.0) - central(h)) / 3.0;
    let at_a = green_unchecked(a, u, params);
    let coupling =
        params.k_f() * s / (a * params.diffusion_limited_rate() * (s + params.k_b()));
    let kappa = u.sqrt() / params.diffusion().sqrt();
    let scale = at_a.norm() * (kappa.norm() + 1.0 / a);
    let residual = (derivative - coupling * at_a).norm();
    if scale == 0.0 {
        return Ok(residual);
    }
    Ok(residual / scale)
}

/// Relative residual of the partial-fraction expansion behind the
/// closed form: `Σ η_i / (α_i + √(s + k_d))` must equal `-q`, which makes
/// the three-kernel sum reproduce the reaction correction term. The
/// common kernel `exp(-κ(r + r0 - 2a)) / (4π r r0 √(D u))` cancels.
pub fn check_partial_fractions(
    s: Complex64,
    params: &ChannelParams,
    roots: &RootTriple,
) -> Result<f64> {
    let scale = roots
        .roots()
        .iter()
        .map(|r| r.norm())
        .fold(params.root_rate(), f64::max);
    let threshold = analytic::DEGENERACY_TOL * scale;
    let separation = roots.min_separation();
    if separation < threshold {
        return Err(AnalyticError::DegenerateRoots {
            separation,
            threshold,
        }
        .into());
    }
    let u = shifted(s, params)?;
    let x = u.sqrt();
    let sum: Complex64 = roots
        .roots()
        .iter()
        .zip(roots.residues())
        .map(|(root, eta)| eta / (root + x))
        .sum();
    let q = reaction_factor(u, params);
    Ok((sum + q).norm() / q.norm())
}

/// Fixed-Talbot contour for transforms of the form
/// `F(s) = A(s) · exp(-delay · √(s + shift))`.
///
/// With `u = s + shift` the contour is `u = center + r θ (cot θ + i)`.
/// `center` sits on the rightmost principal-sheet pole so that poles on
/// the positive real axis do not force a huge radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Talbot {
    pub nodes: usize,
    pub shift: f64,
    pub delay: f64,
    pub center: f64,
    /// Largest distance of a pole from `center`.
    pub pole_radius: f64,
}

impl Talbot {
    pub fn new(nodes: usize) -> Self {
        Talbot {
            nodes,
            shift: 0.0,
            delay: 0.0,
            center: 0.0,
            pole_radius: 0.0,
        }
    }

    /// Places the contour around `poles`, given in the shifted variable `u`.
    pub fn around_poles(mut self, poles: &[Complex64]) -> Self {
        self.center = poles.iter().map(|u| u.re).fold(0.0, f64::max);
        self.pole_radius = poles
            .iter()
            .map(|u| (u - self.center).norm())
            .fold(0.0, f64::max);
        self
    }

    fn radius(&self, t: f64) -> f64 {
        let m = self.nodes as f64;
        (2.0 * m / (5.0 * t))
            .max(self.delay * self.delay / (4.0 * t * t))
            .max(1.5 * self.pole_radius)
    }

    fn sum<A>(&self, amplitude: &A, t: f64, radius: f64, nodes: usize) -> Result<f64>
    where
        A: Fn(Complex64) -> Complex64,
    {
        let m = nodes as f64;
        let term = |z: Complex64| -> Result<Complex64> {
            let u = z + self.center;
            let value = (t * z - self.delay * u.sqrt()).exp() * amplitude(u - self.shift);
            if value.re.is_finite() && value.im.is_finite() {
                Ok(value)
            } else {
                Err(OracleError::Contour {
                    t,
                    node: u - self.shift,
                })
            }
        };
        let mut acc = 0.5 * term(Complex64::new(radius, 0.0))?.re;
        for k in 1..nodes {
            let theta = k as f64 * PI / m;
            let cot = theta.cos() / theta.sin();
            let z = Complex64::new(radius * theta * cot, radius * theta);
            let sigma = theta + (theta * cot - 1.0) * cot;
            acc += (term(z)? * Complex64::new(1.0, sigma)).re;
        }
        Ok(((self.center - self.shift) * t).exp() * radius / m * acc)
    }

    /// Inverts the transform whose amplitude `A(s)` is given, comparing
    /// against `2M` nodes on the same contour.
    pub fn invert<A>(&self, amplitude: A, t: f64) -> Result<Inversion>
    where
        A: Fn(Complex64) -> Complex64,
    {
        if !(t.is_finite() && t > 0.0) {
            return Err(OracleError::Domain(format!("time must be positive, got {t:e}")));
        }
        if self.nodes < 2 {
            return Err(OracleError::Domain("Talbot needs at least 2 nodes".into()));
        }
        let radius = self.radius(t);
        let value = self.sum(&amplitude, t, radius, self.nodes)?;
        let doubled = self.sum(&amplitude, t, radius, 2 * self.nodes)?;
        let diff = (doubled - value).abs();
        let relative = if diff == 0.0 { 0.0 } else { diff / doubled.abs().max(value.abs()) };
        let warning = (relative > DOUBLING_TOL).then_some(ConvergenceWarning {
            t,
            value,
            doubled,
            relative,
        });
        Ok(Inversion {
            value,
            doubled,
            warning,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub value: f64,
    pub doubled: f64,
    pub warning: Option<ConvergenceWarning>,
}

impl Inversion {
    /// The value, or the doubling warning as an error.
    pub fn checked(self) -> Result<f64> {
        match self.warning {
            Some(w) => Err(OracleError::Convergence(w)),
            None => Ok(self.value),
        }
    }
}

/// Numerically inverts `f` at time `t`.
pub fn invert_laplace(f: &LaplaceEvaluator, t: f64) -> Result<Inversion> {
    f.talbot().invert(|s| f.split(s + f.params.k_d()).0, t)
}

/// `P_AC(t)` by numerical inversion of the transformed integrated flux.
pub fn impulse_response_via_oracle(t: f64, params: &ChannelParams) -> Result<f64> {
    let f = LaplaceEvaluator::new(*params, Target::ImpulseResponse)?;
    let value = invert_laplace(&f, t)?.checked()?;
    analytic::clamp_probability(value).map_err(|e| match e {
        AnalyticError::Range(v) => OracleError::Range(v),
        other => other.into(),
    })
}

/// `P_A(r, t)` by numerical inversion.
pub fn green_via_oracle(r: f64, t: f64, params: &ChannelParams) -> Result<f64> {
    let f = LaplaceEvaluator::new(*params, Target::GreenAtR(r))?;
    invert_laplace(&f, t)?.checked()
}

/// `N_A · P_AC(t)` on `grid`, by numerical inversion.
pub fn expected_received_via_oracle(grid: &[f64], params: &ChannelParams) -> Result<SignalSeries> {
    validate_grid(grid)?;
    let n = params.n_molecules() as f64;
    let values = grid
        .iter()
        .map(|&t| impulse_response_via_oracle(t, params).map(|p| n * p))
        .collect::<Result<Vec<_>>>()?;
    let series = SignalSeries::new(grid.to_vec(), values)?;
    series.check_bounds(n)?;
    Ok(series)
}

/// Roots of the monic cubic by simultaneous (Durand–Kerner) iteration,
/// independent of the closed-form solver.
fn durand_kerner(coeffs: [f64; 3]) -> [Complex64; 3] {
    let [c2, c1, c0] = coeffs;
    let f = |x: Complex64| ((x + c2) * x + c1) * x + c0;
    let bound = 1.0 + c2.abs().max(c1.abs()).max(c0.abs());
    let seed = Complex64::new(0.4, 0.9);
    let mut z = [seed * bound, seed * seed * bound, seed * seed * seed * bound];
    for _ in 0..1000 {
        let mut moved = 0.0_f64;
        for i in 0..3 {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..3 {
                if j != i {
                    den *= z[i] - z[j];
                }
            }
            if den.norm() == 0.0 {
                continue;
            }
            let step = f(z[i]) / den;
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved <= 1e-15 * bound {
            break;
        }
    }
    z
}

/// Poles `u = x²` of the transforms, where `x` is a cubic root on the
/// principal sheet (`Re x ≥ 0`).
fn principal_poles(coeffs: [f64; 3]) -> Vec<Complex64> {
    let bound = 1.0 + coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    durand_kerner(coeffs)
        .iter()
        .filter(|x| x.re >= -1e-9 * bound)
        .map(|x| x * x)
        .collect()
}
