//! Quick built-in checks run by `reactive-rx check`: special-function
//! reference values, closed form against the Laplace oracle, algebraic
//! identities, conservation and the overlap kernel.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::analytic;
use crate::oracle;
use crate::params::ChannelParams;
use crate::series::log_grid;
use crate::sim::{kernel_sigma, overlap_probability};
use crate::specfun;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, result: Result<(bool, String), String>) -> CheckResult {
    match result {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(detail) => CheckResult {
            name,
            passed: false,
            detail,
        },
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn rates(k_b: f64, k_d: f64) -> ChannelParams {
    ChannelParams::baseline()
        .with(|r| {
            r.k_b = k_b;
            r.k_d = k_d;
        })
        .expect("valid rates")
}

fn special_functions() -> Result<(bool, String), String> {
    let e = |e: specfun::SpecFunError| e.to_string();
    let cases = [
        (specfun::erfcx_real(1.0).map_err(e)?, 0.427_583_576_155_807),
        (
            specfun::w_paper(Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0))
                .map_err(e)?
                .re,
            0.25539567631050574,
        ),
        (
            specfun::w_paper(Complex64::new(3.0, 0.0), Complex64::new(0.0, 0.0))
                .map_err(e)?
                .re,
            2.20904969985854e-5,
        ),
    ];
    let worst = cases.iter().map(|&(got, want)| rel(got, want)).fold(0.0, f64::max);
    let z = Complex64::new(1.0, 1.0);
    let reflection = (specfun::faddeeva(-z).map_err(e)? - (2.0 * (-z * z).exp() - specfun::faddeeva(z).map_err(e)?)).norm();
    Ok((
        worst <= 1e-12 && reflection <= 1e-12,
        format!("worst relative error {worst:.2e}, reflection residual {reflection:.2e}"),
    ))
}

fn closed_form_vs_oracle() -> Result<(bool, String), String> {
    let mut worst = 0.0f64;
    for (k_b, k_d) in [(2e3, 0.0), (4e4, 0.0), (2e5, 1e4)] {
        let p = rates(k_b, k_d);
        let roots = analytic::solve_roots(&p).map_err(|e| e.to_string())?;
        for t in log_grid(1e-7, 1e-3, 9) {
            let closed = analytic::impulse_response(t, &p, &roots).map_err(|e| e.to_string())?;
            let inverted = oracle::impulse_response_via_oracle(t, &p).map_err(|e| e.to_string())?;
            worst = worst.max(rel(closed, inverted));
        }
    }
    Ok((worst <= 1e-6, format!("worst relative deviation {worst:.2e}")))
}

fn algebra() -> Result<(bool, String), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut bc, mut pf) = (0.0f64, 0.0f64);
    for (k_b, k_d) in [(2e3, 0.0), (2e5, 2e4)] {
        let p = rates(k_b, k_d);
        let roots = analytic::solve_roots(&p).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let s = Complex64::new(10f64.powf(rng.random_range(2.0..7.0)), rng.random_range(-1e6..1e6));
            bc = bc.max(oracle::check_boundary_condition(s, &p).map_err(|e| e.to_string())?);
            pf = pf.max(oracle::check_partial_fractions(s, &p, &roots).map_err(|e| e.to_string())?);
        }
    }
    Ok((
        bc <= 1e-6 && pf <= 1e-8,
        format!("boundary residual {bc:.2e}, partial fractions {pf:.2e}"),
    ))
}

fn conservation() -> Result<(bool, String), String> {
    let p = rates(2e3, 0.0);
    let roots = analytic::solve_roots(&p).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for t in [1e-6, 1e-5, 1e-4] {
        let total = analytic::free_probability(t, &p, &roots).map_err(|e| e.to_string())?
            + analytic::impulse_response(t, &p, &roots).map_err(|e| e.to_string())?;
        worst = worst.max((total - 1.0).abs());
    }
    Ok((worst <= 1e-4, format!("largest |total - 1| {worst:.2e}")))
}

fn overlap_kernel() -> Result<(bool, String), String> {
    let p = ChannelParams::baseline();
    let dt = 1e-7;
    let sigma = kernel_sigma(dt, &p);
    let step = (2.0 * p.diffusion() * dt).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 200_000;
    let mut worst = 0.0f64;
    for r in [p.a(), p.a() + 0.3 * sigma, p.a() + sigma] {
        let prob = overlap_probability(r, dt, &p).map_err(|e| e.to_string())?;
        let hits = (0..n)
            .filter(|_| {
                let dx: f64 = rng.sample::<f64, _>(StandardNormal) * step;
                let dy: f64 = rng.sample::<f64, _>(StandardNormal) * step;
                let dz: f64 = rng.sample::<f64, _>(StandardNormal) * step;
                (r + dx).powi(2) + dy * dy + dz * dz < p.a() * p.a()
            })
            .count();
        let se = (prob * (1.0 - prob) / n as f64).sqrt();
        worst = worst.max((hits as f64 / n as f64 - prob).abs() / se);
    }
    Ok((worst <= 3.0, format!("largest deviation {worst:.2} binomial SE")))
}

/// Runs every check; takes a few seconds.
pub fn run_checks() -> Vec<CheckResult> {
    vec![
        outcome("special functions", special_functions()),
        outcome("closed form vs oracle", closed_form_vs_oracle()),
        outcome("boundary condition and partial fractions", algebra()),
        outcome("probability conservation", conservation()),
        outcome("overlap kernel", overlap_kernel()),
    ]
}
