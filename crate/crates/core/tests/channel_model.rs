//! Closed form checked against the Laplace oracle, high-precision reference
//! values and the physical invariants of the channel.

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reactive_rx::analytic::{self, AnalyticError, Evaluation};
use reactive_rx::oracle::{self, LaplaceEvaluator, Target};
use reactive_rx::params::{ChannelParams, RawParams};
use reactive_rx::quad;
use reactive_rx::series::log_grid;
use reactive_rx::specfun::{erfc_real, w_paper};

fn with_rates(k_b: f64, k_d: f64) -> ChannelParams {
    ChannelParams::new(RawParams {
        k_b,
        k_d,
        ..RawParams::baseline()
    })
    .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Irreversible, non-degrading response in closed form (double zero root).
fn collins_kimball(t: f64, p: &ChannelParams) -> f64 {
    let c2 = analytic::cubic_coefficients(p)[0];
    let n0 = (p.r0() - p.a()) / (4.0 * p.diffusion() * t).sqrt();
    let ratio = p.k_f() / (p.k_f() + p.diffusion_limited_rate());
    let w = w_paper(Complex64::new(n0, 0.0), Complex64::new(c2 * t.sqrt(), 0.0))
        .unwrap()
        .re;
    p.a() / p.r0() * ratio * (erfc_real(n0).unwrap() - w)
}

#[test]
fn roots_match_companion_eigenvalues() {
    for (k_b, k_d) in [(2e3, 0.0), (4e4, 0.0), (2e5, 4e4)] {
        let p = with_rates(k_b, k_d);
        let [c2, c1, c0] = analytic::cubic_coefficients(&p);
        let companion = Matrix3::new(-c2, -c1, -c0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        let eig = companion.complex_eigenvalues();
        let roots = analytic::solve_roots(&p).unwrap();
        for root in roots.roots() {
            let x = -root;
            let best = eig
                .iter()
                .map(|e| (Complex64::new(e.re, e.im) - x).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-8 * x.norm(), "k_b={k_b} k_d={k_d} root {x}");
        }
    }
}

#[test]
fn impulse_response_reference_values() {
    // 40-digit evaluations of the closed form.
    let cases = [
        (2e3, 1e-5, 0.0102103373888874),
        (2e3, 1e-3, 0.0842595415756168),
        (4e3, 1e-5, 0.010161928362707),
        (4e3, 1e-3, 0.039748156996612),
    ];
    for (k_b, t, want) in cases {
        let p = with_rates(k_b, 0.0);
        let roots = analytic::solve_roots(&p).unwrap();
        let got = analytic::impulse_response(t, &p, &roots).unwrap();
        assert!(rel(got, want) < 1e-12, "k_b={k_b} t={t}: {got} vs {want}");
    }
    let p = with_rates(2e3, 0.0);
    let roots = analytic::solve_roots(&p).unwrap();
    let tiny = analytic::impulse_response(1e-7, &p, &roots).unwrap();
    assert!(tiny > 0.0 && tiny < 1e-57);
}

#[test]
fn green_function_matches_inverse_laplace() {
    let p = with_rates(2e3, 0.0);
    let roots = analytic::solve_roots(&p).unwrap();
    let closed = analytic::green_function(1.5e-6, 1e-5, &p, &roots).unwrap();
    let inverted = oracle::green_via_oracle(1.5e-6, 1e-5, &p).unwrap();
    assert!(rel(closed, inverted) < 1e-6);
    assert!(rel(closed, 19175755115713285.6) < 1e-12);
}

#[test]
fn green_function_inside_source_shell() {
    let p = with_rates(4e3, 1e4);
    let roots = analytic::solve_roots(&p).unwrap();
    for (r, t) in [(0.6e-6, 1e-5), (0.8e-6, 1e-4), (0.5e-6, 3e-6)] {
        let closed = analytic::green_function(r, t, &p, &roots).unwrap();
        let inverted = oracle::green_via_oracle(r, t, &p).unwrap();
        assert!(rel(closed, inverted) < 1e-6, "r={r} t={t}");
    }
}

#[test]
fn impulse_response_matches_oracle() {
    let p = with_rates(4e3, 0.0);
    let roots = analytic::solve_roots(&p).unwrap();
    for t in [1e-6, 1e-5, 1e-4] {
        let closed = analytic::impulse_response(t, &p, &roots).unwrap();
        let inverted = oracle::impulse_response_via_oracle(t, &p).unwrap();
        assert!(rel(closed, inverted) < 1e-6, "t={t}");
    }
}

#[test]
fn degenerate_rates_fall_back_to_oracle() {
    let p = with_rates(0.0, 0.0);
    assert!(matches!(
        analytic::solve_roots(&p),
        Err(AnalyticError::DegenerateRoots { .. })
    ));
    for t in log_grid(1e-7, 1e-3, 12) {
        let (v, how) = analytic::channel_response(t, &p).unwrap();
        assert_eq!(how, Evaluation::OracleFallback);
        let want = collins_kimball(t, &p);
        assert!((v - want).abs() <= 1e-9 * want.max(1e-12), "t={t}: {v} vs {want}");
    }
    let grid = log_grid(1e-6, 1e-3, 5);
    let (series, how) = analytic::expected_received_or_fallback(&grid, &p).unwrap();
    assert_eq!(how, Evaluation::OracleFallback);
    assert_eq!(series.len(), 5);
}

#[test]
fn irreversible_limit_is_approached() {
    let p = with_rates(0.0, 0.0);
    let limit = p.a() / p.r0() * p.k_f() / (p.k_f() + p.diffusion_limited_rate());
    assert!(rel(collins_kimball(1.0, &p), 0.24844085335428409) < 1e-12);
    assert!(rel(limit, 0.2499366142602035) < 1e-12);
    let late = oracle::impulse_response_via_oracle(1e4, &p).unwrap();
    assert!(rel(late, limit) < 1e-4);
}

#[test]
fn conservation_and_leakage() {
    let p = with_rates(2e3, 0.0);
    let roots = analytic::solve_roots(&p).unwrap();
    for t in [1e-6, 1e-5, 1e-4] {
        let total = analytic::free_probability(t, &p, &roots).unwrap()
            + analytic::impulse_response(t, &p, &roots).unwrap();
        assert!((total - 1.0).abs() < 1e-4, "t={t}: {total}");
    }

    let p = with_rates(2e3, 1e4);
    let roots = analytic::solve_roots(&p).unwrap();
    let mut prev = f64::INFINITY;
    for t in log_grid(1e-6, 1e-4, 8) {
        let total = analytic::free_probability(t, &p, &roots).unwrap()
            + analytic::impulse_response(t, &p, &roots).unwrap();
        assert!(total <= 1.0 + 1e-6 && total <= prev + 1e-9, "t={t}: {total}");
        prev = total;
    }
}

#[test]
fn response_is_integrated_surface_flux() {
    let p = with_rates(2e3, 0.0);
    let roots = analytic::solve_roots(&p).unwrap();
    let a = p.a();
    let h = 1e-4 * a;
    let flux = |t: f64| {
        let g = |r: f64| analytic::green_function(r, t, &p, &roots).unwrap();
        let derivative = (-3.0 * g(a) + 4.0 * g(a + h) - g(a + 2.0 * h)) / (2.0 * h);
        4.0 * PI * a * a * p.diffusion() * derivative
    };
    let t = 1e-5;
    let integral = quad::integrate(flux, 1e-9, t, &[1e-7, 1e-6], 1e-8, 0.0).unwrap();
    let want = analytic::impulse_response(t, &p, &roots).unwrap();
    assert!(rel(integral.value, want) < 1e-3, "{} vs {want}", integral.value);
}

#[test]
fn transform_matches_time_quadrature_of_closed_form() {
    let p = with_rates(2e3, 0.0);
    let roots = analytic::solve_roots(&p).unwrap();
    let (r, s) = (1.5e-6, 1e5);
    // ∫ e^{-st} P_A dt in log time.
    let integral = quad::integrate(
        |lt: f64| {
            let t = lt.exp();
            t * (-s * t).exp() * analytic::green_function(r, t, &p, &roots).unwrap()
        },
        (1e-10f64).ln(),
        (1e-2f64).ln(),
        &[(1e-6f64).ln(), (1e-5f64).ln(), (1e-4f64).ln()],
        1e-10,
        0.0,
    )
    .unwrap();
    let transform = oracle::laplace_green(r, Complex64::new(s, 0.0), &p).unwrap();
    assert!(transform.im == 0.0);
    assert!(rel(integral.value, transform.re) < 1e-5);
}

#[test]
fn algebra_checks_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (k_b, k_d) in [(2e3, 0.0), (4e4, 0.0), (2e5, 2e4)] {
        let p = with_rates(k_b, k_d);
        let roots = analytic::solve_roots(&p).unwrap();
        for _ in 0..20 {
            let s = Complex64::new(10f64.powf(rng.random_range(2.0..7.0)), rng.random_range(-1e6..1e6));
            assert!(oracle::check_boundary_condition(s, &p).unwrap() <= 1e-6);
            assert!(oracle::check_partial_fractions(s, &p, &roots).unwrap() <= 1e-8);
        }
    }
}

#[test]
fn node_doubling_agrees() {
    let f = LaplaceEvaluator::new(with_rates(2e5, 4e4), Target::ImpulseResponse).unwrap();
    for t in log_grid(1e-7, 1e-3, 9) {
        let inv = oracle::invert_laplace(&f, t).unwrap();
        assert!(inv.warning.is_none(), "{:?}", inv.warning);
    }
    let coarse = f.clone().with_nodes(8);
    let inv = oracle::invert_laplace(&coarse, 1e-4).unwrap();
    assert!(inv.warning.is_some());
}

#[test]
fn ordering_across_sweeps() {
    let t_end = 1e-3;
    let mut prev = f64::INFINITY;
    for k_b in [2e3, 4e3, 1e4, 2e4, 4e4] {
        let p = with_rates(k_b, 0.0);
        let roots = analytic::solve_roots(&p).unwrap();
        let v = analytic::impulse_response(t_end, &p, &roots).unwrap();
        assert!(v < prev);
        prev = v;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn response_is_real_and_bounded(
        k_b in 0.0f64..1e5,
        k_d in 0.0f64..5e4,
        lt in -7.0f64..-2.0,
    ) {
        prop_assume!(k_b > 1.0 || k_d > 1.0);
        let p = with_rates(k_b, k_d);
        let roots = analytic::solve_roots(&p).unwrap();
        let c2 = analytic::cubic_coefficients(&p)[0];
        let sum = roots.alpha + roots.beta + roots.gamma;
        prop_assert!((sum.re - c2).abs() <= 1e-9 * c2);
        let v = analytic::impulse_response(10f64.powf(lt), &p, &roots).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn irreversible_response_is_nondecreasing(k_d in 1.0f64..5e4) {
        let p = with_rates(0.0, k_d);
        let roots = analytic::solve_roots(&p).unwrap();
        let mut prev = 0.0;
        for t in log_grid(1e-7, 1e-2, 40) {
            let v = analytic::impulse_response(t, &p, &roots).unwrap();
            // The plateau carries ~1e-15 relative roundoff from the W sum.
            prop_assert!(v >= prev * (1.0 - 1e-12), "t={} {} < {}", t, v, prev);
            prev = v;
        }
    }
}
