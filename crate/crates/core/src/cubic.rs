//! Roots of a real monic cubic `x³ + c2 x² + c1 x + c0`.

use std::f64::consts::PI;

use num_complex::Complex64;

pub(crate) fn eval(coeffs: [f64; 3], x: Complex64) -> (Complex64, Complex64) {
    let [c2, c1, c0] = coeffs;
    let f = ((x + c2) * x + c1) * x + c0;
    let df = (3.0 * x + 2.0 * c2) * x + c1;
    (f, df)
}

/// `|f(x)|` divided by the magnitude of the largest term, the scale on
/// which roundoff lives.
pub(crate) fn relative_residual(coeffs: [f64; 3], x: Complex64) -> f64 {
    let [c2, c1, c0] = coeffs;
    let r = x.norm();
    let scale = r * r * r + c2.abs() * r * r + c1.abs() * r + c0.abs();
    if scale == 0.0 {
        return 0.0;
    }
    eval(coeffs, x).0.norm() / scale
}

fn polish(coeffs: [f64; 3], mut x: Complex64) -> Complex64 {
    let mut best = relative_residual(coeffs, x);
    for _ in 0..8 {
        let (f, df) = eval(coeffs, x);
        if df.norm() == 0.0 || best <= 1e-16 {
            break;
        }
        let next = x - f / df;
        let res = relative_residual(coeffs, next);
        if res.partial_cmp(&best) != Some(std::cmp::Ordering::Less) {
            break;
        }
        x = next;
        best = res;
    }
    x
}

/// Cardano's formula on the depressed cubic in complex arithmetic, followed
/// by Newton polishing. The result honors the real-coefficient structure:
/// either three real roots, or one real root and an exact conjugate pair.
pub(crate) fn solve_monic(coeffs: [f64; 3]) -> [Complex64; 3] {
    let [c2, c1, c0] = coeffs;
    if c0 == 0.0 {
        // x (x² + c2 x + c1): keep the exact zero root.
        let [r1, r2] = solve_quadratic(c2, c1);
        return [Complex64::new(0.0, 0.0), r1, r2];
    }
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);

    let raw: [Complex64; 3] = if p == 0.0 && q == 0.0 {
        [Complex64::new(-shift, 0.0); 3]
    } else {
        let sqrt_disc = Complex64::new(disc, 0.0).sqrt();
        let half_q = Complex64::new(-q / 2.0, 0.0);
        // Pick the sign that avoids cancellation in u³.
        let cube = if (half_q + sqrt_disc).norm() >= (half_q - sqrt_disc).norm() {
            half_q + sqrt_disc
        } else {
            half_q - sqrt_disc
        };
        let u = Complex64::from_polar(cube.norm().cbrt(), cube.arg() / 3.0);
        let v = if u.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            -p / (3.0 * u)
        };
        let omega = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        let omega2 = omega * omega;
        [
            u + v - shift,
            u * omega + v * omega2 - shift,
            u * omega2 + v * omega - shift,
        ]
    };

    let mut roots = raw.map(|x| polish(coeffs, x));

    if disc > 0.0 {
        // One real root and a conjugate pair.
        let real_idx = (0..3)
            .min_by(|&i, &j| roots[i].im.abs().total_cmp(&roots[j].im.abs()))
            .expect("three roots");
        let real = polish(coeffs, Complex64::new(roots[real_idx].re, 0.0));
        let others: Vec<Complex64> = (0..3)
            .filter(|&i| i != real_idx)
            .map(|i| roots[i])
            .collect();
        let upper = if others[0].im >= others[1].im {
            (others[0] + others[1].conj()) / 2.0
        } else {
            (others[1] + others[0].conj()) / 2.0
        };
        let upper = polish(coeffs, upper);
        let upper = Complex64::new(upper.re, upper.im.abs());
        roots = [real, upper, upper.conj()];
    } else {
        for r in roots.iter_mut() {
            *r = polish(coeffs, Complex64::new(r.re, 0.0));
        }
    }
    roots
}

/// Roots of `x² + b x + c`, avoiding cancellation.
fn solve_quadratic(b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        [Complex64::new(q, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let upper = Complex64::new(-0.5 * b, 0.5 * (-disc).sqrt());
        [upper, upper.conj()]
    }
}
