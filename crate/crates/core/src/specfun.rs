//! Real and complex error-function kernels.
//!
//! The real functions use Cody's rational Chebyshev approximations. The
//! Faddeeva function `w(z) = exp(-z²) erfc(-iz)` uses the region split of
//! Poppe and Wijers: a power series inside a small ellipse around the origin,
//! Gautschi's hybrid Taylor/continued-fraction scheme in the surrounding
//! annulus, and the Laplace continued fraction everywhere else.
//!
//! The channel kernel `W(n, m) = exp(2nm + m²) erfc(n + m)` is never
//! evaluated in that form: the exponential factor overflows long before the
//! product does. [`w_paper_scaled`] uses `exp(-n²) erfcx(n + m)` instead.

use std::f64::consts::FRAC_2_SQRT_PI;

use num_complex::Complex64;
use thiserror::Error;

pub type ComplexValue = Complex64;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// `exp(x²)` overflows below this.
const ERFCX_NEG_LIMIT: f64 = -26.628_735_713_751_4;
/// `erfc(x)` underflows above this.
const ERFC_POS_LIMIT: f64 = 26.543;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpecFunError {
    #[error("non-finite argument {0}")]
    NonFiniteInput(ComplexValue),
}

pub type Result<T> = std::result::Result<T, SpecFunError>;

fn check_real(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(SpecFunError::NonFiniteInput(Complex64::new(x, 0.0)))
    }
}

fn check_complex(z: Complex64) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(SpecFunError::NonFiniteInput(z))
    }
}

// Cody, "Rational Chebyshev approximations for the error function",
// Math. Comp. 23 (1969). Coefficients as distributed with SPECFUN/CALERF.
const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6,
    113.864_154_151_050_16,
    377.485_237_685_302,
    3_209.377_589_138_469_5,
    0.185_777_706_184_603_15,
];
const ERF_B: [f64; 4] = [
    23.601_290_952_344_122,
    244.024_637_934_444_17,
    1_282.616_526_077_372_3,
    2_844.236_833_439_170_6,
];
const ERFC_C: [f64; 9] = [
    0.564_188_496_988_670_1,
    8.883_149_794_388_376,
    66.119_190_637_141_63,
    298.635_138_197_400_1,
    881.952_221_241_769_1,
    1_712.047_612_634_070_6,
    2_051.078_377_826_071_6,
    1_230.339_354_797_997_2,
    2.153_115_354_744_038_5e-8,
];
const ERFC_D: [f64; 8] = [
    15.744_926_110_709_835,
    117.693_950_891_312_5,
    537.181_101_862_009_9,
    1_621.389_574_566_690_2,
    3_290.799_235_733_459_7,
    4_362.619_090_143_247,
    3_439.367_674_143_721_6,
    1_230.339_354_803_749_5,
];
const ERFC_P: [f64; 6] = [
    0.305_326_634_961_232_36,
    0.360_344_899_949_804_45,
    0.125_781_726_111_229_26,
    0.016_083_785_148_742_275,
    6.587_491_615_298_378e-4,
    0.016_315_387_137_302_097,
];
const ERFC_Q: [f64; 5] = [
    2.568_520_192_289_822,
    1.872_952_849_923_460_4,
    0.527_905_102_951_428_4,
    0.060_518_341_312_441_32,
    0.002_335_204_976_268_691_8,
];

const CODY_SMALL: f64 = 0.468_75;

/// `erf(x) / x` for `|x| <= 0.46875`, as a function of `x²`.
fn erf_small_ratio(z: f64) -> f64 {
    let a = &ERF_A;
    let b = &ERF_B;
    ((((a[4] * z + a[0]) * z + a[1]) * z + a[2]) * z + a[3])
        / ((((z + b[0]) * z + b[1]) * z + b[2]) * z + b[3])
}

/// `erfcx(y)` for `y > 0.46875`.
fn erfcx_cody_tail(y: f64) -> f64 {
    if y <= 4.0 {
        let c = &ERFC_C;
        let d = &ERFC_D;
        let num = (((((((c[8] * y + c[0]) * y + c[1]) * y + c[2]) * y + c[3]) * y + c[4]) * y
            + c[5])
            * y
            + c[6])
            * y
            + c[7];
        let den = (((((((y + d[0]) * y + d[1]) * y + d[2]) * y + d[3]) * y + d[4]) * y + d[5])
            * y
            + d[6])
            * y
            + d[7];
        num / den
    } else {
        let p = &ERFC_P;
        let q = &ERFC_Q;
        let z = 1.0 / (y * y);
        let r = z * (((((p[5] * z + p[0]) * z + p[1]) * z + p[2]) * z + p[3]) * z + p[4])
            / (((((z + q[0]) * z + q[1]) * z + q[2]) * z + q[3]) * z + q[4]);
        (FRAC_1_SQRT_PI - r) / y
    }
}

/// `exp(±x²)` with the argument split so that rounding of `x²` does not
/// leak into the result.
fn exp_signed_square(x: f64, sign: f64) -> f64 {
    let hi = (x * 16.0).trunc() / 16.0;
    (sign * hi * hi).exp() * (sign * (x - hi) * (x + hi)).exp()
}

/// Scaled complementary error function `exp(x²) erfc(x)`.
///
/// Returns `+inf` for `x < -26.6287`, where `exp(x²)` is not representable.
pub fn erfcx_real(x: f64) -> Result<f64> {
    check_real(x)?;
    let y = x.abs();
    if y <= CODY_SMALL {
        let z = y * y;
        return Ok(z.exp() * (1.0 - x * erf_small_ratio(z)));
    }
    if x < ERFCX_NEG_LIMIT {
        return Ok(f64::INFINITY);
    }
    let tail = erfcx_cody_tail(y);
    if x < 0.0 {
        Ok(2.0 * exp_signed_square(x, 1.0) - tail)
    } else {
        Ok(tail)
    }
}

/// Complementary error function.
pub fn erfc_real(x: f64) -> Result<f64> {
    check_real(x)?;
    let y = x.abs();
    if y <= CODY_SMALL {
        return Ok(1.0 - x * erf_small_ratio(y * y));
    }
    let tail = if y >= ERFC_POS_LIMIT {
        0.0
    } else {
        erfcx_cody_tail(y) * exp_signed_square(y, -1.0)
    };
    Ok(if x < 0.0 { 2.0 - tail } else { tail })
}

/// Error function.
pub fn erf_real(x: f64) -> Result<f64> {
    check_real(x)?;
    let y = x.abs();
    if y <= CODY_SMALL {
        return Ok(x * erf_small_ratio(y * y));
    }
    let tail = if y >= ERFC_POS_LIMIT {
        0.0
    } else {
        erfcx_cody_tail(y) * exp_signed_square(y, -1.0)
    };
    Ok(if x < 0.0 { tail - 1.0 } else { 1.0 - tail })
}

/// Faddeeva function `w(z) = exp(-z²) erfc(-iz)`.
///
/// Accurate to roughly 1e-13 relative in the upper half-plane. The lower
/// half-plane goes through `w(z) = 2 exp(-z²) - w(-z)`, which overflows
/// once `Re(-z²)` passes ~709.
pub fn faddeeva(z: ComplexValue) -> Result<ComplexValue> {
    check_complex(z)?;
    Ok(faddeeva_unchecked(z))
}

fn faddeeva_unchecked(z: Complex64) -> Complex64 {
    if z.im >= 0.0 {
        faddeeva_upper(z)
    } else {
        let upper = faddeeva_upper(-z);
        2.0 * (-z * z).exp() - upper
    }
}

/// Upper half-plane (including the real axis) core.
fn faddeeva_upper(z: Complex64) -> Complex64 {
    let x = z.re.abs();
    let y = z.im;
    debug_assert!(y >= 0.0);

    let xs = x / 6.3;
    let ys = y / 4.4;
    let qrho = xs * xs + ys * ys;

    let (re, im) = if qrho < 0.085_264 {
        // w(z) = exp(-z²) (1 - erf(-iz)) with the erf Taylor series summed
        // in Horner form.
        let xquad = x * x - y * y;
        let yquad = 2.0 * x * y;
        let scaled = (1.0 - 0.85 * ys) * qrho.sqrt();
        let n = (6.0 + 72.0 * scaled).round() as i32;
        let mut j = 2 * n + 1;
        let mut xsum = 1.0 / j as f64;
        let mut ysum = 0.0;
        for i in (1..=n).rev() {
            j -= 2;
            let xaux = (xsum * xquad - ysum * yquad) / i as f64;
            ysum = (xsum * yquad + ysum * xquad) / i as f64;
            xsum = xaux + 1.0 / j as f64;
        }
        let u1 = -FRAC_2_SQRT_PI * (xsum * y + ysum * x) + 1.0;
        let v1 = FRAC_2_SQRT_PI * (xsum * x - ysum * y);
        let daux = (-xquad).exp();
        let u2 = daux * yquad.cos();
        let v2 = -daux * yquad.sin();
        (u1 * u2 - v1 * v2, u1 * v2 + v1 * u2)
    } else {
        let (h, kapn, nu) = if qrho > 1.0 {
            let rho = qrho.sqrt();
            (0.0, 0, (3.0 + 1442.0 / (26.0 * rho + 77.0)) as i32)
        } else {
            let rho = (1.0 - ys) * (1.0 - qrho).sqrt();
            (
                1.88 * rho,
                (7.0 + 34.0 * rho).round() as i32,
                (16.0 + 26.0 * rho).round() as i32,
            )
        };
        let h2 = 2.0 * h;
        let hybrid = h > 0.0;
        let mut qlambda = if hybrid { h2.powi(kapn) } else { 0.0 };
        let (mut rx, mut ry, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0);
        for n in (0..=nu).rev() {
            let np1 = (n + 1) as f64;
            let tx = y + h + np1 * rx;
            let ty = x - np1 * ry;
            let c = 0.5 / (tx * tx + ty * ty);
            rx = c * tx;
            ry = c * ty;
            if hybrid && n <= kapn {
                let tx = qlambda + sx;
                sx = rx * tx - ry * sy;
                sy = ry * tx + rx * sy;
                qlambda /= h2;
            }
        }
        let (u, v) = if hybrid {
            (FRAC_2_SQRT_PI * sx, FRAC_2_SQRT_PI * sy)
        } else {
            (FRAC_2_SQRT_PI * rx, FRAC_2_SQRT_PI * ry)
        };
        if y == 0.0 {
            ((-x * x).exp(), v)
        } else {
            (u, v)
        }
    };

    // w(-conj(z)) = conj(w(z))
    if z.re < 0.0 {
        Complex64::new(re, -im)
    } else {
        Complex64::new(re, im)
    }
}

/// Complex scaled complementary error function `exp(z²) erfc(z) = w(iz)`.
pub fn erfcx_complex(z: ComplexValue) -> Result<ComplexValue> {
    check_complex(z)?;
    if z.im == 0.0 {
        return Ok(Complex64::new(erfcx_real(z.re)?, 0.0));
    }
    Ok(faddeeva_unchecked(Complex64::new(-z.im, z.re)))
}

/// `W(n, m) = exp(2nm + m²) erfc(n + m)`.
pub fn w_paper(n: ComplexValue, m: ComplexValue) -> Result<ComplexValue> {
    w_paper_scaled(n, m, 0.0)
}

/// `exp(shift) · W(n, m)`, folding the shift into the exponent so that a
/// tiny prefactor can cancel a huge kernel without overflowing.
///
/// For `Re(n + m) >= 0` this is `exp(shift - n²) erfcx(n + m)`. Otherwise
/// erfcx is reflected: `erfcx(z) = 2 exp(z²) - erfcx(-z)`, which turns the
/// first part back into `2 exp(shift + 2nm + m²)`.
pub fn w_paper_scaled(n: ComplexValue, m: ComplexValue, shift: f64) -> Result<ComplexValue> {
    check_complex(n)?;
    check_complex(m)?;
    check_real(shift)?;
    let z = n + m;
    let lead = Complex64::new(shift, 0.0) - n * n;
    if z.re >= 0.0 {
        let e = exp_or_zero(lead);
        if e == Complex64::new(0.0, 0.0) {
            return Ok(e);
        }
        Ok(e * erfcx_complex(z)?)
    } else {
        let grow = Complex64::new(shift, 0.0) + 2.0 * n * m + m * m;
        let e = exp_or_zero(lead);
        let rest = if e == Complex64::new(0.0, 0.0) {
            e
        } else {
            e * erfcx_complex(-z)?
        };
        Ok(2.0 * exp_or_zero(grow) - rest)
    }
}

/// Complex exp that returns an exact zero instead of NaN on deep underflow.
fn exp_or_zero(z: Complex64) -> Complex64 {
    if z.re < -745.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z.exp()
    }
}
