//! Scaled complementary error function of complex argument,
//! `erfcx(z) = exp(z^2) erfc(z)`.
//!
//! Two independent evaluations are provided: the Maclaurin series of `erf`
//! (accurate for moderate `|z|`, and away from the positive real direction
//! for larger `|z|`) and the Laplace continued fraction for `erfc`
//! (accurate for `Re z > 0` once `|z|` is not small). [`erfcx`] switches
//! between them; the left half plane goes through the reflection
//! `erfcx(z) = 2 exp(z^2) - erfcx(-z)`.

use num_complex::Complex64;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const SQRT_PI: f64 = 1.772_453_850_905_516;

const SERIES_MAX_TERMS: usize = 400;
const CF_MAX_TERMS: usize = 20_000;

/// Below this `|z|` the series is always used.
const SERIES_RADIUS: f64 = 1.5;
/// The series is also used up to this `|z|` when `Re z` is small.
const SERIES_OUTER_RADIUS: f64 = 8.0;
const SERIES_MAX_RE: f64 = 1.0;

/// `exp(z^2) erfc(z)` for any finite complex `z`.
pub fn erfcx(z: Complex64) -> Complex64 {
    if z.re < 0.0 {
        return 2.0 * (z * z).exp() - erfcx(-z);
    }
    let r = z.norm();
    if r < SERIES_RADIUS || (z.re < SERIES_MAX_RE && r < SERIES_OUTER_RADIUS) {
        erfcx_series(z)
    } else {
        erfcx_continued_fraction(z).unwrap_or_else(|| erfcx_series(z))
    }
}

/// Real-argument convenience wrapper.
pub fn erfcx_real(x: f64) -> f64 {
    erfcx(Complex64::new(x, 0.0)).re
}

/// `exp(z^2) (1 - erf(z))` with `erf` from its Maclaurin series
/// `2/sqrt(pi) sum (-1)^k z^{2k+1} / (k! (2k+1))`.
pub fn erfcx_series(z: Complex64) -> Complex64 {
    let z2 = z * z;
    let mut power = z; // (-1)^k z^{2k+1} / k!
    let mut sum = z;
    for k in 1..SERIES_MAX_TERMS {
        power = -power * z2 / k as f64;
        let term = power / (2 * k + 1) as f64;
        sum += term;
        if term.norm() <= f64::EPSILON * 0.25 * sum.norm() {
            break;
        }
    }
    let erf = sum * FRAC_2_SQRT_PI;
    z2.exp() * (Complex64::new(1.0, 0.0) - erf)
}

/// `erfcx(z) = K(z) / sqrt(pi)` with the Laplace continued fraction
/// `K = 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))`, evaluated by the
/// modified Lentz method. Requires `Re z > 0`; returns `None` when it does
/// not converge within the term budget.
pub fn erfcx_continued_fraction(z: Complex64) -> Option<Complex64> {
    if z.re.is_nan() || z.re <= 0.0 {
        return None;
    }
    let tiny = Complex64::new(1e-300, 0.0);
    let mut f = z;
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for k in 1..CF_MAX_TERMS {
        let a = k as f64 * 0.5;
        d = z + a * d;
        if d.norm() == 0.0 {
            d = tiny;
        }
        c = z + a / c;
        if c.norm() == 0.0 {
            c = tiny;
        }
        d = d.inv();
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            return Some(f.inv() / SQRT_PI);
        }
    }
    None
}
