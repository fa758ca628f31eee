//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Finite intervals can be integrated through the map
//! `t = a + (b - a)(1 - cos(pi s))/2`, which behaves like `s^2` at both ends
//! and so absorbs inverse-square-root endpoint singularities. Half-infinite
//! intervals go through `t = a + s/(1 - s)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (the 7-point rule).
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Most panels the adaptive refinement may create; 1 means a single
    /// 15-point rule with no refinement.
    pub max_subdivisions: usize,
    /// Apply the cosine endpoint map on finite intervals.
    pub endpoint_substitution: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-14,
            rel_tol: 1e-11,
            max_subdivisions: 2000,
            endpoint_substitution: true,
        }
    }
}

impl QuadratureSpec {
    pub fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }

    /// Same spec with both tolerances scaled by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        QuadratureSpec {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("no convergence after {panels} panels: estimate {estimate:e} with error {error:e}")]
    NotConverged { estimate: f64, error: f64, panels: usize },
    #[error("integrand is not finite at t = {at}")]
    NonFinite { at: f64 },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
}

/// Values the integrator can accumulate.
pub trait Integrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

fn gauss_kronrod<T, F>(f: &mut F, a: f64, b: f64) -> Result<(T, f64), QuadratureError>
where
    T: Integrand,
    F: FnMut(f64) -> T,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |t: f64| -> Result<T, QuadratureError> {
        let v = f(t);
        if v.magnitude().is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite { at: t })
        }
    };
    let fc = eval(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = fc.magnitude() * WGK[7];
    let mut fv = [(T::zero(), T::zero()); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv[j] = (f1, f2);
        kronrod = kronrod + (f1 + f2) * WGK[j];
        res_abs += (f1.magnitude() + f2.magnitude()) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).magnitude();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j].0 - mean).magnitude() + (fv[j].1 - mean).magnitude());
    }
    let h = half.abs();
    let err = rescale_error(((kronrod - gauss) * half).magnitude(), res_abs * h, res_asc * h);
    Ok((kronrod * half, err))
}

fn adaptive<T, F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate<T>, QuadratureError>
where
    T: Integrand,
    F: FnMut(f64) -> T,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(Estimate {
            value: T::zero(),
            error: 0.0,
            panels: 0,
        });
    }
    let (value, error) = gauss_kronrod(&mut f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total_value = value;
    let mut total_error = error;
    loop {
        if total_error <= spec.tolerance(total_value.magnitude()) {
            break;
        }
        if heap.len() >= spec.max_subdivisions.max(1) {
            return Err(QuadratureError::NotConverged {
                estimate: total_value.magnitude(),
                error: total_error,
                panels: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval exhausted at machine resolution
            return Err(QuadratureError::NotConverged {
                estimate: total_value.magnitude(),
                error: total_error,
                panels: heap.len() + 1,
            });
        }
        let (v1, e1) = gauss_kronrod(&mut f, worst.a, mid)?;
        let (v2, e2) = gauss_kronrod(&mut f, mid, worst.b)?;
        total_value = total_value - worst.value + v1 + v2;
        total_error += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum in interval order so the result does not depend on heap history
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().fold(T::zero(), |acc, p| acc + p.value);
    let error = panels.iter().map(|p| p.error).sum();
    Ok(Estimate {
        value,
        error,
        panels: panels.len(),
    })
}

/// `int_a^b f(t) dt`.
pub fn integrate<T, F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate<T>, QuadratureError>
where
    T: Integrand,
    F: FnMut(f64) -> T,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    if spec.endpoint_substitution {
        let width = b - a;
        let scale = 0.5 * std::f64::consts::PI * width;
        adaptive(
            |s: f64| {
                let (sin, cos) = (std::f64::consts::PI * s).sin_cos();
                f(a + 0.5 * width * (1.0 - cos)) * (scale * sin)
            },
            0.0,
            if b > a { 1.0 } else { 0.0 },
            spec,
        )
    } else {
        adaptive(f, a, b, spec)
    }
}

/// `int_a^inf f(t) dt`; `f` must decay fast enough for the integral to
/// converge absolutely.
pub fn integrate_to_infinity<T, F>(mut f: F, a: f64, spec: &QuadratureSpec) -> Result<Estimate<T>, QuadratureError>
where
    T: Integrand,
    F: FnMut(f64) -> T,
{
    if !a.is_finite() {
        return Err(QuadratureError::InvalidInterval { a, b: f64::INFINITY });
    }
    adaptive(
        |s: f64| {
            let w = 1.0 - s;
            let t = a + s / w;
            if t.is_finite() {
                f(t) * (1.0 / (w * w))
            } else {
                T::zero()
            }
        },
        0.0,
        1.0,
        spec,
    )
}
