use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

use super::{ContinuumError, PropagatorValue, Query, Side, TimeKind};
use crate::quadrature::{integrate_to_infinity, Estimate, QuadratureSpec};
use crate::special::erfcx;

/// Below this `|V tau|` the step edge form uses its Taylor series.
const SMALL_EXPONENT: f64 = 1e-8;

fn check_positive(name: &str, value: f64) -> Result<(), ContinuumError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ContinuumError::InvalidParameter(format!(
            "{name} must be positive, got {value}"
        )))
    }
}

fn check_finite(name: &str, value: f64) -> Result<(), ContinuumError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ContinuumError::InvalidParameter(format!(
            "{name} must be finite, got {value}"
        )))
    }
}

/// `(m / 2 pi tau)^{1/2} exp(-m d^2 / 2 tau)`.
pub fn free_kernel(d: f64, tau: Complex64, mass: f64) -> Complex64 {
    (mass / (2.0 * PI * tau)).sqrt() * (-mass * d * d / (2.0 * tau)).exp()
}

pub fn free_propagator(q: &Query, kind: TimeKind) -> PropagatorValue {
    PropagatorValue::new(free_kernel(q.separation(), kind.tau(q.time()), q.mass()), kind)
}

fn image_difference(x0: f64, x1: f64, tau: Complex64, mass: f64) -> Complex64 {
    free_kernel(x1 - x0, tau, mass) - free_kernel(x1 + x0, tau, mass)
}

/// Propagator over paths that stay strictly inside `side`, by the method
/// of images. Zero unless both endpoints lie in `side`.
pub fn restricted_propagator(q: &Query, kind: TimeKind, side: Side) -> PropagatorValue {
    if !(side.contains(q.x0()) && side.contains(q.x1())) {
        return PropagatorValue::zero(kind);
    }
    PropagatorValue::new(image_difference(q.x0(), q.x1(), kind.tau(q.time()), q.mass()), kind)
}

/// Normal derivative at the origin of the restricted propagator, taken
/// from inside `side`.
///
/// Exactly one endpoint of `q` must be at the origin; the restricted
/// propagator is symmetric in its endpoints so either may be. The result
/// is `2 (m x / tau) g_f(x, tau)` with `x` the other endpoint, and zero
/// when that endpoint is outside `side`.
pub fn boundary_derivative(q: &Query, kind: TimeKind, side: Side) -> Result<PropagatorValue, ContinuumError> {
    let x = match (q.x0() == 0.0, q.x1() == 0.0) {
        (true, false) => q.x1(),
        (false, true) => q.x0(),
        (true, true) => {
            return Err(ContinuumError::Domain(
                "boundary derivative needs the other endpoint off the origin".into(),
            ))
        }
        (false, false) => {
            return Err(ContinuumError::Domain(
                "boundary derivative needs one endpoint at the origin".into(),
            ))
        }
    };
    if !side.contains(x) {
        return Ok(PropagatorValue::zero(kind));
    }
    let tau = kind.tau(q.time());
    let m = q.mass();
    Ok(PropagatorValue::new(2.0 * m * x / tau * free_kernel(x, tau, m), kind))
}

fn expm1_complex(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        let mut term = w;
        let mut sum = w;
        for k in 2..40 {
            term = term * w / k as f64;
            sum += term;
            if term.norm() <= f64::EPSILON * sum.norm() {
                break;
            }
        }
        sum
    } else {
        w.exp() - 1.0
    }
}

/// `(m / 2 pi)^{1/2} (1 - exp(-V tau)) / (V tau^{3/2})`.
pub fn step_edge_kernel(tau: Complex64, potential: f64, mass: f64) -> Complex64 {
    let w = potential * tau;
    // (1 - exp(-w)) / V
    let ratio = if w.norm() < SMALL_EXPONENT {
        tau * (1.0 - w / 2.0 + w * w / 6.0)
    } else {
        -expm1_complex(-w) / potential
    };
    (mass / (2.0 * PI)).sqrt() * ratio / tau.powf(1.5)
}

/// Edge propagator `g(0, T | 0, 0)` for the potential `V theta(-x)`.
pub fn step_edge_propagator(
    time: f64,
    potential: f64,
    mass: f64,
    kind: TimeKind,
) -> Result<PropagatorValue, ContinuumError> {
    check_positive("duration", time)?;
    check_positive("mass", mass)?;
    if !(potential.is_finite() && potential >= 0.0) {
        return Err(ContinuumError::InvalidParameter(format!(
            "step potential must be nonnegative, got {potential}"
        )));
    }
    let amplitude = match kind {
        TimeKind::Euclidean => step_edge_kernel(kind.tau(time), potential, mass),
        TimeKind::Real => {
            let i = Complex64::i();
            let w = Complex64::new(0.0, potential * time);
            let ratio = if w.norm() < SMALL_EXPONENT {
                Complex64::new(0.0, time) * (1.0 - w / 2.0 + w * w / 6.0)
            } else {
                -expm1_complex(-w) / potential
            };
            -i * (mass / (2.0 * PI * i)).sqrt() * ratio / time.powf(1.5)
        }
    };
    Ok(PropagatorValue::new(amplitude, kind))
}

/// `g_f(d, tau) - a m int_0^inf exp(-a m u) g_f(X + u, tau) du` in closed form,
/// with `d = x1 - x0` and `X = |x0| + |x1|`.
pub fn delta_full_kernel(d: f64, span: f64, tau: Complex64, coupling: f64, mass: f64) -> Complex64 {
    let free = free_kernel(d, tau, mass);
    if coupling == 0.0 {
        return free;
    }
    let z = (span + coupling * tau) * (mass / (2.0 * tau)).sqrt();
    let gauss = (-mass * span * span / (2.0 * tau)).exp();
    let half_am = 0.5 * coupling * mass;
    let correction = if z.re >= 0.0 {
        gauss * erfcx(z)
    } else {
        // reflected form with exp(z^2) folded into the Gaussian so the
        // bound-state growth does not overflow separately
        let folded = mass * coupling * span + 0.5 * mass * coupling * coupling * tau;
        2.0 * folded.exp() - gauss * erfcx(-z)
    };
    free - half_am * correction
}

/// Edge propagator `g(0, T | 0, 0)` for the potential `a delta(x)`.
pub fn delta_edge_propagator(
    time: f64,
    coupling: f64,
    mass: f64,
    kind: TimeKind,
) -> Result<PropagatorValue, ContinuumError> {
    check_positive("duration", time)?;
    check_positive("mass", mass)?;
    check_finite("coupling", coupling)?;
    Ok(PropagatorValue::new(
        delta_full_kernel(0.0, 0.0, kind.tau(time), coupling, mass),
        kind,
    ))
}

pub fn delta_full_propagator(q: &Query, coupling: f64, kind: TimeKind) -> Result<PropagatorValue, ContinuumError> {
    check_finite("coupling", coupling)?;
    let tau = kind.tau(q.time());
    Ok(PropagatorValue::new(
        delta_full_kernel(q.separation(), q.span(), tau, coupling, q.mass()),
        kind,
    ))
}

/// Euclidean delta edge propagator from its integral form
/// `(m^3 / 2 pi T^3)^{1/2} int_0^inf u exp(-m u^2 / 2T) exp(-a m u) du`.
pub fn delta_edge_by_quadrature(
    time: f64,
    coupling: f64,
    mass: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate<f64>, ContinuumError> {
    check_positive("duration", time)?;
    check_positive("mass", mass)?;
    check_finite("coupling", coupling)?;
    let prefactor = (mass.powi(3) / (2.0 * PI * time.powi(3))).sqrt();
    let est = integrate_to_infinity(
        |u: f64| prefactor * u * (-mass * u * u / (2.0 * time) - coupling * mass * u).exp(),
        0.0,
        spec,
    )?;
    Ok(est)
}

/// `int_0^inf exp(-a m u) g_f(X + u, tau) du` by quadrature along the ray
/// `u = s exp(i arg(tau) / 2)`, on which the integrand decays like a real
/// Gaussian. For real time this turns the oscillatory integral into a
/// smooth one.
pub fn delta_correction_on_ray(
    span: f64,
    tau: Complex64,
    coupling: f64,
    mass: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate<Complex64>, ContinuumError> {
    if !(span.is_finite() && span >= 0.0) {
        return Err(ContinuumError::InvalidParameter(format!(
            "span must be nonnegative, got {span}"
        )));
    }
    let arg = tau.arg();
    if !(0.0..=2.0 * FRAC_PI_4).contains(&arg) {
        return Err(ContinuumError::Domain(format!(
            "duration phase {arg} outside [0, pi/2]"
        )));
    }
    let dir = Complex64::from_polar(1.0, 0.5 * arg);
    let am = coupling * mass;
    let prefactor = dir * (mass / (2.0 * PI * tau)).sqrt();
    let est = integrate_to_infinity(
        |s: f64| {
            let u = dir * s;
            let d = span + u;
            // one exponent, so a growing coupling factor never meets an
            // underflowed Gaussian
            prefactor * (-am * u - mass * d * d / (2.0 * tau)).exp()
        },
        0.0,
        spec,
    )?;
    Ok(est)
}

/// Delta full propagator with the coupling integral done by quadrature.
pub fn delta_full_by_quadrature(
    q: &Query,
    coupling: f64,
    kind: TimeKind,
    spec: &QuadratureSpec,
) -> Result<PropagatorValue, ContinuumError> {
    check_finite("coupling", coupling)?;
    let tau = kind.tau(q.time());
    let free = free_kernel(q.separation(), tau, q.mass());
    let corr = delta_correction_on_ray(q.span(), tau, coupling, q.mass(), spec)?;
    Ok(PropagatorValue::new(free - coupling * q.mass() * corr.value, kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(x0: f64, x1: f64, t: f64, m: f64) -> Query {
        Query::new(x0, x1, t, m).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm()
    }

    #[test]
    fn free_reference_values() {
        let e = free_propagator(&q(0.3, 0.3, 1.0, 1.0), TimeKind::Euclidean);
        assert!((e.re() - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(e.amplitude.im, 0.0);
        let r = free_propagator(&q(0.3, 0.3, 2.0, 1.5), TimeKind::Real);
        assert!((r.norm() - (1.5 / (2.0 * PI * 2.0)).sqrt()).abs() < 1e-15);
        assert!((r.amplitude.arg() + FRAC_PI_4).abs() < 1e-14);
    }

    #[test]
    fn free_symmetries() {
        for kind in [TimeKind::Euclidean, TimeKind::Real] {
            let base = q(0.4, -1.3, 0.8, 1.7);
            let v = free_propagator(&base, kind).amplitude;
            assert_eq!(v, free_propagator(&base.reversed(), kind).amplitude);
            assert_eq!(v, free_propagator(&base.reflected(), kind).amplitude);
        }
    }

    #[test]
    fn restricted_reference_and_theta() {
        let v = restricted_propagator(&q(1.0, 1.0, 1.0, 1.0), TimeKind::Euclidean, Side::Positive);
        assert!((v.re() - 0.344_951_313_888_244_6).abs() < 1e-15);
        let wrong = restricted_propagator(&q(-1.0, 1.0, 1.0, 1.0), TimeKind::Euclidean, Side::Positive);
        assert_eq!(wrong.norm(), 0.0);
        let edge = restricted_propagator(&q(1.0, 0.0, 1.0, 1.0), TimeKind::Euclidean, Side::Positive);
        assert_eq!(edge.norm(), 0.0);
        let neg = restricted_propagator(&q(-1.0, -1.0, 1.0, 1.0), TimeKind::Euclidean, Side::Negative);
        assert!((neg.re() - v.re()).abs() < 1e-16);
    }

    #[test]
    fn boundary_derivative_reference_and_sign() {
        let d = boundary_derivative(&q(1.0, 0.0, 1.0, 1.0), TimeKind::Euclidean, Side::Positive).unwrap();
        assert!((d.re() - 0.483_941_449_038_286_7).abs() < 1e-15);
        let n = boundary_derivative(&q(-1.0, 0.0, 1.0, 1.0), TimeKind::Euclidean, Side::Negative).unwrap();
        assert!((n.re() + d.re()).abs() < 1e-16);
        let flipped = boundary_derivative(&q(0.0, 1.0, 1.0, 1.0), TimeKind::Euclidean, Side::Positive).unwrap();
        assert_eq!(flipped, d);
        assert!(boundary_derivative(&q(0.0, 0.0, 1.0, 1.0), TimeKind::Euclidean, Side::Positive).is_err());
        assert!(boundary_derivative(&q(1.0, 2.0, 1.0, 1.0), TimeKind::Euclidean, Side::Positive).is_err());
    }

    #[test]
    fn boundary_derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for _ in 0..20 {
            let x0: f64 = rng.gen_range(0.2..2.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let t: f64 = rng.gen_range(0.3..3.0);
            let side = Side::of(x0).unwrap();
            let query = q(x0, 0.0, t, 1.0);
            let exact = boundary_derivative(&query, TimeKind::Euclidean, side).unwrap().re();
            // the image form is odd in the free endpoint, so the centered
            // difference reduces to a one-sided evaluation
            let step = side.sign() * h;
            let inside = restricted_propagator(&q(x0, step, t, 1.0), TimeKind::Euclidean, side).re();
            let fd = inside / step;
            assert!(
                (fd - exact).abs() <= 1e-8 * exact.abs(),
                "x0={x0} t={t}: {fd} vs {exact}"
            );
        }
    }

    #[test]
    fn step_edge_reference_and_limits() {
        let v = step_edge_propagator(1.0, 1.0, 1.0, TimeKind::Euclidean).unwrap();
        assert!((v.re() - 0.252_179_617_227_692_8).abs() < 1e-15);
        let free = free_propagator(&q(0.0, 0.0, 1.3, 2.0), TimeKind::Euclidean).re();
        let zero = step_edge_propagator(1.3, 0.0, 2.0, TimeKind::Euclidean).unwrap().re();
        assert!((zero - free).abs() < 1e-15 * free);
        let tiny = step_edge_propagator(1.3, 1e-12, 2.0, TimeKind::Euclidean).unwrap().re();
        assert!((tiny - free).abs() < 1e-11 * free);
        let big = step_edge_propagator(1.0, 1e6, 1.0, TimeKind::Euclidean).unwrap().re();
        assert!((big * 1e6 - (2.0 * PI).powf(-0.5)).abs() < 1e-9);
        assert!(step_edge_propagator(1.0, -1.0, 1.0, TimeKind::Euclidean).is_err());
    }

    #[test]
    fn step_edge_small_exponent_is_continuous() {
        for v in [0.9e-8, 1.1e-8] {
            let series = step_edge_kernel(Complex64::new(1.0, 0.0), v, 1.0);
            let ratio = -(-v).exp_m1() / v;
            let direct = (2.0 * PI).powf(-0.5) * ratio;
            assert!((series.re - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn real_forms_are_the_continuation_to_imaginary_duration() {
        let time = 1.7;
        let explicit = step_edge_propagator(time, 0.8, 1.3, TimeKind::Real).unwrap().amplitude;
        let rotated = step_edge_kernel(Complex64::from_polar(time, 0.5 * PI), 0.8, 1.3);
        assert!(close(rotated, explicit, 1e-10));
        let explicit_small = step_edge_propagator(time, 0.0, 1.3, TimeKind::Real).unwrap().amplitude;
        let free = free_propagator(&q(0.0, 0.0, time, 1.3), TimeKind::Real).amplitude;
        assert!(close(explicit_small, free, 1e-12));
        // along the ray the kernel is smooth in the phase
        let mut prev = step_edge_kernel(Complex64::new(time, 0.0), 0.8, 1.3);
        for k in 1..=200 {
            let z = Complex64::from_polar(time, 0.5 * PI * k as f64 / 200.0);
            let cur = step_edge_kernel(z, 0.8, 1.3);
            assert!((cur - prev).norm() < 0.01);
            prev = cur;
        }
    }

    #[test]
    fn delta_reference_values() {
        let edge = delta_edge_propagator(1.0, 1.0, 1.0, TimeKind::Euclidean).unwrap();
        assert!((edge.re() - 0.137_363_988_536_309_3).abs() < 1e-14);
        let heavy = delta_edge_propagator(0.7, 1.0, 2.0, TimeKind::Euclidean).unwrap();
        assert!((heavy.re() - 0.197_632_800_050_671_6).abs() < 1e-14);
        let full = delta_full_propagator(&q(-1.0, 1.0, 1.0, 1.0), 1.0, TimeKind::Euclidean).unwrap();
        assert!((full.re() - 0.037_545_841_895_288_92).abs() < 1e-15);
        let bound = delta_full_propagator(&q(0.5, 2.0, 1.5, 1.3), -0.7, TimeKind::Euclidean).unwrap();
        assert!((bound.re() - 0.153_440_571_142_632_9).abs() < 1e-14);
    }

    #[test]
    fn delta_real_reference_values() {
        let cases = [
            (
                q(0.0, 0.0, 1.0, 1.0),
                1.0,
                Complex64::new(0.015_516_437_817_790_687, -0.166_850_676_081_648_94),
            ),
            (
                q(1.0, -1.0, 1.0, 1.0),
                1.0,
                Complex64::new(0.237_630_149_588_435_88, 0.252_179_606_003_321_2),
            ),
            (
                q(0.5, 0.3, 2.0, 1.5),
                -0.5,
                Complex64::new(0.391_946_706_288_802_1, 0.055_674_719_120_430_63),
            ),
        ];
        for (query, a, want) in cases {
            let got = delta_full_propagator(&query, a, TimeKind::Real).unwrap().amplitude;
            assert!(close(got, want, 1e-12), "{query:?}: {got} vs {want}");
        }
    }

    #[test]
    fn delta_limits_and_symmetry() {
        let free = free_propagator(&q(0.0, 0.0, 1.0, 1.0), TimeKind::Euclidean).re();
        assert_eq!(
            delta_edge_propagator(1.0, 0.0, 1.0, TimeKind::Euclidean).unwrap().re(),
            free
        );
        let strong = delta_edge_propagator(1.0, 1e3, 1.0, TimeKind::Euclidean).unwrap().re();
        assert!(strong > 0.0 && strong < 1e-5 * free);
        let base = q(-0.7, 1.2, 0.9, 1.1);
        for kind in [TimeKind::Euclidean, TimeKind::Real] {
            let v = delta_full_propagator(&base, 0.6, kind).unwrap().amplitude;
            assert!(close(
                delta_full_propagator(&base.reversed(), 0.6, kind).unwrap().amplitude,
                v,
                1e-15
            ));
            assert!(close(
                delta_full_propagator(&base.reflected(), 0.6, kind).unwrap().amplitude,
                v,
                1e-15
            ));
        }
        let at_origin = delta_full_propagator(&q(0.0, 0.0, 0.9, 1.1), 0.6, TimeKind::Real).unwrap();
        assert_eq!(at_origin, delta_edge_propagator(0.9, 0.6, 1.1, TimeKind::Real).unwrap());
    }

    #[test]
    fn delta_edge_two_routes() {
        let spec = QuadratureSpec::default();
        for (t, a, m) in [(1.0, 1.0, 1.0), (0.5, 3.0, 2.0), (2.0, -0.8, 0.7), (1.0, 0.0, 1.0)] {
            let closed = delta_edge_propagator(t, a, m, TimeKind::Euclidean).unwrap().re();
            let quad = delta_edge_by_quadrature(t, a, m, &spec).unwrap().value;
            assert!(
                (closed - quad).abs() < 1e-10 * closed,
                "{t} {a} {m}: {closed} vs {quad}"
            );
        }
    }

    #[test]
    fn delta_full_two_routes_both_times() {
        let spec = QuadratureSpec::default().tightened(0.01);
        for kind in [TimeKind::Euclidean, TimeKind::Real] {
            for (x0, x1, a) in [(-1.0, 1.0, 1.0), (0.5, 2.0, -0.7), (0.0, 0.0, 2.5), (1.5, -0.25, 0.3)] {
                let query = q(x0, x1, 1.2, 1.3);
                let closed = delta_full_propagator(&query, a, kind).unwrap().amplitude;
                let quad = delta_full_by_quadrature(&query, a, kind, &spec).unwrap().amplitude;
                assert!(close(quad, closed, 1e-10), "{kind:?} {x0} {x1} {a}: {quad} vs {closed}");
            }
        }
    }

    #[test]
    fn euclidean_delta_edge_lies_below_free() {
        for a in [0.1, 0.5, 1.0, 4.0, 20.0] {
            let v = delta_edge_propagator(1.0, a, 1.0, TimeKind::Euclidean).unwrap().re();
            assert!(v > 0.0 && v <= (2.0 * PI).powf(-0.5));
        }
    }

    #[test]
    fn free_kernel_is_normalized_and_composes() {
        let spec = QuadratureSpec::default();
        let both_sides = |f: &dyn Fn(f64) -> f64, c: f64| {
            let right = integrate_to_infinity(|u: f64| f(c + u), 0.0, &spec).unwrap().value;
            let left = integrate_to_infinity(|u: f64| f(c - u), 0.0, &spec).unwrap().value;
            right + left
        };
        for (x0, t, m) in [(0.0, 1.0, 1.0), (1.3, 0.2, 2.0), (-2.0, 5.0, 0.5)] {
            let total = both_sides(&|x| free_kernel(x - x0, Complex64::new(t, 0.0), m).re, x0);
            assert!((total - 1.0).abs() < 1e-8);
        }
        for (x0, x1, t, s) in [(0.0, 1.0, 1.0, 0.3), (-1.0, 2.0, 2.0, 1.5), (0.5, 0.5, 0.7, 0.35)] {
            let tau = |d: f64| Complex64::new(d, 0.0);
            let mid = both_sides(
                &|x| free_kernel(x1 - x, tau(t - s), 1.0).re * free_kernel(x - x0, tau(s), 1.0).re,
                0.5 * (x0 + x1),
            );
            let direct = free_kernel(x1 - x0, tau(t), 1.0).re;
            assert!((mid - direct).abs() < 1e-8 * direct);
        }
    }

    #[test]
    fn finite_interval_sanity_for_restricted_mass() {
        // restricted propagator integrates to the survival probability
        // erf(x0 / sqrt(2T/m))
        let spec = QuadratureSpec::default();
        let x0 = 0.8;
        let mass_in = integrate(
            |x: f64| restricted_propagator(&q(x0, x, 1.0, 1.0), TimeKind::Euclidean, Side::Positive).re(),
            1e-300,
            40.0,
            &spec,
        )
        .unwrap()
        .value;
        let want = statrs::function::erf::erf(x0 / 2f64.sqrt());
        assert!((mass_in - want).abs() < 1e-10);
    }
}
