use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ContinuumError;
use crate::lattice::WeightModel;

/// Powers of `1/n` assumed in the discretization error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorExpansion {
    /// `1/n, 1/n^2, ...`
    IntegerPowers,
    /// `n^{-1/2}, 1/n, n^{-3/2}, ...`, the expansion in the lattice spacing
    /// `eta ~ n^{-1/2}` itself.
    HalfIntegerPowers,
}

impl ErrorExpansion {
    /// Expansion suited to the loop density of `model`. A delta coupling
    /// shifts the density at first order in `eta`.
    pub fn for_model(model: WeightModel) -> Self {
        match model {
            WeightModel::Delta { coupling } if coupling != 0.0 => ErrorExpansion::HalfIntegerPowers,
            _ => ErrorExpansion::IntegerPowers,
        }
    }

    pub fn exponents(self, count: usize) -> Vec<f64> {
        let step = match self {
            ErrorExpansion::IntegerPowers => 1.0,
            ErrorExpansion::HalfIntegerPowers => 0.5,
        };
        (1..=count).map(|k| step * k as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub estimate: f64,
    /// Magnitude of the highest-order correction at the finest sample.
    pub error_estimate: f64,
    pub exponents: Vec<f64>,
    pub coefficients: Vec<f64>,
}

/// Richardson extrapolation in `1/n`: fits `L + sum_k c_k n^{-k}` through
/// all samples and returns `L`.
pub fn continuum_extrapolate(samples: &[(u64, f64)]) -> Result<Extrapolation, ContinuumError> {
    extrapolate_with(samples, ErrorExpansion::IntegerPowers)
}

pub fn extrapolate_with(samples: &[(u64, f64)], expansion: ErrorExpansion) -> Result<Extrapolation, ContinuumError> {
    let count = samples.len().saturating_sub(1);
    extrapolate_with_orders(samples, &expansion.exponents(count))
}

/// Fits `L + sum_k c_k n^{-p_k}` exactly through the samples; needs one
/// more sample than exponents.
pub fn extrapolate_with_orders(samples: &[(u64, f64)], exponents: &[f64]) -> Result<Extrapolation, ContinuumError> {
    if samples.len() < 2 {
        return Err(ContinuumError::TooFewSamples(samples.len()));
    }
    if exponents.len() + 1 != samples.len() {
        return Err(ContinuumError::InvalidParameter(format!(
            "{} samples need {} exponents, got {}",
            samples.len(),
            samples.len() - 1,
            exponents.len()
        )));
    }
    if samples.windows(2).any(|w| w[0].0 >= w[1].0) || samples[0].0 == 0 {
        return Err(ContinuumError::InvalidParameter(
            "sample n must be positive and strictly increasing".into(),
        ));
    }
    if samples.iter().any(|s| !s.1.is_finite()) {
        return Err(ContinuumError::InvalidParameter("sample values must be finite".into()));
    }
    let size = samples.len();
    // columns are scaled by the finest sample so entries stay O(1)
    let n_max = samples[size - 1].0 as f64;
    let a = DMatrix::from_fn(size, size, |i, j| {
        if j == 0 {
            1.0
        } else {
            (n_max / samples[i].0 as f64).powf(exponents[j - 1])
        }
    });
    let b = DVector::from_iterator(size, samples.iter().map(|s| s.1));
    let x = a.lu().solve(&b).ok_or(ContinuumError::Singular)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ContinuumError::Singular);
    }
    // x[j] is c_j n_max^{-p_j}, the correction at the finest sample
    let coefficients = (1..size).map(|j| x[j] * n_max.powf(exponents[j - 1])).collect();
    Ok(Extrapolation {
        estimate: x[0],
        error_estimate: x[size - 1].abs(),
        exponents: exponents.to_vec(),
        coefficients,
    })
}

/// Least-squares slope of `ln |value - target|` against `ln n`.
pub fn convergence_slope(samples: &[(u64, f64)], target: f64) -> Result<f64, ContinuumError> {
    if samples.len() < 2 {
        return Err(ContinuumError::TooFewSamples(samples.len()));
    }
    let points: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(n, v)| ((n as f64).ln(), (v - target).abs().ln()))
        .collect();
    if points.iter().any(|p| !p.1.is_finite()) {
        return Err(ContinuumError::Domain(
            "a sample equals the target; slope undefined".into(),
        ));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(ContinuumError::Singular);
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(ns: &[u64], f: impl Fn(f64) -> f64) -> Vec<(u64, f64)> {
        ns.iter().map(|&n| (n, f(n as f64))).collect()
    }

    #[test]
    fn exact_on_its_own_model() {
        let s = synthetic(&[10, 20, 40], |n| 2.0 + 3.0 / n - 5.0 / (n * n));
        let e = continuum_extrapolate(&s).unwrap();
        assert!((e.estimate - 2.0).abs() < 1e-12);
        assert!((e.coefficients[0] - 3.0).abs() < 1e-9);
        assert!((e.coefficients[1] + 5.0).abs() < 1e-7);
        assert!((e.error_estimate - 5.0 / 1600.0).abs() < 1e-10);
    }

    #[test]
    fn half_integer_expansion() {
        let s = synthetic(&[100, 400, 1600], |n| 1.0 + 0.7 / n.sqrt() + 0.2 / n);
        let wrong = continuum_extrapolate(&s).unwrap();
        let right = extrapolate_with(&s, ErrorExpansion::HalfIntegerPowers).unwrap();
        assert!((right.estimate - 1.0).abs() < 1e-12);
        assert!((wrong.estimate - 1.0).abs() > 1e-3);
    }

    #[test]
    fn expansion_choice_by_model() {
        assert_eq!(
            ErrorExpansion::for_model(WeightModel::Free),
            ErrorExpansion::IntegerPowers
        );
        assert_eq!(
            ErrorExpansion::for_model(WeightModel::Step { potential: 1.0 }),
            ErrorExpansion::IntegerPowers
        );
        assert_eq!(
            ErrorExpansion::for_model(WeightModel::Delta { coupling: 0.0 }),
            ErrorExpansion::IntegerPowers
        );
        assert_eq!(
            ErrorExpansion::for_model(WeightModel::Delta { coupling: -1.0 }),
            ErrorExpansion::HalfIntegerPowers
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            continuum_extrapolate(&[(10, 1.0)]),
            Err(ContinuumError::TooFewSamples(1))
        );
        assert!(continuum_extrapolate(&[(10, 1.0), (10, 2.0)]).is_err());
        assert!(continuum_extrapolate(&[(20, 1.0), (10, 2.0)]).is_err());
        assert!(continuum_extrapolate(&[(0, 1.0), (10, 2.0)]).is_err());
        assert!(extrapolate_with_orders(&[(1, 1.0), (2, 1.0)], &[1.0, 2.0]).is_err());
        assert!(convergence_slope(&[(1, 1.0)], 0.0).is_err());
    }

    #[test]
    fn slope_recovers_power() {
        let s = synthetic(&[10, 100, 1000], |n| 4.0 + 2.0 * n.powf(-1.5));
        assert!((convergence_slope(&s, 4.0).unwrap() + 1.5).abs() < 1e-12);
    }
}
