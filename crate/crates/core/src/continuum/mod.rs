//! Closed-form continuum propagators and the continuum limit of lattice
//! densities.
//!
//! Every closed form is written once as a function of a complex duration
//! `tau`: Euclidean time uses `tau = T`, real time uses `tau = iT` with
//! principal branches throughout.

mod extrapolate;
mod propagators;
mod sweep;

pub use extrapolate::{
    continuum_extrapolate, convergence_slope, extrapolate_with, extrapolate_with_orders, ErrorExpansion, Extrapolation,
};
pub use propagators::{
    boundary_derivative, delta_correction_on_ray, delta_edge_by_quadrature, delta_edge_propagator,
    delta_full_by_quadrature, delta_full_kernel, delta_full_propagator, free_kernel, free_propagator,
    restricted_propagator, step_edge_kernel, step_edge_propagator,
};
pub use sweep::{continuum_target, edge_samples, transfer_samples};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::LatticeError;
use crate::quadrature::QuadratureError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContinuumError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("extrapolation needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("extrapolation system is singular")]
    Singular,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeKind {
    Euclidean,
    Real,
}

impl TimeKind {
    /// Complex duration standing in for `T` in the closed forms.
    pub fn tau(self, time: f64) -> Complex64 {
        match self {
            TimeKind::Euclidean => Complex64::new(time, 0.0),
            TimeKind::Real => Complex64::new(0.0, time),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorValue {
    pub amplitude: Complex64,
    pub kind: TimeKind,
}

impl PropagatorValue {
    pub fn new(amplitude: Complex64, kind: TimeKind) -> Self {
        PropagatorValue { amplitude, kind }
    }

    pub fn euclidean(value: f64) -> Self {
        PropagatorValue::new(Complex64::new(value, 0.0), TimeKind::Euclidean)
    }

    pub fn zero(kind: TimeKind) -> Self {
        PropagatorValue::new(Complex64::new(0.0, 0.0), kind)
    }

    /// The real part; exact for Euclidean values.
    pub fn re(&self) -> f64 {
        self.amplitude.re
    }

    pub fn norm(&self) -> f64 {
        self.amplitude.norm()
    }

    /// `|self - other| / |other|`, or the absolute difference when `other`
    /// is zero.
    pub fn relative_deviation(&self, other: &PropagatorValue) -> f64 {
        let diff = (self.amplitude - other.amplitude).norm();
        let scale = other.amplitude.norm();
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }
}

/// Endpoints, duration and mass of a propagator evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    x0: f64,
    x1: f64,
    time: f64,
    mass: f64,
}

impl Query {
    pub fn new(x0: f64, x1: f64, time: f64, mass: f64) -> Result<Self, ContinuumError> {
        if !(x0.is_finite() && x1.is_finite()) {
            return Err(ContinuumError::InvalidQuery(format!(
                "endpoints must be finite, got {x0}, {x1}"
            )));
        }
        if !(time.is_finite() && time > 0.0) {
            return Err(ContinuumError::InvalidQuery(format!(
                "duration must be positive, got {time}"
            )));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(ContinuumError::InvalidQuery(format!(
                "mass must be positive, got {mass}"
            )));
        }
        Ok(Query { x0, x1, time, mass })
    }

    /// Both endpoints on the boundary.
    pub fn edge(time: f64, mass: f64) -> Result<Self, ContinuumError> {
        Query::new(0.0, 0.0, time, mass)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn with_endpoints(&self, x0: f64, x1: f64) -> Result<Self, ContinuumError> {
        Query::new(x0, x1, self.time, self.mass)
    }

    pub fn with_time(&self, time: f64) -> Result<Self, ContinuumError> {
        Query::new(self.x0, self.x1, time, self.mass)
    }

    /// Endpoints exchanged.
    pub fn reversed(&self) -> Self {
        Query {
            x0: self.x1,
            x1: self.x0,
            ..*self
        }
    }

    /// Both endpoints mirrored through the origin.
    pub fn reflected(&self) -> Self {
        Query {
            x0: -self.x0,
            x1: -self.x1,
            ..*self
        }
    }

    pub fn separation(&self) -> f64 {
        self.x1 - self.x0
    }

    /// `|x0| + |x1|`, the shortest path length via the origin.
    pub fn span(&self) -> f64 {
        self.x0.abs() + self.x1.abs()
    }

    /// True when the endpoints lie strictly on opposite sides of the origin.
    pub fn is_opposite_side(&self) -> bool {
        matches!((Side::of(self.x0), Side::of(self.x1)), (Some(a), Some(b)) if a != b)
    }

    /// True when both endpoints lie strictly on the same side.
    pub fn is_same_side(&self) -> bool {
        matches!((Side::of(self.x0), Side::of(self.x1)), (Some(a), Some(b)) if a == b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    /// Side holding `x`, or `None` at the origin.
    pub fn of(x: f64) -> Option<Side> {
        if x > 0.0 {
            Some(Side::Positive)
        } else if x < 0.0 {
            Some(Side::Negative)
        } else {
            None
        }
    }

    pub fn contains(self, x: f64) -> bool {
        Side::of(x) == Some(self)
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Positive => Side::Negative,
            Side::Negative => Side::Positive,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Side::Positive => 1.0,
            Side::Negative => -1.0,
        }
    }
}
