//! Discrete random walks on the integer line.
//!
//! A walk of `2n` steps of duration `epsilon` and length `eta` samples the
//! Euclidean path integral for mass `m = epsilon / eta^2` over total time
//! `T = 2 n epsilon`. Potentials enter as per-step weights ([`WeightModel`]).

mod density;
mod enumerate;
mod path;
mod transfer;

pub use density::{free_return_probability, lattice_density_closed};
pub use enumerate::{
    below_time_histogram, crossing_histogram, enumerate_loops, enumerate_loops_bounded, lattice_density_bruteforce,
    lattice_density_bruteforce_with, loop_partitions, Histogram, LoopPartition, Loops, DEFAULT_ENUMERATION_BOUND,
};
pub use path::{boundary_crossings, chung_feller_map, path_weight, time_below_steps, LatticePath, MAX_PATH_STEPS};
pub use transfer::{required_cutoff, transfer_matrix_density};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("step word does not return to the origin")]
    NotALoop,
    #[error("path of {len} steps exceeds the {max}-step limit")]
    TooLong { len: usize, max: usize },
    #[error("invalid step character {0:?}; expected 'U' or 'D'")]
    InvalidStep(char),
    #[error("enumeration of n = {n} exceeds the bound n <= {bound}; pass a larger bound explicitly")]
    EnumerationBound { n: u64, bound: u64 },
    #[error("cutoff {cutoff} would truncate paths; at least {required} is needed")]
    CutoffTooSmall { cutoff: u64, required: u64 },
    #[error("invalid lattice parameters: {0}")]
    InvalidSpec(String),
    #[error("invalid weight model: {0}")]
    InvalidModel(String),
}

/// Discretization of a time interval into `2n` steps.
///
/// Holds `epsilon = mass * eta^2` and `total_time = 2 n epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    n: u64,
    mass: f64,
    eta: f64,
    epsilon: f64,
    total_time: f64,
}

impl LatticeSpec {
    /// Lattice of `2n` steps covering `total_time`.
    pub fn from_time(n: u64, mass: f64, total_time: f64) -> Result<Self, LatticeError> {
        check_positive("mass", mass)?;
        check_positive("total time", total_time)?;
        if n == 0 {
            return Err(LatticeError::InvalidSpec("n must be positive".into()));
        }
        let eta = (total_time / (2.0 * n as f64 * mass)).sqrt();
        Self::from_spacing(n, mass, eta)
    }

    /// Lattice of `2n` steps with spatial spacing `eta`.
    pub fn from_spacing(n: u64, mass: f64, eta: f64) -> Result<Self, LatticeError> {
        check_positive("mass", mass)?;
        check_positive("eta", eta)?;
        if n == 0 {
            return Err(LatticeError::InvalidSpec("n must be positive".into()));
        }
        let epsilon = mass * eta * eta;
        Ok(LatticeSpec {
            n,
            mass,
            eta,
            epsilon,
            total_time: 2.0 * epsilon * n as f64,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn steps(&self) -> u64 {
        2 * self.n
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// Lattice site of position `x`, if `x` is a site to within 1e-9.
    pub fn site(&self, x: f64) -> Option<i64> {
        let s = x / self.eta;
        let r = s.round();
        ((s - r).abs() <= 1e-9 * r.abs().max(1.0)).then_some(r as i64)
    }
}

fn check_positive(what: &str, v: f64) -> Result<(), LatticeError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(LatticeError::InvalidSpec(format!(
            "{what} must be positive and finite, got {v}"
        )))
    }
}

/// The potential a walk moves in.
///
/// `Step` charges `exp(-V epsilon)` for every step whose midpoint lies in
/// `x < 0`. `Delta` models `a delta(x)` as a well on the cell `[-1, 0]` and
/// charges `exp(-a m eta)` for every traversal of that cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum WeightModel {
    Free,
    Step { potential: f64 },
    Delta { coupling: f64 },
}

impl WeightModel {
    pub fn validate(&self) -> Result<(), LatticeError> {
        match *self {
            WeightModel::Free => Ok(()),
            WeightModel::Step { potential } if potential.is_finite() && potential >= 0.0 => Ok(()),
            WeightModel::Step { potential } => Err(LatticeError::InvalidModel(format!(
                "step height must be finite and nonnegative, got {potential}"
            ))),
            WeightModel::Delta { coupling } if coupling.is_finite() => Ok(()),
            WeightModel::Delta { coupling } => Err(LatticeError::InvalidModel(format!(
                "delta coupling must be finite, got {coupling}"
            ))),
        }
    }

    /// Log of the weight charged per weighted step.
    pub fn log_weight_per_event(&self, spec: &LatticeSpec) -> f64 {
        match *self {
            WeightModel::Free => 0.0,
            WeightModel::Step { potential } => -potential * spec.epsilon(),
            WeightModel::Delta { coupling } => -coupling * spec.mass() * spec.eta(),
        }
    }

    /// Whether the step between adjacent sites `from` and `to` is weighted.
    pub fn is_weighted_step(&self, from: i64, to: i64) -> bool {
        match self {
            WeightModel::Free => false,
            WeightModel::Step { .. } => from.min(to) < 0,
            WeightModel::Delta { .. } => from.min(to) == -1 && from.max(to) == 0,
        }
    }

    /// Weight of a single step between adjacent sites.
    pub fn step_factor(&self, from: i64, to: i64, spec: &LatticeSpec) -> f64 {
        if self.is_weighted_step(from, to) {
            self.log_weight_per_event(spec).exp()
        } else {
            1.0
        }
    }

    /// True when every weight is 1 (`Free`, `Step(0)`, `Delta(0)`).
    pub fn is_trivial(&self) -> bool {
        match *self {
            WeightModel::Free => true,
            WeightModel::Step { potential } => potential == 0.0,
            WeightModel::Delta { coupling } => coupling == 0.0,
        }
    }
}
