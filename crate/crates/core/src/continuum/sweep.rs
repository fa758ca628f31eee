use super::{delta_edge_propagator, free_propagator, step_edge_propagator, ContinuumError, Query, TimeKind};
use crate::exec::Execution;
use crate::lattice::{lattice_density_closed, required_cutoff, transfer_matrix_density, LatticeSpec, WeightModel};

/// Tolerance for `T / (2 m eta^2)` to count as a whole number of steps.
const GRID_TOLERANCE: f64 = 1e-9;

/// Euclidean edge value the loop densities of `model` converge to.
pub fn continuum_target(model: WeightModel, mass: f64, time: f64) -> Result<f64, ContinuumError> {
    model.validate()?;
    let value = match model {
        WeightModel::Free => free_propagator(&Query::edge(time, mass)?, TimeKind::Euclidean),
        WeightModel::Step { potential } => step_edge_propagator(time, potential, mass, TimeKind::Euclidean)?,
        WeightModel::Delta { coupling } => delta_edge_propagator(time, coupling, mass, TimeKind::Euclidean)?,
    };
    Ok(value.re())
}

/// `(n, u / 2 eta)` for the closed-form loop density at each `n`, holding
/// `m` and `T` fixed.
pub fn edge_samples(
    model: WeightModel,
    mass: f64,
    time: f64,
    ns: &[u64],
    exec: Execution,
) -> Result<Vec<(u64, f64)>, ContinuumError> {
    model.validate()?;
    let specs = ns
        .iter()
        .map(|&n| LatticeSpec::from_time(n, mass, time))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(exec.map(specs, |spec| {
        (spec.n(), lattice_density_closed(model, &spec) / (2.0 * spec.eta()))
    }))
}

/// `(n, u / 2 eta)` from the transfer matrix between the endpoints of `q`,
/// with spacing `eta = unit / r` for each refinement `r`.
///
/// Both endpoints must be multiples of `unit`, and `T / (2 m eta^2)` must
/// be a whole number at every refinement.
pub fn transfer_samples(
    q: &Query,
    model: WeightModel,
    unit: f64,
    refinements: &[u64],
    exec: Execution,
) -> Result<Vec<(u64, f64)>, ContinuumError> {
    model.validate()?;
    if !(unit.is_finite() && unit > 0.0) {
        return Err(ContinuumError::InvalidParameter(format!(
            "spacing unit must be positive, got {unit}"
        )));
    }
    let mut jobs = Vec::with_capacity(refinements.len());
    for &r in refinements {
        if r == 0 {
            return Err(ContinuumError::InvalidParameter("refinement must be positive".into()));
        }
        let eta = unit / r as f64;
        let steps = q.time() / (2.0 * q.mass() * eta * eta);
        let n = steps.round();
        if n < 1.0 || (steps - n).abs() > GRID_TOLERANCE * steps {
            return Err(ContinuumError::InvalidParameter(format!(
                "T / (2 m eta^2) = {steps} is not a whole number at refinement {r}"
            )));
        }
        let spec = LatticeSpec::from_spacing(n as u64, q.mass(), eta)?;
        let site = |x: f64| {
            spec.site(x).ok_or_else(|| {
                ContinuumError::InvalidParameter(format!("endpoint {x} is off the lattice of spacing {eta}"))
            })
        };
        jobs.push((spec, site(q.x0())?, site(q.x1())?));
    }
    exec.map(jobs, |(spec, s0, s1)| {
        let cutoff = required_cutoff(spec.n(), s0, s1);
        let u = transfer_matrix_density(s0, s1, model, &spec, cutoff)?;
        Ok((spec.n(), u / (2.0 * spec.eta())))
    })
    .into_iter()
    .collect()
}
