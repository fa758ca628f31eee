//! Path decomposition of Euclidean propagators across the surface `x = 0`.
//!
//! A propagator between points on opposite sides is split at the first
//! and/or last time the path touches the origin. The pieces are the
//! first-passage density of the free walk onto the origin,
//! `rho(x, t) = (1/2m) |d g_r / dx|_{x=0} = |x|/t g_f(x, t)`,
//! weighted by `exp(-V t)` on the side carrying a step potential, and the
//! edge propagator `g(0, t | 0, 0)` of the model.

use std::cell::{Cell, RefCell};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::continuum::{
    boundary_derivative, delta_full_kernel, delta_full_propagator, free_kernel, free_propagator, restricted_propagator,
    step_edge_kernel, ContinuumError, PropagatorValue, Query, Side, TimeKind,
};
use crate::exec::Execution;
use crate::lattice::WeightModel;
use crate::quadrature::{integrate, QuadratureError, QuadratureSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdxError {
    #[error("endpoints on the same side of the origin; use the same-side decomposition")]
    SameSide,
    #[error("endpoints not on opposite sides of the origin")]
    NotOppositeSide,
    #[error("endpoints not both strictly on one side of the origin")]
    NotSameSide,
    #[error("decomposition is only implemented in Euclidean time, got {0:?}")]
    UnsupportedTime(TimeKind),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Continuum(#[from] ContinuumError),
    #[error("invalid model: {0}")]
    Model(String),
}

/// Result of a decomposition together with its quadrature cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PdxValue {
    pub value: PropagatorValue,
    /// Total adaptive panels across every integral evaluated.
    pub panels: usize,
}

impl PdxValue {
    fn euclidean(value: f64, panels: usize) -> Self {
        PdxValue {
            value: PropagatorValue::euclidean(value),
            panels,
        }
    }
}

/// First-passage density onto the origin of a free path started at `x`:
/// `(1/2m) |d g_r / dx|` at the boundary, which is `|x|/t g_f(x, t)`.
pub fn crossing_density(x: f64, t: f64, mass: f64) -> f64 {
    if t <= 0.0 || x == 0.0 {
        return 0.0;
    }
    let Ok(q) = Query::new(x, 0.0, t, mass) else {
        return 0.0;
    };
    let side = Side::of(x).expect("x is nonzero");
    match boundary_derivative(&q, TimeKind::Euclidean, side) {
        Ok(d) => d.re().abs() / (2.0 * mass),
        Err(_) => 0.0,
    }
}

fn potential_on(model: WeightModel, side: Side) -> f64 {
    match (model, side) {
        (WeightModel::Step { potential }, Side::Negative) => potential,
        _ => 0.0,
    }
}

fn edge_value(model: WeightModel, t: f64, mass: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let tau = Complex64::new(t, 0.0);
    match model {
        WeightModel::Free => free_kernel(0.0, tau, mass).re,
        WeightModel::Step { potential } => step_edge_kernel(tau, potential, mass).re,
        WeightModel::Delta { coupling } => delta_full_kernel(0.0, 0.0, tau, coupling, mass).re,
    }
}

/// Carries the first error raised inside a quadrature closure out to the
/// caller, along with the panels spent by nested integrals.
#[derive(Default)]
struct Nested {
    error: RefCell<Option<PdxError>>,
    panels: Cell<usize>,
}

impl Nested {
    fn record(&self, result: Result<(f64, usize), PdxError>) -> f64 {
        match result {
            Ok((v, p)) => {
                self.panels.set(self.panels.get() + p);
                v
            }
            Err(e) => {
                self.error.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    }

    fn finish(self, outer: Result<(f64, usize), PdxError>) -> Result<(f64, usize), PdxError> {
        if let Some(e) = self.error.into_inner() {
            return Err(e);
        }
        let (v, p) = outer?;
        Ok((v, p + self.panels.get()))
    }
}

/// Euclidean path decomposition for one weight model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pdx {
    model: WeightModel,
    quad: QuadratureSpec,
}

impl Pdx {
    /// Decomposition in the given time kind; only Euclidean time is
    /// supported.
    pub fn new(model: WeightModel, kind: TimeKind) -> Result<Self, PdxError> {
        if kind != TimeKind::Euclidean {
            return Err(PdxError::UnsupportedTime(kind));
        }
        model.validate().map_err(|e| PdxError::Model(e.to_string()))?;
        Ok(Pdx {
            model,
            quad: QuadratureSpec::default(),
        })
    }

    pub fn euclidean(model: WeightModel) -> Result<Self, PdxError> {
        Pdx::new(model, TimeKind::Euclidean)
    }

    pub fn with_quadrature(mut self, quad: QuadratureSpec) -> Self {
        self.quad = quad;
        self
    }

    pub fn model(&self) -> WeightModel {
        self.model
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    fn inner_spec(&self) -> QuadratureSpec {
        self.quad.tightened(0.1)
    }

    /// First-passage density from `x` weighted by the potential on its side.
    fn leg(&self, x: f64, t: f64, mass: f64) -> f64 {
        let rho = crossing_density(x, t, mass);
        if rho == 0.0 {
            return 0.0;
        }
        let v = Side::of(x).map_or(0.0, |s| potential_on(self.model, s));
        rho * (-v * t).exp()
    }

    fn integrate(
        &self,
        f: impl FnMut(f64) -> f64,
        a: f64,
        b: f64,
        spec: &QuadratureSpec,
    ) -> Result<(f64, usize), PdxError> {
        let est = integrate(f, a, b, spec)?;
        Ok((est.value, est.panels))
    }

    /// `g(x, t | 0, 0)`: closed form where the model has one, otherwise
    /// the edge propagator with a leg attached at the final point.
    fn origin_to(&self, x: f64, t: f64, mass: f64, spec: &QuadratureSpec) -> Result<(f64, usize), PdxError> {
        if t <= 0.0 {
            return Ok((0.0, 0));
        }
        let tau = Complex64::new(t, 0.0);
        match self.model {
            WeightModel::Free => Ok((free_kernel(x, tau, mass).re, 0)),
            WeightModel::Delta { coupling } => Ok((delta_full_kernel(x, x.abs(), tau, coupling, mass).re, 0)),
            WeightModel::Step { .. } => self.attach_final(x, t, mass, spec),
        }
    }

    /// `int_0^t rho(x, t - s) edge(s) ds`.
    fn attach_final(&self, x: f64, t: f64, mass: f64, spec: &QuadratureSpec) -> Result<(f64, usize), PdxError> {
        if x == 0.0 {
            return Ok((edge_value(self.model, t, mass), 0));
        }
        self.integrate(
            |s| self.leg(x, t - s, mass) * edge_value(self.model, s, mass),
            0.0,
            t,
            spec,
        )
    }

    /// Paths from `x0` to `x1` that touch the origin, split at the first
    /// and last touching times; both endpoints must be off the origin.
    fn crossing_part(&self, q: &Query) -> Result<(f64, usize), PdxError> {
        let (x0, x1, big_t, m) = (q.x0(), q.x1(), q.time(), q.mass());
        let inner = self.inner_spec();
        let nested = Nested::default();
        let outer = self.integrate(
            |t2| {
                let out = self.leg(x1, big_t - t2, m);
                if out == 0.0 {
                    return 0.0;
                }
                let inner_value = nested.record(self.integrate(
                    |t1| edge_value(self.model, t2 - t1, m) * self.leg(x0, t1, m),
                    0.0,
                    t2,
                    &inner,
                ));
                out * inner_value
            },
            0.0,
            big_t,
            &self.quad,
        );
        nested.finish(outer)
    }

    fn require_opposite(q: &Query) -> Result<(), PdxError> {
        if q.is_same_side() {
            Err(PdxError::SameSide)
        } else if q.is_opposite_side() {
            Ok(())
        } else {
            Err(PdxError::NotOppositeSide)
        }
    }

    /// `int_0^T rho(x0, t1) g(x1, T | 0, t1) dt1`, split at the first
    /// crossing.
    pub fn first_crossing(&self, q: &Query) -> Result<PdxValue, PdxError> {
        Pdx::require_opposite(q)?;
        let (x0, x1, big_t, m) = (q.x0(), q.x1(), q.time(), q.mass());
        let inner = self.inner_spec();
        let nested = Nested::default();
        let outer = self.integrate(
            |t1| {
                let leg = self.leg(x0, t1, m);
                if leg == 0.0 {
                    return 0.0;
                }
                leg * nested.record(self.origin_to(x1, big_t - t1, m, &inner))
            },
            0.0,
            big_t,
            &self.quad,
        );
        let (v, p) = nested.finish(outer)?;
        Ok(PdxValue::euclidean(v, p))
    }

    /// `int_0^T rho(x1, T - t2) g(0, t2 | x0, 0) dt2`, split at the last
    /// crossing.
    pub fn last_crossing(&self, q: &Query) -> Result<PdxValue, PdxError> {
        Pdx::require_opposite(q)?;
        let (x0, x1, big_t, m) = (q.x0(), q.x1(), q.time(), q.mass());
        let inner = self.inner_spec();
        let nested = Nested::default();
        let outer = self.integrate(
            |t2| {
                let leg = self.leg(x1, big_t - t2, m);
                if leg == 0.0 {
                    return 0.0;
                }
                // the models here are symmetric under time reversal
                leg * nested.record(self.origin_to(x0, t2, m, &inner))
            },
            0.0,
            big_t,
            &self.quad,
        );
        let (v, p) = nested.finish(outer)?;
        Ok(PdxValue::euclidean(v, p))
    }

    /// Double integral over the first crossing `t1` and last crossing
    /// `t2 >= t1` with the edge propagator in between.
    pub fn first_last(&self, q: &Query) -> Result<PdxValue, PdxError> {
        Pdx::require_opposite(q)?;
        let (v, p) = self.crossing_part(q)?;
        Ok(PdxValue::euclidean(v, p))
    }

    /// Restricted propagator for the paths that never reach the origin
    /// plus the first-last term for those that do.
    pub fn same_side(&self, q: &Query) -> Result<PdxValue, PdxError> {
        if !q.is_same_side() {
            return Err(PdxError::NotSameSide);
        }
        let side = Side::of(q.x0()).expect("same-side endpoints are nonzero");
        let never = restricted_propagator(q, TimeKind::Euclidean, side).re()
            * (-potential_on(self.model, side) * q.time()).exp();
        let (touching, p) = self.crossing_part(q)?;
        Ok(PdxValue::euclidean(never + touching, p))
    }

    /// Full propagator for any endpoints, built only from the edge
    /// propagator, first-passage legs and restricted propagators.
    pub fn assemble(&self, q: &Query) -> Result<PdxValue, PdxError> {
        let (x0, x1, big_t, m) = (q.x0(), q.x1(), q.time(), q.mass());
        match (x0 == 0.0, x1 == 0.0) {
            (true, true) => Ok(PdxValue::euclidean(edge_value(self.model, big_t, m), 0)),
            (true, false) => {
                let (v, p) = self.attach_final(x1, big_t, m, &self.quad)?;
                Ok(PdxValue::euclidean(v, p))
            }
            (false, true) => {
                let (v, p) = self.attach_final(x0, big_t, m, &self.quad)?;
                Ok(PdxValue::euclidean(v, p))
            }
            (false, false) if q.is_same_side() => self.same_side(q),
            (false, false) => self.first_last(q),
        }
    }
}

/// Delta full propagator assembled from the delta edge propagator.
pub fn assemble_delta_full(
    q: &Query,
    coupling: f64,
    quad: &QuadratureSpec,
    kind: TimeKind,
) -> Result<PropagatorValue, PdxError> {
    Ok(Pdx::new(WeightModel::Delta { coupling }, kind)?
        .with_quadrature(*quad)
        .assemble(q)?
        .value)
}

/// Step full propagator assembled from the step edge propagator, with the
/// potential on `x < 0`.
pub fn assemble_step_full(
    q: &Query,
    potential: f64,
    quad: &QuadratureSpec,
    kind: TimeKind,
) -> Result<PropagatorValue, PdxError> {
    Ok(Pdx::new(WeightModel::Step { potential }, kind)?
        .with_quadrature(*quad)
        .assemble(q)?
        .value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    FirstCrossing,
    LastCrossing,
    FirstLast,
    SameSide,
    Assembled,
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Route::FirstCrossing => "first_crossing",
            Route::LastCrossing => "last_crossing",
            Route::FirstLast => "first_last",
            Route::SameSide => "same_side",
            Route::Assembled => "assembled",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationRow {
    pub query: Query,
    pub route: Route,
    pub direct: PropagatorValue,
    pub assembled: Option<PropagatorValue>,
    pub relative_deviation: Option<f64>,
    pub tolerance: f64,
    pub panels: usize,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub rows: Vec<VerificationRow>,
    pub max_deviation: Option<f64>,
    pub passed: bool,
}

impl VerificationReport {
    fn from_rows(rows: Vec<VerificationRow>) -> Self {
        let max_deviation = rows.iter().filter_map(|r| r.relative_deviation).reduce(f64::max);
        let passed = !rows.is_empty() && rows.iter().all(|r| r.passed);
        VerificationReport {
            rows,
            max_deviation,
            passed,
        }
    }

    /// The first failed row, or the row with the largest deviation.
    pub fn worst(&self) -> Option<&VerificationRow> {
        self.rows.iter().find(|r| !r.passed).or_else(|| {
            self.rows.iter().max_by(|a, b| {
                a.relative_deviation
                    .unwrap_or(0.0)
                    .total_cmp(&b.relative_deviation.unwrap_or(0.0))
            })
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub quad: QuadratureSpec,
    /// Bound for the single-integral routes.
    pub single_tolerance: f64,
    /// Bound for routes with a double integral.
    pub double_tolerance: f64,
    pub exec: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            quad: QuadratureSpec::default(),
            single_tolerance: 1e-8,
            double_tolerance: 1e-6,
            exec: Execution::default(),
        }
    }
}

fn verify_row(pdx: &Pdx, query: Query, route: Route, direct: PropagatorValue, tolerance: f64) -> VerificationRow {
    let result = match route {
        Route::FirstCrossing => pdx.first_crossing(&query),
        Route::LastCrossing => pdx.last_crossing(&query),
        Route::FirstLast => pdx.first_last(&query),
        Route::SameSide => pdx.same_side(&query),
        Route::Assembled => pdx.assemble(&query),
    };
    match result {
        Ok(v) => {
            let dev = v.value.relative_deviation(&direct);
            VerificationRow {
                query,
                route,
                direct,
                assembled: Some(v.value),
                relative_deviation: Some(dev),
                tolerance,
                panels: v.panels,
                passed: dev <= tolerance,
                error: None,
            }
        }
        Err(e) => VerificationRow {
            query,
            route,
            direct,
            assembled: None,
            relative_deviation: None,
            tolerance,
            panels: 0,
            passed: false,
            error: Some(e.to_string()),
        },
    }
}

/// Checks the first-crossing, last-crossing and first-last decompositions
/// of the free propagator against its closed form. Same-side queries fail
/// with a pointer to the same-side decomposition.
pub fn verify_free_identity(queries: &[Query], opts: &VerifyOptions) -> VerificationReport {
    let pdx = Pdx::euclidean(WeightModel::Free)
        .expect("free model is valid")
        .with_quadrature(opts.quad);
    let jobs: Vec<(Query, Route, f64)> = queries
        .iter()
        .flat_map(|&q| {
            [
                (q, Route::FirstCrossing, opts.single_tolerance),
                (q, Route::LastCrossing, opts.single_tolerance),
                (q, Route::FirstLast, opts.double_tolerance),
            ]
        })
        .collect();
    let rows = opts.exec.map(jobs, |(q, route, tol)| {
        verify_row(&pdx, q, route, free_propagator(&q, TimeKind::Euclidean), tol)
    });
    VerificationReport::from_rows(rows)
}

/// Checks the assembled delta propagator against its closed form.
pub fn verify_delta_full(queries: &[Query], coupling: f64, opts: &VerifyOptions) -> VerificationReport {
    let pdx = match Pdx::euclidean(WeightModel::Delta { coupling }) {
        Ok(p) => p.with_quadrature(opts.quad),
        Err(e) => {
            let rows = queries
                .iter()
                .map(|&q| VerificationRow {
                    query: q,
                    route: Route::Assembled,
                    direct: PropagatorValue::euclidean(f64::NAN),
                    assembled: None,
                    relative_deviation: None,
                    tolerance: opts.double_tolerance,
                    panels: 0,
                    passed: false,
                    error: Some(e.to_string()),
                })
                .collect();
            return VerificationReport::from_rows(rows);
        }
    };
    let rows = opts.exec.map(queries.to_vec(), |q| {
        let direct = delta_full_propagator(&q, coupling, TimeKind::Euclidean)
            .unwrap_or_else(|_| PropagatorValue::euclidean(f64::NAN));
        verify_row(&pdx, q, Route::Assembled, direct, opts.double_tolerance)
    });
    VerificationReport::from_rows(rows)
}
