//! Closed-form lattice return probabilities.

use super::{LatticeSpec, WeightModel};
use crate::combinat::ln_central_ratio;
use crate::exec::compensated_sum;

/// Below this `|V T|` the geometric sum is replaced by its series.
const SMALL_STEP: f64 = 1e-8;

/// `(2n choose n) / 4^n`: free return probability after `2n` steps.
pub fn free_return_probability(n: u64) -> f64 {
    ln_central_ratio(n).exp()
}

/// `u(0,T|0,0)` without enumeration.
///
/// * free: `4^-n (2n choose n)`
/// * step: `C_n 4^-n (1 - e^{-2 eps (n+1) V}) / (1 - e^{-2 eps V})`, every
///   below-time class holding `C_n` loops
/// * delta: `4^-n sum_l J(n,l) e^{-2 l m a eta}`, summed in log space
pub fn lattice_density_closed(model: WeightModel, spec: &LatticeSpec) -> f64 {
    let n = spec.n();
    match model {
        WeightModel::Free => free_return_probability(n),
        WeightModel::Step { potential } => {
            let catalan_ratio = free_return_probability(n) / (n + 1) as f64;
            catalan_ratio * geometric_sum(n, 2.0 * spec.epsilon() * potential, potential * spec.total_time())
        }
        WeightModel::Delta { coupling } => delta_return_probability(n, 2.0 * coupling * spec.mass() * spec.eta()),
    }
}

/// `sum_{k=0}^{n} e^{-k x}`; `vt` is the dimensionless `V T` used for the
/// small-argument switch.
fn geometric_sum(n: u64, x: f64, vt: f64) -> f64 {
    let nf = n as f64;
    if vt.abs() < SMALL_STEP {
        // (n+1) - x n(n+1)/2 + x^2 n(n+1)(2n+1)/12
        (nf + 1.0) * (1.0 - x * nf / 2.0 + x * x * nf * (2.0 * nf + 1.0) / 12.0)
    } else {
        (-(nf + 1.0) * x).exp_m1() / (-x).exp_m1()
    }
}

/// `4^-n sum_l J(n,l) e^{-l x}` with `J(n,l) / (2n choose n)` built up by
/// the ratio recursion `r(l+1) = r(l) (n-l) / (n+l+2)`, `r(0) = 1/(n+1)`.
fn delta_return_probability(n: u64, x: f64) -> f64 {
    let nf = n as f64;
    let ln_central = ln_central_ratio(n);
    let mut logs = Vec::with_capacity(n as usize + 1);
    let mut ln_r = -(nf + 1.0).ln();
    for l in 0..=n {
        let lf = l as f64;
        logs.push(ln_r + (2.0 * lf + 1.0).ln() - lf * x);
        if l < n {
            ln_r += ((nf - lf) / (nf + lf + 2.0)).ln();
        }
    }
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum = compensated_sum(logs.iter().map(|&t| (t - peak).exp()));
    (ln_central + peak + sum.ln()).exp()
}
