//! Site-by-site propagation of the weighted walk between arbitrary sites.

use super::{LatticeError, LatticeSpec, WeightModel};

/// Smallest cutoff at which no path from `x0` to `x1` in `2n` steps is cut.
pub fn required_cutoff(n: u64, x0_site: i64, x1_site: i64) -> u64 {
    n + x0_site.unsigned_abs().max(x1_site.unsigned_abs())
}

/// Weighted probability of walking from site `x0` to site `x1` in `2n`
/// steps, each step carrying `1/2` times the model's step factor.
///
/// Sites are kept in `[-cutoff, cutoff]`; a cutoff below
/// [`required_cutoff`] is refused since it would drop paths.
pub fn transfer_matrix_density(
    x0_site: i64,
    x1_site: i64,
    model: WeightModel,
    spec: &LatticeSpec,
    cutoff: u64,
) -> Result<f64, LatticeError> {
    model.validate()?;
    let n = spec.n();
    let required = required_cutoff(n, x0_site, x1_site);
    if cutoff < required {
        return Err(LatticeError::CutoffTooSmall { cutoff, required });
    }
    let steps = 2 * n as i64;
    if (x1_site - x0_site).rem_euclid(2) != 0 || (x1_site - x0_site).abs() > steps {
        return Ok(0.0);
    }
    let c = cutoff as i64;
    let width = (2 * c + 1) as usize;
    let idx = |site: i64| (site + c) as usize;

    // edge[i] weights the step between sites (i - c) and (i - c + 1)
    let edge: Vec<f64> = (0..width - 1)
        .map(|i| {
            let a = i as i64 - c;
            0.5 * model.step_factor(a, a + 1, spec)
        })
        .collect();

    let mut cur = vec![0.0f64; width];
    let mut next = vec![0.0f64; width];
    cur[idx(x0_site)] = 1.0;
    let (mut lo, mut hi) = (x0_site, x0_site);
    for s in 1..=steps {
        let remaining = steps - s;
        // reachable now and still able to reach x1
        let new_lo = (lo - 1).max(x1_site - remaining).max(-c);
        let new_hi = (hi + 1).min(x1_site + remaining).min(c);
        let mut site = new_lo;
        while site <= new_hi {
            let i = idx(site);
            let from_left = if site > lo { cur[i - 1] * edge[i - 1] } else { 0.0 };
            let from_right = if site < hi { cur[i + 1] * edge[i] } else { 0.0 };
            next[i] = from_left + from_right;
            site += 2;
        }
        // clear the previous parity class before swapping
        let mut site = lo;
        while site <= hi {
            cur[idx(site)] = 0.0;
            site += 2;
        }
        std::mem::swap(&mut cur, &mut next);
        lo = new_lo;
        hi = new_hi;
    }
    Ok(cur[idx(x1_site)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{lattice_density_bruteforce, lattice_density_closed};

    fn spec(n: u64) -> LatticeSpec {
        LatticeSpec::from_time(n, 1.0, 1.0).unwrap()
    }

    #[test]
    fn single_path_probability() {
        let s = spec(1);
        let u = transfer_matrix_density(0, 2, WeightModel::Free, &s, 3).unwrap();
        assert_eq!(u, 0.25);
        assert_eq!(transfer_matrix_density(0, 1, WeightModel::Free, &s, 3).unwrap(), 0.0);
        assert_eq!(transfer_matrix_density(0, 4, WeightModel::Free, &s, 5).unwrap(), 0.0);
    }

    #[test]
    fn refuses_truncating_cutoff() {
        let s = spec(5);
        assert_eq!(
            transfer_matrix_density(2, -1, WeightModel::Free, &s, 6),
            Err(LatticeError::CutoffTooSmall { cutoff: 6, required: 7 })
        );
    }

    #[test]
    fn loops_match_enumeration() {
        for n in 1..=10 {
            let s = spec(n);
            for model in [
                WeightModel::Free,
                WeightModel::Step { potential: 1.5 },
                WeightModel::Delta { coupling: 0.5 },
                WeightModel::Delta { coupling: -1.0 },
            ] {
                let tm = transfer_matrix_density(0, 0, model, &s, n).unwrap();
                let bf = lattice_density_bruteforce(model, &s).unwrap();
                assert!((tm / bf - 1.0).abs() < 1e-12, "n={n} {model:?}");
            }
        }
    }

    #[test]
    fn large_loops_match_closed_form() {
        let s = spec(3000);
        for model in [
            WeightModel::Step { potential: 1.0 },
            WeightModel::Delta { coupling: 1.0 },
        ] {
            let tm = transfer_matrix_density(0, 0, model, &s, 3000).unwrap();
            let cf = lattice_density_closed(model, &s);
            assert!((tm / cf - 1.0).abs() < 1e-10, "{model:?}: {tm} vs {cf}");
        }
    }

    #[test]
    fn symmetries() {
        let s = spec(20);
        for model in [WeightModel::Free, WeightModel::Delta { coupling: 0.8 }] {
            let a = transfer_matrix_density(3, -5, model, &s, 30).unwrap();
            let b = transfer_matrix_density(-5, 3, model, &s, 30).unwrap();
            assert!((a - b).abs() <= 1e-15 * a.abs());
        }
        let a = transfer_matrix_density(3, -5, WeightModel::Free, &s, 30).unwrap();
        let b = transfer_matrix_density(-3, 5, WeightModel::Free, &s, 30).unwrap();
        assert!((a - b).abs() <= 1e-15 * a.abs());
    }

    #[test]
    fn larger_cutoff_changes_nothing() {
        let s = spec(12);
        let model = WeightModel::Step { potential: 2.0 };
        let a = transfer_matrix_density(2, -4, model, &s, 16).unwrap();
        let b = transfer_matrix_density(2, -4, model, &s, 60).unwrap();
        assert_eq!(a, b);
    }
}
