//! Exhaustive enumeration of loops, for use as an exact oracle at small `n`.
//!
//! The loop space is split by the word of the first few steps. Partitions
//! are visited in a fixed order and every reduction runs over that order,
//! so results do not depend on how many workers ran them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::path::{boundary_crossings, path_weight, time_below_steps, LatticePath, MAX_PATH_STEPS};
use super::{LatticeError, LatticeSpec, WeightModel};
use crate::exec::{compensated_sum, Execution};

/// Default largest `n` accepted for enumeration (`2^24` step words).
pub const DEFAULT_ENUMERATION_BOUND: u64 = 12;

/// Steps fixed per partition prefix.
const PREFIX_STEPS: u32 = 8;

/// Words of `width` bits with exactly `ones` bits set, ascending.
#[derive(Clone, Debug)]
struct Combinations {
    next: Option<u128>,
    last: u128,
}

impl Combinations {
    fn new(width: u32, ones: u32) -> Self {
        if ones > width {
            return Combinations { next: None, last: 0 };
        }
        let first = (1u128 << ones) - 1;
        Combinations {
            next: Some(first),
            last: first << (width - ones),
        }
    }
}

impl Iterator for Combinations {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        self.next = if cur == self.last || cur == 0 {
            None
        } else {
            // Gosper's hack
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            Some((((r ^ cur) >> 2) / c) | r)
        };
        Some(cur as u64)
    }
}

/// Every loop of `2n` steps, each exactly once.
#[derive(Clone, Debug)]
pub struct Loops {
    words: Combinations,
    len: usize,
}

impl Iterator for Loops {
    type Item = LatticePath;

    fn next(&mut self) -> Option<LatticePath> {
        self.words.next().map(|w| LatticePath::from_bits_unchecked(w, self.len))
    }
}

/// All loops of `2n` steps, refusing `n` above [`DEFAULT_ENUMERATION_BOUND`].
pub fn enumerate_loops(n: u64) -> Result<Loops, LatticeError> {
    enumerate_loops_bounded(n, DEFAULT_ENUMERATION_BOUND)
}

/// All loops of `2n` steps, refusing `n` above `bound`.
pub fn enumerate_loops_bounded(n: u64, bound: u64) -> Result<Loops, LatticeError> {
    check_bound(n, bound)?;
    Ok(Loops {
        words: Combinations::new(2 * n as u32, n as u32),
        len: 2 * n as usize,
    })
}

fn check_bound(n: u64, bound: u64) -> Result<(), LatticeError> {
    let len = 2 * n as usize;
    if len > MAX_PATH_STEPS {
        return Err(LatticeError::TooLong {
            len,
            max: MAX_PATH_STEPS,
        });
    }
    if n > bound {
        return Err(LatticeError::EnumerationBound { n, bound });
    }
    Ok(())
}

/// Loops sharing a fixed word for their first `prefix_len` steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LoopPartition {
    prefix: u64,
    prefix_len: u32,
    len: u32,
}

impl LoopPartition {
    pub fn paths(&self) -> impl Iterator<Item = LatticePath> {
        let n = self.len / 2;
        let ups = self.prefix.count_ones();
        let (prefix, prefix_len, len) = (self.prefix, self.prefix_len, self.len as usize);
        Combinations::new(self.len - prefix_len, n - ups).map(move |suffix| {
            let bits = if prefix_len >= 64 {
                prefix
            } else {
                prefix | suffix << prefix_len
            };
            LatticePath::from_bits_unchecked(bits, len)
        })
    }
}

/// The nonempty prefix partitions of the `2n`-step loops, in visiting order.
pub fn loop_partitions(n: u64) -> Vec<LoopPartition> {
    let len = 2 * n as u32;
    let prefix_len = PREFIX_STEPS.min(len);
    (0u64..1 << prefix_len)
        .filter(|&p| {
            let ups = p.count_ones();
            ups as u64 <= n && (prefix_len - ups) as u64 <= n
        })
        .map(|prefix| LoopPartition {
            prefix,
            prefix_len,
            len,
        })
        .collect()
}

fn map_partitions<T, F>(n: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(LoopPartition) -> T + Sync + Send,
{
    exec.map(loop_partitions(n), f)
}

/// Counts of loops per class, keyed by class value.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Histogram(BTreeMap<u32, u64>);

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, class: u32) {
        *self.0.entry(class).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (&k, &v) in &other.0 {
            *self.0.entry(k).or_insert(0) += v;
        }
    }

    pub fn get(&self, class: u32) -> u64 {
        self.0.get(&class).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `class,count` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,count\n");
        for (k, v) in self.iter() {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }
}

impl FromIterator<(u32, u64)> for Histogram {
    fn from_iter<I: IntoIterator<Item = (u32, u64)>>(iter: I) -> Self {
        Histogram(iter.into_iter().collect())
    }
}

fn histogram_by<F>(n: u64, exec: Execution, class: F) -> Result<Histogram, LatticeError>
where
    F: Fn(&LatticePath) -> u32 + Sync + Send,
{
    check_bound(n, DEFAULT_ENUMERATION_BOUND)?;
    let parts = map_partitions(n, exec, |part| {
        let mut h = Histogram::new();
        for path in part.paths() {
            h.add(class(&path));
        }
        h
    });
    let mut total = Histogram::new();
    for h in &parts {
        total.merge(h);
    }
    Ok(total)
}

/// Loops of `2n` steps counted by [`time_below_steps`].
pub fn below_time_histogram(n: u64, exec: Execution) -> Result<Histogram, LatticeError> {
    histogram_by(n, exec, time_below_steps)
}

/// Loops of `2n` steps counted by [`boundary_crossings`].
pub fn crossing_histogram(n: u64, exec: Execution) -> Result<Histogram, LatticeError> {
    histogram_by(n, exec, boundary_crossings)
}

/// `u(0,T|0,0) = 4^-n * sum over loops of path_weight`, by enumeration.
pub fn lattice_density_bruteforce(model: WeightModel, spec: &LatticeSpec) -> Result<f64, LatticeError> {
    lattice_density_bruteforce_with(model, spec, Execution::default(), DEFAULT_ENUMERATION_BOUND)
}

pub fn lattice_density_bruteforce_with(
    model: WeightModel,
    spec: &LatticeSpec,
    exec: Execution,
    bound: u64,
) -> Result<f64, LatticeError> {
    model.validate()?;
    let n = spec.n();
    check_bound(n, bound)?;
    let sums = map_partitions(n, exec, |part| {
        compensated_sum(part.paths().map(|p| path_weight(&p, model, spec)))
    });
    Ok(compensated_sum(sums) * 0.25f64.powi(n as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::{catalan, central_binomial, crossing_partition_count};
    use std::collections::HashSet;

    #[test]
    fn small_enumerations() {
        let l0: Vec<_> = enumerate_loops(0).unwrap().collect();
        assert_eq!(l0, vec![LatticePath::empty()]);
        let l1: Vec<String> = enumerate_loops(1).unwrap().map(|p| p.to_string()).collect();
        assert_eq!(l1, vec!["UD", "DU"]);
        assert_eq!(enumerate_loops(2).unwrap().count(), 6);
    }

    #[test]
    fn enumeration_counts_and_uniqueness() {
        for n in 0..=10u64 {
            let all: HashSet<_> = enumerate_loops(n).unwrap().collect();
            assert_eq!(all.len() as u64, central_binomial(n).to_f64() as u64);
        }
    }

    #[test]
    fn partitions_cover_the_same_loops() {
        for n in 0..=7u64 {
            let whole: HashSet<_> = enumerate_loops(n).unwrap().collect();
            let parts: Vec<_> = loop_partitions(n).iter().flat_map(|p| p.paths()).collect();
            assert_eq!(parts.len(), whole.len());
            assert_eq!(parts.into_iter().collect::<HashSet<_>>(), whole);
        }
    }

    #[test]
    fn bound_is_enforced() {
        assert_eq!(
            enumerate_loops(13).unwrap_err(),
            LatticeError::EnumerationBound { n: 13, bound: 12 }
        );
        assert!(enumerate_loops_bounded(13, 13).is_ok());
        assert!(matches!(
            enumerate_loops_bounded(33, 100),
            Err(LatticeError::TooLong { .. })
        ));
    }

    #[test]
    fn histograms_n2() {
        let below = below_time_histogram(2, Execution::Sequential).unwrap();
        assert_eq!(below.iter().collect::<Vec<_>>(), vec![(0, 2), (2, 2), (4, 2)]);
        let cross = crossing_histogram(2, Execution::Sequential).unwrap();
        assert_eq!(cross.iter().collect::<Vec<_>>(), vec![(0, 2), (2, 3), (4, 1)]);
        assert_eq!(cross.to_csv(), "class,count\n0,2\n2,3\n4,1\n");
    }

    #[test]
    fn histograms_match_counts() {
        for n in 0..=9u64 {
            let below = below_time_histogram(n, Execution::default()).unwrap();
            let c = catalan(n).to_f64() as u64;
            for k in 0..=n as u32 {
                assert_eq!(below.get(2 * k), c);
            }
            let cross = crossing_histogram(n, Execution::default()).unwrap();
            for l in 0..=n {
                let j = crossing_partition_count(n, l).unwrap().to_f64() as u64;
                assert_eq!(cross.get(2 * l as u32), j);
            }
        }
    }

    #[test]
    fn brute_force_n1() {
        let spec = LatticeSpec::from_time(1, 1.0, 1.0).unwrap();
        assert_eq!(lattice_density_bruteforce(WeightModel::Free, &spec).unwrap(), 0.5);
        let v = 1.0;
        let got = lattice_density_bruteforce(WeightModel::Step { potential: v }, &spec).unwrap();
        assert!((got - (1.0 + (-2.0 * spec.epsilon() * v).exp()) / 4.0).abs() < 1e-16);
        let a = 2.0;
        let got = lattice_density_bruteforce(WeightModel::Delta { coupling: a }, &spec).unwrap();
        let want = (1.0 + (-2.0 * a * spec.mass() * spec.eta()).exp()) / 4.0;
        assert!((got - want).abs() < 1e-16);
    }

    #[test]
    fn brute_force_is_schedule_independent() {
        let spec = LatticeSpec::from_time(9, 1.0, 1.0).unwrap();
        let model = WeightModel::Delta { coupling: 0.7 };
        let a = lattice_density_bruteforce_with(model, &spec, Execution::Sequential, 12).unwrap();
        let b = lattice_density_bruteforce_with(model, &spec, Execution::Parallel, 12).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
