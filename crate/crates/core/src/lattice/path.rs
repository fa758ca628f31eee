use std::fmt;
use std::str::FromStr;

use super::{LatticeError, LatticeSpec, WeightModel};

/// Longest step word a [`LatticePath`] can hold.
pub const MAX_PATH_STEPS: usize = 64;

/// A loop of unit steps on the integer line, starting and ending at 0.
///
/// Stored as a bit word: bit `i` set means step `i` is `+1` (U).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePath {
    bits: u64,
    len: u8,
}

fn low_mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl LatticePath {
    pub fn empty() -> Self {
        LatticePath { bits: 0, len: 0 }
    }

    pub fn from_bits(bits: u64, len: usize) -> Result<Self, LatticeError> {
        if len > MAX_PATH_STEPS {
            return Err(LatticeError::TooLong {
                len,
                max: MAX_PATH_STEPS,
            });
        }
        if bits & !low_mask(len) != 0 || 2 * bits.count_ones() as usize != len {
            return Err(LatticeError::NotALoop);
        }
        Ok(LatticePath { bits, len: len as u8 })
    }

    pub(crate) fn from_bits_unchecked(bits: u64, len: usize) -> Self {
        debug_assert!(Self::from_bits(bits, len).is_ok());
        LatticePath { bits, len: len as u8 }
    }

    pub fn from_steps(steps: &[i8]) -> Result<Self, LatticeError> {
        if steps.len() > MAX_PATH_STEPS {
            return Err(LatticeError::TooLong {
                len: steps.len(),
                max: MAX_PATH_STEPS,
            });
        }
        let mut bits = 0u64;
        for (i, &s) in steps.iter().enumerate() {
            match s {
                1 => bits |= 1 << i,
                -1 => {}
                _ => return Err(LatticeError::InvalidStep(if s > 0 { 'U' } else { 'D' })),
            }
        }
        Self::from_bits(bits, steps.len())
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Number of steps, `2n`.
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn half_len(&self) -> u64 {
        self.len as u64 / 2
    }

    pub fn step(&self, i: usize) -> i8 {
        if self.bits >> i & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn steps(&self) -> impl Iterator<Item = i8> + '_ {
        (0..self.len()).map(move |i| self.step(i))
    }

    /// The `len + 1` visited sites, starting with 0.
    pub fn positions(&self) -> impl Iterator<Item = i64> + '_ {
        std::iter::once(0).chain(self.steps().scan(0i64, |x, s| {
            *x += s as i64;
            Some(*x)
        }))
    }

    /// `(before, after)` site pairs, one per step.
    pub fn moves(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.steps().scan(0i64, |x, s| {
            let before = *x;
            *x += s as i64;
            Some((before, *x))
        })
    }
}

impl fmt::Display for LatticePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.steps() {
            f.write_str(if s > 0 { "U" } else { "D" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for LatticePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LatticePath({self})")
    }
}

impl FromStr for LatticePath {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let steps = s
            .chars()
            .map(|c| match c {
                'U' | 'u' => Ok(1),
                'D' | 'd' => Ok(-1),
                other => Err(LatticeError::InvalidStep(other)),
            })
            .collect::<Result<Vec<i8>, _>>()?;
        Self::from_steps(&steps)
    }
}

/// Steps whose midpoint is negative, i.e. with `min(before, after) < 0`.
pub fn time_below_steps(path: &LatticePath) -> u32 {
    path.moves().filter(|&(a, b)| a.min(b) < 0).count() as u32
}

/// Traversals of the cell between sites 0 and -1, in either direction.
pub fn boundary_crossings(path: &LatticePath) -> u32 {
    path.moves().filter(|&(a, b)| a.min(b) == -1 && a.max(b) == 0).count() as u32
}

/// `exp(-V epsilon * below)` for a step, `exp(-a m eta * crossings)` for a
/// delta, 1 when free.
pub fn path_weight(path: &LatticePath, model: WeightModel, spec: &LatticeSpec) -> f64 {
    let events = match model {
        WeightModel::Free => return 1.0,
        WeightModel::Step { .. } => time_below_steps(path),
        WeightModel::Delta { .. } => boundary_crossings(path),
    };
    (events as f64 * model.log_weight_per_event(spec)).exp()
}

/// One application of the below-time reducing swap.
///
/// Take the first step from 0 down to -1, follow the walk to its first
/// return to 0 and call that up-step the pivot. Writing the loop as
/// `A pivot B`, the image is `B pivot A`: the section after the pivot moves
/// to the front, and `A` (which ran from 0 down to -1) now runs from 1 down
/// to 0. Exactly two below steps are lost (the first descent and the
/// pivot). Loops that never go below 0 are fixed points.
pub fn chung_feller_map(path: &LatticePath) -> LatticePath {
    let mut first_descent = None;
    let mut pivot = None;
    for (i, (a, b)) in path.moves().enumerate() {
        match first_descent {
            None if a == 0 && b == -1 => first_descent = Some(i),
            Some(_) if b == 0 => {
                pivot = Some(i);
                break;
            }
            _ => {}
        }
    }
    let Some(j) = pivot else {
        return *path;
    };
    let len = path.len();
    let head = path.bits & low_mask(j);
    let tail_len = len - j - 1;
    let tail = if j + 1 >= 64 { 0 } else { path.bits >> (j + 1) };
    let bits = tail | (1u64 << tail_len) | (head.checked_shl((tail_len + 1) as u32).unwrap_or(0));
    LatticePath::from_bits_unchecked(bits, len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::enumerate_loops;
    use std::collections::{BTreeMap, HashSet};

    fn p(s: &str) -> LatticePath {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(p("UDDU").to_string(), "UDDU");
        assert_eq!(p("").len(), 0);
        assert_eq!(p("UD").positions().collect::<Vec<_>>(), vec![0, 1, 0]);
        assert_eq!("UU".parse::<LatticePath>(), Err(LatticeError::NotALoop));
        assert_eq!("UX".parse::<LatticePath>(), Err(LatticeError::InvalidStep('X')));
        let long = "UD".repeat(33);
        assert!(matches!(long.parse::<LatticePath>(), Err(LatticeError::TooLong { .. })));
        assert!(LatticePath::from_bits(0b1, 2).is_ok());
        assert!(LatticePath::from_bits(0b101, 2).is_err());
    }

    #[test]
    fn full_width_path() {
        let s = format!("{}{}", "U".repeat(32), "D".repeat(32));
        let path = p(&s);
        assert_eq!(path.len(), 64);
        assert_eq!(path.to_string(), s);
        assert_eq!(time_below_steps(&path), 0);
        let down_first = p(&format!("{}{}", "D".repeat(32), "U".repeat(32)));
        assert_eq!(time_below_steps(&down_first), 64);
        assert_eq!(time_below_steps(&chung_feller_map(&down_first)), 62);
    }

    #[test]
    fn below_time_examples() {
        assert_eq!(time_below_steps(&p("UD")), 0);
        assert_eq!(time_below_steps(&p("DU")), 2);
        assert_eq!(time_below_steps(&p("UDDU")), 2);
        assert_eq!(time_below_steps(&p("DDUU")), 4);
    }

    #[test]
    fn crossing_examples() {
        assert_eq!(boundary_crossings(&p("UD")), 0);
        assert_eq!(boundary_crossings(&p("DU")), 2);
        assert_eq!(boundary_crossings(&p("DDUU")), 2);
        assert_eq!(boundary_crossings(&p("DUDU")), 4);
    }

    #[test]
    fn weights() {
        let spec = LatticeSpec::from_time(1, 1.0, 1.0).unwrap();
        let du = p("DU");
        assert_eq!(path_weight(&du, WeightModel::Free, &spec), 1.0);
        let v = 1.7;
        let w = path_weight(&du, WeightModel::Step { potential: v }, &spec);
        assert!((w - (-2.0 * spec.epsilon() * v).exp()).abs() < 1e-15);
        let a = 0.8;
        let w = path_weight(&du, WeightModel::Delta { coupling: a }, &spec);
        assert!((w - (-2.0 * a * spec.mass() * spec.eta()).exp()).abs() < 1e-15);
        // per-step factors multiply to the same weight
        for model in [WeightModel::Step { potential: v }, WeightModel::Delta { coupling: a }] {
            let prod: f64 = du.moves().map(|(x, y)| model.step_factor(x, y, &spec)).product();
            assert!((prod - path_weight(&du, model, &spec)).abs() < 1e-15);
        }
    }

    #[test]
    fn map_examples() {
        assert_eq!(chung_feller_map(&p("UUDD")), p("UUDD"));
        let img = chung_feller_map(&p("DUUD"));
        assert_eq!(img, p("UDUD"));
        assert_eq!(time_below_steps(&img), 0);
        // A = UD D, pivot U, B = DU  ->  DU U UDD
        assert_eq!(chung_feller_map(&p("UDDUDU")), p("DUUUDD"));
    }

    #[test]
    fn map_is_a_bijection_between_adjacent_classes() {
        for n in 1..=8u64 {
            let mut classes: BTreeMap<u32, Vec<LatticePath>> = BTreeMap::new();
            for path in enumerate_loops(n).unwrap() {
                classes.entry(time_below_steps(&path)).or_default().push(path);
            }
            for k in 1..=n as u32 {
                let from = &classes[&(2 * k)];
                let images: HashSet<_> = from.iter().map(chung_feller_map).collect();
                assert_eq!(images.len(), from.len(), "not injective n={n} k={k}");
                assert!(images.iter().all(|q| time_below_steps(q) == 2 * (k - 1)));
                assert_eq!(images.len(), classes[&(2 * (k - 1))].len());
            }
        }
    }

    #[test]
    fn iteration_reaches_fixed_point_in_k_steps() {
        for path in enumerate_loops(6).unwrap() {
            let k = time_below_steps(&path) / 2;
            let mut q = path;
            for _ in 0..k {
                q = chung_feller_map(&q);
            }
            assert_eq!(time_below_steps(&q), 0);
            assert_eq!(chung_feller_map(&q), q);
        }
    }
}
