//! Pairing-function construction: a 3- or 4-index tensor supported exactly
//! where one coordinate equals the pairing of the others.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::certify::Window;
use crate::constructors::pairing::{pattern_value, PairingFn};
use crate::error::{Error, Result};
use crate::state::{total_dim, unflatten, Amplitude, MultiIndex, StateTensor};

/// Nonzero amplitude assigned to each support index.
pub trait WeightRule {
    fn weight(&self, idx: &[usize]) -> Amplitude;
}

/// `ratio^(Σ idx)`; the default ratio is 1/2. Slices whose leading entry
/// sits far out on an axis are then dominated by their small-index entries,
/// so large windows certify numerically only with a ratio closer to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricWeights {
    pub ratio: f64,
}

impl Default for GeometricWeights {
    fn default() -> Self {
        GeometricWeights { ratio: 0.5 }
    }
}

impl WeightRule for GeometricWeights {
    fn weight(&self, idx: &[usize]) -> Amplitude {
        let total: usize = idx.iter().sum();
        Complex64::new(self.ratio.powf(total as f64), 0.0)
    }
}

impl<F: Fn(&[usize]) -> Amplitude> WeightRule for F {
    fn weight(&self, idx: &[usize]) -> Amplitude {
        self(idx)
    }
}

/// Support indices within `bounds` (one bound per axis), in lexicographic order.
pub fn support_within(bounds: &[usize], j: PairingFn) -> Result<BTreeSet<MultiIndex>> {
    let n = bounds.len();
    if !(3..=4).contains(&n) {
        return Err(Error::UnsupportedArity(n));
    }
    let mut support = BTreeSet::new();
    for axis in 0..n {
        let other_bounds: Vec<usize> = (0..n).filter(|&k| k != axis).map(|k| bounds[k]).collect();
        let count = total_dim(&other_bounds, "support enumeration")?;
        for flat in 0..count {
            let others = unflatten(flat, &other_bounds);
            let mut idx: Vec<u64> = Vec::with_capacity(n);
            let mut it = others.iter();
            for k in 0..n {
                idx.push(if k == axis { 0 } else { *it.next().unwrap() as u64 });
            }
            if let Some(value) = pattern_value(&idx, axis, j) {
                if value < bounds[axis] as u64 {
                    idx[axis] = value;
                    support.insert(MultiIndex(idx.iter().map(|&c| c as usize).collect()));
                }
            }
        }
    }
    Ok(support)
}

/// Builds the normalized truncation over `bounds`. Fails if no support index
/// fits or if the weight rule vanishes (or underflows) on the support.
pub fn method1_build(bounds: &[usize], j: PairingFn, weights: &dyn WeightRule) -> Result<StateTensor> {
    if let Some((axis, &dim)) = bounds.iter().enumerate().find(|(_, &b)| b < 2) {
        return Err(Error::FactorTooSmall { axis, dim });
    }
    let support = support_within(bounds, j)?;
    if support.is_empty() {
        return Err(Error::EmptySupport(bounds.to_vec()));
    }
    let mut entries = BTreeMap::new();
    for idx in support {
        let w = weights.weight(idx.coords());
        if !w.re.is_finite() || !w.im.is_finite() || w.norm() <= crate::state::DROP_THRESHOLD {
            return Err(Error::VanishingWeight(idx));
        }
        entries.insert(idx, w);
    }
    Ok(StateTensor::new(bounds.to_vec(), entries, true)?.with_truncated_from_infinite(true))
}

/// For each axis, the slice keys whose pattern value lands inside the axis
/// bound. Each such slice has its last nonzero entry at a distinct
/// position, so these windows certify with full rank.
pub fn method1_windows(bounds: &[usize], j: PairingFn) -> Result<Vec<Window>> {
    let n = bounds.len();
    if !(3..=4).contains(&n) {
        return Err(Error::UnsupportedArity(n));
    }
    let mut windows = Vec::with_capacity(n);
    for axis in 0..n {
        let other_bounds: Vec<usize> = (0..n).filter(|&k| k != axis).map(|k| bounds[k]).collect();
        let count = total_dim(&other_bounds, "window enumeration")?;
        let mut keys = Vec::new();
        for flat in 0..count {
            let others = unflatten(flat, &other_bounds);
            let mut idx: Vec<u64> = others.iter().map(|&c| c as u64).collect();
            idx.insert(axis, 0);
            if pattern_value(&idx, axis, j).is_some_and(|value| value < bounds[axis] as u64) {
                keys.push(others);
            }
        }
        windows.push(Window::atomic(axis, keys));
    }
    Ok(windows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilinear::RankTolerance;
    use crate::certify::window_certificate;
    use crate::constructors::pairing::support_test;

    #[test]
    fn support_matches_direct_test() {
        for j in [PairingFn::Injection2a3b, PairingFn::BijectionInterleave] {
            let bounds = [5, 6, 13];
            let support = support_within(&bounds, j).unwrap();
            for a in 0..5 {
                for b in 0..6 {
                    for c in 0..13 {
                        let idx = MultiIndex::from([a, b, c]);
                        assert_eq!(support.contains(&idx), support_test(&[a, b, c], j).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn rows_of_small_truncation_are_independent() {
        let j = PairingFn::Injection2a3b;
        let v = method1_build(&[3, 3, 10], j, &GeometricWeights::default()).unwrap();
        assert!(v.truncated_from_infinite());
        assert!(v.is_normalized());
        let windows = method1_windows(&[3, 3, 10], j).unwrap();
        for w in &windows {
            let o = window_certificate(&v, w, RankTolerance::Default).unwrap();
            assert!(o.pass, "axis {:?}: rank {} of {}", w.axis_set, o.rank, o.size);
        }
        // Pairs with 2^a 3^b < 10: (0,0) (1,0) (2,0) (0,1) (1,1) (0,2).
        assert_eq!(windows[2].len(), 6);
    }

    #[test]
    fn all_nine_rows_need_the_full_pairing_range() {
        let j = PairingFn::Injection2a3b;
        let rows = Window::cube(3, 2, 3);
        // With c < 10 the row (2,2) is zero and the rows (2,1) and (1,2) are
        // both multiples of e_0.
        let short = method1_build(&[3, 3, 10], j, &GeometricWeights::default()).unwrap();
        let o = window_certificate(&short, &rows, RankTolerance::Default).unwrap();
        assert!(!o.pass);
        assert_eq!(o.rank, 7);
        let long = method1_build(&[3, 3, 37], j, &GeometricWeights::default()).unwrap();
        let o = window_certificate(&long, &rows, RankTolerance::Default).unwrap();
        assert!(o.pass);
    }

    #[test]
    fn invalid_builds_are_rejected() {
        let err = method1_build(&[2, 2, 2], PairingFn::Injection2a3b, &|_: &[usize]| Complex64::new(0.0, 0.0));
        assert!(matches!(err, Err(Error::VanishingWeight(_))));
        assert!(matches!(
            method1_build(&[2, 2], PairingFn::Injection2a3b, &GeometricWeights::default()),
            Err(Error::UnsupportedArity(2))
        ));
        assert!(matches!(
            method1_build(&[1, 5, 5], PairingFn::Injection2a3b, &GeometricWeights::default()),
            Err(Error::FactorTooSmall { .. })
        ));
    }

    #[test]
    fn four_index_pattern_on_last_axis() {
        let j = PairingFn::Injection2a3b;
        let v = method1_build(&[2, 2, 2, 40], j, &GeometricWeights::default()).unwrap();
        let ds: Vec<usize> = v
            .entries()
            .filter(|(k, _)| k.coords()[..3] == [0, 0, 0])
            .map(|(k, _)| k.coords()[3])
            .collect();
        assert_eq!(ds, vec![3]);
    }
}
