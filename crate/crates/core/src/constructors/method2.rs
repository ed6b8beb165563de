//! Seed-and-extend construction of cubic 3-index tensors whose rows,
//! columns and files stay linearly independent as the tensor grows.
//!
//! Orientation (0-based): the *row* `(a, b)` is the slice along axis 2,
//! the *file* `(a, c)` the slice along axis 1, the *column* `(b, c)` the
//! slice along axis 0. An extension with parameters `(p, m)` grows a
//! `p³` tensor to `p'³` with `p' = p² + p − m²`: every slice of the
//! `p`-window whose key is not inside the `m`-window gets one new entry in
//! the appended block, placed at the slice's position in lexicographic key
//! order and scaled by `√(ε / (3(p² − m²)))`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::bilinear::RankTolerance;
use crate::certify::{window_certificate, Window};
use crate::error::{Error, Result};
use crate::state::{Amplitude, MultiIndex, StateTensor};

/// Slice families of a 3-index tensor, named by the axis they run along.
pub const FAMILIES: [(&str, usize); 3] = [("column", 0), ("file", 1), ("row", 2)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExtensionParams {
    pub p: usize,
    pub m: usize,
    pub epsilon: f64,
}

impl ExtensionParams {
    pub fn new(p: usize, m: usize, epsilon: f64) -> Result<Self> {
        if m >= p {
            return Err(Error::InvalidParams(format!("need m < p, got m = {m}, p = {p}")));
        }
        if p < m * m {
            return Err(Error::InvalidParams(format!("need p ≥ m², got p = {p}, m = {m}")));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(ExtensionParams { p, m, epsilon })
    }

    /// `p² + p − m²`.
    pub fn p_next(&self) -> usize {
        self.p * self.p + self.p - self.m * self.m
    }

    /// Slices extended per family, `p² − m²`.
    pub fn appended(&self) -> usize {
        self.p * self.p - self.m * self.m
    }

    /// Magnitude of each appended entry.
    pub fn scale(&self) -> f64 {
        (self.epsilon / (3.0 * self.appended() as f64)).sqrt()
    }
}

/// Places a family's slice key and its position along the family axis into
/// a full index.
fn place(axis: usize, key: (usize, usize), along: usize) -> MultiIndex {
    let mut out = vec![key.0, key.1];
    out.insert(axis, along);
    MultiIndex(out)
}

/// Keys of the `p`-window outside the `m`-window, lexicographic.
fn extended_keys(p: usize, m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..p)
        .flat_map(move |x| (0..p).map(move |y| (x, y)))
        .filter(move |&(x, y)| !(x < m && y < m))
}

fn check_cubic(v: &StateTensor, p: usize) -> Result<()> {
    if v.dims() != [p, p, p] {
        return Err(Error::DimensionMismatch(format!(
            "expected a {p}×{p}×{p} tensor, got dims {:?}",
            v.dims()
        )));
    }
    Ok(())
}

/// Checks that all three slice families over the `m`-window are linearly
/// independent.
pub fn check_window_independence(v: &StateTensor, m: usize, tol: RankTolerance) -> Result<()> {
    for (family, axis) in FAMILIES {
        let outcome = window_certificate(v, &Window::cube(3, axis, m), tol)?;
        if !outcome.pass {
            return Err(Error::ExtensionHypothesis {
                family,
                m,
                rank: outcome.rank,
                expected: outcome.size,
            });
        }
    }
    Ok(())
}

/// One application of the extension step.
#[derive(Clone, Debug)]
pub struct Extension {
    pub params: ExtensionParams,
    /// Unnormalized `p'³` tensor.
    pub tensor: StateTensor,
    /// Sum of squared moduli of the appended entries.
    pub added_mass: f64,
}

pub fn method2_extend(v: &StateTensor, params: ExtensionParams, tol: RankTolerance) -> Result<Extension> {
    let ExtensionParams { p, m, .. } = params;
    check_cubic(v, p)?;
    check_window_independence(v, m, tol)?;
    let p_next = params.p_next();
    let scale = Complex64::new(params.scale(), 0.0);

    let mut entries: BTreeMap<MultiIndex, Amplitude> =
        v.entries().map(|(k, &a)| (k.clone(), a)).collect();
    let mut added_mass = 0.0;
    for (_, axis) in FAMILIES {
        for (offset, key) in extended_keys(p, m).enumerate() {
            entries.insert(place(axis, key, p + offset), scale);
            added_mass += scale.norm_sqr();
        }
    }
    let tensor = StateTensor::from_valid_map(vec![p_next; 3], entries)
        .with_truncated_from_infinite(v.truncated_from_infinite());
    Ok(Extension {
        params,
        tensor,
        added_mass,
    })
}

/// Independent audit of an extension against its defining properties.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtensionAudit {
    /// Every entry of the input is unchanged (and no input-window entry was added).
    pub original_preserved: bool,
    /// Indices with two coordinates in the `m`-window and the third in the
    /// appended block that carry a nonzero value.
    pub zero_pattern_violations: usize,
    /// Pattern indices examined for the count above.
    pub zero_pattern_checked: usize,
    /// Per family, slices of the `p`-window outside the `m`-window whose
    /// appended block is exactly one scaled standard basis vector, with all
    /// such vectors distinct.
    pub appended_basis_vectors: [usize; 3],
    /// Nonzero entries in the appended region other than the expected ones.
    pub stray_entries: usize,
    /// Sum of squared moduli over the appended region.
    pub added_mass: f64,
}

impl ExtensionAudit {
    pub fn holds(&self, params: &ExtensionParams, mass_tol: f64) -> bool {
        self.original_preserved
            && self.zero_pattern_violations == 0
            && self.appended_basis_vectors.iter().all(|&c| c == params.appended())
            && self.stray_entries == 0
            && (self.added_mass - params.epsilon).abs() <= mass_tol
    }
}

pub fn audit_extension(before: &StateTensor, after: &StateTensor, params: &ExtensionParams) -> Result<ExtensionAudit> {
    let ExtensionParams { p, m, .. } = *params;
    check_cubic(before, p)?;
    check_cubic(after, params.p_next())?;
    let p_next = params.p_next();

    let in_window = |k: &MultiIndex| k.coords().iter().all(|&c| c < p);
    let original_preserved = before.entries().all(|(k, a)| after.get(k) == *a)
        && after.entries().filter(|(k, _)| in_window(k)).count() == before.nnz();

    let mut zero_pattern_violations = 0;
    let mut zero_pattern_checked = 0;
    for axis in 0..3 {
        for x in 0..m {
            for y in 0..m {
                for along in p..p_next {
                    zero_pattern_checked += 1;
                    if after.get(&place(axis, (x, y), along)) != Complex64::new(0.0, 0.0) {
                        zero_pattern_violations += 1;
                    }
                }
            }
        }
    }

    let scale = params.scale();
    let mut appended_basis_vectors = [0usize; 3];
    for (slot, (_, axis)) in FAMILIES.into_iter().enumerate() {
        // Appended block of each family slice with key in the p-window.
        let mut positions: BTreeMap<(usize, usize), Vec<(usize, Amplitude)>> = BTreeMap::new();
        for (k, &a) in after.entries() {
            let c = k.coords();
            let key_coords: Vec<usize> = (0..3).filter(|&q| q != axis).map(|q| c[q]).collect();
            if c[axis] >= p && key_coords.iter().all(|&q| q < p) {
                positions.entry((key_coords[0], key_coords[1])).or_default().push((c[axis], a));
            }
        }
        let mut used = std::collections::BTreeSet::new();
        for key in extended_keys(p, m) {
            if let Some([(along, a)]) = positions.get(&key).map(|v| v.as_slice()) {
                if (a.re - scale).abs() <= f64::EPSILON * scale && a.im == 0.0 && used.insert(*along) {
                    appended_basis_vectors[slot] += 1;
                }
            }
        }
    }

    let appended: Vec<&Amplitude> = after
        .entries()
        .filter(|(k, _)| !in_window(k))
        .map(|(_, a)| a)
        .collect();
    let added_mass = appended.iter().map(|a| a.norm_sqr()).sum();
    let expected: usize = appended_basis_vectors.iter().sum();
    let stray_entries = appended.len().saturating_sub(expected);

    Ok(ExtensionAudit {
        original_preserved,
        zero_pattern_violations,
        zero_pattern_checked,
        appended_basis_vectors,
        stray_entries,
        added_mass,
    })
}

/// `2×2×2` seed with a single unit entry at the origin.
pub fn default_seed() -> StateTensor {
    StateTensor::basis(vec![2, 2, 2], [0, 0, 0]).expect("valid seed")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRecord {
    pub p: usize,
    pub m: usize,
    pub p_next: usize,
    pub epsilon: f64,
    pub added_mass: f64,
}

#[derive(Clone, Debug)]
pub struct Method2Output {
    /// Normalized final tensor, flagged as a truncation.
    pub state: StateTensor,
    pub stages: Vec<StageRecord>,
}

/// Iterates the extension from a `2×2×2` seed with `(p, m)` evolving as
/// `(2,1) → (5,2) → (26,5) → (677,26) → …`.
pub fn method2_build(seed: &StateTensor, eps_schedule: &[f64], tol: RankTolerance) -> Result<Method2Output> {
    check_cubic(seed, 2)?;
    if seed.get(&MultiIndex::from([0, 0, 0])) == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidParams("seed entry at the origin must be nonzero".into()));
    }
    if eps_schedule.is_empty() {
        return Err(Error::InvalidParams("need at least one stage".into()));
    }
    let mut current = seed.clone().with_truncated_from_infinite(true);
    let (mut p, mut m) = (2usize, 1usize);
    let mut stages = Vec::with_capacity(eps_schedule.len());
    for &epsilon in eps_schedule {
        let params = ExtensionParams::new(p, m, epsilon)?;
        let ext = method2_extend(&current, params, tol)?;
        stages.push(StageRecord {
            p,
            m,
            p_next: params.p_next(),
            epsilon,
            added_mass: ext.added_mass,
        });
        current = ext.tensor;
        (m, p) = (p, params.p_next());
    }
    Ok(Method2Output {
        state: current.normalized()?.with_truncated_from_infinite(true),
        stages,
    })
}

/// For each stage, the three family windows over that stage's `p`-window.
pub fn method2_windows(stages: &[StageRecord]) -> Vec<(usize, &'static str, Window)> {
    stages
        .iter()
        .enumerate()
        .flat_map(|(s, rec)| {
            FAMILIES
                .into_iter()
                .map(move |(family, axis)| (s, family, Window::cube(3, axis, rec.p)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_formula() {
        assert_eq!(ExtensionParams::new(2, 1, 0.1).unwrap().p_next(), 5);
        assert_eq!(ExtensionParams::new(5, 2, 0.1).unwrap().p_next(), 26);
        assert_eq!(ExtensionParams::new(26, 5, 0.1).unwrap().p_next(), 677);
        assert!(ExtensionParams::new(2, 2, 0.1).is_err());
        assert!(ExtensionParams::new(3, 2, 0.1).is_err());
        assert!(ExtensionParams::new(2, 1, 0.0).is_err());
    }

    #[test]
    fn first_stage_scale_and_mass() {
        let params = ExtensionParams::new(2, 1, 0.09).unwrap();
        assert!((params.scale() - 0.1).abs() < 1e-15);
        let ext = method2_extend(&default_seed(), params, RankTolerance::Default).unwrap();
        assert_eq!(ext.tensor.dims(), &[5, 5, 5]);
        assert_eq!(ext.tensor.nnz(), 1 + 9);
        assert!((ext.added_mass - 0.09).abs() < 1e-15);
        let audit = audit_extension(&default_seed(), &ext.tensor, &params).unwrap();
        assert!(audit.holds(&params, 1e-12), "{audit:?}");
        assert_eq!(audit.zero_pattern_checked, 3 * 3);
    }

    #[test]
    fn appended_entries_follow_lexicographic_order() {
        let params = ExtensionParams::new(2, 1, 0.09).unwrap();
        let t = method2_extend(&default_seed(), params, RankTolerance::Default).unwrap().tensor;
        // Rows (0,1), (1,0), (1,1) get c = 2, 3, 4.
        for (offset, (a, b)) in [(0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
            assert!((t.get(&MultiIndex::from([a, b, 2 + offset])).re - 0.1).abs() < 1e-15);
        }
        // Columns (b,c) = (0,1) gets a = 2.
        assert!((t.get(&MultiIndex::from([2, 0, 1])).re - 0.1).abs() < 1e-15);
    }

    #[test]
    fn audit_catches_tampering() {
        let params = ExtensionParams::new(2, 1, 0.09).unwrap();
        let t = method2_extend(&default_seed(), params, RankTolerance::Default).unwrap().tensor;
        let bad = t
            .add_scaled(&StateTensor::basis(vec![5, 5, 5], [0, 0, 3]).unwrap(), Complex64::new(0.5, 0.0))
            .unwrap();
        let audit = audit_extension(&default_seed(), &bad, &params).unwrap();
        assert_eq!(audit.zero_pattern_violations, 1);
        assert!(!audit.holds(&params, 1e-12));

        let moved = t
            .add_scaled(&StateTensor::basis(vec![5, 5, 5], [0, 0, 0]).unwrap(), Complex64::new(0.5, 0.0))
            .unwrap();
        assert!(!audit_extension(&default_seed(), &moved, &params).unwrap().original_preserved);
    }

    #[test]
    fn hypothesis_failure_is_reported() {
        let zero_origin = StateTensor::basis(vec![2, 2, 2], [1, 1, 1]).unwrap();
        let params = ExtensionParams::new(2, 1, 0.01).unwrap();
        assert!(matches!(
            method2_extend(&zero_origin, params, RankTolerance::Default),
            Err(Error::ExtensionHypothesis { .. })
        ));
        assert!(method2_build(&zero_origin, &[0.01], RankTolerance::Default).is_err());
    }

    #[test]
    fn two_stage_build() {
        let out = method2_build(&default_seed(), &[0.01, 0.005], RankTolerance::Default).unwrap();
        assert_eq!(out.state.dims(), &[26, 26, 26]);
        assert!(out.state.is_normalized());
        assert!(out.state.truncated_from_infinite());
        assert_eq!(out.stages.iter().map(|s| (s.p, s.m)).collect::<Vec<_>>(), vec![(2, 1), (5, 2)]);
        for (_, family, w) in method2_windows(&out.stages) {
            let o = window_certificate(&out.state, &w, RankTolerance::Default).unwrap();
            assert!(o.pass, "{family} window of size {}", o.size);
        }
    }
}
