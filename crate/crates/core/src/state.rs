//! Sparse coefficient tensors for finite multipartite pure states.
//!
//! A state on `H_0 ⊗ … ⊗ H_{n-1}` is stored as a map from multi-indices to
//! nonzero complex amplitudes in the standard product basis. Indices are
//! 0-based on every axis. All reductions iterate the map in lexicographic
//! index order, so results are bitwise reproducible.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex amplitude of a basis product state.
pub type Amplitude = Complex64;

/// Amplitudes at or below this magnitude are not stored.
pub const DROP_THRESHOLD: f64 = 1e-300;

/// Largest subsystem dimension converted to dense vectors or matrices.
pub const DENSE_CAP: usize = 4096;

/// Tolerance on `|‖v‖ − 1|` for a state to count as normalized.
pub const NORMALIZED_TOL: f64 = 1e-12;

/// One coordinate per factor of the product basis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn new(coords: impl Into<Vec<usize>>) -> Self {
        MultiIndex(coords.into())
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        MultiIndex(v)
    }
}

impl<const N: usize> From<[usize; N]> for MultiIndex {
    fn from(v: [usize; N]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Product of dimensions with overflow detection.
pub fn total_dim(dims: &[usize], what: &'static str) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or(Error::DimensionOverflow { what })
}

/// Row-major flat position of `coords` in a grid of shape `dims`.
pub fn flatten(coords: &[usize], dims: &[usize]) -> usize {
    coords
        .iter()
        .zip(dims)
        .fold(0usize, |acc, (&c, &d)| acc * d + c)
}

/// Inverse of [`flatten`].
pub fn unflatten(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = flat % d;
        flat /= d;
    }
    out
}

/// A proper nonempty set of factor positions, kept strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subsystem {
    indices: Vec<usize>,
    n_factors: usize,
}

impl Subsystem {
    pub fn new(indices: impl Into<Vec<usize>>, n_factors: usize) -> Result<Self> {
        let mut indices = indices.into();
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSubsystem(format!(
                "repeated factor in {indices:?}"
            )));
        }
        if indices.is_empty() {
            return Err(Error::InvalidSubsystem("empty subsystem".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n_factors) {
            return Err(Error::InvalidSubsystem(format!(
                "factor {bad} does not exist in a {n_factors}-factor state"
            )));
        }
        if indices.len() == n_factors {
            return Err(Error::InvalidSubsystem(
                "subsystem must be a proper subset of the factors".into(),
            ));
        }
        Ok(Subsystem { indices, n_factors })
    }

    pub fn atomic(axis: usize, n_factors: usize) -> Result<Self> {
        Subsystem::new(vec![axis], n_factors)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn n_factors(&self) -> usize {
        self.n_factors
    }

    pub fn complement(&self) -> Subsystem {
        let indices = (0..self.n_factors)
            .filter(|i| !self.indices.contains(i))
            .collect();
        Subsystem {
            indices,
            n_factors: self.n_factors,
        }
    }

    pub fn dims(&self, dims: &[usize]) -> Vec<usize> {
        self.indices.iter().map(|&i| dims[i]).collect()
    }

    pub fn dim(&self, dims: &[usize]) -> Result<usize> {
        total_dim(&self.dims(dims), "subsystem")
    }

    /// Coordinates of `idx` restricted to this subsystem.
    pub fn project(&self, idx: &[usize]) -> Vec<usize> {
        self.indices.iter().map(|&i| idx[i]).collect()
    }

    /// Flat position of the restricted coordinates inside `H_S`.
    pub fn flat(&self, idx: &[usize], dims: &[usize]) -> usize {
        self.indices
            .iter()
            .fold(0usize, |acc, &i| acc * dims[i] + idx[i])
    }

    /// Restores a full multi-index from coordinates on this subsystem and
    /// on its complement.
    pub fn merge(&self, own: &[usize], other: &[usize]) -> MultiIndex {
        let mut out = vec![0; self.n_factors];
        let comp = self.complement();
        for (&axis, &c) in self.indices.iter().zip(own) {
            out[axis] = c;
        }
        for (&axis, &c) in comp.indices.iter().zip(other) {
            out[axis] = c;
        }
        MultiIndex(out)
    }
}

/// Sparse vector keyed by flat basis position.
pub type SparseVector = BTreeMap<usize, Amplitude>;

pub fn sparse_to_dense(v: &SparseVector, dim: usize) -> Vec<Amplitude> {
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (&k, &a) in v {
        out[k] = a;
    }
    out
}

/// A pure state as a sparse coefficient tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTensor {
    dims: Vec<usize>,
    entries: BTreeMap<MultiIndex, Amplitude>,
    truncated_from_infinite: bool,
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::TooFewFactors(dims.len()));
    }
    if let Some((axis, &dim)) = dims.iter().enumerate().find(|(_, &d)| d < 2) {
        return Err(Error::FactorTooSmall { axis, dim });
    }
    total_dim(dims, "state space")?;
    Ok(())
}

fn validate_index(index: &MultiIndex, dims: &[usize]) -> Result<()> {
    if index.len() != dims.len() {
        return Err(Error::IndexArity {
            index: index.clone(),
            got: index.len(),
            expected: dims.len(),
        });
    }
    if index.0.iter().zip(dims).any(|(&c, &d)| c >= d) {
        return Err(Error::IndexOutOfRange {
            index: index.clone(),
            dims: dims.to_vec(),
        });
    }
    Ok(())
}

impl StateTensor {
    /// Builds a state from an entry list. Zero (sub-threshold) amplitudes are
    /// dropped; repeated indices are rejected.
    pub fn new(
        dims: Vec<usize>,
        entries: impl IntoIterator<Item = (MultiIndex, Amplitude)>,
        normalize: bool,
    ) -> Result<Self> {
        validate_dims(&dims)?;
        let mut map = BTreeMap::new();
        for (index, amp) in entries {
            validate_index(&index, &dims)?;
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(Error::NonFiniteAmplitude { index });
            }
            if map.contains_key(&index) {
                return Err(Error::DuplicateIndex(index));
            }
            map.insert(index, amp);
        }
        let mut state = StateTensor {
            dims,
            entries: map,
            truncated_from_infinite: false,
        };
        state.prune();
        if !state.norm_sqr().is_finite() {
            return Err(Error::InvalidParams("squared norm overflows".into()));
        }
        if normalize {
            state = state.normalized()?;
        }
        Ok(state)
    }

    /// The zero vector on `dims`.
    pub fn zero(dims: Vec<usize>) -> Result<Self> {
        StateTensor::new(dims, std::iter::empty(), false)
    }

    /// Internal constructor for entries already known to be valid.
    pub(crate) fn from_valid_map(
        dims: Vec<usize>,
        entries: BTreeMap<MultiIndex, Amplitude>,
    ) -> Self {
        let mut state = StateTensor {
            dims,
            entries,
            truncated_from_infinite: false,
        };
        state.prune();
        state
    }

    fn prune(&mut self) {
        self.entries.retain(|_, a| a.norm() > DROP_THRESHOLD);
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_factors(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> Result<usize> {
        total_dim(&self.dims, "state space")
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &Amplitude)> {
        self.entries.iter()
    }

    pub fn get(&self, index: &MultiIndex) -> Amplitude {
        self.entries
            .get(index)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn truncated_from_infinite(&self) -> bool {
        self.truncated_from_infinite
    }

    /// Marks (or unmarks) the tensor as a finite truncation of an infinite
    /// construction. The flag is caller-asserted provenance.
    pub fn with_truncated_from_infinite(mut self, flag: bool) -> Self {
        self.truncated_from_infinite = flag;
        self
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.values().fold(0.0, |acc, a| acc + a.norm_sqr())
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORMALIZED_TOL
    }

    pub(crate) fn require_unit(&self, tol: f64) -> Result<()> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::ZeroState);
        }
        if (norm - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }

    pub fn scaled(&self, factor: Amplitude) -> StateTensor {
        let entries = self
            .entries
            .iter()
            .map(|(k, &a)| (k.clone(), a * factor))
            .collect();
        StateTensor {
            dims: self.dims.clone(),
            entries,
            truncated_from_infinite: self.truncated_from_infinite,
        }
        .pruned()
    }

    fn pruned(mut self) -> Self {
        self.prune();
        self
    }

    pub fn normalized(&self) -> Result<StateTensor> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::ZeroState);
        }
        if (norm - 1.0).abs() <= f64::EPSILON {
            return Ok(self.clone());
        }
        Ok(self.scaled(Complex64::new(1.0 / norm, 0.0)))
    }

    fn check_same_dims(&self, other: &StateTensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &StateTensor) -> Result<Amplitude> {
        self.check_same_dims(other)?;
        let (small, large, conj_small) = if self.nnz() <= other.nnz() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in &small.entries {
            if let Some(b) = large.entries.get(k) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        Ok(acc)
    }

    /// `self + factor · other`.
    pub fn add_scaled(&self, other: &StateTensor, factor: Amplitude) -> Result<StateTensor> {
        self.check_same_dims(other)?;
        let mut entries = self.entries.clone();
        for (k, &b) in &other.entries {
            *entries.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0)) += factor * b;
        }
        Ok(StateTensor {
            dims: self.dims.clone(),
            entries,
            truncated_from_infinite: self.truncated_from_infinite,
        }
        .pruned())
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &StateTensor) -> Result<f64> {
        Ok(self
            .add_scaled(other, Complex64::new(-1.0, 0.0))?
            .norm())
    }

    /// Splits `v = Σ_j v_j ⊗ b_j` with `b_j` the product basis of the
    /// complement of `subsystem` and `v_j ∈ H_S`.
    pub fn slice_family(&self, subsystem: &Subsystem) -> Result<SliceFamily> {
        self.check_subsystem(subsystem)?;
        let comp = subsystem.complement();
        let mut vectors: BTreeMap<Vec<usize>, SparseVector> = BTreeMap::new();
        for (idx, &amp) in &self.entries {
            let key = comp.project(&idx.0);
            let pos = subsystem.flat(&idx.0, &self.dims);
            vectors.entry(key).or_default().insert(pos, amp);
        }
        Ok(SliceFamily {
            dims: self.dims.clone(),
            subsystem: subsystem.clone(),
            vectors,
        })
    }

    pub(crate) fn check_subsystem(&self, subsystem: &Subsystem) -> Result<()> {
        if subsystem.n_factors() != self.n_factors() {
            return Err(Error::InvalidSubsystem(format!(
                "subsystem over {} factors applied to a {}-factor state",
                subsystem.n_factors(),
                self.n_factors()
            )));
        }
        Ok(())
    }

    /// Applies `op ⊗ I` where `op` acts on the product space of `subsystem`.
    pub fn apply_local(&self, subsystem: &Subsystem, op: &DMatrix<Amplitude>) -> Result<StateTensor> {
        self.check_subsystem(subsystem)?;
        let sdims = subsystem.dims(&self.dims);
        let dim_s = total_dim(&sdims, "subsystem")?;
        if dim_s > DENSE_CAP {
            return Err(Error::DenseCapExceeded {
                dim: dim_s,
                cap: DENSE_CAP,
            });
        }
        if op.nrows() != dim_s || op.ncols() != dim_s {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, subsystem dimension is {dim_s}",
                op.nrows(),
                op.ncols()
            )));
        }
        let family = self.slice_family(subsystem)?;
        let mut entries = BTreeMap::new();
        for (key, vec) in &family.vectors {
            for row in 0..dim_s {
                let mut acc = Complex64::new(0.0, 0.0);
                for (&col, &a) in vec {
                    acc += op[(row, col)] * a;
                }
                if acc.norm() > DROP_THRESHOLD {
                    let own = unflatten(row, &sdims);
                    entries.insert(subsystem.merge(&own, key), acc);
                }
            }
        }
        Ok(StateTensor {
            dims: self.dims.clone(),
            entries,
            truncated_from_infinite: self.truncated_from_infinite,
        })
    }

    /// Reorders factors: factor `k` of the result is factor `perm[k]` of `self`.
    pub fn permute_factors(&self, perm: &[usize]) -> Result<StateTensor> {
        let n = self.n_factors();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidParams(format!(
                "{perm:?} is not a permutation of 0..{n}"
            )));
        }
        let dims = perm.iter().map(|&p| self.dims[p]).collect();
        let entries = self
            .entries
            .iter()
            .map(|(k, &a)| (MultiIndex(perm.iter().map(|&p| k.0[p]).collect()), a))
            .collect();
        Ok(StateTensor {
            dims,
            entries,
            truncated_from_infinite: self.truncated_from_infinite,
        })
    }

    /// Tensor product of per-factor vectors.
    pub fn product(factors: &[Vec<Amplitude>]) -> Result<StateTensor> {
        let dims: Vec<usize> = factors.iter().map(|f| f.len()).collect();
        validate_dims(&dims)?;
        let mut entries = BTreeMap::new();
        let total = total_dim(&dims, "state space")?;
        for flat in 0..total {
            let idx = unflatten(flat, &dims);
            let amp = idx
                .iter()
                .zip(factors)
                .fold(Complex64::new(1.0, 0.0), |acc, (&i, f)| acc * f[i]);
            if amp.norm() > DROP_THRESHOLD {
                entries.insert(MultiIndex(idx), amp);
            }
        }
        Ok(StateTensor {
            dims,
            entries,
            truncated_from_infinite: false,
        })
    }

    /// Basis state `|idx⟩`.
    pub fn basis(dims: Vec<usize>, idx: impl Into<MultiIndex>) -> Result<StateTensor> {
        StateTensor::new(dims, [(idx.into(), Complex64::new(1.0, 0.0))], false)
    }
}

/// The vectors `v_j ∈ H_S` of `v = Σ_j v_j ⊗ b_j`, keyed by the complement
/// coordinates of `b_j`. Keys whose vector is zero are omitted from storage
/// but still belong to the family.
#[derive(Clone, Debug)]
pub struct SliceFamily {
    dims: Vec<usize>,
    subsystem: Subsystem,
    vectors: BTreeMap<Vec<usize>, SparseVector>,
}

impl SliceFamily {
    pub fn subsystem(&self) -> &Subsystem {
        &self.subsystem
    }

    /// Dimension of `H_S`, the space the slice vectors live in.
    pub fn vector_dim(&self) -> Result<usize> {
        self.subsystem.dim(&self.dims)
    }

    /// Number of family members, `dim H_{S'}`.
    pub fn len(&self) -> Result<usize> {
        self.subsystem.complement().dim(&self.dims)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Keys with a nonzero vector, in lexicographic order.
    pub fn nonzero(&self) -> impl Iterator<Item = (&Vec<usize>, &SparseVector)> {
        self.vectors.iter()
    }

    pub fn get(&self, key: &[usize]) -> Option<&SparseVector> {
        self.vectors.get(key)
    }

    /// Every family member as a dense vector, ordered by the flat position
    /// of its key in `H_{S'}`.
    pub fn dense_members(&self) -> Result<Vec<(Vec<usize>, Vec<Amplitude>)>> {
        let comp = self.subsystem.complement();
        let cdims = comp.dims(&self.dims);
        let count = total_dim(&cdims, "complement")?;
        let vdim = self.vector_dim()?;
        if count > DENSE_CAP * DENSE_CAP || vdim > DENSE_CAP {
            return Err(Error::DenseCapExceeded {
                dim: count.max(vdim),
                cap: DENSE_CAP,
            });
        }
        let empty = SparseVector::new();
        Ok((0..count)
            .map(|flat| {
                let key = unflatten(flat, &cdims);
                let dense = sparse_to_dense(self.vectors.get(&key).unwrap_or(&empty), vdim);
                (key, dense)
            })
            .collect())
    }

    /// Rebuilds `Σ_j v_j ⊗ b_j`.
    pub fn reassemble(&self) -> StateTensor {
        let sdims = self.subsystem.dims(&self.dims);
        let mut entries = BTreeMap::new();
        for (key, vec) in &self.vectors {
            for (&pos, &a) in vec {
                let own = unflatten(pos, &sdims);
                entries.insert(self.subsystem.merge(&own, key), a);
            }
        }
        StateTensor::from_valid_map(self.dims.clone(), entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Amplitude {
        Complex64::new(re, 0.0)
    }

    fn bohm() -> StateTensor {
        StateTensor::new(
            vec![2, 2],
            [
                (MultiIndex::from([0, 1]), c(FRAC_1_SQRT_2)),
                (MultiIndex::from([1, 0]), c(FRAC_1_SQRT_2)),
            ],
            false,
        )
        .unwrap()
    }

    #[test]
    fn make_state_examples() {
        let b = bohm();
        assert!((b.norm() - 1.0).abs() < 1e-15);

        let p = StateTensor::new(vec![2, 2], [(MultiIndex::from([0, 0]), c(1.0))], true).unwrap();
        assert_eq!(p.get(&MultiIndex::from([0, 0])), c(1.0));
        assert_eq!(p.norm(), 1.0);

        assert!(matches!(
            StateTensor::new(vec![2], [(MultiIndex::from([0]), c(1.0))], false),
            Err(Error::TooFewFactors(1))
        ));
    }

    #[test]
    fn make_state_errors() {
        assert!(matches!(
            StateTensor::new(vec![2, 2], [(MultiIndex::from([0, 2]), c(1.0))], false),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            StateTensor::new(vec![2, 2], [(MultiIndex::from([0, 0]), c(f64::NAN))], false),
            Err(Error::NonFiniteAmplitude { .. })
        ));
        assert!(matches!(
            StateTensor::new(vec![2, 2], std::iter::empty(), true),
            Err(Error::ZeroState)
        ));
        assert!(matches!(
            StateTensor::new(vec![2, 1], std::iter::empty(), false),
            Err(Error::FactorTooSmall { axis: 1, dim: 1 })
        ));
        assert!(matches!(
            StateTensor::new(
                vec![2, 2],
                [(MultiIndex::from([0, 0]), c(1.0)), (MultiIndex::from([0, 0]), c(1.0))],
                false
            ),
            Err(Error::DuplicateIndex(_))
        ));
    }

    #[test]
    fn norm_examples() {
        let v = StateTensor::new(
            vec![2, 2],
            [(MultiIndex::from([0, 0]), c(3.0)), (MultiIndex::from([1, 1]), c(4.0))],
            false,
        )
        .unwrap();
        assert_eq!(v.norm(), 5.0);
        assert_eq!(StateTensor::zero(vec![2, 2]).unwrap().norm(), 0.0);
    }

    #[test]
    fn inner_examples() {
        let b = bohm();
        assert!((b.inner(&b).unwrap() - c(1.0)).norm() < 1e-15);
        let z00 = StateTensor::basis(vec![2, 2], [0, 0]).unwrap();
        let z11 = StateTensor::basis(vec![2, 2], [1, 1]).unwrap();
        assert_eq!(z00.inner(&z11).unwrap(), c(0.0));
        assert_eq!(z00.inner(&b).unwrap(), c(0.0));
        let z3 = StateTensor::basis(vec![2, 3], [0, 0]).unwrap();
        assert!(matches!(z00.inner(&z3), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn inner_is_conjugate_linear_in_first_argument() {
        let u = StateTensor::new(
            vec![2, 2],
            [(MultiIndex::from([0, 0]), Complex64::new(0.0, 1.0))],
            false,
        )
        .unwrap();
        let v = StateTensor::basis(vec![2, 2], [0, 0]).unwrap();
        assert_eq!(u.inner(&v).unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(v.inner(&u).unwrap(), Complex64::new(0.0, 1.0));
    }

    #[test]
    fn bohm_slice_family() {
        let b = bohm();
        let fam = b.slice_family(&Subsystem::atomic(0, 2).unwrap()).unwrap();
        let members = fam.dense_members().unwrap();
        assert_eq!(members.len(), 2);
        assert_eq!(members[0].0, vec![0]);
        assert_eq!(members[0].1, vec![c(0.0), c(FRAC_1_SQRT_2)]);
        assert_eq!(members[1].1, vec![c(FRAC_1_SQRT_2), c(0.0)]);
        assert_eq!(fam.reassemble(), b);
    }

    #[test]
    fn product_state_slices_are_proportional() {
        let a = vec![c(0.6), c(0.8)];
        let b = vec![c(0.0), Complex64::new(0.0, 1.0), c(0.0)];
        let v = StateTensor::product(&[a.clone(), b.clone()]).unwrap();
        let fam = v.slice_family(&Subsystem::atomic(0, 2).unwrap()).unwrap();
        for (key, vec) in fam.dense_members().unwrap() {
            for (x, y) in vec.iter().zip(&a) {
                assert!((x - y * b[key[0]]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn subsystem_validation() {
        assert!(Subsystem::new(vec![], 3).is_err());
        assert!(Subsystem::new(vec![0, 1, 2], 3).is_err());
        assert!(Subsystem::new(vec![3], 3).is_err());
        assert!(Subsystem::new(vec![1, 1], 3).is_err());
        let s = Subsystem::new(vec![2, 0], 3).unwrap();
        assert_eq!(s.indices(), &[0, 2]);
        assert_eq!(s.complement().indices(), &[1]);
    }

    #[test]
    fn flatten_roundtrip() {
        let dims = [3, 4, 5];
        for flat in 0..60 {
            assert_eq!(flatten(&unflatten(flat, &dims), &dims), flat);
        }
    }

    #[test]
    fn apply_local_swaps_a_factor() {
        let v = StateTensor::basis(vec![2, 3], [0, 2]).unwrap();
        let mut x = DMatrix::zeros(2, 2);
        x[(0, 1)] = c(1.0);
        x[(1, 0)] = c(1.0);
        let w = v.apply_local(&Subsystem::atomic(0, 2).unwrap(), &x).unwrap();
        assert_eq!(w, StateTensor::basis(vec![2, 3], [1, 2]).unwrap());
    }

    #[test]
    fn permute_factors_moves_coordinates() {
        let v = StateTensor::basis(vec![2, 3, 4], [1, 2, 3]).unwrap();
        let p = v.permute_factors(&[2, 0, 1]).unwrap();
        assert_eq!(p.dims(), &[4, 2, 3]);
        assert_eq!(p, StateTensor::basis(vec![4, 2, 3], [3, 1, 2]).unwrap());
        assert!(v.permute_factors(&[0, 0, 1]).is_err());
    }
}
