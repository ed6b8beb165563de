//! Matrix views of a state across a bipartition `S | S'`.
//!
//! The unfolding of `v` at `S` has rows indexed by the product basis of
//! `S'` and columns by the product basis of `S`; its `(j, i)` entry is the
//! coefficient of `a_i ⊗ b_j`. Schmidt coefficients are its singular values
//! and `M M†` is the reduced density operator of `S'`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::{total_dim, unflatten, Amplitude, StateTensor, Subsystem, DENSE_CAP};

/// Safety factor applied to the machine-epsilon rank cutoff.
pub const DEFAULT_SAFETY_FACTOR: f64 = 64.0;

/// Reduced density operators require `|‖v‖ − 1|` below this.
pub const UNIT_TOL: f64 = 1e-10;

/// Singular-value threshold policy. Ranks count singular values strictly
/// above the threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "policy", content = "value", rename_all = "snake_case")]
pub enum RankTolerance {
    /// `max(rows, cols) · σ_max · 2⁻⁵² · 64`.
    Default,
    /// A fixed cutoff on the singular-value (amplitude) scale.
    Absolute(f64),
    /// A fixed fraction of `σ_max`.
    Relative(f64),
}

impl RankTolerance {
    pub fn threshold(&self, sigma_max: f64, rows: usize, cols: usize) -> f64 {
        match *self {
            RankTolerance::Default => {
                rows.max(cols) as f64 * sigma_max * f64::EPSILON * DEFAULT_SAFETY_FACTOR
            }
            RankTolerance::Absolute(t) => t,
            RankTolerance::Relative(r) => r * sigma_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RankTolerance::Default => Ok(()),
            RankTolerance::Absolute(t) | RankTolerance::Relative(t) => {
                if t.is_finite() && t >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParams(format!(
                        "tolerance must be finite and nonnegative, got {t}"
                    )))
                }
            }
        }
    }
}

/// Outcome of a numerical rank decision.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankReport {
    pub rank: usize,
    /// Smallest singular value counted in the rank.
    pub min_kept: Option<f64>,
    /// Largest singular value treated as zero.
    pub max_dropped: Option<f64>,
    pub threshold: f64,
    pub singular_values: Vec<f64>,
}

/// Singular values in nonincreasing order.
pub fn singular_values(m: &DMatrix<Amplitude>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn numerical_rank(m: &DMatrix<Amplitude>, tol: RankTolerance) -> RankReport {
    rank_from_singular_values(singular_values(m), m.nrows(), m.ncols(), tol)
}

pub(crate) fn rank_from_singular_values(
    singular_values: Vec<f64>,
    rows: usize,
    cols: usize,
    tol: RankTolerance,
) -> RankReport {
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let threshold = tol.threshold(sigma_max, rows, cols);
    let rank = singular_values.iter().filter(|&&s| s > threshold).count();
    RankReport {
        rank,
        min_kept: rank.checked_sub(1).map(|k| singular_values[k]),
        max_dropped: singular_values.get(rank).copied(),
        threshold,
        singular_values,
    }
}

/// Dense unfolding of a state at a bipartition.
#[derive(Clone, Debug)]
pub struct UnfoldingMatrix {
    subsystem: Subsystem,
    matrix: DMatrix<Amplitude>,
}

impl UnfoldingMatrix {
    pub fn subsystem(&self) -> &Subsystem {
        &self.subsystem
    }

    /// Rows indexed by `S'`, columns by `S`.
    pub fn matrix(&self) -> &DMatrix<Amplitude> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Amplitude> {
        self.matrix
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn unfold(v: &StateTensor, subsystem: &Subsystem) -> Result<UnfoldingMatrix> {
    let comp = subsystem.complement();
    let cols = subsystem.dim(v.dims())?;
    let rows = comp.dim(v.dims())?;
    for dim in [rows, cols] {
        if dim > DENSE_CAP {
            return Err(Error::DenseCapExceeded { dim, cap: DENSE_CAP });
        }
    }
    let mut matrix = DMatrix::zeros(rows, cols);
    for (idx, &amp) in v.entries() {
        let r = comp.flat(idx.coords(), v.dims());
        let c = subsystem.flat(idx.coords(), v.dims());
        matrix[(r, c)] = amp;
    }
    Ok(UnfoldingMatrix {
        subsystem: subsystem.clone(),
        matrix,
    })
}

/// `v = Σ_k c_k a_k ⊗ b_k` with `a_k ∈ H_S`, `b_k ∈ H_{S'}`.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    pub subsystem: Subsystem,
    /// Nonincreasing; `min(dim H_S, dim H_{S'})` entries, zeros included.
    pub coeffs: Vec<f64>,
    pub left_vectors: Vec<Vec<Amplitude>>,
    pub right_vectors: Vec<Vec<Amplitude>>,
    pub tol_used: f64,
    /// Number of coefficients above `tol_used`.
    pub rank: usize,
    /// Half-open index ranges of coefficients tied within `tol_used`.
    pub ties: Vec<(usize, usize)>,
}

impl SchmidtDecomposition {
    /// Rebuilds `Σ_k c_k a_k ⊗ b_k` on the original dims.
    pub fn reconstruct(&self, dims: &[usize]) -> Result<StateTensor> {
        let comp = self.subsystem.complement();
        let sdims = self.subsystem.dims(dims);
        let cdims = comp.dims(dims);
        let mut entries = Vec::new();
        let dim_s = total_dim(&sdims, "subsystem")?;
        let dim_c = total_dim(&cdims, "complement")?;
        for i in 0..dim_s {
            for j in 0..dim_c {
                let amp: Amplitude = self
                    .coeffs
                    .iter()
                    .zip(self.left_vectors.iter().zip(&self.right_vectors))
                    .map(|(&c, (a, b))| a[i] * b[j] * c)
                    .sum();
                let idx = self.subsystem.merge(&unflatten(i, &sdims), &unflatten(j, &cdims));
                entries.push((idx, amp));
            }
        }
        StateTensor::new(dims.to_vec(), entries, false)
    }
}

fn tie_blocks(coeffs: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=coeffs.len() {
        if k == coeffs.len() || coeffs[k - 1] - coeffs[k] > tol {
            if k - start > 1 {
                out.push((start, k));
            }
            start = k;
        }
    }
    out
}

pub fn schmidt_decompose(
    v: &StateTensor,
    subsystem: &Subsystem,
    tol: RankTolerance,
) -> Result<SchmidtDecomposition> {
    tol.validate()?;
    if v.norm() == 0.0 {
        return Err(Error::ZeroState);
    }
    let m = unfold(v, subsystem)?.into_matrix();
    let (rows, cols) = m.shape();
    let svd = m.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let coeffs: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    // M = U Σ V†, so the H_S factor of term k is row k of V† and the
    // H_{S'} factor is column k of U.
    let left_vectors = order
        .iter()
        .map(|&k| v_t.row(k).iter().copied().collect())
        .collect();
    let right_vectors = order
        .iter()
        .map(|&k| u.column(k).iter().copied().collect())
        .collect();
    let report = rank_from_singular_values(coeffs.clone(), rows, cols, tol);
    Ok(SchmidtDecomposition {
        subsystem: subsystem.clone(),
        ties: tie_blocks(&coeffs, report.threshold),
        coeffs,
        left_vectors,
        right_vectors,
        tol_used: report.threshold,
        rank: report.rank,
    })
}

/// Reduced density operator `D_S^v` with its spectrum.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub subsystem: Subsystem,
    pub matrix: DMatrix<Amplitude>,
    /// Nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// Column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: DMatrix<Amplitude>,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|k| self.matrix[(k, k)].re).sum()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Amplitude> {
        self.eigenvectors.column(k).iter().copied().collect()
    }
}

/// Partial trace over the complement of `subsystem`, i.e. `K K†` where `K`
/// is the unfolding at the complement. Accumulated from the sparse slice
/// vectors so that only `H_S` has to be dense.
pub fn reduced_density(v: &StateTensor, subsystem: &Subsystem) -> Result<DensityMatrix> {
    v.require_unit(UNIT_TOL)?;
    let dim = subsystem.dim(v.dims())?;
    if dim > DENSE_CAP {
        return Err(Error::DenseCapExceeded { dim, cap: DENSE_CAP });
    }
    let family = v.slice_family(subsystem)?;
    let mut matrix: DMatrix<Amplitude> = DMatrix::zeros(dim, dim);
    for (_, vec) in family.nonzero() {
        for (&r, &a) in vec {
            for (&c, &b) in vec {
                matrix[(r, c)] += a * b.conj();
            }
        }
    }
    let hermitian = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(hermitian.clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(DensityMatrix {
        subsystem: subsystem.clone(),
        matrix: hermitian,
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructors::corpus::{paper_state, PaperState};
    use crate::state::MultiIndex;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Amplitude {
        Complex64::new(re, 0.0)
    }

    fn s(axes: &[usize], n: usize) -> Subsystem {
        Subsystem::new(axes.to_vec(), n).unwrap()
    }

    #[test]
    fn unfold_bohm() {
        let m = unfold(&paper_state(PaperState::Bohm), &s(&[0], 2)).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[c(0.0), c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), c(0.0)]);
        assert!((m.matrix() - expect).norm() < 1e-15);
        assert!((m.frobenius_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unfold_hardy2_in_z_basis() {
        let m = unfold(&paper_state(PaperState::Hardy2), &s(&[0], 2)).unwrap();
        let r = 1.0 / 3f64.sqrt();
        let expect = DMatrix::from_row_slice(2, 2, &[c(0.0), c(r), c(r), c(r)]);
        assert!((m.matrix() - expect).norm() < 1e-15);
    }

    #[test]
    fn unfold_ghz_has_two_entries() {
        let m = unfold(&paper_state(PaperState::Ghz), &s(&[0], 3)).unwrap();
        assert_eq!(m.matrix().shape(), (4, 2));
        let nonzero: Vec<_> = m.matrix().iter().filter(|a| a.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 2);
        assert!(nonzero.iter().all(|a| (a.re - FRAC_1_SQRT_2).abs() < 1e-15));
    }

    #[test]
    fn schmidt_examples() {
        let bohm = schmidt_decompose(&paper_state(PaperState::Bohm), &s(&[0], 2), RankTolerance::Default).unwrap();
        assert!(bohm.coeffs.iter().all(|&x| (x - FRAC_1_SQRT_2).abs() < 1e-14));
        assert_eq!(bohm.ties, vec![(0, 2)]);

        let prod = StateTensor::product(&[vec![c(0.6), c(0.8)], vec![c(0.0), c(1.0), c(0.0)]]).unwrap();
        let sd = schmidt_decompose(&prod, &s(&[0], 2), RankTolerance::Default).unwrap();
        assert_eq!(sd.coeffs.len(), 2);
        assert!((sd.coeffs[0] - 1.0).abs() < 1e-14);
        assert!(sd.coeffs[1] < 1e-15);
        assert_eq!(sd.rank, 1);

        let hardy = schmidt_decompose(&paper_state(PaperState::Hardy2), &s(&[0], 2), RankTolerance::Default).unwrap();
        let r5 = 5f64.sqrt();
        assert!((hardy.coeffs[0] - ((3.0 + r5) / 6.0).sqrt()).abs() < 1e-14);
        assert!((hardy.coeffs[1] - ((3.0 - r5) / 6.0).sqrt()).abs() < 1e-14);
        assert_eq!(hardy.rank, 2);
    }

    #[test]
    fn schmidt_reconstructs_ghz_across_a_pair() {
        let ghz = paper_state(PaperState::Ghz);
        let sd = schmidt_decompose(&ghz, &s(&[0, 2], 3), RankTolerance::Default).unwrap();
        assert_eq!(sd.coeffs.len(), 2);
        assert!(sd.reconstruct(ghz.dims()).unwrap().distance(&ghz).unwrap() < 1e-12);
    }

    #[test]
    fn schmidt_rejects_zero_state() {
        let z = StateTensor::zero(vec![2, 2]).unwrap();
        assert!(matches!(
            schmidt_decompose(&z, &s(&[0], 2), RankTolerance::Default),
            Err(Error::ZeroState)
        ));
    }

    #[test]
    fn reduced_density_examples() {
        let d = reduced_density(&paper_state(PaperState::Bohm), &s(&[1], 2)).unwrap();
        let half = DMatrix::from_diagonal_element(2, 2, c(0.5));
        assert!((&d.matrix - half).norm() < 1e-15);
        assert!((d.trace() - 1.0).abs() < 1e-15);

        let d = reduced_density(&paper_state(PaperState::Ghz), &s(&[1, 2], 3)).unwrap();
        assert_eq!(d.dim(), 4);
        assert_eq!(d.eigenvalues.iter().filter(|&&x| x.abs() < 1e-15).count(), 2);

        let prod = StateTensor::basis(vec![3, 2], [1, 0]).unwrap();
        let d = reduced_density(&prod, &s(&[0], 2)).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn reduced_density_rejects_unnormalized() {
        let v = StateTensor::new(vec![2, 2], [(MultiIndex::from([0, 0]), c(2.0))], false).unwrap();
        assert!(matches!(
            reduced_density(&v, &s(&[0], 2)),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn numerical_rank_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0), c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), c(0.0)]);
        let r = numerical_rank(&m, RankTolerance::Default);
        assert_eq!(r.rank, 2);
        assert_eq!(r.max_dropped, None);

        let ghz = unfold(&paper_state(PaperState::Ghz), &s(&[0], 3)).unwrap();
        assert_eq!(numerical_rank(ghz.matrix(), RankTolerance::Default).rank, 2);

        let z: DMatrix<Amplitude> = DMatrix::zeros(3, 2);
        let r = numerical_rank(&z, RankTolerance::Default);
        assert_eq!(r.rank, 0);
        assert_eq!(r.min_kept, None);
        assert_eq!(r.max_dropped, Some(0.0));
    }

    #[test]
    fn default_threshold_formula() {
        let t = RankTolerance::Default.threshold(2.0, 3, 7);
        assert_eq!(t, 7.0 * 2.0 * f64::EPSILON * 64.0);
        assert_eq!(RankTolerance::Absolute(1e-9).threshold(5.0, 1, 1), 1e-9);
        assert_eq!(RankTolerance::Relative(1e-3).threshold(5.0, 1, 1), 5e-3);
        assert!(RankTolerance::Absolute(-1.0).validate().is_err());
        assert!(RankTolerance::Relative(f64::NAN).validate().is_err());
    }

    #[test]
    fn tie_blocks_groups_runs() {
        assert_eq!(tie_blocks(&[1.0, 1.0, 0.5, 0.2, 0.2, 0.2], 1e-9), vec![(0, 2), (3, 6)]);
        assert!(tie_blocks(&[0.9, 0.1], 1e-9).is_empty());
    }
}
