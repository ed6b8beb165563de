//! Hyperentanglement decision procedure.
//!
//! A state is hyperentangled iff for every atomic subsystem `{i}` the reduced
//! density operator of the complement has no zero eigenvalue, equivalently
//! iff the slice vectors `v_j ∈ H_i` indexed by the complement basis are
//! linearly independent. Both routes are implemented: [`cyclicity_test`]
//! works on the spectrum, [`window_certificate`] on the rank of an explicit
//! set of slice vectors.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bilinear::{
    numerical_rank, reduced_density, RankReport, RankTolerance, DEFAULT_SAFETY_FACTOR, UNIT_TOL,
};
use crate::error::{Error, Result};
use crate::state::{
    flatten, sparse_to_dense, total_dim, unflatten, Amplitude, SliceFamily, StateTensor, Subsystem,
    DENSE_CAP,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityReason {
    Ok,
    UnequalDims,
    #[serde(rename = "finite_dims_n_gt_2")]
    FiniteDimsNGt2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub reason: FeasibilityReason,
}

/// Whether a hyperentangled state can exist on factors of these dimensions:
/// all equal, and for more than two factors the common dimension must be
/// infinite. Finite truncations of infinite constructions pass when the
/// caller says so.
pub fn dimension_gate(dims: &[usize], truncated_from_infinite: bool) -> Feasibility {
    let reason = if dims.windows(2).any(|w| w[0] != w[1]) {
        FeasibilityReason::UnequalDims
    } else if dims.len() > 2 && !truncated_from_infinite {
        FeasibilityReason::FiniteDimsNGt2
    } else {
        FeasibilityReason::Ok
    };
    Feasibility {
        feasible: reason == FeasibilityReason::Ok,
        reason,
    }
}

/// Spectral test of `S`-cyclicity.
#[derive(Clone, Debug)]
pub struct CyclicityOutcome {
    pub subsystem: Subsystem,
    pub pass: bool,
    /// Smallest eigenvalue of `D_{S'}`; on the sparse path, the Rayleigh
    /// quotient of the witness.
    pub min_eigenvalue: f64,
    /// Eigenvalues above `eigen_threshold`.
    pub rank: usize,
    /// `dim H_{S'}`.
    pub full_dim: usize,
    pub eigen_threshold: f64,
    /// Eigenvalues at or below the threshold.
    pub zero_eigenvalues: usize,
    /// Unit vector in `H_{S'}` with `(I ⊗ P_w) v ≈ 0`, present iff failing.
    pub witness: Option<Vec<Amplitude>>,
    /// `‖(I ⊗ P_w) v‖`.
    pub witness_residual: Option<f64>,
}

/// Smallest eigenvalue counted as nonzero. The squared singular-value cutoff
/// is floored at the eigensolver's own resolution.
fn eigen_threshold(tol: RankTolerance, lambda_max: f64, rows: usize, cols: usize) -> f64 {
    let sigma_cut = tol.threshold(lambda_max.max(0.0).sqrt(), rows, cols);
    let resolution = rows as f64 * lambda_max.max(0.0) * f64::EPSILON * DEFAULT_SAFETY_FACTOR;
    (sigma_cut * sigma_cut).max(resolution)
}

/// `‖Σ_j conj(w_j) v_j‖` for `w` indexed by flat complement positions.
fn projected_residual(family: &SliceFamily, w: &[Amplitude], dims: &[usize]) -> f64 {
    let comp = family.subsystem().complement();
    let cdims = comp.dims(dims);
    let mut acc = std::collections::BTreeMap::<usize, Amplitude>::new();
    for (key, vec) in family.nonzero() {
        let weight = w[flatten(key, &cdims)].conj();
        if weight == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (&i, &a) in vec {
            *acc.entry(i).or_default() += weight * a;
        }
    }
    acc.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Passes iff `D_{S'}` has full numerical rank `dim H_{S'}`. On failure the
/// witness `w` is a kernel vector of `D_{S'}`.
pub fn cyclicity_test(v: &StateTensor, subsystem: &Subsystem, tol: RankTolerance) -> Result<CyclicityOutcome> {
    tol.validate()?;
    v.require_unit(UNIT_TOL)?;
    v.check_subsystem(subsystem)?;
    let comp = subsystem.complement();
    let dim_s = subsystem.dim(v.dims())?;
    let full_dim = comp.dim(v.dims())?;
    let family = v.slice_family(subsystem)?;

    if full_dim <= DENSE_CAP {
        let density = reduced_density(v, &comp)?;
        let lambda_max = density.eigenvalues.first().copied().unwrap_or(0.0);
        let threshold = eigen_threshold(tol, lambda_max, full_dim, dim_s);
        let rank = density.eigenvalues.iter().filter(|&&l| l > threshold).count();
        let min_eigenvalue = density.eigenvalues.last().copied().unwrap_or(0.0);
        let pass = rank == full_dim;
        let (witness, witness_residual) = if pass {
            (None, None)
        } else {
            let w = density.eigenvector(full_dim - 1);
            let r = projected_residual(&family, &w, v.dims());
            (Some(w), Some(r))
        };
        return Ok(CyclicityOutcome {
            subsystem: subsystem.clone(),
            pass,
            min_eigenvalue,
            rank,
            full_dim,
            eigen_threshold: threshold,
            zero_eigenvalues: full_dim - rank,
            witness,
            witness_residual,
        });
    }

    // The complement is too large for a dense spectrum. At most dim H_S slice
    // vectors can be independent, so a larger complement always fails; its
    // rank is read off the (small) density operator of S.
    if full_dim <= dim_s {
        return Err(Error::DenseCapExceeded {
            dim: full_dim,
            cap: DENSE_CAP,
        });
    }
    let small = reduced_density(v, subsystem)?;
    let lambda_max = small.eigenvalues.first().copied().unwrap_or(0.0);
    let threshold = eigen_threshold(tol, lambda_max, full_dim, dim_s);
    let rank = small.eigenvalues.iter().filter(|&&l| l > threshold).count();
    let w = sparse_kernel_vector(v, &family, full_dim, dim_s)?;
    let residual = projected_residual(&family, &w, v.dims());
    Ok(CyclicityOutcome {
        subsystem: subsystem.clone(),
        pass: false,
        min_eigenvalue: residual * residual,
        rank,
        full_dim,
        eigen_threshold: threshold,
        zero_eigenvalues: full_dim - rank,
        witness: Some(w),
        witness_residual: Some(residual),
    })
}

/// A unit kernel vector of `D_{S'}` without forming it: a basis vector whose
/// slice is zero if one exists, otherwise a dependence among the first
/// `dim H_S + 1` slices.
fn sparse_kernel_vector(
    v: &StateTensor,
    family: &SliceFamily,
    full_dim: usize,
    dim_s: usize,
) -> Result<Vec<Amplitude>> {
    let cdims = family.subsystem().complement().dims(v.dims());
    let occupied: BTreeSet<usize> = family.nonzero().map(|(k, _)| flatten(k, &cdims)).collect();
    let mut w = vec![Complex64::new(0.0, 0.0); full_dim];
    if let Some(free) = (0..full_dim).find(|j| !occupied.contains(j)) {
        w[free] = Complex64::new(1.0, 0.0);
        return Ok(w);
    }
    let keys: Vec<Vec<usize>> = (0..=dim_s).map(|j| unflatten(j, &cdims)).collect();
    let window = Window {
        axis_set: family.subsystem().indices().to_vec(),
        indices: keys,
    };
    let null = dependency(v, &window)?;
    for (j, s) in null.into_iter().enumerate() {
        w[j] = s.conj();
    }
    Ok(w)
}

/// A finite set `T` of complement multi-indices for the slice family of
/// `axis_set` (a single factor for the atomic windows used in certificates).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    pub axis_set: Vec<usize>,
    pub indices: Vec<Vec<usize>>,
}

impl Window {
    pub fn atomic(axis: usize, indices: Vec<Vec<usize>>) -> Self {
        Window {
            axis_set: vec![axis],
            indices,
        }
    }

    /// Every complement index of `axis`.
    pub fn full(dims: &[usize], axis: usize) -> Result<Self> {
        let subsystem = Subsystem::atomic(axis, dims.len())?;
        let cdims = subsystem.complement().dims(dims);
        let count = total_dim(&cdims, "complement")?;
        if count > DENSE_CAP {
            return Err(Error::DenseCapExceeded { dim: count, cap: DENSE_CAP });
        }
        Ok(Window::atomic(axis, (0..count).map(|j| unflatten(j, &cdims)).collect()))
    }

    /// All complement indices whose every coordinate is below `bound`.
    pub fn cube(n_factors: usize, axis: usize, bound: usize) -> Self {
        let cdims = vec![bound; n_factors - 1];
        let count = bound.pow((n_factors - 1) as u32);
        Window::atomic(axis, (0..count).map(|j| unflatten(j, &cdims)).collect())
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Dense `dim H_S × |T|` matrix whose columns are the window's slice vectors.
fn window_matrix(v: &StateTensor, window: &Window) -> Result<(Subsystem, DMatrix<Amplitude>)> {
    let subsystem = Subsystem::new(window.axis_set.clone(), v.n_factors())?;
    let comp = subsystem.complement();
    let cdims = comp.dims(v.dims());
    for key in &window.indices {
        if key.len() != cdims.len() || key.iter().zip(&cdims).any(|(&c, &d)| c >= d) {
            return Err(Error::InvalidParams(format!(
                "window index {key:?} is not a valid complement index for dims {cdims:?}"
            )));
        }
    }
    let dim_s = subsystem.dim(v.dims())?;
    if dim_s > DENSE_CAP {
        return Err(Error::DenseCapExceeded { dim: dim_s, cap: DENSE_CAP });
    }
    let family = v.slice_family(&subsystem)?;
    let mut m = DMatrix::zeros(dim_s, window.len());
    for (col, key) in window.indices.iter().enumerate() {
        if let Some(vec) = family.get(key) {
            for (row, a) in sparse_to_dense(vec, dim_s).into_iter().enumerate() {
                m[(row, col)] = a;
            }
        }
    }
    Ok((subsystem, m))
}

#[derive(Clone, Debug)]
pub struct WindowOutcome {
    pub pass: bool,
    pub rank: usize,
    pub size: usize,
    pub report: RankReport,
}

/// Passes iff the `|T|` slice vectors `{v_j}_{j∈T}` have numerical rank `|T|`.
/// Each nonzero vector is scaled to unit norm first, so strongly decaying
/// amplitudes do not drown independent slices below the cutoff; zero
/// slices stay zero.
pub fn window_certificate(v: &StateTensor, window: &Window, tol: RankTolerance) -> Result<WindowOutcome> {
    tol.validate()?;
    let unique: BTreeSet<&Vec<usize>> = window.indices.iter().collect();
    if unique.len() != window.len() {
        return Err(Error::InvalidParams("window repeats an index".into()));
    }
    let (_, mut m) = window_matrix(v, window)?;
    for mut col in m.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= Complex64::new(n, 0.0);
        }
    }
    let report = numerical_rank(&m, tol);
    Ok(WindowOutcome {
        pass: report.rank == window.len(),
        rank: report.rank,
        size: window.len(),
        report,
    })
}

/// Unit coefficients `s` with `Σ_j s_j v_j ≈ 0` over the window: the right
/// singular vector of the smallest singular value.
pub fn dependency(v: &StateTensor, window: &Window) -> Result<Vec<Amplitude>> {
    let (_, m) = window_matrix(v, window)?;
    let cols = m.ncols();
    // Pad to at least square so the thin SVD exposes the full right basis.
    let padded = if m.nrows() < cols {
        m.clone().resize_vertically(cols, Complex64::new(0.0, 0.0))
    } else {
        m
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let k = (0..svd.singular_values.len())
        .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
        .ok_or_else(|| Error::InvalidParams("empty window".into()))?;
    Ok(v_t.row(k).iter().map(|a| a.conj()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    Hyperentangled,
    NotHyperentangled,
    InfeasibleDims,
}

#[derive(Clone, Debug)]
pub struct CertVerdict {
    pub overall: Overall,
    pub feasibility: Feasibility,
    pub per_subsystem: Vec<CyclicityOutcome>,
}

impl CertVerdict {
    pub fn is_hyperentangled(&self) -> bool {
        self.overall == Overall::Hyperentangled
    }

    pub fn failing(&self) -> impl Iterator<Item = &CyclicityOutcome> {
        self.per_subsystem.iter().filter(|o| !o.pass)
    }
}

/// Dimension gate followed by the spectral test on every atomic subsystem.
/// All subsystems are evaluated even when the gate or an earlier subsystem
/// fails; an infeasible gate takes precedence in `overall`.
pub fn hyperentanglement_test(v: &StateTensor, tol: RankTolerance) -> Result<CertVerdict> {
    tol.validate()?;
    v.require_unit(UNIT_TOL)?;
    let feasibility = dimension_gate(v.dims(), v.truncated_from_infinite());
    let n = v.n_factors();
    let per_subsystem = (0..n)
        .into_par_iter()
        .map(|axis| cyclicity_test(v, &Subsystem::atomic(axis, n)?, tol))
        .collect::<Result<Vec<_>>>()?;
    let overall = if !feasibility.feasible {
        Overall::InfeasibleDims
    } else if per_subsystem.iter().all(|o| o.pass) {
        Overall::Hyperentangled
    } else {
        Overall::NotHyperentangled
    };
    Ok(CertVerdict {
        overall,
        feasibility,
        per_subsystem,
    })
}
