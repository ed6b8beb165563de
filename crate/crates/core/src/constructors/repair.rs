//! Perturbs a bipartite state with vanishing Schmidt coefficients into one
//! of full Schmidt rank, staying within a prescribed distance.

use num_complex::Complex64;

use crate::bilinear::{schmidt_decompose, RankTolerance, UNIT_TOL};
use crate::error::{Error, Result};
use crate::state::{total_dim, unflatten, Amplitude, StateTensor, Subsystem};

#[derive(Clone, Debug)]
pub struct Repair {
    /// Normalized repaired state.
    pub state: StateTensor,
    /// Schmidt terms whose coefficient was raised from (numerical) zero.
    pub filled: usize,
    /// `‖state − v‖`.
    pub distance: f64,
}

/// Each vanishing Schmidt coefficient `c_k` is replaced by
/// `d_k = delta / (2√z)`, `z` the number of vanishing terms, and the
/// result is renormalized. A state of full Schmidt rank is returned as is.
pub fn repair_bipartite(v: &StateTensor, subsystem: &Subsystem, delta: f64, tol: RankTolerance) -> Result<Repair> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParams(format!("delta must be positive, got {delta}")));
    }
    v.require_unit(UNIT_TOL)?;
    v.check_subsystem(subsystem)?;
    let comp = subsystem.complement();
    let dim_s = subsystem.dim(v.dims())?;
    let dim_c = comp.dim(v.dims())?;
    if dim_s != dim_c {
        return Err(Error::UnequalDims {
            left: dim_s,
            right: dim_c,
        });
    }

    let schmidt = schmidt_decompose(v, subsystem, tol)?;
    let zeros: Vec<usize> = (0..schmidt.coeffs.len())
        .filter(|&k| schmidt.coeffs[k] <= schmidt.tol_used)
        .collect();
    if zeros.is_empty() {
        return Ok(Repair {
            state: v.clone(),
            filled: 0,
            distance: 0.0,
        });
    }

    let d = delta / (2.0 * (zeros.len() as f64).sqrt());
    let sdims = subsystem.dims(v.dims());
    let cdims = comp.dims(v.dims());
    total_dim(&sdims, "subsystem")?;
    let mut entries = Vec::with_capacity(dim_s * dim_c);
    for i in 0..dim_s {
        for j in 0..dim_c {
            let amp: Amplitude = zeros
                .iter()
                .map(|&k| schmidt.left_vectors[k][i] * schmidt.right_vectors[k][j] * (d - schmidt.coeffs[k]))
                .sum();
            entries.push((subsystem.merge(&unflatten(i, &sdims), &unflatten(j, &cdims)), amp));
        }
    }
    let correction = StateTensor::new(v.dims().to_vec(), entries, false)?;
    let state = v
        .add_scaled(&correction, Complex64::new(1.0, 0.0))?
        .normalized()?
        .with_truncated_from_infinite(v.truncated_from_infinite());
    let distance = state.distance(v)?;
    Ok(Repair {
        state,
        filled: zeros.len(),
        distance,
    })
}
