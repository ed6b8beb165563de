//! Degree of entanglement `E(v) = ½ min ‖v − w‖²` over unit product states
//! `w`, computed as `1 − max |⟨w, v⟩|`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bilinear::{schmidt_decompose, RankTolerance, UNIT_TOL};
use crate::error::{Error, Result};
use crate::sampling::random_unit_vector;
use crate::state::{Amplitude, StateTensor, Subsystem};

pub const DEFAULT_RESTARTS: usize = 16;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 500;
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Clone, Debug, Serialize)]
pub struct DegreeResult {
    pub value: f64,
    /// `max |⟨w, v⟩|`.
    pub overlap: f64,
    /// Unit factors of the closest product state found, one per factor of
    /// the partition used.
    pub best_product: Vec<Vec<Amplitude>>,
    pub converged: bool,
    pub restarts_used: usize,
    /// Sweeps taken by the winning restart.
    pub iterations: usize,
}

/// Exact degree across `(S | S')` from the top Schmidt coefficient.
pub fn degree_bipartite(v: &StateTensor, subsystem: &Subsystem) -> Result<DegreeResult> {
    if v.norm() == 0.0 {
        return Err(Error::ZeroState);
    }
    v.require_unit(UNIT_TOL)?;
    let schmidt = schmidt_decompose(v, subsystem, RankTolerance::Default)?;
    let overlap = schmidt.coeffs[0];
    Ok(DegreeResult {
        value: (1.0 - overlap).max(0.0),
        overlap,
        best_product: vec![schmidt.left_vectors[0].clone(), schmidt.right_vectors[0].clone()],
        converged: true,
        restarts_used: 0,
        iterations: 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlsOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for AlsOptions {
    fn default() -> Self {
        AlsOptions {
            restarts: DEFAULT_RESTARTS,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            seed: DEFAULT_SEED,
        }
    }
}

struct Run {
    overlap: f64,
    factors: Vec<Vec<Amplitude>>,
    converged: bool,
    iterations: usize,
}

/// `y[i] = Σ_{idx_k = i} v_idx Π_{l≠k} conj(x_l[idx_l])`.
fn contract(v: &StateTensor, factors: &[Vec<Amplitude>], k: usize) -> Vec<Amplitude> {
    let mut y = vec![Complex64::new(0.0, 0.0); v.dims()[k]];
    for (idx, &amp) in v.entries() {
        let mut w = amp;
        for (l, &c) in idx.coords().iter().enumerate() {
            if l != k {
                w *= factors[l][c].conj();
            }
        }
        y[idx.coords()[k]] += w;
    }
    y
}

fn run_als(v: &StateTensor, opts: &AlsOptions, restart: usize) -> Run {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(restart as u64);
    let mut factors: Vec<Vec<Amplitude>> = v.dims().iter().map(|&d| random_unit_vector(&mut rng, d)).collect();
    let mut overlap = 0.0;
    let mut previous = f64::NEG_INFINITY;
    for iter in 1..=opts.max_iters {
        for k in 0..factors.len() {
            let y = contract(v, &factors, k);
            let n = y.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            overlap = n;
            if n == 0.0 {
                // Orthogonal start; nothing to follow along this factor.
                continue;
            }
            factors[k] = y.into_iter().map(|a| a / n).collect();
        }
        if (overlap - previous).abs() < opts.tol {
            return Run {
                overlap,
                factors,
                converged: true,
                iterations: iter,
            };
        }
        previous = overlap;
    }
    Run {
        overlap,
        factors,
        converged: false,
        iterations: opts.max_iters,
    }
}

/// Best rank-1 approximation over all factors by alternating updates from
/// `opts.restarts` seeded random starts, run in parallel. The winner is the
/// largest overlap, ties going to the lowest restart index.
pub fn degree_multipartite(v: &StateTensor, opts: AlsOptions) -> Result<DegreeResult> {
    if v.norm() == 0.0 {
        return Err(Error::ZeroState);
    }
    v.require_unit(UNIT_TOL)?;
    if v.n_factors() < 2 {
        return Err(Error::TooFewFactors(v.n_factors()));
    }
    if opts.restarts == 0 || opts.max_iters == 0 {
        return Err(Error::InvalidParams("restarts and max_iters must be positive".into()));
    }
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol must be positive, got {}", opts.tol)));
    }
    let runs: Vec<Run> = (0..opts.restarts).into_par_iter().map(|r| run_als(v, &opts, r)).collect();
    let mut best = 0;
    for (k, run) in runs.iter().enumerate() {
        if run.overlap > runs[best].overlap {
            best = k;
        }
    }
    let run = runs.into_iter().nth(best).expect("at least one restart");
    Ok(DegreeResult {
        value: (1.0 - run.overlap).max(0.0),
        overlap: run.overlap,
        best_product: run.factors,
        converged: run.converged,
        restarts_used: opts.restarts,
        iterations: run.iterations,
    })
}

/// `|⟨x_0 ⊗ … ⊗ x_{n-1}, v⟩|`.
pub fn product_overlap(v: &StateTensor, factors: &[Vec<Amplitude>]) -> Result<f64> {
    if factors.len() != v.n_factors() || factors.iter().zip(v.dims()).any(|(f, &d)| f.len() != d) {
        return Err(Error::DimensionMismatch("product factors do not match the state".into()));
    }
    let y = contract(v, factors, 0);
    Ok(y.iter().zip(&factors[0]).map(|(a, x)| x.conj() * a).sum::<Amplitude>().norm())
}
