//! Haar-random vectors, states and unitaries from a caller-supplied RNG.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::state::{total_dim, unflatten, Amplitude, MultiIndex, StateTensor};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Amplitude {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Uniform on the unit sphere of `C^dim`.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Amplitude> {
    loop {
        let v: Vec<Amplitude> = (0..dim).map(|_| gaussian(rng)).collect();
        let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n > 0.0 {
            return v.into_iter().map(|a| a / n).collect();
        }
    }
}

/// Dense Haar-random unit state on `dims`.
pub fn random_unit_state<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> Result<StateTensor> {
    let total = total_dim(dims, "random state")?;
    let amps = random_unit_vector(rng, total);
    let entries = amps
        .into_iter()
        .enumerate()
        .map(|(flat, a)| (MultiIndex(unflatten(flat, dims)), a));
    StateTensor::new(dims.to_vec(), entries, true)
}

/// Haar-random `d × d` unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<Amplitude> {
    let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for k in 0..d {
        let diag = r[(k, k)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, k)] *= phase;
        }
    }
    q
}
