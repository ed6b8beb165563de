//! Conditional probabilities between local projections, witness projectors
//! realizing near-certain prediction, and local steering operators.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::bilinear::{numerical_rank, unfold, RankTolerance, UNIT_TOL};
use crate::certify::cyclicity_test;
use crate::error::{Error, Result};
use crate::state::{sparse_to_dense, Amplitude, StateTensor, Subsystem};

/// Probabilities at or below this are treated as an impossible conditioning event.
pub const CONDITIONING_FLOOR: f64 = 1e-28;

const ORTHONORMAL_TOL: f64 = 1e-10;

fn zero() -> Amplitude {
    Complex64::new(0.0, 0.0)
}

fn dot(a: &[Amplitude], b: &[Amplitude]) -> Amplitude {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[Amplitude]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Orthogonal projection onto the span of an orthonormal basis on a subsystem.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    subsystem: Subsystem,
    dim: usize,
    basis: Vec<Vec<Amplitude>>,
}

impl Projector {
    pub fn new(subsystem: Subsystem, dims: &[usize], basis: Vec<Vec<Amplitude>>) -> Result<Self> {
        let dim = subsystem.dim(dims)?;
        if basis.is_empty() {
            return Err(Error::InvalidProjector("range basis is empty".into()));
        }
        for (k, e) in basis.iter().enumerate() {
            if e.len() != dim {
                return Err(Error::InvalidProjector(format!(
                    "basis vector {k} has length {}, expected {dim}",
                    e.len()
                )));
            }
            if e.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
                return Err(Error::InvalidProjector(format!("basis vector {k} is not finite")));
            }
        }
        for a in 0..basis.len() {
            for b in a..basis.len() {
                let expect = if a == b { 1.0 } else { 0.0 };
                if (dot(&basis[a], &basis[b]) - expect).norm() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidProjector(format!(
                        "basis vectors {a} and {b} are not orthonormal"
                    )));
                }
            }
        }
        Ok(Projector { subsystem, dim, basis })
    }

    /// Projection onto the line through `vector`, which need not be normalized.
    pub fn rank1(subsystem: Subsystem, dims: &[usize], vector: Vec<Amplitude>) -> Result<Self> {
        let n = norm_sqr(&vector).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidProjector("zero or non-finite vector".into()));
        }
        let unit = vector.into_iter().map(|a| a / n).collect();
        Projector::new(subsystem, dims, vec![unit])
    }

    /// Projection onto the span of the given standard basis positions.
    pub fn coordinate(subsystem: Subsystem, dims: &[usize], positions: &[usize]) -> Result<Self> {
        let dim = subsystem.dim(dims)?;
        let basis = positions
            .iter()
            .map(|&p| {
                if p >= dim {
                    return Err(Error::InvalidProjector(format!("position {p} outside dimension {dim}")));
                }
                let mut e = vec![zero(); dim];
                e[p] = Complex64::new(1.0, 0.0);
                Ok(e)
            })
            .collect::<Result<Vec<_>>>()?;
        Projector::new(subsystem, dims, basis)
    }

    pub fn identity(subsystem: Subsystem, dims: &[usize]) -> Result<Self> {
        let dim = subsystem.dim(dims)?;
        Projector::coordinate(subsystem, dims, &(0..dim).collect::<Vec<_>>())
    }

    pub fn subsystem(&self) -> &Subsystem {
        &self.subsystem
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Amplitude>] {
        &self.basis
    }

    /// `P x`.
    pub fn apply(&self, x: &[Amplitude]) -> Vec<Amplitude> {
        let mut out = vec![zero(); self.dim];
        for e in &self.basis {
            let c = dot(e, x);
            for (o, &ei) in out.iter_mut().zip(e) {
                *o += c * ei;
            }
        }
        out
    }

    /// `‖P x‖²`.
    pub fn weight(&self, x: &[Amplitude]) -> f64 {
        self.basis.iter().map(|e| dot(e, x).norm_sqr()).sum()
    }
}

fn check_pair(v: &StateTensor, p: &Projector, pp: &Projector) -> Result<()> {
    v.check_subsystem(p.subsystem())?;
    if pp.subsystem().indices() != p.subsystem().complement().indices()
        || pp.subsystem().n_factors() != p.subsystem().n_factors()
    {
        return Err(Error::InvalidProjector(format!(
            "second projector acts on {:?}, expected the complement of {:?}",
            pp.subsystem().indices(),
            p.subsystem().indices()
        )));
    }
    if p.dim() != p.subsystem().dim(v.dims())? || pp.dim() != pp.subsystem().dim(v.dims())? {
        return Err(Error::InvalidProjector("projector dimensions do not match the state".into()));
    }
    Ok(())
}

/// `‖(I ⊗ P')v‖²` for `P'` on a subsystem `T`, accumulated over the
/// slices of `v` along `T`.
pub fn marginal_probability(v: &StateTensor, pp: &Projector) -> Result<f64> {
    v.check_subsystem(pp.subsystem())?;
    let family = v.slice_family(pp.subsystem())?;
    Ok(family
        .nonzero()
        .map(|(_, s)| pp.weight(&sparse_to_dense(s, pp.dim())))
        .sum())
}

/// `Prob_v(P' = 1 | P = 1) = (v, (P ⊗ P')v) / (v, (P ⊗ I)v)`.
pub fn conditional_probability(v: &StateTensor, p: &Projector, pp: &Projector) -> Result<f64> {
    v.require_unit(UNIT_TOL)?;
    check_pair(v, p, pp)?;
    // (P ⊗ I)v = Σ_k e_k ⊗ a_k with a_k[j] = Σ_i conj(e_k[i]) v(i, j).
    let family = v.slice_family(pp.subsystem())?;
    let comp_dims = p.subsystem().dims(v.dims());
    let mut a: Vec<Vec<Amplitude>> = vec![vec![zero(); pp.dim()]; p.rank()];
    for (key, slice) in family.nonzero() {
        let i = crate::state::flatten(key, &comp_dims);
        for (k, e) in p.basis().iter().enumerate() {
            let w = e[i].conj();
            if w == zero() {
                continue;
            }
            for (&j, &amp) in slice {
                a[k][j] += w * amp;
            }
        }
    }
    let denominator: f64 = a.iter().map(|col| norm_sqr(col)).sum();
    if denominator <= CONDITIONING_FLOOR {
        return Err(Error::ZeroConditioning);
    }
    let numerator: f64 = a.iter().map(|col| pp.weight(col)).sum();
    Ok((numerator / denominator).clamp(0.0, 1.0))
}

#[derive(Clone, Debug)]
pub struct CorrelationQuery {
    pub state: StateTensor,
    pub subsystem: Subsystem,
    pub p_prime: Projector,
    pub epsilon: f64,
}

#[derive(Clone, Debug)]
pub struct Witness {
    /// Rank-1 projector on the conditioning subsystem.
    pub projector: Projector,
    /// `Prob_v(P' = 1 | P = 1)` for the returned `P`.
    pub achieved: f64,
    /// `(v, (I ⊗ P')v)`.
    pub marginal: f64,
    /// Set when `achieved < 1 − ε`.
    pub below_target: bool,
}

/// Finds `P` on `q.subsystem` with `Prob(P' = 1 | P = 1) ≥ 1 − ε`. Requires
/// the state to pass the cyclicity test at `q.subsystem`.
pub fn correlation_witness(q: &CorrelationQuery, tol: RankTolerance) -> Result<Witness> {
    if !(q.epsilon > 0.0 && q.epsilon < 1.0) {
        return Err(Error::InvalidParams(format!("epsilon must lie in (0, 1), got {}", q.epsilon)));
    }
    q.state.require_unit(UNIT_TOL)?;
    let cyc = cyclicity_test(&q.state, &q.subsystem, tol)?;
    if !cyc.pass {
        return Err(Error::NotCyclic {
            subsystem: q.subsystem.indices().to_vec(),
            rank: cyc.rank,
            full: cyc.full_dim,
        });
    }
    inverse_image_witness(&q.state, &q.subsystem, &q.p_prime, q.epsilon)
}

/// The inverse-image construction without the cyclicity precondition: take
/// a unit `w` in the range of `P'`, solve `M x = w` in the least-squares
/// sense for the unfolding `M` at `subsystem`, and let `P` project onto
/// `conj(x)`. Then `(P ⊗ I)v = P-vector ⊗ M x`.
pub fn inverse_image_witness(v: &StateTensor, subsystem: &Subsystem, pp: &Projector, epsilon: f64) -> Result<Witness> {
    v.require_unit(UNIT_TOL)?;
    if pp.subsystem().indices() != subsystem.complement().indices() {
        return Err(Error::InvalidProjector(format!(
            "second projector acts on {:?}, expected the complement of {:?}",
            pp.subsystem().indices(),
            subsystem.indices()
        )));
    }
    let marginal = marginal_probability(v, pp)?;
    if marginal <= CONDITIONING_FLOOR {
        return Err(Error::ProjectorAnnihilates);
    }
    let m = unfold(v, subsystem)?.into_matrix();
    let svd = m.clone().svd(true, true);
    let report = numerical_rank(&m, RankTolerance::Default);
    let u = svd.u.as_ref().expect("left singular vectors requested");

    // Among the range basis of P', the vector best covered by the range of M.
    let coverage = |e: &[Amplitude]| -> f64 {
        (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] > report.threshold)
            .map(|k| {
                let col: Vec<Amplitude> = u.column(k).iter().copied().collect();
                dot(&col, e).norm_sqr()
            })
            .sum()
    };
    let mut best = 0;
    let mut best_cov = coverage(&pp.basis()[0]);
    for (k, e) in pp.basis().iter().enumerate().skip(1) {
        let c = coverage(e);
        if c > best_cov {
            best = k;
            best_cov = c;
        }
    }
    let w = DMatrix::from_column_slice(pp.dim(), 1, &pp.basis()[best]);
    let x = svd
        .solve(&w, report.threshold)
        .map_err(|e| Error::InvalidParams(format!("least-squares solve failed: {e}")))?;
    let x_norm = x.norm();
    if !(x_norm > 0.0 && x_norm.is_finite()) {
        return Err(Error::ZeroConditioning);
    }
    let phi = &m * &x;
    let phi: Vec<Amplitude> = phi.iter().copied().collect();
    let phi_norm_sqr = norm_sqr(&phi);
    if phi_norm_sqr <= CONDITIONING_FLOOR {
        return Err(Error::ZeroConditioning);
    }
    let achieved = (pp.weight(&phi) / phi_norm_sqr).clamp(0.0, 1.0);
    let u_vec: Vec<Amplitude> = x.iter().map(|a| a.conj() / x_norm).collect();
    let projector = Projector::rank1(subsystem.clone(), v.dims(), u_vec)?;
    Ok(Witness {
        projector,
        achieved,
        marginal,
        below_target: achieved < 1.0 - epsilon,
    })
}

/// Operator on `H_S` with `(A ⊗ I)v = target`.
#[derive(Clone, Debug, Serialize)]
pub struct LocalOperator {
    #[serde(skip)]
    pub subsystem: Subsystem,
    #[serde(skip)]
    pub matrix: DMatrix<Amplitude>,
    /// Largest singular value of `matrix`.
    pub operator_norm: f64,
    /// `‖(A ⊗ I)v − target‖`.
    pub residual: f64,
}

/// Solves `A V = T` where column `j` of `V` (resp. `T`) is the slice of `v`
/// (resp. `target`) along `S` at complement position `j`. Solvable for
/// every target exactly when the slices of `v` are independent.
pub fn steering_operator(
    v: &StateTensor,
    subsystem: &Subsystem,
    target: &StateTensor,
    tol: RankTolerance,
) -> Result<LocalOperator> {
    if v.dims() != target.dims() {
        return Err(Error::DimensionMismatch(format!(
            "target dims {:?} differ from state dims {:?}",
            target.dims(),
            v.dims()
        )));
    }
    if target.norm() == 0.0 {
        return Err(Error::ZeroState);
    }
    let vm = unfold(v, subsystem)?.into_matrix().transpose();
    let tm = unfold(target, subsystem)?.into_matrix().transpose();
    let report = numerical_rank(&vm, tol);
    if report.rank < vm.ncols() {
        return Err(Error::NotCyclic {
            subsystem: subsystem.indices().to_vec(),
            rank: report.rank,
            full: vm.ncols(),
        });
    }
    let pinv = vm
        .clone()
        .pseudo_inverse(report.threshold)
        .map_err(|e| Error::InvalidParams(format!("pseudo-inverse failed: {e}")))?;
    let a = &tm * pinv;
    let residual = (&a * &vm - &tm).norm();
    let operator_norm = crate::bilinear::singular_values(&a).first().copied().unwrap_or(0.0);
    Ok(LocalOperator {
        subsystem: subsystem.clone(),
        matrix: a,
        operator_norm,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructors::corpus::{paper_state, PaperState};

    fn c(re: f64) -> Amplitude {
        Complex64::new(re, 0.0)
    }

    fn sub(axes: &[usize], n: usize) -> Subsystem {
        Subsystem::new(axes.to_vec(), n).unwrap()
    }

    #[test]
    fn bohm_anticorrelation() {
        let v = paper_state(PaperState::Bohm);
        let p = Projector::coordinate(sub(&[0], 2), v.dims(), &[0]).unwrap();
        let pp = Projector::coordinate(sub(&[1], 2), v.dims(), &[1]).unwrap();
        assert!((conditional_probability(&v, &p, &pp).unwrap() - 1.0).abs() < 1e-15);
        let same = Projector::coordinate(sub(&[1], 2), v.dims(), &[0]).unwrap();
        assert!(conditional_probability(&v, &p, &same).unwrap().abs() < 1e-15);
    }

    #[test]
    fn identity_projectors_give_one() {
        let v = paper_state(PaperState::Hardy3);
        let p = Projector::identity(sub(&[1], 3), v.dims()).unwrap();
        let pp = Projector::identity(sub(&[0, 2], 3), v.dims()).unwrap();
        assert!((conditional_probability(&v, &p, &pp).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ghz_conditioning() {
        let v = paper_state(PaperState::Ghz);
        let p = Projector::coordinate(sub(&[0], 3), v.dims(), &[0]).unwrap();
        let pp = Projector::coordinate(sub(&[1, 2], 3), v.dims(), &[0]).unwrap();
        assert!((conditional_probability(&v, &p, &pp).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bohm_witness_picks_opposite_spin() {
        let v = paper_state(PaperState::Bohm);
        let pp = Projector::coordinate(sub(&[1], 2), v.dims(), &[0]).unwrap();
        let q = CorrelationQuery {
            state: v.clone(),
            subsystem: sub(&[0], 2),
            p_prime: pp.clone(),
            epsilon: 0.01,
        };
        let w = correlation_witness(&q, RankTolerance::Default).unwrap();
        assert!((w.achieved - 1.0).abs() < 1e-12);
        assert!(!w.below_target);
        let u = &w.projector.basis()[0];
        assert!(u[0].norm() < 1e-12 && (u[1].norm() - 1.0).abs() < 1e-12);
        let again = conditional_probability(&v, &w.projector, &pp).unwrap();
        assert!((again - w.achieved).abs() < 1e-12);
    }

    #[test]
    fn witness_errors() {
        let v = paper_state(PaperState::Spin1TwoTerm);
        let pp = Projector::coordinate(sub(&[1], 2), v.dims(), &[0]).unwrap();
        let q = CorrelationQuery {
            state: v.clone(),
            subsystem: sub(&[0], 2),
            p_prime: pp,
            epsilon: 0.1,
        };
        assert!(matches!(correlation_witness(&q, RankTolerance::Default), Err(Error::NotCyclic { .. })));

        let annihilating = Projector::coordinate(sub(&[1], 2), v.dims(), &[2]).unwrap();
        assert!(matches!(
            inverse_image_witness(&v, &sub(&[0], 2), &annihilating, 0.1),
            Err(Error::ProjectorAnnihilates)
        ));

        let mut bad = q.clone();
        bad.epsilon = 1.0;
        assert!(correlation_witness(&bad, RankTolerance::Default).is_err());
    }

    #[test]
    fn projector_validation() {
        let s = sub(&[0], 2);
        assert!(Projector::new(s.clone(), &[2, 2], vec![]).is_err());
        assert!(Projector::new(s.clone(), &[2, 2], vec![vec![c(1.0), c(1.0)]]).is_err());
        assert!(Projector::new(s.clone(), &[2, 2], vec![vec![c(1.0)]]).is_err());
        assert!(Projector::new(s.clone(), &[2, 2], vec![vec![c(1.0), c(0.0)], vec![c(1.0), c(0.0)]]).is_err());
        assert!(Projector::rank1(s, &[2, 2], vec![c(0.0), c(0.0)]).is_err());
    }

    #[test]
    fn bohm_steering() {
        let v = paper_state(PaperState::Bohm);
        let s = sub(&[0], 2);
        // Slice at j = 0 of the target is e_0, all other slices vanish.
        let target = StateTensor::basis(vec![2, 2], [0, 0]).unwrap();
        let op = steering_operator(&v, &s, &target, RankTolerance::Default).unwrap();
        assert!(op.residual < 1e-12);
        let moved = v.apply_local(&s, &op.matrix).unwrap();
        assert!(moved.distance(&target).unwrap() < 1e-12);

        let product = StateTensor::basis(vec![2, 2], [0, 0]).unwrap();
        assert!(matches!(
            steering_operator(&product, &s, &target, RankTolerance::Default),
            Err(Error::NotCyclic { .. })
        ));
        let ghz = paper_state(PaperState::Ghz);
        let t = StateTensor::basis(vec![2, 2, 2], [0, 0, 0]).unwrap();
        assert!(steering_operator(&ghz, &sub(&[0], 3), &t, RankTolerance::Default).is_err());
    }
}
