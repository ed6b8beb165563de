//! Named example states.
//!
//! Spin-1/2 factors use the `σ_z` basis with `|+1⟩` at index 0 and `|−1⟩`
//! at index 1. Spin-1 factors use the orthonormal null-eigenvector basis
//! `(|S_y=0⟩, |S_x=0⟩, |S_z=0⟩)` at indices `(0, 1, 2)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::Error;
use crate::state::{MultiIndex, StateTensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PaperState {
    /// `(|+−⟩ + |−+⟩)/√2`.
    Bohm,
    /// Two-particle Hardy state; in the z basis `(|+−⟩ + |−+⟩ + |−−⟩)/√3`.
    Hardy2,
    /// `(|y y⟩ − |x x⟩ − |z z⟩)/√3` on two spin-1 particles.
    Spin1Singlet,
    /// `(|y y⟩ − |x x⟩)/√2` on two spin-1 particles.
    Spin1TwoTerm,
    /// `(|+++⟩ + |−−−⟩)/√2`.
    Ghz,
    /// Three-particle Hardy state; every z-basis product except `|+++⟩`
    /// with amplitude `1/√7`.
    Hardy3,
}

impl PaperState {
    pub const ALL: [PaperState; 6] = [
        PaperState::Bohm,
        PaperState::Hardy2,
        PaperState::Spin1Singlet,
        PaperState::Spin1TwoTerm,
        PaperState::Ghz,
        PaperState::Hardy3,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PaperState::Bohm => "bohm",
            PaperState::Hardy2 => "hardy2",
            PaperState::Spin1Singlet => "spin1_singlet",
            PaperState::Spin1TwoTerm => "spin1_two_term",
            PaperState::Ghz => "ghz",
            PaperState::Hardy3 => "hardy3",
        }
    }
}

impl fmt::Display for PaperState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PaperState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PaperState::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownState(s.to_string()))
    }
}

/// Looks a corpus state up by name.
pub fn paper_state_by_name(name: &str) -> crate::Result<StateTensor> {
    Ok(paper_state(name.parse()?))
}

pub fn paper_state(which: PaperState) -> StateTensor {
    let (dims, terms): (Vec<usize>, Vec<(Vec<usize>, f64)>) = match which {
        PaperState::Bohm => (vec![2, 2], vec![(vec![0, 1], 1.0), (vec![1, 0], 1.0)]),
        // 2|x+ x+⟩ − |z+ z+⟩ with |x+⟩ = (|z+⟩ + |z−⟩)/√2.
        PaperState::Hardy2 => (
            vec![2, 2],
            vec![(vec![0, 1], 1.0), (vec![1, 0], 1.0), (vec![1, 1], 1.0)],
        ),
        PaperState::Spin1Singlet => (
            vec![3, 3],
            vec![(vec![0, 0], 1.0), (vec![1, 1], -1.0), (vec![2, 2], -1.0)],
        ),
        PaperState::Spin1TwoTerm => (vec![3, 3], vec![(vec![0, 0], 1.0), (vec![1, 1], -1.0)]),
        PaperState::Ghz => (vec![2, 2, 2], vec![(vec![0, 0, 0], 1.0), (vec![1, 1, 1], 1.0)]),
        // 2^{3/2}|x+x+x+⟩ − |z+z+z+⟩: the |x+⟩ expansion contributes 1 to each
        // of the eight z products and the second term cancels |+++⟩.
        PaperState::Hardy3 => (
            vec![2, 2, 2],
            (1..8)
                .map(|k| (vec![(k >> 2) & 1, (k >> 1) & 1, k & 1], 1.0))
                .collect(),
        ),
    };
    let entries = terms
        .into_iter()
        .map(|(idx, a)| (MultiIndex(idx), Complex64::new(a, 0.0)));
    StateTensor::new(dims, entries, true).expect("corpus states are valid")
}
