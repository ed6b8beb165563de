//! Pairing functions `N × N → N` with `j(a, b) ≥ max(a, b)`, and the
//! disjunctive support pattern they induce on 3- and 4-index tensors.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingFn {
    /// `j(a, b) = 2^a · 3^b`; injective, never 0.
    Injection2a3b,
    /// Binary interleave: bit `k` of `a` lands at bit `2k`, bit `k` of `b`
    /// at bit `2k + 1`. A bijection.
    BijectionInterleave,
}

impl PairingFn {
    pub fn name(&self) -> &'static str {
        match self {
            PairingFn::Injection2a3b => "injection_2a3b",
            PairingFn::BijectionInterleave => "bijection_interleave",
        }
    }

    /// `None` when the value does not fit in 64 bits.
    pub fn try_eval(&self, a: u64, b: u64) -> Option<u64> {
        match self {
            PairingFn::Injection2a3b => {
                let p2 = 2u64.checked_pow(u32::try_from(a).ok()?)?;
                let p3 = 3u64.checked_pow(u32::try_from(b).ok()?)?;
                p2.checked_mul(p3)
            }
            PairingFn::BijectionInterleave => {
                if a > u32::MAX as u64 || b > u32::MAX as u64 {
                    return None;
                }
                Some(spread_bits(a as u32) | (spread_bits(b as u32) << 1))
            }
        }
    }

    pub fn eval(&self, a: u64, b: u64) -> Result<u64> {
        self.try_eval(a, b).ok_or(Error::PairingOverflow { a, b })
    }

    /// Preimage of `value`, if any.
    pub fn invert(&self, value: u64) -> Option<(u64, u64)> {
        match self {
            PairingFn::Injection2a3b => {
                if value == 0 {
                    return None;
                }
                let a = value.trailing_zeros() as u64;
                let mut rest = value >> a;
                let mut b = 0;
                while rest.is_multiple_of(3) {
                    rest /= 3;
                    b += 1;
                }
                (rest == 1).then_some((a, b))
            }
            PairingFn::BijectionInterleave => {
                Some((gather_bits(value) as u64, gather_bits(value >> 1) as u64))
            }
        }
    }
}

impl fmt::Display for PairingFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PairingFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "injection_2a3b" => Ok(PairingFn::Injection2a3b),
            "bijection_interleave" => Ok(PairingFn::BijectionInterleave),
            other => Err(Error::InvalidParams(format!("unknown pairing function '{other}'"))),
        }
    }
}

/// Moves bit `k` of `x` to bit `2k`.
fn spread_bits(x: u32) -> u64 {
    let mut x = x as u64;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555;
    x
}

/// Inverse of [`spread_bits`] on the even bits of `x`.
fn gather_bits(x: u64) -> u32 {
    let mut x = x & 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x >> 4)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x >> 8)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x >> 16)) & 0x0000_0000_FFFF_FFFF;
    x as u32
}

pub fn pairing_eval(j: PairingFn, a: u64, b: u64) -> Result<u64> {
    j.eval(a, b)
}

/// The value coordinate `axis` must take for `idx` to be on the support:
/// `j(x, y)` for arity 3 and `j(x, j(y, z))` for arity 4, with `x, y, z`
/// the other coordinates in axis order. `None` when it exceeds 64 bits.
pub(crate) fn pattern_value(idx: &[u64], axis: usize, j: PairingFn) -> Option<u64> {
    let others: Vec<u64> = idx
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != axis)
        .map(|(_, &c)| c)
        .collect();
    match others.as_slice() {
        [x, y] => j.try_eval(*x, *y),
        [x, y, z] => j.try_eval(*x, j.try_eval(*y, *z)?),
        _ => None,
    }
}

/// Whether `idx` lies on the support: some coordinate equals the pairing
/// of the others (nested for 4 indices).
pub fn support_test(idx: &[usize], j: PairingFn) -> Result<bool> {
    if !(3..=4).contains(&idx.len()) {
        return Err(Error::UnsupportedArity(idx.len()));
    }
    let idx: Vec<u64> = idx.iter().map(|&c| c as u64).collect();
    Ok((0..idx.len()).any(|axis| pattern_value(&idx, axis, j) == Some(idx[axis])))
}
