//! Symbol sequences over `{L, R}`.
//!
//! Indices are always reduced modulo the sequence length, so negative and
//! out-of-range indices are valid everywhere. The operators follow the usual
//! conventions:
//!
//! * `cyclic(i)`: `(σ_i S)_j = S_{i+j}` (written `S^{(i)}`)
//! * `flip(i)`: swap `L`/`R` at index `i` (written `S^{ī}`)
//! * `mult_perm(i)`: `(π_i S)_j = S_{ij}`
//!
//! A rotational sequence `S[l,m,n]` is the itinerary of a rigid rotation by
//! `m/n` with `l` of its `n` points to the left of the switching line.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    L,
    R,
}

impl Symbol {
    pub fn flipped(self) -> Symbol {
        match self {
            Symbol::L => Symbol::R,
            Symbol::R => Symbol::L,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Symbol::L => 'L',
            Symbol::R => 'R',
        }
    }

    pub fn from_char(c: char) -> Option<Symbol> {
        match c {
            'L' => Some(Symbol::L),
            'R' => Some(Symbol::R),
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Non-empty finite word over `{L, R}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolSequence {
    symbols: Vec<Symbol>,
}

/// Result of [`SymbolSequence::mult_perm`]. `invertible` is false when the
/// multiplier shares a factor with `n`, in which case `π_i` is not a
/// permutation and information has been lost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultPermuted {
    pub sequence: SymbolSequence,
    pub invertible: bool,
}

impl SymbolSequence {
    pub fn new(symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::BadSequence("empty sequence".into()));
        }
        Ok(SymbolSequence { symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    /// Always false; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// Reduces `i` into `0..n`.
    pub fn wrap(&self, i: i64) -> usize {
        i.rem_euclid(self.len() as i64) as usize
    }

    pub fn get(&self, i: i64) -> Symbol {
        self.symbols[self.wrap(i)]
    }

    pub fn count_l(&self) -> usize {
        self.symbols.iter().filter(|&&s| s == Symbol::L).count()
    }

    pub fn cyclic(&self, i: i64) -> SymbolSequence {
        let n = self.len() as i64;
        let symbols = (0..n).map(|j| self.get(i + j)).collect();
        SymbolSequence { symbols }
    }

    pub fn flip(&self, i: i64) -> SymbolSequence {
        let mut symbols = self.symbols.clone();
        let k = self.wrap(i);
        symbols[k] = symbols[k].flipped();
        SymbolSequence { symbols }
    }

    pub fn mult_perm(&self, i: i64) -> MultPermuted {
        let n = self.len() as i64;
        let symbols = (0..n).map(|j| self.get(i * j)).collect();
        MultPermuted {
            sequence: SymbolSequence { symbols },
            invertible: gcd(i.rem_euclid(n), n) == 1,
        }
    }

    pub fn concat(&self, other: &SymbolSequence) -> SymbolSequence {
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&other.symbols);
        SymbolSequence { symbols }
    }

    /// `k` concatenated copies. Panics if `k == 0`.
    pub fn power(&self, k: usize) -> SymbolSequence {
        assert!(k >= 1, "power requires k >= 1");
        SymbolSequence {
            symbols: self.symbols.repeat(k),
        }
    }

    pub fn is_primitive(&self) -> bool {
        let n = self.len();
        (1..n).all(|i| (0..n).any(|j| self.symbols[j] != self.symbols[(i + j) % n]))
    }

    /// Smallest `i ≥ 0` with `other == self^{(i)}`, if any.
    pub fn cyclic_shift_to(&self, other: &SymbolSequence) -> Option<usize> {
        let n = self.len();
        if other.len() != n {
            return None;
        }
        (0..n).find(|&i| (0..n).all(|j| self.symbols[(i + j) % n] == other.symbols[j]))
    }

    pub fn is_cyclic_permutation_of(&self, other: &SymbolSequence) -> bool {
        self.cyclic_shift_to(other).is_some()
    }
}

impl fmt::Display for SymbolSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.symbols {
            write!(f, "{}", s.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for SymbolSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let symbols = s
            .chars()
            .map(|c| {
                Symbol::from_char(c).ok_or_else(|| {
                    Error::BadSequence(format!("unexpected character {c:?} in {s:?}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SymbolSequence::new(symbols)
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `d ∈ [1, n−1]` with `d·m ≡ 1 (mod n)`.
pub fn mod_inverse(m: i64, n: i64) -> Result<i64> {
    if n < 2 || gcd(m, n) != 1 {
        return Err(Error::NotCoprime { m, n });
    }
    // extended Euclid
    let (mut r0, mut r1) = (m.rem_euclid(n), n);
    let (mut s0, mut s1) = (1i64, 0i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    Ok(s0.rem_euclid(n))
}

/// Validated `(l, m, n)` together with `d = m⁻¹ mod n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RotationalParams {
    pub l: i64,
    pub m: i64,
    pub n: i64,
    pub d: i64,
}

impl RotationalParams {
    pub fn new(l: i64, m: i64, n: i64) -> Result<Self> {
        if n < 2 || m < 1 || m >= n {
            return Err(Error::NotCoprime { m, n });
        }
        let d = mod_inverse(m, n)?;
        if l < 1 || l > n - 1 {
            return Err(Error::BadL { l, max: n - 1 });
        }
        Ok(RotationalParams { l, m, n, d })
    }

    pub fn sequence(&self) -> SymbolSequence {
        let n = self.n;
        let mut symbols = vec![Symbol::R; n as usize];
        for i in 0..self.l {
            symbols[(i * self.d).rem_euclid(n) as usize] = Symbol::L;
        }
        SymbolSequence { symbols }
    }

    /// `1 < l < n−1`: the shrinking points of this sequence are non-terminating.
    pub fn is_interior(&self) -> bool {
        self.l > 1 && self.l < self.n - 1
    }
}

impl fmt::Display for RotationalParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S[{},{},{}]", self.l, self.m, self.n)
    }
}

/// `S[l,m,n]`: `S_{id} = L` for `i = 0..l−1`, `R` otherwise.
pub fn rotational(l: i64, m: i64, n: i64) -> Result<SymbolSequence> {
    Ok(RotationalParams::new(l, m, n)?.sequence())
}

/// Recovers `(l, m, n)` when `s` is a cyclic permutation of a rotational
/// sequence. The representative has `m < n/2` (for `n > 2`); for
/// `l ∈ {1, n−1}` every `m` gives the same class and `m = 1` is returned.
pub fn rotational_params(s: &SymbolSequence) -> Option<RotationalParams> {
    let n = s.len() as i64;
    if n < 2 {
        return None;
    }
    let l = s.count_l() as i64;
    if l == 0 || l == n {
        return None;
    }
    (1..n)
        .filter(|&m| gcd(m, n) == 1 && (2 * m < n || n == 2))
        .filter_map(|m| RotationalParams::new(l, m, n).ok())
        .find(|p| p.sequence().is_cyclic_permutation_of(s))
}

fn prime_factors(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Möbius function. Panics if `n == 0`.
pub fn mobius(n: u64) -> i64 {
    assert!(n >= 1);
    let f = prime_factors(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Euler's totient, with `φ(1) = 1`. Panics if `n == 0`.
pub fn totient(n: u64) -> u64 {
    assert!(n >= 1);
    prime_factors(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

/// Number of primitive binary words of length `n` up to rotation (binary
/// Lyndon words). Panics unless `1 ≤ n ≤ 120`.
pub fn count_primitive(n: u64) -> u128 {
    assert!(
        (1..=120).contains(&n),
        "count_primitive supports 1 <= n <= 120"
    );
    let sum: i128 = (1..=n)
        .filter(|a| n % a == 0)
        .map(|a| mobius(n / a) as i128 * (1i128 << a))
        .sum();
    (sum / n as i128) as u128
}

/// Number of distinct rotational sequences of length `n` up to rotation.
pub fn count_rotational(n: u64) -> u64 {
    match n {
        0 => panic!("count_rotational requires n >= 1"),
        1 => 0,
        2 => 1,
        _ => 2 + (n - 3) * totient(n) / 2,
    }
}
