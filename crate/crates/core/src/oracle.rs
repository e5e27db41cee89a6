//! Direct enumeration of monotone transposition factorizations of long cycles.
//!
//! This is an independent route to `E(n, g)`: it never touches the
//! recurrence. A dynamic program walks over states
//! `(partial product, current maximum)` and appends transpositions whose
//! larger element is at least the current maximum.

use std::collections::HashMap;
use std::io::Write;

use rug::{Integer, Rational};

use crate::error::{Error, Result};
use crate::exact::ExactValue;

/// Largest symbol count the oracle accepts.
pub const MAX_SYMBOLS: usize = 7;
/// Largest factor count the oracle accepts.
pub const MAX_FACTORS: usize = 14;

/// Order in which a tuple of transpositions is multiplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Composition {
    /// `tau_1` acts first, `tau_k` last.
    #[default]
    LeftToRight,
    /// `tau_k` acts first, `tau_1` last.
    RightToLeft,
}

/// Divisor applied to the raw aggregate count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `(d-1)!`, which reproduces `E(1,g) = 1` and the Catalan row.
    #[default]
    FactorialDMinusOne,
    /// `d!`. Off by a factor `d`; kept as a negative control.
    FactorialD,
}

impl Normalization {
    pub fn divisor(self, d: usize) -> Integer {
        let m = match self {
            Normalization::FactorialDMinusOne => d.saturating_sub(1),
            Normalization::FactorialD => d,
        };
        Integer::from(Integer::factorial(m as u32))
    }
}

/// Raw number of monotone `k`-tuples of transpositions on `d` symbols whose
/// product is some `d`-cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleCount {
    pub d: usize,
    pub k: usize,
    pub raw_count: Integer,
}

impl OracleCount {
    pub fn normalized(&self, norm: Normalization) -> ExactValue {
        ExactValue::from(Rational::from((self.raw_count.clone(), norm.divisor(self.d))))
    }
}

fn check_guard(d: usize, k: usize) -> Result<()> {
    if d == 0 || d > MAX_SYMBOLS || k > MAX_FACTORS {
        return Err(Error::GuardExceeded {
            d,
            k,
            max_d: MAX_SYMBOLS,
            max_k: MAX_FACTORS,
        });
    }
    Ok(())
}

/// All permutations of `0..d` together with a lookup from image vector to index.
struct PermutationIndex {
    perms: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
}

impl PermutationIndex {
    fn new(d: usize) -> Self {
        let mut perms = Vec::new();
        let mut current: Vec<u8> = (0..d as u8).collect();
        heap_permutations(d, &mut current, &mut perms);
        perms.sort();
        let lookup = perms.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        PermutationIndex { perms, lookup }
    }

    fn identity(&self) -> usize {
        0
    }

    fn is_long_cycle(&self, idx: usize) -> bool {
        let p = &self.perms[idx];
        let mut len = 1;
        let mut x = p[0] as usize;
        while x != 0 {
            x = p[x] as usize;
            len += 1;
        }
        len == p.len()
    }

    /// Index of the product after appending the transposition `(a b)`.
    fn append(&self, idx: usize, a: usize, b: usize, order: Composition) -> usize {
        let mut p = self.perms[idx].clone();
        match order {
            // the new factor acts after the current product: relabel values
            Composition::LeftToRight => {
                for v in p.iter_mut() {
                    if *v as usize == a {
                        *v = b as u8;
                    } else if *v as usize == b {
                        *v = a as u8;
                    }
                }
            }
            // the new factor acts before the current product: swap positions
            Composition::RightToLeft => p.swap(a, b),
        }
        self.lookup[&p]
    }
}

fn heap_permutations(k: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if k <= 1 {
        out.push(current.clone());
        return;
    }
    for i in 0..k {
        heap_permutations(k - 1, current, out);
        if k.is_multiple_of(2) {
            current.swap(i, k - 1);
        } else {
            current.swap(0, k - 1);
        }
    }
}

/// Counts monotone factorizations of any `d`-cycle into `k` transpositions,
/// composing left to right.
pub fn count_monotone_long_cycle(d: usize, k: usize) -> Result<OracleCount> {
    count_monotone_long_cycle_with(d, k, Composition::LeftToRight)
}

pub fn count_monotone_long_cycle_with(d: usize, k: usize, order: Composition) -> Result<OracleCount> {
    check_guard(d, k)?;
    let index = PermutationIndex::new(d);
    let states = index.perms.len();

    // transpositions (a b), a < b, grouped by their larger element b
    let transpositions: Vec<(usize, usize)> = (1..d).flat_map(|b| (0..b).map(move |a| (a, b))).collect();
    let successor: Vec<Vec<usize>> = (0..states)
        .map(|s| {
            transpositions
                .iter()
                .map(|&(a, b)| index.append(s, a, b, order))
                .collect()
        })
        .collect();

    // dp[perm * d + m]: number of tuples with product perm and current max m
    // (m = 0 before the first factor; larger elements are >= 1)
    let mut dp = vec![0u128; states * d];
    dp[index.identity() * d] = 1;
    for _ in 0..k {
        let mut next = vec![0u128; states * d];
        for perm in 0..states {
            for m in 0..d {
                let c = dp[perm * d + m];
                if c == 0 {
                    continue;
                }
                for (t, &(_, b)) in transpositions.iter().enumerate() {
                    if b >= m {
                        next[successor[perm][t] * d + b] += c;
                    }
                }
            }
        }
        dp = next;
    }

    let total: u128 = (0..states)
        .filter(|&p| index.is_long_cycle(p))
        .map(|p| dp[p * d..(p + 1) * d].iter().sum::<u128>())
        .sum();
    Ok(OracleCount {
        d,
        k,
        raw_count: Integer::from(total),
    })
}

/// `E(n, g)` from enumeration: the raw count for `d = n + 1` symbols and
/// `k = n + 2g` factors, normalized by `(d-1)!`.
pub fn oracle_e(n: usize, g: usize) -> Result<ExactValue> {
    oracle_e_with(n, g, Normalization::default())
}

pub fn oracle_e_with(n: usize, g: usize, norm: Normalization) -> Result<ExactValue> {
    let count = count_monotone_long_cycle(n + 1, n + 2 * g)?;
    Ok(count.normalized(norm))
}

/// Writes `d,k,raw_count,normalized` rows.
pub fn write_counts_csv<W: Write>(counts: &[OracleCount], norm: Normalization, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["d", "k", "raw_count", "normalized"])?;
    for c in counts {
        w.write_record([
            c.d.to_string(),
            c.k.to_string(),
            c.raw_count.to_string(),
            c.normalized(norm).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
