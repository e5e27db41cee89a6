//! Exact table of one-part monotone Hurwitz numbers `E(n, g) = m_g(n + 1)`.
//!
//! Cells are filled from the linear recurrence
//!
//! ```text
//! (n+1) E(n,g) = 2(2n-1) E(n-1,g) + n^2 (n+1) E(n,g-1)
//! ```
//!
//! starting from the column `E(0,0) = 1`, `E(0,g) = 0` for `g >= 1`.
//! Arithmetic is exact over the rationals; every cell observed so far is an
//! integer, but integrality is reported, never assumed.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// Default binary precision for logarithms of table entries.
pub const LOG_PRECISION: u32 = 128;

/// Significant decimal digits written for real-valued CSV columns.
pub const CSV_DIGITS: usize = 18;

/// Size parameter `n` and genus `g` of a table cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    pub n: usize,
    pub g: usize,
}

impl GridPoint {
    pub fn new(n: usize, g: usize) -> Self {
        GridPoint { n, g }
    }

    /// Number of symbols `d = n + 1`.
    pub fn symbols(&self) -> usize {
        self.n + 1
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n, self.g)
    }
}

/// Exact rational value of one table cell, always in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactValue(Rational);

impl ExactValue {
    pub fn zero() -> Self {
        ExactValue(Rational::new())
    }

    pub fn one() -> Self {
        ExactValue(Rational::from(1))
    }

    pub fn numerator(&self) -> &Integer {
        self.0.numer()
    }

    pub fn denominator(&self) -> &Integer {
        self.0.denom()
    }

    pub fn as_rational(&self) -> &Rational {
        &self.0
    }

    pub fn is_integer(&self) -> bool {
        *self.0.denom() == 1
    }

    pub fn is_positive(&self) -> bool {
        self.0.cmp0() == std::cmp::Ordering::Greater
    }

    /// Natural logarithm at `prec` bits of mantissa.
    pub fn ln(&self, prec: u32) -> Result<Float> {
        if !self.is_positive() {
            return Err(Error::NonPositive);
        }
        // MPFR rounds the integer parts from their leading limbs and exponent,
        // so the result carries full relative precision for any size.
        let num = Float::with_val(prec + 8, self.0.numer()).ln();
        let den = Float::with_val(prec + 8, self.0.denom()).ln();
        Ok(Float::with_val(prec, num - den))
    }
}

impl From<Rational> for ExactValue {
    fn from(r: Rational) -> Self {
        ExactValue(r)
    }
}

impl From<Integer> for ExactValue {
    fn from(i: Integer) -> Self {
        ExactValue(Rational::from(i))
    }
}

impl From<u64> for ExactValue {
    fn from(v: u64) -> Self {
        ExactValue(Rational::from(v))
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Natural logarithm of a positive exact value at [`LOG_PRECISION`] bits.
pub fn log_value(v: &ExactValue) -> Result<Float> {
    v.ln(LOG_PRECISION)
}

/// `(2n)! / ((n+1)! n!)` evaluated directly from factorials.
pub fn catalan_reference(n: usize) -> Integer {
    let n = n as u32;
    let top = Integer::from(Integer::factorial(2 * n));
    let bottom = Integer::from(Integer::factorial(n + 1)) * Integer::from(Integer::factorial(n));
    top.div_exact(&bottom)
}

/// How the table is filled. Both strategies produce identical cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillStrategy {
    /// Column by column in `g`, increasing `n` inside each column.
    #[default]
    Sequential,
    /// Anti-diagonals `n + g = const`, each diagonal evaluated on the
    /// current rayon pool.
    AntiDiagonal,
}

/// Dense row-major table of `E(n, g)` for `0 <= n <= n_max`, `0 <= g <= g_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTable {
    n_max: usize,
    g_max: usize,
    cells: Vec<ExactValue>,
}

/// Builds the table sequentially. See [`build_table_with`].
pub fn build_table(n_max: usize, g_max: usize, cell_cap: u64) -> Result<ExactTable> {
    build_table_with(n_max, g_max, cell_cap, FillStrategy::Sequential)
}

/// Builds the exact table, refusing grids with more than `cell_cap` cells.
pub fn build_table_with(n_max: usize, g_max: usize, cell_cap: u64, strategy: FillStrategy) -> Result<ExactTable> {
    let cells = (n_max as u128 + 1) * (g_max as u128 + 1);
    if cells > cell_cap as u128 {
        return Err(Error::CapExceeded { cells, cap: cell_cap });
    }
    let mut table = ExactTable {
        n_max,
        g_max,
        cells: vec![ExactValue::zero(); cells as usize],
    };
    table.cells[0] = ExactValue::one();

    match strategy {
        FillStrategy::Sequential => {
            for g in 0..=g_max {
                for n in 1..=n_max {
                    let v = table.next_cell(n, g);
                    let idx = table.index(n, g);
                    table.cells[idx] = v;
                }
            }
        }
        FillStrategy::AntiDiagonal => {
            for s in 1..=(n_max + g_max) {
                let lo = s.saturating_sub(g_max).max(1);
                let hi = s.min(n_max);
                if lo > hi {
                    continue;
                }
                let diagonal: Vec<(usize, ExactValue)> = (lo..=hi)
                    .into_par_iter()
                    .map(|n| (table.index(n, s - n), table.next_cell(n, s - n)))
                    .collect();
                for (idx, v) in diagonal {
                    table.cells[idx] = v;
                }
            }
        }
    }
    Ok(table)
}

impl ExactTable {
    fn index(&self, n: usize, g: usize) -> usize {
        n * (self.g_max + 1) + g
    }

    /// One step of the recurrence; requires `(n-1, g)` and `(n, g-1)` filled.
    fn next_cell(&self, n: usize, g: usize) -> ExactValue {
        let left = &self.cells[self.index(n - 1, g)];
        let down = (g > 0).then(|| &self.cells[self.index(n, g - 1)]);
        let n64 = n as u64;
        let a = 2 * (2 * n64 - 1);
        let b = n64 * n64 * (n64 + 1);
        let divisor = n64 + 1;

        let all_integral = left.is_integer() && down.is_none_or(ExactValue::is_integer);
        if all_integral {
            let mut sum = Integer::from(left.numerator() * a);
            if let Some(d) = down {
                sum += d.numerator() * b;
            }
            if sum.is_divisible_u(divisor as u32) {
                sum.div_exact_u_mut(divisor as u32);
                return ExactValue::from(sum);
            }
            return ExactValue(Rational::from((sum, divisor)));
        }

        let mut sum = Rational::from(left.as_rational() * a);
        if let Some(d) = down {
            sum += Rational::from(d.as_rational() * b);
        }
        sum /= divisor;
        ExactValue(sum)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn g_max(&self) -> usize {
        self.g_max
    }

    pub fn contains(&self, p: GridPoint) -> bool {
        p.n <= self.n_max && p.g <= self.g_max
    }

    /// The stored exact value at `p`.
    pub fn entry(&self, p: GridPoint) -> Result<&ExactValue> {
        self.get(p.n, p.g).ok_or(Error::OutOfBounds {
            n: p.n,
            g: p.g,
            n_max: self.n_max,
            g_max: self.g_max,
        })
    }

    pub fn get(&self, n: usize, g: usize) -> Option<&ExactValue> {
        (n <= self.n_max && g <= self.g_max).then(|| &self.cells[self.index(n, g)])
    }

    /// Cells in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (GridPoint, &ExactValue)> + '_ {
        let width = self.g_max + 1;
        self.cells
            .iter()
            .enumerate()
            .map(move |(i, v)| (GridPoint::new(i / width, i % width), v))
    }

    /// Cells whose value is not an integer.
    pub fn non_integral_cells(&self) -> Vec<GridPoint> {
        self.iter().filter(|(_, v)| !v.is_integer()).map(|(p, _)| p).collect()
    }

    /// Writes `n,g,numerator,denominator,log_value` rows in row-major order.
    /// Zero cells carry `-inf` in the log column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "g", "numerator", "denominator", "log_value"])?;
        for (p, v) in self.iter() {
            let log = match v.ln(LOG_PRECISION) {
                Ok(x) => format_float(&x, CSV_DIGITS),
                Err(_) => "-inf".to_string(),
            };
            w.write_record([
                p.n.to_string(),
                p.g.to_string(),
                v.numerator().to_string(),
                v.denominator().to_string(),
                log,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Decimal rendering with `digits` significant digits.
pub fn format_float(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    if x.is_infinite() {
        return if x.is_sign_negative() { "-inf" } else { "inf" }.to_string();
    }
    x.to_string_radix(10, Some(digits))
}
