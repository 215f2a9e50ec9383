//! Reference implementation of the quantize / encode / memorize / decode coding
//! scheme. Constructed networks are tested against these functions.
//!
//! A codeword in `C_n` is `m / 2^n` for an integer `0 <= m < 2^n`; the integer
//! `m` is called its index. Indices are exact, and for `n <= 52` so are the `f64`
//! values.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact;
use crate::target::TargetFunction;

/// Cap on `dx*K` and `dy*M`.
pub const MAX_CODE_BITS: u32 = 24;

#[inline]
pub fn pow2(n: i32) -> f64 {
    2f64.powi(n)
}

/// The grid `C_n = {0, 2^-n, ..., 1 - 2^-n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantGrid {
    pub n: u32,
}

impl QuantGrid {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 || n > 52 {
            return Err(Error::InvalidParameter(format!("grid exponent {n} outside 1..=52")));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> u64 {
        1u64 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        pow2(-(self.n as i32))
    }

    pub fn value(&self, m: u64) -> f64 {
        m as f64 * self.spacing()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|m| self.value(m))
    }

    /// Index of `x` if it lies on the grid within `tol`.
    pub fn index_of(&self, x: f64, tol: f64) -> Result<u64> {
        let scaled = x * pow2(self.n as i32);
        let m = scaled.round();
        if !x.is_finite() || (scaled - m).abs() * self.spacing() > tol || m < 0.0 || m >= self.len() as f64 {
            return Err(Error::OffGrid(x));
        }
        Ok(m as u64)
    }
}

fn check_unit(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain { value: x, domain: "[0,1]".into() });
    }
    Ok(())
}

/// Index of `q_n(x)`: `floor(x 2^n)`, with `x = 1` sent to `2^n - 1`.
pub fn quantize_index(x: f64, n: u32) -> Result<u64> {
    check_unit(x)?;
    let m = (x * pow2(n as i32)).floor() as u64;
    Ok(m.min((1u64 << n) - 1))
}

/// `q_n(x)`: the largest point of `C_n` not exceeding `x`.
pub fn quantize(x: f64, n: u32) -> Result<f64> {
    Ok(quantize_index(x, n)? as f64 * pow2(-(n as i32)))
}

/// Index (in `C_{dx K}`) of `encode_K(x)`.
pub fn encode_index(x: &[f64], k: u32) -> Result<u64> {
    let bits = x.len() as u32 * k;
    if bits > 63 {
        return Err(Error::Budget(format!("dx*K = {bits} bits")));
    }
    let mut idx = 0u64;
    for xi in x {
        idx = (idx << k) | quantize_index(*xi, k)?;
    }
    Ok(idx)
}

/// `encode_K(x) = sum_i q_K(x_i) 2^{-(i-1)K}`.
pub fn encode(x: &[f64], k: u32) -> Result<f64> {
    let bits = (x.len() as u32 * k) as i32;
    Ok(encode_index(x, k)? as f64 * pow2(-bits))
}

/// Splits a codeword index of `C_{dy M}` into `dy` indices of `C_M`.
pub fn decode_index(idx: u64, m: u32, dy: usize) -> Vec<u64> {
    let mask = (1u64 << m) - 1;
    (0..dy).rev().map(|i| (idx >> (i as u32 * m)) & mask).collect()
}

/// `decode_M(c)`: the unique `v` in `C_M^dy` with `encode_M(v) = c`.
pub fn decode(c: f64, m: u32, dy: usize) -> Result<Vec<f64>> {
    let bits = dy as u32 * m;
    let grid = QuantGrid::new(bits)?;
    let idx = grid.index_of(c, pow2(-(bits as i32 + 4)))?;
    let h = pow2(-(m as i32));
    Ok(decode_index(idx, m, dy).into_iter().map(|v| v as f64 * h).collect())
}

/// `L 2^-K + 2^-M`.
pub fn error_budget(lipschitz: f64, k: u32, m: u32) -> f64 {
    lipschitz * pow2(-(k as i32)) + pow2(-(m as i32))
}

/// The memorize map, stored densely: the key set is all of `C_{dx K}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodebookTable {
    pub dx: usize,
    pub dy: usize,
    pub k: u32,
    pub m: u32,
    entries: Vec<u64>,
}

impl CodebookTable {
    pub fn from_entries(dx: usize, dy: usize, k: u32, m: u32, entries: Vec<u64>) -> Result<Self> {
        check_budget(dx, dy, k, m)?;
        if entries.len() as u64 != 1u64 << (dx as u32 * k) {
            return Err(Error::InvalidParameter(format!(
                "{} entries for a {}-bit key space",
                entries.len(),
                dx as u32 * k
            )));
        }
        let cap = 1u64 << (dy as u32 * m);
        if entries.iter().any(|e| *e >= cap) {
            return Err(Error::InvalidParameter("output codeword outside the grid".into()));
        }
        Ok(Self { dx, dy, k, m, entries })
    }

    pub fn key_bits(&self) -> u32 {
        self.dx as u32 * self.k
    }

    pub fn value_bits(&self) -> u32 {
        self.dy as u32 * self.m
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn key(&self, idx: u64) -> f64 {
        idx as f64 * pow2(-(self.key_bits() as i32))
    }

    pub fn value_index(&self, key_idx: u64) -> u64 {
        self.entries[key_idx as usize]
    }

    pub fn value(&self, key_idx: u64) -> f64 {
        self.entries[key_idx as usize] as f64 * pow2(-(self.value_bits() as i32))
    }

    /// `(key, value)` pairs in increasing key order.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.entries.len() as u64).map(|i| (self.key(i), self.value(i)))
    }

    pub fn lookup(&self, codeword: f64) -> Result<f64> {
        let grid = QuantGrid::new(self.key_bits())?;
        let idx = grid.index_of(codeword, pow2(-(self.key_bits() as i32 + 4)))?;
        Ok(self.value(idx))
    }

    /// Copy with one entry replaced.
    pub fn with_entry(&self, key_idx: u64, value_idx: u64) -> Self {
        let mut t = self.clone();
        t.entries[key_idx as usize] = value_idx;
        t
    }

    /// CSV with exact decimal codewords.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["input_codeword", "output_codeword"])?;
        for (i, v) in self.entries.iter().enumerate() {
            wtr.write_record([
                exact::dyadic_decimal(i as u64, self.key_bits()),
                exact::dyadic_decimal(*v, self.value_bits()),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn check_budget(dx: usize, dy: usize, k: u32, m: u32) -> Result<()> {
    if k == 0 || m == 0 {
        return Err(Error::InvalidParameter("K and M must be positive".into()));
    }
    if dx as u32 * k > MAX_CODE_BITS {
        return Err(Error::Budget(format!("dx*K = {} > {MAX_CODE_BITS}", dx as u32 * k)));
    }
    if dy as u32 * m > MAX_CODE_BITS {
        return Err(Error::Budget(format!("dy*M = {} > {MAX_CODE_BITS}", dy as u32 * m)));
    }
    Ok(())
}

/// Tabulates `c -> encode_M(clip(f*(decode_K(c))))` over every key.
pub fn build_codebook(f: &TargetFunction, k: u32, m: u32) -> Result<CodebookTable> {
    let (dx, dy) = (f.dx(), f.dy());
    check_budget(dx, dy, k, m)?;
    if !f.is_unit_cube() {
        return Err(Error::InvalidParameter(format!("{} is not defined on the unit cube", f.name())));
    }
    let n = 1u64 << (dx as u32 * k);
    let h = pow2(-(k as i32));
    let entries = (0..n)
        .into_par_iter()
        .map(|idx| {
            let v: Vec<f64> = decode_index(idx, k, dx).into_iter().map(|c| c as f64 * h).collect();
            let y = f.evaluate(&v)?;
            let clipped: Vec<f64> = y.iter().map(|t| t.clamp(0.0, 1.0)).collect();
            encode_index(&clipped, m)
        })
        .collect::<Result<Vec<u64>>>()?;
    CodebookTable::from_entries(dx, dy, k, m, entries)
}

/// The full coding scheme `decode_M(memorize(encode_K(x)))`, i.e. `q_M(clip(f*(q_K(x))))`.
pub fn coding_scheme(table: &CodebookTable, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != table.dx {
        return Err(Error::DimensionMismatch { expected: table.dx, got: x.len() });
    }
    let key = encode_index(x, table.k)?;
    let h = pow2(-(table.m as i32));
    Ok(decode_index(table.value_index(key), table.m, table.dy).into_iter().map(|v| v as f64 * h).collect())
}
