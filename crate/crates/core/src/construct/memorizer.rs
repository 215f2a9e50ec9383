use super::pl::{build_pl_net, PLScalarFunction};
use crate::coding::CodebookTable;
use crate::error::{Error, Result};
use crate::net::Network;

/// Interpolant through `(key, value)` pairs on `[lo, hi]`: linear between keys,
/// constant before the first key and after the last.
pub fn memorizer_function(pairs: &[(f64, f64)], lo: f64, hi: f64) -> Result<PLScalarFunction> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("empty codebook".into()));
    }
    if pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::InvalidParameter("keys must be strictly increasing".into()));
    }
    let (first, last) = (pairs[0], pairs[pairs.len() - 1]);
    if first.0 < lo || last.0 > hi {
        return Err(Error::InvalidParameter(format!("keys leave the interval [{lo}, {hi}]")));
    }
    let mut xs = Vec::with_capacity(pairs.len() + 2);
    let mut ys = Vec::with_capacity(pairs.len() + 2);
    if lo < first.0 {
        xs.push(lo);
        ys.push(first.1);
    }
    for &(k, v) in pairs {
        xs.push(k);
        ys.push(v);
    }
    if hi > last.0 {
        xs.push(hi);
        ys.push(last.1);
    }
    if xs.len() == 1 {
        // single key filling a degenerate interval
        xs.push(xs[0] + 1.0);
        ys.push(ys[0]);
    }
    Ok(PLScalarFunction::from_points(xs, ys)?.simplified())
}

/// Width-2 ReLU network through every `(key, value)` of `table`.
pub fn build_memorizer_net(table: &CodebookTable, interval: (f64, f64)) -> Result<Network> {
    let pairs: Vec<(f64, f64)> = table.pairs().collect();
    build_memorizer_from_pairs(&pairs, interval)
}

pub fn build_memorizer_from_pairs(pairs: &[(f64, f64)], interval: (f64, f64)) -> Result<Network> {
    build_pl_net(&memorizer_function(pairs, interval.0, interval.1)?)
}
