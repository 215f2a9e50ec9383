//! Full approximators: decoder ∘ memorizer ∘ encoder.

use serde::Serialize;

use super::encoder::{build_relu_encoder_net, EncoderArtifacts};
use super::memorizer::build_memorizer_net;
use super::quantizer::build_step_encoder_net;
use super::staircase::{build_decoder_net, default_decoder_delta};
use crate::coding::{build_codebook, pow2, CodebookTable};
use crate::error::{Error, Result};
use crate::net::Network;
use crate::target::TargetFunction;

/// ReLU+Step network of width `max(dx+1, dy)` computing `q_M(clip(f*(q_K(x))))`
/// on the unit cube.
pub fn assemble_uniform_net(f: &TargetFunction, k: u32, m: u32) -> Result<Network> {
    let table = build_codebook(f, k, m)?;
    assemble_uniform_from_table(&table)
}

pub fn assemble_uniform_from_table(table: &CodebookTable) -> Result<Network> {
    let enc = build_step_encoder_net(table.dx, table.k)?;
    let mem = build_memorizer_net(table, (0.0, 1.0))?;
    let dec = build_decoder_net(table.dy, table.m, default_decoder_delta(table.dy, table.m))?;
    Network::compose(&Network::compose(&enc, &mem)?, &dec)
}

/// Region `[1-2^-K, 1]^dx` whose codeword coincides with the sentinel and is
/// therefore sent to zero as well.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroedRegion {
    pub lower: f64,
    pub upper: f64,
    pub dims: usize,
    pub measure: f64,
}

#[derive(Debug, Clone)]
pub struct LpArtifacts {
    pub net: Network,
    pub encoder: EncoderArtifacts,
    pub table: CodebookTable,
    pub p: f64,
    pub analytic_bound: f64,
    pub zeroed: ZeroedRegion,
}

/// `(dy (L 2^-K + 2^-M)^p + (2^-(dx K) + gamma) (2 dy^(1/p))^p)^(1/p)`.
pub fn lp_analytic_bound(dx: usize, dy: usize, lipschitz: f64, k: u32, m: u32, gamma: f64, p: f64) -> f64 {
    let dyf = dy as f64;
    let good = dyf * (lipschitz * pow2(-(k as i32)) + pow2(-(m as i32))).powf(p);
    let bad = (pow2(-((dx as u32 * k) as i32)) + gamma) * (2.0 * dyf.powf(1.0 / p)).powf(p);
    (good + bad).powf(1.0 / p)
}

/// ReLU network of width `max(dx+1, dy)` approximating `f*` in `L^p([0,1]^dx)` and
/// returning zero outside the unit cube.
pub fn assemble_lp_net(f: &TargetFunction, k: u32, m: u32, gamma: f64, p: f64) -> Result<LpArtifacts> {
    assemble_lp_net_with(f, k, m, gamma, p, None, None)
}

pub fn assemble_lp_net_with(
    f: &TargetFunction,
    k: u32,
    m: u32,
    gamma: f64,
    p: f64,
    alpha: Option<f64>,
    delta: Option<f64>,
) -> Result<LpArtifacts> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [1, inf)")));
    }
    let encoder = build_relu_encoder_net(f.dx(), k, alpha, delta, gamma)?;
    let table = build_codebook(f, k, m)?;
    let sentinel_key = table.len() as u64 - 1;
    debug_assert_eq!(table.key(sentinel_key), encoder.sentinel);
    let table = table.with_entry(sentinel_key, 0);
    let mem = build_memorizer_net(&table, (0.0, 1.0))?;
    let dec = build_decoder_net(f.dy(), m, default_decoder_delta(f.dy(), m))?;
    let net = Network::compose(&Network::compose(&encoder.net, &mem)?, &dec)?;
    let lower = 1.0 - pow2(-(k as i32));
    Ok(LpArtifacts {
        net,
        p,
        analytic_bound: lp_analytic_bound(f.dx(), f.dy(), f.lipschitz(), k, m, gamma, p),
        zeroed: ZeroedRegion {
            lower,
            upper: 1.0,
            dims: f.dx(),
            measure: pow2(-((f.dx() as u32 * k) as i32)),
        },
        encoder,
        table,
    })
}
