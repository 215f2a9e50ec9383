//! Width `dx+1` ReLU encoder: `encode_K` off a small exceptional set, a constant
//! sentinel off the unit cube.

use serde::Serialize;

use super::clamp::build_clamp_net;
use super::staircase::{build_staircase_pair_net, in_ramp};
use crate::coding::{pow2, MAX_CODE_BITS};
use crate::error::{Error, Result};
use crate::net::builder::unit;
use crate::net::{NetBuilder, Network};

#[derive(Debug, Clone)]
pub struct EncoderArtifacts {
    pub net: Network,
    pub dx: usize,
    pub k: u32,
    pub gamma: f64,
    pub alpha: f64,
    pub delta: f64,
    /// Output on every input outside `[0,1]^dx`: `1 - 2^-(dx K)`.
    pub sentinel: f64,
    /// `dx 2 alpha + dx 2^K delta`, an upper bound on the measure of [`Self::excluded`].
    pub measure_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcludedSet {
    pub margin: f64,
    pub ramp_width: f64,
    pub ramp_bits: u32,
    pub description: String,
}

impl EncoderArtifacts {
    /// Membership in the exceptional set: outside `[alpha, 1-alpha]^dx`, or some
    /// coordinate inside a quantizer ramp.
    pub fn is_excluded(&self, x: &[f64]) -> bool {
        x.iter().any(|&t| t < self.alpha || t > 1.0 - self.alpha || in_ramp(t, self.k, self.delta))
    }

    pub fn excluded(&self) -> ExcludedSet {
        ExcludedSet {
            margin: self.alpha,
            ramp_width: self.delta,
            ramp_bits: self.k,
            description: format!(
                "([0,1]^{dx} minus [{a}, 1-{a}]^{dx}) union {{x : some x_i in (j 2^-{k} - {d}, j 2^-{k}), 1 <= j < 2^{k}}}",
                dx = self.dx,
                a = self.alpha,
                k = self.k,
                d = self.delta
            ),
        }
    }
}

/// Largest `2^-j` strictly below `bound`.
fn dyadic_below(bound: f64) -> f64 {
    let mut v = 0.5;
    while v >= bound {
        v /= 2.0;
    }
    v
}

/// Default `(alpha, delta)`: each half of the exceptional measure stays below `gamma / 2`.
pub fn default_encoder_parameters(dx: usize, k: u32, gamma: f64) -> (f64, f64) {
    let n = dx as f64;
    let alpha = dyadic_below(gamma / (4.0 * n)).min(0.25);
    let delta = dyadic_below(gamma / (2.0 * n * pow2(k as i32))).min(pow2(-((dx as u32 * k + 6) as i32)));
    (alpha, delta)
}

pub fn build_relu_encoder_net(
    dx: usize,
    k: u32,
    alpha: Option<f64>,
    delta: Option<f64>,
    gamma: f64,
) -> Result<EncoderArtifacts> {
    if dx == 0 || k == 0 {
        return Err(Error::InvalidParameter("dx and K must be positive".into()));
    }
    if dx as u32 * k > MAX_CODE_BITS {
        return Err(Error::Budget(format!("dx*K = {} > {MAX_CODE_BITS}", dx as u32 * k)));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!("gamma {gamma} outside (0, 1]")));
    }
    let (da, dd) = default_encoder_parameters(dx, k, gamma);
    let alpha = alpha.unwrap_or(da);
    let delta = delta.unwrap_or(dd);
    let n = dx as f64;
    let measure_bound = n * 2.0 * alpha + n * pow2(k as i32) * delta;
    if measure_bound >= gamma {
        return Err(Error::InvalidParameter(format!(
            "alpha={alpha}, delta={delta} give exceptional measure bound {measure_bound} >= gamma={gamma}"
        )));
    }
    let clamp = build_clamp_net(dx, alpha)?;
    let stair = build_staircase_pair_net(k, delta)?;
    let mut b = NetBuilder::new(dx);
    b.embed(&clamp, &(0..dx).collect::<Vec<_>>(), &[]);
    for i in 0..dx {
        let carry: Vec<(usize, f64)> = (0..dx).filter(|j| *j != i).map(|j| (j, 0.0)).collect();
        b.embed(&stair, &[i], &carry);
        // [carried..., s, r] -> original order with s in slot i
        let rows: Vec<Vec<f64>> = (0..dx)
            .map(|j| {
                let pos = if j == i { dx - 1 } else if j < i { j } else { j - 1 };
                unit(dx + 1, pos)
            })
            .collect();
        b.affine(&rows, &vec![0.0; dx]);
    }
    let weights: Vec<f64> = (0..dx).map(|i| pow2(-((i as u32 * k) as i32))).collect();
    b.affine(&[weights], &[0.0]);
    let net = b.build()?;
    Ok(EncoderArtifacts {
        net,
        dx,
        k,
        gamma,
        alpha,
        delta,
        sentinel: 1.0 - pow2(-((dx as u32 * k) as i32)),
        measure_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::encode;

    #[test]
    fn examples() {
        let enc = build_relu_encoder_net(2, 3, None, None, 0.01).unwrap();
        assert_eq!(enc.net.width(), 3);
        assert_eq!(enc.sentinel, 0.984375);
        let y = enc.net.forward(&[0.5, 0.3])[0];
        assert!((y - encode(&[0.5, 0.3], 3).unwrap()).abs() <= 1e-9);
        assert_eq!(enc.net.forward(&[2.0, 0.5]), vec![0.984375]);
        assert_eq!(enc.net.forward(&[0.5, -1e-3]), vec![0.984375]);
    }

    #[test]
    fn default_parameters_fit_gamma() {
        for (dx, k, gamma) in [(1, 1, 0.5), (2, 4, 0.001), (3, 5, 0.05)] {
            let (a, d) = default_encoder_parameters(dx, k, gamma);
            let n = dx as f64;
            assert!(2.0 * a * n < gamma / 2.0 && n * pow2(k as i32) * d < gamma / 2.0);
            assert!(d < pow2(-(k as i32)));
        }
    }

    #[test]
    fn infeasible_parameters() {
        assert!(build_relu_encoder_net(2, 3, Some(0.1), None, 0.01).is_err());
        assert!(build_relu_encoder_net(2, 3, None, Some(0.01), 0.01).is_err());
    }
}
