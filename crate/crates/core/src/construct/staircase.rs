//! Width-2 ReLU staircase `x -> (q_M(x), 2^M (x - q_M(x)))` and the decoder built from it.

use crate::coding::{pow2, MAX_CODE_BITS};
use crate::error::{Error, Result};
use crate::net::{NetBuilder, Network, Neuron};

/// Union of the ramps `(i 2^-M - delta, i 2^-M)`, `i = 1..2^M-1`, where the
/// staircase differs from `q_M`.
pub fn in_ramp(x: f64, m: u32, delta: f64) -> bool {
    let scaled = x * pow2(m as i32);
    let i = scaled.ceil();
    i >= 1.0 && i < pow2(m as i32) && x < i * pow2(-(m as i32)) && x > i * pow2(-(m as i32)) - delta
}

/// Appends `clip(v) = 1 - relu(1 - relu(v))` for a single current value.
pub(crate) fn clip_layers(b: &mut NetBuilder) {
    b.layer(vec![Neuron::relu(vec![1.0], 0.0)]);
    b.layer(vec![Neuron::relu(vec![-1.0], 1.0)]);
    b.affine(&[vec![-1.0]], &[1.0]);
}

/// Width-2 ReLU network with output `(q_M(x), 2^M (x - q_M(x)))` on
/// `[0,1]` minus the ramps, and range inside `[0, 1-2^-M] x [0, 1]` everywhere.
///
/// After clipping, a level function `s` is grown one step at a time:
///
/// ```text
/// s_1 = 0
/// s_{l+1} = min(l h, max(ramp_l(x), s_l))
/// ramp_l(x) = (h / delta) (x - l h + delta) + (l-1) h
/// ```
///
/// Each max/min occupies one layer of two neurons, the first of which carries `x`.
pub fn build_staircase_pair_net(m: u32, delta: f64) -> Result<Network> {
    if m == 0 || m > 16 {
        return Err(Error::InvalidParameter(format!("staircase M = {m} outside 1..=16")));
    }
    let h = pow2(-(m as i32));
    if !(delta > 0.0 && delta < h) {
        return Err(Error::InvalidParameter(format!("delta {delta} outside (0, 2^-{m})")));
    }
    let mut b = NetBuilder::new(1);
    clip_layers(&mut b);
    // current values: [x, s]
    b.affine(&[vec![1.0], vec![0.0]], &[0.0, 0.0]);
    let slope = h / delta;
    for l in 1..(1u64 << m) {
        let lh = l as f64 * h;
        // ramp(x) = slope x + c
        let c = slope * (delta - lh) + lh - h;
        // s = ramp(x) + relu(s - ramp(x))
        b.layer(vec![Neuron::relu(vec![1.0, 0.0], 0.0), Neuron::relu(vec![-slope, 1.0], -c)]);
        b.affine(&[vec![1.0, 0.0], vec![slope, 1.0]], &[0.0, c]);
        // s = lh - relu(lh - s)
        b.layer(vec![Neuron::relu(vec![1.0, 0.0], 0.0), Neuron::relu(vec![0.0, -1.0], lh)]);
        b.affine(&[vec![1.0, 0.0], vec![0.0, -1.0]], &[0.0, lh]);
    }
    let scale = pow2(m as i32);
    b.affine(&[vec![0.0, 1.0], vec![scale, -scale]], &[0.0, 0.0]);
    b.build()
}

/// Default staircase ramp width for a decoder, `2^-(dy M + 6)`.
pub fn default_decoder_delta(dy: usize, m: u32) -> f64 {
    pow2(-((dy as u32 * m + 6) as i32))
}

/// Width-`dy` ReLU network equal to `decode_M` on `C_{dy M}` with range in `[0,1]^dy`.
///
/// `dy - 1` staircase stages peel one `M`-bit block each off the residual; the
/// blocks already extracted ride along as nonnegative channels.
pub fn build_decoder_net(dy: usize, m: u32, delta: f64) -> Result<Network> {
    if dy == 0 {
        return Err(Error::InvalidParameter("dy must be positive".into()));
    }
    if dy as u32 * m > MAX_CODE_BITS {
        return Err(Error::Budget(format!("dy*M = {} > {MAX_CODE_BITS}", dy as u32 * m)));
    }
    if !(delta > 0.0 && delta < pow2(-((dy as u32 * m) as i32))) {
        return Err(Error::InvalidParameter(format!("delta {delta} outside (0, 2^-{})", dy as u32 * m)));
    }
    let mut b = NetBuilder::new(1);
    if dy == 1 {
        clip_layers(&mut b);
        return b.build();
    }
    let stair = build_staircase_pair_net(m, delta)?;
    for j in 0..dy - 1 {
        let carry: Vec<(usize, f64)> = (0..j).map(|i| (i, 0.0)).collect();
        b.embed(&stair, &[j], &carry);
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::{decode, quantize};

    #[test]
    fn staircase_examples() {
        let net = build_staircase_pair_net(2, 0.01).unwrap();
        assert_eq!(net.width(), 2);
        let y = net.forward(&[0.3]);
        assert!((y[0] - 0.25).abs() < 1e-12 && (y[1] - 0.2).abs() < 1e-12);
        assert_eq!(net.forward(&[0.0]), vec![0.0, 0.0]);
        assert_eq!(net.forward(&[-5.0]), net.forward(&[0.0]));
        assert_eq!(net.forward(&[7.0]), net.forward(&[1.0]));
        assert_eq!(net.forward(&[1.0]), vec![0.75, 1.0]);
        assert!(build_staircase_pair_net(2, 0.25).is_err());
        assert!(build_staircase_pair_net(2, 0.0).is_err());
    }

    #[test]
    fn staircase_off_ramps() {
        let (m, delta) = (3, 1.0 / 64.0);
        let net = build_staircase_pair_net(m, delta).unwrap();
        for i in 0..=2000 {
            let x = i as f64 / 2000.0;
            let y = net.forward(&[x]);
            assert!(y[0] >= 0.0 && y[0] <= 0.875 && y[1] >= -1e-12 && y[1] <= 1.0 + 1e-12);
            if !in_ramp(x, m, delta) {
                let q = quantize(x, m).unwrap();
                assert!((y[0] - q).abs() <= 1e-9, "x={x}");
                assert!((y[1] - 8.0 * (x - q)).abs() <= 1e-9, "x={x}");
            }
        }
    }

    #[test]
    fn ramp_membership() {
        assert!(in_ramp(0.2499, 2, 0.01));
        assert!(!in_ramp(0.25, 2, 0.01));
        assert!(!in_ramp(0.999, 2, 0.01));
        assert!(!in_ramp(0.0, 2, 0.01));
    }

    #[test]
    fn decoder_examples() {
        let net = build_decoder_net(2, 2, default_decoder_delta(2, 2)).unwrap();
        assert_eq!(net.width(), 2);
        assert_eq!(net.forward(&[0.5625]), vec![0.5, 0.25]);
        assert_eq!(net.forward(&[0.0]), vec![0.0, 0.0]);
        let net = build_decoder_net(3, 2, default_decoder_delta(3, 2)).unwrap();
        assert_eq!(net.width(), 3);
        for i in 0..64 {
            let c = i as f64 / 64.0;
            assert_eq!(net.forward(&[c]), decode(c, 2, 3).unwrap());
        }
        let one = build_decoder_net(1, 3, default_decoder_delta(1, 3)).unwrap();
        assert_eq!(one.width(), 1);
        assert_eq!(one.forward(&[0.375]), vec![0.375]);
        assert!(build_decoder_net(2, 2, 0.1).is_err());
    }
}
