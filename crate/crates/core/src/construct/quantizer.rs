//! ReLU+Step quantizer `q_K` and the sequential ReLU+Step encoder.

use crate::coding::{pow2, MAX_CODE_BITS};
use crate::error::{Error, Result};
use crate::net::{NetBuilder, Network, Neuron};

/// Width-2 ReLU+Step network equal to `q_K` on `[0, 1]`.
///
/// Stage `l < 2^K` collapses `[(l-1)h, lh)` onto `(l-1)h` (with `h = 2^-K`):
///
/// ```text
/// a = relu(y),  b = step(y - l h)
/// y' = a - relu(a - 2b - (l-1)h)
/// ```
///
/// Values below `(l-1)h` and at or above `lh` pass unchanged. The final stage is
/// `y' = relu(y) - relu(y - (1-h))`, which sends `[1-h, 1]` to `1-h`.
pub fn build_step_quantizer_net(k: u32) -> Result<Network> {
    if k == 0 || k > 16 {
        return Err(Error::InvalidParameter(format!("quantizer K = {k} outside 1..=16")));
    }
    let h = pow2(-(k as i32));
    let levels = 1u64 << k;
    let mut b = NetBuilder::new(1);
    for l in 1..levels {
        let lh = l as f64 * h;
        b.layer(vec![Neuron::relu(vec![1.0], 0.0), Neuron::step(vec![1.0], -lh)]);
        b.layer(vec![Neuron::relu(vec![1.0, 0.0], 0.0), Neuron::relu(vec![1.0, -2.0], -(lh - h))]);
        b.affine(&[vec![1.0, -1.0]], &[0.0]);
    }
    b.layer(vec![Neuron::relu(vec![1.0], 0.0), Neuron::relu(vec![1.0], -(1.0 - h))]);
    b.affine(&[vec![1.0, -1.0]], &[0.0]);
    b.build()
}

/// Width `dx+1` ReLU+Step network equal to `encode_K` on `[0,1]^dx`.
pub fn build_step_encoder_net(dx: usize, k: u32) -> Result<Network> {
    if dx == 0 {
        return Err(Error::InvalidParameter("dx must be positive".into()));
    }
    if dx as u32 * k > MAX_CODE_BITS {
        return Err(Error::Budget(format!("dx*K = {} > {MAX_CODE_BITS}", dx as u32 * k)));
    }
    let q = build_step_quantizer_net(k)?;
    let mut b = NetBuilder::new(dx);
    for i in 0..dx {
        // current values are x_0..x_{dx-1} with coordinates < i already quantized
        let carry: Vec<(usize, f64)> = (0..dx).filter(|j| *j != i).map(|j| (j, 0.0)).collect();
        b.embed(&q, &[i], &carry);
        // restore coordinate order: [carried..., q(x_i)]
        let mut rows = Vec::with_capacity(dx);
        for j in 0..dx {
            let pos = if j == i { dx - 1 } else if j < i { j } else { j - 1 };
            rows.push(crate::net::builder::unit(dx, pos));
        }
        b.affine(&rows, &vec![0.0; dx]);
    }
    let weights: Vec<f64> = (0..dx).map(|i| pow2(-((i as u32 * k) as i32))).collect();
    b.affine(&[weights], &[0.0]);
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::{encode, quantize};
    use crate::exact;
    use crate::net::Activation;

    #[test]
    fn examples() {
        let q2 = build_step_quantizer_net(2).unwrap();
        assert_eq!(q2.forward(&[0.3]), vec![0.25]);
        assert_eq!(q2.forward(&[0.999]), vec![0.75]);
        let q3 = build_step_quantizer_net(3).unwrap();
        assert_eq!(q3.forward(&[1.0]), vec![0.875]);
        assert_eq!(q3.width(), 2);
        assert!(q3.contains_activation(Activation::Step));
    }

    #[test]
    fn exact_on_all_dyadics_of_finer_grid() {
        let k = 3;
        let net = build_step_quantizer_net(k).unwrap();
        for i in 0..=256 {
            let x = exact::ratio(i, 256);
            let y = net.evaluate_exact(&[x]).unwrap();
            let want = quantize(i as f64 / 256.0, k).unwrap();
            assert_eq!(exact::to_f64(&y[0]), want);
        }
    }

    #[test]
    fn encoder_examples() {
        let enc = build_step_encoder_net(2, 2).unwrap();
        assert_eq!(enc.width(), 3);
        assert_eq!(enc.forward(&[0.5, 0.25]), vec![0.5625]);
        assert_eq!(enc.forward(&[0.0, 0.0]), vec![0.0]);
        let enc = build_step_encoder_net(3, 2).unwrap();
        for x in [[0.1, 0.9, 0.6], [1.0, 0.0, 0.74]] {
            assert_eq!(enc.forward(&x)[0], encode(&x, 2).unwrap());
        }
        assert!(build_step_encoder_net(5, 5).is_err());
    }
}
