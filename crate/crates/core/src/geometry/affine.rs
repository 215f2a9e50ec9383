//! Affinity of a ReLU network on the region where every hidden unit is active.

use crate::error::{Error, Result};
use crate::net::{Activation, Network};

const SAMPLES: usize = 101;

/// Checks that `net` is affine along `[x1, x2]` by comparing the midpoint value
/// with the endpoint average. Every hidden ReLU preactivation must be strictly
/// positive at the endpoints and at equispaced points of the segment.
pub fn check_affine_on_s(net: &Network, x1: &[f64], x2: &[f64]) -> Result<bool> {
    for x in [x1, x2] {
        if x.len() != net.dx() {
            return Err(Error::DimensionMismatch { expected: net.dx(), got: x.len() });
        }
    }
    let point = |s: f64| -> Vec<f64> { x1.iter().zip(x2).map(|(a, b)| a + s * (b - a)).collect() };
    for i in 0..SAMPLES {
        let s = i as f64 / (SAMPLES - 1) as f64;
        let x = point(s);
        let trace = net.trace(&x);
        for (l, layer) in net.hidden_layers().iter().enumerate() {
            let input = if l == 0 { &x } else { &trace[l - 1] };
            let z = layer.preactivation(input);
            for (k, (v, a)) in z.iter().zip(&layer.activations).enumerate() {
                if *a == Activation::Relu && *v <= 0.0 {
                    return Err(Error::Precondition(format!("unit {k} of layer {} is inactive at s = {s}", l + 1)));
                }
            }
        }
    }
    let (y1, y2, ym) = (net.forward(x1), net.forward(x2), net.forward(&point(0.5)));
    Ok(ym.iter().zip(y1.iter().zip(&y2)).all(|(m, (a, b))| (m - (a + b) / 2.0).abs() <= 1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Layer;

    fn net() -> Network {
        Network::new(
            1,
            vec![
                Layer::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 1.0], vec![Activation::Relu; 2]),
                Layer::affine(vec![vec![2.0, 3.0]], vec![0.5]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn inside_active_region() {
        assert!(check_affine_on_s(&net(), &[0.1], &[0.9]).unwrap());
    }

    #[test]
    fn straddling_is_precondition_error() {
        assert!(matches!(check_affine_on_s(&net(), &[-0.5], &[0.5]), Err(Error::Precondition(_))));
    }

    #[test]
    fn linear_net() {
        let lin = Network::new(2, vec![Layer::affine(vec![vec![1.0, -2.0]], vec![3.0])]).unwrap();
        assert!(check_affine_on_s(&lin, &[-5.0, 2.0], &[7.0, 1.0]).unwrap());
    }
}
