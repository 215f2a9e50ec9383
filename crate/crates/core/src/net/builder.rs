//! Incremental network assembly.
//!
//! The builder tracks a vector of *current values*, each an affine function of the
//! most recent hidden layer (or of the input). Affine post-processing is folded
//! into whichever layer reads it next, so rearranging or combining values never
//! costs a layer.

use super::{Activation, Layer, Network};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct Neuron {
    /// Coefficients over the current values.
    pub w: Vec<f64>,
    pub b: f64,
    pub act: Activation,
}

impl Neuron {
    pub fn relu(w: Vec<f64>, b: f64) -> Self {
        Self { w, b, act: Activation::Relu }
    }

    pub fn step(w: Vec<f64>, b: f64) -> Self {
        Self { w, b, act: Activation::Step }
    }

    /// `relu(v_i + shift)`, used to pass a value known to be `>= -shift` through a layer.
    pub fn carry(n: usize, i: usize, shift: f64) -> Self {
        Self::relu(unit(n, i), shift)
    }
}

pub(crate) fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

#[derive(Debug, Clone)]
pub struct NetBuilder {
    dx: usize,
    layers: Vec<Layer>,
    /// current = map * h + offset, where h is the last hidden output (or x).
    map: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl NetBuilder {
    pub fn new(dx: usize) -> Self {
        let map = (0..dx).map(|i| unit(dx, i)).collect();
        Self { dx, layers: Vec::new(), map, offset: vec![0.0; dx] }
    }

    /// Number of current values.
    pub fn len(&self) -> usize {
        self.offset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offset.is_empty()
    }

    fn source_dim(&self) -> usize {
        self.layers.last().map_or(self.dx, Layer::d_out)
    }

    /// Replaces the current values `v` by `rows * v + bias`.
    pub fn affine(&mut self, rows: &[Vec<f64>], bias: &[f64]) -> &mut Self {
        let src = self.source_dim();
        let mut map = Vec::with_capacity(rows.len());
        let mut offset = Vec::with_capacity(rows.len());
        for (row, b) in rows.iter().zip(bias) {
            debug_assert_eq!(row.len(), self.len());
            let mut m = vec![0.0; src];
            let mut c = *b;
            for (k, coeff) in row.iter().enumerate() {
                if *coeff == 0.0 {
                    continue;
                }
                for (j, mj) in m.iter_mut().enumerate() {
                    *mj += coeff * self.map[k][j];
                }
                c += coeff * self.offset[k];
            }
            map.push(m);
            offset.push(c);
        }
        self.map = map;
        self.offset = offset;
        self
    }

    /// Emits a hidden layer; the neuron outputs become the current values.
    pub fn layer(&mut self, neurons: Vec<Neuron>) -> &mut Self {
        let n = neurons.len();
        let mut weights = Vec::with_capacity(n);
        let mut bias = Vec::with_capacity(n);
        let mut acts = Vec::with_capacity(n);
        for nr in neurons {
            debug_assert_eq!(nr.w.len(), self.len());
            let src = self.source_dim();
            let mut w = vec![0.0; src];
            let mut b = nr.b;
            for (k, coeff) in nr.w.iter().enumerate() {
                if *coeff == 0.0 {
                    continue;
                }
                for (j, wj) in w.iter_mut().enumerate() {
                    *wj += coeff * self.map[k][j];
                }
                b += coeff * self.offset[k];
            }
            weights.push(w);
            bias.push(b);
            acts.push(nr.act);
        }
        self.layers.push(Layer::new(weights, bias, acts));
        self.map = (0..n).map(|i| unit(n, i)).collect();
        self.offset = vec![0.0; n];
        self
    }

    /// Runs `sub` on the current values listed in `inputs` while passing the values
    /// in `carry` through unchanged (each must stay `>= -shift`).
    ///
    /// Afterwards the current values are the carried values, in order, followed by
    /// the outputs of `sub`.
    pub fn embed(&mut self, sub: &Network, inputs: &[usize], carry: &[(usize, f64)]) -> &mut Self {
        assert_eq!(sub.dx(), inputs.len(), "embedded network input dimension");
        let n = self.len();
        let nc = carry.len();
        // Select [inputs..., carried...] as the working vector.
        let mut select = Vec::with_capacity(inputs.len() + nc);
        for &i in inputs {
            select.push(unit(n, i));
        }
        for &(i, _) in carry {
            select.push(unit(n, i));
        }
        self.affine(&select, &vec![0.0; select.len()]);
        let mut din = inputs.len();
        let mut first = true;
        for layer in sub.hidden_layers() {
            let width = din + nc;
            let mut neurons = Vec::with_capacity(layer.d_out() + nc);
            for ((row, b), act) in layer.weights.iter().zip(&layer.bias).zip(&layer.activations) {
                let mut w = row.clone();
                w.resize(width, 0.0);
                neurons.push(Neuron { w, b: *b, act: *act });
            }
            for (j, &(_, shift)) in carry.iter().enumerate() {
                neurons.push(Neuron::carry(width, din + j, if first { shift } else { 0.0 }));
            }
            self.layer(neurons);
            din = layer.d_out();
            first = false;
        }
        let out = sub.layers().last().expect("nonempty");
        let width = din + nc;
        let mut rows = Vec::with_capacity(nc + out.d_out());
        let mut bias = Vec::with_capacity(nc + out.d_out());
        for (j, &(_, shift)) in carry.iter().enumerate() {
            rows.push(unit(width, din + j));
            bias.push(if first { 0.0 } else { -shift });
        }
        for (row, b) in out.weights.iter().zip(&out.bias) {
            let mut r = row.clone();
            r.resize(width, 0.0);
            rows.push(r);
            bias.push(*b);
        }
        self.affine(&rows, &bias)
    }

    /// Finishes with the current values as the network output.
    pub fn build(&self) -> Result<Network> {
        let mut layers = self.layers.clone();
        layers.push(Layer::affine(self.map.clone(), self.offset.clone()));
        Network::new(self.dx, layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_folds_into_next_layer() {
        let mut b = NetBuilder::new(2);
        b.affine(&[vec![1.0, -1.0]], &[0.5]);
        b.layer(vec![Neuron::relu(vec![2.0], 0.0)]);
        b.affine(&[vec![3.0], vec![1.0]], &[0.0, -1.0]);
        let net = b.build().unwrap();
        assert_eq!(net.depth(), 2);
        assert_eq!(net.width(), 1);
        // relu(2(x1 - x2 + 0.5)) = 2 at (1, 0.5)
        assert_eq!(net.forward(&[1.0, 0.5]), vec![6.0, 1.0]);
    }

    #[test]
    fn embed_carries_other_channels() {
        let abs = Network::new(
            1,
            vec![
                Layer::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0], vec![Activation::Relu; 2]),
                Layer::affine(vec![vec![1.0, 1.0]], vec![0.0]),
            ],
        )
        .unwrap();
        let mut b = NetBuilder::new(2);
        b.embed(&abs, &[1], &[(0, 5.0)]);
        let net = b.build().unwrap();
        assert_eq!(net.width(), 3);
        assert_eq!(net.forward(&[-2.0, -3.0]), vec![-2.0, 3.0]);
    }

    #[test]
    fn embed_affine_subnet() {
        let double = Network::new(1, vec![Layer::affine(vec![vec![2.0]], vec![1.0])]).unwrap();
        let mut b = NetBuilder::new(2);
        b.embed(&double, &[0], &[(1, 0.0)]);
        let net = b.build().unwrap();
        assert_eq!(net.depth(), 1);
        assert_eq!(net.forward(&[1.0, -4.0]), vec![-4.0, 3.0]);
    }
}
