//! Explicit feedforward networks with per-neuron activations.
//!
//! A [`Network`] is an alternating composition of affine maps and coordinatewise
//! activations. Every hidden neuron carries its own [`Activation`] tag, so a single
//! layer may mix ReLU and Step units. The last layer is affine only.
//!
//! Evaluation comes in two flavours:
//!
//! - `float64`: plain `f64` arithmetic ([`Network::forward`], [`Network::evaluate`]).
//! - `dyadic-exact`: arbitrary precision rationals ([`Network::evaluate_exact`]). Every
//!   finite `f64` weight is a dyadic rational, so exact evaluation is always available
//!   for in-memory networks; inputs must be dyadic as well.

pub(crate) mod builder;
mod document;

pub use builder::{Neuron, NetBuilder};
pub use document::{LayerDocument, NetworkDocument, NumericMode};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    #[serde(rename = "relu")]
    Relu,
    /// `1[x >= 0]`; returns 1 at exactly zero.
    #[serde(rename = "step")]
    Step,
    #[serde(rename = "id")]
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Step => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => x,
        }
    }

    pub fn apply_exact(self, x: &Rational) -> Rational {
        match self {
            Activation::Relu => exact::relu(x),
            Activation::Step => {
                if *x >= Rational::zero() {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            Activation::Identity => x.clone(),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Step => "step",
            Activation::Identity => "id",
        }
    }
}

/// One affine map followed by per-neuron activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// Row-major, `d_out x d_in`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activations: Vec<Activation>,
}

impl Layer {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>, activations: Vec<Activation>) -> Self {
        Self { weights, bias, activations }
    }

    /// Affine-only layer (identity activations).
    pub fn affine(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Self {
        let n = bias.len();
        Self { weights, bias, activations: vec![Activation::Identity; n] }
    }

    pub fn d_out(&self) -> usize {
        self.bias.len()
    }

    pub fn d_in(&self) -> usize {
        self.weights.first().map_or(0, |r| r.len())
    }

    #[inline]
    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for ((row, b), act) in self.weights.iter().zip(&self.bias).zip(&self.activations) {
            let mut acc = *b;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            out.push(act.apply(acc));
        }
    }

    /// Preactivations (affine part only).
    pub fn preactivation(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>())
            .collect()
    }

    fn validate(&self, index: usize, d_in: usize) -> Result<()> {
        let bad = |reason: String| Error::InvalidLayer { index, reason };
        if self.weights.len() != self.bias.len() {
            return Err(bad(format!(
                "{} weight rows but bias length {}",
                self.weights.len(),
                self.bias.len()
            )));
        }
        if self.activations.len() != self.bias.len() {
            return Err(bad(format!(
                "{} activations for {} neurons",
                self.activations.len(),
                self.bias.len()
            )));
        }
        if self.bias.is_empty() {
            return Err(bad("empty layer".into()));
        }
        for row in &self.weights {
            if row.len() != d_in {
                return Err(bad(format!("row of length {} but input dim {d_in}", row.len())));
            }
        }
        let finite = self.bias.iter().chain(self.weights.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFiniteWeight { layer: index });
        }
        Ok(())
    }
}

/// A validated feedforward network `R^dx -> R^dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    dx: usize,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(dx: usize, layers: Vec<Layer>) -> Result<Self> {
        if dx == 0 {
            return Err(Error::InvalidParameter("input dimension must be positive".into()));
        }
        if layers.is_empty() {
            return Err(Error::InvalidParameter("network needs at least one layer".into()));
        }
        let mut d = dx;
        for (i, layer) in layers.iter().enumerate() {
            layer.validate(i, d)?;
            d = layer.d_out();
        }
        let last = layers.len() - 1;
        if layers[last].activations.iter().any(|a| *a != Activation::Identity) {
            return Err(Error::InvalidLayer {
                index: last,
                reason: "output layer must be affine only".into(),
            });
        }
        Ok(Self { dx, layers })
    }

    pub fn dx(&self) -> usize {
        self.dx
    }

    pub fn dy(&self) -> usize {
        self.layers.last().map_or(0, Layer::d_out)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Number of affine maps.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Maximum hidden-layer size; the output layer is excluded.
    pub fn width(&self) -> usize {
        self.layers[..self.layers.len() - 1].iter().map(Layer::d_out).max().unwrap_or(0)
    }

    pub fn hidden_layers(&self) -> &[Layer] {
        &self.layers[..self.layers.len() - 1]
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.d_out() * (l.d_in() + 1)).sum()
    }

    pub fn contains_activation(&self, act: Activation) -> bool {
        self.hidden_layers().iter().any(|l| l.activations.contains(&act))
    }

    /// Fast float forward pass. Panics if `x.len() != dx`.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dx, "input dimension");
        let mut cur = x.to_vec();
        let mut next = Vec::with_capacity(self.width().max(self.dy()));
        for layer in &self.layers {
            layer.forward_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Forward pass returning the hidden activations after every layer (the last
    /// entry is the output).
    pub fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        for layer in &self.layers {
            let mut next = Vec::new();
            layer.forward_into(&cur, &mut next);
            out.push(next.clone());
            cur = next;
        }
        out
    }

    pub fn evaluate(&self, x: &[f64], mode: NumericMode) -> Result<Vec<f64>> {
        self.check_input(x.len())?;
        match mode {
            NumericMode::Float64 => Ok(self.forward(x)),
            NumericMode::Dyadic => {
                let xs = x.iter().map(|v| exact::from_f64(*v)).collect::<Result<Vec<_>>>()?;
                Ok(self.evaluate_exact(&xs)?.iter().map(exact::to_f64).collect())
            }
        }
    }

    /// Exact evaluation over the rationals. Inputs must be dyadic.
    pub fn evaluate_exact(&self, x: &[Rational]) -> Result<Vec<Rational>> {
        self.check_input(x.len())?;
        if let Some(bad) = x.iter().find(|v| !exact::is_dyadic(v)) {
            return Err(Error::NonDyadic(bad.to_string()));
        }
        let mut cur = x.iter().map(exact::Dyadic::from_rational).collect::<Result<Vec<_>>>()?;
        for layer in &self.layers {
            let mut next = Vec::with_capacity(layer.d_out());
            for ((row, b), act) in layer.weights.iter().zip(&layer.bias).zip(&layer.activations) {
                let mut acc = exact::Dyadic::from_f64(*b)?;
                for (w, xi) in row.iter().zip(&cur) {
                    if *w != 0.0 {
                        acc = acc.add(&exact::Dyadic::from_f64(*w)?.mul(xi));
                    }
                }
                next.push(match act {
                    Activation::Relu if acc.is_negative() => exact::Dyadic::zero(),
                    Activation::Step if acc.is_negative() => exact::Dyadic::zero(),
                    Activation::Step => exact::Dyadic::one(),
                    _ => acc,
                });
            }
            cur = next;
        }
        Ok(cur.iter().map(exact::Dyadic::to_rational).collect())
    }

    fn check_input(&self, got: usize) -> Result<()> {
        if got != self.dx {
            return Err(Error::DimensionMismatch { expected: self.dx, got });
        }
        Ok(())
    }

    /// Network computing `second(first(x))`.
    ///
    /// The output affine map of `first` is folded into the input affine map of
    /// `second`, so no identity hidden layer appears at the junction and the result
    /// has width `max(width(first), width(second))`.
    pub fn compose(first: &Network, second: &Network) -> Result<Network> {
        if first.dy() != second.dx() {
            return Err(Error::DimensionMismatch { expected: second.dx(), got: first.dy() });
        }
        let (junction_out, head) = first.layers.split_last().expect("nonempty");
        let (junction_in, tail) = second.layers.split_first().expect("nonempty");
        let merged = merge_affine(junction_out, junction_in);
        let mut layers = head.to_vec();
        layers.push(merged);
        layers.extend_from_slice(tail);
        Network::new(first.dx, layers)
    }

    /// The network `x -> x` on `R^d` (a single affine layer).
    pub fn identity(d: usize) -> Network {
        let w = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Network::new(d, vec![Layer::affine(w, vec![0.0; d])]).expect("identity is valid")
    }

    /// Appends an affine map `y -> W y + b` after the output.
    pub fn then_affine(&self, weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Network> {
        let tail = Network::new(self.dy(), vec![Layer::affine(weights, bias)])?;
        Network::compose(self, &tail)
    }
}

/// `inner` is affine (identity activations); returns `outer ∘ inner` keeping
/// `outer`'s activations.
fn merge_affine(inner: &Layer, outer: &Layer) -> Layer {
    let d_in = inner.d_in();
    let mut weights = Vec::with_capacity(outer.d_out());
    let mut bias = Vec::with_capacity(outer.d_out());
    for (row, b) in outer.weights.iter().zip(&outer.bias) {
        let mut w = vec![0.0; d_in];
        let mut c = *b;
        for (k, coeff) in row.iter().enumerate() {
            if *coeff == 0.0 {
                continue;
            }
            for (j, wj) in w.iter_mut().enumerate() {
                *wj += coeff * inner.weights[k][j];
            }
            c += coeff * inner.bias[k];
        }
        weights.push(w);
        bias.push(c);
    }
    Layer::new(weights, bias, outer.activations.clone())
}
