//! Width-2 ReLU realization of continuous piecewise-linear functions on an interval.

use crate::error::{Error, Result};
use crate::net::{NetBuilder, Network, Neuron};

/// A continuous piecewise-linear map `[lo, hi] -> R^dy` given by its knots.
///
/// Outside the interval the first and last pieces are extended linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct PlCurve {
    knots: Vec<f64>,
    values: Vec<Vec<f64>>,
}

/// Scalar piecewise-linear function; `dy = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PLScalarFunction(PlCurve);

impl PlCurve {
    pub fn new(knots: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::InvalidParameter("need at least two knots, one value row each".into()));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("knots must be finite and strictly increasing".into()));
        }
        let dy = values[0].len();
        if dy == 0 || values.iter().any(|v| v.len() != dy || v.iter().any(|y| !y.is_finite())) {
            return Err(Error::InvalidParameter("value rows must be finite with equal length".into()));
        }
        Ok(Self { knots, values })
    }

    pub fn dy(&self) -> usize {
        self.values[0].len()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn pieces(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// Slope of piece `j` (0-based) in coordinate `c`.
    pub fn slope(&self, j: usize, c: usize) -> f64 {
        (self.values[j + 1][c] - self.values[j][c]) / (self.knots[j + 1] - self.knots[j])
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let n = self.knots.len();
        let j = self.knots.partition_point(|k| *k <= x).clamp(1, n - 1) - 1;
        (0..self.dy()).map(|c| self.values[j][c] + self.slope(j, c) * (x - self.knots[j])).collect()
    }

    /// Drops knots where no coordinate changes slope.
    pub fn simplified(&self) -> Self {
        let mut knots = vec![self.knots[0]];
        let mut values = vec![self.values[0].clone()];
        for j in 1..self.pieces() {
            let bend = (0..self.dy()).any(|c| self.slope(j - 1, c) != self.slope(j, c));
            if bend {
                knots.push(self.knots[j]);
                values.push(self.values[j].clone());
            }
        }
        knots.push(*self.knots.last().unwrap());
        values.push(self.values.last().unwrap().clone());
        Self { knots, values }
    }
}

impl PLScalarFunction {
    pub fn from_points(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Ok(Self(PlCurve::new(xs, ys.into_iter().map(|y| vec![y]).collect())?))
    }

    /// From per-piece slopes and intercepts; `breaks` are the interior breakpoints.
    /// Fails unless adjacent pieces agree at every breakpoint.
    pub fn from_pieces(lo: f64, hi: f64, breaks: &[f64], slopes: &[f64], intercepts: &[f64]) -> Result<Self> {
        let p = breaks.len() + 1;
        if slopes.len() != p || intercepts.len() != p {
            return Err(Error::InvalidParameter(format!("{p} pieces need {p} slopes and intercepts")));
        }
        let mut knots = vec![lo];
        knots.extend_from_slice(breaks);
        knots.push(hi);
        for (i, x) in breaks.iter().enumerate() {
            let left = slopes[i] * x + intercepts[i];
            let right = slopes[i + 1] * x + intercepts[i + 1];
            if (left - right).abs() > 1e-12 * (1.0 + left.abs().max(right.abs())) {
                return Err(Error::InvalidParameter(format!("discontinuity at breakpoint {x}: {left} vs {right}")));
            }
        }
        let ys = knots
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let j = i.saturating_sub(1).min(p - 1);
                slopes[j] * x + intercepts[j]
            })
            .collect();
        Self::from_points(knots, ys)
    }

    pub fn curve(&self) -> &PlCurve {
        &self.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.eval(x)[0]
    }

    pub fn interval(&self) -> (f64, f64) {
        self.0.interval()
    }

    pub fn pieces(&self) -> usize {
        self.0.pieces()
    }

    pub fn simplified(&self) -> Self {
        Self(self.0.simplified())
    }
}

/// Builds the hidden layers and leaves `(s, z_1, ..., z_dy)` as the current values,
/// with `s = relu(x - x_{P-1})` and `z` the curve on `[lo, hi]`.
fn pl_layers(curve: &PlCurve) -> NetBuilder {
    let dy = curve.dy();
    let p = curve.pieces();
    let x = curve.knots();
    // floor[c] bounds every partial sum from below on [lo, hi] so the z channels
    // survive the ReLU.
    let mut floor = vec![f64::INFINITY; dy];
    for c in 0..dy {
        let mut partial: Vec<f64> = x.iter().map(|t| curve.values[0][c] + curve.slope(0, c) * (t - x[0])).collect();
        for j in 0..p {
            if j > 0 {
                let da = curve.slope(j, c) - curve.slope(j - 1, c);
                for (v, t) in partial.iter_mut().zip(x) {
                    *v += da * (t - x[j]).max(0.0);
                }
            }
            floor[c] = partial.iter().fold(floor[c], |m, v| m.min(*v));
        }
        floor[c] = floor[c].min(0.0).floor() - 1.0;
    }

    let mut b = NetBuilder::new(1);
    let mut first = vec![Neuron::relu(vec![1.0], -x[0])];
    for c in 0..dy {
        let a = curve.slope(0, c);
        first.push(Neuron::relu(vec![a], curve.values[0][c] - a * x[0] - floor[c]));
    }
    b.layer(first);
    // current: [s, z_c - floor_c]
    let mut rows = vec![unit(dy + 1, 0)];
    let mut bias = vec![0.0];
    for c in 0..dy {
        rows.push(unit(dy + 1, c + 1));
        bias.push(floor[c]);
    }
    b.affine(&rows, &bias);
    for j in 1..p {
        let mut neurons = vec![Neuron::relu(unit(dy + 1, 0), -(x[j] - x[j - 1]))];
        for c in 0..dy {
            neurons.push(Neuron::relu(unit(dy + 1, c + 1), -floor[c]));
        }
        b.layer(neurons);
        let mut rows = vec![unit(dy + 1, 0)];
        let mut bias = vec![0.0];
        for c in 0..dy {
            let mut r = unit(dy + 1, c + 1);
            r[0] = curve.slope(j, c) - curve.slope(j - 1, c);
            rows.push(r);
            bias.push(floor[c]);
        }
        b.affine(&rows, &bias);
    }
    b
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    crate::net::builder::unit(n, i)
}

/// Width-2 network equal to `g` on its interval.
pub fn build_pl_net(g: &PLScalarFunction) -> Result<Network> {
    let mut b = pl_layers(g.curve());
    b.affine(&[vec![0.0, 1.0]], &[0.0]);
    b.build()
}

/// Width-2 network returning `(relu(x - x_{P-1}), g(x))`.
pub fn build_pl_pair_net(g: &PLScalarFunction) -> Result<Network> {
    pl_layers(g.curve()).build()
}

/// Width `1 + dy` network equal to the vector curve on its interval.
pub fn build_pl_vector_net(curve: &PlCurve) -> Result<Network> {
    let dy = curve.dy();
    let mut b = pl_layers(curve);
    let rows: Vec<Vec<f64>> = (0..dy).map(|c| unit(dy + 1, c + 1)).collect();
    b.affine(&rows, &vec![0.0; dy]);
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hat() -> PLScalarFunction {
        PLScalarFunction::from_points(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn identity_piece() {
        let g = PLScalarFunction::from_points(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let net = build_pl_net(&g).unwrap();
        assert_eq!(net.width(), 2);
        for i in 0..1000 {
            let x = i as f64 / 999.0;
            assert!((net.forward(&[x])[0] - x).abs() <= 1e-9);
        }
    }

    #[test]
    fn hat_function() {
        let g = hat();
        let net = build_pl_net(&g).unwrap();
        for x in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let want = if x <= 0.5 { 2.0 * x } else { 2.0 - 2.0 * x };
            assert!((net.forward(&[x])[0] - want).abs() <= 1e-9);
        }
    }

    #[test]
    fn pair_variant_carries_shifted_input() {
        let g = PLScalarFunction::from_points(vec![0.0, 0.2, 0.5, 1.0], vec![0.0, -3.0, 1.0, 1.0]).unwrap();
        let net = build_pl_pair_net(&g).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let y = net.forward(&[x]);
            assert!((y[0] - (x - 0.5).max(0.0)).abs() <= 1e-12);
            assert!((y[1] - g.eval(x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn seven_pieces_width_two() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64 / 7.0).collect();
        let ys = vec![0.0, 3.0, -1.0, 2.0, 2.0, -5.0, 0.5, 4.0];
        let g = PLScalarFunction::from_points(xs, ys).unwrap();
        let net = build_pl_net(&g).unwrap();
        assert_eq!(net.width(), 2);
        assert_eq!(net.depth(), 8);
    }

    #[test]
    fn discontinuous_pieces_rejected() {
        assert!(PLScalarFunction::from_pieces(0.0, 1.0, &[0.5], &[1.0, 1.0], &[0.0, 0.5]).is_err());
        let g = PLScalarFunction::from_pieces(0.0, 1.0, &[0.5], &[2.0, -2.0], &[0.0, 2.0]).unwrap();
        assert_eq!(g, hat());
    }

    #[test]
    fn simplify_merges_collinear() {
        let g = PLScalarFunction::from_points(vec![0.0, 0.25, 0.5, 1.0], vec![0.0, 0.25, 0.5, 0.0]).unwrap();
        assert_eq!(g.simplified().pieces(), 2);
    }

    #[test]
    fn vector_curve() {
        let c = PlCurve::new(vec![0.0, 0.5, 1.0], vec![vec![4.0, 3.0], vec![0.0, 3.0], vec![0.0, 0.0]]).unwrap();
        let net = build_pl_vector_net(&c).unwrap();
        assert_eq!(net.width(), 3);
        let y = net.forward(&[0.75]);
        assert!((y[0] - 0.0).abs() < 1e-12 && (y[1] - 1.5).abs() < 1e-12);
    }
}
