//! Width `dx+1` ReLU clamp: identity on `[alpha, 1-alpha]^dx`, `(1,...,1)` off the
//! unit cube, values always in `[0,1]^dx`.

use crate::error::{Error, Result};
use crate::net::builder::unit;
use crate::net::{NetBuilder, Network, Neuron};

/// `h1(x) = relu(1 - relu(1 - x) / alpha)`: 0 below `1-alpha`, 1 from 1 on.
pub fn h1(x: f64, alpha: f64) -> f64 {
    (1.0 - (1.0 - x).max(0.0) / alpha).max(0.0)
}

/// `h2(x) = 1 - relu(1 - relu(alpha - x) / alpha)`: 1 up to 0, 0 from `alpha` on.
pub fn h2(x: f64, alpha: f64) -> f64 {
    1.0 - (1.0 - (alpha - x).max(0.0) / alpha).max(0.0)
}

/// Adds `10 h(v_src)` to `v_dst` for the current values while carrying all of them
/// as `relu(v + 1) - 1`. Two layers of width `n + 1`.
fn flag_stage(b: &mut NetBuilder, n: usize, src: usize, dst: &[usize], upper: bool, alpha: f64) {
    let carry = |w: usize| -> Vec<Neuron> { (0..n).map(|i| Neuron::carry(w, i, 1.0)).collect() };
    // inner ramp: relu(1 - x) for h1, relu(alpha - x) for h2
    let mut first = carry(n);
    let mut w = vec![0.0; n];
    w[src] = -1.0;
    first.push(Neuron::relu(w, if upper { 1.0 } else { alpha }));
    b.layer(first);
    // values are now [x_i + 1 ..., inner]; second layer carries x_i + 1 with shift 0
    let mut second: Vec<Neuron> = (0..n).map(|i| Neuron::carry(n + 1, i, 0.0)).collect();
    let mut w = vec![0.0; n + 1];
    w[n] = -1.0 / alpha;
    second.push(Neuron::relu(w, 1.0));
    b.layer(second);
    // h = outer for h1, 1 - outer for h2
    let (hc, hb) = if upper { (1.0, 0.0) } else { (-1.0, 1.0) };
    let mut rows = Vec::with_capacity(n);
    let mut bias = Vec::with_capacity(n);
    for i in 0..n {
        let mut r = unit(n + 1, i);
        let mut c = -1.0;
        if dst.contains(&i) {
            r[n] = 10.0 * hc;
            c += 10.0 * hb;
        }
        rows.push(r);
        bias.push(c);
    }
    b.affine(&rows, &bias);
}

/// Clamp network.
///
/// A first sweep accumulates `10 (h2(x_l) + h1(x_l))` for every coordinate into
/// `x_1` only; a second adds `10 h1(x_1)` to the remaining coordinates, and a final
/// clip to `[0,1]` finishes.
pub fn build_clamp_net(dx: usize, alpha: f64) -> Result<Network> {
    if dx == 0 {
        return Err(Error::InvalidParameter("dx must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, 0.5)")));
    }
    let mut b = NetBuilder::new(dx);
    for l in 0..dx {
        flag_stage(&mut b, dx, l, &[0], false, alpha);
        flag_stage(&mut b, dx, l, &[0], true, alpha);
    }
    if dx > 1 {
        let rest: Vec<usize> = (1..dx).collect();
        flag_stage(&mut b, dx, 0, &rest, true, alpha);
    }
    b.layer((0..dx).map(|i| Neuron::relu(unit(dx, i), 0.0)).collect());
    b.layer((0..dx).map(|i| Neuron::relu(unit(dx, i).iter().map(|v| -v).collect(), 1.0)).collect());
    let rows: Vec<Vec<f64>> = (0..dx).map(|i| unit(dx, i).iter().map(|v| -v).collect()).collect();
    b.affine(&rows, &vec![1.0; dx]);
    b.build()
}
