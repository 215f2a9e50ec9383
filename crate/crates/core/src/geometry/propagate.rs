//! Exact piecewise-linear propagation through ReLU networks with one input.
//!
//! For a width-2 network `f = t_L ∘ σ ∘ ... ∘ σ ∘ t_1 : R -> R^2` the image is
//! tracked in output coordinates: with `phi_l = (t_L ∘ ... ∘ t_{l+1})^{-1}` and
//! `t_dag = t_L ∘ ... ∘ t_1`,
//!
//! ```text
//! f = (phi_{L-1}^{-1} ∘ σ ∘ phi_{L-1}) ∘ ... ∘ (phi_1^{-1} ∘ σ ∘ phi_1) ∘ t_dag
//! ```

use num_traits::{One, Signed, Zero};

use super::{Polyline, Vertex, P2};
use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::net::{Activation, Layer, Network};

struct ExactLayer {
    w: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    acts: Vec<Activation>,
}

impl ExactLayer {
    fn from_layer(l: &Layer) -> Result<Self> {
        let w = l
            .weights
            .iter()
            .map(|r| r.iter().map(|v| exact::from_f64(*v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let b = l.bias.iter().map(|v| exact::from_f64(*v)).collect::<Result<Vec<_>>>()?;
        Ok(Self { w, b, acts: l.activations.clone() })
    }

    fn pre(&self, s: &[Rational]) -> Vec<Rational> {
        self.w
            .iter()
            .zip(&self.b)
            .map(|(row, b)| {
                let mut acc = b.clone();
                for (wi, si) in row.iter().zip(s) {
                    if !wi.is_zero() && !si.is_zero() {
                        acc += wi * si;
                    }
                }
                acc
            })
            .collect()
    }
}

/// Exact output of a one-input ReLU network along `[lo, hi]`: breakpoints and the
/// output vector at each.
#[derive(Debug, Clone)]
pub struct ExactPath {
    pub ts: Vec<Rational>,
    pub values: Vec<Vec<Rational>>,
}

impl ExactPath {
    pub fn to_polyline(&self) -> Result<Polyline> {
        if self.values.first().is_some_and(|v| v.len() != 2) {
            return Err(Error::DimensionMismatch { expected: 2, got: self.values[0].len() });
        }
        Polyline::new(
            self.ts
                .iter()
                .zip(&self.values)
                .map(|(t, v)| Vertex { t: t.clone(), p: P2::new(v[0].clone(), v[1].clone()) })
                .collect(),
        )
    }
}

/// Splits every segment where a ReLU preactivation changes sign, then applies the
/// layer. Works for any width.
pub fn network_path(net: &Network, lo: &Rational, hi: &Rational) -> Result<ExactPath> {
    if net.dx() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: net.dx() });
    }
    if lo >= hi {
        return Err(Error::InvalidParameter("empty parameter interval".into()));
    }
    let mut ts = vec![lo.clone(), hi.clone()];
    let mut states = vec![vec![lo.clone()], vec![hi.clone()]];
    for layer in net.layers() {
        if layer.activations.contains(&Activation::Step) {
            return Err(Error::UnsupportedActivation("step"));
        }
        let el = ExactLayer::from_layer(layer)?;
        let pres: Vec<Vec<Rational>> = states.iter().map(|s| el.pre(s)).collect();
        let mut nts = Vec::with_capacity(ts.len());
        let mut npre = Vec::with_capacity(ts.len());
        for i in 0..ts.len() {
            if i > 0 {
                let (za, zb) = (&pres[i - 1], &pres[i]);
                let mut lambdas: Vec<Rational> = Vec::new();
                for k in 0..za.len() {
                    if el.acts[k] == Activation::Relu
                        && ((za[k].is_negative() && zb[k].is_positive()) || (za[k].is_positive() && zb[k].is_negative()))
                    {
                        lambdas.push(&za[k] / (&za[k] - &zb[k]));
                    }
                }
                lambdas.sort();
                lambdas.dedup();
                for lam in lambdas {
                    nts.push(&ts[i - 1] + (&ts[i] - &ts[i - 1]) * &lam);
                    npre.push(za.iter().zip(zb).map(|(a, b)| a + (b - a) * &lam).collect::<Vec<_>>());
                }
            }
            nts.push(ts[i].clone());
            npre.push(pres[i].clone());
        }
        states = npre
            .into_iter()
            .map(|z| z.iter().zip(&el.acts).map(|(v, a)| a.apply_exact(v)).collect())
            .collect();
        ts = nts;
    }
    Ok(ExactPath { ts, values: states })
}

/// Exact affine map `R^2 -> R^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine2 {
    pub m: [[Rational; 2]; 2],
    pub b: [Rational; 2],
}

impl Affine2 {
    pub fn identity() -> Self {
        let (o, z) = (Rational::one(), Rational::zero());
        Self { m: [[o.clone(), z.clone()], [z.clone(), o]], b: [z.clone(), z] }
    }

    pub fn apply(&self, p: &P2) -> P2 {
        P2 {
            x: &self.m[0][0] * &p.x + &self.m[0][1] * &p.y + &self.b[0],
            y: &self.m[1][0] * &p.x + &self.m[1][1] * &p.y + &self.b[1],
        }
    }

    pub fn det(&self) -> Rational {
        &self.m[0][0] * &self.m[1][1] - &self.m[0][1] * &self.m[1][0]
    }

    pub fn inverse(&self) -> Option<Affine2> {
        let d = self.det();
        if d.is_zero() {
            return None;
        }
        let m = [
            [&self.m[1][1] / &d, -&self.m[0][1] / &d],
            [-&self.m[1][0] / &d, &self.m[0][0] / &d],
        ];
        let b = [
            -(&m[0][0] * &self.b[0] + &m[0][1] * &self.b[1]),
            -(&m[1][0] * &self.b[0] + &m[1][1] * &self.b[1]),
        ];
        Some(Affine2 { m, b })
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Affine2) -> Affine2 {
        let mut m: [[Rational; 2]; 2] = Default::default();
        let mut b: [Rational; 2] = Default::default();
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = &self.m[i][0] * &inner.m[0][j] + &self.m[i][1] * &inner.m[1][j];
            }
            b[i] = &self.m[i][0] * &inner.b[0] + &self.m[i][1] * &inner.b[1] + &self.b[i];
        }
        Affine2 { m, b }
    }

    fn from_layer(l: &ExactLayer) -> Affine2 {
        Affine2 {
            m: [[l.w[0][0].clone(), l.w[0][1].clone()], [l.w[1][0].clone(), l.w[1][1].clone()]],
            b: [l.b[0].clone(), l.b[1].clone()],
        }
    }

    pub fn to_f64(&self) -> ([[f64; 2]; 2], [f64; 2]) {
        let f = exact::to_f64;
        ([[f(&self.m[0][0]), f(&self.m[0][1])], [f(&self.m[1][0]), f(&self.m[1][1])]], [f(&self.b[0]), f(&self.b[1])])
    }
}

/// `S = {x : <a_1,x> + b_1 >= 0, <a_2,x> + b_2 >= 0}`, the set a folding layer fixes.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrant {
    pub phi: Affine2,
}

impl Quadrant {
    pub fn contains(&self, p: &P2) -> bool {
        let z = self.phi.apply(p);
        !z.x.is_negative() && !z.y.is_negative()
    }

    pub fn on_boundary(&self, p: &P2) -> bool {
        let z = self.phi.apply(p);
        !z.x.is_negative() && !z.y.is_negative() && (z.x.is_zero() || z.y.is_zero())
    }
}

/// Axis-aligned open rectangle `(x0, x1) x (y0, y1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rect {
    pub x0: Rational,
    pub x1: Rational,
    pub y0: Rational,
    pub y1: Rational,
}

impl Rect {
    pub fn new(x0: Rational, x1: Rational, y0: Rational, y1: Rational) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::InvalidParameter("empty rectangle".into()));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    /// `(-2, 2) x (-1, 1)`.
    pub fn reference() -> Self {
        Self { x0: exact::int(-2), x1: exact::int(2), y0: exact::int(-1), y1: exact::int(1) }
    }

    pub fn corners(&self) -> [P2; 4] {
        [
            P2::new(self.x0.clone(), self.y0.clone()),
            P2::new(self.x1.clone(), self.y0.clone()),
            P2::new(self.x1.clone(), self.y1.clone()),
            P2::new(self.x0.clone(), self.y1.clone()),
        ]
    }

    pub fn contains_open(&self, p: &P2) -> bool {
        p.x > self.x0 && p.x < self.x1 && p.y > self.y0 && p.y < self.y1
    }

    pub fn contains_closed(&self, p: &P2) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn boundary(&self) -> Vec<(P2, P2)> {
        let c = self.corners();
        (0..4).map(|i| (c[i].clone(), c[(i + 1) % 4].clone())).collect()
    }
}

/// Decomposition of a width-2 network `R -> R^2` into `t_dag` and the `phi_l`.
#[derive(Debug, Clone)]
pub struct Reformulation {
    /// `t_dag(x) = dir * x + offset`.
    pub dir: P2,
    pub offset: P2,
    /// `phi_1 ... phi_{L-1}`; index `l - 1`.
    pub phis: Vec<Affine2>,
    /// Layers (1-based) whose weight matrix was nudged to make it invertible.
    pub perturbed: Vec<usize>,
    /// The network actually decomposed (equal to the input unless perturbed).
    pub network: Network,
}

/// Size of the nudge applied to a singular 2x2 layer.
pub const PERTURBATION: f64 = 1.0 / (1u64 << 30) as f64;

impl Reformulation {
    pub fn hidden_layers(&self) -> usize {
        self.phis.len()
    }

    pub fn quadrant(&self, l: usize) -> Quadrant {
        Quadrant { phi: self.phis[l - 1].clone() }
    }

    /// `t_dag([lo, hi])`.
    pub fn initial_image(&self, lo: &Rational, hi: &Rational) -> Polyline {
        let at = |t: &Rational| &self.offset + &self.dir.scale(t);
        Polyline::new(vec![Vertex { t: lo.clone(), p: at(lo) }, Vertex { t: hi.clone(), p: at(hi) }])
            .expect("lo < hi")
    }

    pub fn t_dagger(&self, x: &Rational) -> P2 {
        &self.offset + &self.dir.scale(x)
    }

    /// `phi_l^{-1} ∘ σ ∘ phi_l (p)`.
    pub fn fold_point(&self, l: usize, p: &P2) -> P2 {
        let phi = &self.phis[l - 1];
        let z = phi.apply(p);
        let z = P2::new(exact::relu(&z.x), exact::relu(&z.y));
        phi.inverse().expect("invertible").apply(&z)
    }
}

fn check_width_two(net: &Network) -> Result<()> {
    if net.dx() != 1 || net.dy() != 2 {
        return Err(Error::Precondition(format!("need a network R -> R^2, got dx={}, dy={}", net.dx(), net.dy())));
    }
    for (i, l) in net.hidden_layers().iter().enumerate() {
        if l.d_out() != 2 {
            return Err(Error::Precondition(format!("hidden layer {} has width {}", i + 1, l.d_out())));
        }
        if l.activations.iter().any(|a| *a != Activation::Relu) {
            return Err(Error::Precondition(format!("hidden layer {} is not pure ReLU", i + 1)));
        }
    }
    Ok(())
}

/// Computes `t_dag` and `phi_1, ..., phi_{L-1}`. Singular 2x2 layers are nudged by
/// at most `PERTURBATION` per entry first.
pub fn reformulate(net: &Network) -> Result<Reformulation> {
    check_width_two(net)?;
    let mut layers: Vec<Layer> = net.layers().to_vec();
    let mut perturbed = Vec::new();
    let mut exact_layers = Vec::with_capacity(layers.len());
    for (i, layer) in layers.iter_mut().enumerate() {
        let mut el = ExactLayer::from_layer(layer)?;
        if i > 0 {
            let mut k = 0;
            while Affine2::from_layer(&el).det().is_zero() {
                // alternate +eps I and +eps diag(1, -1) until invertible
                let e = PERTURBATION;
                let (d0, d1) = if k % 2 == 0 { (e, e) } else { (e, -e) };
                layer.weights[0][0] += d0;
                layer.weights[1][1] += d1;
                el = ExactLayer::from_layer(layer)?;
                k += 1;
            }
            if k > 0 {
                perturbed.push(i + 1);
            }
        }
        exact_layers.push(el);
    }
    let network = Network::new(1, layers)?;
    let depth = exact_layers.len();
    // tail = t_L ∘ ... ∘ t_{l+1}, built from l = L-1 downwards
    let mut phis = vec![Affine2::identity(); depth - 1];
    let mut tail = Affine2::identity();
    for l in (1..depth).rev() {
        tail = tail.compose(&Affine2::from_layer(&exact_layers[l]));
        phis[l - 1] = tail.inverse().expect("layers made invertible");
    }
    let first = &exact_layers[0];
    let (dir, offset) = if depth == 1 {
        (P2::new(first.w[0][0].clone(), first.w[1][0].clone()), P2::new(first.b[0].clone(), first.b[1].clone()))
    } else {
        let lin = Affine2 { b: [Rational::zero(), Rational::zero()], ..tail.clone() };
        let d = lin.apply(&P2::new(first.w[0][0].clone(), first.w[1][0].clone()));
        let o = tail.apply(&P2::new(first.b[0].clone(), first.b[1].clone()));
        (d, o)
    };
    Ok(Reformulation { dir, offset, phis, perturbed, network })
}

/// `phi^{-1} ∘ σ ∘ phi` applied to a polyline, splitting segments where a
/// coordinate of `phi` changes sign.
pub fn fold(phi: &Affine2, curve: &Polyline) -> Polyline {
    let inv = phi.inverse().expect("invertible");
    let vs = curve.vertices();
    let zs: Vec<P2> = vs.iter().map(|v| phi.apply(&v.p)).collect();
    let mut out: Vec<Vertex> = Vec::with_capacity(vs.len());
    let mut push = |t: Rational, z: P2| {
        let z = P2::new(exact::relu(&z.x), exact::relu(&z.y));
        out.push(Vertex { t, p: inv.apply(&z) });
    };
    for i in 0..vs.len() {
        if i > 0 {
            let (za, zb) = (&zs[i - 1], &zs[i]);
            let mut lambdas = Vec::new();
            for (a, b) in [(&za.x, &zb.x), (&za.y, &zb.y)] {
                if (a.is_negative() && b.is_positive()) || (a.is_positive() && b.is_negative()) {
                    lambdas.push(a / (a - b));
                }
            }
            lambdas.sort();
            lambdas.dedup();
            for lam in lambdas {
                let t = &vs[i - 1].t + (&vs[i].t - &vs[i - 1].t) * &lam;
                push(t, za.lerp(zb, &lam));
            }
        }
        push(vs[i].t.clone(), zs[i].clone());
    }
    Polyline::new(out).expect("parameters stay increasing")
}

/// Images `g_0 = t_dag([lo,hi]), g_1, ..., g_{L-1}` (index = layer).
pub fn propagate(reform: &Reformulation, lo: &Rational, hi: &Rational) -> Vec<Polyline> {
    propagate_curve(reform, reform.initial_image(lo, hi))
}

/// Folds an arbitrary starting curve through every layer.
pub fn propagate_curve(reform: &Reformulation, g0: Polyline) -> Vec<Polyline> {
    let mut out = vec![g0];
    for phi in &reform.phis {
        let next = fold(phi, out.last().unwrap());
        out.push(next);
    }
    out
}

/// Every vertex of `after` either equals the corresponding point of `before` and
/// lies in `S`, or lies on `∂S` while the original point is outside `S`.
pub fn quadrant_invariant_holds(q: &Quadrant, before: &Polyline, after: &Polyline) -> bool {
    after.vertices().iter().all(|v| {
        let x = before.eval(&v.t);
        if q.contains(&x) {
            v.p == x
        } else {
            v.p != x && q.on_boundary(&v.p)
        }
    })
}

/// Largest layer `l` whose fold moves some point of the box (its quadrant misses a
/// corner of the closed box); 0 if every layer fixes it.
pub fn find_box_stable_layer(reform: &Reformulation, rect: &Rect) -> usize {
    let corners = rect.corners();
    (1..=reform.hidden_layers())
        .rev()
        .find(|&l| {
            let q = reform.quadrant(l);
            !corners.iter().all(|c| q.contains(c))
        })
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn width2(rng: &mut ChaCha8Rng, depth: usize) -> Network {
        let mut layers = Vec::new();
        for i in 0..depth {
            let din = if i == 0 { 1 } else { 2 };
            let w = (0..2).map(|_| (0..din).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let b = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let act = if i + 1 == depth { Activation::Identity } else { Activation::Relu };
            layers.push(Layer::new(w, b, vec![act; 2]));
        }
        Network::new(1, layers).unwrap()
    }

    #[test]
    fn path_matches_forward_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let net = width2(&mut rng, 5);
            let path = network_path(&net, &exact::int(0), &exact::int(1)).unwrap().to_polyline().unwrap();
            for i in 0..=200 {
                let t = i as f64 / 200.0;
                let (a, b) = (path.eval_f64(t), net.forward(&[t]));
                assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn reformulation_recomposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = width2(&mut rng, 2);
        let r = reformulate(&net).unwrap();
        let t2 = Affine2::from_layer(&ExactLayer::from_layer(&net.layers()[1]).unwrap());
        assert_eq!(r.phis[0], t2.inverse().unwrap());
        for i in 0..100 {
            let x = exact::from_f64(i as f64 / 50.0 - 1.0).unwrap();
            let mut p = r.t_dagger(&x);
            p = r.fold_point(1, &p);
            let want = net.forward(&[exact::to_f64(&x)]);
            let got = p.to_f64();
            assert!((got[0] - want[0]).abs() < 1e-8 && (got[1] - want[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn singular_layer_is_perturbed() {
        let layers = vec![
            Layer::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.5], vec![Activation::Relu; 2]),
            Layer::new(vec![vec![1.0, 1.0], vec![2.0, 2.0]], vec![0.0, 0.0], vec![Activation::Relu; 2]),
            Layer::affine(vec![vec![1.0, 0.5], vec![0.0, 1.0]], vec![0.0, 0.0]),
        ];
        let net = Network::new(1, layers).unwrap();
        let r = reformulate(&net).unwrap();
        assert_eq!(r.perturbed, vec![2]);
        let g = propagate(&r, &exact::int(-1), &exact::int(1));
        let last = g.last().unwrap();
        for i in 0..=100 {
            let t = i as f64 / 50.0 - 1.0;
            let (a, b) = (last.eval_f64(t), net.forward(&[t]));
            assert!((a[0] - b[0]).abs() < 1e-6 && (a[1] - b[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn fold_left_half_plane() {
        let q = Quadrant { phi: Affine2::identity() };
        let seg = Polyline::from_f64(&[(0.0, -1.0, 0.0), (1.0, 1.0, 0.0)]).unwrap();
        let folded = fold(&q.phi, &seg);
        assert_eq!(folded.len(), 3);
        assert_eq!(folded.vertices()[0].p, P2::ints(0, 0));
        assert_eq!(folded.vertices()[1].t, exact::ratio(1, 2));
        assert!(quadrant_invariant_holds(&q, &seg, &folded));
    }

    #[test]
    fn identity_pattern_keeps_vertices() {
        // both hidden units positive on the image: no folding
        let layers = vec![
            Layer::new(vec![vec![1.0], vec![1.0]], vec![2.0, 3.0], vec![Activation::Relu; 2]),
            Layer::affine(vec![vec![1.0, 2.0], vec![0.0, 1.0]], vec![0.0, 0.0]),
        ];
        let net = Network::new(1, layers).unwrap();
        let r = reformulate(&net).unwrap();
        let g = propagate(&r, &exact::int(0), &exact::int(1));
        assert_eq!(g[1], g[0]);
        assert_eq!(g[1].len(), 2);
    }

    #[test]
    fn box_stable_layer() {
        let big = vec![
            Layer::new(vec![vec![1.0], vec![-1.0]], vec![10.0, 10.0], vec![Activation::Relu; 2]),
            Layer::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![-10.0, -10.0], vec![Activation::Relu; 2]),
            Layer::affine(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]),
        ];
        let net = Network::new(1, big).unwrap();
        let r = reformulate(&net).unwrap();
        // phi_2 = identity: quadrant x >= 0, y >= 0 misses box corners
        assert_eq!(find_box_stable_layer(&r, &Rect::reference()), 2);
        let shifted = vec![
            Layer::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0], vec![Activation::Relu; 2]),
            Layer::affine(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![-5.0, -5.0]),
        ];
        let r = reformulate(&Network::new(1, shifted).unwrap()).unwrap();
        // phi_1(y) = y + 5 is nonnegative on the whole box
        assert_eq!(find_box_stable_layer(&r, &Rect::reference()), 0);
    }
}
