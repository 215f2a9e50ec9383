//! Exact planar geometry on images of width-2 ReLU networks.

pub mod affine;
pub mod counterexample;
pub mod diagnose;
pub mod parity;
pub mod predicates;
pub mod propagate;
pub mod simplex;

use std::io::Write;
use std::ops::{Add, Mul, Sub};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exact::{self, Rational};

pub use affine::check_affine_on_s;
pub use counterexample::{counterexample_curve, Counterexample};
pub use diagnose::{diagnose, diagnose_dir, diagnose_with, grid_sup_distance, local_search, random_corpus, random_width2_net, DiagnoseOptions, DiagnosticReport, Verdict};
pub use parity::{parity, parity_fan, Barrier};
pub use propagate::{find_box_stable_layer, fold, quadrant_invariant_holds, network_path, propagate, propagate_curve, reformulate, Affine2, ExactPath, Quadrant, Rect, Reformulation};
pub use simplex::{hyperplane_search, simplex_bound, HyperplaneSearch, SimplexReport};

/// Exact point in the plane.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct P2 {
    pub x: Rational,
    pub y: Rational,
}

impl P2 {
    pub fn new(x: Rational, y: Rational) -> Self {
        Self { x, y }
    }

    pub fn ints(x: i64, y: i64) -> Self {
        Self { x: exact::int(x), y: exact::int(y) }
    }

    pub fn from_f64(x: f64, y: f64) -> Result<Self> {
        Ok(Self { x: exact::from_f64(x)?, y: exact::from_f64(y)? })
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [exact::to_f64(&self.x), exact::to_f64(&self.y)]
    }

    pub fn scale(&self, s: &Rational) -> P2 {
        P2 { x: &self.x * s, y: &self.y * s }
    }

    /// `max(|x|, |y|)`.
    pub fn sup_norm(&self) -> Rational {
        let (ax, ay) = (num_traits::abs(self.x.clone()), num_traits::abs(self.y.clone()));
        if ax > ay {
            ax
        } else {
            ay
        }
    }

    /// `self + s (other - self)`.
    pub fn lerp(&self, other: &P2, s: &Rational) -> P2 {
        P2 { x: &self.x + (&other.x - &self.x) * s, y: &self.y + (&other.y - &self.y) * s }
    }
}

impl<'a> Sub<&'a P2> for &'a P2 {
    type Output = P2;
    fn sub(self, o: &P2) -> P2 {
        P2 { x: &self.x - &o.x, y: &self.y - &o.y }
    }
}

impl<'a> Add<&'a P2> for &'a P2 {
    type Output = P2;
    fn add(self, o: &P2) -> P2 {
        P2 { x: &self.x + &o.x, y: &self.y + &o.y }
    }
}

impl<'a> Mul<&'a Rational> for &'a P2 {
    type Output = P2;
    fn mul(self, s: &Rational) -> P2 {
        self.scale(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub t: Rational,
    pub p: P2,
}

/// Parameterized planar polyline; linear between vertices, `t` strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<Vertex>,
}

impl Polyline {
    pub fn new(vertices: Vec<Vertex>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidParameter("polyline needs a vertex".into()));
        }
        if vertices.windows(2).any(|w| w[0].t >= w[1].t) {
            return Err(Error::InvalidParameter("polyline parameters must be strictly increasing".into()));
        }
        Ok(Self { vertices })
    }

    pub fn from_f64(rows: &[(f64, f64, f64)]) -> Result<Self> {
        let vs = rows
            .iter()
            .map(|&(t, x, y)| Ok(Vertex { t: exact::from_f64(t)?, p: P2::from_f64(x, y)? }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vs)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn t_range(&self) -> (Rational, Rational) {
        (self.vertices[0].t.clone(), self.vertices.last().unwrap().t.clone())
    }

    pub fn start(&self) -> &P2 {
        &self.vertices[0].p
    }

    pub fn end(&self) -> &P2 {
        &self.vertices.last().unwrap().p
    }

    /// Value at `t`, clamped to the parameter range.
    pub fn eval(&self, t: &Rational) -> P2 {
        let vs = &self.vertices;
        if *t <= vs[0].t {
            return vs[0].p.clone();
        }
        if *t >= vs.last().unwrap().t {
            return vs.last().unwrap().p.clone();
        }
        let i = vs.partition_point(|v| v.t <= *t);
        let (a, b) = (&vs[i - 1], &vs[i]);
        if a.t == *t {
            return a.p.clone();
        }
        let s = (t - &a.t) / (&b.t - &a.t);
        a.p.lerp(&b.p, &s)
    }

    pub fn eval_f64(&self, t: f64) -> [f64; 2] {
        let vs = &self.vertices;
        let tf: Vec<f64> = vs.iter().map(|v| exact::to_f64(&v.t)).collect();
        if t <= tf[0] {
            return vs[0].p.to_f64();
        }
        if t >= *tf.last().unwrap() {
            return vs.last().unwrap().p.to_f64();
        }
        let i = tf.partition_point(|v| *v <= t);
        let (a, b) = (vs[i - 1].p.to_f64(), vs[i].p.to_f64());
        let s = (t - tf[i - 1]) / (tf[i] - tf[i - 1]);
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }

    /// Sub-polyline over `[t0, t1]`.
    pub fn restrict(&self, t0: &Rational, t1: &Rational) -> Polyline {
        let mut vs = vec![Vertex { t: t0.clone(), p: self.eval(t0) }];
        for v in &self.vertices {
            if v.t > *t0 && v.t < *t1 {
                vs.push(v.clone());
            }
        }
        if t1 > t0 {
            vs.push(Vertex { t: t1.clone(), p: self.eval(t1) });
        }
        Polyline { vertices: vs }
    }

    pub fn segments(&self) -> impl Iterator<Item = (&P2, &P2)> + '_ {
        let single = self.vertices.len() == 1;
        let first = &self.vertices[0].p;
        self.vertices
            .windows(2)
            .map(|w| (&w[0].p, &w[1].p))
            .chain(single.then_some((first, first)))
    }

    pub fn map_points(&self, f: impl Fn(&P2) -> P2) -> Polyline {
        Polyline { vertices: self.vertices.iter().map(|v| Vertex { t: v.t.clone(), p: f(&v.p) }).collect() }
    }

    /// Removes vertices interior to a straight, constant-speed run.
    pub fn simplified(&self) -> Polyline {
        let vs = &self.vertices;
        if vs.len() <= 2 {
            return self.clone();
        }
        let mut out = vec![vs[0].clone()];
        for i in 1..vs.len() - 1 {
            let a = out.last().unwrap();
            let (b, c) = (&vs[i], &vs[i + 1]);
            let s = (&b.t - &a.t) / (&c.t - &a.t);
            if a.p.lerp(&c.p, &s) != b.p {
                out.push(b.clone());
            }
        }
        out.push(vs.last().unwrap().clone());
        Polyline { vertices: out }
    }

    /// CSV rows `t,x,y` at every vertex.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["t", "x", "y"])?;
        for v in &self.vertices {
            let [x, y] = v.p.to_f64();
            wtr.write_record([exact::to_f64(&v.t).to_string(), x.to_string(), y.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Exact `sup_t ||a(t) - b(t)||_inf` for polylines on a common parameter interval.
///
/// The difference is linear between consecutive points of the merged breakpoint
/// set and a convex function of a linear map peaks at an endpoint, so the merged
/// breakpoints suffice.
pub fn pl_sup_distance(a: &Polyline, b: &Polyline) -> Result<Rational> {
    if a.t_range() != b.t_range() {
        return Err(Error::InvalidParameter("polylines must share their parameter interval".into()));
    }
    let mut ts: Vec<&Rational> = a.vertices.iter().chain(&b.vertices).map(|v| &v.t).collect();
    ts.sort();
    ts.dedup();
    let mut best = Rational::zero();
    for t in ts {
        let d = (&a.eval(t) - &b.eval(t)).sup_norm();
        if d > best {
            best = d;
        }
    }
    Ok(best)
}
