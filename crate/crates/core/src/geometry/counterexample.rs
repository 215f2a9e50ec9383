//! A curve `[0,1] -> R^2` that width-3 networks represent exactly and width-2
//! networks cannot approximate within 1/100.

use num_traits::Zero;

use super::predicates::polyline_sup_separation;
use super::propagate::Rect;
use super::{Polyline, Vertex, P2};
use crate::exact::{self, Rational};

#[derive(Debug, Clone)]
pub struct Counterexample {
    pub curve: Polyline,
    /// End of the red part.
    pub p1: Rational,
    /// Start of the blue part.
    pub p2: Rational,
    /// `curve(q) = (0, 1/2)`, on the red part.
    pub q: Rational,
    pub rect: Rect,
}

impl Counterexample {
    pub fn red(&self) -> Polyline {
        self.curve.restrict(&exact::int(0), &self.p1)
    }

    pub fn black(&self) -> Polyline {
        self.curve.restrict(&self.p1, &self.p2)
    }

    pub fn blue(&self) -> Polyline {
        self.curve.restrict(&self.p2, &exact::int(1))
    }

    /// Knots and values as floats, for the PL constructors.
    pub fn knots_f64(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        self.curve
            .vertices()
            .iter()
            .map(|v| (exact::to_f64(&v.t), v.p.to_f64().to_vec()))
            .unzip()
    }
}

/// Points where `curve` meets the horizontal line `y = c`, in parameter order.
pub fn crossings_of_horizontal(curve: &Polyline, c: &Rational) -> Vec<P2> {
    let mut out: Vec<P2> = Vec::new();
    for (a, b) in curve.segments() {
        let (da, db) = (&a.y - c, &b.y - c);
        let hit = if da.is_zero() {
            Some(a.clone())
        } else if db.is_zero() {
            None
        } else if (da < Rational::zero()) != (db < Rational::zero()) {
            Some(a.lerp(b, &(&da / (&da - &db))))
        } else {
            None
        };
        if let Some(p) = hit {
            if out.last() != Some(&p) {
                out.push(p);
            }
        }
    }
    if let Some(last) = curve.vertices().last() {
        if last.p.y == *c && out.last() != Some(&last.p) {
            out.push(last.p.clone());
        }
    }
    out
}

/// Red `(4,3) -> (0,3) -> (0,0)` on `[0,1/3]`, black `(0,0) -> (-1,0)` on
/// `[1/3,2/3]`, blue `(-1,0) -> (-1,6) -> (6,6) -> (6,2) -> (1,2) -> (1,0)` on
/// `[2/3,1]`; each part is parameterized proportionally to arc length.
pub fn counterexample_curve() -> Counterexample {
    let pts = |v: &[(i64, i64)]| v.iter().map(|&(x, y)| P2::ints(x, y)).collect::<Vec<_>>();
    let parts = [
        (exact::int(0), exact::ratio(1, 3), pts(&[(4, 3), (0, 3), (0, 0)])),
        (exact::ratio(1, 3), exact::ratio(2, 3), pts(&[(0, 0), (-1, 0)])),
        (exact::ratio(2, 3), exact::int(1), pts(&[(-1, 0), (-1, 6), (6, 6), (6, 2), (1, 2), (1, 0)])),
    ];
    let mut vertices: Vec<Vertex> = Vec::new();
    for (t0, t1, ps) in parts {
        // axis-parallel legs: sup norm is the length
        let lens: Vec<Rational> = ps.windows(2).map(|w| (&w[1] - &w[0]).sup_norm()).collect();
        let total: Rational = lens.iter().sum();
        let mut acc = Rational::zero();
        for (i, p) in ps.iter().enumerate() {
            if i > 0 {
                acc += &lens[i - 1];
            }
            let t = &t0 + (&t1 - &t0) * &acc / &total;
            if vertices.last().is_some_and(|v| v.t == t) {
                continue;
            }
            vertices.push(Vertex { t, p: p.clone() });
        }
    }
    let curve = Polyline::new(vertices).expect("increasing parameters");
    let c = Counterexample { curve, p1: exact::ratio(1, 3), p2: exact::ratio(2, 3), q: exact::ratio(13, 42), rect: Rect::reference() };
    check_constraints(&c);
    c
}

fn check_constraints(c: &Counterexample) {
    let f = &c.curve;
    assert_eq!(f.eval(&exact::int(0)), P2::ints(4, 3));
    assert_eq!(f.eval(&exact::int(1)), P2::ints(1, 0));
    assert_eq!(f.eval(&c.p1), P2::ints(0, 0));
    assert_eq!(f.eval(&c.p2), P2::ints(-1, 0));
    assert_eq!(f.eval(&c.q), P2::new(exact::int(0), exact::ratio(1, 2)));
    assert!(c.q > Rational::zero() && c.q < c.p1);
    assert!(polyline_sup_separation(&c.red(), &c.blue()) >= exact::int(1));
    let one = exact::int(1);
    assert_eq!(crossings_of_horizontal(&c.red(), &one), vec![P2::ints(0, 1)]);
    assert_eq!(crossings_of_horizontal(&c.blue(), &one), vec![P2::ints(-1, 1), P2::ints(1, 1)]);
    assert!(!c.rect.contains_closed(f.start()));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::parity::{parity, Barrier};

    #[test]
    fn breakpoints() {
        let c = counterexample_curve();
        let ts: Vec<Rational> = c.curve.vertices().iter().map(|v| v.t.clone()).collect();
        let want = [
            exact::int(0),
            exact::ratio(4, 21),
            exact::ratio(1, 3),
            exact::ratio(2, 3),
            exact::ratio(3, 4),
            exact::ratio(61, 72),
            exact::ratio(65, 72),
            exact::ratio(70, 72),
            exact::int(1),
        ];
        assert_eq!(ts, want);
        assert_eq!(polyline_sup_separation(&c.red(), &c.blue()), exact::int(1));
    }

    #[test]
    fn red_start_enclosed_by_blue_and_box() {
        let c = counterexample_curve();
        // blue detour outside the box, closed along the top edge
        let detour = c.curve.restrict(&exact::ratio(49, 72), &exact::ratio(71, 72));
        assert_eq!(detour.start(), &P2::ints(-1, 1));
        assert_eq!(detour.end(), &P2::ints(1, 1));
        let mut b = Barrier::new();
        b.push_closed(&detour);
        assert_eq!(parity(c.curve.start(), &b).unwrap(), 1);
        let mut closed = Barrier::new();
        closed.push_closed(&c.blue());
        assert_eq!(parity(&c.curve.eval(&c.q), &closed).unwrap(), 1);
    }
}
