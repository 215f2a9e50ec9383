//! Exact orientation, incidence and distance predicates.

use std::cmp::Ordering;

use num_traits::{Signed, Zero};

use super::{Polyline, P2};
use crate::exact::Rational;

pub fn cross(a: &P2, b: &P2) -> Rational {
    &a.x * &b.y - &a.y * &b.x
}

pub fn dot(a: &P2, b: &P2) -> Rational {
    &a.x * &b.x + &a.y * &b.y
}

/// Sign of the turn `a -> b -> c`.
pub fn orient(a: &P2, b: &P2, c: &P2) -> Ordering {
    cross(&(b - a), &(c - a)).cmp(&Rational::zero())
}

/// `p` on the closed segment `[a, b]`.
pub fn on_segment(p: &P2, a: &P2, b: &P2) -> bool {
    if orient(a, b, p) != Ordering::Equal {
        return false;
    }
    let within = |u: &Rational, v: &Rational, w: &Rational| (u <= w && w <= v) || (v <= w && w <= u);
    within(&a.x, &b.x, &p.x) && within(&a.y, &b.y, &p.y)
}

/// Closed segments `[a, b]` and `[c, d]` share a point.
pub fn segments_intersect(a: &P2, b: &P2, c: &P2, d: &P2) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 != o2 && o3 != o4 && o1 != Ordering::Equal && o2 != Ordering::Equal && o3 != Ordering::Equal && o4 != Ordering::Equal {
        return true;
    }
    on_segment(c, a, b) || on_segment(d, a, b) || on_segment(a, c, d) || on_segment(b, c, d)
}

pub fn polylines_intersect(p: &Polyline, q: &Polyline) -> bool {
    for (a, b) in p.segments() {
        let (pminx, pmaxx) = minmax(&a.x, &b.x);
        let (pminy, pmaxy) = minmax(&a.y, &b.y);
        for (c, d) in q.segments() {
            let (qminx, qmaxx) = minmax(&c.x, &d.x);
            let (qminy, qmaxy) = minmax(&c.y, &d.y);
            if pmaxx < qminx || qmaxx < pminx || pmaxy < qminy || qmaxy < pminy {
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

fn minmax<'a>(a: &'a Rational, b: &'a Rational) -> (&'a Rational, &'a Rational) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Intersection parameter `s` in `[0,1]` of segment `a + s (b - a)` with the line
/// through `c, d`, if the segment crosses or touches it at a single point.
fn segment_line_param(a: &P2, b: &P2, c: &P2, d: &P2) -> Option<Rational> {
    let dir = d - c;
    let ca = cross(&dir, &(a - c));
    let cb = cross(&dir, &(b - c));
    let den = &ca - &cb;
    if den.is_zero() {
        return None;
    }
    let s = &ca / &den;
    (s >= Rational::zero() && s <= Rational::from_integer(1.into())).then_some(s)
}

/// Exact `min ||p - q||_inf` over `p` in `[a, b]`, `q` in `[c, d]`.
///
/// The minimum of the sup norm over the parallelogram `[a,b] - [c,d]` is attained
/// at a vertex or where an edge meets one of the lines `x = y`, `x = -y`, `x = 0`,
/// `y = 0`.
pub fn segment_sup_distance(a: &P2, b: &P2, c: &P2, d: &P2) -> Rational {
    if segments_intersect(a, b, c, d) {
        return Rational::zero();
    }
    let corners = [a - c, a - d, b - c, b - d];
    let edges = [(0, 1), (2, 3), (0, 2), (1, 3)];
    let zero = P2::ints(0, 0);
    let lines = [P2::ints(1, 1), P2::ints(1, -1), P2::ints(0, 1), P2::ints(1, 0)];
    let mut best = corners.iter().map(P2::sup_norm).min().unwrap();
    for (i, j) in edges {
        let (p, q) = (&corners[i], &corners[j]);
        for dir in &lines {
            if let Some(s) = segment_line_param(p, q, &zero, dir) {
                let v = p.lerp(q, &s).sup_norm();
                if v < best {
                    best = v;
                }
            }
        }
    }
    best.abs()
}

pub fn polyline_sup_separation(p: &Polyline, q: &Polyline) -> Rational {
    let mut best: Option<Rational> = None;
    for (a, b) in p.segments() {
        for (c, d) in q.segments() {
            let v = segment_sup_distance(a, b, c, d);
            if best.as_ref().is_none_or(|m| v < *m) {
                best = Some(v);
            }
        }
    }
    best.unwrap_or_else(Rational::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact;

    fn p(x: i64, y: i64) -> P2 {
        P2::ints(x, y)
    }

    #[test]
    fn intersections() {
        assert!(segments_intersect(&p(0, 0), &p(2, 2), &p(0, 2), &p(2, 0)));
        assert!(segments_intersect(&p(0, 0), &p(2, 0), &p(2, 0), &p(3, 5)));
        assert!(segments_intersect(&p(0, 0), &p(4, 0), &p(1, 0), &p(2, 0)));
        assert!(!segments_intersect(&p(0, 0), &p(1, 0), &p(2, 0), &p(3, 0)));
        assert!(!segments_intersect(&p(0, 0), &p(1, 1), &p(0, 1), &p(-1, 3)));
    }

    #[test]
    fn sup_distances() {
        assert_eq!(segment_sup_distance(&p(0, 0), &p(0, 3), &p(1, 0), &p(1, 2)), exact::int(1));
        // diagonal offset: closest in the sup norm along x = y
        assert_eq!(segment_sup_distance(&p(0, 0), &p(0, 0), &p(1, 3), &p(3, 1)), exact::int(2));
        assert_eq!(segment_sup_distance(&p(0, 0), &p(2, 2), &p(2, 0), &p(0, 2)), exact::int(0));
        assert_eq!(segment_sup_distance(&p(0, 0), &p(4, 0), &p(2, 3), &p(2, 5)), exact::int(3));
    }

    #[test]
    fn sup_distance_matches_dense_search() {
        let a = P2::from_f64(0.3, -1.0).unwrap();
        let b = P2::from_f64(2.0, 0.5).unwrap();
        let c = P2::from_f64(1.5, 2.0).unwrap();
        let d = P2::from_f64(3.0, 1.25).unwrap();
        let exact_v = exact::to_f64(&segment_sup_distance(&a, &b, &c, &d));
        let (af, bf, cf, df) = (a.to_f64(), b.to_f64(), c.to_f64(), d.to_f64());
        let mut best = f64::INFINITY;
        let n = 800;
        for i in 0..=n {
            let s = i as f64 / n as f64;
            let u = [af[0] + s * (bf[0] - af[0]), af[1] + s * (bf[1] - af[1])];
            for j in 0..=n {
                let r = j as f64 / n as f64;
                let v = [cf[0] + r * (df[0] - cf[0]), cf[1] + r * (df[1] - cf[1])];
                best = best.min((u[0] - v[0]).abs().max((u[1] - v[1]).abs()));
            }
        }
        assert!(exact_v <= best + 1e-12 && best - exact_v < 5e-3);
    }
}
