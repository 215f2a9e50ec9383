//! Even-odd point location against a finite union of segments.

use num_traits::{Signed, Zero};

use super::predicates::{cross, dot, on_segment};
use super::propagate::Rect;
use super::{Polyline, P2};
use crate::error::{Error, Result};

/// Finite set of closed segments.
#[derive(Debug, Clone, Default)]
pub struct Barrier {
    segments: Vec<(P2, P2)>,
}

/// The fan of ray directions; all must agree.
const FAN: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

impl Barrier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn segments(&self) -> &[(P2, P2)] {
        &self.segments
    }

    pub fn push_segment(&mut self, a: P2, b: P2) -> &mut Self {
        self.segments.push((a, b));
        self
    }

    pub fn push_polyline(&mut self, p: &Polyline) -> &mut Self {
        for (a, b) in p.segments() {
            self.segments.push((a.clone(), b.clone()));
        }
        self
    }

    /// The polyline plus the chord from its end back to its start.
    pub fn push_closed(&mut self, p: &Polyline) -> &mut Self {
        self.push_polyline(p);
        if p.start() != p.end() {
            self.segments.push((p.end().clone(), p.start().clone()));
        }
        self
    }

    pub fn push_rect(&mut self, r: &Rect) -> &mut Self {
        self.segments.extend(r.boundary());
        self
    }

    pub fn contains(&self, p: &P2) -> bool {
        self.segments.iter().any(|(a, b)| on_segment(p, a, b))
    }

    /// Proper crossings of the ray `p + s d, s > 0`, or `None` if the ray touches
    /// a segment endpoint.
    fn crossings(&self, p: &P2, d: &P2) -> Option<usize> {
        let mut n = 0;
        for (a, b) in &self.segments {
            for v in [a, b] {
                let w = v - p;
                if cross(d, &w).is_zero() && dot(d, &w).is_positive() {
                    return None;
                }
            }
            let e = b - a;
            let den = cross(d, &e);
            if den.is_zero() {
                continue;
            }
            let ap = a - p;
            // p + s d = a + u e
            let s = cross(&ap, &e) / &den;
            let u = cross(&ap, d) / &den;
            if s.is_positive() && u.is_positive() && u < num_traits::One::one() {
                n += 1;
            }
        }
        Some(n)
    }

    /// Parity along one fan direction, nudged sideways until the ray is generic.
    fn parity_along(&self, p: &P2, dir: (i64, i64)) -> u8 {
        let base = P2::ints(97 * dir.0, 97 * dir.1);
        let perp = P2::ints(-dir.1, dir.0);
        let mut j = 0i64;
        loop {
            let d = &base + &perp.scale(&crate::exact::int(j));
            if let Some(n) = self.crossings(p, &d) {
                return (n % 2) as u8;
            }
            j = if j <= 0 { 1 - j } else { -j };
        }
    }
}

/// 1 iff `point` lies in a bounded component of the complement of `barrier`.
pub fn parity(point: &P2, barrier: &Barrier) -> Result<u8> {
    parity_fan(point, barrier).map(|v| v[0])
}

/// Parity along each of the eight fan directions; errors unless they agree.
pub fn parity_fan(point: &P2, barrier: &Barrier) -> Result<[u8; 8]> {
    if barrier.contains(point) {
        return Err(Error::OnBarrier);
    }
    let mut out = [0u8; 8];
    for (o, dir) in out.iter_mut().zip(FAN) {
        *o = barrier.parity_along(point, dir);
    }
    if out.iter().any(|v| *v != out[0]) {
        return Err(Error::InconsistentParity);
    }
    Ok(out)
}
