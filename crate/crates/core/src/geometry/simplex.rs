//! Regular simplex with side `sqrt(2)` and the hyperplane-distance bound.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct SimplexReport {
    pub dy: usize,
    pub p: f64,
    pub vertices: Vec<Vec<f64>>,
    pub min_pairwise: f64,
    pub max_pairwise: f64,
    /// `|det(v_1 - v_0, ..., v_dy - v_0)| / dy!`.
    pub det_volume: f64,
    /// `sqrt(dy + 1) / dy!`.
    pub formula_volume: f64,
    /// `sqrt(dy+1) / (2 dy!) * Gamma((dy+1)/2) * (2/pi)^((dy-1)/2)`.
    pub hyperplane_bound: f64,
    /// `Vol(simplex) / (2 Vol(unit (dy-1)-ball))`.
    pub volume_argument_bound: f64,
    pub epsilon: f64,
}

/// `Gamma(n / 2)` for a positive integer `n`.
pub fn gamma_half(n: usize) -> f64 {
    assert!(n > 0);
    let (mut g, mut k) = if n % 2 == 0 { (1.0, 2) } else { (std::f64::consts::PI.sqrt(), 1) };
    while k < n {
        g *= k as f64 / 2.0;
        k += 2;
    }
    g
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Images of the standard basis of `R^(dy+1)` in the hyperplane `sum = 0`,
/// expressed in an orthonormal (Helmert) basis of it.
pub fn simplex_vertices(dy: usize) -> Vec<Vec<f64>> {
    (0..=dy)
        .map(|i| {
            (1..=dy)
                .map(|k| {
                    let norm = ((k * (k + 1)) as f64).sqrt();
                    if i < k {
                        1.0 / norm
                    } else if i == k {
                        -(k as f64) / norm
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn hyperplane_bound(dy: usize) -> f64 {
    let d = dy as f64;
    (d + 1.0).sqrt() / (2.0 * factorial(dy)) * gamma_half(dy + 1) * (2.0 / std::f64::consts::PI).powf((d - 1.0) / 2.0)
}

pub fn volume_argument_bound(dy: usize) -> f64 {
    let d = dy as f64;
    (d + 1.0).sqrt() * gamma_half(dy + 1) / (2.0 * factorial(dy) * std::f64::consts::PI.powf((d - 1.0) / 2.0))
}

/// Lower bound on the `L^p` error for the given output dimension.
pub fn epsilon(dy: usize, p: f64) -> f64 {
    let d = dy as f64;
    let base = hyperplane_bound(dy) / (2.0 * d + 1.0).powf(1.0 / p);
    if p >= 2.0 {
        d.powf(1.0 / p - 0.5) * base
    } else {
        base
    }
}

pub fn simplex_bound(dy: usize, p: f64) -> Result<SimplexReport> {
    if dy == 0 {
        return Err(Error::InvalidParameter("dy must be at least 1".into()));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must lie in [1, inf), got {p}")));
    }
    let vertices = simplex_vertices(dy);
    let mut min_pairwise = f64::INFINITY;
    let mut max_pairwise: f64 = 0.0;
    for i in 0..=dy {
        for j in i + 1..=dy {
            let d = dist(&vertices[i], &vertices[j]);
            min_pairwise = min_pairwise.min(d);
            max_pairwise = max_pairwise.max(d);
        }
    }
    let m = DMatrix::from_fn(dy, dy, |r, c| vertices[c + 1][r] - vertices[0][r]);
    let det_volume = m.determinant().abs() / factorial(dy);
    Ok(SimplexReport {
        dy,
        p,
        vertices,
        min_pairwise,
        max_pairwise,
        det_volume,
        formula_volume: ((dy + 1) as f64).sqrt() / factorial(dy),
        hyperplane_bound: hyperplane_bound(dy),
        volume_argument_bound: volume_argument_bound(dy),
        epsilon: epsilon(dy, p),
    })
}

/// `max_i dist(v_i, H)` for `H = {x : n.x = c}` with the best offset `c`.
pub fn max_vertex_distance(vertices: &[Vec<f64>], normal: &[f64]) -> f64 {
    let len = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
    let proj: Vec<f64> = vertices.iter().map(|v| v.iter().zip(normal).map(|(a, b)| a * b).sum::<f64>() / len).collect();
    let (lo, hi) = proj.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    (hi - lo) / 2.0
}

#[derive(Debug, Clone, Serialize)]
pub struct HyperplaneSearch {
    pub trials: usize,
    pub seed: u64,
    /// Smallest max-vertex distance over the random hyperplanes.
    pub random_min: f64,
    /// After descent from the best random hyperplanes.
    pub refined_min: f64,
}

/// Random unit normals followed by coordinate-wise descent from the ten best.
pub fn hyperplane_search(dy: usize, trials: usize, seed: u64) -> HyperplaneSearch {
    let vs = simplex_vertices(dy);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scored: Vec<(f64, Vec<f64>)> = (0..trials)
        .map(|_| {
            let n: Vec<f64> = (0..dy).map(|_| StandardNormal.sample(&mut rng)).collect();
            (max_vertex_distance(&vs, &n), n)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let random_min = scored.first().map_or(f64::INFINITY, |s| s.0);
    let mut refined_min = random_min;
    for (mut best, mut n) in scored.into_iter().take(10) {
        let mut step = 0.1;
        while step > 1e-7 {
            let mut improved = false;
            for _ in 0..4 * dy {
                let k = rng.random_range(0..dy);
                for sign in [1.0, -1.0] {
                    let mut cand = n.clone();
                    cand[k] += sign * step;
                    let d = max_vertex_distance(&vs, &cand);
                    if d < best {
                        best = d;
                        n = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        refined_min = refined_min.min(best);
    }
    HyperplaneSearch { trials, seed, random_min, refined_min }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert!((gamma_half(1) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(2), 1.0);
        assert_eq!(gamma_half(6), 2.0);
        assert!((gamma_half(5) - 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn pairwise_and_volume() {
        for dy in 1..=6 {
            let r = simplex_bound(dy, 2.0).unwrap();
            assert!((r.min_pairwise - 2f64.sqrt()).abs() < 1e-12);
            assert!((r.max_pairwise - 2f64.sqrt()).abs() < 1e-12);
            assert!((r.det_volume - r.formula_volume).abs() < 1e-9);
        }
    }

    #[test]
    fn known_bounds() {
        assert!((hyperplane_bound(1) - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((hyperplane_bound(3) - 0.1061).abs() < 1e-4);
        let e = epsilon(3, 2.0);
        assert!((e - 0.0401).abs() < 1e-4);
        assert!((epsilon(3, 1.0) - hyperplane_bound(3) / 7.0).abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_midpoint() {
        let vs = simplex_vertices(1);
        assert!((max_vertex_distance(&vs, &[1.0]) - 2f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn search_respects_bound() {
        for dy in 1..=3 {
            let s = hyperplane_search(dy, 2000, 7);
            assert!(s.refined_min <= s.random_min);
            assert!(s.refined_min >= hyperplane_bound(dy) - 1e-12, "{dy}: {s:?}");
        }
    }
}
