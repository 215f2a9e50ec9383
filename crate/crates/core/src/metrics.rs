//! Error measurement between a network and a target on the target's domain box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Network, NumericMode};
use crate::target::TargetFunction;

pub use crate::geometry::pl_sup_distance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Quadrature {
    /// `resolution` points per axis: endpoints included for sup, cell midpoints for `L^p`.
    Grid { resolution: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Quadrature {
    pub fn grid(resolution: usize) -> Self {
        Self::Grid { resolution }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self::MonteCarlo { samples, seed }
    }

    pub fn resolution(&self) -> usize {
        match *self {
            Self::Grid { resolution } => resolution,
            Self::MonteCarlo { samples, .. } => samples,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            Self::Grid { .. } => None,
            Self::MonteCarlo { seed, .. } => Some(seed),
        }
    }

    fn validate(&self, dx: usize) -> Result<()> {
        let n = self.resolution();
        if n < 2 {
            return Err(Error::InvalidParameter(format!("quadrature resolution must be at least 2, got {n}")));
        }
        if let Self::Grid { resolution } = *self {
            let total = (resolution as f64).powi(dx as i32);
            if total > 1e8 {
                return Err(Error::Budget(format!("{resolution}^{dx} grid points")));
            }
        }
        Ok(())
    }

    /// Quadrature points in `domain`; `midpoints` selects cell centres for grids.
    pub fn points(&self, domain: &[(f64, f64)], midpoints: bool) -> Result<Vec<Vec<f64>>> {
        let dx = domain.len();
        self.validate(dx)?;
        Ok(match *self {
            Self::Grid { resolution: r } => {
                let total = r.pow(dx as u32);
                (0..total)
                    .map(|mut idx| {
                        let mut x = vec![0.0; dx];
                        // last coordinate varies fastest
                        for c in (0..dx).rev() {
                            let k = idx % r;
                            idx /= r;
                            let s = if midpoints { (k as f64 + 0.5) / r as f64 } else { k as f64 / (r - 1) as f64 };
                            let (lo, hi) = domain[c];
                            x[c] = lo + s * (hi - lo);
                        }
                        x
                    })
                    .collect()
            }
            Self::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..samples).map(|_| domain.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect()).collect()
            }
        })
    }
}

fn check_dims(net: &Network, f: &TargetFunction) -> Result<()> {
    if net.dx() != f.dx() {
        return Err(Error::DimensionMismatch { expected: f.dx(), got: net.dx() });
    }
    if net.dy() != f.dy() {
        return Err(Error::DimensionMismatch { expected: f.dy(), got: net.dy() });
    }
    Ok(())
}

fn outputs(net: &Network, pts: &[Vec<f64>], mode: NumericMode) -> Result<Vec<Vec<f64>>> {
    match mode {
        NumericMode::Float64 => Ok(pts.par_iter().map(|x| net.forward(x)).collect()),
        NumericMode::Dyadic => pts.par_iter().map(|x| net.evaluate(x, mode)).collect(),
    }
}

/// `max_x ||net(x) - f(x)||_inf` over the quadrature points.
pub fn sup_error(net: &Network, f: &TargetFunction, q: &Quadrature) -> Result<f64> {
    sup_error_in(net, f, q, NumericMode::Float64)
}

pub fn sup_error_in(net: &Network, f: &TargetFunction, q: &Quadrature, mode: NumericMode) -> Result<f64> {
    check_dims(net, f)?;
    let pts = q.points(f.domain(), false)?;
    let ys = outputs(net, &pts, mode)?;
    let errs: Vec<f64> = pts
        .par_iter()
        .zip(&ys)
        .map(|(x, y)| y.iter().zip(&f.eval(x)).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs())))
        .collect();
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// `(int ||net(x) - f(x)||_p^p dx)^(1/p)` over the domain box.
pub fn lp_error(net: &Network, f: &TargetFunction, p: f64, q: &Quadrature) -> Result<f64> {
    lp_error_in(net, f, p, q, NumericMode::Float64)
}

pub fn lp_error_in(net: &Network, f: &TargetFunction, p: f64, q: &Quadrature, mode: NumericMode) -> Result<f64> {
    check_dims(net, f)?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must lie in [1, inf), got {p}")));
    }
    let pts = q.points(f.domain(), true)?;
    let ys = outputs(net, &pts, mode)?;
    let vals: Vec<f64> = pts
        .par_iter()
        .zip(&ys)
        .map(|(x, y)| y.iter().zip(&f.eval(x)).map(|(a, b)| (a - b).abs().powf(p)).sum::<f64>())
        .collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let volume: f64 = f.domain().iter().map(|(lo, hi)| hi - lo).product();
    Ok((mean * volume).powf(1.0 / p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub norm: String,
    pub p: Option<f64>,
    pub value: f64,
    pub bound: Option<f64>,
    pub resolution: usize,
    pub seed: Option<u64>,
}

impl ErrorReport {
    pub fn sup(value: f64, bound: Option<f64>, q: &Quadrature) -> Self {
        Self { norm: "sup".into(), p: None, value, bound, resolution: q.resolution(), seed: q.seed() }
    }

    pub fn lp(p: f64, value: f64, bound: Option<f64>, q: &Quadrature) -> Self {
        Self { norm: "lp".into(), p: Some(p), value, bound, resolution: q.resolution(), seed: q.seed() }
    }

    pub fn within_bound(&self) -> Option<bool> {
        self.bound.map(|b| self.value <= b)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}
