//! Exact diagnostic of a width-2 network against the counterexample curve.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::counterexample::{counterexample_curve, crossings_of_horizontal, Counterexample};
use super::parity::{parity, Barrier};
use super::predicates::polylines_intersect;
use super::propagate::{find_box_stable_layer, network_path, propagate, reformulate};
use super::{pl_sup_distance, Polyline, P2};
use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::net::{Activation, Layer, Network};

#[derive(Debug, Clone)]
pub struct DiagnoseOptions {
    /// Sup distance at or below which the full pipeline runs.
    pub threshold: Rational,
    /// Radius of the neighbourhoods in the crossing checks.
    pub near: Rational,
    /// Run the pipeline whatever the distance.
    pub force_pipeline: bool,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self { threshold: exact::ratio(1, 100), near: exact::ratio(2, 100), force_pipeline: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// `g_{l*}(q)` lies inside the closed blue loop.
    Surrounded,
    /// Red and blue images meet at some layer.
    Intersects,
    /// `g_{l*}(q)` lies outside the closed blue loop.
    Escaped,
    NotApplicable,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParitySample {
    pub label: String,
    pub point: [f64; 2],
    pub parity: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingCheck {
    pub label: String,
    pub target: [f64; 2],
    /// Crossing of `y = 1` closest to the target, if any.
    pub nearest: Option<[f64; 2]>,
    pub within: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub depth: usize,
    pub width: usize,
    pub sup_distance: f64,
    pub sup_distance_exact: String,
    pub within_threshold: bool,
    pub pipeline_ran: bool,
    /// Entry `l - 1` is true iff `g_l([0,p1])` and `g_l([p2,1])` are disjoint.
    pub nointersect: Vec<bool>,
    pub ell_star: Option<usize>,
    pub red_outside_box: Option<bool>,
    pub crossings: Vec<CrossingCheck>,
    pub parity_samples: Vec<ParitySample>,
    pub containment_verdict: Verdict,
    pub contradiction: String,
    pub perturbed_layers: Vec<usize>,
}

impl DiagnosticReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn diagnose(net: &Network) -> Result<DiagnosticReport> {
    diagnose_with(net, &DiagnoseOptions::default())
}

pub fn diagnose_with(net: &Network, opts: &DiagnoseOptions) -> Result<DiagnosticReport> {
    if net.dx() != 1 || net.dy() != 2 {
        return Err(Error::Precondition(format!("need a network R -> R^2, got dx={}, dy={}", net.dx(), net.dy())));
    }
    let ce = counterexample_curve();
    let output = network_path(net, &exact::int(0), &exact::int(1))?.to_polyline()?;
    let dist = pl_sup_distance(&output, &ce.curve)?;
    let within = dist <= opts.threshold;
    let mut report = DiagnosticReport {
        name: None,
        depth: net.depth(),
        width: net.width(),
        sup_distance: exact::to_f64(&dist),
        sup_distance_exact: exact::format_fraction(&dist),
        within_threshold: within,
        pipeline_ran: false,
        nointersect: Vec::new(),
        ell_star: None,
        red_outside_box: None,
        crossings: Vec::new(),
        parity_samples: Vec::new(),
        containment_verdict: Verdict::NotApplicable,
        contradiction: String::new(),
        perturbed_layers: Vec::new(),
    };
    if !within && !opts.force_pipeline {
        report.contradiction = format!("sup distance {} exceeds {}", report.sup_distance, exact::format_fraction(&opts.threshold));
        return Ok(report);
    }
    let reform = match reformulate(net) {
        Ok(r) => r,
        Err(Error::Precondition(why)) => {
            report.contradiction = format!("pipeline needs width-2 ReLU layers: {why}");
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.pipeline_ran = true;
    report.perturbed_layers = reform.perturbed.clone();
    let images = propagate(&reform, &exact::int(0), &exact::int(1));
    let ell = find_box_stable_layer(&reform, &ce.rect);
    run_pipeline(&ce, &images, ell, opts, &mut report);
    if within {
        report.contradiction = format!("within threshold: {}", report.contradiction);
    }
    Ok(report)
}

fn run_pipeline(ce: &Counterexample, images: &[Polyline], ell: usize, opts: &DiagnoseOptions, report: &mut DiagnosticReport) {
    let zero = exact::int(0);
    let one = exact::int(1);
    let split = |g: &Polyline| (g.restrict(&zero, &ce.p1), g.restrict(&ce.p2, &one));
    report.nointersect = images[1..]
        .iter()
        .map(|g| {
            let (red, blue) = split(g);
            !polylines_intersect(&red, &blue)
        })
        .collect();

    let f = images.last().unwrap();
    let (red_f, blue_f) = split(f);
    let targets = [("red near (0,1)", &red_f, P2::ints(0, 1)), ("blue near (-1,1)", &blue_f, P2::ints(-1, 1)), ("blue near (1,1)", &blue_f, P2::ints(1, 1))];
    report.crossings = targets
        .iter()
        .map(|(label, part, target)| {
            let nearest = crossings_of_horizontal(part, &one).into_iter().min_by(|a, b| (a - target).sup_norm().cmp(&(b - target).sup_norm()));
            CrossingCheck {
                label: label.to_string(),
                target: target.to_f64(),
                within: nearest.as_ref().is_some_and(|p| (p - target).sup_norm() <= opts.near),
                nearest: nearest.map(|p| p.to_f64()),
            }
        })
        .collect();

    report.ell_star = Some(ell);
    let g = &images[ell];
    let (red, blue) = split(g);
    report.red_outside_box = Some(red.vertices().iter().any(|v| !ce.rect.contains_closed(&v.p)));

    let mut barrier = Barrier::new();
    barrier.push_closed(&blue);
    let mut samples = vec![("q".to_string(), g.eval(&ce.q))];
    for (i, v) in red.vertices().iter().enumerate() {
        if !ce.rect.contains_closed(&v.p) {
            samples.push((format!("red vertex {i}"), v.p.clone()));
        }
    }
    report.parity_samples = samples
        .into_iter()
        .map(|(label, p)| {
            let (parity, note) = match parity(&p, &barrier) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            ParitySample { label, point: p.to_f64(), parity, note }
        })
        .collect();

    if let Some(l) = report.nointersect.iter().position(|ok| !ok) {
        report.containment_verdict = Verdict::Intersects;
        report.contradiction = format!("red and blue images meet at layer {}", l + 1);
        return;
    }
    match report.parity_samples[0].parity {
        Some(1) => {
            report.containment_verdict = Verdict::Surrounded;
            report.contradiction = format!("g(q) is enclosed by the closed blue image at layer {ell}");
        }
        Some(_) => {
            report.containment_verdict = Verdict::Escaped;
            report.contradiction = format!("g(q) lies outside the closed blue image at layer {ell}");
        }
        None => {
            report.containment_verdict = Verdict::Intersects;
            report.contradiction = format!("g(q) lies on the closed blue image at layer {ell}");
        }
    }
}

/// Diagnoses every network document (`*.json`) in `dir`, sorted by file name.
pub fn diagnose_dir(dir: &Path, opts: &DiagnoseOptions) -> Result<Vec<DiagnosticReport>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let (net, _) = Network::load(p)?;
            let mut r = diagnose_with(&net, opts)?;
            r.name = Some(p.file_name().unwrap().to_string_lossy().into_owned());
            Ok(r)
        })
        .collect()
}

const QUANTUM: f64 = 1.0 / 65536.0;

fn quantize(v: f64) -> f64 {
    (v / QUANTUM).round() * QUANTUM
}

/// Random width-2 ReLU network `R -> R^2` with `depth` layers; weights are
/// multiples of `2^-16` in `[-4, 4]`.
pub fn random_width2_net<R: Rng>(rng: &mut R, depth: usize) -> Network {
    assert!(depth >= 2);
    let mut params = Flat::random(rng, depth);
    params.quantize();
    params.to_network()
}

/// Width-2 parameters in flat form: per layer `w = [w00, w01, w10, w11]`, `b`.
/// The first layer reads only `w00` and `w10`.
#[derive(Debug, Clone)]
struct Flat {
    w: Vec<[f64; 4]>,
    b: Vec<[f64; 2]>,
}

impl Flat {
    fn random<R: Rng>(rng: &mut R, depth: usize) -> Self {
        let mut w = Vec::with_capacity(depth);
        let mut b = Vec::with_capacity(depth);
        for l in 0..depth {
            let mut wl = [0.0; 4];
            for (i, v) in wl.iter_mut().enumerate() {
                if l > 0 || i % 2 == 0 {
                    *v = rng.random_range(-4.0..4.0);
                }
            }
            w.push(wl);
            b.push([rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)]);
        }
        Self { w, b }
    }

    fn from_network(net: &Network) -> Option<Self> {
        if net.dx() != 1 || net.dy() != 2 || net.width() > 2 || net.hidden_layers().iter().any(|l| l.d_out() != 2) {
            return None;
        }
        let mut w = Vec::new();
        let mut b = Vec::new();
        for (i, l) in net.layers().iter().enumerate() {
            let get = |r: usize, c: usize| l.weights[r].get(c).copied().unwrap_or(0.0);
            w.push(if i == 0 { [get(0, 0), 0.0, get(1, 0), 0.0] } else { [get(0, 0), get(0, 1), get(1, 0), get(1, 1)] });
            b.push([l.bias[0], l.bias[1]]);
        }
        Some(Self { w, b })
    }

    fn eval(&self, t: f64) -> [f64; 2] {
        let n = self.w.len();
        let mut s = [t, 0.0];
        for l in 0..n {
            let (w, b) = (&self.w[l], &self.b[l]);
            let mut z = [w[0] * s[0] + w[1] * s[1] + b[0], w[2] * s[0] + w[3] * s[1] + b[1]];
            if l + 1 < n {
                z = [z[0].max(0.0), z[1].max(0.0)];
            }
            s = z;
        }
        s
    }

    fn sup_distance(&self, grid: &[(f64, [f64; 2])]) -> f64 {
        grid.iter().fold(0.0, |m, (t, y)| {
            let v = self.eval(*t);
            m.max((v[0] - y[0]).abs()).max((v[1] - y[1]).abs())
        })
    }

    fn slots(&self) -> usize {
        self.w.len() * 6
    }

    fn slot(&mut self, k: usize) -> Option<&mut f64> {
        let (l, i) = (k / 6, k % 6);
        if l == 0 && (i == 1 || i == 3) {
            return None;
        }
        Some(if i < 4 { &mut self.w[l][i] } else { &mut self.b[l][i - 4] })
    }

    fn quantize(&mut self) {
        for l in 0..self.w.len() {
            self.w[l] = self.w[l].map(quantize);
            self.b[l] = self.b[l].map(quantize);
        }
    }

    fn to_network(&self) -> Network {
        let n = self.w.len();
        let layers = (0..n)
            .map(|l| {
                let w = &self.w[l];
                let weights = if l == 0 { vec![vec![w[0]], vec![w[2]]] } else { vec![vec![w[0], w[1]], vec![w[2], w[3]]] };
                let act = if l + 1 == n { Activation::Identity } else { Activation::Relu };
                Layer::new(weights, self.b[l].to_vec(), vec![act; 2])
            })
            .collect();
        Network::new(1, layers).expect("well-formed width-2 network")
    }
}

/// `(t, f*(t))` on `n + 1` equispaced parameters.
fn target_grid(n: usize) -> Vec<(f64, [f64; 2])> {
    let c = counterexample_curve();
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            (t, c.curve.eval_f64(t))
        })
        .collect()
}

/// Float sup distance to the counterexample curve on `n + 1` parameters.
pub fn grid_sup_distance(net: &Network, n: usize) -> f64 {
    let grid = target_grid(n);
    match Flat::from_network(net) {
        Some(f) => f.sup_distance(&grid),
        None => grid.iter().fold(0.0, |m, (t, y)| {
            let v = net.forward(&[*t]);
            m.max((v[0] - y[0]).abs()).max((v[1] - y[1]).abs())
        }),
    }
}

/// Hill climbing on the grid sup distance to the counterexample curve, starting
/// from `start`; the result is quantized to multiples of `2^-16`.
pub fn local_search<R: Rng>(start: &Network, iterations: usize, rng: &mut R) -> Result<Network> {
    let mut cur = Flat::from_network(start).ok_or_else(|| Error::Precondition("local search needs a width-2 network R -> R^2".into()))?;
    let grid = target_grid(1024);
    let mut best = cur.sup_distance(&grid);
    let mut step = 0.5;
    for _ in 0..iterations {
        let mut cand = cur.clone();
        let normal = Normal::new(0.0, step).expect("positive step");
        let moves = rng.random_range(1..=3);
        for _ in 0..moves {
            let k = rng.random_range(0..cand.slots());
            if let Some(v) = cand.slot(k) {
                *v += normal.sample(rng);
            }
        }
        let d = cand.sup_distance(&grid);
        if d <= best {
            best = d;
            cur = cand;
            step = (step * 1.2_f64).min(2.0);
        } else {
            step = (step * 0.97_f64).max(1e-3);
        }
    }
    cur.quantize();
    Ok(cur.to_network())
}

/// `count` random nets with depth in `2..=max_depth`.
pub fn random_corpus<R: Rng>(rng: &mut R, count: usize, max_depth: usize) -> Vec<Network> {
    (0..count)
        .map(|_| {
            let depth = rng.random_range(2..=max_depth.max(2));
            random_width2_net(rng, depth)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_zero() -> Network {
        let layers = vec![
            Layer::new(vec![vec![0.0], vec![0.0]], vec![0.0, 0.0], vec![Activation::Relu; 2]),
            Layer::affine(vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![0.0, 0.0]),
        ];
        Network::new(1, layers).unwrap()
    }

    #[test]
    fn constant_net_skips_pipeline() {
        let r = diagnose(&constant_zero()).unwrap();
        assert!(r.sup_distance >= 4.0);
        assert_eq!(r.sup_distance_exact, "6");
        assert!(!r.pipeline_ran);
        assert_eq!(r.containment_verdict, Verdict::NotApplicable);
    }

    #[test]
    fn forced_pipeline_records_verdicts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = random_width2_net(&mut rng, 5);
        let opts = DiagnoseOptions { force_pipeline: true, ..Default::default() };
        let r = diagnose_with(&net, &opts).unwrap();
        assert!(r.pipeline_ran);
        assert_eq!(r.nointersect.len(), 4);
        assert!(r.ell_star.unwrap() <= 4);
        assert_eq!(r.crossings.len(), 3);
        assert_ne!(r.containment_verdict, Verdict::NotApplicable);
        let json = r.to_json().unwrap();
        assert!(json.contains("\"containment_verdict\""));
    }

    #[test]
    fn flat_matches_network() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = random_width2_net(&mut rng, 6);
        let flat = Flat::from_network(&net).unwrap();
        for i in 0..=50 {
            let t = i as f64 / 50.0;
            let (a, b) = (flat.eval(t), net.forward(&[t]));
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn local_search_improves() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = random_width2_net(&mut rng, 4);
        let before = grid_sup_distance(&net, 1024);
        let after = local_search(&net, 300, &mut rng).unwrap();
        assert!(grid_sup_distance(&after, 1024) <= before + 1e-3);
    }
}
