//! Oracle-equivalence and range suites for every network builder.

use rand::{seq::index, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coding::{self, build_codebook, pow2};
use crate::construct::{
    build_clamp_net, build_decoder_net, build_memorizer_net, build_pl_net, build_relu_encoder_net,
    build_staircase_pair_net, build_step_encoder_net, build_step_quantizer_net, default_decoder_delta, PLScalarFunction,
};
use crate::construct::staircase::in_ramp;
use crate::error::{Error, Result};
use crate::exact;
use crate::net::{Activation, Network};
use crate::target::TargetFunction;

pub const TOLERANCE: f64 = 1e-9;

pub const LEMMAS: [&str; 8] = ["quantizer", "encoder-step", "encoder-relu", "memorizer", "decoder", "staircase", "clamp", "pl"];

#[derive(Debug, Clone)]
pub struct LemmaParams {
    pub dx: usize,
    pub dy: usize,
    pub k: u32,
    pub m: u32,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub gamma: f64,
    /// Sample count for range and Monte-Carlo checks.
    pub samples: usize,
    pub seed: u64,
    /// Target spec for the memorizer table; a builtin matching `(dx, dy)` if absent.
    pub target: Option<String>,
    /// Number of random functions in the `pl` suite.
    pub functions: usize,
}

impl Default for LemmaParams {
    fn default() -> Self {
        Self {
            dx: 2,
            dy: 2,
            k: 3,
            m: 3,
            alpha: None,
            delta: None,
            gamma: 0.01,
            samples: 10_000,
            seed: 0,
            target: None,
            functions: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub points: usize,
    pub failures: usize,
    pub max_error: f64,
    pub passed: bool,
}

impl CheckResult {
    fn from_errors(name: impl Into<String>, errors: &[f64], tol: f64) -> Self {
        let failures = errors.iter().filter(|e| !(**e <= tol)).count();
        Self {
            name: name.into(),
            points: errors.len(),
            failures,
            max_error: errors.iter().copied().fold(0.0, f64::max),
            passed: failures == 0,
        }
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), points: 1, failures: usize::from(!ok), max_error: 0.0, passed: ok }
    }

    fn count(name: impl Into<String>, points: usize, failures: usize) -> Self {
        Self { name: name.into(), points, failures, max_error: 0.0, passed: failures == 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub width: usize,
    pub depth: usize,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl LemmaReport {
    fn new(lemma: &str, net: &Network, checks: Vec<CheckResult>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self { lemma: lemma.into(), width: net.width(), depth: net.depth(), checks, passed }
    }
}

fn sup_err(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

/// Float errors of `net` against `oracle` on `points`.
fn float_errors(net: &Network, points: &[Vec<f64>], oracle: impl Fn(&[f64]) -> Vec<f64> + Sync) -> Vec<f64> {
    points.par_iter().map(|x| sup_err(&net.forward(x), &oracle(x))).collect()
}

/// Number of points where exact evaluation differs from the oracle.
fn exact_mismatches(net: &Network, points: &[Vec<f64>], oracle: impl Fn(&[f64]) -> Vec<f64> + Sync) -> usize {
    points
        .par_iter()
        .filter(|x| {
            let xs: Vec<_> = x.iter().map(|v| exact::from_f64(*v).expect("finite")).collect();
            let want: Vec<_> = oracle(x).iter().map(|v| exact::from_f64(*v).expect("finite")).collect();
            net.evaluate_exact(&xs).map_or(true, |got| got != want)
        })
        .count()
}

fn width_check(net: &Network, want: usize) -> CheckResult {
    CheckResult::flag(format!("width = {want} (got {})", net.width()), net.width() == want)
}

fn uniform_points(rng: &mut ChaCha8Rng, n: usize, dim: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(lo..hi)).collect()).collect()
}

fn grid_points(per_axis: usize, dim: usize) -> Vec<Vec<f64>> {
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; dim];
            for c in (0..dim).rev() {
                x[c] = (idx % per_axis) as f64 / (per_axis - 1) as f64;
                idx /= per_axis;
            }
            x
        })
        .collect()
}

pub fn verify_lemma(name: &str, p: &LemmaParams) -> Result<LemmaReport> {
    match name {
        "quantizer" => verify_quantizer(p.k),
        "encoder-step" => verify_step_encoder(p.dx, p.k),
        "encoder-relu" => verify_relu_encoder(p),
        "memorizer" => verify_memorizer(p),
        "decoder" => verify_decoder(p),
        "staircase" => verify_staircase(p),
        "clamp" => verify_clamp(p),
        "pl" => verify_pl(p.functions, p.seed),
        other => Err(Error::InvalidParameter(format!("unknown lemma {other:?}; expected one of {}", LEMMAS.join(", ")))),
    }
}

/// `q_K` on `2^K * 100 + 1` equispaced points of `[0,1]`, float and exact.
pub fn verify_quantizer(k: u32) -> Result<LemmaReport> {
    let net = build_step_quantizer_net(k)?;
    let n = (1usize << k) * 100;
    let pts: Vec<Vec<f64>> = (0..=n).map(|i| vec![i as f64 / n as f64]).collect();
    let oracle = |x: &[f64]| vec![coding::quantize(x[0], k).expect("in range")];
    let checks = vec![
        width_check(&net, 2),
        CheckResult::flag("contains a step neuron", net.contains_activation(Activation::Step)),
        CheckResult::from_errors("float agreement with q_K", &float_errors(&net, &pts, oracle), TOLERANCE),
        CheckResult::count("exact agreement with q_K", pts.len(), exact_mismatches(&net, &pts, oracle)),
    ];
    Ok(LemmaReport::new("quantizer", &net, checks))
}

/// `encode_K` on a `129^dx` grid of `[0,1]^dx`.
pub fn verify_step_encoder(dx: usize, k: u32) -> Result<LemmaReport> {
    let net = build_step_encoder_net(dx, k)?;
    let per_axis = if dx <= 2 { 129 } else { 17 };
    let pts = grid_points(per_axis, dx);
    let oracle = |x: &[f64]| vec![coding::encode(x, k).expect("in range")];
    let checks = vec![
        width_check(&net, dx + 1),
        CheckResult::from_errors("float agreement with encode", &float_errors(&net, &pts, oracle), TOLERANCE),
        CheckResult::count("exact agreement with encode", pts.len(), exact_mismatches(&net, &pts, oracle)),
    ];
    Ok(LemmaReport::new("encoder-step", &net, checks))
}

/// Mismatch fraction against `encode_K` over uniform samples, sentinel off the cube.
pub fn verify_relu_encoder(p: &LemmaParams) -> Result<LemmaReport> {
    let art = build_relu_encoder_net(p.dx, p.k, p.alpha, p.delta, p.gamma)?;
    let net = &art.net;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let inside = uniform_points(&mut rng, p.samples, p.dx, 0.0, 1.0);
    let flags: Vec<(bool, bool)> = inside
        .par_iter()
        .map(|x| {
            let y = net.forward(x)[0];
            let bad = (y - coding::encode(x, p.k).expect("in range")).abs() > TOLERANCE;
            (bad, bad && !art.is_excluded(x))
        })
        .collect();
    let mismatches = flags.iter().filter(|f| f.0).count();
    let unexplained = flags.iter().filter(|f| f.1).count();
    let fraction = mismatches as f64 / p.samples.max(1) as f64;
    let off: Vec<Vec<f64>> = uniform_points(&mut rng, p.samples / 10 + 1, p.dx, -2.0, 3.0)
        .into_iter()
        .filter(|x| x.iter().any(|v| !(0.0..=1.0).contains(v)))
        .collect();
    let sentinel_errs = float_errors(net, &off, |_| vec![art.sentinel]);
    let range: Vec<f64> = uniform_points(&mut rng, p.samples / 10 + 1, p.dx, -2.0, 3.0)
        .par_iter()
        .map(|x| {
            let y = net.forward(x)[0];
            (-y).max(y - 1.0).max(0.0)
        })
        .collect();
    let checks = vec![
        width_check(net, p.dx + 1),
        CheckResult::flag("ReLU only", !net.contains_activation(Activation::Step)),
        CheckResult::flag(format!("measure bound {} < gamma {}", art.measure_bound, p.gamma), art.measure_bound < p.gamma),
        CheckResult {
            name: format!("mismatch fraction {fraction} < gamma {}", p.gamma),
            points: p.samples,
            failures: mismatches,
            max_error: fraction,
            passed: fraction < p.gamma,
        },
        CheckResult::count("every mismatch lies in the exceptional set", p.samples, unexplained),
        CheckResult::from_errors(format!("sentinel {} off the cube", art.sentinel), &sentinel_errs, TOLERANCE),
        CheckResult::from_errors("range inside [0,1]", &range, TOLERANCE),
    ];
    Ok(LemmaReport::new("encoder-relu", net, checks))
}

fn default_target(dx: usize, dy: usize) -> String {
    match (dx, dy) {
        (2, 3) => "builtin:product-mean-absdiff".into(),
        (_, 1) => "builtin:mean".into(),
        (a, b) if a == b => "builtin:identity".into(),
        _ => "builtin:constant:0.25".into(),
    }
}

/// Exact on every key of the codebook; range within the table's values.
pub fn verify_memorizer(p: &LemmaParams) -> Result<LemmaReport> {
    let spec = p.target.clone().unwrap_or_else(|| default_target(p.dx, p.dy));
    let f = TargetFunction::from_spec(&spec, p.dx, p.dy, None)?;
    verify_memorizer_for(&f, p.k, p.m, p.samples, p.seed)
}

pub fn verify_memorizer_for(f: &TargetFunction, k: u32, m: u32, samples: usize, seed: u64) -> Result<LemmaReport> {
    let table = build_codebook(f, k, m)?;
    let net = build_memorizer_net(&table, (0.0, 1.0))?;
    let pairs: Vec<(f64, f64)> = table.pairs().collect();
    let keys: Vec<Vec<f64>> = pairs.iter().map(|(k, _)| vec![*k]).collect();
    let lookup = |x: &[f64]| vec![table.lookup(x[0]).expect("key")];
    let (lo, hi) = pairs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (_, v)| (l.min(*v), h.max(*v)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let range: Vec<f64> = uniform_points(&mut rng, samples, 1, 0.0, 1.0)
        .par_iter()
        .map(|x| {
            let y = net.forward(x)[0];
            (lo - y).max(y - hi).max(0.0)
        })
        .collect();
    let checks = vec![
        width_check(&net, 2),
        CheckResult::from_errors(format!("float agreement on all {} keys", keys.len()), &float_errors(&net, &keys, lookup), TOLERANCE),
        CheckResult::count("exact agreement on all keys", keys.len(), exact_mismatches(&net, &keys, lookup)),
        CheckResult::from_errors(format!("range inside [{lo}, {hi}]"), &range, TOLERANCE),
    ];
    Ok(LemmaReport::new("memorizer", &net, checks))
}

/// Exact on all `2^(dy M)` codewords; range inside `[0,1]^dy` on off-grid points.
pub fn verify_decoder(p: &LemmaParams) -> Result<LemmaReport> {
    let (dy, m) = (p.dy, p.m);
    let delta = p.delta.unwrap_or_else(|| default_decoder_delta(dy, m));
    let net = build_decoder_net(dy, m, delta)?;
    let bits = dy as u32 * m;
    let codes: Vec<Vec<f64>> = (0..1u64 << bits).map(|i| vec![i as f64 * pow2(-(bits as i32))]).collect();
    let oracle = |c: &[f64]| coding::decode(c[0], m, dy).expect("codeword");
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let range: Vec<f64> = uniform_points(&mut rng, p.samples, 1, -2.0, 3.0)
        .par_iter()
        .map(|x| net.forward(x).iter().map(|y| (-y).max(y - 1.0).max(0.0)).fold(0.0, f64::max))
        .collect();
    let checks = vec![
        width_check(&net, dy.max(1)),
        CheckResult::flag("ReLU only", !net.contains_activation(Activation::Step)),
        CheckResult::from_errors(format!("float agreement on all {} codewords", codes.len()), &float_errors(&net, &codes, oracle), TOLERANCE),
        CheckResult::count("exact agreement on all codewords", codes.len(), exact_mismatches(&net, &codes, oracle)),
        CheckResult::from_errors("range inside [0,1]^dy", &range, TOLERANCE),
    ];
    Ok(LemmaReport::new("decoder", &net, checks))
}

/// `(q_M(x), 2^M (x - q_M(x)))` off the ramps, range and clip behaviour.
pub fn verify_staircase(p: &LemmaParams) -> Result<LemmaReport> {
    let m = p.m;
    let delta = p.delta.unwrap_or_else(|| default_decoder_delta(1, m));
    let net = build_staircase_pair_net(m, delta)?;
    let n = (1usize << m) * 100;
    let pts: Vec<Vec<f64>> = (0..=n).map(|i| vec![i as f64 / n as f64]).filter(|x| !in_ramp(x[0], m, delta)).collect();
    let oracle = |x: &[f64]| {
        let q = coding::quantize(x[0], m).expect("in range");
        vec![q, pow2(m as i32) * (x[0] - q)]
    };
    let top = 1.0 - pow2(-(m as i32));
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let range: Vec<f64> = uniform_points(&mut rng, p.samples, 1, -5.0, 6.0)
        .par_iter()
        .map(|x| {
            let y = net.forward(x);
            (-y[0]).max(y[0] - top).max(-y[1]).max(y[1] - 1.0).max(0.0)
        })
        .collect();
    let clip = sup_err(&net.forward(&[-5.0]), &net.forward(&[0.0])).max(sup_err(&net.forward(&[7.0]), &net.forward(&[1.0])));
    let checks = vec![
        width_check(&net, 2),
        CheckResult::from_errors("agreement off the ramps", &float_errors(&net, &pts, oracle), TOLERANCE),
        CheckResult::from_errors("range inside [0, 1-2^-M] x [0, 1]", &range, TOLERANCE),
        CheckResult::from_errors("clip: f(-5) = f(0), f(7) = f(1)", &[clip], TOLERANCE),
    ];
    Ok(LemmaReport::new("staircase", &net, checks))
}

/// Identity on `[alpha, 1-alpha]^dx`, `(1,...,1)` off the cube, range in `[0,1]^dx`.
pub fn verify_clamp(p: &LemmaParams) -> Result<LemmaReport> {
    let alpha = p.alpha.unwrap_or(0.1);
    let net = build_clamp_net(p.dx, alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let inner = uniform_points(&mut rng, p.samples, p.dx, alpha, 1.0 - alpha);
    let mut outer = Vec::with_capacity(p.samples);
    while outer.len() < p.samples {
        let x: Vec<f64> = (0..p.dx).map(|_| rng.random_range(-2.0..3.0)).collect();
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            outer.push(x);
        }
    }
    let everywhere = uniform_points(&mut rng, p.samples, p.dx, -2.0, 3.0);
    let range: Vec<f64> = everywhere
        .par_iter()
        .map(|x| net.forward(x).iter().map(|y| (-y).max(y - 1.0).max(0.0)).fold(0.0, f64::max))
        .collect();
    let checks = vec![
        width_check(&net, p.dx + 1),
        CheckResult::flag("ReLU only", !net.contains_activation(Activation::Step)),
        CheckResult::from_errors("identity on [alpha, 1-alpha]^dx", &float_errors(&net, &inner, |x| x.to_vec()), TOLERANCE),
        CheckResult::from_errors("(1,...,1) off the unit cube", &float_errors(&net, &outer, |x| vec![1.0; x.len()]), TOLERANCE),
        CheckResult::from_errors("range inside [0,1]^dx", &range, TOLERANCE),
    ];
    Ok(LemmaReport::new("clamp", &net, checks))
}

/// Random continuous PL function on `[0,1]` with at most 16 pieces; knots and
/// values are multiples of `2^-8` and `2^-10`.
pub fn random_pl_function<R: Rng>(rng: &mut R) -> PLScalarFunction {
    let pieces = rng.random_range(1..=16);
    let mut inner: Vec<usize> = index::sample(rng, 255, pieces - 1).into_iter().map(|i| i + 1).collect();
    inner.sort_unstable();
    let mut xs = vec![0.0];
    xs.extend(inner.iter().map(|i| *i as f64 / 256.0));
    xs.push(1.0);
    let ys = xs.iter().map(|_| rng.random_range(-2048i32..=2048) as f64 / 1024.0).collect();
    PLScalarFunction::from_points(xs, ys).expect("valid knots")
}

/// Breakpoints and midpoints of `count` random PL functions.
pub fn verify_pl(count: usize, seed: u64) -> Result<LemmaReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::new();
    let mut widths_ok = true;
    let mut last = None;
    for _ in 0..count {
        let g = random_pl_function(&mut rng);
        let net = build_pl_net(&g)?;
        widths_ok &= net.width() == 2;
        let knots = g.curve().knots();
        let mut pts: Vec<f64> = knots.to_vec();
        pts.extend(knots.windows(2).map(|w| (w[0] + w[1]) / 2.0));
        errors.extend(pts.iter().map(|x| (net.forward(&[*x])[0] - g.eval(*x)).abs()));
        last = Some(net);
    }
    let net = last.ok_or_else(|| Error::InvalidParameter("need at least one function".into()))?;
    let checks = vec![
        CheckResult::flag("every net has width 2", widths_ok),
        CheckResult::from_errors(format!("agreement at breakpoints and midpoints of {count} functions"), &errors, TOLERANCE),
    ];
    Ok(LemmaReport::new("pl", &net, checks))
}
