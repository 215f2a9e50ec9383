use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use minwidth::coding::error_budget;
use minwidth::construct::{assemble_lp_net, assemble_uniform_net, build_pl_vector_net, PlCurve};
use minwidth::exact;
use minwidth::geometry::diagnose::{local_search, random_corpus, random_width2_net};
use minwidth::geometry::parity::parity_fan;
use minwidth::geometry::propagate::{quadrant_invariant_holds, network_path, propagate, reformulate};
use minwidth::geometry::simplex::{epsilon, hyperplane_bound, hyperplane_search, simplex_bound};
use minwidth::geometry::{counterexample_curve, diagnose, pl_sup_distance, Barrier, P2};
use minwidth::metrics::{lp_error, sup_error, Quadrature};
use minwidth::verify::{self, LemmaParams, LemmaReport};
use minwidth::{Activation, Network, NumericMode, TargetFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SUP_GRID: usize = 201;
const LP_GRID: usize = 201;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn target() -> TargetFunction {
    TargetFunction::from_spec("builtin:product-mean-absdiff", 2, 3, None).unwrap()
}

struct Built {
    uniform: Network,
    uniform_err: f64,
    lp: Network,
    lp_err: f64,
}

fn criterion1(f: &TargetFunction) -> (Outcome, Network, f64) {
    let net = assemble_uniform_net(f, 4, 4).unwrap();
    let err = sup_error(&net, f, &Quadrature::grid(SUP_GRID)).unwrap();
    let budget = error_budget(1.0, 4, 4);
    let ok = net.width() == 3 && net.contains_activation(Activation::Step) && err <= budget;
    let o = outcome(ok, format!("width {} (want 3), sup error {err:.6} on {SUP_GRID}x{SUP_GRID} grid <= {budget}", net.width()));
    (o, net, err)
}

fn criterion2(f: &TargetFunction) -> (Outcome, Network, f64) {
    let art = assemble_lp_net(f, 4, 4, 0.001, 2.0).unwrap();
    let net = art.net;
    let err = lp_error(&net, f, 2.0, &Quadrature::grid(LP_GRID)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut off = vec![vec![3.0, -1.0]];
    while off.len() < 1000 {
        let x = vec![rng.random_range(-2.0..3.0), rng.random_range(-2.0..3.0)];
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            off.push(x);
        }
    }
    let off_max = off.iter().map(|x| net.forward(x).iter().fold(0.0, |m: f64, v| m.max(v.abs()))).fold(0.0, f64::max);
    let ok = net.width() == 3 && !net.contains_activation(Activation::Step) && err <= art.analytic_bound && off_max <= 1e-9;
    let o = outcome(
        ok,
        format!(
            "width {} (want 3), relu only {}, L2 error {err:.6} <= analytic bound {:.6}, max |f| off the cube {off_max:.1e} <= 1e-9",
            net.width(),
            !net.contains_activation(Activation::Step),
            art.analytic_bound
        ),
    );
    (o, net, err)
}

fn criterion3() -> Outcome {
    let mut reports: Vec<LemmaReport> = Vec::new();
    for k in 1..=6 {
        reports.push(verify::verify_quantizer(k).unwrap());
    }
    reports.push(verify::verify_step_encoder(2, 3).unwrap());
    let mem = LemmaParams { dx: 2, dy: 3, k: 6, m: 4, samples: 10_000, ..Default::default() };
    reports.push(verify::verify_memorizer(&mem).unwrap());
    let dec = LemmaParams { dy: 3, m: 4, samples: 10_000, ..Default::default() };
    reports.push(verify::verify_decoder(&dec).unwrap());
    let clamp = LemmaParams { dx: 2, alpha: Some(0.1), samples: 10_000, ..Default::default() };
    reports.push(verify::verify_clamp(&clamp).unwrap());
    let enc = LemmaParams { dx: 2, k: 3, gamma: 0.01, samples: 1_000_000, seed: 3, ..Default::default() };
    reports.push(verify::verify_relu_encoder(&enc).unwrap());
    reports.push(verify::verify_pl(100, 4).unwrap());
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| {
            let bad: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            format!("{} [{}]", r.lemma, bad.join("; "))
        })
        .collect();
    let mismatch = reports
        .iter()
        .find(|r| r.lemma == "encoder-relu")
        .and_then(|r| r.checks.iter().find(|c| c.name.starts_with("mismatch fraction")))
        .map_or(f64::NAN, |c| c.max_error);
    let detail = if failed.is_empty() {
        format!("{} suites, all checks pass (tolerance 1e-9 / exact); relu encoder mismatch fraction {mismatch:.5} < 0.01", reports.len())
    } else {
        format!("failing: {}", failed.join(", "))
    };
    outcome(failed.is_empty(), detail)
}

fn criterion4() -> Outcome {
    let ce = counterexample_curve();
    let (knots, values) = ce.knots_f64();
    let net3 = build_pl_vector_net(&PlCurve::new(knots, values).unwrap()).unwrap();
    let path = network_path(&net3, &exact::int(0), &exact::int(1)).unwrap().to_polyline().unwrap();
    let err3 = exact::to_f64(&pl_sup_distance(&path, &ce.curve).unwrap());
    let width_ok = net3.width() == 3 && err3 <= 1e-9;

    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut nets = random_corpus(&mut rng, 1000, 8);
    let starts: Vec<(Network, u64)> = (0..200)
        .map(|i| {
            let depth = rng.random_range(2..=8);
            (random_width2_net(&mut rng, depth), 1000 + i)
        })
        .collect();
    let refined: Vec<Network> = starts
        .into_par_iter()
        .map(|(n, seed)| local_search(&n, 400, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap())
        .collect();
    nets.extend(refined);
    let reports: Vec<_> = nets.par_iter().map(|n| diagnose(n).unwrap()).collect();
    let certified = reports.iter().filter(|r| r.within_threshold).count();
    let min_random = reports[..1000].iter().map(|r| r.sup_distance).fold(f64::INFINITY, f64::min);
    let min_refined = reports[1000..].iter().map(|r| r.sup_distance).fold(f64::INFINITY, f64::min);
    outcome(
        width_ok && certified == 0,
        format!(
            "width-3 net width {} exact sup error {err3:.1e} <= 1e-9; {} width-2 nets, {certified} certified <= 1/100 (min exact distance: random {min_random:.4}, refined {min_refined:.4})",
            net3.width(),
            reports.len()
        ),
    )
}

fn criterion5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let nets: Vec<Network> = (0..100)
        .map(|_| {
            let depth = rng.random_range(2..=8);
            random_width2_net(&mut rng, depth)
        })
        .collect();
    let results: Vec<(f64, bool)> = nets
        .par_iter()
        .map(|net| {
            let reform = reformulate(net).unwrap();
            let images = propagate(&reform, &exact::int(0), &exact::int(1));
            let invariant = (1..images.len()).all(|l| quadrant_invariant_holds(&reform.quadrant(l), &images[l - 1], &images[l]));
            let last = images.last().unwrap();
            let err = (0..10_000)
                .map(|i| {
                    let t = i as f64 / 9999.0;
                    let (a, b) = (last.eval_f64(t), net.forward(&[t]));
                    (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
                })
                .fold(0.0, f64::max);
            (err, invariant)
        })
        .collect();
    let max_err = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let invariant_ok = results.iter().all(|r| r.1);

    let mut consistent = 0;
    let mut pairs = 0;
    while pairs < 100 {
        let n = rng.random_range(3..=10);
        let pts: Vec<P2> = (0..n).map(|_| P2::ints(rng.random_range(-4..=4), rng.random_range(-4..=4))).collect();
        let mut barrier = Barrier::new();
        for i in 0..n {
            barrier.push_segment(pts[i].clone(), pts[(i + 1) % n].clone());
        }
        let q = P2::new(exact::ratio(rng.random_range(-10..=10), 2), exact::ratio(rng.random_range(-10..=10), 2));
        if barrier.contains(&q) {
            continue;
        }
        pairs += 1;
        if parity_fan(&q, &barrier).is_ok() {
            consistent += 1;
        }
    }
    outcome(
        max_err <= 1e-6 && invariant_ok && consistent == 100,
        format!(
            "100 nets x 10^4 parameters: max |exact - float| {max_err:.1e} <= 1e-6; vertex invariant holds {invariant_ok}; parity fan consistent on {consistent}/100 pairs"
        ),
    )
}

fn criterion6() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for dy in 1..=3 {
        let r = simplex_bound(dy, 2.0).unwrap();
        let side = (r.min_pairwise - 2f64.sqrt()).abs().max((r.max_pairwise - 2f64.sqrt()).abs());
        let vol = (r.det_volume - ((dy + 1) as f64).sqrt() / (1..=dy).product::<usize>() as f64).abs();
        let search = hyperplane_search(dy, 10_000, 60 + dy as u64);
        // dy = 1 attains the bound
        let holds = search.random_min >= r.hyperplane_bound - 1e-12 && search.refined_min >= r.hyperplane_bound - 1e-12;
        ok &= side <= 1e-12 && vol <= 1e-9 && holds;
        parts.push(format!(
            "dy={dy}: side err {side:.1e}, volume err {vol:.1e}, min max-distance {:.4} >= bound {:.4}",
            search.refined_min, r.hyperplane_bound
        ));
    }
    // gamma(2) = 1, dy^(1/p - 1/2) = 1 at p = 2
    let independent = 2.0 / (2.0 * 7f64.sqrt() * 6.0) * (2.0 / PI);
    let eps = epsilon(3, 2.0);
    ok &= (eps - independent).abs() <= 1e-12 && (hyperplane_bound(3) - 0.106).abs() < 1e-3;
    parts.push(format!("epsilon(dy=3, p=2) = {eps:.6}"));
    outcome(ok, parts.join("; "))
}

fn criterion7(f: &TargetFunction, built: &Built) -> Outcome {
    let roundtrip = |net: &Network| Network::from_json(&net.to_json(NumericMode::Float64)).unwrap();
    let u = roundtrip(&built.uniform);
    let l = roundtrip(&built.lp);
    let ue = sup_error(&u, f, &Quadrature::grid(SUP_GRID)).unwrap();
    let le = lp_error(&l, f, 2.0, &Quadrature::grid(LP_GRID)).unwrap();
    let same = ue.to_bits() == built.uniform_err.to_bits() && le.to_bits() == built.lp_err.to_bits();
    outcome(
        same && u == built.uniform && l == built.lp,
        format!("sup {ue:e} vs {:e}, L2 {le:e} vs {:e}, networks equal after round trip", built.uniform_err, built.lp_err),
    )
}

fn report(n: usize, o: &Outcome, elapsed: Duration, limit: Option<Duration>) -> bool {
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let passed = o.passed && in_time;
    let limit_txt = limit.map_or(String::new(), |l| format!(" (limit {}s)", l.as_secs()));
    println!(
        "criterion {n}: {} | {} | {:.1}s{limit_txt}",
        if passed { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64()
    );
    passed
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn main() -> ExitCode {
    let f = target();
    let mut all = true;

    let ((o1, uniform, uniform_err), t1) = timed(|| criterion1(&f));
    all &= report(1, &o1, t1, Some(Duration::from_secs(60)));
    let ((o2, lp, lp_err), t2) = timed(|| criterion2(&f));
    all &= report(2, &o2, t2, Some(Duration::from_secs(60)));
    let (o3, t3) = timed(criterion3);
    all &= report(3, &o3, t3, None);
    let (o4, t4) = timed(criterion4);
    all &= report(4, &o4, t4, Some(Duration::from_secs(600)));
    let (o5, t5) = timed(criterion5);
    all &= report(5, &o5, t5, None);
    let (o6, t6) = timed(criterion6);
    all &= report(6, &o6, t6, Some(Duration::from_secs(60)));
    let built = Built { uniform, uniform_err, lp, lp_err };
    let (o7, t7) = timed(|| criterion7(&f, &built));
    all &= report(7, &o7, t7, None);

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
