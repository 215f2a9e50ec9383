use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use minwidth::coding::error_budget;
use minwidth::construct::{assemble_lp_net_with, assemble_uniform_net};
use minwidth::geometry::{
    counterexample_curve, diagnose_dir, diagnose_with, hyperplane_search, local_search, random_corpus, simplex_bound,
    DiagnoseOptions, DiagnosticReport, Verdict,
};
use minwidth::metrics::{lp_error_in, sup_error_in, ErrorReport, Quadrature};
use minwidth::verify::{verify_lemma, LemmaParams};
use minwidth::{Activation, Network, NumericMode, TargetFunction};

#[derive(Parser)]
#[command(name = "minwidth", version, about = "Minimal-width network constructions and lower-bound diagnostics")]
struct Cli {
    /// Numeric mode for evaluation and written documents.
    #[arg(long, env = "MINWIDTH_NUMERIC", global = true, default_value = "float64")]
    numeric: NumericMode,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a network for a target and report its width, depth and error.
    Build(BuildArgs),
    /// Measure the error of a saved network against a target.
    Error(ErrorArgs),
    /// Run a lemma verification suite.
    VerifyLemma(VerifyArgs),
    /// Distance of width-2 networks from the counterexample curve.
    Diagnose(DiagnoseArgs),
    /// Simplex hyperplane bound and a randomized search against it.
    Simplex(SimplexArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    UniformStep,
    LpRelu,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Norm {
    Sup,
    Lp,
}

/// Target spec document, TOML or JSON.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDocument {
    target: Option<String>,
    dx: Option<usize>,
    dy: Option<usize>,
    lipschitz: Option<f64>,
    k: Option<u32>,
    m: Option<u32>,
    gamma: Option<f64>,
    mode: Option<Mode>,
    p: Option<f64>,
}

impl SpecDocument {
    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let doc = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text)?
        };
        Ok(doc)
    }
}

#[derive(Args)]
struct BuildArgs {
    /// Target spec document (TOML or JSON); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// `builtin:<name>[:<param>]`, `table:<csv>` or `pl:<csv>`.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    dx: Option<usize>,
    #[arg(long)]
    dy: Option<usize>,
    #[arg(long)]
    lipschitz: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Grid points per axis for the measured error.
    #[arg(long, default_value_t = 201)]
    grid: usize,
    /// Network document path.
    #[arg(long)]
    out: PathBuf,
    /// Build report path; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct BuildReport {
    mode: Mode,
    target: String,
    dx: usize,
    dy: usize,
    lipschitz: f64,
    k: u32,
    m: u32,
    gamma: Option<f64>,
    p: Option<f64>,
    width: usize,
    depth: usize,
    parameters: usize,
    uses_step: bool,
    analytic_bound: f64,
    measured: ErrorReport,
    numeric: NumericMode,
    network: PathBuf,
}

fn cmd_build(a: &BuildArgs, numeric: NumericMode) -> Result<bool> {
    let doc = match &a.config {
        Some(p) => SpecDocument::load(p)?,
        None => SpecDocument::default(),
    };
    let mode = a.mode.or(doc.mode).unwrap_or(Mode::UniformStep);
    let spec = a.target.clone().or(doc.target).context("a target is required (--target or config)")?;
    let dx = a.dx.or(doc.dx).unwrap_or(2);
    let dy = a.dy.or(doc.dy).unwrap_or(1);
    let k = a.k.or(doc.k).unwrap_or(4);
    let m = a.m.or(doc.m).unwrap_or(4);
    let f = TargetFunction::from_spec(&spec, dx, dy, a.lipschitz.or(doc.lipschitz))?;
    let q = Quadrature::grid(a.grid);
    let (net, bound, measured, gamma, p) = match mode {
        Mode::UniformStep => {
            let net = assemble_uniform_net(&f, k, m)?;
            let bound = error_budget(f.lipschitz(), k, m);
            let v = sup_error_in(&net, &f, &q, numeric)?;
            (net, bound, ErrorReport::sup(v, Some(bound), &q), None, None)
        }
        Mode::LpRelu => {
            let gamma = a.gamma.or(doc.gamma).unwrap_or(0.001);
            let p = a.p.or(doc.p).unwrap_or(2.0);
            let art = assemble_lp_net_with(&f, k, m, gamma, p, a.alpha, a.delta)?;
            let v = lp_error_in(&art.net, &f, p, &q, numeric)?;
            let bound = art.analytic_bound;
            (art.net, bound, ErrorReport::lp(p, v, Some(bound), &q), Some(gamma), Some(p))
        }
    };
    net.save(&a.out, numeric).with_context(|| format!("writing {}", a.out.display()))?;
    let report = BuildReport {
        mode,
        target: f.name().to_string(),
        dx,
        dy,
        lipschitz: f.lipschitz(),
        k,
        m,
        gamma,
        p,
        width: net.width(),
        depth: net.depth(),
        parameters: net.parameter_count(),
        uses_step: net.contains_activation(Activation::Step),
        analytic_bound: bound,
        measured: measured.clone(),
        numeric,
        network: a.out.clone(),
    };
    emit(&report, a.report.as_deref())?;
    Ok(measured.within_bound().unwrap_or(true))
}

#[derive(Args)]
struct ErrorArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long)]
    lipschitz: Option<f64>,
    #[arg(long, value_enum, default_value = "sup")]
    norm: Norm,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 201)]
    grid: usize,
    /// Monte-Carlo sample count; replaces the grid when given.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fail when the error exceeds this value.
    #[arg(long)]
    bound: Option<f64>,
}

fn cmd_error(a: &ErrorArgs, numeric: NumericMode) -> Result<bool> {
    let (net, _) = Network::load(&a.net).with_context(|| format!("loading {}", a.net.display()))?;
    let f = TargetFunction::from_spec(&a.target, net.dx(), net.dy(), a.lipschitz)?;
    let q = match a.samples {
        Some(n) => Quadrature::monte_carlo(n, a.seed),
        None => Quadrature::grid(a.grid),
    };
    let report = match a.norm {
        Norm::Sup => ErrorReport::sup(sup_error_in(&net, &f, &q, numeric)?, a.bound, &q),
        Norm::Lp => ErrorReport::lp(a.p, lp_error_in(&net, &f, a.p, &q, numeric)?, a.bound, &q),
    };
    println!("{}", report.to_json()?);
    Ok(report.within_bound().unwrap_or(true))
}

#[derive(Args)]
struct VerifyArgs {
    /// quantizer, encoder-step, encoder-relu, memorizer, decoder, staircase, clamp or pl.
    name: String,
    #[arg(long)]
    dx: Option<usize>,
    #[arg(long)]
    dy: Option<usize>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    target: Option<String>,
    /// Random functions in the `pl` suite.
    #[arg(long)]
    functions: Option<usize>,
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool> {
    let d = LemmaParams::default();
    let params = LemmaParams {
        dx: a.dx.unwrap_or(d.dx),
        dy: a.dy.unwrap_or(d.dy),
        k: a.k.unwrap_or(d.k),
        m: a.m.unwrap_or(d.m),
        alpha: a.alpha,
        delta: a.delta,
        gamma: a.gamma.unwrap_or(d.gamma),
        samples: a.samples.unwrap_or(d.samples),
        seed: a.seed.unwrap_or(d.seed),
        target: a.target.clone(),
        functions: a.functions.unwrap_or(d.functions),
    };
    let report = verify_lemma(&a.name, &params)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(report.passed)
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Generate this many random width-2 networks.
    #[arg(long, conflicts_with = "corpus")]
    random: Option<usize>,
    /// Directory of width-2 network documents.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Local-search refinements of the first random networks.
    #[arg(long, default_value_t = 0, requires = "random")]
    refine: usize,
    #[arg(long, default_value_t = 400)]
    iterations: usize,
    #[arg(long, default_value_t = 8)]
    max_depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the counterexample curve as CSV (default `counterexample.csv`).
    #[arg(long, num_args = 0..=1, default_missing_value = "counterexample.csv")]
    emit_curve: Option<PathBuf>,
    /// Run the containment pipeline on every network.
    #[arg(long)]
    force: bool,
    /// Full per-network reports; only the summary is printed otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct DiagnoseSummary {
    count: usize,
    min_sup_distance: Option<f64>,
    within_threshold: usize,
    surrounded: usize,
    intersects: usize,
    escaped: usize,
    not_applicable: usize,
}

impl DiagnoseSummary {
    fn of(reports: &[DiagnosticReport]) -> Self {
        let count_verdict = |v: Verdict| reports.iter().filter(|r| r.containment_verdict == v).count();
        Self {
            count: reports.len(),
            min_sup_distance: reports.iter().map(|r| r.sup_distance).reduce(f64::min),
            within_threshold: reports.iter().filter(|r| r.within_threshold).count(),
            surrounded: count_verdict(Verdict::Surrounded),
            intersects: count_verdict(Verdict::Intersects),
            escaped: count_verdict(Verdict::Escaped),
            not_applicable: count_verdict(Verdict::NotApplicable),
        }
    }
}

fn cmd_diagnose(a: &DiagnoseArgs) -> Result<bool> {
    if let Some(path) = &a.emit_curve {
        let file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
        counterexample_curve().curve.write_csv(file)?;
    }
    let opts = DiagnoseOptions { force_pipeline: a.force, ..DiagnoseOptions::default() };
    let reports = match (&a.corpus, a.random) {
        (Some(dir), _) => diagnose_dir(dir, &opts)?,
        (None, Some(n)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let mut nets = random_corpus(&mut rng, n, a.max_depth);
            for i in 0..a.refine.min(n) {
                let refined = local_search(&nets[i], a.iterations, &mut rng)?;
                nets.push(refined);
            }
            nets.iter()
                .enumerate()
                .map(|(i, net)| {
                    let mut r = diagnose_with(net, &opts)?;
                    r.name = Some(if i < n { format!("random-{i}") } else { format!("refined-{}", i - n) });
                    Ok(r)
                })
                .collect::<minwidth::Result<Vec<_>>>()?
        }
        (None, None) if a.emit_curve.is_some() => return Ok(true),
        (None, None) => bail!("give --random <n>, --corpus <dir> or --emit-curve"),
    };
    let summary = DiagnoseSummary::of(&reports);
    if let Some(path) = &a.out {
        #[derive(Serialize)]
        struct Full<'a> {
            summary: &'a DiagnoseSummary,
            reports: &'a [DiagnosticReport],
        }
        emit(&Full { summary: &summary, reports: &reports }, Some(path))?;
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(summary.within_threshold == 0)
}

#[derive(Args)]
struct SimplexArgs {
    #[arg(long)]
    dy: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn cmd_simplex(a: &SimplexArgs) -> Result<bool> {
    let report = simplex_bound(a.dy, a.p)?;
    let search = hyperplane_search(a.dy, a.trials, a.seed);
    let holds = search.refined_min >= report.hyperplane_bound - 1e-12;
    let out = serde_json::json!({ "bound": report, "search": search, "bound_holds": holds });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(holds)
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Build(a) => cmd_build(a, cli.numeric),
        Command::Error(a) => cmd_error(a, cli.numeric),
        Command::VerifyLemma(a) => cmd_verify(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Simplex(a) => cmd_simplex(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
