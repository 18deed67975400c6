use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use tau_coherence::coherence::{
    default_block_size, BlockwiseScan, ColumnSource, Mode, ScanResult, Statistic,
};
use tau_coherence::format::{self, sidecar_path, MatrixSource};
use tau_coherence::gof::{gof_report, DEFAULT_GRID_POINTS};
use tau_coherence::indexsets::{cardinalities, cardinalities_brute_force, SetCardinalities};
use tau_coherence::model::{
    check_hypotheses, derive_schedule, schedule_values, HypothesisStatus, ModelParams, RateParams,
    DEFAULT_T,
};
use tau_coherence::sampler::{
    build_window, derive_seed, sample_cholesky, CoefficientSource, MaSource, SigmaSpec,
};
use tau_coherence::study::{
    estimate_tail_probability, read_samples, run_study, samples_path, StudyConfig,
};

use crate::{Cli, Command, Global};

pub enum CliError {
    /// Bad or inconsistent arguments (exit code 1).
    Usage(String),
    /// The computation itself failed (exit code 2).
    Compute(tau_coherence::Error),
    /// An input file could not be read (exit code 2).
    Input(PathBuf, tau_coherence::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Compute(_) | CliError::Input(..) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Compute(e) => write!(f, "{e}"),
            CliError::Input(path, e) => write!(f, "{}: {e}", path.display()),
        }
    }
}

impl<E: Into<tau_coherence::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Compute(e.into())
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn input<E: Into<tau_coherence::Error>>(path: &Path) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Input(path.to_path_buf(), e.into())
}

pub fn run(cli: &Cli) -> CliResult {
    let g = &cli.global;
    match &cli.command {
        Command::Gen(a) => gen(g, a),
        Command::Coherence(a) => coherence(g, a),
        Command::Mc(a) => mc(g, a),
        Command::Gof(a) => gof(g, a),
        Command::Check(a) => check(g, a),
        Command::Card(a) => card(g, a),
        Command::Tailprob(a) => tailprob(g, a),
    }
}

/// Every JSON report carries the tool version and the resolved configuration.
fn envelope<A: Serialize>(command: &str, g: &Global, args: &A, result: Value) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": { "global": g, "args": args },
        "result": result,
    })
}

fn emit(g: &Global, report: &Value, human: impl FnOnce()) -> CliResult {
    if g.json {
        println!("{}", serde_json::to_string_pretty(report).map_err(tau_coherence::Error::from)?);
    } else {
        human();
    }
    Ok(())
}

fn write_json(path: &Path, value: &Value) -> CliResult {
    let f = BufWriter::new(File::create(path).map_err(input(path))?);
    serde_json::to_writer_pretty(f, value).map_err(tau_coherence::Error::from)?;
    Ok(())
}

fn read_sidecar(path: &Path) -> Option<Value> {
    let text = std::fs::read_to_string(sidecar_path(path)).ok()?;
    serde_json::from_str(&text).ok()
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    /// Moving average of latent Gaussian columns.
    Ma,
    /// Cholesky factor of the banded covariance (p <= 4096).
    Cholesky,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    /// Columns (default: the schedule's p for this n).
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// Take p, tau, K and eps from the default schedule.
    #[arg(long, conflicts_with_all = ["p", "tau", "k", "eps"])]
    pub schedule: bool,
    #[arg(long)]
    pub seed: u64,
    /// Seed of the central window coefficients (default: derived from --seed).
    #[arg(long, conflicts_with = "r")]
    pub window_seed: Option<u64>,
    /// Explicit central coefficients r_1..r_{2 tau + 1}.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub r: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Sampler::Ma)]
    pub sampler: Sampler,
    /// Constant in-band correlation for the Cholesky sampler.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub band_corr: f64,
    /// Rescale moving-average columns to unit variance.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = 256)]
    pub rows_per_block: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn gen_params(a: &GenArgs) -> CliResult<ModelParams> {
    if a.schedule {
        return Ok(derive_schedule(a.n)?);
    }
    let (tau, k, eps) = match (a.tau, a.k, a.eps) {
        (Some(t), Some(k), Some(e)) => (t, k, e),
        _ => return Err(usage("gen needs --tau, --K and --eps, or --schedule")),
    };
    let p = match a.p {
        Some(p) => p,
        None => schedule_values(a.n)?.0,
    };
    Ok(ModelParams::new(a.n, p, tau, k, eps)?)
}

fn gen(g: &Global, a: &GenArgs) -> CliResult {
    let params = gen_params(a)?;
    let started = Instant::now();
    let window_seed = a.window_seed.unwrap_or_else(|| derive_seed(a.seed, u64::MAX));
    let meta = match a.sampler {
        Sampler::Ma => {
            let source = match &a.r {
                Some(r) => CoefficientSource::Explicit(r.clone()),
                None => CoefficientSource::Seed(window_seed),
            };
            let window = build_window(params.tau, params.k, params.eps, source)?;
            let ma = MaSource::new(params, window.clone(), a.seed)?.normalized(a.normalize);
            format::write_ma(&a.out, &ma, a.rows_per_block).map_err(input(&a.out))?;
            json!({
                "sampler": "ma",
                "window_seed": a.r.is_none().then_some(window_seed),
                "window": window,
                "normalized": a.normalize,
            })
        }
        Sampler::Cholesky => {
            let rho = a.band_corr;
            let spec = SigmaSpec::new(params.p, params.tau, params.k, params.eps)?
                .with_band(move |_, _| rho);
            let x = sample_cholesky(&spec, params.n, a.seed)?;
            format::write_tcoh(&a.out, x.view()).map_err(input(&a.out))?;
            json!({ "sampler": "cholesky", "band_corr": rho })
        }
    };
    let mut meta = meta;
    meta["format"] = json!("TCOH");
    meta["format_version"] = json!(format::VERSION);
    meta["crate_version"] = json!(env!("CARGO_PKG_VERSION"));
    meta["params"] = json!(params);
    meta["seed"] = json!(a.seed);
    format::write_sidecar(&a.out, &meta).map_err(input(&a.out))?;
    let secs = started.elapsed().as_secs_f64();
    let report = envelope(
        "gen",
        g,
        a,
        json!({ "out": a.out, "meta": meta, "seconds": secs }),
    );
    emit(g, &report, || {
        println!(
            "wrote {} ({} x {}, tau={}, K={}, eps={}) in {secs:.2} s",
            a.out.display(),
            params.n,
            params.p,
            params.tau,
            params.k,
            params.eps
        )
    })
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Centered,
    KnownMean,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum StatArg {
    /// Pearson correlation, giving L_{n,tau}.
    Corr,
    /// Raw inner product, giving V_{n,tau}.
    Raw,
}

#[derive(Debug, Args, Serialize)]
pub struct CoherenceArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub tau: usize,
    /// Packet width Tb (default: derived from --memory-budget).
    #[arg(long)]
    pub block_size: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Centered)]
    pub mode: ModeArg,
    /// JSON array of column means for --mode known-mean.
    #[arg(long)]
    pub mu: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = StatArg::Corr)]
    pub stat: StatArg,
    /// Also compute V_{n,tau} alongside L_{n,tau}.
    #[arg(long)]
    pub with_v: bool,
}

fn coherence(g: &Global, a: &CoherenceArgs) -> CliResult {
    let mode = match (a.mode, &a.mu) {
        (ModeArg::Centered, None) => Mode::Centered,
        (ModeArg::Centered, Some(_)) => return Err(usage("--mu needs --mode known-mean")),
        (ModeArg::KnownMean, None) => return Err(usage("--mode known-mean needs --mu")),
        (ModeArg::KnownMean, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(input(path))?;
            let mu: Vec<f64> = serde_json::from_str(&text).map_err(input(path))?;
            Mode::KnownMean(mu)
        }
    };
    let started = Instant::now();
    let source = MatrixSource::open(&a.input, g.memory_budget).map_err(input(&a.input))?;
    let (n, p) = (source.nrows(), source.ncols());
    let resident = source.resident_bytes();
    let block_size = a
        .block_size
        .unwrap_or_else(|| default_block_size(n, p, g.memory_budget.saturating_sub(resident)));
    let scan = |stat: Statistic| -> CliResult<ScanResult> {
        Ok(BlockwiseScan::new(a.tau, block_size)
            .mode(mode.clone())
            .statistic(stat)
            .run(&source)?)
    };
    let (l, v) = match a.stat {
        StatArg::Corr => {
            let l = scan(Statistic::Correlation)?;
            let v = if a.with_v { Some(scan(Statistic::RawInner)?) } else { None };
            (Some(l), v)
        }
        StatArg::Raw => (None, Some(scan(Statistic::RawInner)?)),
    };
    let secs = started.elapsed().as_secs_f64();
    let main = l.or(v).expect("one statistic is always computed");
    let result = json!({
        "input": a.input,
        "n": n,
        "p": p,
        "tau": a.tau,
        "mode": mode.kind(),
        "stat": a.stat,
        "l_n_tau": l.map(|s| s.value),
        "pair": main.pair,
        "v_n_tau": v.map(|s| s.value),
        "v_pair": v.map(|s| s.pair),
        "block_size": block_size,
        "pairs_scanned": main.pairs_scanned,
        "resident_matrix_bytes": resident,
        "timing": { "seconds": secs },
        "source_meta": read_sidecar(&a.input),
    });
    let report = envelope("coherence", g, a, result);
    emit(g, &report, || {
        if let Some(l) = l {
            println!("L_n,tau = {:.17e} at pair {:?}", l.value, l.pair);
        }
        if let Some(v) = v {
            println!("V_n,tau = {:.17e} at pair {:?}", v.value, v.pair);
        }
        println!("n={n} p={p} tau={} Tb={block_size} in {secs:.2} s", a.tau);
    })
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Draw a fresh coefficient window for every replication.
    #[arg(long)]
    pub redraw_window: bool,
}

fn mc(g: &Global, a: &McArgs) -> CliResult {
    let mut config = StudyConfig::new(a.n.clone(), a.reps, a.seed);
    config.threads = g.threads;
    config.block_size = a.block_size;
    config.memory_budget = g.memory_budget;
    config.redraw_window = a.redraw_window;
    config.out_dir = Some(a.out.clone());
    let sets = run_study(&config)?;
    let summary: Vec<Value> = sets
        .iter()
        .map(|s| {
            json!({
                "n": s.params.n,
                "params": s.params,
                "block_size": s.block_size,
                "samples": s.samples.len(),
                "failed": s.failed,
                "mean": s.mean(),
                "file": samples_path(&a.out, s.params.n),
            })
        })
        .collect();
    let report = envelope("mc", g, a, json!({ "studies": summary }));
    write_json(&a.out.join("summary.json"), &report)?;
    emit(g, &report, || {
        for s in &sets {
            println!(
                "n={:<6} p={:<7} samples={:<5} failed={:<3} mean T_n={:.4} -> {}",
                s.params.n,
                s.params.p,
                s.samples.len(),
                s.failed.len(),
                s.mean(),
                samples_path(&a.out, s.params.n).display()
            );
        }
    })
}

#[derive(Debug, Args, Serialize)]
pub struct GofArgs {
    #[arg(long)]
    pub samples: PathBuf,
    /// Write the report here as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
}

fn gof(g: &Global, a: &GofArgs) -> CliResult {
    if a.grid_points < 2 {
        return Err(usage("--grid-points must be at least 2"));
    }
    let file = read_samples(&a.samples).map_err(input(&a.samples))?;
    let r = gof_report(&file.samples, a.bandwidth, a.grid_points)?;
    let mut result = serde_json::to_value(&r).map_err(tau_coherence::Error::from)?;
    result["samples_file"] = json!(a.samples);
    result["samples_header"] = Value::Object(file.header);
    let report = envelope("gof", g, a, result);
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    emit(g, &report, || {
        println!("samples   {} (mean {:.4}, sd {:.4})", r.sample.count, r.sample.mean, r.sample.sd);
        println!("d_KS      {:.6}", r.d_ks);
        println!("d_L2      {:.6}", r.d_l2);
        println!("d_TV      {:.6}", r.d_tv);
        println!("bandwidth {:.6}", r.bandwidth);
        if let Some(w) = &r.warning {
            println!("warning   {w}");
        }
    })
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub nu: f64,
    #[arg(long, default_value_t = DEFAULT_T)]
    pub t: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [500, 1000, 2000])]
    pub n_grid: Vec<usize>,
}

fn check(g: &Global, a: &CheckArgs) -> CliResult {
    let rates = RateParams::new(a.gamma, a.delta, a.nu, a.t)?;
    let report = check_hypotheses(derive_schedule, rates, &a.n_grid, None)?;
    let value = serde_json::to_value(&report).map_err(tau_coherence::Error::from)?;
    let env = envelope("check", g, a, value);
    emit(g, &env, || {
        println!(
            "c_gamma = {:.6}  c(gamma, delta) = {:.6}",
            report.constants.c_gamma, report.constants.c_gamma_delta
        );
        for e in &report.entries {
            let status = match e.status {
                HypothesisStatus::Pass => "pass",
                HypothesisStatus::Fail => "FAIL",
                HypothesisStatus::AsymptoticTrend => "trend",
                HypothesisStatus::NotEvaluated => "not evaluated",
            };
            println!("{:<6} {:<14} {}", e.name, status, e.diagnostic);
            for t in &e.trend {
                println!("         n={:<6} p={:<7} {:.6}", t.n, t.p, t.ratio);
            }
        }
    })
}

#[derive(Debug, Args, Serialize)]
pub struct CardArgs {
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub tau: usize,
    #[arg(long = "K")]
    pub k: usize,
    /// Also count by enumerating every pair.
    #[arg(long)]
    pub brute: bool,
}

fn triple(c: &SetCardinalities) -> String {
    format!("({}, {}, {})", c.i_tau, c.i_k, c.i_zero)
}

fn card(g: &Global, a: &CardArgs) -> CliResult {
    let formula = cardinalities(a.p, a.tau, a.k)?;
    let brute = if a.brute {
        Some(cardinalities_brute_force(a.p, a.tau, a.k)?)
    } else {
        None
    };
    let matches = brute.map(|b| b == formula);
    let result = json!({
        "p": a.p,
        "tau": a.tau,
        "K": a.k,
        "closed_form": formula,
        "brute_force": brute,
        "match": matches,
    });
    let report = envelope("card", g, a, result);
    emit(g, &report, || {
        println!("closed-form {}  total {}", triple(&formula), formula.total);
        if let Some(b) = &brute {
            println!("brute-force {}  total {}", triple(b), b.total);
            println!("{}", if b == &formula { "match" } else { "MISMATCH" });
        }
    })?;
    if matches == Some(false) {
        return Err(CliError::Compute(tau_coherence::Error::Format(
            "closed form and enumeration disagree".into(),
        )));
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct TailArgs {
    #[arg(long)]
    pub n: usize,
    /// Dimension entering the threshold a_n(y).
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub y: f64,
    #[arg(long, default_value_t = 10_000_000)]
    pub reps: u64,
    #[arg(long)]
    pub seed: u64,
}

fn tailprob(g: &Global, a: &TailArgs) -> CliResult {
    let started = Instant::now();
    let t = estimate_tail_probability(a.n, a.p, a.rho, a.y, a.reps, a.seed)?;
    let secs = started.elapsed().as_secs_f64();
    let mut result = serde_json::to_value(t).map_err(tau_coherence::Error::from)?;
    result["seconds"] = json!(secs);
    let report = envelope("tailprob", g, a, result);
    emit(g, &report, || {
        println!(
            "P(|<X,Y>| > {:.4}) = {:.6e} +- {:.2e} ({} / {} draws)",
            t.threshold, t.estimate, t.half_width, t.exceedances, t.reps
        );
        if let (Some(r), Some(q)) = (t.reference, t.ratio) {
            println!("reference {r:.6e}, ratio {q:.4}");
        }
    })
}
