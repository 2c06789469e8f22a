use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use mcqw::convergence_harness::{phase_sweep, reports_to_csv, Assumption, Ceilings, HarnessError};
use mcqw::limit_laws::{LawError, LimitLaw};
use mcqw::verification::{self as suites, Check};
use mcqw::walk_engine::{distribution_with, EngineConfig, WalkError, WalkSpec, DEFAULT_BUDGET};

mod init;
mod output;

use output::{Format, Sink};

#[derive(Parser, Debug)]
#[command(name = "mcqw", version, about = "Multi-coin Hadamard walks: exact distributions, limit laws and convergence checks")]
struct Cli {
    /// Cost ceiling for the exact engine, in evaluation units.
    #[arg(long, global = true)]
    budget: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact position distribution of the walk.
    Dist(DistArgs),
    /// Query a limit law.
    Law(LawArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Convergence sweep over β for one assumption.
    Sweep(SweepArgs),
    /// Measure the top-of-ladder KS values and write golden ceilings.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Debug)]
struct OutArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file, written atomically. Standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DistArgs {
    /// Number of coins.
    #[arg(long = "M", short = 'M')]
    m: usize,
    /// Number of steps.
    #[arg(long, short)]
    t: usize,
    /// caseA, caseB, ket1, mix:beta=X or file=PATH.
    #[arg(long, default_value = "caseA")]
    init: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("query").required(true)))]
struct LawArgs {
    /// Catalog name, e.g. `konno`, `arcsine:beta=1`, `fixedD:A:d=3:init=ket1`.
    name: String,
    /// Points `x1,x2,...` or a grid `lo:hi:n`.
    #[arg(long, group = "query", allow_hyphen_values = true)]
    density: Option<String>,
    #[arg(long, group = "query", allow_hyphen_values = true)]
    cdf: Option<String>,
    #[arg(long, group = "query")]
    moment: Option<u32>,
    /// Number of draws.
    #[arg(long, group = "query")]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// oracle, binomial, lemmas, spectral, moments, corollary,
    /// theorem:a, theorem:b, theorem:c or double-limit.
    suite: String,
    /// β values for `theorem:*`.
    #[arg(long, value_delimiter = ',', default_values_t = suites::THEOREM_BETAS)]
    beta: Vec<f64>,
    /// Ceiling file; defaults to the one built into the binary.
    #[arg(long)]
    ceilings: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AssumptionArg {
    A,
    B,
    C,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum)]
    assumption: AssumptionArg,
    #[arg(long, value_delimiter = ',', required = true)]
    betas: Vec<f64>,
    #[arg(long, default_value_t = suites::THEOREM_T_MAX)]
    tmax: usize,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long, default_value = "crates/core/golden/ks_ceilings.json")]
    out: PathBuf,
}

/// Failure with its exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Verification,
    Budget(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification => 1,
            Failure::Usage(_) => 2,
            Failure::Budget(_) => 3,
        }
    }
}

impl From<WalkError> for Failure {
    fn from(e: WalkError) -> Self {
        match e {
            WalkError::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<LawError> for Failure {
    fn from(e: LawError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Walk(w) => w.into(),
            HarnessError::Law(l) => l.into(),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn engine_config(budget: Option<f64>, default: f64) -> Result<EngineConfig, Failure> {
    let budget = budget.unwrap_or(default);
    if !(budget > 0.0) {
        return Err(Failure::Usage(format!("budget must be positive, got {budget}")));
    }
    Ok(EngineConfig {
        budget,
        ..EngineConfig::default()
    })
}

fn meta(command: &str, extra: Value) -> Value {
    let mut m = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut m, extra) {
        m.extend(e);
    }
    m
}

fn cmd_dist(args: &DistArgs, budget: Option<f64>) -> Result<(), Failure> {
    let init = init::parse(&args.init, args.m)?;
    let spec = WalkSpec::new(args.m, args.t)?;
    let cfg = engine_config(budget, DEFAULT_BUDGET)?;
    let dist = distribution_with(&spec, &init, &cfg)?;
    let sink = Sink::new(args.out.out.clone());
    let (xs, ps): (Vec<i64>, Vec<f64>) = dist.support().unzip();
    match args.out.format {
        Format::Csv => {
            let mut s = String::from("x,probability\n");
            for (x, p) in xs.iter().zip(&ps) {
                s.push_str(&format!("{x},{p}\n"));
            }
            sink.write(&s)
        }
        Format::Json => sink.write_json(&json!({
            "meta": meta("dist", json!({
                "init": args.init,
                "n_pure": args.m - init.count_mixed(),
                "n_mixed": init.count_mixed(),
                "budget": cfg.budget,
            })),
            "data": { "t": args.t, "M": args.m, "x": xs, "mass": ps },
        })),
    }
}

fn parse_points(s: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Usage(format!("bad point list `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if n < 2 || !(lo.is_finite() && hi.is_finite()) {
            return Err(bad());
        }
        return Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

fn cmd_law(args: &LawArgs) -> Result<(), Failure> {
    let spec: LimitLaw = args.name.parse()?;
    let law = spec.build();
    let sink = Sink::new(args.out.out.clone());
    let table = |query: &str, header: &str, rows: Vec<(String, f64)>| match args.out.format {
        Format::Csv => {
            let mut s = format!("{header},value\n");
            for (x, v) in &rows {
                s.push_str(&format!("{x},{v}\n"));
            }
            sink.write(&s)
        }
        Format::Json => {
            let data: Vec<Value> = rows.iter().map(|(x, v)| json!({ header: x.parse::<f64>().ok(), "value": v })).collect();
            sink.write_json(&json!({
                "meta": meta("law", json!({ "law": spec.to_string(), "query": query, "seed": args.seed })),
                "data": data,
            }))
        }
    };
    if let Some(pts) = &args.density {
        let rows = parse_points(pts)?.into_iter().map(|x| (x.to_string(), law.density(x))).collect();
        table("density", "x", rows)
    } else if let Some(pts) = &args.cdf {
        let rows = parse_points(pts)?.into_iter().map(|x| (x.to_string(), law.cdf(x))).collect();
        table("cdf", "x", rows)
    } else if let Some(n) = args.moment {
        let v = law.moment(n)?;
        match args.out.format {
            Format::Csv => sink.write(&format!("n,value\n{n},{v}\n")),
            Format::Json => sink.write_json(&json!({
                "meta": meta("law", json!({ "law": spec.to_string(), "query": "moment", "seed": args.seed })),
                "data": { "n": n, "value": v },
            })),
        }
    } else if let Some(n) = args.sample {
        let rows = law.sample(n, args.seed).into_iter().enumerate().map(|(i, v)| (i.to_string(), v)).collect();
        table("sample", "i", rows)
    } else {
        Err(Failure::Usage("no query given".into()))
    }
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    passed: bool,
    checks: &'a [Check],
}

fn cmd_verify(args: &VerifyArgs, budget: Option<f64>) -> Result<(), Failure> {
    let cfg = engine_config(budget, suites::VERIFY_BUDGET)?;
    let ceilings = match &args.ceilings {
        Some(p) => Ceilings::load(p)?,
        None => Ceilings::golden()?,
    };
    let c = Some(&ceilings);
    let checks = match args.suite.as_str() {
        "oracle" => suites::oracle_suite(&cfg)?,
        "binomial" => suites::binomial_suite(&cfg)?,
        "lemmas" => suites::lemma_suite(),
        "spectral" => suites::spectral_suite(),
        "moments" => suites::moment_suite(&cfg)?,
        "corollary" => suites::corollary_suite(&cfg, c)?,
        "double-limit" => suites::double_limit_suite(&cfg, c)?,
        s => match s.strip_prefix("theorem:") {
            Some(a) => {
                let assumption = match a {
                    "a" => Assumption::A,
                    "b" => Assumption::B,
                    "c" => Assumption::C,
                    _ => return Err(Failure::Usage(format!("unknown assumption `{a}`"))),
                };
                let (reports, checks) = suites::theorem_suite(assumption, &args.beta, &cfg, c)?;
                if let Some(r) = reports.iter().find(|r| !r.complete) {
                    return Err(Failure::Budget(r.error.clone().unwrap_or_default()));
                }
                checks
            }
            None => return Err(Failure::Usage(format!("unknown suite `{s}`"))),
        },
    };
    let passed = suites::all_passed(&checks);
    Sink::new(args.out.clone()).write_json(&json!({
        "meta": meta("verify", json!({ "suite": args.suite, "budget": cfg.budget })),
        "data": VerifyOutput { passed, checks: &checks },
    }))?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn cmd_sweep(args: &SweepArgs, budget: Option<f64>) -> Result<(), Failure> {
    let assumption = match args.assumption {
        AssumptionArg::A => Assumption::A,
        AssumptionArg::B => Assumption::B,
        AssumptionArg::C => Assumption::C,
    };
    let cfg = engine_config(budget, suites::VERIFY_BUDGET)?;
    let reports = phase_sweep(assumption, &args.betas, args.tmax, &cfg, None)?;
    let sink = Sink::new(args.out.out.clone());
    match args.out.format {
        Format::Csv => sink.write(&reports_to_csv(&reports))?,
        Format::Json => sink.write_json(&json!({
            "meta": meta("sweep", json!({
                "assumption": assumption.to_string(),
                "betas": args.betas,
                "tmax": args.tmax,
                "budget": cfg.budget,
            })),
            "data": reports,
        }))?,
    }
    match reports.iter().find(|r| !r.complete) {
        Some(r) => Err(Failure::Budget(r.error.clone().unwrap_or_default())),
        None => Ok(()),
    }
}

fn cmd_calibrate(args: &CalibrateArgs, budget: Option<f64>) -> Result<(), Failure> {
    let cfg = engine_config(budget, suites::VERIFY_BUDGET)?;
    let ceilings = suites::calibrate(&cfg)?;
    Sink::new(Some(args.out.clone())).write(&(ceilings.to_json() + "\n"))
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("MCQW_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Usage(format!("MCQW_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Dist(a) => cmd_dist(a, cli.budget),
        Command::Law(a) => cmd_law(a),
        Command::Verify(a) => cmd_verify(a, cli.budget),
        Command::Sweep(a) => cmd_sweep(a, cli.budget),
        Command::Calibrate(a) => cmd_calibrate(a, cli.budget),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Budget(m) => eprintln!("budget: {m}"),
                Failure::Verification => eprintln!("verification failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
