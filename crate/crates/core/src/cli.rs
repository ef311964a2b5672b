//! Command-line front end.

use std::env;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bench::{self, BenchMatrix, Metric, RunRow};
use crate::cg::{self, BetaKind, BetaVariant, RunRecord, Safeguard, SolverConfig};
use crate::error::Error;
use crate::linesearch::WolfeMode;
use crate::problems;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "ICG_SEED";

#[derive(Parser, Debug)]
#[command(name = "intervalcg", version, about = "Conjugate gradient methods for multiobjective interval optimization")]
struct Cli {
    /// TOML file with default values; command-line flags take precedence.
    #[arg(long, global = true)]
    config_file: Option<PathBuf>,

    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem from one starting point.
    Solve(SolveArgs),
    /// Run a problems x variants x seeds matrix.
    Bench(BenchArgs),
    /// Compute performance profiles from a runs.csv file.
    Profile(ProfileArgs),
    /// List the built-in problems.
    ListProblems,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum WolfeArg {
    Strong,
    Standard,
}

impl From<WolfeArg> for WolfeMode {
    fn from(w: WolfeArg) -> Self {
        match w {
            WolfeArg::Strong => WolfeMode::Strong,
            WolfeArg::Standard => WolfeMode::Standard,
        }
    }
}

#[derive(Args, Debug, Default)]
struct SolverArgs {
    /// Sufficient decrease coefficient.
    #[arg(long)]
    rho: Option<f64>,
    /// Curvature coefficient.
    #[arg(long)]
    sigma: Option<f64>,
    /// Criticality tolerance.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum)]
    wolfe: Option<WolfeArg>,
    /// Clamp beta into the descent-preserving range with this mu in [0, 1).
    #[arg(long)]
    safeguard_mu: Option<f64>,
    /// Directory that receives a timestamped output folder.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    problem: Option<String>,
    /// One of sd, fr, cd, dy, mdy.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Explicit starting point, comma separated; overrides the seed.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Comma-separated problem names, or "all".
    #[arg(long)]
    problems: Option<String>,
    /// Comma-separated variants.
    #[arg(long)]
    variants: Option<String>,
    /// Seed range such as 0..99 (inclusive) or a list.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    /// Path to a runs.csv written by `bench`.
    #[arg(long)]
    runs: PathBuf,
    /// Output directory; defaults to the folder holding runs.csv.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// iterations, time or both.
    #[arg(long, default_value = "both")]
    metric: String,
}

/// Keys accepted in the config file. `--print-config` writes the same keys.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub variant: Option<String>,
    pub seed: Option<u64>,
    pub x0: Option<Vec<f64>>,
    pub problems: Option<String>,
    pub variants: Option<String>,
    pub seeds: Option<String>,
    pub parallelism: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub rho: Option<f64>,
    pub sigma: Option<f64>,
    pub eps: Option<f64>,
    pub max_iter: Option<usize>,
    pub wolfe: Option<String>,
    pub safeguard_mu: Option<f64>,
}

enum Failure {
    Usage(String),
    Problem(String),
    Solver(String),
}

impl Failure {
    fn report(&self, err: &mut dyn Write) -> i32 {
        let (prefix, msg, code) = match self {
            Failure::Usage(m) => ("ERROR:usage", m, EXIT_USAGE),
            Failure::Problem(m) => ("ERROR:problem", m, EXIT_USAGE),
            Failure::Solver(m) => ("ERROR:solver", m, EXIT_RUNTIME),
        };
        let _ = writeln!(err, "{prefix}: {msg}");
        code
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownProblem(_) => Failure::Problem(e.to_string()),
            Error::InvalidConfig(_) => Failure::Usage(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Solver(format!("{}: {e}", path.display()))
}

/// Entry point. `argv[0]` is the program name.
pub fn main(argv: Vec<String>) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`main`] with explicit output streams.
pub fn run_with(argv: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            return Failure::Usage(first.to_string()).report(err);
        }
    };
    match dispatch(cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => f.report(err),
    }
}

fn load_file(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {}", path.display(), e.message())))
}

fn default_seed() -> Result<u64, Failure> {
    match env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{SEED_ENV} must be a nonnegative integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn parse_wolfe(s: &str) -> Result<WolfeMode, Failure> {
    WolfeArg::from_str(s, true)
        .map(WolfeMode::from)
        .map_err(|_| Failure::Usage(format!("wolfe must be strong or standard, got {s:?}")))
}

/// Merges flags over file values into `file`, then builds the solver config.
fn resolve_solver(args: &SolverArgs, file: &mut FileConfig, kind: BetaKind) -> Result<SolverConfig, Failure> {
    macro_rules! take {
        ($field:ident) => {
            if args.$field.is_some() {
                file.$field = args.$field.clone();
            }
        };
    }
    take!(rho);
    take!(sigma);
    take!(eps);
    take!(max_iter);
    take!(safeguard_mu);
    take!(out_dir);
    if let Some(w) = args.wolfe {
        file.wolfe = Some(match w {
            WolfeArg::Strong => "strong".into(),
            WolfeArg::Standard => "standard".into(),
        });
    }

    let mut cfg = SolverConfig::new(kind);
    cfg.rho = file.rho.unwrap_or(cfg.rho);
    cfg.sigma = file.sigma.unwrap_or(cfg.sigma);
    cfg.eps = file.eps.unwrap_or(cfg.eps);
    cfg.max_iter = file.max_iter.unwrap_or(cfg.max_iter);
    if let Some(w) = &file.wolfe {
        cfg.wolfe_mode = parse_wolfe(w)?;
    }
    if let Some(mu) = file.safeguard_mu {
        cfg.safeguard = Safeguard::DescentClamp { mu };
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    file.rho = Some(cfg.rho);
    file.sigma = Some(cfg.sigma);
    file.eps = Some(cfg.eps);
    file.max_iter = Some(cfg.max_iter);
    file.wolfe = Some(
        match cfg.wolfe_mode {
            WolfeMode::Strong => "strong",
            WolfeMode::Standard => "standard",
        }
        .into(),
    );
    file.out_dir.get_or_insert_with(|| PathBuf::from("results"));
    Ok(cfg)
}

fn parse_kind(s: &str) -> Result<BetaKind, Failure> {
    s.parse().map_err(|e: Error| Failure::Usage(e.to_string()))
}

fn parse_kinds(s: &str) -> Result<Vec<BetaKind>, Failure> {
    let kinds = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(parse_kind)
        .collect::<Result<Vec<_>, _>>()?;
    if kinds.is_empty() {
        return Err(Failure::Usage("no variants given".into()));
    }
    Ok(kinds)
}

fn print_config(out: &mut dyn Write, file: &FileConfig) -> Result<(), Failure> {
    let text = toml::to_string(file).map_err(|e| Failure::Usage(e.to_string()))?;
    write!(out, "{text}").map_err(|e| Failure::Solver(e.to_string()))
}

/// Creates `base/<timestamp>`, adding `-N` when the name is taken.
pub fn fresh_output_dir(base: &Path) -> std::io::Result<PathBuf> {
    fs::create_dir_all(base)?;
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S").to_string();
    let mut candidate = base.join(&stamp);
    let mut n = 1;
    loop {
        match fs::create_dir(&candidate) {
            Ok(()) => return Ok(candidate),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                candidate = base.join(format!("{stamp}-{n}"));
                n += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

fn write_json(path: &Path, rec: &RunRecord) -> Result<(), Failure> {
    let f = fs::File::create(path).map_err(|e| io_failure(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, rec).map_err(|e| io_failure(path, e))?;
    writeln!(w).map_err(|e| io_failure(path, e))
}

fn record_file_name(rec: &RunRecord) -> String {
    match rec.seed {
        Some(s) => format!("{}_{}_{}.json", rec.problem, rec.variant, s),
        None => format!("{}_{}.json", rec.problem, rec.variant),
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let mut file = load_file(cli.config_file.as_deref())?;
    let w = |e: std::io::Error| Failure::Solver(e.to_string());
    match cli.command {
        Command::ListProblems => {
            for p in problems::registry() {
                writeln!(out, "{}", p.summary_line()).map_err(w)?;
            }
            Ok(())
        }
        Command::Solve(args) => {
            if args.problem.is_some() {
                file.problem = args.problem.clone();
            }
            if args.variant.is_some() {
                file.variant = args.variant.clone();
            }
            if args.seed.is_some() {
                file.seed = args.seed;
            }
            if args.x0.is_some() {
                file.x0 = args.x0.clone();
            }
            if file.seed.is_none() {
                file.seed = Some(default_seed()?);
            }
            let variant = file.variant.get_or_insert_with(|| "fr".into()).clone();
            let kind = parse_kind(&variant)?;
            let cfg = resolve_solver(&args.solver, &mut file, kind)?;
            let problem = file
                .problem
                .clone()
                .ok_or_else(|| Failure::Usage("solve needs --problem".into()))?;
            let spec = problems::lookup(&problem)?;
            if let Some(x0) = &file.x0 {
                if x0.len() != spec.dim() {
                    return Err(Failure::Usage(format!(
                        "--x0 has {} entries, {problem} has dimension {}",
                        x0.len(),
                        spec.dim()
                    )));
                }
            }
            if cli.print_config {
                return print_config(out, &file);
            }
            let seed = file.seed.unwrap_or(0);
            let x0 = file.x0.clone().unwrap_or_else(|| problems::sample_start(&spec, seed));
            let rec = cg::run_seeded(&spec.mo, &x0, &cfg, Some(seed))?;

            print_table(out, &rec).map_err(w)?;
            let dir = fresh_output_dir(file.out_dir.as_deref().unwrap_or(Path::new("results")))
                .map_err(|e| Failure::Solver(e.to_string()))?;
            let runs = dir.join("runs");
            fs::create_dir_all(&runs).map_err(|e| io_failure(&runs, e))?;
            let json_path = runs.join(record_file_name(&rec));
            write_json(&json_path, &rec)?;
            let trace_path = dir.join("trace.jsonl");
            let mut trace = BufWriter::new(fs::File::create(&trace_path).map_err(|e| io_failure(&trace_path, e))?);
            for line in rec.direction_trace() {
                let s = serde_json::to_string(&line).map_err(|e| io_failure(&trace_path, e))?;
                writeln!(trace, "{s}").map_err(|e| io_failure(&trace_path, e))?;
            }
            trace.flush().map_err(|e| io_failure(&trace_path, e))?;
            writeln!(out, "record: {}", json_path.display()).map_err(w)?;
            writeln!(out, "trace: {}", trace_path.display()).map_err(w)?;
            Ok(())
        }
        Command::Bench(args) => {
            if args.problems.is_some() {
                file.problems = args.problems.clone();
            }
            if args.variants.is_some() {
                file.variants = args.variants.clone();
            }
            if args.seeds.is_some() {
                file.seeds = args.seeds.clone();
            }
            if args.parallelism.is_some() {
                file.parallelism = args.parallelism;
            }
            let problems_arg = file.problems.get_or_insert_with(|| "all".into()).clone();
            let variants_arg = file.variants.get_or_insert_with(|| "sd,fr,cd,dy,mdy".into()).clone();
            let seeds_arg = file.seeds.get_or_insert_with(|| "0..99".into()).clone();
            let parallelism = *file.parallelism.get_or_insert_with(|| {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            });
            if parallelism == 0 {
                return Err(Failure::Usage("parallelism must be at least 1".into()));
            }
            let kinds = parse_kinds(&variants_arg)?;
            let cfg = resolve_solver(&args.solver, &mut file, kinds[0])?;
            let names: Vec<String> = if problems_arg.trim() == "all" {
                problems::names()
            } else {
                problems_arg.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
            };
            for n in &names {
                problems::lookup(n)?;
            }
            let seeds = bench::parse_seeds(&seeds_arg).map_err(|e| Failure::Usage(e.to_string()))?;
            let variants = kinds.into_iter().map(BetaVariant::standard).collect();
            let mut base = cfg;
            base.record_iterates = false;
            let matrix = BenchMatrix::new(names, variants, seeds, base)?;
            if cli.print_config {
                return print_config(out, &file);
            }

            let records = bench::run_matrix(&matrix, parallelism)?;
            let dir = fresh_output_dir(file.out_dir.as_deref().unwrap_or(Path::new("results")))
                .map_err(|e| Failure::Solver(e.to_string()))?;
            let runs_dir = dir.join("runs");
            fs::create_dir_all(&runs_dir).map_err(|e| io_failure(&runs_dir, e))?;
            for rec in &records {
                write_json(&runs_dir.join(record_file_name(rec)), rec)?;
            }
            let rows: Vec<RunRow> = records.iter().map(RunRow::from).collect();
            bench::write_runs_csv(&dir.join("runs.csv"), &rows)?;
            let summary = bench::aggregate(&rows);
            bench::write_summary_csv(&dir.join("summary.csv"), &summary)?;
            print_summary(out, &summary).map_err(w)?;
            writeln!(out, "output: {}", dir.display()).map_err(w)?;
            Ok(())
        }
        Command::Profile(args) => {
            let metrics = match args.metric.as_str() {
                "iterations" => vec![Metric::Iterations],
                "time" => vec![Metric::CpuTime],
                "both" => vec![Metric::Iterations, Metric::CpuTime],
                other => return Err(Failure::Usage(format!("metric must be iterations, time or both, got {other:?}"))),
            };
            let dir = args
                .out_dir
                .clone()
                .or_else(|| args.runs.parent().map(Path::to_path_buf))
                .unwrap_or_else(|| PathBuf::from("."));
            if cli.print_config {
                let text = format!(
                    "runs = {:?}\nout_dir = {:?}\nmetric = {:?}\n",
                    args.runs.display().to_string(),
                    dir.display().to_string(),
                    args.metric
                );
                return write!(out, "{text}").map_err(w);
            }
            let rows = bench::read_runs_csv(&args.runs).map_err(|e| Failure::Usage(e.to_string()))?;
            let summary = bench::aggregate(&rows);
            fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
            for m in metrics {
                let profile = bench::performance_profile(&summary, m);
                bench::write_profile(&dir, &profile)?;
                writeln!(out, "wrote {}", dir.join(format!("profile_{}.csv", m.tag())).display()).map_err(w)?;
            }
            Ok(())
        }
    }
}

fn print_table(out: &mut dyn Write, rec: &RunRecord) -> std::io::Result<()> {
    let seed = rec.seed.map_or("-".to_string(), |s| s.to_string());
    writeln!(out, "problem {}  variant {}  seed {}", rec.problem, rec.variant, seed)?;
    writeln!(out, "curvature rule: {}", rec.curvature_rule)?;
    writeln!(
        out,
        "{:>6} {:>14} {:>14} {:>12} {:>14} {:>10} {:>10}",
        "k", "xi", "psi(v)", "|v|", "psi(d)", "beta", "t"
    )?;
    let n = rec.xi_trace.len();
    let stride = n.div_ceil(50).max(1);
    for k in 0..n {
        if k % stride != 0 && k + 1 != n {
            continue;
        }
        let step = |v: &Vec<f64>| v.get(k).map_or("-".to_string(), |x| format!("{x:.3e}"));
        writeln!(
            out,
            "{:>6} {:>14.6e} {:>14.6e} {:>12.4e} {:>14} {:>10} {:>10}",
            k,
            rec.xi_trace[k],
            rec.psi_v_trace[k],
            rec.norm_v_trace[k],
            step(&rec.psi_d_trace),
            step(&rec.beta_trace),
            step(&rec.step_trace)
        )?;
    }
    writeln!(
        out,
        "status {}  iterations {}  restarts {}  final xi {:.6e}  time {:.3}s",
        rec.status,
        rec.iterations,
        rec.restarts,
        rec.final_xi(),
        rec.wall_time
    )?;
    let x: Vec<String> = rec.final_x.iter().map(|v| format!("{v:.8}")).collect();
    writeln!(out, "x = ({})", x.join(", "))
}

fn print_summary(out: &mut dyn Write, rows: &[bench::SummaryRow]) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<16} {:<4} {:>5} {:>5} {:>24} {:>30}",
        "problem", "var", "runs", "fail", "iterations (min,mean,max)", "time s (min,mean,max)"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:<16} {:<4} {:>5} {:>5} {:>24} {:>30}",
            r.problem,
            r.variant,
            r.runs,
            r.failures,
            format!("({}, {:.1}, {})", r.iter_min, r.iter_mean, r.iter_max),
            format!("({:.1e}, {:.1e}, {:.1e})", r.time_min, r.time_mean, r.time_max)
        )?;
    }
    Ok(())
}
