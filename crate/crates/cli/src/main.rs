use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quadshare::optimizer::{interpret, optimize, parse_program, Bindings, Expr, Program, Stmt};
use quadshare::tensor::{read_binary, read_csv, write_csv};
use quadshare::{demos, Engine, EngineConfig, Error, ExtractionMode, LatencyMode, LatencyModel, NetStats, ShareTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "quadshare", version, about = "Run private programs on a simulated four-server engine")]
struct Cli {
    #[command(flatten)]
    cfg: RunConfig,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct RunConfig {
    /// Ring bits.
    #[arg(long, global = true, default_value_t = 128)]
    n: u32,
    /// Fraction bits.
    #[arg(long, global = true, default_value_t = 40)]
    d: u32,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = "none")]
    latency: LatencyMode,
    /// Run the program exactly as written.
    #[arg(long, global = true)]
    no_optimize: bool,
    /// Write network statistics as JSON to this path.
    #[arg(long, global = true, value_name = "PATH")]
    stats: Option<PathBuf>,
    /// Log-depth carry evaluation in comparisons.
    #[arg(long, global = true)]
    ppa: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program file; inputs are NAME=PATH pairs, CSV or QSTN binary.
    Run {
        program: PathBuf,
        #[arg(short, long = "input", value_name = "NAME=PATH")]
        inputs: Vec<String>,
        /// Directory for the revealed tensors, one CSV each.
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Time one batched operation over `size` elements.
    Bench {
        op: BenchOp,
        #[arg(long, default_value_t = 1000)]
        size: usize,
    },
    /// Run a bundled pipeline against its cleartext oracle.
    Demo { which: DemoKind },
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchOp {
    Mul,
    Cmp,
    Dot,
    Bitx,
    Ot,
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoKind {
    Lr,
    Nn,
}

/// Exit 1 for engine failures, 2 for usage and I/O.
enum Failure {
    Engine(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Parse { .. } | Error::Format(_) | Error::Config(_) => Failure::Usage(e.to_string()),
            e => Failure::Engine(e),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Engine(e) => write!(f, "{e}"),
            Failure::Usage(m) => write!(f, "{m}"),
        }
    }
}

/// Writes a line to stdout; a closed pipe is not an error.
fn emit(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("quadshare: {f}");
            ExitCode::from(match f {
                Failure::Engine(_) => 1,
                Failure::Usage(_) => 2,
            })
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let engine = engine(&cli.cfg)?;
    match &cli.cmd {
        Command::Run { program, inputs, out } => run(&cli.cfg, engine, program, inputs, out),
        Command::Bench { op, size } => bench(&cli.cfg, engine, *op, *size),
        Command::Demo { which } => demo(&cli.cfg, engine, *which),
    }
}

fn engine(cfg: &RunConfig) -> Result<Engine, Failure> {
    let mode = if cfg.ppa { ExtractionMode::Ppa } else { ExtractionMode::Ripple };
    let c = EngineConfig::default()
        .with_ring(cfg.n, cfg.d)?
        .with_seed(cfg.seed)
        .with_extraction(mode)
        .with_latency(LatencyModel::from_mode(cfg.latency));
    Ok(Engine::new(c))
}

fn stats_json(stats: &NetStats, wall_ms: f64) -> Value {
    let mut v = stats.to_json();
    v["wall_ms"] = json!(wall_ms);
    v
}

fn write_stats(cfg: &RunConfig, stats: &NetStats, wall_ms: f64) -> Result<(), Failure> {
    if let Some(path) = &cfg.stats {
        let text = serde_json::to_string_pretty(&stats_json(stats, wall_ms)).expect("plain json");
        std::fs::write(path, text + "\n").map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn declared(p: &Program) -> (Vec<String>, Vec<String>) {
    fn walk(e: &Expr, private: &mut Vec<String>, public: &mut Vec<String>) {
        match e {
            Expr::Priv(n, _) => private.push(n.clone()),
            Expr::Pub(n, _) => public.push(n.clone()),
            _ => {}
        }
        e.children().into_iter().for_each(|c| walk(c, private, public));
    }
    fn stmts(ss: &[Stmt], private: &mut Vec<String>, public: &mut Vec<String>) {
        for s in ss {
            s.exprs().into_iter().for_each(|e| walk(e, private, public));
            match s {
                Stmt::Loop { body, .. } => stmts(body, private, public),
                Stmt::Branch { then, other, .. } => {
                    stmts(then, private, public);
                    stmts(other, private, public);
                }
                _ => {}
            }
        }
    }
    let (mut private, mut public) = (Vec::new(), Vec::new());
    stmts(&p.stmts, &mut private, &mut public);
    (private, public)
}

fn read_tensor(path: &Path, e: &Engine) -> Result<quadshare::Tensor, Failure> {
    let is_binary = path.extension().is_some_and(|x| x.eq_ignore_ascii_case("qstn"));
    let t = if is_binary { read_binary(path, e.ring()) } else { read_csv(path) };
    t.map_err(|err| usage(format!("{}: {err}", path.display())))
}

/// File name for a revealed value: the variable name, or `out<k>` for an
/// expression.
fn output_name(label: &str, k: usize) -> String {
    if !label.is_empty() && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        label.to_string()
    } else {
        format!("out{k}")
    }
}

fn run(cfg: &RunConfig, mut e: Engine, program: &Path, inputs: &[String], out: &Path) -> Result<(), Failure> {
    let src = std::fs::read_to_string(program).map_err(|err| usage(format!("{}: {err}", program.display())))?;
    let mut p = parse_program(&src)?;
    let mut files = BTreeMap::new();
    for spec in inputs {
        let (name, path) = spec.split_once('=').ok_or_else(|| usage(format!("input `{spec}` is not NAME=PATH")))?;
        files.insert(name.to_string(), read_tensor(Path::new(path), &e)?);
    }
    let (private, public) = declared(&p);
    let mut b = Bindings::default();
    for (names, map) in [(&private, &mut b.private), (&public, &mut b.public)] {
        for n in names {
            let t = files.get(n).ok_or_else(|| usage(format!("no input given for `{n}`")))?;
            map.insert(n.clone(), t.clone());
        }
    }
    if !cfg.no_optimize {
        p = optimize(p)?;
    }
    let start = Instant::now();
    let outcome = interpret(&mut e, &p, &b)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    std::fs::create_dir_all(out).map_err(|err| usage(format!("{}: {err}", out.display())))?;
    for (k, (label, t)) in outcome.outputs.iter().enumerate() {
        let path = out.join(format!("{}.csv", output_name(label, k)));
        write_csv(&path, t).map_err(|err| usage(format!("{}: {err}", path.display())))?;
        emit(&format!("{label} {} = {:?}", t.shape, t.data));
    }
    write_stats(cfg, &outcome.compute, wall_ms)?;
    emit(&format!("rounds = {}", outcome.compute.total_rounds));
    Ok(())
}

fn bench(cfg: &RunConfig, mut e: Engine, op: BenchOp, size: usize) -> Result<(), Failure> {
    if size == 0 {
        return Err(usage("--size must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut vals = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1000.0..1000.0)).collect() };
    let (a, b) = (vals(size), vals(size));
    let x = e.share_input(0, &a)?;
    let y = e.share_input(0, &b)?;
    let c = match op {
        BenchOp::Ot => Some(e.less_than(&x, &y)?),
        _ => None,
    };
    let before = e.stats();
    let start = Instant::now();
    match op {
        BenchOp::Mul => drop(e.mul(&x, &y)?),
        BenchOp::Cmp => drop(e.less_than(&x, &y)?),
        BenchOp::Dot => {
            let (u, v) = (ShareTensor::new([size], x.clone())?, ShareTensor::new([size], y.clone())?);
            drop(u.dot(&mut e, &v)?)
        }
        BenchOp::Bitx => drop(e.is_negative(&x)?),
        BenchOp::Ot => drop(e.ot_select(c.as_ref().expect("prepared"), &x)?),
    }
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let s = NetStats::diff(&before, &e.stats());
    let per_server: BTreeMap<String, Value> = quadshare::Server::ALL
        .iter()
        .map(|sv| {
            let p = s.server(*sv);
            (sv.name().to_string(), json!({ "messages": p.messages, "bytes": p.bytes }))
        })
        .collect();
    let rate = |ms: f64| if ms > 0.0 { size as f64 / (ms / 1e3) } else { f64::INFINITY };
    let report = json!({
        "op": op.to_possible_value().expect("named").get_name(),
        "size": size,
        "rounds": s.total_rounds,
        "servers": per_server,
        "wall_ms": wall_ms,
        "simulated_ms": s.simulated_ms,
        "ops_per_sec_wall": rate(wall_ms),
        "ops_per_sec_simulated": if s.simulated_ms > 0.0 { json!(rate(s.simulated_ms)) } else { Value::Null },
    });
    emit(&serde_json::to_string_pretty(&report).expect("plain json"));
    write_stats(cfg, &s, wall_ms)
}

fn demo(cfg: &RunConfig, mut e: Engine, which: DemoKind) -> Result<(), Failure> {
    let start = Instant::now();
    let (report, stats) = match which {
        DemoKind::Lr => {
            let r = demos::lr_demo(&mut e)?;
            (serde_json::to_value(&r).expect("plain json"), r.stats)
        }
        DemoKind::Nn => {
            let r = demos::nn_demo(&mut e)?;
            (serde_json::to_value(&r).expect("plain json"), r.stats)
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    emit(&serde_json::to_string_pretty(&report).expect("plain json"));
    write_stats(cfg, &stats, wall_ms)
}
