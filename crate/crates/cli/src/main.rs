//! `proot`: quoting, figure data, oracle verification and arbitrage replay
//! for constant-power-root pools.
//!
//! Exit codes: 0 success, 1 verification failure, 2 domain or parse error,
//! 3 I/O error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use proot_core::arb_sim::{load_path, run_simulation};
use proot_core::duality_oracle::{run_suite, SuiteConfig};
use proot_core::figures::{figure_rows, write_figure_csv, FigureId, FigureSpec};
use proot_core::fmt::sig12;
use proot_core::pool_engine::{create_pool, AmountKind, Direction};
use proot_core::Error;

#[derive(Parser)]
#[command(
    name = "proot",
    version,
    about = "Constant power root market maker toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quote a trade against a fresh pool and print the quote as JSON.
    Quote(QuoteArgs),
    /// Write long-format figure data as CSV.
    Figure(FigureArgs),
    /// Run the duality/consistency oracle suite.
    Verify(VerifyArgs),
    /// Replay a price path with an arbitrageur and write the loss report.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    BuyX,
    SellX,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    In,
    Out,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct QuoteArgs {
    #[arg(long)]
    x: f64,
    #[arg(long)]
    y: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 0.0)]
    fee: f64,
    #[arg(long, value_enum)]
    side: Side,
    #[arg(long)]
    amount: f64,
    #[arg(long, value_enum)]
    kind: Kind,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct FigureArgs {
    /// curves, il_vs_alpha, marginal_price, price_impact, greeks or relative_price
    #[arg(long)]
    id: FigureId,
    #[arg(long)]
    out: PathBuf,
    /// Entry price for il_vs_alpha.
    #[arg(long)]
    m: Option<f64>,
    /// Comma-separated q values replacing the figure's default list.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q: Option<Vec<f64>>,
    /// Reserve size of the symmetric pool (k for greeks).
    #[arg(long)]
    scale: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = proot_core::tolerances::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    duality_cases: Option<usize>,
    #[arg(long)]
    duality_resolution: Option<usize>,
    #[arg(long)]
    membership_points: Option<usize>,
    #[arg(long)]
    consistency_samples: Option<usize>,
    #[arg(long)]
    sandwich_pairs: Option<usize>,
    /// Require the p = 2 control to pass (it must not); exercises the failure path.
    #[arg(long)]
    negative_control_as_positive: bool,
    /// Print the full report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SimulateArgs {
    #[arg(long)]
    x: f64,
    #[arg(long)]
    y: f64,
    #[arg(long)]
    q: f64,
    /// Price path CSV with header `t,price`.
    #[arg(long)]
    path: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Verification,
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Quote(a) => quote(a),
        Command::Figure(a) => figure(a),
        Command::Verify(a) => verify(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Io(_)) { 3 } else { 2 })
        }
    }
}

/// Rounds every float in a JSON tree to 12 significant digits.
fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r: f64 = sig12(n.as_f64().unwrap_or(f64::NAN))
                .parse()
                .unwrap_or(f64::NAN);
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect())
        }
        other => other,
    }
}

fn print_json(v: serde_json::Result<Value>) -> Result<(), Failure> {
    let v = v.map_err(|e| Error::Io(e.to_string()))?;
    let text =
        serde_json::to_string_pretty(&round_floats(v)).map_err(|e| Error::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn create_file(path: &PathBuf) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())).into())
}

fn quote(a: QuoteArgs) -> Result<(), Failure> {
    let pool = create_pool(a.x, a.y, a.q, a.fee)?;
    let direction = match a.side {
        Side::BuyX => Direction::BuyX,
        Side::SellX => Direction::SellX,
    };
    let kind = match a.kind {
        Kind::In => AmountKind::ExactIn,
        Kind::Out => AmountKind::ExactOut,
    };
    print_json(serde_json::to_value(pool.quote(direction, a.amount, kind)?))
}

fn figure(a: FigureArgs) -> Result<(), Failure> {
    let mut spec = FigureSpec::default_for(a.id);
    if let Some(m) = a.m {
        spec.m = m;
    }
    if let Some(q) = a.q {
        spec.q_values = q;
    }
    if let Some(s) = a.scale {
        spec.scale = s;
    }
    let rows = figure_rows(&spec)?;
    let mut out = create_file(&a.out)?;
    write_figure_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<(), Failure> {
    let d = SuiteConfig::default();
    let config = SuiteConfig {
        seed: a.seed,
        duality_cases: a.duality_cases.unwrap_or(d.duality_cases),
        duality_resolution: a.duality_resolution.unwrap_or(d.duality_resolution),
        membership_points: a.membership_points.unwrap_or(d.membership_points),
        consistency_samples: a.consistency_samples.unwrap_or(d.consistency_samples),
        sandwich_pairs: a.sandwich_pairs.unwrap_or(d.sandwich_pairs),
        negative_control_as_positive: a.negative_control_as_positive,
    };
    let report = run_suite(&config)?;
    if a.json {
        print_json(serde_json::to_value(&report))?;
    } else {
        for c in &report.checks {
            println!(
                "{:<4}  {:<28}  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        println!(
            "{}",
            if report.passed() {
                "all checks passed"
            } else {
                "verification FAILED"
            }
        );
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let pool = create_pool(a.x, a.y, a.q, 0.0)?;
    let source =
        File::open(&a.path).map_err(|e| Error::Io(format!("{}: {e}", a.path.display())))?;
    let path = load_path(std::io::BufReader::new(source))?;
    let report = run_simulation(&pool, &path)?;
    let mut out = create_file(&a.out)?;
    report.write_csv(&mut out)?;
    out.flush()?;
    let last = report.last();
    println!(
        "final il_realized={} il_closed={} abs_gap={}",
        sig12(last.il_realized),
        sig12(last.il_closed),
        sig12(last.abs_gap)
    );
    Ok(())
}
