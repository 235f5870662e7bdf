use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mimo_wiretap::channel::{sample_channels, KroneckerParams};
use mimo_wiretap::harness::{
    run_convergence, run_sweep, write_sweep, ConvergenceSpec, OutputFormat, SweepAxis, SweepSpec,
};
use mimo_wiretap::plot::{emit_plot, PlotStyle};
use mimo_wiretap::{Algorithm, ChannelPair, PowerBudget, SolverConfig};

/// Secrecy capacity experiments for the Gaussian MIMO wiretap channel.
///
/// Without a subcommand, writes convergence traces for one seeded channel,
/// or a Monte-Carlo summary when --sweep is given.
#[derive(Parser, Debug)]
#[command(name = "wiretap", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Overlay harness CSVs in one SVG line plot.
    Plot(PlotArgs),
    /// Draw one channel pair and print it as JSON.
    Channel(ChannelArgs),
    /// Solve a channel pair read from a JSON file.
    Solve(SolveArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Transmit antennas (list allowed in sweeps).
    #[arg(long, value_delimiter = ',', default_value = "4")]
    nt: Vec<usize>,
    /// Receive antennas at the legitimate receiver [default: 3; 2,4,6,8 when sweeping nr].
    #[arg(long, value_delimiter = ',')]
    nr: Option<Vec<usize>>,
    /// Eavesdropper antennas [default: 4; 2,4,8 when sweeping ne].
    #[arg(long, value_delimiter = ',')]
    ne: Option<Vec<usize>>,
    /// SNR values in dB [default: 10; 0,5,10,15,20 when sweeping snr].
    #[arg(long = "snr-db", value_delimiter = ',', allow_negative_numbers = true)]
    snr_db: Option<Vec<f64>>,
    /// adca, pbra, both or dca.
    #[arg(long, default_value = "both", value_parser = parse_algos)]
    algo: AlgoSet,
    /// Monitor depth of the accelerated DC method; 0 gives plain DCA.
    #[arg(long, default_value_t = 5)]
    q: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte-Carlo sweep axis: nr, ne or snr.
    #[arg(long, value_parser = |s: &str| s.parse::<SweepAxis>())]
    sweep: Option<SweepAxis>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// csv or json.
    #[arg(long, default_value = "csv", value_parser = |s: &str| s.parse::<OutputFormat>())]
    format: OutputFormat,
    /// Write zeros in the timing columns so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// Transmit correlation magnitude.
    #[arg(long, default_value_t = 0.9)]
    corr: f64,
    /// Eavesdropper channel strength.
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(required = true)]
    csv: Vec<PathBuf>,
    #[arg(long, default_value = "plot.svg")]
    out: PathBuf,
    /// Column plotted against `iter`.
    #[arg(long, default_value = "objective")]
    column: String,
    #[arg(long, default_value = "Convergence")]
    title: String,
}

#[derive(Args, Debug)]
struct ChannelArgs {
    #[arg(long, default_value_t = 4)]
    nt: usize,
    #[arg(long, default_value_t = 3)]
    nr: usize,
    #[arg(long, default_value_t = 4)]
    ne: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.9)]
    corr: f64,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Channel JSON as printed by the `channel` subcommand.
    #[arg(long)]
    channel: PathBuf,
    #[arg(long = "snr-db", default_value_t = 10.0, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, default_value = "both", value_parser = parse_algos)]
    algo: AlgoSet,
    #[arg(long, default_value_t = 5)]
    q: usize,
}

#[derive(Debug, Clone)]
struct AlgoSet(Vec<Algorithm>);

fn parse_algos(s: &str) -> Result<AlgoSet, String> {
    match s {
        "both" => Ok(AlgoSet(vec![Algorithm::Adca, Algorithm::Pbra])),
        other => other.parse::<Algorithm>().map(|a| AlgoSet(vec![a])).map_err(|e| e.to_string()),
    }
}

fn kronecker(corr: f64, gamma: f64) -> KroneckerParams {
    KroneckerParams { r: corr, gamma, ..KroneckerParams::default() }
}

fn single<T: Copy + std::fmt::Debug>(name: &str, v: &[T]) -> Result<T> {
    match v {
        [x] => Ok(*x),
        _ => bail!("--{name} takes a single value outside sweeps, got {v:?}"),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let params = kronecker(args.corr, args.gamma);
    params.validate()?;
    let solver = SolverConfig { q_memory: args.q, ..SolverConfig::default() };
    let algorithms = args.algo.0;

    if let Some(axis) = args.sweep {
        let spec = SweepSpec {
            axis,
            nt: args.nt,
            nr: args.nr.unwrap_or_else(|| if axis == SweepAxis::Nr { vec![2, 4, 6, 8] } else { vec![3] }),
            ne: args.ne.unwrap_or_else(|| if axis == SweepAxis::Ne { vec![2, 4, 8] } else { vec![4] }),
            snr_db: args.snr_db.unwrap_or_else(|| {
                if axis == SweepAxis::Snr { vec![0.0, 5.0, 10.0, 15.0, 20.0] } else { vec![10.0] }
            }),
            algorithms,
            trials: args.trials,
            seed: args.seed,
            params,
            solver,
        };
        let rows = run_sweep(&spec)?;
        let path = write_sweep(&rows, axis, &args.out, args.format, !args.no_timing)?;
        println!("{}", path.display());
    } else {
        let spec = ConvergenceSpec {
            nt: single("nt", &args.nt)?,
            nr: single("nr", args.nr.as_deref().unwrap_or(&[3]))?,
            ne: single("ne", args.ne.as_deref().unwrap_or(&[4]))?,
            snr_db: args.snr_db.unwrap_or_else(|| vec![10.0]),
            algorithms,
            seed: args.seed,
            params,
            solver,
            out: args.out,
            format: args.format,
            timing: !args.no_timing,
        };
        for path in run_convergence(&spec)? {
            println!("{}", path.display());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveReport {
    algo: &'static str,
    snr_db: f64,
    secrecy_rate_nats: f64,
    secrecy_rate_bits: f64,
    minimax_value: Option<f64>,
    iterations: usize,
    wall_ms: f64,
    x_opt_re: Vec<f64>,
    x_opt_im: Vec<f64>,
}

fn solve(args: SolveArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.channel)
        .with_context(|| format!("reading {}", args.channel.display()))?;
    let ch: ChannelPair = serde_json::from_str(&text).context("parsing channel JSON")?;
    let p0 = PowerBudget::from_snr_db(args.snr_db)?;
    let cfg = SolverConfig { q_memory: args.q, ..SolverConfig::default() };
    let mut reports = Vec::new();
    for alg in args.algo.0 {
        let r = alg.solve(&ch, p0, &cfg)?;
        // row-major, matching the channel schema
        let x = r.x_opt.matrix().transpose();
        reports.push(SolveReport {
            algo: alg.name(),
            snr_db: args.snr_db,
            secrecy_rate_nats: r.secrecy_rate,
            secrecy_rate_bits: r.secrecy_rate / std::f64::consts::LN_2,
            minimax_value: r.minimax_value,
            iterations: r.iterations,
            wall_ms: r.wall_time * 1e3,
            x_opt_re: x.iter().map(|z| z.re).collect(),
            x_opt_im: x.iter().map(|z| z.im).collect(),
        });
    }
    println!("{}", serde_json::to_string_pretty(&reports)?);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        None => run(cli.run),
        Some(Command::Plot(a)) => {
            let style = PlotStyle { title: a.title, y_label: a.column.clone(), y_column: a.column, ..PlotStyle::default() };
            emit_plot(&a.csv, &style, &a.out)?;
            println!("{}", a.out.display());
            Ok(())
        }
        Some(Command::Channel(a)) => {
            let ch = sample_channels((a.nt, a.nr, a.ne), &kronecker(a.corr, a.gamma), a.seed)?;
            println!("{}", serde_json::to_string_pretty(&ch)?);
            Ok(())
        }
        Some(Command::Solve(a)) => solve(a),
    }
}
