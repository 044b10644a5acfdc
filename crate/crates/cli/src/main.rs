use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pushtrack::engine::{Config, Policy, DEFAULT_RANGE};
use pushtrack::experiment::{run_experiment, Experiment, TraceSource};
use pushtrack::strategies::{Strategy, WhenKind, WhomStrategy};
use pushtrack::trace::{derive_contacts, trace_stats, write_trace, RwpParams, TraceKind};

#[derive(Parser)]
#[command(name = "pushtrack", version, about = "Push-and-track content dissemination simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a strategy grid and write per-run CSVs plus summary.json.
    Run(RunArgs),
    /// Generate a random-waypoint position trace.
    Generate {
        #[arg(long)]
        rwp: String,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a position trace to a contact trace.
    Contacts {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = DEFAULT_RANGE)]
        range: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contact/transit CCDFs and connected-component counts.
    Stats {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = DEFAULT_RANGE)]
        range: f64,
        /// CCDF sample points in seconds.
        #[arg(long, value_delimiter = ',', default_value = "1,10,30,60,120,300,600")]
        points: Vec<f64>,
        /// Component count sampling interval in seconds.
        #[arg(long, default_value_t = 60.0)]
        interval: f64,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Trace file (position or contact format, auto-detected).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Random-waypoint parameters, e.g. `bounds=1000x1000,rate=1,seed=3`.
    #[arg(long)]
    rwp: Option<String>,
}

impl SourceArgs {
    fn source(&self, format: Option<TraceKind>) -> Result<TraceSource> {
        match (&self.trace, &self.rwp) {
            (Some(path), None) => Ok(TraceSource::File {
                path: path.clone(),
                kind: format,
            }),
            (None, Some(p)) => Ok(TraceSource::Rwp(RwpParams::parse(p)?)),
            _ => bail!("give exactly one of --trace or --rwp"),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Force the trace format instead of detecting it.
    #[arg(long)]
    format: Option<TraceKind>,
    /// When-strategies (comma separated, or `all`); `infra-only` and
    /// `oracle` select a baseline policy instead.
    #[arg(long, value_delimiter = ',', default_value = "Quadratic")]
    when: Vec<String>,
    /// Whom-strategies (comma separated, or `all`).
    #[arg(long, value_delimiter = ',', default_value = "Random")]
    whom: Vec<String>,
    /// Enable freezing.
    #[arg(long)]
    freeze: bool,
    /// Message periods in seconds.
    #[arg(long, value_delimiter = ',', default_value = "60")]
    period: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shift the first message by T/10 per run (default).
    #[arg(long, overrides_with = "no_shift")]
    shift: bool,
    /// Same first message for every run; only the seed changes.
    #[arg(long)]
    no_shift: bool,
    /// First message time in seconds.
    #[arg(long, default_value_t = 0.0)]
    first_send: f64,
    /// Messages per run; default fills the trace.
    #[arg(long)]
    messages: Option<usize>,
    /// Ad-hoc bitrate, bytes/s.
    #[arg(long)]
    adhoc_rate: Option<u64>,
    /// Infrastructure downlink bitrate, bytes/s.
    #[arg(long)]
    infra_down: Option<u64>,
    /// Infrastructure uplink bitrate, bytes/s.
    #[arg(long)]
    infra_up: Option<u64>,
    /// Content size, bytes.
    #[arg(long)]
    msg_size: Option<u64>,
    /// Control message size, bytes.
    #[arg(long)]
    ctrl_size: Option<u64>,
    /// Controller tick, seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Position/neighbour report interval, seconds.
    #[arg(long)]
    report_interval: Option<f64>,
    /// Contact range for position traces, metres.
    #[arg(long, default_value_t = DEFAULT_RANGE)]
    range: f64,
    /// Parallel runs; defaults to the number of CPUs.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Baseline run next to the grid, for relief ratios.
    #[arg(long, value_parser = ["infra-only", "oracle"])]
    baseline: Option<String>,
}

fn parse_baseline(name: &str) -> Option<Policy> {
    match name {
        "infra-only" => Some(Policy::InfraOnly),
        "oracle" => Some(Policy::Oracle),
        _ => None,
    }
}

fn expand<T: std::str::FromStr<Err = pushtrack::Error> + Copy>(names: &[String], all: &[T]) -> Result<Vec<T>> {
    if names.iter().any(|n| n == "all") {
        return Ok(all.to_vec());
    }
    names
        .iter()
        .map(|n| n.parse::<T>().with_context(|| format!("unknown strategy `{n}`")))
        .collect()
}

impl RunArgs {
    fn experiment(&self) -> Result<Experiment> {
        let mut baseline = self.baseline.as_deref().and_then(parse_baseline);
        let mut when_names = Vec::new();
        for w in &self.when {
            match parse_baseline(w) {
                Some(b) => {
                    if baseline.is_some_and(|x| x != b) {
                        bail!("only one baseline policy per experiment");
                    }
                    baseline = Some(b);
                }
                None => when_names.push(w.clone()),
            }
        }
        let whens = expand(&when_names, &WhenKind::ALL)?;
        let whoms = expand(&self.whom, &WhomStrategy::ALL)?;
        let grid = whens
            .iter()
            .flat_map(|&w| whoms.iter().map(move |&m| Strategy::new(w, m, self.freeze)))
            .collect();

        let d = Config::default();
        let config = Config {
            adhoc_rate: self.adhoc_rate.unwrap_or(d.adhoc_rate),
            infra_down_rate: self.infra_down.unwrap_or(d.infra_down_rate),
            infra_up_rate: self.infra_up.unwrap_or(d.infra_up_rate),
            content_size: self.msg_size.unwrap_or(d.content_size),
            ctrl_size: self.ctrl_size.unwrap_or(d.ctrl_size),
            tick: self.dt.unwrap_or(d.tick),
            report_interval: self.report_interval.unwrap_or(d.report_interval),
            ..d
        };
        let jobs = self
            .jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        let exp = Experiment {
            source: self.source.source(self.format)?,
            range: self.range,
            grid,
            baseline,
            periods: self.period.clone(),
            runs: self.runs,
            base_seed: self.seed,
            shift: !self.no_shift,
            first_send: self.first_send,
            messages: self.messages,
            config,
            jobs,
            out: self.out.clone(),
        };
        exp.validate()?;
        Ok(exp)
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let exp = args.experiment()?;
            let summary = run_experiment(&exp)?;
            for e in &summary.entries {
                let infra = e.infra_per_message.map_or(f64::NAN, |a| a.mean);
                let delivery = e.delivery_ratio.map_or(f64::NAN, |a| a.mean);
                print!(
                    "{} T={} runs={} infra/msg={:.0} B delivery={:.4}",
                    e.policy, e.period, e.runs, infra, delivery
                );
                if let Some(r) = e.relief_ratio {
                    print!(" relief={:.4}", r.mean);
                }
                println!();
            }
            eprintln!("wrote {}", exp.out.join("summary.json").display());
        }
        Command::Generate { rwp, out } => {
            let trace = pushtrack::trace::generate_rwp(&RwpParams::parse(&rwp)?)?;
            let mut w = output(&out)?;
            write_trace(&trace, &mut w)?;
            w.flush()?;
        }
        Command::Contacts { source, range, out } => {
            let trace = source.source(None)?.load()?;
            let contacts = derive_contacts(&trace, range)?;
            let mut w = output(&out)?;
            write_trace(&contacts, &mut w)?;
            w.flush()?;
        }
        Command::Stats {
            source,
            range,
            points,
            interval,
        } => {
            let trace = source.source(None)?.load()?;
            let trace = match trace.kind() {
                TraceKind::Position => derive_contacts(&trace, range)?,
                TraceKind::Contact => trace,
            };
            let stats = trace_stats(&trace, &points, interval);
            let mut w = io::stdout().lock();
            writeln!(w, "# contact duration ccdf")?;
            for (t, p) in &stats.contact_ccdf {
                writeln!(w, "{t},{p}")?;
            }
            writeln!(w, "# transit time ccdf")?;
            for (t, p) in &stats.transit_ccdf {
                writeln!(w, "{t},{p}")?;
            }
            writeln!(w, "# connected components")?;
            for (t, c) in &stats.components {
                writeln!(w, "{t},{c}")?;
            }
        }
    }
    Ok(())
}
