//! Batch experiments: strategy and period grids, replicated runs with
//! shifted first messages, parallel execution and output files.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run, Config, Policy, RunOutput, Scenario, Schedule};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, relief_ratio, write_messages_csv, write_series_csv};
use crate::strategies::Strategy;
use crate::trace::{detect_format, generate_rwp, load_trace, parse_trace, RwpParams, Trace, TraceKind};
use crate::Aggregate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TraceSource {
    /// Trace file; the format is detected when `kind` is `None`.
    File { path: PathBuf, kind: Option<TraceKind> },
    Rwp(RwpParams),
}

impl TraceSource {
    pub fn load(&self) -> Result<Trace> {
        match self {
            TraceSource::File { path, kind: Some(kind) } => load_trace(path, *kind),
            TraceSource::File { path, kind: None } => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                parse_trace(&text, detect_format(&text))
            }
            TraceSource::Rwp(p) => generate_rwp(p),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub source: TraceSource,
    /// Contact range for position traces, metres.
    pub range: f64,
    pub grid: Vec<Strategy>,
    /// Baseline run alongside the grid; enables relief ratios.
    pub baseline: Option<Policy>,
    pub periods: Vec<f64>,
    pub runs: usize,
    pub base_seed: u64,
    /// Shift the first message by `T/10` per run; otherwise every run
    /// starts at `first_send` and only the seed changes.
    pub shift: bool,
    pub first_send: f64,
    /// Messages per run; by default as many as fit in the trace.
    pub messages: Option<usize>,
    /// Everything except `period` and `seed`, which come from the grid.
    pub config: Config,
    pub jobs: usize,
    pub out: PathBuf,
}

/// Configuration with every default; periods of 60 s and 600 s are the
/// usual presets.
pub fn defaults() -> Config {
    Config::default()
}

pub const PERIOD_PRESETS: [f64; 2] = [60.0, 600.0];

/// One engine invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub policy: Policy,
    pub label: String,
    pub run: usize,
    pub config: Config,
    pub schedule: Schedule,
}

impl RunPlan {
    pub fn dir(&self, out: &Path) -> PathBuf {
        out.join(&self.label)
            .join(format!("T{}", self.config.period))
            .join(format!("run{}", self.run))
    }
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.periods.is_empty() {
            return Err(Error::Config("no period given".into()));
        }
        if self.grid.is_empty() && self.baseline.is_none() {
            return Err(Error::Config("nothing to run".into()));
        }
        if matches!(self.baseline, Some(Policy::PushAndTrack(_))) {
            return Err(Error::Config("baseline must be infra-only or oracle".into()));
        }
        if !(self.range > 0.0) {
            return Err(Error::Config("range must be positive".into()));
        }
        for &period in &self.periods {
            Config {
                period,
                ..self.config.clone()
            }
            .validate()?;
        }
        Ok(())
    }

    fn policies(&self) -> Vec<Policy> {
        let mut p: Vec<Policy> = self.grid.iter().map(|s| Policy::PushAndTrack(*s)).collect();
        p.extend(self.baseline);
        p
    }
}

/// Expands the grid into engine invocations for a trace of `duration`
/// seconds. Run `r` uses seed `base_seed + r` and, in shift mode, first
/// message at `first_send + r * T / 10`.
pub fn plan_runs(exp: &Experiment, duration: f64) -> Vec<RunPlan> {
    let mut plans = Vec::new();
    for policy in exp.policies() {
        for &period in &exp.periods {
            for r in 0..exp.runs {
                let first_send = if exp.shift {
                    exp.first_send + r as f64 * period / 10.0
                } else {
                    exp.first_send
                };
                let schedule = match exp.messages {
                    Some(n) => Schedule {
                        first_send,
                        n_messages: n,
                    },
                    None => Schedule::fitting(first_send, period, duration),
                };
                plans.push(RunPlan {
                    policy,
                    label: policy.label(),
                    run: r,
                    config: Config {
                        period,
                        seed: exp.base_seed + r as u64,
                        ..exp.config.clone()
                    },
                    schedule,
                });
            }
        }
    }
    plans
}

/// Aggregates over runs for one (policy, period) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub policy: String,
    pub period: f64,
    pub runs: usize,
    pub messages: usize,
    /// Infrastructure bytes (down and up) per message.
    pub infra_per_message: Option<Aggregate>,
    pub adhoc_per_message: Option<Aggregate>,
    pub copies_per_message: Option<Aggregate>,
    pub panic_per_message: Option<Aggregate>,
    /// Delivered over eligible, pooled over the run's messages.
    pub delivery_ratio: Option<Aggregate>,
    pub relief_ratio: Option<Aggregate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub entries: Vec<SummaryEntry>,
}

/// Runs all plans, writes per-run files and `summary.json` under
/// `exp.out`, and returns the summary.
pub fn run_experiment(exp: &Experiment) -> Result<Summary> {
    exp.validate()?;
    let trace = exp.source.load()?;
    let scenario = Scenario::from_trace(&trace, exp.range)?;
    let plans = plan_runs(exp, scenario.duration());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(exp.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outputs: Vec<RunOutput> = pool.install(|| {
        plans
            .par_iter()
            .map(|p| run(&p.config, &scenario, p.policy, p.schedule))
            .collect::<Result<Vec<_>>>()
    })?;

    for (plan, output) in plans.iter().zip(&outputs) {
        write_run(&exp.out, plan, output, exp)?;
    }
    let summary = summarize(exp, &plans, &outputs)?;
    fs::create_dir_all(&exp.out).map_err(|e| Error::io(&exp.out, e))?;
    let path = exp.out.join("summary.json");
    let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &summary)?;
    Ok(summary)
}

#[derive(Serialize)]
struct RunManifest<'a> {
    policy: &'a str,
    run: usize,
    source: &'a TraceSource,
    range: f64,
    schedule: Schedule,
    config: &'a Config,
}

fn write_run(out: &Path, plan: &RunPlan, output: &RunOutput, exp: &Experiment) -> Result<()> {
    let dir = plan.dir(out);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let create = |name: &str| {
        let p = dir.join(name);
        File::create(&p).map(BufWriter::new).map_err(|e| Error::io(&p, e))
    };
    write_messages_csv(&output.records, &output.ledger.per_message, create("messages.csv")?)?;
    write_series_csv(plan.run, &output.series, create("series.csv")?)?;
    let manifest = RunManifest {
        policy: &plan.label,
        run: plan.run,
        source: &exp.source,
        range: exp.range,
        schedule: plan.schedule,
        config: &plan.config,
    };
    serde_json::to_writer_pretty(create("config.json")?, &manifest)?;
    Ok(())
}

fn summarize(exp: &Experiment, plans: &[RunPlan], outputs: &[RunOutput]) -> Result<Summary> {
    let mut entries = Vec::new();
    let cell = |label: &str, period: f64| -> Vec<usize> {
        plans
            .iter()
            .enumerate()
            .filter(|(_, p)| p.label == label && p.config.period == period)
            .map(|(i, _)| i)
            .collect()
    };
    for policy in exp.policies() {
        let label = policy.label();
        for &period in &exp.periods {
            let idx = cell(&label, period);
            let base = exp.baseline.map(|b| cell(&b.label(), period));
            let per_msg = |f: &dyn Fn(&RunOutput) -> f64| -> Vec<f64> {
                idx.iter()
                    .filter(|&&i| !outputs[i].records.is_empty())
                    .map(|&i| f(&outputs[i]) / outputs[i].records.len() as f64)
                    .collect()
            };
            let infra = per_msg(&|o| o.ledger.per_message.iter().map(|l| l.infra_total()).sum::<u64>() as f64);
            let adhoc = per_msg(&|o| o.ledger.per_message.iter().map(|l| l.adhoc_total()).sum::<u64>() as f64);
            let copies = per_msg(&|o| o.records.iter().map(|r| r.copies_pushed).sum::<usize>() as f64);
            let panic = per_msg(&|o| o.records.iter().map(|r| r.panic_pushes).sum::<usize>() as f64);
            let delivery: Vec<f64> = idx
                .iter()
                .map(|&i| {
                    let (d, e) = outputs[i]
                        .records
                        .iter()
                        .fold((0, 0), |(d, e), r| (d + r.delivered_on_time, e + r.eligible));
                    if e == 0 {
                        1.0
                    } else {
                        d as f64 / e as f64
                    }
                })
                .collect();
            let relief = match &base {
                Some(b) if exp.baseline != Some(policy) => {
                    let mut v = Vec::new();
                    for (&i, &j) in idx.iter().zip(b) {
                        v.push(relief_ratio(&outputs[i].ledger.total(), &outputs[j].ledger.total())?);
                    }
                    aggregate(&v)
                }
                _ => None,
            };
            entries.push(SummaryEntry {
                policy: label.clone(),
                period,
                runs: idx.len(),
                messages: idx.iter().map(|&i| outputs[i].records.len()).sum(),
                infra_per_message: aggregate(&infra),
                adhoc_per_message: aggregate(&adhoc),
                copies_per_message: aggregate(&copies),
                panic_per_message: aggregate(&panic),
                delivery_ratio: aggregate(&delivery),
                relief_ratio: relief,
            });
        }
    }
    Ok(Summary { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::{WhenKind, WhomStrategy};

    fn exp(runs: usize, shift: bool) -> Experiment {
        Experiment {
            source: TraceSource::Rwp(RwpParams::default()),
            range: 100.0,
            grid: vec![Strategy::new(WhenKind::Quadratic, WhomStrategy::Random, false)],
            baseline: None,
            periods: vec![60.0],
            runs,
            base_seed: 7,
            shift,
            first_send: 0.0,
            messages: None,
            config: defaults(),
            jobs: 1,
            out: PathBuf::from("out"),
        }
    }

    #[test]
    fn shifted_first_sends() {
        let plans = plan_runs(&exp(10, true), 3600.0);
        let sends: Vec<f64> = plans.iter().map(|p| p.schedule.first_send).collect();
        let expect: Vec<f64> = (0..10).map(|r| r as f64 * 6.0).collect();
        assert_eq!(sends, expect);
        assert_eq!(plans[3].config.seed, 10);
    }

    #[test]
    fn single_run_unshifted() {
        let plans = plan_runs(&exp(1, true), 3600.0);
        assert_eq!(plans.len(), 1);
        assert_eq!(plans[0].schedule.first_send, 0.0);
        assert_eq!(plans[0].schedule.n_messages, 60);
    }

    #[test]
    fn fixed_mode_varies_only_seed() {
        let plans = plan_runs(&exp(10, false), 3600.0);
        assert!(plans.iter().all(|p| p.schedule.first_send == 0.0));
        let seeds: std::collections::BTreeSet<u64> = plans.iter().map(|p| p.config.seed).collect();
        assert_eq!(seeds.len(), 10);
    }

    #[test]
    fn defaults_match_presets() {
        let c = defaults();
        assert_eq!(c.content_size, 1 << 20);
        assert_eq!(c.infra_down_rate, 100 << 10);
        assert_eq!(c.infra_up_rate, 10 << 10);
        assert_eq!(c.ctrl_size, 256);
        assert_eq!(c.tick, 0.01);
        assert_eq!(c.report_interval, 60.0);
        assert!(PERIOD_PRESETS.contains(&c.period));
    }
}
