//! Command-line runner for the similarity experiments.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use vos_core::experiment::{
    run_experiment, run_timing, sweep_argmin, timing_csv, ExperimentConfig, Input, Report, CSV_HEADER,
};
use vos_core::stream::write_stream_dump;
use vos_core::{CommunityGraph, DynConfig, MethodKind};

#[derive(Parser, Debug)]
#[command(
    name = "vos",
    version,
    about = "User similarity over fully dynamic bipartite graph streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every method over the stream and write per-checkpoint metrics as CSV (default).
    Run,
    /// Measure mean update time per stream element across sketch sizes.
    Timing {
        /// Sketch sizes to time, used directly as k for every method.
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000")]
        k_list: Vec<usize>,
    },
    /// Run the experiment for each k in a grid and report the best k per method.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        k_grid: Vec<usize>,
    },
    /// Write the synthesized stream as `t user item +|-` lines.
    DumpStream,
}

#[derive(Args, Debug)]
struct Common {
    /// Edge list with one `user item` pair per line.
    #[arg(long, global = true, conflicts_with_all = ["synthetic", "communities"])]
    input: Option<PathBuf>,

    /// Zipf synthetic graph.
    #[arg(long, global = true, num_args = 3, value_names = ["USERS", "ITEMS", "EDGES"], conflicts_with = "communities")]
    synthetic: Option<Vec<u64>>,

    /// Community graph: communities, members, pool, degree, background users, background degree.
    #[arg(
        long,
        global = true,
        num_args = 6,
        value_names = ["C", "MEMBERS", "POOL", "DEGREE", "BG_USERS", "BG_DEGREE"]
    )]
    communities: Option<Vec<usize>>,

    /// Comma-separated subset of vos, minhash, oph, rp.
    #[arg(long, global = true, value_delimiter = ',', default_value = "vos,minhash,oph,rp")]
    methods: Vec<MethodKind>,

    /// Baseline register count.
    #[arg(long, global = true, default_value_t = 100)]
    k: usize,

    /// VOS memory multiplier over one baseline sketch.
    #[arg(long, global = true, default_value_t = 2)]
    lambda: usize,

    /// VOS odd-sketch length, overriding the lambda rule.
    #[arg(long, global = true)]
    k_vos: Option<usize>,

    /// VOS shared array size in bits.
    #[arg(long, global = true)]
    m_bits: Option<u64>,

    /// Probability of a deletion event after each insertion.
    #[arg(long, global = true, default_value_t = DynConfig::default().q)]
    q: f64,

    /// Probability that an event deletes each live edge.
    #[arg(long, global = true, default_value_t = DynConfig::default().d)]
    d: f64,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Also fire a deletion event after this many insertions (comma-separated).
    #[arg(long, global = true, value_delimiter = ',')]
    delete_after: Vec<usize>,

    /// Re-insert each deleted edge once at the end of the base stream.
    #[arg(long, global = true)]
    recycle: bool,

    /// Elements between checkpoints [default: a tenth of the stream].
    #[arg(long, global = true)]
    checkpoint_every: Option<usize>,

    /// Number of top-degree users to draw pairs from.
    #[arg(long, global = true, default_value_t = 100)]
    top_n: usize,

    /// Output file [default: stdout].
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Skip per-update timing so the CSV is reproducible byte for byte.
    #[arg(long, global = true)]
    no_timing: bool,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let defaults = ExperimentConfig::default();
        let input = if let Some(path) = &self.input {
            Input::EdgeList(path.clone())
        } else if let Some(s) = &self.synthetic {
            Input::Synthetic {
                users: s[0],
                items: s[1],
                edges: s[2] as usize,
            }
        } else if let Some(c) = &self.communities {
            Input::Communities(CommunityGraph {
                communities: c[0],
                members: c[1],
                pool: c[2],
                degree: c[3],
                background_users: c[4],
                background_degree: c[5],
            })
        } else {
            defaults.input.clone()
        };
        let mut methods = Vec::new();
        for &m in &self.methods {
            if !methods.contains(&m) {
                methods.push(m);
            }
        }
        let cfg = ExperimentConfig {
            input,
            methods,
            k: self.k,
            lambda: self.lambda,
            k_vos: self.k_vos,
            m_bits: self.m_bits,
            q: self.q,
            d: self.d,
            seed: self.seed,
            recycle: self.recycle,
            delete_after: self.delete_after.clone(),
            checkpoint_every: self.checkpoint_every,
            top_n: self.top_n,
            record_timing: !self.no_timing,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn log_summary(report: &Report) {
    log::info!(
        "{} elements, {} users, {} pairs tracked, {} counter bits",
        report.stream_len,
        report.users,
        report.pairs,
        report.counter_bits
    );
}

fn run(common: &Common) -> Result<()> {
    let report = run_experiment(&common.config()?)?;
    log_summary(&report);
    let mut out = common.output()?;
    report.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn timing(common: &Common, k_list: &[usize]) -> Result<()> {
    let rows = run_timing(&common.config()?, k_list)?;
    let mut out = common.output()?;
    out.write_all(timing_csv(&rows).as_bytes())?;
    out.flush()?;
    Ok(())
}

fn sweep(common: &Common, k_grid: &[usize]) -> Result<()> {
    let base = common.config()?;
    let reports = k_grid
        .par_iter()
        .map(|&k| {
            let cfg = ExperimentConfig { k, ..base.clone() };
            run_experiment(&cfg).map(|r| (k, r)).with_context(|| format!("k = {k}"))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = common.output()?;
    writeln!(out, "{CSV_HEADER}")?;
    for (_, report) in &reports {
        let csv = report.to_csv();
        for line in csv.lines().skip(1) {
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;

    let show = |best: Option<(usize, f64)>| match best {
        Some((k, v)) => format!("k={k} ({v:.6})"),
        None => "undefined".to_string(),
    };
    for best in sweep_argmin(&reports) {
        eprintln!(
            "{}: best AAPE at {}, best ARMSE at {}",
            best.method,
            show(best.best_k_aape),
            show(best.best_k_armse)
        );
    }
    Ok(())
}

fn dump_stream(common: &Common) -> Result<()> {
    let stream = common.config()?.build_stream()?;
    let mut out = common.output()?;
    write_stream_dump(&mut out, &stream)?;
    out.flush()?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        None | Some(Command::Run) => run(&cli.common),
        Some(Command::Timing { k_list }) => {
            if k_list.is_empty() {
                bail!("--k-list is empty");
            }
            timing(&cli.common, k_list)
        }
        Some(Command::Sweep { k_grid }) => sweep(&cli.common, k_grid),
        Some(Command::DumpStream) => dump_stream(&cli.common),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
