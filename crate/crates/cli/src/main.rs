//! `desclab`: simulate preferential attachment graphs, count descendants of
//! the newest vertex, and check the results against the limit theory.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, CommandFactory, Parser, Subcommand};
use desclab::descendants::TraceDepth;
use desclab::generators::generate;
use desclab::harness::{
    read_results, render_pretty, render_results, run_distribution_experiment,
    run_theory_battery, BatteryScale, ExperimentConfig, OutputFormat, Pipeline, ResultTable,
};
use desclab::randomness::make_stream;
use desclab::theory::Variant;
use desclab::yule::yule_path;

#[derive(Parser)]
#[command(name = "desclab", version, about = "Descendants of the newest vertex in preferential attachment graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the edge list of one random graph.
    Generate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
    },
    /// Simulate X for many replicates and compare with the limit law.
    Descend(Experiment),
    /// Repeat `descend` over a grid of graph sizes.
    Sweep {
        #[command(flatten)]
        experiment: Experiment,
        /// Graph sizes, comma separated (e.g. 1e4,1e5,1e6).
        #[arg(long, value_delimiter = ',', value_parser = parse_count, default_value = "1e4,1e5,1e6")]
        ns: Vec<u64>,
    },
    /// Run the theory-verification battery; exits 1 if any check fails.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Checks to run, by letter or name, comma separated.
        #[arg(long, value_delimiter = ',')]
        suite: Option<Vec<String>>,
        /// Replicate counts: quick or full.
        #[arg(long)]
        scale: Option<BatteryScale>,
    },
    /// Sample the m-ary Yule process observed at one or more values of x.
    Yule {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        m: u32,
        /// Observation points in (0, 1], comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0.1")]
        x: Vec<f64>,
        #[arg(long, value_parser = parse_count, default_value = "1000")]
        reps: u64,
    },
    /// Print a stored result table.
    Report {
        #[command(flatten)]
        common: Common,
        path: PathBuf,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Output format: csv or json.
    #[arg(long)]
    format: Option<OutputFormat>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "DESCLAB_THREADS")]
    threads: Option<usize>,
    /// JSON experiment configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (standard output if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Model {
    /// sequential, polya, selfloop or uniform.
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    n: Option<u64>,
}

#[derive(Args, Clone)]
struct Experiment {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: Model,
    #[arg(long, value_parser = parse_count)]
    reps: Option<u64>,
    /// bfs or recursion.
    #[arg(long)]
    pipeline: Option<Pipeline>,
    /// count, count-with-p or full.
    #[arg(long, value_parser = parse_depth)]
    trace_depth: Option<TraceDepth>,
    /// Times t for the mean curve of Y, comma separated.
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    /// Moment orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    moments: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_count)]
    reference_size: Option<u64>,
    /// Permit m = 1 (trees), which has no n^nu limit law.
    #[arg(long)]
    allow_m1: bool,
}

/// Accepts plain integers and exact scientific notation such as `1e6`.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(64) => Ok(v as u64),
        _ => Err(format!("'{s}' is not a nonnegative integer")),
    }
}

fn parse_depth(s: &str) -> Result<TraceDepth, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown trace depth '{s}' (count, count-with-p, full)"))
}

/// Failures split by exit code.
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<desclab::Error>() {
            Some(desclab::Error::InvalidParameter(msg)) => Failure::Usage(msg.clone()),
            _ => Failure::Runtime(e),
        }
    }
}

impl From<desclab::Error> for Failure {
    fn from(e: desclab::Error) -> Self {
        Failure::from(anyhow::Error::from(e))
    }
}

fn base_config(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.params.master_seed = seed;
    }
    if let Some(threads) = common.threads {
        config.threads = threads;
    }
    if let Some(format) = common.format {
        config.format = format;
    }
    if let Some(out) = &common.out {
        config.output = Some(out.clone());
    }
    Ok(config)
}

fn apply_model(config: &mut ExperimentConfig, model: &Model) {
    let p = &mut config.params;
    if let Some(v) = model.variant {
        p.variant = v;
    }
    if let Some(m) = model.m {
        p.m = m;
    }
    if let Some(rho) = model.rho {
        p.rho = rho;
    }
    if let Some(n) = model.n {
        p.n = n;
    }
}

fn experiment_config(e: &Experiment) -> Result<ExperimentConfig, Failure> {
    let mut config = base_config(&e.common)?;
    apply_model(&mut config, &e.model);
    if let Some(r) = e.reps {
        config.replicates = r;
    }
    if let Some(p) = e.pipeline {
        config.pipeline = p;
    }
    if let Some(d) = e.trace_depth {
        config.trace_depth = d;
    }
    if let Some(t) = &e.t_grid {
        config.t_grid = t.clone();
    }
    if let Some(m) = &e.moments {
        config.moments = m.clone();
    }
    if let Some(s) = e.reference_size {
        config.reference_size = s as usize;
    }
    if config.params.m == 1 && !e.allow_m1 {
        return Err(Failure::Usage(
            "m = 1 has no n^nu limit law (it needs m >= 2); pass --allow-m1 to simulate trees".into(),
        ));
    }
    config.validate()?;
    Ok(config)
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Generate { common, model } => {
            let mut config = base_config(&common)?;
            apply_model(&mut config, &model);
            let p = config.params;
            p.validate()?;
            let mut stream = make_stream(p.master_seed, 0);
            let g = generate(&p, &mut stream)?;
            let text = match config.format {
                OutputFormat::Csv => {
                    let mut buf = Vec::new();
                    g.write_edge_list(&mut buf, p.rho, p.variant, p.master_seed)
                        .map_err(anyhow::Error::from)?;
                    String::from_utf8(buf).map_err(anyhow::Error::from)?
                }
                OutputFormat::Json => {
                    let edges: Vec<[u64; 2]> = (2..=g.n)
                        .flat_map(|k| g.out_edges(k).iter().map(move |&t| [k, t as u64]))
                        .collect();
                    let doc = serde_json::json!({
                        "n": g.n,
                        "m": g.m,
                        "rho": p.rho,
                        "variant": p.variant,
                        "seed": p.master_seed,
                        "edges": edges,
                    });
                    serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)? + "\n"
                }
            };
            emit(config.output.as_deref(), &text)?;
        }
        Command::Descend(e) => {
            let config = experiment_config(&e)?;
            let table = run_distribution_experiment(&config)?;
            emit(config.output.as_deref(), &render_results(&table, config.format)?)?;
        }
        Command::Sweep { experiment, ns } => {
            let mut config = experiment_config(&experiment)?;
            let mut table = ResultTable::default();
            for n in ns {
                config.params.n = n;
                config.validate()?;
                table.rows.extend(run_distribution_experiment(&config)?.rows);
            }
            emit(config.output.as_deref(), &render_results(&table, config.format)?)?;
        }
        Command::Verify { common, suite, scale } => {
            let mut config = base_config(&common)?;
            if let Some(s) = suite {
                config.checks = s;
            }
            if let Some(s) = scale {
                config.scale = s;
            }
            let report = run_theory_battery(&config)?;
            emit(config.output.as_deref(), &render_results(&report, config.format)?)?;
            if !report.all_passed() {
                for row in report.failures() {
                    eprintln!("check failed: {}", row.name);
                }
                return Ok(ExitCode::from(1));
            }
        }
        Command::Yule { common, m, x, reps } => {
            let config = base_config(&common)?;
            let seed = config.params.master_seed;
            let mut records = Vec::new();
            for r in 0..reps {
                let mut stream = make_stream(seed, r);
                for snap in yule_path(m, &x, &mut stream)? {
                    records.push((r, snap));
                }
            }
            let text = match config.format {
                OutputFormat::Csv => {
                    let mut s = String::from("replicate,x,count,scaled\n");
                    for (r, snap) in &records {
                        s += &format!("{r},{},{},{}\n", fmt_float(snap.x), snap.count, fmt_float(snap.scaled));
                    }
                    s
                }
                OutputFormat::Json => {
                    let rows: Vec<_> = records
                        .iter()
                        .map(|(r, snap)| {
                            serde_json::json!({
                                "replicate": r,
                                "x": snap.x,
                                "count": snap.count,
                                "scaled": snap.scaled,
                            })
                        })
                        .collect();
                    serde_json::to_string_pretty(&rows).map_err(anyhow::Error::from)? + "\n"
                }
            };
            emit(config.output.as_deref(), &text)?;
        }
        Command::Report { common, path } => {
            let table = read_results(&path)?;
            let text = match common.format {
                Some(format) => render_results(&table, format)?,
                None => render_pretty(&table),
            };
            emit(common.out.as_deref(), &text)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            eprintln!("{}", Cli::command().render_usage());
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
