use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

mod config;
mod output;
mod pipeline;

use config::{MetricChoice, ProfileChoice, RunConfig, SolverChoice};
use pipeline::{SweepAxis, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK};
use worldsheet::dynamics::SourceMutation;
use worldsheet::solver::characteristic::Interpolation;

const OUTPUT_ENV: &str = "WORLDSHEET_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "worldsheet", version, about = "Relativistic strings in a Schwarzschild background")]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the data, integrate and write snapshots and diagnostics.
    Run(Overrides),
    /// Run the identity and convergence suites; one JSON line per suite.
    Verify {
        #[command(flatten)]
        o: Overrides,
        /// Suite to run (repeatable); default all.
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// Also write the report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        list: bool,
    },
    /// Independent runs along one parameter axis with fitted exponents.
    Sweep {
        #[command(flatten)]
        o: Overrides,
        #[arg(long, value_parser = kebab::<SweepAxis>)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Write sampled family data as a data file.
    GenData {
        #[command(flatten)]
        o: Overrides,
        /// Destination; `-` for stdout.
        #[arg(short = 'O', long)]
        output: PathBuf,
    },
}

/// Flags mirror the config file and take precedence over it.
#[derive(Args, Default)]
struct Overrides {
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = kebab::<MetricChoice>)]
    metric: Option<MetricChoice>,
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long)]
    horizon_margin: Option<f64>,
    /// Data file instead of a generated family.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_parser = kebab::<ProfileChoice>)]
    profile: Option<ProfileChoice>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated `x,y,z`.
    #[arg(long, value_delimiter = ',')]
    p_bar: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    swirl: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long, value_parser = kebab::<Interpolation>)]
    interpolation: Option<Interpolation>,
    #[arg(long, value_parser = kebab::<SolverChoice>)]
    solver: Option<SolverChoice>,
    #[arg(long)]
    t_final: Option<f64>,
    /// Start even when the initial speeds fail the admissibility checks.
    #[arg(long)]
    no_enforce: bool,
    #[arg(long)]
    snapshot_every: Option<usize>,
    #[arg(long)]
    no_snapshots: bool,
    /// Output directory (default: config, then $WORLDSHEET_OUTPUT_DIR, then ./worldsheet-output).
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    prefix: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "suite-samples")]
    suite_samples: Option<usize>,
    #[arg(long, value_parser = kebab::<SourceMutation>)]
    mutation: Option<SourceMutation>,
}

fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

impl Overrides {
    /// The merged config and the directory relative data paths resolve against.
    fn resolve(&self) -> Result<(RunConfig, PathBuf)> {
        let (mut c, base) = match &self.config {
            Some(p) => {
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (RunConfig::load(p)?, base)
            }
            None => (RunConfig::default(), PathBuf::from(".")),
        };
        macro_rules! set {
            ($field:expr, $opt:expr) => {
                if let Some(v) = $opt.clone() {
                    $field = v;
                }
            };
        }
        set!(c.metric.kind, self.metric);
        set!(c.metric.mass, self.mass);
        set!(c.metric.horizon_margin, self.horizon_margin);
        if let Some(d) = &self.data {
            c.data.file = Some(std::path::absolute(d)?);
        }
        set!(c.data.profile, self.profile);
        set!(c.data.epsilon, self.epsilon);
        if let Some(p) = &self.p_bar {
            c.data.p_bar = p[..].try_into().map_err(|_| anyhow::anyhow!("--p-bar needs three values, got {}", p.len()))?;
        }
        set!(c.data.samples, self.samples);
        set!(c.data.window, self.window);
        set!(c.data.width, self.width);
        set!(c.data.beta, self.beta);
        set!(c.data.swirl, self.swirl);
        set!(c.grid.nodes, self.nodes);
        set!(c.grid.cfl, self.cfl);
        set!(c.grid.interpolation, self.interpolation);
        set!(c.solver.kind, self.solver);
        set!(c.solver.t_final, self.t_final);
        if self.no_enforce {
            c.solver.enforce_assumptions = false;
        }
        set!(c.output.snapshot_every, self.snapshot_every);
        if self.no_snapshots {
            c.output.write_snapshots = false;
        }
        if let Some(o) = &self.out {
            c.output.dir = Some(std::path::absolute(o)?);
        }
        set!(c.output.prefix, self.prefix);
        set!(c.suites.seed, self.seed);
        set!(c.suites.samples, self.suite_samples);
        if self.mutation.is_some() {
            c.suites.mutation = self.mutation;
        }
        c.validate()?;
        Ok((c, base))
    }
}

fn output_dir(c: &RunConfig, base: &Path) -> PathBuf {
    match &c.output.dir {
        Some(d) if d.is_absolute() => d.clone(),
        Some(d) => base.join(d),
        None => std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| "worldsheet-output".into()),
    }
}

fn execute(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::Run(o) => {
            let (c, base) = o.resolve()?;
            let dir = output_dir(&c, &base);
            let code = pipeline::run(&c, &base, &dir)?;
            println!("exit {code}: diagnostics in {}", dir.display());
            Ok(code)
        }
        Cmd::Verify { o, suites, report, list } => {
            if list {
                worldsheet::verify::SUITES.iter().for_each(|s| println!("{s}"));
                return Ok(EXIT_OK);
            }
            let (mut c, _) = o.resolve()?;
            if !suites.is_empty() {
                c.suites.names = suites;
                c.validate()?;
            }
            let results = pipeline::run_suites(&c.suites.names, &c.suite_config());
            let mut rec = report.as_deref().map(output::Records::create).transpose()?;
            for r in &results {
                println!("{}", serde_json::to_string(r)?);
                if let Some(rec) = rec.as_mut() {
                    rec.emit("suite", r)?;
                }
            }
            if let Some(rec) = rec {
                rec.finish()?;
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            eprintln!("{} suites, {failed} failed", results.len());
            Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE })
        }
        Cmd::Sweep { o, axis, values } => {
            let (c, base) = o.resolve()?;
            let dir = output_dir(&c, &base);
            let (rows, fit) = pipeline::sweep(&c, axis, &values, &base);
            pipeline::write_sweep(&dir, &c.output.prefix, &rows, &fit)?;
            println!("{}", serde_json::to_string(&fit)?);
            Ok(if fit.failed == fit.runs { EXIT_FAILURE } else { EXIT_OK })
        }
        Cmd::GenData { o, output } => {
            let (c, _) = o.resolve()?;
            let data = c.data.family().sample(c.data.samples)?;
            if output.as_os_str() == "-" {
                print!("{}", data.to_text());
            } else {
                data.write_to(&output).with_context(|| format!("writing {}", output.display()))?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let (kind, code) = pipeline::classify(&e);
            let code = if kind == "error" { EXIT_CONFIG } else { code };
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
