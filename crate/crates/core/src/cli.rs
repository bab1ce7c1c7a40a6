//! The `streamnet` command line.
//!
//! Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 numeric
//! fault, 4 invariant violation.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{
    classify_with, phase_trajectory, retention_curve, run_suites, tracking_experiment, AttractorVerdict, PhaseTrajectory,
    Suite,
};
use crate::config::ExperimentConfig;
use crate::error::Error;
use crate::executor::{
    load_snapshot, measure_constant_cost, run_stream_with, save_snapshot, NetworkState, RunOptions, Snapshot, StateMode,
};
use crate::streams::{open_record_source, make_signal_source, CsvSink, JsonlSink, OutputFormat, RecordInput, RecordSink};
use crate::tensor::Vector;

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_INVARIANT: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "streamnet", version, about = "Stream-native neural execution engine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// TOML experiment configuration; defaults apply to anything missing.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Input records for `run`, one vector per line; `-` reads stdin.
    #[arg(long, global = true, value_name = "FILE|-")]
    pub input: Option<String>,

    /// Records for `run` (`-` is stdout); series directory for `phase`, `retention` and `track`.
    #[arg(long, global = true, value_name = "FILE|-")]
    pub output: Option<String>,

    /// Record format for `run`; report format for `bench`.
    #[arg(long, global = true, value_name = "csv|jsonl")]
    pub format: Option<OutputFormat>,

    /// Replaces the configured seed and every signal seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Overrides the step count of the chosen command.
    #[arg(long, global = true, value_name = "N")]
    pub steps: Option<u64>,

    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stream input records through the network once.
    Run {
        /// Use the memoryless baseline.
        #[arg(long)]
        stateless: bool,
        /// Start from a saved snapshot.
        #[arg(long, value_name = "FILE")]
        resume: Option<PathBuf>,
        /// Save the final state.
        #[arg(long, value_name = "FILE")]
        snapshot: Option<PathBuf>,
    },
    /// Check the contraction, boundedness and stateless-collapse invariants.
    Verify {
        #[arg(value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
    },
    /// Phase-space trajectories with and without state.
    Phase,
    /// Free decay of the state for each configured lambda.
    Retention,
    /// Noisy-sinusoid tracking error with and without state.
    Track,
    /// Per-step cost early and late in a long stream.
    Bench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Contraction,
    Bounds,
    Collapse,
    All,
}

impl SuiteArg {
    pub fn suites(self) -> Vec<Suite> {
        match self {
            SuiteArg::Contraction => vec![Suite::Contraction],
            SuiteArg::Bounds => vec![Suite::Bounds],
            SuiteArg::Collapse => vec![Suite::Collapse],
            SuiteArg::All => Suite::ALL.to_vec(),
        }
    }
}

/// A failed command: exit code and message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_CONFIG, message: e.to_string() }
    }

    fn io(e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_IO, message: e.to_string() }
    }

    /// Maps an error raised while a command runs.
    fn runtime(e: Error) -> Self {
        let code = match &e {
            Error::NonFiniteValue(_) => EXIT_NUMERIC,
            Error::LambdaOutOfRange(_)
            | Error::InvalidSpec(_)
            | Error::DigestMismatch
            | Error::UnboundedActivation(_)
            | Error::InvalidActivation(_) => EXIT_CONFIG,
            _ => EXIT_IO,
        };
        Failure { code, message: e.to_string() }
    }
}

type CmdResult = Result<(), Failure>;

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_from_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("streamnet: error: {}", f.message);
            f.code
        }
    }
}

pub fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    if let Some(format) = cli.format {
        cfg.output.format = format;
    }
    if let Some(steps) = cli.steps {
        match &cli.command {
            Some(Command::Run { .. }) => cfg.run.steps = Some(steps),
            Some(Command::Phase) => cfg.phase.total_steps = steps,
            Some(Command::Retention) => cfg.retention.steps = steps,
            Some(Command::Track) => cfg.tracking.steps = steps,
            Some(Command::Bench) => cfg.bench.steps = steps,
            Some(Command::Verify { .. }) => cfg.verify.contraction.steps = steps as usize,
            None => {}
        }
    }
    if let Some(Command::Run { stateless, resume, snapshot }) = &cli.command {
        cfg.run.stateless |= *stateless;
        if resume.is_some() {
            cfg.run.resume.clone_from(resume);
        }
        if snapshot.is_some() {
            cfg.run.snapshot.clone_from(snapshot);
        }
    }
    if !matches!(cli.command, Some(Command::Run { .. })) {
        if let Some(out) = &cli.output {
            if out == "-" {
                return Err(Failure::config("series commands write files; --output must name a directory"));
            }
            cfg.output.dir = PathBuf::from(out);
        }
    }
    cfg.validate().map_err(Failure::config)?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> CmdResult {
    let cfg = load_config(cli)?;
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let Some(command) = &cli.command else {
        return Err(Failure::config("no command given (try --help)"));
    };
    match command {
        Command::Run { .. } => cmd_run(&cfg, cli.input.as_deref(), cli.output.as_deref()),
        Command::Verify { suite } => cmd_verify(&cfg, *suite),
        Command::Phase => cmd_phase(&cfg),
        Command::Retention => cmd_retention(&cfg),
        Command::Track => cmd_track(&cfg),
        Command::Bench => cmd_bench(&cfg),
    }
}

fn cmd_run(cfg: &ExperimentConfig, input: Option<&str>, output: Option<&str>) -> CmdResult {
    let spec = cfg.network.build(cfg.seed).map_err(Failure::config)?;
    let initial = match &cfg.run.resume {
        Some(path) => {
            let snap = Snapshot::read_from(path).map_err(Failure::runtime)?;
            load_snapshot(&spec, &snap).map_err(Failure::runtime)?
        }
        None => NetworkState::zeros(&spec),
    };
    let source = match input.unwrap_or("-") {
        "-" => open_record_source(RecordInput::Stdin),
        path => open_record_source(RecordInput::Path(Path::new(path))),
    }
    .map_err(|e| Failure::io(Error::from(e)))?;
    let out: Box<dyn Write> = match output.unwrap_or("-") {
        "-" => Box::new(BufWriter::new(io::stdout().lock())),
        path => Box::new(BufWriter::new(File::create(path).map_err(|e| Failure::io(format!("{path}: {e}")))?)),
    };
    let sink: Box<dyn RecordSink> = match cfg.output.format {
        OutputFormat::Csv => Box::new(CsvSink::new(out, spec.output_dim(), spec.state_dim(), 0)),
        OutputFormat::Jsonl => Box::new(JsonlSink::new(out)),
    };
    let mode = if cfg.run.stateless { StateMode::Disabled } else { StateMode::Enabled };
    let result = run_stream_with(&spec, initial, source, sink, RunOptions { limit: cfg.run.steps, mode });

    let (state, failure) = match result {
        Ok(done) => {
            eprintln!("{}", done.summary);
            (done.state, None)
        }
        Err(abort) => {
            eprintln!("{}", abort.summary);
            (abort.last_good, Some(Failure::runtime(abort.error)))
        }
    };
    if let Some(path) = &cfg.run.snapshot {
        save_snapshot(&spec, &state).and_then(|s| s.write_to(path)).map_err(Failure::runtime)?;
    }
    failure.map_or(Ok(()), Err)
}

fn verify_threads() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("STREAMNET_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .map_or(available, |cap| cap.min(available))
}

fn cmd_verify(cfg: &ExperimentConfig, suite: SuiteArg) -> CmdResult {
    let outcomes = run_suites(&suite.suites(), &cfg.verify, cfg.seed, verify_threads()).map_err(Failure::runtime)?;
    let mut out = io::stdout().lock();
    let w = outcomes.iter().map(|c| c.check.len()).max().unwrap_or(5).max(5);
    let table = |out: &mut io::StdoutLock<'_>| -> io::Result<()> {
        writeln!(out, "{:<12} {:<w$} {:>14} {:>14}  result", "suite", "check", "value", "limit")?;
        for c in &outcomes {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            writeln!(out, "{:<12} {:<w$} {:>14.6e} {:>14.6e}  {verdict}", c.suite.name(), c.check, c.value, c.limit)?;
        }
        out.flush()
    };
    table(&mut out).map_err(Failure::io)?;
    let failed = outcomes.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure { code: EXIT_INVARIANT, message: format!("{failed} invariant check(s) failed") });
    }
    Ok(())
}

fn series_file(cfg: &ExperimentConfig, name: &str) -> Result<(PathBuf, BufWriter<File>), Failure> {
    fs::create_dir_all(&cfg.output.dir).map_err(|e| Failure::io(format!("{}: {e}", cfg.output.dir.display())))?;
    let path = cfg.output.dir.join(name);
    let file = File::create(&path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    Ok((path, BufWriter::new(file)))
}

fn write_phase(traj: &PhaseTrajectory, first_t: u64, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "t,x,y")?;
    for (i, p) in traj.points.iter().enumerate() {
        writeln!(out, "{},{},{}", first_t + i as u64, p.x, p.y)?;
    }
    out.flush()
}

fn describe_verdict(v: &AttractorVerdict) -> String {
    let mut s = format!(
        "classification={:?} diameter={:e} center=({:e},{:e}) eps_fp={:e} eps_rec={:e}",
        v.classification, v.diameter, v.center.x, v.center.y, v.eps_fp, v.eps_rec
    );
    if let Some(p) = v.period {
        s.push_str(&format!(" period={p}"));
    }
    if let Some(r) = v.recurrence_distance {
        s.push_str(&format!(" recurrence={r:e}"));
    }
    s
}

fn cmd_phase(cfg: &ExperimentConfig) -> CmdResult {
    let phase = cfg.phase.build(cfg.seed).map_err(Failure::config)?;
    for (mode, label) in [(StateMode::Enabled, "enabled"), (StateMode::Disabled, "disabled")] {
        let traj = phase_trajectory(&phase, mode).map_err(Failure::runtime)?;
        let verdict = classify_with(&traj.points, &cfg.phase.thresholds).map_err(Failure::runtime)?;
        let (path, mut out) = series_file(cfg, &format!("phase_{label}.csv"))?;
        write_phase(&traj, phase.burn_in + 1, &mut out).map_err(Failure::io)?;
        println!("state={label} {} series={}", describe_verdict(&verdict), path.display());
    }
    Ok(())
}

fn cmd_retention(cfg: &ExperimentConfig) -> CmdResult {
    let s0 = Vector::new(cfg.retention.s0.clone()).map_err(Failure::config)?;
    for &lambda in &cfg.retention.lambdas {
        let curve = retention_curve(lambda, &s0, cfg.retention.steps, cfg.retention.activation).map_err(Failure::runtime)?;
        let (path, mut out) = series_file(cfg, &format!("retention_lambda_{lambda}.csv"))?;
        let dim = s0.dim();
        let cols = |p: &str| if dim == 1 { vec![p.to_string()] } else { (0..dim).map(|i| format!("{p}{i}")).collect() };
        let mut header = vec!["t".to_string()];
        header.extend(cols("s"));
        header.extend(cols("closed_form"));
        let write = |out: &mut BufWriter<File>| -> io::Result<()> {
            writeln!(out, "{}", header.join(","))?;
            for (t, s) in curve.states.iter().enumerate() {
                let decay = lambda.powf(t as f64);
                write!(out, "{t}")?;
                for v in s.iter() {
                    write!(out, ",{v}")?;
                }
                for v0 in s0.iter() {
                    write!(out, ",{}", decay * v0)?;
                }
                writeln!(out)?;
            }
            out.flush()
        };
        write(&mut out).map_err(Failure::io)?;
        let half = curve.half_life().map_or("none".to_string(), |t| t.to_string());
        println!(
            "lambda={lambda} half_life={half} max_deviation_ulps={} series={}",
            curve.max_deviation_ulps(),
            path.display()
        );
    }
    Ok(())
}

fn cmd_track(cfg: &ExperimentConfig) -> CmdResult {
    let report = tracking_experiment(&cfg.tracking).map_err(Failure::runtime)?;
    let (path, mut out) = series_file(cfg, "tracking.csv")?;
    let s = &report.series;
    let write = |out: &mut BufWriter<File>| -> io::Result<()> {
        writeln!(out, "t,reference,stateless,stateful")?;
        for i in 0..s.t.len() {
            writeln!(out, "{},{},{},{}", s.t[i], s.reference[i], s.stateless[i], s.stateful[i])?;
        }
        out.flush()
    };
    write(&mut out).map_err(Failure::io)?;
    println!(
        "mse_stateful={} mse_stateless={} stateful_better={} gain={} transient={} window={} series={}",
        report.mse_stateful,
        report.mse_stateless,
        report.mse_stateful < report.mse_stateless,
        report.gain,
        report.transient,
        report.window,
        path.display()
    );
    Ok(())
}

fn cmd_bench(cfg: &ExperimentConfig) -> CmdResult {
    let spec = cfg.bench.network.build(cfg.seed).map_err(Failure::config)?;
    let source = make_signal_source(&cfg.bench.signal, Some(cfg.bench.steps)).map_err(Failure::config)?;
    let report = measure_constant_cost(&spec, source, cfg.bench.steps, cfg.bench.windows).map_err(Failure::runtime)?;
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.1}"));
    match cfg.output.format {
        OutputFormat::Jsonl => println!("{}", serde_json::to_string(&report).expect("report serializes")),
        OutputFormat::Csv => {
            println!("steps,early_start,early_end,late_start,late_end,early_mean_ns,late_mean_ns,ratio,memory_early,memory_late");
            println!(
                "{},{},{},{},{},{},{},{},{},{}",
                report.steps,
                report.early_window.start,
                report.early_window.end,
                report.late_window.start,
                report.late_window.end,
                opt(report.early_mean_ns),
                opt(report.late_mean_ns),
                report.ratio.map_or("n/a".to_string(), |r| format!("{r:.4}")),
                report.memory_early,
                report.memory_late
            );
        }
    }
    Ok(())
}
