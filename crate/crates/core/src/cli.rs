//! The `mbt` command line: `explore`, `gensuite`, `run`, `replay` and
//! `stats`.
//!
//! Exit status 0 means success, 1 a verification failure (invariant
//! violation, uncovered edge, non-PASS verdict) and 2 a usage or input
//! format error. Everything written to stdout and to output files is
//! deterministic; wall-clock figures go to stderr and only with `--timing`.

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::conformance::{replay, run_suite, ReplayLog, RunOptions, Suite};
use crate::format::{GraphFile, SuiteFile, SUITE_MAGIC};
use crate::model::{
    check_quiescent_progress, explore, export_dot, Bounds, ExploreError, ExploreOptions, Model,
};
use crate::systems::kv::{KvBounds, KvModel};
use crate::systems::vr::{vr_config, Mutation, VrBounds, VrModel};
use crate::tsg::{generate, verify_coverage, Algorithm};
use crate::value::Value;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFICATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "mbt", version, about = "Exhaustive model-based testing for actor systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate a model's bounded state space and check its invariants.
    Explore(ExploreArgs),
    /// Compute an edge-covering path suite for a graph file.
    Gensuite(GensuiteArgs),
    /// Run a suite against the registered implementation.
    Run(RunArgs),
    /// Re-execute one failing path from its replay log.
    Replay(ReplayArgs),
    /// Print diameter, state, edge and path counts of a graph or suite file.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelName {
    Kv,
    Vr,
    VrCommitWithoutQuorum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Baseline,
    Flow,
    Min,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Algorithm {
        match a {
            AlgorithmArg::Baseline => Algorithm::Baseline,
            AlgorithmArg::Flow => Algorithm::Flow,
            AlgorithmArg::Min => Algorithm::Min,
        }
    }
}

#[derive(Debug, Args)]
struct BoundArgs {
    /// Number of actors (kv, default 1) or replicas (vr, default 3).
    #[arg(long)]
    replicas: Option<u16>,
    /// vr: client requests issued.
    #[arg(long, default_value_t = 1)]
    max_queries: i64,
    /// vr: highest view a timeout may reach.
    #[arg(long, default_value_t = 1)]
    max_views: i64,
    /// kv: SET requests injected.
    #[arg(long, default_value_t = 1)]
    max_sets: i64,
    /// kv: GET requests injected.
    #[arg(long, default_value_t = 0)]
    max_gets: i64,
    /// kv: crashes.
    #[arg(long, default_value_t = 0)]
    max_crashes: i64,
    /// kv: dropped events.
    #[arg(long, default_value_t = 0)]
    max_drops: i64,
    /// kv: corrupted events.
    #[arg(long, default_value_t = 0)]
    max_corruptions: i64,
}

#[derive(Debug, Args)]
struct ExploreArgs {
    #[arg(long, value_enum)]
    model: ModelName,
    #[command(flatten)]
    bounds: BoundArgs,
    /// Graph file to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the graph in DOT form.
    #[arg(long)]
    dot: Option<PathBuf>,
    #[arg(long, default_value_t = ExploreOptions::default().state_cap)]
    state_cap: usize,
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct GensuiteArgs {
    /// Graph file or plain edge list.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Min)]
    algorithm: AlgorithmArg,
    /// Suite file to write.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    suite: PathBuf,
    /// Must match the model named in the suite when given.
    #[arg(long, value_enum)]
    model: Option<ModelName>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    fail_fast: bool,
    /// Seed a bug into every replica (vr only).
    #[arg(long)]
    mutation: Option<Mutation>,
    /// Directory receiving one replay log per failing path.
    #[arg(long, default_value = "mbt-replays")]
    replay_dir: PathBuf,
    /// Report file to write.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[arg(long)]
    replay_log: PathBuf,
    /// Suite the log claims to come from; a stale log is refused.
    #[arg(long)]
    suite: Option<PathBuf>,
    #[arg(long)]
    mutation: Option<Mutation>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Graph or suite file, detected from its header.
    #[arg(required_unless_present_any = ["graph", "suite"], conflicts_with_all = ["graph", "suite"])]
    file: Option<PathBuf>,
    #[arg(long, conflicts_with = "suite")]
    graph: Option<PathBuf>,
    #[arg(long)]
    suite: Option<PathBuf>,
    /// For a graph, also time flow and min suite generation (stderr).
    #[arg(long)]
    timing: bool,
}

/// Failure carrying its exit status; the message goes to stderr.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Display) -> Failure {
    Failure { code: EXIT_USAGE, message: message.to_string() }
}

fn verification(message: impl Display) -> Failure {
    Failure { code: EXIT_VERIFICATION, message: message.to_string() }
}

type CmdResult = Result<u8, Failure>;

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn line(&mut self, s: impl Display) {
        let _ = writeln!(self.out, "{s}");
    }

    fn note(&mut self, s: impl Display) {
        let _ = writeln!(self.err, "{s}");
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut io = Io { out, err };
    let result = match cli.command {
        Command::Explore(a) => cmd_explore(&a, &mut io),
        Command::Gensuite(a) => cmd_gensuite(&a, &mut io),
        Command::Run(a) => cmd_run(&a, &mut io),
        Command::Replay(a) => cmd_replay(&a, &mut io),
        Command::Stats(a) => cmd_stats(&a, &mut io),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            io.note(format!("error: {}", f.message));
            f.code
        }
    }
}

/// Process entry point used by the `mbt` binary.
pub fn main() -> ExitCode {
    let code = run(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn kv_bounds(b: &BoundArgs) -> KvBounds {
    KvBounds {
        actors: b.replicas.unwrap_or(1),
        sets: b.max_sets,
        gets: b.max_gets,
        crashes: b.max_crashes,
        drops: b.max_drops,
        corruptions: b.max_corruptions,
    }
}

fn vr_bounds(b: &BoundArgs) -> VrBounds {
    VrBounds {
        replicas: b.replicas.unwrap_or(3),
        max_queries: b.max_queries,
        max_views: b.max_views,
    }
}

fn cmd_explore(a: &ExploreArgs, io: &mut Io) -> CmdResult {
    if a.bounds.replicas == Some(0) {
        return Err(usage("--replicas must be at least 1"));
    }
    match a.model {
        ModelName::Kv => explore_model(&KvModel::new(kv_bounds(&a.bounds)), a, io),
        ModelName::Vr => explore_model(&VrModel::new(vr_bounds(&a.bounds)), a, io),
        ModelName::VrCommitWithoutQuorum => explore_model(&VrModel::buggy(vr_bounds(&a.bounds)), a, io),
    }
}

fn explore_model<M: Model>(model: &M, a: &ExploreArgs, io: &mut Io) -> CmdResult {
    let start = Instant::now();
    let options = ExploreOptions { state_cap: a.state_cap, ..ExploreOptions::default() };
    let exploration = match explore(model, options) {
        Ok(x) => x,
        Err(ExploreError::InvariantViolated(cx)) => {
            io.line(format!("model={} bounds={}", model.name(), model.bounds()));
            io.line(format!("counterexample steps={}", cx.len()));
            let _ = write!(io.out, "{cx}");
            return Ok(EXIT_VERIFICATION);
        }
        Err(e @ ExploreError::StateCapExceeded { .. }) => {
            io.line(format!("model={} bounds={}", model.name(), model.bounds()));
            return Err(verification(e));
        }
    };
    let graph = &exploration.graph;
    let stats = graph.stats().map_err(verification)?;
    if a.timing {
        io.note(format!("explore: {:.3}s", start.elapsed().as_secs_f64()));
    }
    io.line(format!("model={} bounds={} {stats}", model.name(), model.bounds()));
    let progress = check_quiescent_progress(model, graph);
    io.line(format!(
        "progress sinks={} checked={} violations={}",
        progress.sinks,
        progress.checked,
        progress.violations.len()
    ));
    if let Some(path) = &a.out {
        let text = GraphFile::from_graph(graph).to_text().map_err(verification)?;
        write(path, &text)?;
    }
    if let Some(path) = &a.dot {
        write(path, &export_dot(graph))?;
    }
    if let Some(v) = progress.violations.first() {
        io.line(v);
        if let Some(cx) = exploration.counterexample(v) {
            let _ = write!(io.out, "{cx}");
        }
        return Ok(EXIT_VERIFICATION);
    }
    Ok(EXIT_OK)
}

fn cmd_gensuite(a: &GensuiteArgs, io: &mut Io) -> CmdResult {
    let graph = GraphFile::parse(&read(&a.graph)?).map_err(usage)?;
    let cover = graph.cover_graph().map_err(usage)?;
    let algorithm = Algorithm::from(a.algorithm);
    let start = Instant::now();
    let suite = generate(&cover, algorithm).map_err(verification)?;
    if a.timing {
        io.note(format!("gensuite {algorithm}: {:.3}s", start.elapsed().as_secs_f64()));
    }
    let report = verify_coverage(&cover, &suite).map_err(verification)?;
    io.line(format!(
        "algorithm={algorithm} paths={} total={} uncovered={} bound={}",
        report.paths,
        report.total_length,
        report.uncovered.len(),
        report.bound
    ));
    if let Some(path) = &a.out {
        let file = SuiteFile::build(&graph, &suite, algorithm).map_err(verification)?;
        write(path, &file.to_text())?;
    }
    if !report.is_complete() {
        return Err(verification(format!("{} edges are not covered", report.uncovered.len())));
    }
    Ok(EXIT_OK)
}

fn model_name(m: ModelName) -> &'static str {
    match m {
        ModelName::Kv => "kv",
        ModelName::Vr => "vr",
        ModelName::VrCommitWithoutQuorum => "vr-commit-without-quorum",
    }
}

/// Implementation registered for a model name.
enum Registered {
    Kv(KvBounds),
    Vr(VrBounds),
}

fn registered(model: &str, bounds: &Bounds) -> Result<Registered, Failure> {
    let bad = || usage(format!("bounds {bounds} do not fit model {model}"));
    match model {
        "kv" => KvBounds::from_bounds(bounds).map(Registered::Kv).ok_or_else(bad),
        // The buggy variant shares the correct replica implementation.
        "vr" | "vr-commit-without-quorum" => VrBounds::from_bounds(bounds).map(Registered::Vr).ok_or_else(bad),
        _ => Err(usage(format!("no implementation registered for model {model}"))),
    }
}

fn parse_bounds(text: &str) -> Result<Bounds, Failure> {
    Value::parse(text)
        .ok()
        .and_then(|v| Bounds::from_value(&v))
        .ok_or_else(|| usage(format!("cannot read bounds {text}")))
}

fn cmd_run(a: &RunArgs, io: &mut Io) -> CmdResult {
    let file = SuiteFile::parse(&read(&a.suite)?).map_err(usage)?;
    if let Some(m) = a.model {
        if model_name(m) != file.model {
            return Err(usage(format!(
                "suite was generated for model {} but --model is {}",
                file.model,
                model_name(m)
            )));
        }
    }
    let suite = Suite::from_file(&file).map_err(usage)?;
    let options = RunOptions {
        jobs: a.jobs.max(1),
        fail_fast: a.fail_fast,
        replay_dir: Some(a.replay_dir.clone()),
    };
    let report = match registered(&file.model, &parse_bounds(&file.bounds)?)? {
        Registered::Kv(_) if a.mutation.is_some() => {
            return Err(usage("--mutation applies to vr only"));
        }
        Registered::Kv(b) => run_suite(&b.emulator_config(), &suite, &options),
        Registered::Vr(b) => run_suite(&vr_config(b.replicas, a.mutation), &suite, &options),
    }
    .map_err(usage)?;
    if a.timing {
        io.note(format!(
            "run: {:.3}s, {:.0} paths/s",
            report.elapsed.as_secs_f64(),
            report.paths_per_second()
        ));
    }
    io.line(report.summary());
    for v in report.verdicts.iter().filter(|v| !v.passed()) {
        io.line(v.to_line());
    }
    for l in &report.replay_logs {
        io.line(format!("replay-log {}", a.replay_dir.join(l).display()));
    }
    if let Some(path) = &a.out {
        write(path, &report.to_text())?;
    }
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_VERIFICATION })
}

fn cmd_replay(a: &ReplayArgs, io: &mut Io) -> CmdResult {
    let log = ReplayLog::parse(&read(&a.replay_log)?).map_err(usage)?;
    if let Some(path) = &a.suite {
        let file = SuiteFile::parse(&read(path)?).map_err(usage)?;
        let suite = Suite::from_file(&file).map_err(usage)?;
        log.check_suite(&suite).map_err(usage)?;
    }
    let actors = u16::try_from(log.initial.actors.len()).map_err(|_| usage("too many actors in log"))?;
    let verdict = match log.model.as_str() {
        "kv" if a.mutation.is_some() => return Err(usage("--mutation applies to vr only")),
        "kv" => replay(&log, &KvBounds { actors, ..KvBounds::default() }.emulator_config().allow_all_faults()),
        "vr" | "vr-commit-without-quorum" => replay(&log, &vr_config(actors, a.mutation)),
        m => return Err(usage(format!("no implementation registered for model {m}"))),
    };
    io.line(verdict.to_line());
    Ok(if verdict.passed() { EXIT_OK } else { EXIT_VERIFICATION })
}

fn cmd_stats(a: &StatsArgs, io: &mut Io) -> CmdResult {
    let path = a.file.as_ref().or(a.graph.as_ref()).or(a.suite.as_ref()).expect("clap requires one path");
    let text = read(path)?;
    let is_suite = match (&a.graph, &a.suite) {
        (Some(_), _) => false,
        (_, Some(_)) => true,
        _ => text.starts_with(SUITE_MAGIC),
    };
    if is_suite {
        let file = SuiteFile::parse(&text).map_err(usage)?;
        io.line(format!("model      {}", file.model));
        io.line(format!("bounds     {}", file.bounds));
        io.line(format!("algorithm  {}", file.algorithm));
        io.line(format!("D          {}", file.diameter));
        io.line(format!("|V|        {}", file.states.len()));
        io.line(format!("|E|        {}", file.edges));
        io.line(format!("|P|        {}", file.paths.len()));
        io.line(format!("total      {}", file.total_length()));
        io.line(format!(
            "STATS kind=suite model={} D={} V={} E={} P={} total={} algorithm={}",
            file.model,
            file.diameter,
            file.states.len(),
            file.edges,
            file.paths.len(),
            file.total_length(),
            file.algorithm
        ));
        return Ok(EXIT_OK);
    }
    let graph = GraphFile::parse(&text).map_err(usage)?;
    let stats = graph.stats().map_err(usage)?;
    let model = graph.model.as_str();
    io.line(format!("model      {model}"));
    io.line(format!("D          {}", stats.diameter));
    io.line(format!("|V|        {}", stats.states));
    io.line(format!("|E|        {}", stats.edges));
    io.line(format!("sinks      {}", stats.sinks));
    io.line(format!(
        "STATS kind=graph model={model} D={} V={} E={} sinks={}",
        stats.diameter, stats.states, stats.edges, stats.sinks
    ));
    if a.timing {
        let cover = graph.cover_graph().map_err(usage)?;
        for algorithm in [Algorithm::Flow, Algorithm::Min] {
            let start = Instant::now();
            let suite = generate(&cover, algorithm).map_err(verification)?;
            io.note(format!(
                "{algorithm}: |P|={} total={} {:.3}s",
                suite.paths.len(),
                suite.total_length(),
                start.elapsed().as_secs_f64()
            ));
        }
    }
    Ok(EXIT_OK)
}
