//! Replaying suite paths against an actor implementation.
//!
//! For every path a fresh [`Emulator`] is built, each step's action is
//! applied and the emulator's snapshot is compared with the model state the
//! suite expects. The first difference ends the path with a non-PASS
//! [`Verdict`]; other paths still run.

mod replay;

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use crate::actor::{Action, Actor, Emulator, EmulatorConfig, StepError, SystemState};
use crate::format::{FormatError, SuiteFile};
use crate::model::ModelState;
use crate::value::Value;

pub use replay::{replay, ReplayError, ReplayLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Status {
    Pass,
    StateMismatch,
    EventsMismatch,
    IllegalAction,
    ActorFailure,
}

impl Status {
    pub const ALL: [Status; 5] = [
        Status::Pass,
        Status::StateMismatch,
        Status::EventsMismatch,
        Status::IllegalAction,
        Status::ActorFailure,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::StateMismatch => "STATE_MISMATCH",
            Status::EventsMismatch => "EVENTS_MISMATCH",
            Status::IllegalAction => "ILLEGAL_ACTION",
            Status::ActorFailure => "ACTOR_FAILURE",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Status> {
        Status::ALL.into_iter().find(|s| s.tag() == tag)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Outcome of one path. `step` is set iff the status is not PASS; step 0 is
/// the initial state, step k the state after the k-th action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    /// Zero-based path id.
    pub path: usize,
    pub status: Status,
    pub step: Option<usize>,
    pub diff: Vec<String>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    fn pass(path: usize) -> Verdict {
        Verdict { path, status: Status::Pass, step: None, diff: Vec::new() }
    }

    /// One-line canonical form, e.g.
    /// `path=3 status=STATE_MISMATCH step=2 diff=actor 0 commitNumber: ...`.
    pub fn to_line(&self) -> String {
        let mut out = format!("path={} status={}", self.path + 1, self.status);
        if let Some(step) = self.step {
            let _ = write!(out, " step={step}");
        }
        if !self.diff.is_empty() {
            let _ = write!(out, " diff={}", self.diff.join("; "));
        }
        out
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// Result of [`compare_states`]; actor differences take precedence over
/// event differences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Comparison {
    Equal,
    StateMismatch(Vec<String>),
    EventsMismatch(Vec<String>),
}

fn diff_values(prefix: &str, imp: &Value, model: &Value, out: &mut Vec<String>) {
    match (imp.as_record(), model.as_record()) {
        (Some(a), Some(b)) => {
            let fields: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
            for f in fields {
                let (x, y) = (a.get(f), b.get(f));
                if x != y {
                    let show = |v: Option<&Value>| v.map_or("<absent>".to_string(), Value::to_canonical);
                    out.push(format!("{prefix} {f}: impl {} model {}", show(x), show(y)));
                }
            }
        }
        _ if imp != model => out.push(format!(
            "{prefix}: impl {} model {}",
            imp.to_canonical(),
            model.to_canonical()
        )),
        _ => {}
    }
}

/// Field-level comparison of an implementation snapshot with a model state.
/// The model's environment counters have no implementation counterpart and
/// are not compared.
pub fn compare_states(imp: &SystemState, model: &ModelState) -> Comparison {
    let mut diffs = Vec::new();
    if imp.actors.len() != model.actors.len() {
        diffs.push(format!(
            "actor count: impl {} model {}",
            imp.actors.len(),
            model.actors.len()
        ));
    }
    for (i, (a, b)) in imp.actors.iter().zip(&model.actors).enumerate() {
        diff_values(&format!("actor {i}"), a, b, &mut diffs);
    }
    if imp.down != model.down {
        let show = |d: &std::collections::BTreeSet<_>| {
            Value::set(d.iter().map(|a: &crate::actor::ActorId| Value::Int(a.0 as i64))).to_canonical()
        };
        diffs.push(format!("down: impl {} model {}", show(&imp.down), show(&model.down)));
    }
    if !diffs.is_empty() {
        return Comparison::StateMismatch(diffs);
    }
    for e in imp.events.difference(&model.events) {
        diffs.push(format!("unexpected event {e}"));
    }
    for e in model.events.difference(&imp.events) {
        diffs.push(format!("missing event {e}"));
    }
    if diffs.is_empty() {
        Comparison::Equal
    } else {
        Comparison::EventsMismatch(diffs)
    }
}

/// Suite with parsed states and actions, ready to replay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suite {
    pub model: String,
    pub hash: String,
    pub states: Vec<ModelState>,
    pub paths: Vec<Vec<(Action, usize)>>,
}

impl Suite {
    pub fn from_file(file: &SuiteFile) -> Result<Suite, FormatError> {
        let bad = |line: usize, message: String| FormatError::Malformed { line, message };
        let states = file
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| ModelState::parse(s).map_err(|e| bad(i + 2, e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let first_path_line = states.len() + 2;
        let paths = file
            .paths
            .iter()
            .enumerate()
            .map(|(pi, p)| {
                p.iter()
                    .map(|(label, dst)| {
                        Action::parse(label)
                            .map(|a| (a, *dst))
                            .map_err(|e| bad(first_path_line + pi, e.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        Ok(Suite { model: file.model.clone(), hash: file.hash(), states, paths })
    }
}

fn check(snapshot: &SystemState, expected: &ModelState, path: usize, step: usize) -> Option<Verdict> {
    let (status, diff) = match compare_states(snapshot, expected) {
        Comparison::Equal => return None,
        Comparison::StateMismatch(d) => (Status::StateMismatch, d),
        Comparison::EventsMismatch(d) => (Status::EventsMismatch, d),
    };
    Some(Verdict { path, status, step: Some(step), diff })
}

/// Replays `steps` from a fresh emulator, comparing after every action.
pub fn run_steps<A: Actor>(
    config: &EmulatorConfig<A>,
    initial: &ModelState,
    steps: &[(Action, &ModelState)],
    path: usize,
) -> Verdict {
    let mut emu = match Emulator::new(config.clone()) {
        Ok(e) => e,
        Err(e) => {
            return Verdict {
                path,
                status: Status::ActorFailure,
                step: Some(0),
                diff: vec![e.to_string()],
            }
        }
    };
    if let Some(v) = check(&emu.snapshot(), initial, path, 0) {
        return v;
    }
    for (i, (action, expected)) in steps.iter().enumerate() {
        let step = i + 1;
        if let Err(e) = emu.step(action) {
            let status = match e {
                StepError::ActorFailure(_) => Status::ActorFailure,
                StepError::IllegalAction { .. } | StepError::NoActors => Status::IllegalAction,
            };
            return Verdict { path, status, step: Some(step), diff: vec![e.to_string()] };
        }
        if let Some(v) = check(&emu.snapshot(), expected, path, step) {
            return v;
        }
    }
    Verdict::pass(path)
}

/// Runs path `path` of `suite` on a fresh implementation.
pub fn run_path<A: Actor>(config: &EmulatorConfig<A>, suite: &Suite, path: usize) -> Verdict {
    let steps: Vec<(Action, &ModelState)> = suite.paths[path]
        .iter()
        .map(|(a, dst)| (a.clone(), &suite.states[*dst]))
        .collect();
    run_steps(config, &suite.states[0], &steps, path)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub jobs: usize,
    /// Stop after the lowest-numbered failing path; later paths are skipped.
    pub fail_fast: bool,
    /// Directory receiving one replay log per failing path.
    pub replay_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub model: String,
    pub suite_hash: String,
    /// Verdicts ordered by path id.
    pub verdicts: Vec<Verdict>,
    /// Paths not run because of fail-fast.
    pub skipped: usize,
    /// File names (relative to the replay directory) of written replay logs.
    pub replay_logs: Vec<String>,
    pub elapsed: Duration,
}

impl RunReport {
    pub fn count(&self, status: Status) -> usize {
        self.verdicts.iter().filter(|v| v.status == status).count()
    }

    pub fn all_passed(&self) -> bool {
        self.skipped == 0 && self.verdicts.iter().all(Verdict::passed)
    }

    pub fn paths_per_second(&self) -> f64 {
        let secs = self.elapsed.as_secs_f64();
        if secs > 0.0 {
            self.verdicts.len() as f64 / secs
        } else {
            f64::INFINITY
        }
    }

    /// Totals line, identical across runs with the same inputs.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "model={} suite={} paths={}",
            self.model,
            self.suite_hash,
            self.verdicts.len() + self.skipped
        );
        for s in Status::ALL {
            let _ = write!(out, " {}={}", s.tag().to_ascii_lowercase(), self.count(s));
        }
        let _ = write!(out, " skipped={}", self.skipped);
        out
    }

    /// Deterministic report: the summary, then one line per verdict, then
    /// the replay log names. Timing is left out on purpose.
    pub fn to_text(&self) -> String {
        let mut out = format!("RUN v1 {}\n", self.summary());
        for v in &self.verdicts {
            out.push_str(&v.to_line());
            out.push('\n');
        }
        for l in &self.replay_logs {
            let _ = writeln!(out, "replay-log {l}");
        }
        out
    }
}

pub fn replay_log_name(path: usize) -> String {
    format!("path-{:06}.replay", path + 1)
}

/// Runs every path on an isolated implementation instance. Path ids are
/// split into `jobs` contiguous blocks, one per worker thread.
pub fn run_suite<A: Actor>(
    config: &EmulatorConfig<A>,
    suite: &Suite,
    options: &RunOptions,
) -> std::io::Result<RunReport>
where
    A::Msg: Send,
{
    let start = Instant::now();
    let n = suite.paths.len();
    let jobs = options.jobs.clamp(1, n.max(1));
    let block = n.div_ceil(jobs).max(1);
    let first_failure = AtomicUsize::new(usize::MAX);
    let run_block = |range: std::ops::Range<usize>| -> Vec<Verdict> {
        let mut out = Vec::with_capacity(range.len());
        for p in range {
            if options.fail_fast && first_failure.load(Ordering::Relaxed) < p {
                break;
            }
            let v = run_path(config, suite, p);
            if !v.passed() {
                first_failure.fetch_min(p, Ordering::Relaxed);
            }
            out.push(v);
        }
        out
    };
    let mut verdicts: Vec<Verdict> = if jobs == 1 {
        run_block(0..n)
    } else {
        thread::scope(|scope| {
            let handles: Vec<_> = (0..jobs)
                .map(|j| {
                    let range = (j * block).min(n)..((j + 1) * block).min(n);
                    let run_block = &run_block;
                    scope.spawn(move || run_block(range))
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("conformance worker panicked"))
                .collect()
        })
    };
    let mut skipped = 0;
    if options.fail_fast {
        let cut = first_failure.load(Ordering::Relaxed);
        verdicts.retain(|v| v.path <= cut);
        skipped = n - verdicts.len();
    }
    let mut replay_logs = Vec::new();
    if let Some(dir) = &options.replay_dir {
        let failing: Vec<&Verdict> = verdicts.iter().filter(|v| !v.passed()).collect();
        if !failing.is_empty() {
            std::fs::create_dir_all(dir)?;
        }
        for v in failing {
            let name = replay_log_name(v.path);
            write_replay_log(dir, &name, suite, v.path)?;
            replay_logs.push(name);
        }
    }
    Ok(RunReport {
        model: suite.model.clone(),
        suite_hash: suite.hash.clone(),
        verdicts,
        skipped,
        replay_logs,
        elapsed: start.elapsed(),
    })
}

fn write_replay_log(dir: &Path, name: &str, suite: &Suite, path: usize) -> std::io::Result<()> {
    std::fs::write(dir.join(name), ReplayLog::for_path(suite, path).to_text())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actor::{ActorId, Endpoint, Event};
    use crate::format::{GraphFile, SuiteFile};
    use crate::model::{explore, ExploreOptions};
    use crate::systems::kv::{KvBounds, KvModel};
    use crate::tsg::{min_suite, Algorithm};

    fn kv_suite(b: KvBounds) -> Suite {
        let g = explore(&KvModel::new(b), ExploreOptions::default()).unwrap().graph;
        let gf = GraphFile::from_graph(&g);
        let ts = min_suite(&gf.cover_graph().unwrap()).unwrap();
        Suite::from_file(&SuiteFile::build(&gf, &ts, Algorithm::Min).unwrap()).unwrap()
    }

    fn model_state(commit: i64) -> ModelState {
        ModelState::new(vec![Value::record([("commitNumber", Value::Int(commit))])], Value::empty_record())
    }

    fn snapshot_of(m: &ModelState) -> SystemState {
        SystemState { actors: m.actors.clone(), down: m.down.clone(), events: m.events.clone() }
    }

    #[test]
    fn identical_states_are_equal() {
        let m = model_state(1);
        assert_eq!(compare_states(&snapshot_of(&m), &m), Comparison::Equal);
    }

    #[test]
    fn diff_names_actor_and_field() {
        let imp = snapshot_of(&model_state(1));
        match compare_states(&imp, &model_state(2)) {
            Comparison::StateMismatch(d) => {
                assert_eq!(d, vec!["actor 0 commitNumber: impl 1 model 2".to_string()])
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_events_collapse_to_the_model_set() {
        let e = Event::new("M", Endpoint::External, Endpoint::Actor(ActorId(0)), Value::Nil);
        let mut model = model_state(0);
        model.events.insert(e.clone());
        let mut store = crate::actor::EventStore::new(crate::actor::Discipline::Set);
        store.insert(e.clone(), ());
        store.insert(e, ());
        let mut imp = snapshot_of(&model_state(0));
        imp.events = store.images();
        assert_eq!(compare_states(&imp, &model), Comparison::Equal);
    }

    #[test]
    fn kv_suite_passes() {
        let b = KvBounds { actors: 3, ..Default::default() };
        let suite = kv_suite(b);
        let report = run_suite(&b.emulator_config(), &suite, &RunOptions::default()).unwrap();
        assert!(report.all_passed(), "{}", report.to_text());
    }

    #[test]
    fn kv_suite_with_faults_passes() {
        let b = KvBounds { actors: 2, gets: 1, crashes: 1, drops: 1, corruptions: 1, ..Default::default() };
        let suite = kv_suite(b);
        let report = run_suite(&b.emulator_config(), &suite, &RunOptions { jobs: 3, ..Default::default() }).unwrap();
        assert!(report.all_passed(), "{}", report.to_text());
    }

    #[test]
    fn unmatched_selector_is_illegal() {
        let b = KvBounds::default();
        let mut suite = kv_suite(b);
        // Drop the injection so the delivery has nothing to withdraw.
        let deliver = suite.paths[0][1].clone();
        suite.paths[0] = vec![deliver];
        let v = run_path(&b.emulator_config(), &suite, 0);
        assert_eq!(v.status, Status::IllegalAction);
        assert_eq!(v.step, Some(1));
    }

    #[test]
    fn empty_suite_has_zero_totals() {
        let suite = Suite { model: "kv".into(), hash: String::new(), states: vec![model_state(0)], paths: vec![] };
        let r = run_suite(&KvBounds::default().emulator_config(), &suite, &RunOptions::default()).unwrap();
        assert!(r.verdicts.is_empty());
        assert!(r.all_passed());
    }

    #[test]
    fn parallelism_does_not_change_verdicts() {
        let b = KvBounds { actors: 2, gets: 1, drops: 1, ..Default::default() };
        let suite = kv_suite(b);
        let one = run_suite(&b.emulator_config(), &suite, &RunOptions { jobs: 1, ..Default::default() }).unwrap();
        let four = run_suite(&b.emulator_config(), &suite, &RunOptions { jobs: 4, ..Default::default() }).unwrap();
        assert_eq!(one.to_text(), four.to_text());
    }
}
