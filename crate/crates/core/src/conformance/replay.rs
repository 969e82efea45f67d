use std::fmt::Write as _;

use thiserror::Error;

use super::{run_steps, Suite, Verdict};
use crate::actor::{Action, Actor, EmulatorConfig};
use crate::model::ModelState;
use crate::value::Cursor;

pub const REPLAY_MAGIC: &str = "REPLAY";
pub const REPLAY_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("replay log version {found} is not supported (expected {REPLAY_VERSION})")]
    VersionMismatch { found: String },
    #[error("malformed replay log at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("replay log was made from suite {log} but the suite given hashes to {suite}")]
    StaleLog { log: String, suite: String },
}

/// Self-contained record of one path: the expected initial state and every
/// (action, destination index, expected state) step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayLog {
    pub suite_hash: String,
    pub model: String,
    /// Zero-based path id.
    pub path: usize,
    pub initial: ModelState,
    /// Zero-based destination indices.
    pub steps: Vec<(Action, usize, ModelState)>,
}

impl ReplayLog {
    pub fn for_path(suite: &Suite, path: usize) -> ReplayLog {
        ReplayLog {
            suite_hash: suite.hash.clone(),
            model: suite.model.clone(),
            path,
            initial: suite.states[0].clone(),
            steps: suite.paths[path]
                .iter()
                .map(|(a, d)| (a.clone(), *d, suite.states[*d].clone()))
                .collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{REPLAY_MAGIC} {REPLAY_VERSION} suite={} model={} path={}\n",
            self.suite_hash,
            self.model,
            self.path + 1
        );
        let _ = writeln!(out, "I {}", self.initial);
        for (a, d, s) in &self.steps {
            let _ = writeln!(out, "A {} {} {}", a, d + 1, s);
        }
        out
    }

    pub fn parse(text: &str) -> Result<ReplayLog, ReplayError> {
        let bad = |line: usize, message: String| ReplayError::Malformed { line, message };
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| bad(1, "empty log".into()))?;
        let mut tokens = head.split(' ');
        if tokens.next() != Some(REPLAY_MAGIC) {
            return Err(bad(1, format!("expected {REPLAY_MAGIC} header")));
        }
        match tokens.next() {
            Some(REPLAY_VERSION) => {}
            Some(v) => return Err(ReplayError::VersionMismatch { found: v.to_string() }),
            None => return Err(bad(1, "missing version".into())),
        }
        let (mut suite_hash, mut model, mut path) = (None, None, None);
        for t in tokens {
            match t.split_once('=') {
                Some(("suite", v)) => suite_hash = Some(v.to_string()),
                Some(("model", v)) => model = Some(v.to_string()),
                Some(("path", v)) => {
                    path = v.parse::<usize>().ok().filter(|&p| p >= 1).map(|p| p - 1)
                }
                _ => return Err(bad(1, format!("unexpected header token {t:?}"))),
            }
        }
        let (Some(suite_hash), Some(model), Some(path)) = (suite_hash, model, path) else {
            return Err(bad(1, "header needs suite, model and path".into()));
        };
        let initial = lines
            .next()
            .and_then(|l| l.strip_prefix("I "))
            .ok_or_else(|| bad(2, "expected the initial state line".into()))?;
        let initial = ModelState::parse(initial).map_err(|e| bad(2, e.to_string()))?;
        let mut steps = Vec::new();
        for (i, l) in lines.enumerate() {
            let line = i + 3;
            let rest = l.strip_prefix("A ").ok_or_else(|| bad(line, "expected an A line".into()))?;
            let mut c = Cursor::new(rest);
            let mut token = || {
                c.skip_spaces();
                c.word().map_err(|e| bad(line, e.to_string()))
            };
            let action = Action::parse(token()?).map_err(|e| bad(line, e.to_string()))?;
            let dst = token()?
                .parse::<usize>()
                .ok()
                .filter(|&d| d >= 1)
                .ok_or_else(|| bad(line, "bad destination index".into()))?;
            let state = ModelState::parse(token()?).map_err(|e| bad(line, e.to_string()))?;
            if !c.at_end() {
                return Err(bad(line, "trailing tokens".into()));
            }
            steps.push((action, dst - 1, state));
        }
        Ok(ReplayLog { suite_hash, model, path, initial, steps })
    }

    /// Rejects a log that was not produced from `suite`.
    pub fn check_suite(&self, suite: &Suite) -> Result<(), ReplayError> {
        if self.suite_hash != suite.hash {
            return Err(ReplayError::StaleLog { log: self.suite_hash.clone(), suite: suite.hash.clone() });
        }
        Ok(())
    }
}

/// Re-executes a replay log on a fresh implementation.
pub fn replay<A: Actor>(log: &ReplayLog, config: &EmulatorConfig<A>) -> Verdict {
    let steps: Vec<(Action, &ModelState)> = log.steps.iter().map(|(a, _, s)| (a.clone(), s)).collect();
    run_steps(config, &log.initial, &steps, log.path)
}
