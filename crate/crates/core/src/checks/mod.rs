//! Invariant suites behind a uniform pass/fail interface.
//!
//! Each module of the crate contributes one suite; `run_suite` executes
//! them against one or more master seeds and returns per-check outcomes.
//! The CLI's `check` command and the acceptance tests share these
//! implementations.

pub mod oracles;

mod envs_suite;
mod harness_suite;
mod learners_suite;
mod mrp_suite;
mod replay_suite;
mod schedules_suite;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub(crate) fn new(
        suite: &'static str,
        name: impl Into<String>,
        passed: bool,
        detail: impl Into<String>,
    ) -> Self {
        CheckOutcome {
            suite,
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}::{}", self.suite, self.name)?;
        if !self.detail.is_empty() {
            write!(f, " — {}", self.detail)?;
        }
        Ok(())
    }
}

/// Helper collecting outcomes for one suite.
pub(crate) struct Recorder {
    suite: &'static str,
    out: Vec<CheckOutcome>,
}

impl Recorder {
    fn new(suite: &'static str) -> Self {
        Recorder {
            suite,
            out: Vec::new(),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.out
            .push(CheckOutcome::new(self.suite, name, passed, detail));
    }

    /// Assert `value <= bound` with a formatted detail line.
    pub fn le(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.check(name, value <= bound, format!("{value:.3e} <= {bound:.3e}"));
    }

    fn finish(self) -> Vec<CheckOutcome> {
        self.out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    MrpCore,
    Envs,
    Learners,
    Replay,
    Schedules,
    Harness,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mrp-core" => Suite::MrpCore,
            "envs" => Suite::Envs,
            "learners" => Suite::Learners,
            "replay" => Suite::Replay,
            "schedules" => Suite::Schedules,
            "harness" => Suite::Harness,
            "all" => Suite::All,
            other => {
                return Err(Error::config(format!(
                    "unknown suite {other:?} (mrp-core|envs|learners|replay|schedules|harness|all)"
                )))
            }
        })
    }
}

/// Run the selected suite once per master seed.
pub fn run_suite(suite: Suite, master_seeds: &[u64]) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for &seed in master_seeds {
        if matches!(suite, Suite::MrpCore | Suite::All) {
            let mut r = Recorder::new("mrp-core");
            mrp_suite::run(seed, &mut r)?;
            out.extend(r.finish());
        }
        if matches!(suite, Suite::Envs | Suite::All) {
            let mut r = Recorder::new("envs");
            envs_suite::run(seed, &mut r)?;
            out.extend(r.finish());
        }
        if matches!(suite, Suite::Learners | Suite::All) {
            let mut r = Recorder::new("learners");
            learners_suite::run(seed, &mut r)?;
            out.extend(r.finish());
        }
        if matches!(suite, Suite::Replay | Suite::All) {
            let mut r = Recorder::new("replay");
            replay_suite::run(seed, &mut r)?;
            out.extend(r.finish());
        }
        if matches!(suite, Suite::Schedules | Suite::All) {
            let mut r = Recorder::new("schedules");
            schedules_suite::run(seed, &mut r)?;
            out.extend(r.finish());
        }
        if matches!(suite, Suite::Harness | Suite::All) {
            let mut r = Recorder::new("harness");
            harness_suite::run(seed, &mut r)?;
            out.extend(r.finish());
        }
    }
    Ok(out)
}

/// Convenience used by tests: run and panic on the first failure.
pub fn assert_suite(suite: Suite, master_seeds: &[u64]) {
    let outcomes = run_suite(suite, master_seeds).expect("suite execution failed");
    let mut failed = Vec::new();
    for o in &outcomes {
        if !o.passed {
            failed.push(o.to_string());
        }
    }
    assert!(
        failed.is_empty(),
        "{} invariant check(s) failed:\n{}",
        failed.len(),
        failed.join("\n")
    );
}
