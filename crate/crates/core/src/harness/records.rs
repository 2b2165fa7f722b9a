//! Run records, batch aggregation, and the CSV output contract.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use crate::error::Result;
use crate::io::{atomic_write, fmt_f64};

/// One metric sample of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub step: u64,
    /// ‖v_n − v*‖₂.
    pub value_error: f64,
    /// √Σ(S₀ − S)² when the learner maintains a map model.
    pub s_error: Option<f64>,
}

/// Error time series of one (learner config, environment) run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub learner_id: String,
    pub config_index: usize,
    pub env_index: usize,
    /// Fingerprint of the experiment configuration that produced this run.
    pub fingerprint: u64,
    pub checkpoints: Vec<Checkpoint>,
    /// Real step at which ‖v‖∞ left [0, 1e6] or stopped being finite.
    pub diverged_at: Option<u64>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateCheckpoint {
    pub step: u64,
    pub mean_value_error: f64,
    pub mean_s_error: Option<f64>,
    /// Runs contributing to this step's mean.
    pub runs: usize,
}

/// Batch-mean curve of one learner config across the environment batch.
#[derive(Debug, Clone)]
pub struct AggregateCurve {
    pub learner_id: String,
    pub config_index: usize,
    pub checkpoints: Vec<AggregateCheckpoint>,
    pub diverged_runs: usize,
}

impl AggregateCurve {
    pub fn final_error(&self) -> Option<f64> {
        self.checkpoints.last().map(|c| c.mean_value_error)
    }

    pub fn final_s_error(&self) -> Option<f64> {
        self.checkpoints.last().and_then(|c| c.mean_s_error)
    }

    /// Trapezoidal area under the value-error curve.
    pub fn area_under_curve(&self) -> Option<f64> {
        if self.checkpoints.len() < 2 {
            return self.checkpoints.first().map(|c| c.mean_value_error);
        }
        let mut area = 0.0;
        for w in self.checkpoints.windows(2) {
            let dt = (w[1].step - w[0].step) as f64;
            area += 0.5 * (w[0].mean_value_error + w[1].mean_value_error) * dt;
        }
        Some(area)
    }

    /// Mean value error at the checkpoint closest to `step`.
    pub fn error_near_step(&self, step: u64) -> Option<f64> {
        self.checkpoints
            .iter()
            .min_by_key(|c| c.step.abs_diff(step))
            .map(|c| c.mean_value_error)
    }
}

/// Group run records by config index and average per checkpoint step.
/// Diverged runs contribute their recorded prefix; the cell is flagged.
pub fn aggregate(records: &[RunRecord]) -> Vec<AggregateCurve> {
    let mut by_config: BTreeMap<usize, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_config.entry(r.config_index).or_default().push(r);
    }
    let mut out = Vec::with_capacity(by_config.len());
    for (config_index, runs) in by_config {
        let mut acc: BTreeMap<u64, (f64, f64, usize, usize)> = BTreeMap::new();
        for run in &runs {
            for c in &run.checkpoints {
                let slot = acc.entry(c.step).or_insert((0.0, 0.0, 0, 0));
                slot.0 += c.value_error;
                slot.2 += 1;
                if let Some(s) = c.s_error {
                    slot.1 += s;
                    slot.3 += 1;
                }
            }
        }
        let checkpoints = acc
            .into_iter()
            .map(|(step, (v_sum, s_sum, n, n_s))| AggregateCheckpoint {
                step,
                mean_value_error: v_sum / n as f64,
                mean_s_error: (n_s > 0).then(|| s_sum / n_s as f64),
                runs: n,
            })
            .collect();
        out.push(AggregateCurve {
            learner_id: runs[0].learner_id.clone(),
            config_index,
            checkpoints,
            diverged_runs: runs.iter().filter(|r| r.diverged_at.is_some()).count(),
        });
    }
    out
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// One row per checkpoint per run:
/// `learner_id,config_id,env_index,step,value_error,s_error,diverged`.
pub fn write_runs_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        use std::io::Write;
        writeln!(w, "learner_id,config_id,env_index,step,value_error,s_error,diverged")?;
        for r in records {
            let diverged = if r.diverged_at.is_some() { "true" } else { "false" };
            for c in &r.checkpoints {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    r.learner_id,
                    r.config_index,
                    r.env_index,
                    c.step,
                    fmt_f64(c.value_error),
                    opt_f64(c.s_error),
                    diverged
                )?;
            }
        }
        Ok(())
    })
}

/// Batch means: `learner_id,config_id,step,value_error,s_error,diverged_runs`.
pub fn write_aggregates_csv(curves: &[AggregateCurve], path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        use std::io::Write;
        writeln!(w, "learner_id,config_id,step,value_error,s_error,diverged_runs")?;
        for curve in curves {
            for c in &curve.checkpoints {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    curve.learner_id,
                    curve.config_index,
                    c.step,
                    fmt_f64(c.mean_value_error),
                    opt_f64(c.mean_s_error),
                    curve.diverged_runs
                )?;
            }
        }
        Ok(())
    })
}

/// FNV-1a over the canonical config text; stable across runs and builds.
pub fn fingerprint(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
