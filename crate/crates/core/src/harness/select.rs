//! Grid selection and steps-to-target tables.

use std::collections::BTreeSet;
use std::path::Path;

use super::records::AggregateCurve;
use crate::error::{Error, Result};
use crate::io::atomic_write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    FinalError,
    AreaUnderCurve,
}

/// Per learner id, the best schedule cell under the selector. Cells with
/// any diverged run are excluded; learners whose every cell diverged are
/// dropped. Ties break to the lower config index.
pub fn best_of_grid<'a>(
    curves: &'a [AggregateCurve],
    selector: Selector,
) -> Result<Vec<&'a AggregateCurve>> {
    if curves.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut order: Vec<&str> = Vec::new();
    let mut seen = BTreeSet::new();
    for c in curves {
        if seen.insert(c.learner_id.as_str()) {
            order.push(&c.learner_id);
        }
    }
    let mut out = Vec::new();
    for id in order {
        let best = curves
            .iter()
            .filter(|c| c.learner_id == id && c.diverged_runs == 0)
            .filter_map(|c| {
                let score = match selector {
                    Selector::FinalError => c.final_error(),
                    Selector::AreaUnderCurve => c.area_under_curve(),
                }?;
                score.is_finite().then_some((c, score))
            })
            .min_by(|(a, sa), (b, sb)| {
                sa.partial_cmp(sb)
                    .unwrap()
                    .then(a.config_index.cmp(&b.config_index))
            });
        if let Some((c, _)) = best {
            out.push(c);
        }
    }
    Ok(out)
}

/// Same, selecting by final map-model error instead.
pub fn best_of_grid_by_s_error<'a>(curves: &'a [AggregateCurve]) -> Result<Vec<&'a AggregateCurve>> {
    if curves.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut order: Vec<&str> = Vec::new();
    let mut seen = BTreeSet::new();
    for c in curves {
        if seen.insert(c.learner_id.as_str()) {
            order.push(&c.learner_id);
        }
    }
    let mut out = Vec::new();
    for id in order {
        let best = curves
            .iter()
            .filter(|c| c.learner_id == id && c.diverged_runs == 0)
            .filter_map(|c| c.final_s_error().map(|s| (c, s)))
            .filter(|(_, s)| s.is_finite())
            .min_by(|(a, sa), (b, sb)| {
                sa.partial_cmp(sb)
                    .unwrap()
                    .then(a.config_index.cmp(&b.config_index))
            });
        if let Some((c, _)) = best {
            out.push(c);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TargetRow {
    pub learner_id: String,
    /// First real step at which the batch-mean error fell below each
    /// target, minimized over the learner's schedule grid; `None` when
    /// the horizon was insufficient.
    pub steps: Vec<Option<u64>>,
}

#[derive(Debug, Clone)]
pub struct TargetTable {
    pub targets: Vec<f64>,
    pub rows: Vec<TargetRow>,
}

/// Table-style summary: per learner and target, the earliest step at
/// which any non-divergent schedule's batch-mean error dropped below the
/// target.
pub fn steps_to_target(curves: &[AggregateCurve], targets: &[f64]) -> Result<TargetTable> {
    if targets.is_empty() || targets.iter().any(|&t| t <= 0.0) {
        return Err(Error::config("targets must be positive"));
    }
    if targets.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::config("targets must be strictly decreasing"));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut seen = BTreeSet::new();
    for c in curves {
        if seen.insert(c.learner_id.as_str()) {
            order.push(&c.learner_id);
        }
    }
    let rows = order
        .into_iter()
        .map(|id| {
            let steps = targets
                .iter()
                .map(|&target| {
                    curves
                        .iter()
                        .filter(|c| c.learner_id == id && c.diverged_runs == 0)
                        .filter_map(|c| {
                            c.checkpoints
                                .iter()
                                .find(|p| p.mean_value_error < target)
                                .map(|p| p.step)
                        })
                        .min()
                })
                .collect();
            TargetRow {
                learner_id: id.to_string(),
                steps,
            }
        })
        .collect();
    Ok(TargetTable {
        targets: targets.to_vec(),
        rows,
    })
}

impl TargetTable {
    pub fn steps_for(&self, learner_id: &str, target_index: usize) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| r.learner_id == learner_id)
            .and_then(|r| r.steps.get(target_index).copied().flatten())
    }

    /// `learner_id,target,steps` rows; empty steps cell means the target
    /// was not reached within the horizon.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        atomic_write(path, |w| {
            use std::io::Write;
            writeln!(w, "learner_id,target,steps")?;
            for row in &self.rows {
                for (t, s) in self.targets.iter().zip(&row.steps) {
                    let cell = s.map(|v| v.to_string()).unwrap_or_default();
                    writeln!(w, "{},{},{}", row.learner_id, crate::io::fmt_f64(*t), cell)?;
                }
            }
            Ok(())
        })
    }
}

impl std::fmt::Display for TargetTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:<28}", "learner")?;
        for t in &self.targets {
            write!(f, "{t:>14.3}")?;
        }
        writeln!(f)?;
        for row in &self.rows {
            write!(f, "{:<28}", row.learner_id)?;
            for s in &row.steps {
                match s {
                    Some(v) => write!(f, "{v:>14}")?,
                    None => write!(f, "{:>14}", "not reached")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
