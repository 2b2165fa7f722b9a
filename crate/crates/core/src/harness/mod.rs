//! Seeded, reproducible experiment orchestration.
//!
//! An experiment is an environment template, a batch size, a horizon,
//! and a list of learner configurations (typically a schedule grid).
//! Every learner in the experiment consumes the identical transition
//! stream per environment; all randomness derives from the master seed
//! through the documented streams in [`crate::rng`]. Results merge in
//! config order regardless of worker scheduling, so rerunning a config
//! reproduces its CSVs byte for byte.

mod config;
mod presets;
mod records;
mod run;
mod select;

pub use config::parse_config;
pub use presets::{preset, preset_names, Scale};
pub use records::{
    aggregate, fingerprint, write_aggregates_csv, write_runs_csv, AggregateCheckpoint,
    AggregateCurve, Checkpoint, RunRecord,
};
pub use run::{env_seed, environment_for, run_experiment, transition_stream, ExperimentResult};
pub use select::{
    best_of_grid, best_of_grid_by_s_error, steps_to_target, Selector, TargetRow, TargetTable,
};

use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::learners::{IlstdVariant, LambdaAnneal};
use crate::schedules::Schedule;

/// Value threshold beyond which a run is flagged divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

/// Source-map choice for learners that take a fixed map, resolved per
/// environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapSpec {
    Exact,
    Partial { n: usize, lambda: f64 },
}

impl MapSpec {
    pub fn label(&self) -> String {
        match self {
            MapSpec::Exact => "exact".into(),
            MapSpec::Partial { n, lambda } => format!("partial:{n},{lambda}"),
        }
    }
}

/// Environment-independent algorithm description; materialized into a
/// [`crate::learners::LearnerKind`] per environment.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgoSpec {
    Td0,
    TdLambda { lambda: f64 },
    IdealSource { map: MapSpec },
    TdSource { lambda: f64 },
    TdSr { lambda: f64 },
    TdSourceSr { lambda: f64, row_first: bool },
    White { lambda: f64 },
    PseudoRewardDescent { lambda: f64 },
    SrRewardDecomposition { lambda: f64, reward_rate: Option<f64> },
    TripleModel { lambda: f64, map_from_model: bool },
    Ilstd { variant: IlstdVariant, m: usize },
}

impl AlgoSpec {
    pub fn label(&self) -> String {
        match self {
            AlgoSpec::Td0 => "td0".into(),
            AlgoSpec::TdLambda { lambda } => format!("td-lambda:{lambda}"),
            AlgoSpec::IdealSource { map } => format!("ideal-source:{}", map.label()),
            AlgoSpec::TdSource { lambda } => format!("td-source:{lambda}"),
            AlgoSpec::TdSr { lambda } => format!("td-sr:{lambda}"),
            AlgoSpec::TdSourceSr { lambda, row_first } => {
                if *row_first {
                    format!("td-source-sr:{lambda}:row-first")
                } else {
                    format!("td-source-sr:{lambda}")
                }
            }
            AlgoSpec::White { lambda } => format!("white:{lambda}"),
            AlgoSpec::PseudoRewardDescent { lambda } => format!("pseudo-reward-descent:{lambda}"),
            AlgoSpec::SrRewardDecomposition { lambda, .. } => {
                format!("sr-reward-decomposition:{lambda}")
            }
            AlgoSpec::TripleModel { lambda, .. } => format!("triple-model:{lambda}"),
            AlgoSpec::Ilstd { variant, m } => match variant {
                IlstdVariant::Random => format!("ilstd-random:m={m}"),
                IlstdVariant::Greedy => format!("ilstd-greedy:m={m}"),
            },
        }
    }

    /// Does this learner maintain a map model whose Frobenius error
    /// should be tracked against the exact source map?
    pub fn tracks_map_error(&self) -> bool {
        matches!(
            self,
            AlgoSpec::TdSource { .. }
                | AlgoSpec::TdSr { .. }
                | AlgoSpec::TdSourceSr { .. }
                | AlgoSpec::White { .. }
                | AlgoSpec::PseudoRewardDescent { .. }
                | AlgoSpec::SrRewardDecomposition { .. }
                | AlgoSpec::TripleModel { .. }
        )
    }

    fn needed_map(&self) -> Option<MapSpec> {
        match self {
            AlgoSpec::IdealSource { map } => Some(*map),
            _ => None,
        }
    }
}

/// One cell of the experiment grid: an algorithm bound to its schedules
/// and replay settings.
#[derive(Debug, Clone)]
pub struct LearnerConfig {
    /// Grouping key for best-of-grid selection; all schedule cells of
    /// one logical learner share it.
    pub learner_id: String,
    pub algo: AlgoSpec,
    pub alpha: Schedule,
    pub beta: Schedule,
    /// Replayed updates per real step.
    pub replay_k: usize,
    /// Replayed transitions also update map/transition/reward models and
    /// counts (the per-transition reading of the update rules). False
    /// restricts replays to value updates.
    pub replay_model_updates: bool,
    pub ratio_cap: Option<f64>,
    pub lambda_anneal: Option<LambdaAnneal>,
}

impl LearnerConfig {
    pub fn new(
        learner_id: impl Into<String>,
        algo: AlgoSpec,
        alpha: Schedule,
        beta: Schedule,
    ) -> Self {
        LearnerConfig {
            learner_id: learner_id.into(),
            algo,
            alpha,
            beta,
            replay_k: 0,
            replay_model_updates: true,
            ratio_cap: None,
            lambda_anneal: None,
        }
    }

    pub fn with_replay(mut self, k: usize) -> Self {
        self.replay_k = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replay_k > 0 {
            if let AlgoSpec::TdLambda { lambda } = self.algo {
                if lambda > 0.0 {
                    return Err(Error::config(format!(
                        "learner {}: eligibility traces are trajectory-bound; \
                         TD(lambda={lambda}) cannot use replay",
                        self.learner_id
                    )));
                }
            }
        }
        Ok(())
    }

    fn canonical(&self) -> String {
        format!(
            "{}|{}|a={}|b={}|k={}|mu={}|cap={:?}|anneal={:?}",
            self.learner_id,
            self.algo.label(),
            self.alpha.label(),
            self.beta.label(),
            self.replay_k,
            self.replay_model_updates,
            self.ratio_cap,
            self.lambda_anneal.map(|a| (a.target, a.over_steps)),
        )
    }
}

/// Environment template; the per-environment seed comes from the master
/// seed and the batch index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvTemplate {
    pub kind: EnvKind,
    pub gamma: f64,
    pub reward_noise: f64,
}

/// Error targets for steps-to-target tables.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    Absolute(Vec<f64>),
    /// Fractions of the measured initial batch-mean error (step 0).
    FractionOfInitial(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub env: EnvTemplate,
    pub batch: usize,
    pub horizon: u64,
    pub checkpoint_every: u64,
    pub master_seed: u64,
    pub targets: Option<TargetSpec>,
    pub learners: Vec<LearnerConfig>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::config("batch size must be >= 1"));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::config("checkpoint_every must be >= 1"));
        }
        if self.learners.is_empty() {
            return Err(Error::config("experiment needs at least one learner"));
        }
        if let Some(TargetSpec::Absolute(t) | TargetSpec::FractionOfInitial(t)) = &self.targets {
            if t.is_empty() || t.iter().any(|&x| x <= 0.0) {
                return Err(Error::config("targets must be positive"));
            }
        }
        for l in &self.learners {
            l.validate()?;
        }
        Ok(())
    }

    /// Canonical text used for fingerprinting.
    pub fn canonical(&self) -> String {
        let mut s = format!(
            "name={}|env={:?}|gamma={}|noise={}|batch={}|horizon={}|every={}|seed={}|targets={:?}\n",
            self.name,
            self.env.kind,
            self.env.gamma,
            self.env.reward_noise,
            self.batch,
            self.horizon,
            self.checkpoint_every,
            self.master_seed,
            self.targets,
        );
        for l in &self.learners {
            s.push_str(&l.canonical());
            s.push('\n');
        }
        s
    }

    pub fn fingerprint(&self) -> u64 {
        fingerprint(&self.canonical())
    }
}
