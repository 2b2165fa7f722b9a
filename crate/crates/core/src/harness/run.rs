//! Experiment execution: environment batches fanned out over a worker
//! pool, each run single-threaded and deterministic.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use super::records::{aggregate, AggregateCurve, Checkpoint, RunRecord};
use super::{
    AlgoSpec, ExperimentConfig, LearnerConfig, MapSpec, TargetSpec, DIVERGENCE_THRESHOLD,
};
use crate::envs::{generate, uniform_initial_state, EnvSpec, StepSampler};
use crate::error::{Error, Result};
use crate::learners::{Learner, LearnerKind, Transition};
use crate::mrp::{exact_source_map, exact_value, partial_source_map, Mrp, SourceMap, ValueVector};
use crate::replay::{replay_step, ReplayMemory};
use crate::rng::{self, StreamPurpose};

#[derive(Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub records: Vec<RunRecord>,
    pub aggregates: Vec<AggregateCurve>,
    /// Batch-mean error at step 0 (that is, mean ‖v*‖₂ since v₀ = 0).
    pub initial_mean_error: f64,
    /// Absolute targets after resolving fraction-of-initial specs.
    pub resolved_targets: Option<Vec<f64>>,
    /// Set when a cancel flag stopped the experiment early; records may
    /// be truncated.
    pub interrupted: bool,
}

pub(super) struct EnvBundle {
    pub mrp: Mrp,
    pub vstar: ValueVector,
    pub exact_map: Option<SourceMap>,
    partials: BTreeMap<(usize, u64), SourceMap>,
}

impl EnvBundle {
    fn map_for(&self, spec: MapSpec) -> &SourceMap {
        match spec {
            MapSpec::Exact => self.exact_map.as_ref().expect("exact map prepared"),
            MapSpec::Partial { n, lambda } => self
                .partials
                .get(&(n, lambda.to_bits()))
                .expect("partial map prepared"),
        }
    }
}

/// Deterministic per-environment seed.
pub fn env_seed(master_seed: u64, env_index: usize) -> u64 {
    use rand::RngCore;
    rng::derive(master_seed, StreamPurpose::EnvGen, env_index as u64, 0).next_u64()
}

/// The environment a config uses at a given batch index.
pub fn environment_for(config: &ExperimentConfig, env_index: usize) -> Result<Mrp> {
    let mut spec = EnvSpec::new(
        config.env.kind,
        config.env.gamma,
        env_seed(config.master_seed, env_index),
    );
    spec.reward_noise = config.env.reward_noise;
    generate(&spec)
}

/// The transition stream every learner sees on one environment.
pub fn transition_stream(
    config: &ExperimentConfig,
    env_index: usize,
    len: usize,
) -> Result<Vec<Transition>> {
    let mrp = environment_for(config, env_index)?;
    let sampler = StepSampler::new(&mrp).with_reward_noise(config.env.reward_noise);
    let mut rng = rng::derive(config.master_seed, StreamPurpose::Trajectory, env_index as u64, 0);
    let mut state = uniform_initial_state(mrp.num_states(), &mut rng);
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let (reward, next) = sampler.sample(state, &mut rng);
        out.push(Transition { from: state, reward, to: next });
        state = next;
    }
    Ok(out)
}

fn build_bundle(config: &ExperimentConfig, env_index: usize) -> Result<EnvBundle> {
    let mrp = environment_for(config, env_index)?;
    let vstar = exact_value(&mrp)?;
    let needs_exact = config.learners.iter().any(|l| {
        l.algo.tracks_map_error() || l.algo.needed_map() == Some(MapSpec::Exact)
    });
    let exact_map = needs_exact.then(|| exact_source_map(&mrp)).transpose()?;
    let mut partials = BTreeMap::new();
    for l in &config.learners {
        if let Some(MapSpec::Partial { n, lambda }) = l.algo.needed_map() {
            partials
                .entry((n, lambda.to_bits()))
                .or_insert(partial_source_map(&mrp, n, lambda)?);
        }
    }
    Ok(EnvBundle {
        mrp,
        vstar,
        exact_map,
        partials,
    })
}

fn materialize(
    lcfg: &LearnerConfig,
    bundle: &EnvBundle,
    config: &ExperimentConfig,
    env_index: usize,
    config_index: usize,
) -> Result<Learner> {
    use rand::RngCore;
    let n = bundle.mrp.num_states();
    let gamma = config.env.gamma;
    let kind = match &lcfg.algo {
        AlgoSpec::Td0 => LearnerKind::Td0,
        AlgoSpec::TdLambda { lambda } => LearnerKind::TdLambda { lambda: *lambda },
        AlgoSpec::IdealSource { map } => LearnerKind::IdealSource {
            map: bundle.map_for(*map).clone(),
        },
        AlgoSpec::TdSource { lambda } => LearnerKind::TdSource { lambda: *lambda },
        AlgoSpec::TdSr { lambda } => LearnerKind::TdSr { lambda: *lambda },
        AlgoSpec::TdSourceSr { lambda, row_first } => LearnerKind::TdSourceSr {
            lambda: *lambda,
            row_first: *row_first,
        },
        AlgoSpec::White { lambda } => LearnerKind::White {
            lambda: *lambda,
            fixed_map: None,
        },
        AlgoSpec::PseudoRewardDescent { lambda } => LearnerKind::PseudoRewardDescent {
            lambda: *lambda,
            fixed_map: None,
        },
        AlgoSpec::SrRewardDecomposition { lambda, reward_rate } => {
            LearnerKind::SrRewardDecomposition {
                lambda: *lambda,
                fixed_map: None,
                reward_rate: *reward_rate,
            }
        }
        AlgoSpec::TripleModel { lambda, map_from_model } => LearnerKind::TripleModel {
            lambda: *lambda,
            map_from_model: *map_from_model,
        },
        AlgoSpec::Ilstd { variant, m } => LearnerKind::Ilstd {
            variant: *variant,
            m: *m,
            seed: rng::derive(
                config.master_seed,
                StreamPurpose::LearnerInternal,
                env_index as u64,
                config_index as u64,
            )
            .next_u64(),
        },
    };
    let mut learner = Learner::new(kind, n, gamma)?;
    learner.set_ratio_cap(lcfg.ratio_cap);
    learner.set_lambda_anneal(lcfg.lambda_anneal);
    Ok(learner)
}

struct RunOutput {
    record: RunRecord,
    interrupted: bool,
}

fn run_one(
    config: &ExperimentConfig,
    lcfg: &LearnerConfig,
    config_index: usize,
    bundle: &EnvBundle,
    env_index: usize,
    cancel: Option<&AtomicBool>,
) -> Result<RunOutput> {
    let started = Instant::now();
    let n = bundle.mrp.num_states();
    let mut traj_rng = rng::derive(
        config.master_seed,
        StreamPurpose::Trajectory,
        env_index as u64,
        0,
    );
    let initial = uniform_initial_state(n, &mut traj_rng);
    let sampler = StepSampler::new(&bundle.mrp).with_reward_noise(config.env.reward_noise);

    let mut learner = materialize(lcfg, bundle, config, env_index, config_index)?;
    learner.begin_run_scheduled(initial, &lcfg.beta)?;

    let mut memory = ReplayMemory::new();
    let mut replay_rng = rng::derive(
        config.master_seed,
        StreamPurpose::Replay,
        env_index as u64,
        config_index as u64,
    );

    let track_s = lcfg.algo.tracks_map_error();
    let mut record = RunRecord {
        learner_id: lcfg.learner_id.clone(),
        config_index,
        env_index,
        fingerprint: config.fingerprint(),
        checkpoints: Vec::with_capacity((config.horizon / config.checkpoint_every + 2) as usize),
        diverged_at: None,
        wall_time: Default::default(),
    };

    let take_checkpoint = |learner: &mut Learner, step: u64, record: &mut RunRecord| -> bool {
        let v = learner.value_estimate();
        let err = v.distance(&bundle.vstar);
        if !err.is_finite() || v.inf_norm() > DIVERGENCE_THRESHOLD {
            record.diverged_at = Some(step);
            return false;
        }
        let s_error = if track_s {
            learner.learned_map().map(|m| {
                m.frobenius_diff(bundle.exact_map.as_ref().expect("prepared").matrix())
            })
        } else {
            None
        };
        record.checkpoints.push(Checkpoint {
            step,
            value_error: err,
            s_error,
        });
        true
    };

    take_checkpoint(&mut learner, 0, &mut record);
    let mut interrupted = false;
    if record.diverged_at.is_none() {
        let mut state = initial;
        for step in 1..=config.horizon {
            let (reward, next) = sampler.sample(state, &mut traj_rng);
            let t = Transition {
                from: state,
                reward,
                to: next,
            };
            state = next;
            if lcfg.replay_k > 0 {
                memory.push(t);
            }
            learner.step_scheduled(&t, step, &lcfg.alpha, &lcfg.beta)?;
            if lcfg.replay_k > 0 {
                replay_step(
                    &memory,
                    &mut learner,
                    lcfg.replay_k,
                    &mut replay_rng,
                    step,
                    &lcfg.alpha,
                    &lcfg.beta,
                    lcfg.replay_model_updates,
                )?;
            }
            if step % config.checkpoint_every == 0 || step == config.horizon {
                if !take_checkpoint(&mut learner, step, &mut record) {
                    break;
                }
                if cancel.map(|c| c.load(Ordering::Relaxed)).unwrap_or(false) {
                    interrupted = true;
                    break;
                }
            }
        }
    }
    record.wall_time = started.elapsed();
    Ok(RunOutput {
        record,
        interrupted,
    })
}

/// Run the full grid: batch environments × learner configs. Deterministic
/// given the config; `workers` bounds the rayon pool (None = default);
/// `cancel` allows cooperative interruption at checkpoint granularity.
pub fn run_experiment(
    config: &ExperimentConfig,
    workers: Option<usize>,
    cancel: Option<&AtomicBool>,
) -> Result<ExperimentResult> {
    config.validate()?;

    let body = || -> Result<(Vec<RunRecord>, bool)> {
        let bundles: Vec<EnvBundle> = (0..config.batch)
            .into_par_iter()
            .map(|e| build_bundle(config, e))
            .collect::<Result<_>>()?;

        let jobs: Vec<(usize, usize)> = (0..config.batch)
            .flat_map(|e| (0..config.learners.len()).map(move |c| (e, c)))
            .collect();

        let outputs: Vec<RunOutput> = jobs
            .par_iter()
            .map(|&(env_index, config_index)| {
                if cancel.map(|c| c.load(Ordering::Relaxed)).unwrap_or(false) {
                    // Produce an empty placeholder record; filtered below.
                    return Ok(RunOutput {
                        record: RunRecord {
                            learner_id: config.learners[config_index].learner_id.clone(),
                            config_index,
                            env_index,
                            fingerprint: config.fingerprint(),
                            checkpoints: Vec::new(),
                            diverged_at: None,
                            wall_time: Default::default(),
                        },
                        interrupted: true,
                    });
                }
                run_one(
                    config,
                    &config.learners[config_index],
                    config_index,
                    &bundles[env_index],
                    env_index,
                    cancel,
                )
            })
            .collect::<Result<_>>()?;

        let interrupted = outputs.iter().any(|o| o.interrupted);
        let mut records: Vec<RunRecord> = outputs
            .into_iter()
            .map(|o| o.record)
            .filter(|r| !r.checkpoints.is_empty() || r.diverged_at.is_some())
            .collect();
        // Deterministic order: config-major, then environment.
        records.sort_by_key(|r| (r.config_index, r.env_index));
        Ok((records, interrupted))
    };

    let (records, interrupted) = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::config(format!("worker pool: {e}")))?
            .install(body),
        None => body(),
    }?;

    let aggregates = aggregate(&records);
    let initial_mean_error = {
        // All configs share the stream and v₀ = 0, so any config's step-0
        // mean works; take the first.
        aggregates
            .first()
            .and_then(|a| a.checkpoints.first())
            .map(|c| c.mean_value_error)
            .unwrap_or(0.0)
    };
    let resolved_targets = config.targets.as_ref().map(|t| match t {
        TargetSpec::Absolute(v) => v.clone(),
        TargetSpec::FractionOfInitial(f) => {
            f.iter().map(|x| x * initial_mean_error).collect()
        }
    });

    Ok(ExperimentResult {
        config: config.clone(),
        records,
        aggregates,
        initial_mean_error,
        resolved_targets,
        interrupted,
    })
}
