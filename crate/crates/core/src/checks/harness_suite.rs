//! Harness invariants: stream sharing, determinism, aggregation
//! arithmetic, checkpoint structure, and a miniature ordering run
//! standing in for desk-scale soundness.

use super::Recorder;
use crate::envs::EnvKind;
use crate::error::Result;
use crate::harness::{
    best_of_grid, run_experiment, transition_stream, AlgoSpec, EnvTemplate, ExperimentConfig,
    LearnerConfig, MapSpec, Selector,
};
use crate::schedules::Schedule;

pub(super) fn run(seed: u64, r: &mut Recorder) -> Result<()> {
    stream_sharing_and_determinism(seed, r)?;
    aggregation_and_checkpoints(seed, r)?;
    zero_horizon(seed, r)?;
    mini_ordering(seed, r)?;
    Ok(())
}

fn tiny_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: "tiny".into(),
        env: EnvTemplate {
            kind: EnvKind::RandomMrp {
                num_states: 15,
                out_degree: 4,
            },
            gamma: 0.9,
            reward_noise: 0.0,
        },
        batch: 3,
        horizon: 450,
        checkpoint_every: 200,
        master_seed: seed,
        targets: None,
        learners: vec![
            LearnerConfig::new("td0", AlgoSpec::Td0, Schedule::Fixed(0.2), Schedule::Fixed(0.1)),
            LearnerConfig::new(
                "source-sr",
                AlgoSpec::TdSourceSr {
                    lambda: 1.0,
                    row_first: false,
                },
                Schedule::Fixed(0.2),
                Schedule::HarmonicPerState {
                    base: 1.0,
                    floor: 0.05,
                },
            ),
        ],
    }
}

fn stream_sharing_and_determinism(seed: u64, r: &mut Recorder) -> Result<()> {
    let config = tiny_config(seed);
    let a = transition_stream(&config, 1, 300)?;
    let b = transition_stream(&config, 1, 300)?;
    r.check(
        "stream-regeneration-identical",
        a == b,
        "same env index, byte-identical transitions",
    );
    let c = transition_stream(&config, 2, 300)?;
    r.check("streams-differ-across-envs", a != c, "distinct env streams");

    let run1 = run_experiment(&config, Some(2), None)?;
    let run2 = run_experiment(&config, Some(1), None)?;
    let render = |res: &crate::harness::ExperimentResult| {
        res.records
            .iter()
            .map(|rec| {
                let cps: Vec<String> = rec
                    .checkpoints
                    .iter()
                    .map(|c| {
                        format!(
                            "{}:{}:{}",
                            c.step,
                            crate::io::fmt_f64(c.value_error),
                            c.s_error.map(crate::io::fmt_f64).unwrap_or_default()
                        )
                    })
                    .collect();
                format!(
                    "{}/{}/{}/{:?}/{}",
                    rec.learner_id,
                    rec.config_index,
                    rec.env_index,
                    rec.diverged_at,
                    cps.join(";")
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    r.check(
        "experiment-determinism",
        render(&run1) == render(&run2),
        "identical records across reruns and worker counts",
    );
    Ok(())
}

fn aggregation_and_checkpoints(seed: u64, r: &mut Recorder) -> Result<()> {
    let config = tiny_config(seed);
    let result = run_experiment(&config, None, None)?;
    // Batch mean equals the arithmetic mean of per-env errors.
    let mut worst = 0.0f64;
    for curve in &result.aggregates {
        for cp in &curve.checkpoints {
            let runs: Vec<f64> = result
                .records
                .iter()
                .filter(|rec| rec.config_index == curve.config_index)
                .filter_map(|rec| {
                    rec.checkpoints
                        .iter()
                        .find(|c| c.step == cp.step)
                        .map(|c| c.value_error)
                })
                .collect();
            let mean: f64 = runs.iter().sum::<f64>() / runs.len() as f64;
            worst = worst.max((mean - cp.mean_value_error).abs());
        }
    }
    r.le("aggregation-arithmetic-mean", worst, 1e-12);

    let mut monotone = true;
    let mut within = true;
    for rec in &result.records {
        for pair in rec.checkpoints.windows(2) {
            if pair[1].step <= pair[0].step {
                monotone = false;
            }
        }
        if rec.checkpoints.iter().any(|c| c.step > config.horizon) {
            within = false;
        }
        if rec.checkpoints.last().map(|c| c.step) != Some(config.horizon) {
            monotone = false;
        }
    }
    r.check(
        "checkpoints-monotone-within-horizon",
        monotone && within,
        "strictly increasing, final at horizon",
    );
    Ok(())
}

fn zero_horizon(seed: u64, r: &mut Recorder) -> Result<()> {
    let mut config = tiny_config(seed);
    config.batch = 1;
    config.horizon = 0;
    config.learners.truncate(1);
    let result = run_experiment(&config, None, None)?;
    let rec = &result.records[0];
    let vstar_norm = {
        let mrp = crate::harness::environment_for(&config, 0)?;
        crate::mrp::exact_value(&mrp)?.0.norm()
    };
    let ok = rec.checkpoints.len() == 1
        && rec.checkpoints[0].step == 0
        && (rec.checkpoints[0].value_error - vstar_norm).abs() < 1e-12;
    r.check(
        "zero-horizon-single-checkpoint",
        ok,
        "one step-0 checkpoint with error ‖v*‖₂",
    );
    Ok(())
}

/// Miniature ordering: with known maps of increasing depth, better maps
/// reach lower final error at their best annealed schedule. Stands in
/// for the full desk presets exercised by the acceptance suite.
fn mini_ordering(seed: u64, r: &mut Recorder) -> Result<()> {
    let alphas = crate::schedules::annealed_grid();
    let mut learners = Vec::new();
    for (id, map) in [
        ("s1", MapSpec::Partial { n: 1, lambda: 1.0 }),
        ("s2", MapSpec::Partial { n: 2, lambda: 1.0 }),
        ("s-full", MapSpec::Exact),
    ] {
        for &alpha in &alphas {
            learners.push(LearnerConfig::new(
                id,
                AlgoSpec::IdealSource { map },
                alpha,
                Schedule::Fixed(0.1),
            ));
        }
    }
    let config = ExperimentConfig {
        name: "mini-ordering".into(),
        env: EnvTemplate {
            kind: EnvKind::Gridworld3d {
                dims: [4, 4, 4],
                num_reward_states: 5,
            },
            gamma: 0.95,
            reward_noise: 0.0,
        },
        batch: 4,
        horizon: 8_000,
        checkpoint_every: 1_000,
        master_seed: seed,
        targets: None,
        learners,
    };
    let result = run_experiment(&config, None, None)?;
    let best = best_of_grid(&result.aggregates, Selector::FinalError)?;
    let err_of = |id: &str| {
        best.iter()
            .find(|c| c.learner_id == id)
            .and_then(|c| c.final_error())
            .unwrap_or(f64::INFINITY)
    };
    let (e1, e2, ef) = (err_of("s1"), err_of("s2"), err_of("s-full"));
    r.check(
        "scale-down-ordering",
        e1 > e2 && e2 > ef,
        format!("s1 {e1:.3} > s2 {e2:.3} > s-full {ef:.3}"),
    );
    Ok(())
}
