//! Named experiment presets: the benchmark comparisons at two scales.
//!
//! `desk` keeps every ordering comparison intact on small batches and
//! short horizons (minutes on a laptop); `paper` is the full-size
//! configuration (hours).

use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::learners::IlstdVariant;
use crate::schedules::{annealed_grid, fixed_grid, Schedule};

use super::{
    AlgoSpec, EnvTemplate, ExperimentConfig, LearnerConfig, MapSpec, TargetSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

impl std::str::FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::config(format!("unknown scale {other:?} (desk|paper)"))),
        }
    }
}

pub fn preset_names() -> &'static [&'static str] {
    &[
        "fig2-left",
        "fig2-center",
        "fig2-right",
        "fig3",
        "fig4",
        "fig5",
        "table1",
    ]
}

fn gridworld(scale: Scale, gamma: f64) -> EnvTemplate {
    let kind = match scale {
        Scale::Desk => EnvKind::Gridworld3d {
            dims: [5, 5, 5],
            num_reward_states: 6,
        },
        Scale::Paper => EnvKind::Gridworld3d {
            dims: [10, 10, 10],
            num_reward_states: 50,
        },
    };
    EnvTemplate {
        kind,
        gamma,
        reward_noise: 0.0,
    }
}

fn random_mrp(gamma: f64) -> EnvTemplate {
    EnvTemplate {
        kind: EnvKind::RandomMrp {
            num_states: 100,
            out_degree: 5,
        },
        gamma,
        reward_noise: 0.0,
    }
}

fn batch(scale: Scale) -> usize {
    match scale {
        Scale::Desk => 5,
        Scale::Paper => 30,
    }
}

fn default_beta() -> Schedule {
    Schedule::HarmonicPerState {
        base: 1.0,
        floor: 0.01,
    }
}

fn grid_cells(id: &str, algo: AlgoSpec, alphas: &[Schedule], beta: Schedule) -> Vec<LearnerConfig> {
    alphas
        .iter()
        .map(|&a| LearnerConfig::new(id, algo.clone(), a, beta))
        .collect()
}

/// Source learning with known partial and full maps, annealed-rate grid.
fn fig2_left(scale: Scale, master_seed: u64) -> ExperimentConfig {
    let (horizon, every) = match scale {
        Scale::Desk => (20_000, 500),
        Scale::Paper => (100_000, 1_000),
    };
    let alphas = annealed_grid();
    let mut learners = Vec::new();
    for n in 1..=4usize {
        learners.extend(grid_cells(
            &format!("s{n}"),
            AlgoSpec::IdealSource {
                map: MapSpec::Partial { n, lambda: 1.0 },
            },
            &alphas,
            default_beta(),
        ));
    }
    learners.extend(grid_cells(
        "s-full",
        AlgoSpec::IdealSource { map: MapSpec::Exact },
        &alphas,
        default_beta(),
    ));
    ExperimentConfig {
        name: "fig2-left".into(),
        env: gridworld(scale, 0.95),
        batch: batch(scale),
        horizon,
        checkpoint_every: every,
        master_seed,
        targets: None,
        learners,
    }
}

/// TD(0), TD(λ) over the λ grid, a 4-step map, and the full map.
fn fig2_family(name: &str, scale: Scale, master_seed: u64, alphas: Vec<Schedule>) -> ExperimentConfig {
    let (horizon, every) = match scale {
        Scale::Desk => (20_000, 500),
        Scale::Paper => (100_000, 1_000),
    };
    let mut learners = grid_cells("td0", AlgoSpec::Td0, &alphas, default_beta());
    for tenths in 0..=10u32 {
        let lambda = f64::from(tenths) / 10.0;
        learners.extend(grid_cells(
            "td-lambda",
            AlgoSpec::TdLambda { lambda },
            &alphas,
            default_beta(),
        ));
    }
    learners.extend(grid_cells(
        "s4",
        AlgoSpec::IdealSource {
            map: MapSpec::Partial { n: 4, lambda: 1.0 },
        },
        &alphas,
        default_beta(),
    ));
    learners.extend(grid_cells(
        "s-full",
        AlgoSpec::IdealSource { map: MapSpec::Exact },
        &alphas,
        default_beta(),
    ));
    ExperimentConfig {
        name: name.into(),
        env: gridworld(scale, 0.95),
        batch: batch(scale),
        horizon,
        checkpoint_every: every,
        master_seed,
        targets: None,
        learners,
    }
}

/// Map-learning comparison on random MRPs, per-state harmonic rates
/// annealed to a grid of floors; quality metric is the map error.
fn fig3(scale: Scale, master_seed: u64) -> ExperimentConfig {
    let (horizon, every) = match scale {
        Scale::Desk => (20_000, 200),
        Scale::Paper => (50_000, 500),
    };
    let floors = [0.3, 0.1, 0.03, 0.01, 0.003, 0.001];
    let betas: Vec<Schedule> = floors
        .iter()
        .map(|&floor| Schedule::HarmonicPerState { base: 1.0, floor })
        .collect();
    let alpha = Schedule::HarmonicPerState {
        base: 1.0,
        floor: 0.01,
    };
    let mut learners = Vec::new();
    for (id, algo) in [
        ("td-source", AlgoSpec::TdSource { lambda: 1.0 }),
        ("td-sr", AlgoSpec::TdSr { lambda: 1.0 }),
        (
            "td-source-sr",
            AlgoSpec::TdSourceSr {
                lambda: 1.0,
                row_first: false,
            },
        ),
    ] {
        for &beta in &betas {
            learners.push(LearnerConfig::new(id, algo.clone(), alpha, beta));
        }
    }
    ExperimentConfig {
        name: "fig3".into(),
        env: random_mrp(0.9),
        batch: batch(scale),
        horizon,
        checkpoint_every: every,
        master_seed,
        targets: None,
        learners,
    }
}

/// Direct methods vs SR-reward decomposition at two discounts; best
/// fixed α per method.
fn fig4(scale: Scale, master_seed: u64) -> Vec<ExperimentConfig> {
    let (horizon, every) = match scale {
        Scale::Desk => (20_000, 200),
        Scale::Paper => (200_000, 2_000),
    };
    let alphas = fixed_grid();
    [0.9, 0.95]
        .into_iter()
        .map(|gamma| {
            let mut learners = grid_cells(
                "source-learning",
                AlgoSpec::TdSourceSr {
                    lambda: 1.0,
                    row_first: false,
                },
                &alphas,
                default_beta(),
            );
            learners.extend(grid_cells(
                "white",
                AlgoSpec::White { lambda: 1.0 },
                &alphas,
                default_beta(),
            ));
            learners.extend(grid_cells(
                "pseudo-reward-descent",
                AlgoSpec::PseudoRewardDescent { lambda: 1.0 },
                &alphas,
                default_beta(),
            ));
            // Decomposition has no value-update rate: one cell.
            learners.push(LearnerConfig::new(
                "sr-reward-decomposition",
                AlgoSpec::SrRewardDecomposition {
                    lambda: 1.0,
                    reward_rate: None,
                },
                Schedule::Fixed(0.1),
                default_beta(),
            ));
            ExperimentConfig {
                name: format!("fig4-gamma{gamma}"),
                env: gridworld(scale, gamma),
                batch: batch(scale),
                horizon,
                checkpoint_every: every,
                master_seed,
                targets: None,
                learners,
            }
        })
        .collect()
}

/// Learned-model methods vs ideal source traces, annealed plus fixed
/// rates.
fn fig5(scale: Scale, master_seed: u64) -> ExperimentConfig {
    let (horizon, every) = match scale {
        Scale::Desk => (20_000, 500),
        Scale::Paper => (100_000, 1_000),
    };
    let mut alphas = annealed_grid();
    alphas.extend(fixed_grid());
    let mut learners = grid_cells(
        "td-source-sr",
        AlgoSpec::TdSourceSr {
            lambda: 1.0,
            row_first: false,
        },
        &alphas,
        default_beta(),
    );
    learners.extend(grid_cells(
        "triple-model",
        AlgoSpec::TripleModel {
            lambda: 1.0,
            map_from_model: false,
        },
        &alphas,
        default_beta(),
    ));
    learners.extend(grid_cells(
        "ilstd-random",
        AlgoSpec::Ilstd {
            variant: IlstdVariant::Random,
            m: 1,
        },
        &alphas,
        default_beta(),
    ));
    learners.extend(grid_cells(
        "ilstd-greedy",
        AlgoSpec::Ilstd {
            variant: IlstdVariant::Greedy,
            m: 1,
        },
        &alphas,
        default_beta(),
    ));
    learners.extend(grid_cells(
        "ideal-source",
        AlgoSpec::IdealSource { map: MapSpec::Exact },
        &alphas,
        default_beta(),
    ));
    ExperimentConfig {
        name: "fig5".into(),
        env: gridworld(scale, 0.95),
        batch: batch(scale),
        horizon,
        checkpoint_every: every,
        master_seed,
        targets: None,
        learners,
    }
}

/// Replay comparison: steps to reach target errors at best fixed α.
fn table1(scale: Scale, master_seed: u64) -> ExperimentConfig {
    let (horizon, every, targets) = match scale {
        // Absolute targets assume the full-size environment; desk uses
        // fractions of the measured initial error at matching depths.
        Scale::Desk => (
            100_000,
            125,
            TargetSpec::FractionOfInitial(vec![0.25, 0.18, 0.14]),
        ),
        Scale::Paper => (2_000_000, 2_000, TargetSpec::Absolute(vec![3.0, 2.0, 1.5])),
    };
    let alphas = fixed_grid();
    let source_sr = AlgoSpec::TdSourceSr {
        lambda: 1.0,
        row_first: false,
    };
    let mut learners = grid_cells("td0", AlgoSpec::Td0, &alphas, default_beta());
    learners.extend(
        grid_cells("td0-er", AlgoSpec::Td0, &alphas, default_beta())
            .into_iter()
            .map(|c| c.with_replay(3)),
    );
    learners.extend(grid_cells(
        "td-source-sr",
        source_sr.clone(),
        &alphas,
        default_beta(),
    ));
    learners.extend(
        grid_cells("td-source-sr-er", source_sr, &alphas, default_beta())
            .into_iter()
            .map(|c| c.with_replay(3)),
    );
    // Steps-to-target comparisons resolve single checkpoints; the small
    // desk environments need a larger batch to keep the row ordering
    // out of the noise.
    let batch = match scale {
        Scale::Desk => 10,
        Scale::Paper => 30,
    };
    ExperimentConfig {
        name: "table1".into(),
        env: gridworld(scale, 0.95),
        batch,
        horizon,
        checkpoint_every: every,
        master_seed,
        targets: Some(targets),
        learners,
    }
}

/// Build the named preset. Most presets are one experiment; the
/// two-discount comparison returns one per discount.
pub fn preset(name: &str, scale: Scale, master_seed: u64) -> Result<Vec<ExperimentConfig>> {
    let configs = match name {
        "fig2-left" => vec![fig2_left(scale, master_seed)],
        "fig2-center" => vec![fig2_family("fig2-center", scale, master_seed, fixed_grid())],
        "fig2-right" => vec![fig2_family("fig2-right", scale, master_seed, annealed_grid())],
        "fig3" => vec![fig3(scale, master_seed)],
        "fig4" => fig4(scale, master_seed),
        "fig5" => vec![fig5(scale, master_seed)],
        "table1" => vec![table1(scale, master_seed)],
        other => {
            return Err(Error::config(format!(
                "unknown preset {other:?}; available: {}",
                preset_names().join(", ")
            )))
        }
    };
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate_at_both_scales() {
        for &name in preset_names() {
            for scale in [Scale::Desk, Scale::Paper] {
                let configs = preset(name, scale, 1).unwrap();
                assert!(!configs.is_empty());
            }
        }
    }

    #[test]
    fn fig2_left_has_five_learner_groups() {
        let cfg = &preset("fig2-left", Scale::Desk, 1).unwrap()[0];
        let mut ids: Vec<&str> = cfg.learners.iter().map(|l| l.learner_id.as_str()).collect();
        ids.dedup();
        assert_eq!(ids, vec!["s1", "s2", "s3", "s4", "s-full"]);
        assert_eq!(cfg.learners.len(), 5 * 28);
    }

    #[test]
    fn table1_uses_replay_on_er_rows() {
        let cfg = &preset("table1", Scale::Desk, 1).unwrap()[0];
        for l in &cfg.learners {
            let expect = l.learner_id.ends_with("-er");
            assert_eq!(l.replay_k > 0, expect, "{}", l.learner_id);
        }
    }
}
