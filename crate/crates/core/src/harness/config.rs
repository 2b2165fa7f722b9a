//! Flat key-value experiment config files.
//!
//! Grammar (one `key = value` per line, `#` comments, blank lines ok):
//!
//! ```text
//! name = my-experiment
//! kind = gridworld3d            # or random-mrp
//! dims = 5,5,5                  # gridworld3d only
//! num_reward_states = 6         # gridworld3d only
//! num_states = 100              # random-mrp only
//! out_degree = 5                # random-mrp only
//! gamma = 0.95
//! reward_noise = 0.0            # optional
//! batch = 5
//! horizon = 20000
//! checkpoint_every = 500
//! master_seed = 1729
//! targets = 3.0,2.0,1.5         # optional; or frac:0.3,0.2,0.15
//! learner = kind=td0 alpha=fixed:0.1
//! learner = kind=td-source-sr lambda=1.0 alpha=annealed:0.1,100 beta=harmonic:1.0,0.01 replay=3
//! ```
//!
//! Learner attributes: `id`, `kind`, `lambda`, `n` (partial map depth),
//! `map` (`exact` | `partial:n,lambda`), `alpha`, `beta`, `m`, `replay`,
//! `replay-model-updates`, `row-first`, `reward-rate`, `is-cap`,
//! `lambda-anneal=target,steps`. Schedule syntax: `fixed:a`,
//! `harmonic:base,floor`, `annealed:base,n0`, or the grid names
//! `paper-grid` (28 annealed cells) and `paper-fixed-grid` (7 fixed
//! cells), which expand one learner line into one config per cell.

use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::learners::{IlstdVariant, LambdaAnneal};
use crate::schedules::{annealed_grid, fixed_grid, Schedule};

use super::{AlgoSpec, EnvTemplate, ExperimentConfig, LearnerConfig, MapSpec, TargetSpec};

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::format(format!("bad value for {key}: {value:?}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_num::<f64>(key, v))
        .collect()
}

/// One schedule or a named grid of them.
fn parse_schedules(key: &str, value: &str) -> Result<Vec<Schedule>> {
    match value {
        "paper-grid" => return Ok(annealed_grid()),
        "paper-fixed-grid" => return Ok(fixed_grid()),
        _ => {}
    }
    let (family, args) = value
        .split_once(':')
        .ok_or_else(|| Error::format(format!("bad schedule for {key}: {value:?}")))?;
    let nums = parse_list(key, args)?;
    let sched = match (family, nums.as_slice()) {
        ("fixed", [a]) => Schedule::Fixed(*a),
        ("harmonic", [base, floor]) => Schedule::HarmonicPerState {
            base: *base,
            floor: *floor,
        },
        ("annealed", [base, n0]) => Schedule::Annealed {
            base: *base,
            n0: *n0,
        },
        _ => return Err(Error::format(format!("bad schedule for {key}: {value:?}"))),
    };
    Ok(vec![sched])
}

struct LearnerLine {
    id: Option<String>,
    kind: String,
    lambda: f64,
    map: Option<MapSpec>,
    alphas: Vec<Schedule>,
    betas: Vec<Schedule>,
    m: usize,
    replay: usize,
    replay_model_updates: bool,
    row_first: bool,
    reward_rate: Option<f64>,
    ratio_cap: Option<f64>,
    lambda_anneal: Option<LambdaAnneal>,
}

fn parse_learner_line(value: &str) -> Result<Vec<LearnerConfig>> {
    let mut line = LearnerLine {
        id: None,
        kind: String::new(),
        lambda: 1.0,
        map: None,
        alphas: vec![Schedule::Fixed(0.1)],
        betas: vec![Schedule::HarmonicPerState {
            base: 1.0,
            floor: 0.01,
        }],
        m: 1,
        replay: 0,
        replay_model_updates: true,
        row_first: false,
        reward_rate: None,
        ratio_cap: None,
        lambda_anneal: None,
    };
    for attr in value.split_whitespace() {
        let (key, val) = attr
            .split_once('=')
            .ok_or_else(|| Error::format(format!("bad learner attribute: {attr:?}")))?;
        match key {
            "id" => line.id = Some(val.to_string()),
            "kind" => line.kind = val.to_string(),
            "lambda" => line.lambda = parse_num(key, val)?,
            "n" => {
                let n: usize = parse_num(key, val)?;
                line.map = Some(MapSpec::Partial { n, lambda: 1.0 });
            }
            "map" => {
                line.map = Some(if val == "exact" {
                    MapSpec::Exact
                } else if let Some(args) = val.strip_prefix("partial:") {
                    let nums = parse_list(key, args)?;
                    match nums.as_slice() {
                        [n, lambda] => MapSpec::Partial {
                            n: *n as usize,
                            lambda: *lambda,
                        },
                        _ => return Err(Error::format(format!("bad map spec: {val:?}"))),
                    }
                } else {
                    return Err(Error::format(format!("bad map spec: {val:?}")));
                });
            }
            "alpha" => line.alphas = parse_schedules(key, val)?,
            "beta" => line.betas = parse_schedules(key, val)?,
            "m" => line.m = parse_num(key, val)?,
            "replay" => line.replay = parse_num(key, val)?,
            "replay-model-updates" => line.replay_model_updates = parse_num(key, val)?,
            "row-first" => line.row_first = parse_num(key, val)?,
            "reward-rate" => line.reward_rate = Some(parse_num(key, val)?),
            "is-cap" => line.ratio_cap = Some(parse_num(key, val)?),
            "lambda-anneal" => {
                let nums = parse_list(key, val)?;
                match nums.as_slice() {
                    [target, steps] => {
                        line.lambda_anneal = Some(LambdaAnneal {
                            target: *target,
                            over_steps: *steps as u64,
                        })
                    }
                    _ => return Err(Error::format(format!("bad lambda-anneal: {val:?}"))),
                }
            }
            _ => return Err(Error::format(format!("unknown learner attribute: {key:?}"))),
        }
    }

    let algo = match line.kind.as_str() {
        "td0" => AlgoSpec::Td0,
        "td-lambda" => AlgoSpec::TdLambda { lambda: line.lambda },
        "ideal-source" => AlgoSpec::IdealSource {
            map: line.map.unwrap_or(MapSpec::Exact),
        },
        "td-source" => AlgoSpec::TdSource { lambda: line.lambda },
        "td-sr" => AlgoSpec::TdSr { lambda: line.lambda },
        "td-source-sr" => AlgoSpec::TdSourceSr {
            lambda: line.lambda,
            row_first: line.row_first,
        },
        "white" => AlgoSpec::White { lambda: line.lambda },
        "pseudo-reward-descent" => AlgoSpec::PseudoRewardDescent { lambda: line.lambda },
        "sr-reward-decomposition" => AlgoSpec::SrRewardDecomposition {
            lambda: line.lambda,
            reward_rate: line.reward_rate,
        },
        "triple-model" => AlgoSpec::TripleModel {
            lambda: line.lambda,
            map_from_model: false,
        },
        "triple-model-p0" => AlgoSpec::TripleModel {
            lambda: line.lambda,
            map_from_model: true,
        },
        "ilstd-random" => AlgoSpec::Ilstd {
            variant: IlstdVariant::Random,
            m: line.m,
        },
        "ilstd-greedy" => AlgoSpec::Ilstd {
            variant: IlstdVariant::Greedy,
            m: line.m,
        },
        "" => return Err(Error::format("learner line is missing kind=")),
        other => return Err(Error::format(format!("unknown learner kind: {other:?}"))),
    };

    let id = line.id.unwrap_or_else(|| algo.label());
    let mut out = Vec::new();
    for alpha in &line.alphas {
        for beta in &line.betas {
            let mut cfg = LearnerConfig::new(id.clone(), algo.clone(), *alpha, *beta);
            cfg.replay_k = line.replay;
            cfg.replay_model_updates = line.replay_model_updates;
            cfg.ratio_cap = line.ratio_cap;
            cfg.lambda_anneal = line.lambda_anneal;
            out.push(cfg);
        }
    }
    Ok(out)
}

/// Parse the documented flat key-value grammar into an experiment.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut name = String::from("experiment");
    let mut kind_str: Option<String> = None;
    let mut dims: Option<[usize; 3]> = None;
    let mut num_reward_states = 0usize;
    let mut num_states = 0usize;
    let mut out_degree = 0usize;
    let mut gamma: Option<f64> = None;
    let mut reward_noise = 0.0;
    let mut batch = 1usize;
    let mut horizon = 1000u64;
    let mut checkpoint_every = 100u64;
    let mut master_seed = 1729u64;
    let mut targets: Option<TargetSpec> = None;
    let mut learners = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineat = |msg: String| Error::format(format!("line {}: {msg}", lineno + 1));
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped
            .split_once('=')
            .ok_or_else(|| lineat(format!("expected key = value, got {stripped:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "name" => name = value.to_string(),
            "kind" => kind_str = Some(value.to_string()),
            "dims" => {
                let nums = parse_list(key, value)?;
                match nums.as_slice() {
                    [x, y, z] => dims = Some([*x as usize, *y as usize, *z as usize]),
                    _ => return Err(lineat(format!("dims needs x,y,z, got {value:?}"))),
                }
            }
            "num_reward_states" => num_reward_states = parse_num(key, value)?,
            "num_states" => num_states = parse_num(key, value)?,
            "out_degree" => out_degree = parse_num(key, value)?,
            "gamma" => gamma = Some(parse_num(key, value)?),
            "reward_noise" => reward_noise = parse_num(key, value)?,
            "batch" => batch = parse_num(key, value)?,
            "horizon" => horizon = parse_num(key, value)?,
            "checkpoint_every" => checkpoint_every = parse_num(key, value)?,
            "master_seed" => master_seed = parse_num(key, value)?,
            "targets" => {
                targets = Some(if let Some(rest) = value.strip_prefix("frac:") {
                    TargetSpec::FractionOfInitial(parse_list(key, rest)?)
                } else {
                    TargetSpec::Absolute(parse_list(key, value)?)
                });
            }
            "learner" => learners.extend(parse_learner_line(value)?),
            _ => return Err(lineat(format!("unknown key {key:?}"))),
        }
    }

    let gamma = gamma.ok_or_else(|| Error::format("config is missing gamma"))?;
    let kind = match kind_str.as_deref() {
        Some("gridworld3d") => EnvKind::Gridworld3d {
            dims: dims.ok_or_else(|| Error::format("gridworld3d needs dims"))?,
            num_reward_states,
        },
        Some("random-mrp") => {
            if num_states == 0 || out_degree == 0 {
                return Err(Error::format("random-mrp needs num_states and out_degree"));
            }
            EnvKind::RandomMrp {
                num_states,
                out_degree,
            }
        }
        Some(other) => return Err(Error::format(format!("unknown env kind {other:?}"))),
        None => return Err(Error::format("config is missing kind")),
    };

    let config = ExperimentConfig {
        name,
        env: EnvTemplate {
            kind,
            gamma,
            reward_noise,
        },
        batch,
        horizon,
        checkpoint_every,
        master_seed,
        targets,
        learners,
    };
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# sample experiment
name = demo
kind = gridworld3d
dims = 3,3,3
num_reward_states = 4
gamma = 0.9
batch = 2
horizon = 100
checkpoint_every = 25
master_seed = 7
targets = frac:0.5,0.3
learner = kind=td0 alpha=fixed:0.2
learner = kind=td-source-sr lambda=1.0 alpha=paper-fixed-grid beta=harmonic:1.0,0.05 replay=3
";

    #[test]
    fn sample_config_parses_and_expands_grid() {
        let cfg = parse_config(SAMPLE).unwrap();
        assert_eq!(cfg.name, "demo");
        assert_eq!(cfg.batch, 2);
        // 1 td0 cell + 7 fixed-grid cells.
        assert_eq!(cfg.learners.len(), 8);
        assert_eq!(cfg.learners[1].replay_k, 3);
        assert!(matches!(cfg.targets, Some(TargetSpec::FractionOfInitial(_))));
    }

    #[test]
    fn replay_with_eligibility_is_rejected() {
        let bad = "\
kind = random-mrp
num_states = 10
out_degree = 3
gamma = 0.9
learner = kind=td-lambda lambda=0.5 replay=3
";
        let err = parse_config(bad).unwrap_err();
        assert!(err.to_string().contains("eligibility"));
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let err = parse_config("gamma = 0.5\nwat = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }
}
