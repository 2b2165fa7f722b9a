//! Learner invariants: the TD(0) reduction lattice, the fixed-map
//! equivalence of value-space and pseudo-reward-space updates, linear
//! per-step cost, the two-state expansion witness, map-diagonal sanity,
//! and convergence on a small instance for every algorithm.

use std::time::Instant;

use super::Recorder;
use crate::envs::{generate, uniform_initial_state, EnvKind, EnvSpec, StepSampler};
use crate::error::Result;
use crate::learners::{IlstdVariant, Learner, LearnerKind, Transition};
use crate::mrp::{exact_source_map, exact_value, partial_source_map, two_state_counterexample, Mrp};
use crate::rng::{derive, Rng, StreamPurpose};
use crate::schedules::{annealed_grid, Schedule};

pub(super) fn run(seed: u64, r: &mut Recorder) -> Result<()> {
    reduction_lattice(seed, r)?;
    fixed_map_equivalence(seed, r)?;
    counterexample_expansion(r)?;
    map_diagonal_sanity(seed, r)?;
    step_cost_slope(seed, r)?;
    convergence_small(seed, r)?;
    Ok(())
}

fn trajectory(mrp: &Mrp, len: usize, rng: &mut Rng) -> (usize, Vec<Transition>) {
    let sampler = StepSampler::new(mrp);
    let start = uniform_initial_state(mrp.num_states(), rng);
    let mut steps = Vec::with_capacity(len);
    let mut state = start;
    for _ in 0..len {
        let (reward, next) = sampler.sample(state, rng);
        steps.push(Transition {
            from: state,
            reward,
            to: next,
        });
        state = next;
    }
    (start, steps)
}

fn reduction_lattice(seed: u64, r: &mut Recorder) -> Result<()> {
    let mrp = generate(&EnvSpec::new(
        EnvKind::RandomMrp {
            num_states: 10,
            out_degree: 3,
        },
        0.9,
        seed.wrapping_add(50),
    ))?;
    let identity = partial_source_map(&mrp, 1, 1.0)?;
    let mut rng = derive(seed, StreamPurpose::Check, 20, 0);
    let (start, steps) = trajectory(&mrp, 2_000, &mut rng);

    let kinds: Vec<(&str, LearnerKind)> = vec![
        ("td-lambda-0", LearnerKind::TdLambda { lambda: 0.0 }),
        ("ideal-identity", LearnerKind::IdealSource { map: identity.clone() }),
        ("td-source-0", LearnerKind::TdSource { lambda: 0.0 }),
        ("td-sr-0", LearnerKind::TdSr { lambda: 0.0 }),
        ("td-source-sr-0", LearnerKind::TdSourceSr { lambda: 0.0, row_first: false }),
        ("white-identity", LearnerKind::White { lambda: 1.0, fixed_map: Some(identity.clone()) }),
        ("white-learned-0", LearnerKind::White { lambda: 0.0, fixed_map: None }),
        ("prd-identity", LearnerKind::PseudoRewardDescent { lambda: 1.0, fixed_map: Some(identity) }),
    ];

    let mut reference = Learner::new(LearnerKind::Td0, mrp.num_states(), mrp.gamma())?;
    reference.begin_run(start, 0.25);
    let mut family: Vec<(&str, Learner)> = kinds
        .into_iter()
        .map(|(name, kind)| Ok((name, Learner::new(kind, mrp.num_states(), mrp.gamma())?)))
        .collect::<Result<_>>()?;
    for (_, l) in family.iter_mut() {
        l.begin_run(start, 0.25);
    }

    let mut worst = 0.0f64;
    for t in &steps {
        reference.step(t, 0.1, 0.25)?;
        let want = reference.value_estimate();
        for (_, l) in family.iter_mut() {
            l.step(t, 0.1, 0.25)?;
            let got = l.value_estimate();
            for (a, b) in got.as_slice().iter().zip(want.as_slice()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    r.le("reduction-lattice-matches-td0", worst, 1e-12);
    Ok(())
}

fn fixed_map_equivalence(seed: u64, r: &mut Recorder) -> Result<()> {
    // Source learning in value space and the elementwise pseudo-reward
    // update read through the same fixed exact map stay equal:
    // v_n = S₀·r_n at every step.
    let mrp = generate(&EnvSpec::new(
        EnvKind::RandomMrp {
            num_states: 50,
            out_degree: 5,
        },
        0.9,
        seed.wrapping_add(60),
    ))?;
    let map = exact_source_map(&mrp)?;
    let mut rng = derive(seed, StreamPurpose::Check, 21, 0);
    let (start, steps) = trajectory(&mrp, 10_000, &mut rng);

    let mut source = Learner::new(
        LearnerKind::IdealSource { map: map.clone() },
        mrp.num_states(),
        mrp.gamma(),
    )?;
    let mut white = Learner::new(
        LearnerKind::White {
            lambda: 1.0,
            fixed_map: Some(map),
        },
        mrp.num_states(),
        mrp.gamma(),
    )?;
    source.begin_run(start, 0.1);
    white.begin_run(start, 0.1);

    let alpha = Schedule::Annealed { base: 0.2, n0: 100.0 };
    let beta = Schedule::Fixed(0.1);
    let mut worst = 0.0f64;
    for (k, t) in steps.iter().enumerate() {
        let n = k as u64 + 1;
        source.step_scheduled(t, n, &alpha, &beta)?;
        white.step_scheduled(t, n, &alpha, &beta)?;
        let a = source.value_estimate();
        let b = white.value_estimate();
        worst = worst.max(
            a.as_slice()
                .iter()
                .zip(b.as_slice())
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())),
        );
    }
    r.le("fixed-map-white-equivalence", worst, 1e-10);
    Ok(())
}

fn counterexample_expansion(r: &mut Recorder) -> Result<()> {
    // Drive v from 0 to the witness point [1, -1] with two crafted
    // unit-magnitude TD errors (δ·[1.5,.5] + δ'·[.5,1.5] = [1,-1] has
    // δ = 1 from state 0 and δ' = -1 from state 1), then apply the
    // witness backup: δ = -1 from state 0 at α = 1 must land exactly on
    // [-0.5, -1.5], pushing coordinate 1 away from its optimum 0.
    let mrp = two_state_counterexample();
    let map = exact_source_map(&mrp)?;
    let mut learner = Learner::new(LearnerKind::IdealSource { map }, 2, mrp.gamma())?;
    learner.begin_run(0, 0.1);
    learner.step(&Transition { from: 0, reward: 1.0, to: 0 }, 1.0, 0.1)?;
    let v = learner.value_estimate();
    let reward = -1.0 - 0.5 * v[0] + v[1]; // δ = -1 via to = 0
    learner.step(&Transition { from: 1, reward, to: 0 }, 1.0, 0.1)?;
    let v = learner.value_estimate();
    let setup_ok = (v[0] - 1.0).abs() < 1e-12 && (v[1] + 1.0).abs() < 1e-12;
    r.check("witness-setup", setup_ok, format!("v = [{}, {}]", v[0], v[1]));

    learner.step(&Transition { from: 0, reward: 0.5, to: 1 }, 1.0, 0.1)?;
    let v = learner.value_estimate();
    let exact = v[0] == -0.5 && v[1] == -1.5;
    r.check(
        "counterexample-expansion-exact",
        exact,
        format!("v = [{}, {}], expected [-0.5, -1.5]", v[0], v[1]),
    );
    Ok(())
}

fn map_diagonal_sanity(seed: u64, r: &mut Recorder) -> Result<()> {
    use rand::Rng as _;
    let mut rng = derive(seed, StreamPurpose::Check, 22, 0);
    let mut ok = true;
    for kind_idx in 0..3 {
        for _ in 0..32 {
            let n = 6;
            let beta = rng.random_range(0.01..0.9f64);
            let kind = match kind_idx {
                0 => LearnerKind::TdSource { lambda: 1.0 },
                1 => LearnerKind::TdSr { lambda: 1.0 },
                _ => LearnerKind::TdSourceSr { lambda: 1.0, row_first: false },
            };
            let mut l = Learner::new(kind, n, 0.95)?;
            let from = rng.random_range(0..n);
            let to = rng.random_range(0..n);
            l.begin_run(from, beta);
            l.step(&Transition { from, reward: 0.3, to }, 0.1, beta)?;
            let s = l.learned_map().expect("learned map");
            for d in 0..n {
                if s.get(d, d) < (1.0 - beta) - 1e-12 {
                    ok = false;
                }
            }
        }
    }
    r.check("map-diagonal-floor", ok, "diag >= 1-β after any single update");
    Ok(())
}

/// Per-step wall time floor of `learner` over `steps` transitions
/// (minimum of five repetitions; scheduling noise only adds time).
fn time_steps(kind_factory: &dyn Fn(&Mrp) -> Result<Learner>, mrp: &Mrp, steps: &[Transition], start: usize) -> Result<f64> {
    let mut floor = f64::INFINITY;
    for _ in 0..5 {
        let mut learner = kind_factory(mrp)?;
        learner.begin_run(start, 0.5);
        // Warm caches on a prefix before timing.
        for t in &steps[..steps.len() / 5] {
            learner.step(t, 0.05, 0.2)?;
        }
        let timed = &steps[steps.len() / 5..];
        let t0 = Instant::now();
        for t in timed {
            learner.step(t, 0.05, 0.2)?;
        }
        floor = floor.min(t0.elapsed().as_secs_f64() / timed.len() as f64);
    }
    Ok(floor)
}

fn step_cost_slope(seed: u64, r: &mut Recorder) -> Result<()> {
    let small = generate(&EnvSpec::new(
        EnvKind::Gridworld3d { dims: [5, 5, 5], num_reward_states: 6 },
        0.95,
        seed.wrapping_add(70),
    ))?;
    let large = generate(&EnvSpec::new(
        EnvKind::Gridworld3d { dims: [10, 10, 10], num_reward_states: 50 },
        0.95,
        seed.wrapping_add(71),
    ))?;
    let mut rng = derive(seed, StreamPurpose::Check, 23, 0);
    let (start_s, steps_s) = trajectory(&small, 40_000, &mut rng);
    let (start_l, steps_l) = trajectory(&large, 8_000, &mut rng);

    let factories: Vec<(&str, Box<dyn Fn(&Mrp) -> Result<Learner>>)> = vec![
        ("td0", Box::new(|m: &Mrp| Learner::new(LearnerKind::Td0, m.num_states(), m.gamma()))),
        ("td-lambda", Box::new(|m: &Mrp| {
            Learner::new(LearnerKind::TdLambda { lambda: 0.9 }, m.num_states(), m.gamma())
        })),
        ("ideal-source", Box::new(|m: &Mrp| {
            Learner::new(
                LearnerKind::IdealSource { map: exact_source_map(m)? },
                m.num_states(),
                m.gamma(),
            )
        })),
        ("td-source", Box::new(|m: &Mrp| {
            Learner::new(LearnerKind::TdSource { lambda: 1.0 }, m.num_states(), m.gamma())
        })),
        ("td-sr", Box::new(|m: &Mrp| {
            Learner::new(LearnerKind::TdSr { lambda: 1.0 }, m.num_states(), m.gamma())
        })),
        ("td-source-sr", Box::new(|m: &Mrp| {
            Learner::new(
                LearnerKind::TdSourceSr { lambda: 1.0, row_first: false },
                m.num_states(),
                m.gamma(),
            )
        })),
        ("white", Box::new(|m: &Mrp| {
            Learner::new(LearnerKind::White { lambda: 1.0, fixed_map: None }, m.num_states(), m.gamma())
        })),
        ("pseudo-reward-descent", Box::new(|m: &Mrp| {
            Learner::new(
                LearnerKind::PseudoRewardDescent { lambda: 1.0, fixed_map: None },
                m.num_states(),
                m.gamma(),
            )
        })),
        ("sr-reward-decomposition", Box::new(|m: &Mrp| {
            Learner::new(
                LearnerKind::SrRewardDecomposition { lambda: 1.0, fixed_map: None, reward_rate: None },
                m.num_states(),
                m.gamma(),
            )
        })),
        ("triple-model", Box::new(|m: &Mrp| {
            Learner::new(
                LearnerKind::TripleModel { lambda: 1.0, map_from_model: false },
                m.num_states(),
                m.gamma(),
            )
        })),
        ("ilstd-greedy", Box::new(|m: &Mrp| {
            Learner::new(
                LearnerKind::Ilstd { variant: IlstdVariant::Greedy, m: 1, seed: 5 },
                m.num_states(),
                m.gamma(),
            )
        })),
        ("ilstd-random", Box::new(|m: &Mrp| {
            Learner::new(
                LearnerKind::Ilstd { variant: IlstdVariant::Random, m: 1, seed: 5 },
                m.num_states(),
                m.gamma(),
            )
        })),
    ];

    let size_ratio = (large.num_states() as f64 / small.num_states() as f64).ln();
    let mut worst_slope = f64::NEG_INFINITY;
    let mut worst_name = "";
    for (name, factory) in &factories {
        let t_small = time_steps(factory.as_ref(), &small, &steps_s, start_s)?;
        let t_large = time_steps(factory.as_ref(), &large, &steps_l, start_l)?;
        let slope = (t_large / t_small).ln() / size_ratio;
        if slope > worst_slope {
            worst_slope = slope;
            worst_name = name;
        }
    }
    r.check(
        "step-cost-linear-scaling",
        worst_slope < 1.3,
        format!("worst slope {worst_slope:.3} ({worst_name}) < 1.3 over |S| 125→1000"),
    );
    Ok(())
}

fn convergence_small(seed: u64, r: &mut Recorder) -> Result<()> {
    let mrp = generate(&EnvSpec::new(
        EnvKind::RandomMrp {
            num_states: 10,
            out_degree: 3,
        },
        0.9,
        seed.wrapping_add(80),
    ))?;
    let vstar = exact_value(&mrp)?;
    let tol = 0.05 * (1.0 + vstar.inf_norm());
    let exact = exact_source_map(&mrp)?;

    let kinds: Vec<(&str, LearnerKind)> = vec![
        ("td0", LearnerKind::Td0),
        ("td-lambda", LearnerKind::TdLambda { lambda: 0.8 }),
        ("ideal-source", LearnerKind::IdealSource { map: exact }),
        ("td-source", LearnerKind::TdSource { lambda: 1.0 }),
        ("td-sr", LearnerKind::TdSr { lambda: 1.0 }),
        ("td-source-sr", LearnerKind::TdSourceSr { lambda: 1.0, row_first: false }),
        ("white", LearnerKind::White { lambda: 1.0, fixed_map: None }),
        ("pseudo-reward-descent", LearnerKind::PseudoRewardDescent { lambda: 1.0, fixed_map: None }),
        ("sr-reward-decomposition", LearnerKind::SrRewardDecomposition {
            lambda: 1.0,
            fixed_map: None,
            reward_rate: None,
        }),
        ("triple-model", LearnerKind::TripleModel { lambda: 1.0, map_from_model: false }),
        ("ilstd-greedy", LearnerKind::Ilstd { variant: IlstdVariant::Greedy, m: 1, seed }),
        ("ilstd-random", LearnerKind::Ilstd { variant: IlstdVariant::Random, m: 1, seed }),
    ];

    // Mid-strength schedules first: most learners converge on the first
    // try and the loop stays fast.
    let mut grid = annealed_grid();
    grid.sort_by(|a, b| {
        let key = |s: &Schedule| match *s {
            Schedule::Annealed { base, n0 } => ((base - 0.1).abs(), -n0),
            _ => (0.0, 0.0),
        };
        key(a).partial_cmp(&key(b)).unwrap()
    });

    let beta = Schedule::HarmonicPerState { base: 1.0, floor: 0.01 };
    let sampler = StepSampler::new(&mrp);
    let mut failures = Vec::new();
    let mut divergences = Vec::new();
    for (name, kind) in &kinds {
        let mut converged = false;
        'sched: for alpha in &grid {
            let mut rng = derive(seed, StreamPurpose::Check, 24, 0);
            let start = uniform_initial_state(mrp.num_states(), &mut rng);
            let mut learner = Learner::new(kind.clone(), mrp.num_states(), mrp.gamma())?;
            learner.begin_run_scheduled(start, &beta)?;
            let mut state = start;
            for n in 1..=1_000_000u64 {
                let (reward, next) = sampler.sample(state, &mut rng);
                learner.step_scheduled(
                    &Transition { from: state, reward, to: next },
                    n,
                    alpha,
                    &beta,
                )?;
                state = next;
                if n % 10_000 == 0 {
                    let v = learner.value_estimate();
                    let err = v
                        .as_slice()
                        .iter()
                        .zip(vstar.as_slice())
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    if !err.is_finite() || v.inf_norm() > crate::harness::DIVERGENCE_THRESHOLD {
                        divergences.push(format!("{name}@{}", alpha.label()));
                        continue 'sched;
                    }
                    if err < tol {
                        converged = true;
                        break 'sched;
                    }
                }
            }
        }
        if !converged {
            failures.push(*name);
        }
    }
    let detail = if divergences.is_empty() {
        "all learners reached 5% of exact values".to_string()
    } else {
        format!(
            "all learners reached 5%; divergent cells recorded: {}",
            divergences.join(", ")
        )
    };
    r.check(
        "small-instance-convergence",
        failures.is_empty(),
        if failures.is_empty() {
            detail
        } else {
            format!("no schedule converged for: {}", failures.join(", "))
        },
    );
    Ok(())
}
