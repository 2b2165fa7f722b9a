use srctraces_core::envs::{generate, uniform_initial_state, EnvKind, EnvSpec, StepSampler};
use srctraces_core::learners::{IlstdVariant, Learner, LearnerKind, Transition};
use srctraces_core::mrp::exact_source_map;
use srctraces_core::rng::{derive, StreamPurpose};
use std::time::Instant;

fn traj(mrp: &srctraces_core::mrp::Mrp, len: usize, seed: u64) -> (usize, Vec<Transition>) {
    let mut rng = derive(seed, StreamPurpose::Check, 23, 0);
    let sampler = StepSampler::new(mrp);
    let start = uniform_initial_state(mrp.num_states(), &mut rng);
    let mut steps = Vec::with_capacity(len);
    let mut state = start;
    for _ in 0..len {
        let (reward, next) = sampler.sample(state, &mut rng);
        steps.push(Transition { from: state, reward, to: next });
        state = next;
    }
    (start, steps)
}

fn time_learner(make: &dyn Fn(&srctraces_core::mrp::Mrp) -> Learner, mrp: &srctraces_core::mrp::Mrp, steps: &[Transition], start: usize) -> f64 {
    let mut samples = Vec::new();
    for _ in 0..5 {
        let mut l = make(mrp);
        l.begin_run(start, 0.5);
        for t in &steps[..steps.len() / 5] {
            l.step(t, 0.05, 0.2).unwrap();
        }
        let timed = &steps[steps.len() / 5..];
        let t0 = Instant::now();
        for t in timed {
            l.step(t, 0.05, 0.2).unwrap();
        }
        samples.push(t0.elapsed().as_secs_f64() / timed.len() as f64);
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples[2]
}

fn main() {
    let small = generate(&EnvSpec::new(EnvKind::Gridworld3d { dims: [5, 5, 5], num_reward_states: 6 }, 0.95, 1799)).unwrap();
    let large = generate(&EnvSpec::new(EnvKind::Gridworld3d { dims: [10, 10, 10], num_reward_states: 50 }, 0.95, 1800)).unwrap();
    let (ss, st) = traj(&small, 12_000, 1);
    let (ls, lt) = traj(&large, 6_000, 2);
    let cases: Vec<(&str, Box<dyn Fn(&srctraces_core::mrp::Mrp) -> Learner>)> = vec![
        ("td0", Box::new(|m: &srctraces_core::mrp::Mrp| Learner::new(LearnerKind::Td0, m.num_states(), m.gamma()).unwrap())),
        ("td-lambda", Box::new(|m: &srctraces_core::mrp::Mrp| Learner::new(LearnerKind::TdLambda { lambda: 0.9 }, m.num_states(), m.gamma()).unwrap())),
        ("ideal", Box::new(|m: &srctraces_core::mrp::Mrp| Learner::new(LearnerKind::IdealSource { map: exact_source_map(m).unwrap() }, m.num_states(), m.gamma()).unwrap())),
        ("td-source", Box::new(|m: &srctraces_core::mrp::Mrp| Learner::new(LearnerKind::TdSource { lambda: 1.0 }, m.num_states(), m.gamma()).unwrap())),
        ("td-sr", Box::new(|m: &srctraces_core::mrp::Mrp| Learner::new(LearnerKind::TdSr { lambda: 1.0 }, m.num_states(), m.gamma()).unwrap())),
        ("td-source-sr", Box::new(|m: &srctraces_core::mrp::Mrp| Learner::new(LearnerKind::TdSourceSr { lambda: 1.0, row_first: false }, m.num_states(), m.gamma()).unwrap())),
        ("white", Box::new(|m: &srctraces_core::mrp::Mrp| Learner::new(LearnerKind::White { lambda: 1.0, fixed_map: None }, m.num_states(), m.gamma()).unwrap())),
        ("triple", Box::new(|m: &srctraces_core::mrp::Mrp| Learner::new(LearnerKind::TripleModel { lambda: 1.0, map_from_model: false }, m.num_states(), m.gamma()).unwrap())),
        ("ilstd-g", Box::new(|m: &srctraces_core::mrp::Mrp| Learner::new(LearnerKind::Ilstd { variant: IlstdVariant::Greedy, m: 1, seed: 5 }, m.num_states(), m.gamma()).unwrap())),
    ];
    for (name, make) in &cases {
        let a = time_learner(make.as_ref(), &small, &st, ss);
        let b = time_learner(make.as_ref(), &large, &lt, ls);
        println!("{name:>14}: {:8.1} ns -> {:8.1} ns  ratio {:5.2}  slope {:.3}", a * 1e9, b * 1e9, b / a, (b / a).ln() / 8f64.ln());
    }
}
