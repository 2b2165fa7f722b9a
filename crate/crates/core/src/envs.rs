//! Seeded benchmark-environment generators and trajectory sampling.
//!
//! Two families: random MRPs (a fixed number of uniformly chosen
//! successors per state, U(0,1)-normalized probabilities, N(0,1) rewards
//! everywhere) and 3D gridworlds with wraparound (six toroidal neighbors
//! per state, U(0,1)-normalized probabilities, N(0,1) rewards on a fixed
//! number of randomly chosen states, zero elsewhere).
//!
//! Dynamics are continuing: runs are one unbroken trajectory from a
//! uniformly random initial state. Rewards are deterministic per state;
//! an optional per-step noise hook is off by default.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::learners::Transition;
use crate::mrp::{exact_value, Mrp};
use crate::rng::Rng;

const MAX_GENERATION_ATTEMPTS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    RandomMrp {
        num_states: usize,
        out_degree: usize,
    },
    Gridworld3d {
        dims: [usize; 3],
        num_reward_states: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub gamma: f64,
    pub seed: u64,
    /// Std-dev of optional per-step reward noise; 0 keeps rewards
    /// deterministic per state.
    pub reward_noise: f64,
}

impl EnvSpec {
    pub fn new(kind: EnvKind, gamma: f64, seed: u64) -> Self {
        EnvSpec {
            kind,
            gamma,
            seed,
            reward_noise: 0.0,
        }
    }

    pub fn num_states(&self) -> usize {
        match self.kind {
            EnvKind::RandomMrp { num_states, .. } => num_states,
            EnvKind::Gridworld3d { dims, .. } => dims[0] * dims[1] * dims[2],
        }
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            EnvKind::RandomMrp {
                num_states,
                out_degree,
            } => {
                if num_states == 0 {
                    return Err(Error::config("random MRP needs at least one state"));
                }
                if out_degree == 0 || out_degree > num_states {
                    return Err(Error::config(format!(
                        "out_degree {out_degree} not in 1..={num_states}"
                    )));
                }
            }
            EnvKind::Gridworld3d {
                dims,
                num_reward_states,
            } => {
                if dims.iter().any(|&d| d < 2) {
                    return Err(Error::config(format!("gridworld dims {dims:?} must all be >= 2")));
                }
                let n = dims[0] * dims[1] * dims[2];
                if num_reward_states > n {
                    return Err(Error::config(format!(
                        "num_reward_states {num_reward_states} exceeds {n} states"
                    )));
                }
            }
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config(format!("gamma must be in [0, 1), got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Generate the environment described by `spec`. Deterministic given the
/// seed embedded in the spec.
pub fn generate(spec: &EnvSpec) -> Result<Mrp> {
    spec.validate()?;
    let mut rng = crate::rng::derive(spec.seed, crate::rng::StreamPurpose::EnvGen, 0, 0);
    match spec.kind {
        EnvKind::RandomMrp {
            num_states,
            out_degree,
        } => gen_random_mrp(num_states, out_degree, spec.gamma, &mut rng),
        EnvKind::Gridworld3d {
            dims,
            num_reward_states,
        } => gen_gridworld_3d(dims, num_reward_states, spec.gamma, &mut rng),
    }
}

fn gen_random_mrp(n: usize, out_degree: usize, gamma: f64, rng: &mut Rng) -> Result<Mrp> {
    // Rewards first so a transition re-sample leaves them untouched.
    let reward = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)));
    for attempt in 1..=MAX_GENERATION_ATTEMPTS {
        let mut transition = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            // Distinct successors, self-loops permitted.
            let succ = rand::seq::index::sample(rng, n, out_degree);
            let weights: Vec<f64> = (0..out_degree).map(|_| rng.random::<f64>()).collect();
            let total: f64 = weights.iter().sum();
            for (j, w) in succ.iter().zip(&weights) {
                transition[(i, j)] = w / total;
            }
        }
        let mrp = Mrp::new(transition, reward.clone(), gamma)?;
        if exact_value(&mrp).is_ok() {
            return Ok(mrp);
        }
        let _ = attempt;
    }
    Err(Error::GenerationFailure {
        attempts: MAX_GENERATION_ATTEMPTS,
    })
}

/// State index layout: `x + dims_x·y + dims_x·dims_y·z`.
pub fn gridworld_state_index(dims: [usize; 3], x: usize, y: usize, z: usize) -> usize {
    x + dims[0] * y + dims[0] * dims[1] * z
}

/// The six toroidal neighbors of a state, in the fixed order
/// +x, -x, +y, -y, +z, -z. Duplicates occur when a dimension is 2.
pub fn gridworld_neighbors(dims: [usize; 3], state: usize) -> [usize; 6] {
    let x = state % dims[0];
    let y = (state / dims[0]) % dims[1];
    let z = state / (dims[0] * dims[1]);
    let (dx, dy, dz) = (dims[0], dims[1], dims[2]);
    [
        gridworld_state_index(dims, (x + 1) % dx, y, z),
        gridworld_state_index(dims, (x + dx - 1) % dx, y, z),
        gridworld_state_index(dims, x, (y + 1) % dy, z),
        gridworld_state_index(dims, x, (y + dy - 1) % dy, z),
        gridworld_state_index(dims, x, y, (z + 1) % dz),
        gridworld_state_index(dims, x, y, (z + dz - 1) % dz),
    ]
}

fn gen_gridworld_3d(
    dims: [usize; 3],
    num_reward_states: usize,
    gamma: f64,
    rng: &mut Rng,
) -> Result<Mrp> {
    let n = dims[0] * dims[1] * dims[2];
    let mut transition = DMatrix::<f64>::zeros(n, n);
    for state in 0..n {
        let neighbors = gridworld_neighbors(dims, state);
        let weights: [f64; 6] = std::array::from_fn(|_| rng.random::<f64>());
        let total: f64 = weights.iter().sum();
        // Accumulate: coincident neighbors (any dim == 2) merge mass.
        for (nbr, w) in neighbors.into_iter().zip(weights) {
            transition[(state, nbr)] += w / total;
        }
    }
    let mut reward = DVector::<f64>::zeros(n);
    let chosen = rand::seq::index::sample(rng, n, num_reward_states);
    for state in chosen {
        reward[state] = StandardNormal.sample(rng);
    }
    Mrp::new(transition, reward, gamma)
}

/// One sampled transition out of `state`: categorical draw over the row,
/// deterministic per-state reward.
pub fn sample_step(mrp: &Mrp, state: usize, rng: &mut Rng) -> (f64, usize) {
    debug_assert!(state < mrp.num_states());
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let n = mrp.num_states();
    let mut next = n - 1;
    for j in 0..n {
        acc += mrp.transition()[(state, j)];
        if u < acc {
            next = j;
            break;
        }
    }
    (mrp.reward()[state], next)
}

/// Per-row cumulative tables for repeated sampling; O(nnz(row)) per draw.
pub struct StepSampler<'a> {
    mrp: &'a Mrp,
    rows: Vec<Vec<(f64, u32)>>,
    reward_noise: f64,
}

impl<'a> StepSampler<'a> {
    pub fn new(mrp: &'a Mrp) -> Self {
        let n = mrp.num_states();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = 0.0;
            let mut row = Vec::new();
            for j in 0..n {
                let p = mrp.transition()[(i, j)];
                if p > 0.0 {
                    acc += p;
                    row.push((acc, j as u32));
                }
            }
            if let Some(last) = row.last_mut() {
                last.0 = 1.0; // absorb rounding in the final bucket
            }
            rows.push(row);
        }
        StepSampler {
            mrp,
            rows,
            reward_noise: 0.0,
        }
    }

    pub fn with_reward_noise(mut self, sigma: f64) -> Self {
        self.reward_noise = sigma;
        self
    }

    pub fn sample(&self, state: usize, rng: &mut Rng) -> (f64, usize) {
        let u: f64 = rng.random();
        let row = &self.rows[state];
        let k = row.partition_point(|&(cum, _)| cum <= u);
        let next = row[k.min(row.len() - 1)].1 as usize;
        let mut reward = self.mrp.reward()[state];
        if self.reward_noise > 0.0 {
            let noise: f64 = StandardNormal.sample(rng);
            reward += self.reward_noise * noise;
        }
        (reward, next)
    }
}

/// A chained sequence of sampled transitions.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub steps: Vec<Transition>,
}

/// Sample `len` chained transitions starting from `start`.
pub fn sample_trajectory(sampler: &StepSampler, start: usize, len: usize, rng: &mut Rng) -> Trajectory {
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
    Trajectory { steps }
}

pub fn uniform_initial_state(num_states: usize, rng: &mut Rng) -> usize {
    rng.random_range(0..num_states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive, StreamPurpose};

    fn spec_mrp(seed: u64) -> EnvSpec {
        EnvSpec::new(
            EnvKind::RandomMrp {
                num_states: 100,
                out_degree: 5,
            },
            0.9,
            seed,
        )
    }

    #[test]
    fn random_mrp_rows_have_exact_out_degree() {
        let mrp = generate(&spec_mrp(11)).unwrap();
        for i in 0..100 {
            let nonzeros = (0..100).filter(|&j| mrp.transition()[(i, j)] > 0.0).count();
            assert_eq!(nonzeros, 5, "row {i}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&spec_mrp(42)).unwrap();
        let b = generate(&spec_mrp(42)).unwrap();
        assert_eq!(a, b);
        let c = generate(&spec_mrp(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn full_out_degree_gives_dense_rows() {
        let spec = EnvSpec::new(
            EnvKind::RandomMrp {
                num_states: 8,
                out_degree: 8,
            },
            0.5,
            3,
        );
        let mrp = generate(&spec).unwrap();
        for i in 0..8 {
            assert!((0..8).all(|j| mrp.transition()[(i, j)] > 0.0), "row {i}");
        }
    }

    #[test]
    fn gridworld_has_six_neighbor_transitions() {
        let spec = EnvSpec::new(
            EnvKind::Gridworld3d {
                dims: [10, 10, 10],
                num_reward_states: 50,
            },
            0.95,
            7,
        );
        let mrp = generate(&spec).unwrap();
        assert_eq!(mrp.num_states(), 1000);
        let nonzero_rewards = mrp.reward().iter().filter(|&&r| r != 0.0).count();
        assert_eq!(nonzero_rewards, 50);
        for state in 0..1000 {
            let nbrs = gridworld_neighbors([10, 10, 10], state);
            let nonzeros: Vec<usize> = (0..1000)
                .filter(|&j| mrp.transition()[(state, j)] > 0.0)
                .collect();
            assert_eq!(nonzeros.len(), 6, "state {state}");
            for j in nonzeros {
                assert!(nbrs.contains(&j), "state {state} leaks to non-neighbor {j}");
            }
        }
    }

    #[test]
    fn degenerate_dims_merge_neighbors() {
        let spec = EnvSpec::new(
            EnvKind::Gridworld3d {
                dims: [2, 2, 2],
                num_reward_states: 2,
            },
            0.9,
            5,
        );
        let mrp = generate(&spec).unwrap();
        for state in 0..8 {
            let successors = (0..8).filter(|&j| mrp.transition()[(state, j)] > 0.0).count();
            assert!(successors <= 3, "state {state} has {successors} successors");
            let sum: f64 = (0..8).map(|j| mrp.transition()[(state, j)]).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_row_always_goes_there() {
        let mrp = Mrp::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            DVector::from_vec(vec![1.0, 2.0]),
            0.5,
        )
        .unwrap();
        let mut rng = derive(1, StreamPurpose::Trajectory, 0, 0);
        for _ in 0..32 {
            assert_eq!(sample_step(&mrp, 0, &mut rng).1, 1);
        }
        let sampler = StepSampler::new(&mrp);
        for _ in 0..32 {
            assert_eq!(sampler.sample(1, &mut rng).1, 0);
        }
    }

    #[test]
    fn two_state_frequencies_concentrate() {
        let mrp = crate::mrp::two_state_counterexample();
        let sampler = StepSampler::new(&mrp);
        let mut rng = derive(9, StreamPurpose::Trajectory, 0, 0);
        let trials = 100_000;
        let ones = (0..trials)
            .filter(|_| sampler.sample(0, &mut rng).1 == 1)
            .count();
        let freq = ones as f64 / trials as f64;
        assert!((0.49..=0.51).contains(&freq), "freq {freq}");
    }

    #[test]
    fn trajectory_chains() {
        let mrp = generate(&spec_mrp(2)).unwrap();
        let sampler = StepSampler::new(&mrp);
        let mut rng = derive(2, StreamPurpose::Trajectory, 0, 0);
        let traj = sample_trajectory(&sampler, 3, 500, &mut rng);
        assert_eq!(traj.steps.len(), 500);
        assert_eq!(traj.steps[0].from, 3);
        for pair in traj.steps.windows(2) {
            assert_eq!(pair[0].to, pair[1].from);
        }
    }
}
