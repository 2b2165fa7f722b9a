//! Environment-generator invariants: stochasticity, locality,
//! determinism, and an empirical-frequency chi-square smoke test.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::Recorder;
use crate::envs::{
    generate, gridworld_neighbors, sample_step, EnvKind, EnvSpec, StepSampler,
};
use crate::error::Result;
use crate::rng::{derive, StreamPurpose};

pub(super) fn run(seed: u64, r: &mut Recorder) -> Result<()> {
    let specs = [
        EnvSpec::new(
            EnvKind::RandomMrp {
                num_states: 100,
                out_degree: 5,
            },
            0.9,
            seed,
        ),
        EnvSpec::new(
            EnvKind::RandomMrp {
                num_states: 12,
                out_degree: 12,
            },
            0.5,
            seed.wrapping_add(1),
        ),
        EnvSpec::new(
            EnvKind::Gridworld3d {
                dims: [5, 5, 5],
                num_reward_states: 6,
            },
            0.95,
            seed.wrapping_add(2),
        ),
        EnvSpec::new(
            EnvKind::Gridworld3d {
                dims: [2, 2, 2],
                num_reward_states: 2,
            },
            0.9,
            seed.wrapping_add(3),
        ),
    ];

    let mut worst_row = 0.0f64;
    for spec in &specs {
        let mrp = generate(spec)?;
        for i in 0..mrp.num_states() {
            let sum: f64 = (0..mrp.num_states()).map(|j| mrp.transition()[(i, j)]).sum();
            worst_row = worst_row.max((sum - 1.0).abs());
        }
    }
    r.le("row-stochasticity", worst_row, 1e-12);

    // Gridworld locality: nonzero entries only on toroidal neighbors.
    let grid = generate(&specs[2])?;
    let mut local = true;
    for i in 0..grid.num_states() {
        let nbrs = gridworld_neighbors([5, 5, 5], i);
        for j in 0..grid.num_states() {
            if grid.transition()[(i, j)] > 0.0 && !nbrs.contains(&j) {
                local = false;
            }
        }
    }
    r.check("gridworld-locality", local, "support within 6 neighbors");

    // Determinism of generation and sampling.
    let again = generate(&specs[0])?;
    let first = generate(&specs[0])?;
    r.check("generation-determinism", first == again, "same seed, same MRP");
    let other = generate(&EnvSpec::new(specs[0].kind, 0.9, specs[0].seed.wrapping_add(9)))?;
    r.check("generation-seed-sensitivity", first != other, "different seed differs");
    let mut rng_a = derive(seed, StreamPurpose::Check, 10, 0);
    let mut rng_b = derive(seed, StreamPurpose::Check, 10, 0);
    let seq_a: Vec<usize> = (0..64).map(|_| sample_step(&first, 0, &mut rng_a).1).collect();
    let seq_b: Vec<usize> = (0..64).map(|_| sample_step(&first, 0, &mut rng_b).1).collect();
    r.check("sampling-determinism", seq_a == seq_b, "same rng state, same draws");

    // Chi-square smoke test on three rows at 1e5 samples each.
    let sampler = StepSampler::new(&first);
    let mut rng = derive(seed, StreamPurpose::Check, 11, 0);
    let mut min_p: f64 = 1.0;
    for state in [0usize, 17, 63] {
        let draws = 100_000;
        let mut counts = vec![0u64; first.num_states()];
        for _ in 0..draws {
            counts[sampler.sample(state, &mut rng).1] += 1;
        }
        let support: Vec<usize> = (0..first.num_states())
            .filter(|&j| first.transition()[(state, j)] > 0.0)
            .collect();
        let mut x2 = 0.0;
        for &j in &support {
            let expected = first.transition()[(state, j)] * draws as f64;
            let observed = counts[j] as f64;
            x2 += (observed - expected) * (observed - expected) / expected;
        }
        let df = (support.len() - 1) as f64;
        let p = 1.0 - ChiSquared::new(df).expect("df >= 1").cdf(x2);
        min_p = min_p.min(p);
    }
    r.check(
        "empirical-frequency-chi-square",
        min_p > 0.001,
        format!("min p-value {min_p:.4} > 0.001"),
    );
    Ok(())
}
