//! Exact-arithmetic invariants: oracle equivalence, the model-accuracy
//! defect bounds, backup identities, and the non-contraction witness.

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};

use super::oracles;
use super::Recorder;
use crate::envs::{generate, EnvKind, EnvSpec};
use crate::error::Result;
use crate::linalg::{frobenius_diff, inf_norm};
use crate::mrp::{
    exact_source_map, exact_value, full_expected_backup, norm_defect, partial_source_map,
    partial_trace_bound, source_backup_reward_delta, two_state_counterexample, Mrp, ValueVector,
};
use crate::rng::{derive, StreamPurpose};

/// Five 100-state random MRPs and five 5×5×5 gridworlds.
pub(super) fn standard_envs(master_seed: u64) -> Result<Vec<Mrp>> {
    let mut envs = Vec::with_capacity(10);
    for i in 0..5u64 {
        envs.push(generate(&EnvSpec::new(
            EnvKind::RandomMrp {
                num_states: 100,
                out_degree: 5,
            },
            0.9,
            master_seed.wrapping_add(i),
        ))?);
    }
    for i in 0..5u64 {
        envs.push(generate(&EnvSpec::new(
            EnvKind::Gridworld3d {
                dims: [5, 5, 5],
                num_reward_states: 6,
            },
            0.95,
            master_seed.wrapping_add(100 + i),
        ))?);
    }
    Ok(envs)
}

pub(super) fn run(seed: u64, r: &mut Recorder) -> Result<()> {
    two_state_exactness(r)?;
    neumann_and_norm_bound(seed, r)?;
    one_sweep_exactness(seed, r)?;
    condition_d_grid(seed, r)?;
    non_contraction_witness(r)?;
    rank1_backup_consistency(seed, r)?;
    decomposition_identity(seed, r)?;
    Ok(())
}

fn two_state_exactness(r: &mut Recorder) -> Result<()> {
    let s = exact_source_map(&two_state_counterexample())?;
    let want = [[1.5, 0.5], [0.5, 1.5]];
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((s.matrix()[(i, j)] - want[i][j]).abs());
        }
    }
    r.le("two-state-source-map", worst, 1e-12);
    Ok(())
}

fn neumann_and_norm_bound(seed: u64, r: &mut Recorder) -> Result<()> {
    // Ten random MRPs plus three gridworlds of assorted dims.
    let mut envs = Vec::new();
    for i in 0..10u64 {
        envs.push(generate(&EnvSpec::new(
            EnvKind::RandomMrp {
                num_states: 100,
                out_degree: 5,
            },
            0.9,
            seed.wrapping_add(1000 + i),
        ))?);
    }
    for (i, dims) in [[5, 5, 5], [6, 5, 4], [4, 4, 4]].into_iter().enumerate() {
        envs.push(generate(&EnvSpec::new(
            EnvKind::Gridworld3d {
                dims,
                num_reward_states: 6,
            },
            0.95,
            seed.wrapping_add(2000 + i as u64),
        ))?);
    }
    let mut worst_series = 0.0f64;
    let mut worst_norm_margin = f64::NEG_INFINITY;
    let mut worst_value = 0.0f64;
    for mrp in &envs {
        let s = exact_source_map(mrp)?;
        let series = oracles::neumann_source_map(mrp, 1e-12);
        worst_series = worst_series.max(frobenius_diff(s.matrix(), &series));
        worst_norm_margin =
            worst_norm_margin.max(inf_norm(s.matrix()) - 1.0 / (1.0 - mrp.gamma()));
        let v = exact_value(mrp)?;
        let v_series = oracles::neumann_value(mrp, 1e-12);
        worst_value = worst_value.max((&v.0 - v_series).abs().max());
    }
    r.le("neumann-source-map-equivalence", worst_series, 1e-8);
    r.le("neumann-value-equivalence", worst_value, 1e-8);
    r.le("source-map-inf-norm-bound", worst_norm_margin, 1e-9);
    Ok(())
}

fn one_sweep_exactness(seed: u64, r: &mut Recorder) -> Result<()> {
    let envs = standard_envs(seed)?;
    let mut rng = derive(seed, StreamPurpose::Check, 1, 0);
    let mut worst = 0.0f64;
    for mrp in &envs {
        let s = exact_source_map(mrp)?;
        let vstar = exact_value(mrp)?;
        for _ in 0..20 {
            let v0 = ValueVector(DVector::from_iterator(
                mrp.num_states(),
                (0..mrp.num_states()).map(|_| {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    4.0 * x
                }),
            ));
            let swept = full_expected_backup(mrp, &s, &v0)?;
            worst = worst.max((&swept.0 - &vstar.0).abs().max());
        }
    }
    r.le("one-sweep-exactness", worst, 1e-8);
    Ok(())
}

fn condition_d_grid(seed: u64, r: &mut Recorder) -> Result<()> {
    let envs = standard_envs(seed)?;
    let lambdas = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut worst_excess = f64::NEG_INFINITY;
    for mrp in &envs {
        for n in 1..=8usize {
            for &lambda in &lambdas {
                let map = partial_source_map(mrp, n, lambda)?;
                let defect = norm_defect(mrp, &map)?;
                let bound = partial_trace_bound(mrp.gamma(), n, lambda);
                worst_excess = worst_excess.max(defect - bound);
            }
        }
    }
    r.le("condition-d-defect-within-bound", worst_excess, 1e-10);

    // Bound monotonicity in n and in λ over the same grid.
    let mut monotone = true;
    for &gamma in &[0.9, 0.95] {
        for n in 1..=8usize {
            for w in lambdas.windows(2) {
                if partial_trace_bound(gamma, n, w[1]) > partial_trace_bound(gamma, n, w[0]) + 1e-15
                {
                    monotone = false;
                }
            }
        }
        for &lambda in &lambdas {
            for n in 1..8usize {
                if partial_trace_bound(gamma, n + 1, lambda)
                    > partial_trace_bound(gamma, n, lambda) + 1e-15
                {
                    monotone = false;
                }
            }
        }
    }
    r.check("defect-bound-monotone", monotone, "non-increasing in n and λ");
    Ok(())
}

fn non_contraction_witness(r: &mut Recorder) -> Result<()> {
    // Expected asynchronous source backup from state 0 at v₀ = [1, -1]
    // lands on [-0.5, -1.5]: coordinate 1 moved away from the optimum 0.
    let mrp = two_state_counterexample();
    let s = exact_source_map(&mrp)?;
    let v0 = ValueVector::from_vec(vec![1.0, -1.0]);
    let expected_td = mrp.reward()[0]
        + mrp.gamma() * (mrp.transition().row(0) * &v0.0)[(0, 0)]
        - v0[0];
    let v1 = source_backup_reward_delta(&v0, &s, 0, expected_td)?;
    let exact = (v1[0] - (-0.5)).abs().max((v1[1] - (-1.5)).abs());
    r.le("witness-backup-value", exact, 0.0);
    r.check(
        "witness-expansion",
        (v1[1] - 0.0).abs() > (v0[1] - 0.0).abs(),
        format!("|v1[1]| = {} > |v0[1]| = {}", v1[1].abs(), v0[1].abs()),
    );
    Ok(())
}

fn rank1_backup_consistency(seed: u64, r: &mut Recorder) -> Result<()> {
    let mrp = generate(&EnvSpec::new(
        EnvKind::RandomMrp {
            num_states: 60,
            out_degree: 4,
        },
        0.9,
        seed.wrapping_add(3000),
    ))?;
    let s = exact_source_map(&mrp)?;
    let v = exact_value(&mrp)?;
    let mut rng = derive(seed, StreamPurpose::Check, 2, 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        use rand::Rng as _;
        let j = rng.random_range(0..mrp.num_states());
        let delta: f64 = StandardNormal.sample(&mut rng);
        let bumped = source_backup_reward_delta(&v, &s, j, delta)?;
        let modified = mrp.with_reward_at(j, mrp.reward()[j] + delta)?;
        let direct = exact_value(&modified)?;
        worst = worst.max((&bumped.0 - &direct.0).abs().max());
    }
    r.le("rank1-reward-delta-consistency", worst, 1e-8);
    Ok(())
}

fn decomposition_identity(seed: u64, r: &mut Recorder) -> Result<()> {
    let mrp = generate(&EnvSpec::new(
        EnvKind::RandomMrp {
            num_states: 40,
            out_degree: 5,
        },
        0.9,
        seed.wrapping_add(4000),
    ))?;
    let s = exact_source_map(&mrp)?;
    let mut rng = derive(seed, StreamPurpose::Check, 3, 0);
    let n = mrp.num_states();
    let noise = |rng: &mut crate::rng::Rng| {
        DVector::from_iterator(n, (0..n).map(|_| {
            let x: f64 = StandardNormal.sample(rng);
            0.3 * x
        }))
    };
    let perturbed_matrix = {
        let mut m = s.matrix().clone();
        for x in m.iter_mut() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *x += 0.05 * e;
        }
        crate::mrp::SourceMap::learned(m, mrp.gamma())
    };
    let r0 = mrp.reward() + noise(&mut rng);
    let (a, b, c) =
        crate::mrp::decomposition_error_terms(&s, &perturbed_matrix, mrp.reward(), &r0)?;
    let lhs = perturbed_matrix.matrix() * &r0 - s.matrix() * mrp.reward();
    let residual = (lhs - (a + b + c)).abs().max();
    r.le("decomposition-sum-identity", residual, 1e-10);
    Ok(())
}
