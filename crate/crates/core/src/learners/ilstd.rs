//! Tabular incremental LSTD with indicator features.
//!
//! Accumulates the least-squares statistics
//! `A += φ(s)(φ(s) - γφ(s'))ᵀ`, `b += r·φ(s)` and keeps the residual
//! `μ = b - Av` up to date incrementally. Each observed transition then
//! triggers `m` single-dimension value updates chosen greedily
//! (argmax |μ|, ties to the lowest index) or uniformly at random.
//!
//! A grows without normalization, which is exactly what lets aggressive
//! step sizes blow the iteration up; the harness flags those runs as
//! divergent rather than treating them as errors here.

use rand::Rng as _;

use super::Transition;
use crate::linalg::SquareMat;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlstdVariant {
    Random,
    Greedy,
}

#[derive(Debug, Clone)]
pub(crate) struct IlstdState {
    pub v: Vec<f64>,
    pub a: SquareMat,
    pub b: Vec<f64>,
    pub mu: Vec<f64>,
    pub variant: IlstdVariant,
    pub m: usize,
    rng: Rng,
}

impl IlstdState {
    pub fn new(n: usize, variant: IlstdVariant, m: usize, rng: Rng) -> Self {
        IlstdState {
            v: vec![0.0; n],
            a: SquareMat::zeros(n),
            b: vec![0.0; n],
            mu: vec![0.0; n],
            variant,
            m,
            rng,
        }
    }

    pub fn step(&mut self, t: &Transition, alpha: f64, gamma: f64) {
        let (i, j) = (t.from, t.to);
        // ΔA = e_i(e_i - γe_j)ᵀ touches two entries of row i.
        self.a.set(i, i, self.a.get(i, i) + 1.0);
        self.a.set(i, j, self.a.get(i, j) - gamma);
        self.b[i] += t.reward;
        // Δμ = Δb - ΔA·v collapses to the sampled TD error at i.
        self.mu[i] += t.reward - self.v[i] + gamma * self.v[j];

        for _ in 0..self.m {
            let k = match self.variant {
                IlstdVariant::Greedy => argmax_abs(&self.mu),
                IlstdVariant::Random => self.rng.random_range(0..self.v.len()),
            };
            let dv = alpha * self.mu[k];
            self.v[k] += dv;
            if dv != 0.0 {
                self.a.col_axpy_into(k, -dv, &mut self.mu);
            }
        }
    }
}

fn argmax_abs(mu: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = mu[0].abs();
    for (k, x) in mu.iter().enumerate().skip(1) {
        if x.abs() > best_val {
            best = k;
            best_val = x.abs();
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive, StreamPurpose};

    #[test]
    fn zero_rewards_keep_everything_at_zero() {
        let mut s = IlstdState::new(
            4,
            IlstdVariant::Greedy,
            1,
            derive(1, StreamPurpose::LearnerInternal, 0, 0),
        );
        for (from, to) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            s.step(
                &Transition { from, reward: 0.0, to },
                0.3,
                0.9,
            );
        }
        assert!(s.v.iter().all(|&x| x == 0.0));
        assert!(s.mu.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn residual_tracks_b_minus_av() {
        let mut s = IlstdState::new(
            3,
            IlstdVariant::Greedy,
            1,
            derive(2, StreamPurpose::LearnerInternal, 0, 0),
        );
        let stream = [
            Transition { from: 0, reward: 1.0, to: 1 },
            Transition { from: 1, reward: -0.5, to: 2 },
            Transition { from: 2, reward: 0.25, to: 0 },
            Transition { from: 0, reward: 1.0, to: 2 },
        ];
        for t in &stream {
            s.step(t, 0.2, 0.9);
        }
        // Recompute μ = b - Av from scratch and compare.
        let a = s.a.to_dmatrix();
        let v = nalgebra::DVector::from_vec(s.v.clone());
        let b = nalgebra::DVector::from_vec(s.b.clone());
        let mu = b - a * v;
        for k in 0..3 {
            assert!((s.mu[k] - mu[k]).abs() < 1e-12, "μ[{k}] drifted");
        }
    }

    #[test]
    fn greedy_ties_break_to_lowest_index() {
        assert_eq!(argmax_abs(&[1.0, -1.0, 0.5]), 0);
        assert_eq!(argmax_abs(&[0.5, -1.0, 1.0]), 1);
    }

    #[test]
    fn two_state_cycle_converges_to_exact_value() {
        // Deterministic cycle 0→1→0 with rewards (1, 0), γ=0.9.
        let mrp = crate::mrp::Mrp::new(
            nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            nalgebra::DVector::from_vec(vec![1.0, 0.0]),
            0.9,
        )
        .unwrap();
        let vstar = crate::mrp::exact_value(&mrp).unwrap();
        let mut s = IlstdState::new(
            2,
            IlstdVariant::Greedy,
            1,
            derive(3, StreamPurpose::LearnerInternal, 0, 0),
        );
        let mut state = 0;
        for n in 1..40_000u64 {
            let to = 1 - state;
            let t = Transition {
                from: state,
                reward: mrp.reward()[state],
                to,
            };
            // A accumulates ~n, so harmonic α keeps the effective step
            // size constant and the residual iteration contracting.
            s.step(&t, 1.0 / n as f64, 0.9);
            state = to;
        }
        assert!((s.v[0] - vstar[0]).abs() < 1e-4, "v0 {} vs {}", s.v[0], vstar[0]);
        assert!((s.v[1] - vstar[1]).abs() < 1e-4, "v1 {} vs {}", s.v[1], vstar[1]);
    }
}
