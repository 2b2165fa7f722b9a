//! Source learning: the sampled asynchronous update
//! `v ← v + α·[S₀]_{·i}·δ`, with the map either given (ideal/partial) or
//! learned online in column, row, or combined style.

use super::model::SrModel;
use super::Transition;
use crate::mrp::SourceMap;

/// Source learning with a fixed map (exact, n-step, λ, or partial).
#[derive(Debug, Clone)]
pub(crate) struct IdealSourceState {
    pub v: Vec<f64>,
    pub map: SourceMap,
}

impl IdealSourceState {
    pub fn new(n: usize, map: SourceMap) -> Self {
        debug_assert_eq!(map.num_states(), n);
        IdealSourceState {
            v: vec![0.0; n],
            map,
        }
    }

    pub fn step(&mut self, t: &Transition, alpha: f64, gamma: f64) {
        let delta = t.reward + gamma * self.v[t.to] - self.v[t.from];
        let scale = alpha * delta;
        for (v, s) in self.v.iter_mut().zip(self.map.col(t.from)) {
            *v += scale * s;
        }
    }
}

/// Source learning on a learned map: TD Source (column updates),
/// TD SR (row updates), or TD Source-SR (both).
#[derive(Debug, Clone)]
pub(crate) struct LearnedSourceState {
    pub v: Vec<f64>,
    pub model: SrModel,
    col_buf: Vec<f64>,
}

impl LearnedSourceState {
    pub fn new(n: usize, lambda: f64, col_updates: bool, row_updates: bool) -> Self {
        LearnedSourceState {
            v: vec![0.0; n],
            model: SrModel::new(n, lambda, col_updates, row_updates),
            col_buf: vec![0.0; n],
        }
    }

    /// Value update with the current column for `t.from` (Algorithm
    /// line order: value first, then counts, then the map updates,
    /// which the caller drives via `model.observe`).
    pub fn value_update(&mut self, t: &Transition, alpha: f64, gamma: f64) {
        let delta = t.reward + gamma * self.v[t.to] - self.v[t.from];
        let scale = alpha * delta;
        self.model.s.read_col_into(t.from, &mut self.col_buf);
        for (v, s) in self.v.iter_mut().zip(&self.col_buf) {
            *v += scale * s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrp::{exact_source_map, two_state_counterexample};

    #[test]
    fn counterexample_expansion_is_exact() {
        // v₀ = [1, -1], backup from state 0 with the exact map and a
        // transition crafted so δ = -1 yields exactly [-0.5, -1.5]:
        // the second coordinate moves away from its optimum.
        let mrp = two_state_counterexample();
        let map = exact_source_map(&mrp).unwrap();
        let mut learner = IdealSourceState::new(2, map);
        learner.v = vec![1.0, -1.0];
        let t = Transition {
            from: 0,
            reward: 0.5,
            to: 1,
        };
        learner.step(&t, 1.0, mrp.gamma());
        assert_eq!(learner.v, vec![-0.5, -1.5]);
        assert!((learner.v[1] - 0.0).abs() > 1.0); // expanded beyond |v₀[1]|
    }

    #[test]
    fn identity_map_reduces_to_td0() {
        let mrp = two_state_counterexample();
        let map = crate::mrp::partial_source_map(&mrp, 1, 1.0).unwrap();
        let mut ideal = IdealSourceState::new(2, map);
        let mut td0 = super::super::td::Td0State::new(2);
        let stream = [
            Transition { from: 0, reward: 1.0, to: 1 },
            Transition { from: 1, reward: -2.0, to: 1 },
            Transition { from: 1, reward: 0.25, to: 0 },
        ];
        for t in &stream {
            ideal.step(t, 0.3, 0.5);
            td0.step(t, 0.3, 0.5);
        }
        assert_eq!(ideal.v, td0.v);
    }

    #[test]
    fn row_recurrence_fixed_point_on_two_cycle() {
        // Deterministic 2-cycle, γλ = 0.5, β = 1: alternating row updates
        // converge to the true decayed map rows [4/3, 2/3].
        let mut s = LearnedSourceState::new(2, 1.0, false, true);
        let counts = vec![1u64, 1u64];
        for k in 0..200 {
            let (from, to) = if k % 2 == 0 { (0, 1) } else { (1, 0) };
            s.model.observe(from, to, 0.5, 1.0, 1.0, &counts);
        }
        assert!((s.model.s.get(0, 0) - 4.0 / 3.0).abs() < 1e-9);
        assert!((s.model.s.get(0, 1) - 2.0 / 3.0).abs() < 1e-9);
        assert!((s.model.s.get(1, 1) - 4.0 / 3.0).abs() < 1e-9);
    }
}
