//! Triple model learning: maintain a backward map S₀, a reward model r₀,
//! and a forward transition model P₀, and propagate *expected* TD errors:
//!
//! `v ← v + α·[S₀]_{·i}·([r₀]_i + γ·[P₀]_{i·}v − v[i])`
//!
//! The sampled next state only enters the models, never the value update.
//! The models are updated with the current transition before the value
//! update reads them, so the P₀ row in use is always normalized.

use super::model::SrModel;
use super::Transition;

/// Empirical transition counts with sparse per-row storage (observed
/// successors only) and observed-predecessor lists for the model-based
/// map-learning variant.
#[derive(Debug, Clone)]
pub(crate) struct TransModel {
    succ: Vec<Vec<(u32, u64)>>,
    total: Vec<u64>,
    preds: Vec<Vec<u32>>,
}

impl TransModel {
    pub fn new(n: usize) -> Self {
        TransModel {
            succ: vec![Vec::new(); n],
            total: vec![0; n],
            preds: vec![Vec::new(); n],
        }
    }

    pub fn record(&mut self, from: usize, to: usize) {
        let row = &mut self.succ[from];
        match row.iter_mut().find(|(s, _)| *s as usize == to) {
            Some((_, c)) => *c += 1,
            None => {
                row.push((to as u32, 1));
                self.preds[to].push(from as u32);
            }
        }
        self.total[from] += 1;
    }

    pub fn observed(&self, state: usize) -> bool {
        self.total[state] > 0
    }

    /// Estimated `Σ_j P̂(state → j)·v[j]`; O(observed successors).
    pub fn expected_value(&self, state: usize, v: &[f64]) -> f64 {
        let total = self.total[state] as f64;
        let mut acc = 0.0;
        for &(j, c) in &self.succ[state] {
            acc += (c as f64 / total) * v[j as usize];
        }
        acc
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        if self.total[from] == 0 {
            return 0.0;
        }
        self.succ[from]
            .iter()
            .find(|(s, _)| *s as usize == to)
            .map(|&(_, c)| c as f64 / self.total[from] as f64)
            .unwrap_or(0.0)
    }

    pub fn predecessors(&self, state: usize) -> &[u32] {
        &self.preds[state]
    }

    /// Dense row-stochastic estimate (unvisited rows stay zero).
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.succ.len();
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for from in 0..n {
            if self.total[from] == 0 {
                continue;
            }
            for &(to, c) in &self.succ[from] {
                m[(from, to as usize)] = c as f64 / self.total[from] as f64;
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub(crate) struct TripleModelState {
    pub v: Vec<f64>,
    pub trans: TransModel,
    pub r0: Vec<f64>,
    reward_obs: Vec<u64>,
    pub map: SrModel,
    /// Learn map columns from P₀ expectations instead of sampled
    /// transitions (drops importance sampling). Off by default.
    pub map_from_model: bool,
    col_buf: Vec<f64>,
    acc_buf: Vec<f64>,
}

impl TripleModelState {
    pub fn new(n: usize, lambda: f64, map_from_model: bool) -> Self {
        TripleModelState {
            v: vec![0.0; n],
            trans: TransModel::new(n),
            r0: vec![0.0; n],
            reward_obs: vec![0; n],
            map: SrModel::new(n, lambda, !map_from_model, true),
            map_from_model,
            col_buf: vec![0.0; n],
            acc_buf: vec![0.0; n],
        }
    }

    pub fn record_models(&mut self, t: &Transition) {
        self.trans.record(t.from, t.to);
        self.reward_obs[t.from] += 1;
        self.r0[t.from] += (t.reward - self.r0[t.from]) / self.reward_obs[t.from] as f64;
    }

    pub fn value_update(&mut self, t: &Transition, alpha: f64, gamma: f64) {
        debug_assert!(self.trans.observed(t.from));
        let expected_delta =
            self.r0[t.from] + gamma * self.trans.expected_value(t.from, &self.v) - self.v[t.from];
        let scale = alpha * expected_delta;
        self.map.s.read_col_into(t.from, &mut self.col_buf);
        for (v, s) in self.v.iter_mut().zip(&self.col_buf) {
            *v += scale * s;
        }
    }

    /// Expected column update from P₀ (no importance-sampling ratio):
    /// blend column `to` toward `[I]_{·to} + γλ·Σ_{i} P̂(i→to)·[S]_{·i}`
    /// over observed predecessors.
    pub fn model_based_col_update(&mut self, to: usize, gamma: f64, beta: f64) {
        self.acc_buf.fill(0.0);
        for &p in self.trans.predecessors(to) {
            let w = self.trans.prob(p as usize, to);
            if w == 0.0 {
                continue;
            }
            self.map.s.read_col_into(p as usize, &mut self.col_buf);
            for (acc, s) in self.acc_buf.iter_mut().zip(&self.col_buf) {
                *acc += w * s;
            }
        }
        let w = beta * gamma * self.map.lambda;
        self.map.s.blend_col(to, 1.0 - beta, w, &self.acc_buf, beta);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transition_model_normalizes() {
        let mut m = TransModel::new(3);
        m.record(0, 1);
        m.record(0, 1);
        m.record(0, 2);
        assert!((m.prob(0, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.prob(0, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.prob(1, 0), 0.0);
        assert_eq!(m.predecessors(1), &[0]);
        let v = [0.0, 3.0, -3.0];
        assert!((m.expected_value(0, &v) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_chain_expected_equals_sampled() {
        // On a deterministic transition the expected update equals the
        // sampled source-learning update exactly once the model has seen
        // the (single) successor.
        let mut triple = TripleModelState::new(2, 1.0, false);
        let t = Transition { from: 0, reward: 1.0, to: 1 };
        triple.record_models(&t);
        let mut expect = triple.v.clone();
        // sampled update with the same (identity) map: only v[0] moves.
        let delta = 1.0 + 0.9 * expect[1] - expect[0];
        expect[0] += 0.5 * delta;
        triple.value_update(&t, 0.5, 0.9);
        assert_eq!(triple.v, expect);
    }
}
