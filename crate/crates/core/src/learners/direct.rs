//! Direct methods working in pseudo-reward space.
//!
//! Both algorithms read values through the model, v = S₀·w, and differ
//! only in how they move the weight vector on a TD error δ:
//!
//! * White's algorithm updates one element: `w[i] += α·δ`.
//! * Pseudo-reward descent is the semi-gradient rule over the SR
//!   features: `w ← w + α·δ·[S₀]_{i·}`, touching potentially every
//!   element.
//!
//! The map is either fixed (for equivalence studies) or learned in the
//! combined column+row style alongside.

use super::model::SrModel;
use super::Transition;
use crate::linalg::SquareMat;
use crate::mrp::SourceMap;

/// Fixed or online-learned source map behind one read interface.
#[derive(Debug, Clone)]
pub(crate) enum MapModel {
    Fixed(SourceMap),
    Learned(SrModel),
}

impl MapModel {
    pub fn learned(n: usize, lambda: f64) -> Self {
        MapModel::Learned(SrModel::new(n, lambda, true, true))
    }

    pub fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        match self {
            MapModel::Fixed(map) => {
                let m = map.matrix();
                let mut acc = 0.0;
                for (c, x) in w.iter().enumerate() {
                    acc += m[(i, c)] * x;
                }
                acc
            }
            MapModel::Learned(m) => m.s.row_dot(i, w),
        }
    }

    /// `out[c] += a·S₀[i, c]`.
    pub fn row_axpy_into(&self, i: usize, a: f64, out: &mut [f64]) {
        match self {
            MapModel::Fixed(map) => {
                let m = map.matrix();
                for (c, slot) in out.iter_mut().enumerate() {
                    *slot += a * m[(i, c)];
                }
            }
            MapModel::Learned(m) => m.s.row_axpy_into(i, a, out),
        }
    }

    /// `out = S₀·w`.
    pub fn matvec(&self, w: &[f64], out: &mut [f64]) {
        match self {
            MapModel::Fixed(map) => {
                out.fill(0.0);
                let m = map.matrix();
                let n = m.nrows();
                for (j, &x) in w.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    let col = &m.as_slice()[j * n..(j + 1) * n];
                    for (slot, s) in out.iter_mut().zip(col) {
                        *slot += x * s;
                    }
                }
            }
            MapModel::Learned(m) => m.s.matvec(w, out),
        }
    }

    pub fn begin_run(&mut self, initial_state: usize, beta: f64) {
        if let MapModel::Learned(m) = self {
            m.begin_run(initial_state, beta);
        }
    }

    pub fn observe(
        &mut self,
        from: usize,
        to: usize,
        gamma: f64,
        beta_col: f64,
        beta_row: f64,
        counts: &[u64],
    ) {
        if let MapModel::Learned(m) = self {
            m.observe(from, to, gamma, beta_col, beta_row, counts);
        }
    }

    pub fn learned_mut(&mut self) -> Option<&mut SrModel> {
        match self {
            MapModel::Learned(m) => Some(m),
            MapModel::Fixed(_) => None,
        }
    }

    pub fn learned_matrix(&self) -> Option<&SquareMat> {
        match self {
            MapModel::Learned(m) => Some(&m.s),
            MapModel::Fixed(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DirectRule {
    /// Single-element pseudo-reward update.
    White,
    /// Full semi-gradient step along the SR feature row.
    Descent,
}

#[derive(Debug, Clone)]
pub(crate) struct DirectState {
    /// Pseudo-rewards (White) or weights θ (descent).
    pub weights: Vec<f64>,
    pub map: MapModel,
    pub rule: DirectRule,
}

impl DirectState {
    pub fn new(n: usize, map: MapModel, rule: DirectRule) -> Self {
        DirectState {
            weights: vec![0.0; n],
            map,
            rule,
        }
    }

    /// δ from the implied values, then the rule's weight update. Map
    /// updates follow separately (the weight step comes first, matching
    /// the value-first ordering of the direct value algorithms).
    pub fn weight_update(&mut self, t: &Transition, alpha: f64, gamma: f64) {
        let v_from = self.map.row_dot(t.from, &self.weights);
        let v_to = self.map.row_dot(t.to, &self.weights);
        let delta = t.reward + gamma * v_to - v_from;
        match self.rule {
            DirectRule::White => self.weights[t.from] += alpha * delta,
            DirectRule::Descent => self.map.row_axpy_into(t.from, alpha * delta, &mut self.weights),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrp::{partial_source_map, two_state_counterexample};

    fn identity_map() -> MapModel {
        let mrp = two_state_counterexample();
        MapModel::Fixed(partial_source_map(&mrp, 1, 1.0).unwrap())
    }

    #[test]
    fn white_with_identity_map_is_td0() {
        let mut white = DirectState::new(2, identity_map(), DirectRule::White);
        let mut td0 = super::super::td::Td0State::new(2);
        let stream = [
            Transition { from: 0, reward: 1.0, to: 1 },
            Transition { from: 1, reward: 0.5, to: 0 },
            Transition { from: 0, reward: -1.0, to: 0 },
        ];
        for t in &stream {
            white.weight_update(t, 0.2, 0.5);
            td0.step(t, 0.2, 0.5);
        }
        assert_eq!(white.weights, td0.v);
    }

    #[test]
    fn descent_with_identity_map_is_td0() {
        let mut prd = DirectState::new(2, identity_map(), DirectRule::Descent);
        let mut td0 = super::super::td::Td0State::new(2);
        let stream = [
            Transition { from: 0, reward: 1.0, to: 1 },
            Transition { from: 1, reward: 0.5, to: 0 },
        ];
        for t in &stream {
            prd.weight_update(t, 0.2, 0.5);
            td0.step(t, 0.2, 0.5);
        }
        assert_eq!(prd.weights, td0.v);
    }

    #[test]
    fn zero_delta_leaves_weights() {
        let mut prd = DirectState::new(2, identity_map(), DirectRule::Descent);
        prd.weights = vec![2.0, 4.0];
        // δ = r + γ·w[to] - w[from] = 0 for r = w[from] - γ·w[to].
        let t = Transition {
            from: 0,
            reward: 2.0 - 0.5 * 4.0,
            to: 1,
        };
        prd.weight_update(&t, 0.7, 0.5);
        assert_eq!(prd.weights, vec![2.0, 4.0]);
    }
}
