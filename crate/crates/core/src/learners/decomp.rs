//! SR-reward decomposition: learn the map and the reward vector as two
//! independent problems and read v = S₀·r₀ on demand.

use super::direct::MapModel;
use super::Transition;

#[derive(Debug, Clone)]
pub(crate) struct DecompositionState {
    pub r0: Vec<f64>,
    reward_obs: Vec<u64>,
    pub map: MapModel,
    /// `None` keeps the exact per-state running mean (converges in one
    /// visit for deterministic rewards); `Some(rate)` is the stochastic
    /// variant for the reward-noise hook.
    pub reward_rate: Option<f64>,
}

impl DecompositionState {
    pub fn new(n: usize, map: MapModel, reward_rate: Option<f64>) -> Self {
        DecompositionState {
            r0: vec![0.0; n],
            reward_obs: vec![0; n],
            map,
            reward_rate,
        }
    }

    pub fn reward_update(&mut self, t: &Transition) {
        match self.reward_rate {
            None => {
                self.reward_obs[t.from] += 1;
                let k = self.reward_obs[t.from] as f64;
                self.r0[t.from] += (t.reward - self.r0[t.from]) / k;
            }
            Some(rate) => self.r0[t.from] += rate * (t.reward - self.r0[t.from]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrp::{exact_source_map, exact_value, two_state_counterexample};

    #[test]
    fn running_mean_learns_deterministic_reward_in_one_visit() {
        let mrp = two_state_counterexample();
        let map = MapModel::Fixed(exact_source_map(&mrp).unwrap());
        let mut d = DecompositionState::new(2, map, None);
        d.reward_update(&Transition { from: 0, reward: 3.5, to: 1 });
        assert_eq!(d.r0[0], 3.5);
        d.reward_update(&Transition { from: 0, reward: 3.5, to: 0 });
        assert_eq!(d.r0[0], 3.5);
    }

    #[test]
    fn exact_models_give_exact_values() {
        let mrp = crate::mrp::Mrp::new(
            nalgebra::DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]),
            nalgebra::DVector::from_vec(vec![1.0, -2.0]),
            0.5,
        )
        .unwrap();
        let map = MapModel::Fixed(exact_source_map(&mrp).unwrap());
        let mut d = DecompositionState::new(2, map, None);
        d.r0 = vec![1.0, -2.0];
        let mut v = vec![0.0; 2];
        d.map.matvec(&d.r0, &mut v);
        let vstar = exact_value(&mrp).unwrap();
        assert!((v[0] - vstar[0]).abs() < 1e-10);
        assert!((v[1] - vstar[1]).abs() < 1e-10);
    }
}
