//! Experience replay over isolated transitions.
//!
//! Source-style updates depend only on the current map column for the
//! replayed state, never on trajectory context, so sampled out-of-order
//! transitions are as good as fresh ones. Eligibility-trace learners are
//! rejected up front: their short-term memory is meaningless off-trajectory.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::learners::{Learner, Transition};
use crate::rng::Rng;
use crate::schedules::Schedule;

/// Append-only, never evicting.
#[derive(Debug, Clone, Default)]
pub struct ReplayMemory {
    transitions: Vec<Transition>,
}

impl ReplayMemory {
    pub fn new() -> Self {
        ReplayMemory::default()
    }

    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Uniform draw with replacement.
    pub fn sample(&self, rng: &mut Rng) -> Result<Transition> {
        if self.transitions.is_empty() {
            return Err(Error::EmptyMemory);
        }
        Ok(self.transitions[rng.random_range(0..self.transitions.len())])
    }
}

/// Apply `k` replayed updates to the learner. Rates are resolved at the
/// current real step `global_step`; `model_updates` false restricts the
/// replays to value-only updates.
pub fn replay_step(
    mem: &ReplayMemory,
    learner: &mut Learner,
    k: usize,
    rng: &mut Rng,
    global_step: u64,
    alpha: &Schedule,
    beta: &Schedule,
    model_updates: bool,
) -> Result<()> {
    if learner.uses_eligibility_traces() {
        return Err(Error::config(
            "eligibility-trace learners cannot replay isolated transitions",
        ));
    }
    if k > 0 && mem.is_empty() {
        return Err(Error::EmptyMemory);
    }
    for _ in 0..k {
        let t = mem.sample(rng)?;
        learner.replay_update(&t, global_step, alpha, beta, model_updates)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::LearnerKind;
    use crate::rng::{derive, StreamPurpose};

    #[test]
    fn push_then_sample_single_item() {
        let mut mem = ReplayMemory::new();
        let t = Transition { from: 3, reward: 1.5, to: 4 };
        mem.push(t);
        let mut rng = derive(0, StreamPurpose::Replay, 0, 0);
        assert_eq!(mem.sample(&mut rng).unwrap(), t);
        assert_eq!(mem.len(), 1);
    }

    #[test]
    fn empty_memory_is_an_error() {
        let mem = ReplayMemory::new();
        let mut rng = derive(0, StreamPurpose::Replay, 0, 0);
        assert!(matches!(mem.sample(&mut rng), Err(Error::EmptyMemory)));
    }

    #[test]
    fn uniform_sampling_histogram() {
        let mut mem = ReplayMemory::new();
        for s in 0..10 {
            mem.push(Transition { from: s, reward: 0.0, to: s });
        }
        let mut rng = derive(5, StreamPurpose::Replay, 0, 0);
        let draws = 100_000;
        let mut hist = [0usize; 10];
        for _ in 0..draws {
            hist[mem.sample(&mut rng).unwrap().from] += 1;
        }
        for (s, &h) in hist.iter().enumerate() {
            let f = h as f64 / draws as f64;
            assert!((0.08..=0.12).contains(&f), "state {s} frequency {f}");
        }
    }

    #[test]
    fn k_zero_changes_nothing() {
        let mut mem = ReplayMemory::new();
        mem.push(Transition { from: 0, reward: 1.0, to: 1 });
        let mut learner = Learner::new(LearnerKind::Td0, 2, 0.9).unwrap();
        learner.begin_run(0, 0.1);
        let before = learner.value_estimate();
        let mut rng = derive(1, StreamPurpose::Replay, 0, 0);
        replay_step(
            &mem,
            &mut learner,
            0,
            &mut rng,
            1,
            &Schedule::Fixed(0.1),
            &Schedule::Fixed(0.1),
            true,
        )
        .unwrap();
        assert_eq!(before, learner.value_estimate());
    }

    #[test]
    fn eligibility_learners_are_rejected() {
        let mut mem = ReplayMemory::new();
        mem.push(Transition { from: 0, reward: 1.0, to: 1 });
        let mut learner = Learner::new(LearnerKind::TdLambda { lambda: 0.5 }, 2, 0.9).unwrap();
        let mut rng = derive(1, StreamPurpose::Replay, 0, 0);
        let err = replay_step(
            &mem,
            &mut learner,
            1,
            &mut rng,
            1,
            &Schedule::Fixed(0.1),
            &Schedule::Fixed(0.1),
            true,
        );
        assert!(err.is_err());
    }

    #[test]
    fn replayed_td0_is_three_extra_backups() {
        let mut mem = ReplayMemory::new();
        let t = Transition { from: 0, reward: 1.0, to: 1 };
        mem.push(t);
        let mut with_replay = Learner::new(LearnerKind::Td0, 2, 0.5).unwrap();
        let mut manual = Learner::new(LearnerKind::Td0, 2, 0.5).unwrap();
        with_replay.begin_run(0, 0.1);
        manual.begin_run(0, 0.1);
        let a = Schedule::Fixed(0.25);
        let b = Schedule::Fixed(0.1);
        let mut rng = derive(2, StreamPurpose::Replay, 0, 0);
        replay_step(&mem, &mut with_replay, 3, &mut rng, 1, &a, &b, true).unwrap();
        for _ in 0..3 {
            manual.step_scheduled(&t, 1, &a, &b).unwrap();
        }
        assert_eq!(
            with_replay.value_estimate().as_slice(),
            manual.value_estimate().as_slice()
        );
    }
}
