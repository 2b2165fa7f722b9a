//! Deterministic randomness with documented stream splitting.
//!
//! Everything random in this crate draws from ChaCha8 generators derived
//! from a single master seed. A derived generator is identified by the
//! tuple `(master_seed, purpose, a, b)`, packed little-endian into the
//! full 32-byte ChaCha seed, so distinct purposes and indices yield
//! independent streams by construction:
//!
//! * `EnvGen, a = env_index` — environment construction,
//! * `Trajectory, a = env_index` — the transition stream for one
//!   environment, shared verbatim by every learner compared on it,
//! * `Replay, a = env_index, b = config_index` — replay-memory sampling,
//! * `LearnerInternal, a = env_index, b = config_index` — learner-internal
//!   draws (iLSTD's random dimension choice),
//! * `Check, a = suite-specific` — invariant-suite instances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    EnvGen = 1,
    Trajectory = 2,
    Replay = 3,
    LearnerInternal = 4,
    Check = 5,
}

/// Derive an independent generator for `(master_seed, purpose, a, b)`.
pub fn derive(master_seed: u64, purpose: StreamPurpose, a: u64, b: u64) -> Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    seed[16..24].copy_from_slice(&a.to_le_bytes());
    seed[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn derivation_is_deterministic() {
        let mut a = derive(7, StreamPurpose::Trajectory, 3, 0);
        let mut b = derive(7, StreamPurpose::Trajectory, 3, 0);
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_differ_across_purpose_and_index() {
        let mut base = derive(7, StreamPurpose::Trajectory, 3, 0);
        let mut other_purpose = derive(7, StreamPurpose::Replay, 3, 0);
        let mut other_index = derive(7, StreamPurpose::Trajectory, 4, 0);
        let x = base.next_u64();
        assert_ne!(x, other_purpose.next_u64());
        assert_ne!(x, other_index.next_u64());
    }
}
