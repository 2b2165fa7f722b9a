//! One-step TD and TD(λ) with accumulating eligibility traces.

use super::Transition;
use crate::linalg::AlignedVec;

#[derive(Debug, Clone)]
pub(crate) struct Td0State {
    pub v: Vec<f64>,
}

impl Td0State {
    pub fn new(n: usize) -> Self {
        Td0State { v: vec![0.0; n] }
    }

    pub fn step(&mut self, t: &Transition, alpha: f64, gamma: f64) {
        let delta = t.reward + gamma * self.v[t.to] - self.v[t.from];
        self.v[t.from] += alpha * delta;
    }
}

/// Accumulating eligibility traces with lazy decay: the stored trace is
/// `e_true = trace_scale · e_raw`, and each step multiplies the shared
/// scale instead of rewriting the whole vector, so e takes one store
/// per step rather than |S|. The scale renormalizes into the raw
/// entries long before it can underflow.
///
/// Values and raw traces share one aligned allocation with the trace
/// block skewed half a page: separately boxed vectors of certain sizes
/// land 4 KiB-aliased and the update loop then stalls on false
/// store-to-load conflicts.
#[derive(Debug, Clone)]
pub(crate) struct TdLambdaState {
    buf: AlignedVec,
    n: usize,
    elig_at: usize,
    trace_scale: f64,
    /// λ = 0 keeps the trace as a bare indicator; its position.
    indicator: Option<usize>,
    pub lambda: f64,
}

const RENORM_FLOOR: f64 = 1e-140;

impl TdLambdaState {
    pub fn new(n: usize, lambda: f64) -> Self {
        let skew = ((2048i64 - (8 * n as i64) % 4096).rem_euclid(4096) / 8) as usize;
        let elig_at = n + skew;
        TdLambdaState {
            buf: AlignedVec::zeros(elig_at + n),
            n,
            elig_at,
            trace_scale: 1.0,
            indicator: None,
            lambda,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.buf.as_slice()[..self.n]
    }

    #[cfg(test)]
    pub fn eligibility(&self) -> Vec<f64> {
        self.buf.as_slice()[self.elig_at..self.elig_at + self.n]
            .iter()
            .map(|e| self.trace_scale * e)
            .collect()
    }

    /// Accumulating traces: e ← [I]_{·from} + γλ·e, then v ← v + α·δ·e.
    /// The trace update happens before the value update uses it.
    pub fn step(&mut self, t: &Transition, alpha: f64, gamma: f64) {
        let delta = {
            let v = self.values();
            t.reward + gamma * v[t.to] - v[t.from]
        };
        let scale = alpha * delta;
        let decay = gamma * self.lambda;
        let (head, tail) = self.buf.as_mut_slice().split_at_mut(self.elig_at);
        let v = &mut head[..self.n];
        let e = &mut tail[..self.n];
        if decay == 0.0 {
            // Trace collapses to the indicator of the current state.
            if let Some(prev) = self.indicator.replace(t.from) {
                e[prev] = 0.0;
            }
            e[t.from] = 1.0;
            self.trace_scale = 1.0;
            v[t.from] += scale;
            return;
        }
        self.indicator = None;
        self.trace_scale *= decay;
        e[t.from] += 1.0 / self.trace_scale;
        let w = scale * self.trace_scale;
        for (vk, ek) in v.iter_mut().zip(e.iter()) {
            *vk += w * ek;
        }
        if self.trace_scale < RENORM_FLOOR {
            for ek in e.iter_mut() {
                *ek *= self.trace_scale;
            }
            self.trace_scale = 1.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T01: Transition = Transition {
        from: 0,
        reward: 1.0,
        to: 1,
    };

    #[test]
    fn lambda_zero_step_equals_td0() {
        let mut a = Td0State::new(3);
        let mut b = TdLambdaState::new(3, 0.0);
        for t in [T01, Transition { from: 1, reward: -0.5, to: 0 }] {
            a.step(&t, 0.1, 0.9);
            b.step(&t, 0.1, 0.9);
        }
        assert_eq!(a.v, b.values());
    }

    #[test]
    fn zero_td_error_leaves_values_but_decays_trace() {
        let mut s = TdLambdaState::new(2, 0.5);
        s.step(&T01, 0.5, 0.9); // builds a trace and changes v
        let reward = s.values()[1] - 0.9 * s.values()[0];
        let t2 = Transition {
            from: 1,
            reward,
            to: 0,
        };
        let v_before = s.values().to_vec();
        let e_before = s.eligibility().to_vec();
        s.step(&t2, 0.5, 0.9);
        assert_eq!(s.values(), v_before.as_slice());
        assert!((s.eligibility()[0] - (e_before[0] * 0.45)).abs() < 1e-15);
        assert!((s.eligibility()[1] - (e_before[1] * 0.45 + 1.0)).abs() < 1e-15);
    }
}
