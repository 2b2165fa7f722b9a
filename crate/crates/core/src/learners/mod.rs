//! Incremental learners behind one uniform step interface.
//!
//! Every algorithm consumes one observed transition per step and runs in
//! O(|S|) time (O(|S|²) memory where a full matrix model is kept). The
//! uniform sequencing inside a step is:
//!
//! 1. evaluate α with the visit count of the TD-error source state,
//! 2. apply the algorithm's value/weight update,
//! 3. count the destination state,
//! 4. apply model updates (learned map columns/rows, transition and
//!    reward models) with β evaluated per updated state.
//!
//! All learners share one counts vector with the same semantics as the
//! tabular source-trace algorithm (initial state counted at run start,
//! destination counted each step); the column-style learners use it as
//! their importance-sampling counts, everything else only for per-state
//! schedules.

mod decomp;
mod direct;
mod ilstd;
mod model;
mod source;
mod td;
mod triple;

use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::SquareMat;
use crate::mrp::{SourceMap, ValueVector};
use crate::rng;
use crate::schedules::Schedule;

use decomp::DecompositionState;
use direct::{DirectRule, DirectState, MapModel};
pub use ilstd::IlstdVariant;
use ilstd::IlstdState;
use source::{IdealSourceState, LearnedSourceState};
use td::{Td0State, TdLambdaState};
use triple::TripleModelState;

/// One observed step: state, reward on leaving it, successor state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub reward: f64,
    pub to: usize,
}

/// Algorithm selection. Learners that keep an online source-map model
/// learn it in the combined column+row style unless a fixed map is
/// supplied.
#[derive(Debug, Clone)]
pub enum LearnerKind {
    Td0,
    TdLambda {
        lambda: f64,
    },
    /// Sampled source learning with a fixed (ideal or partial) map.
    IdealSource {
        map: SourceMap,
    },
    TdSource {
        lambda: f64,
    },
    TdSr {
        lambda: f64,
    },
    TdSourceSr {
        lambda: f64,
        /// Apply the row update before the column update. Default order
        /// is column-first.
        row_first: bool,
    },
    White {
        lambda: f64,
        fixed_map: Option<SourceMap>,
    },
    PseudoRewardDescent {
        lambda: f64,
        fixed_map: Option<SourceMap>,
    },
    SrRewardDecomposition {
        lambda: f64,
        fixed_map: Option<SourceMap>,
        /// `None` = exact running mean; `Some(rate)` = stochastic updates.
        reward_rate: Option<f64>,
    },
    TripleModel {
        lambda: f64,
        /// Learn map columns from the transition model instead of
        /// sampled experience.
        map_from_model: bool,
    },
    Ilstd {
        variant: IlstdVariant,
        m: usize,
        /// Seed for the random-variant dimension choice.
        seed: u64,
    },
}

/// Linear annealing of the model λ from its construction value to
/// `target` over the first `over_steps` scheduled steps.
#[derive(Debug, Clone, Copy)]
pub struct LambdaAnneal {
    pub target: f64,
    pub over_steps: u64,
}

#[derive(Debug, Clone)]
enum State {
    Td0(Td0State),
    TdLambda(TdLambdaState),
    Ideal(IdealSourceState),
    LearnedSource(LearnedSourceState),
    Direct(DirectState),
    Decomposition(DecompositionState),
    Triple(TripleModelState),
    Ilstd(IlstdState),
}

enum Rates<'a> {
    Raw { alpha: f64, beta: f64 },
    Scheduled { n: u64, alpha: &'a Schedule, beta: &'a Schedule },
}

impl Rates<'_> {
    fn alpha(&self, visit_count: u64) -> Result<f64> {
        match self {
            Rates::Raw { alpha, .. } => Ok(*alpha),
            Rates::Scheduled { n, alpha, .. } => alpha.rate(*n, visit_count),
        }
    }

    fn beta(&self, visit_count: u64) -> Result<f64> {
        match self {
            Rates::Raw { beta, .. } => Ok(*beta),
            Rates::Scheduled { n, beta, .. } => beta.rate(*n, visit_count),
        }
    }

    fn global_step(&self) -> Option<u64> {
        match self {
            Rates::Raw { .. } => None,
            Rates::Scheduled { n, .. } => Some(*n),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Learner {
    gamma: f64,
    n: usize,
    visits: Vec<u64>,
    state: State,
    base_lambda: f64,
    lambda_anneal: Option<LambdaAnneal>,
    cache: Option<DVector<f64>>,
}

impl Learner {
    pub fn new(kind: LearnerKind, num_states: usize, gamma: f64) -> Result<Self> {
        if num_states == 0 {
            return Err(Error::config("learner needs at least one state"));
        }
        let check_lambda = |lambda: f64| -> Result<f64> {
            if (0.0..=1.0).contains(&lambda) {
                Ok(lambda)
            } else {
                Err(Error::config(format!("lambda must be in [0, 1], got {lambda}")))
            }
        };
        let check_map = |map: &SourceMap| -> Result<()> {
            if map.num_states() == num_states {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    expected: num_states,
                    got: map.num_states(),
                })
            }
        };
        let mut base_lambda = 1.0;
        let state = match kind {
            LearnerKind::Td0 => State::Td0(Td0State::new(num_states)),
            LearnerKind::TdLambda { lambda } => {
                base_lambda = check_lambda(lambda)?;
                State::TdLambda(TdLambdaState::new(num_states, lambda))
            }
            LearnerKind::IdealSource { map } => {
                check_map(&map)?;
                State::Ideal(IdealSourceState::new(num_states, map))
            }
            LearnerKind::TdSource { lambda } => {
                base_lambda = check_lambda(lambda)?;
                State::LearnedSource(LearnedSourceState::new(num_states, lambda, true, false))
            }
            LearnerKind::TdSr { lambda } => {
                base_lambda = check_lambda(lambda)?;
                State::LearnedSource(LearnedSourceState::new(num_states, lambda, false, true))
            }
            LearnerKind::TdSourceSr { lambda, row_first } => {
                base_lambda = check_lambda(lambda)?;
                let mut s = LearnedSourceState::new(num_states, lambda, true, true);
                s.model.row_first = row_first;
                State::LearnedSource(s)
            }
            LearnerKind::White { lambda, fixed_map } => {
                base_lambda = check_lambda(lambda)?;
                let map = match fixed_map {
                    Some(map) => {
                        check_map(&map)?;
                        MapModel::Fixed(map)
                    }
                    None => MapModel::learned(num_states, lambda),
                };
                State::Direct(DirectState::new(num_states, map, DirectRule::White))
            }
            LearnerKind::PseudoRewardDescent { lambda, fixed_map } => {
                base_lambda = check_lambda(lambda)?;
                let map = match fixed_map {
                    Some(map) => {
                        check_map(&map)?;
                        MapModel::Fixed(map)
                    }
                    None => MapModel::learned(num_states, lambda),
                };
                State::Direct(DirectState::new(num_states, map, DirectRule::Descent))
            }
            LearnerKind::SrRewardDecomposition {
                lambda,
                fixed_map,
                reward_rate,
            } => {
                base_lambda = check_lambda(lambda)?;
                let map = match fixed_map {
                    Some(map) => {
                        check_map(&map)?;
                        MapModel::Fixed(map)
                    }
                    None => MapModel::learned(num_states, lambda),
                };
                State::Decomposition(DecompositionState::new(num_states, map, reward_rate))
            }
            LearnerKind::TripleModel {
                lambda,
                map_from_model,
            } => {
                base_lambda = check_lambda(lambda)?;
                State::Triple(TripleModelState::new(num_states, lambda, map_from_model))
            }
            LearnerKind::Ilstd { variant, m, seed } => {
                if m == 0 {
                    return Err(Error::config("iLSTD needs m >= 1"));
                }
                let rng = rng::derive(seed, rng::StreamPurpose::LearnerInternal, 0, 0);
                State::Ilstd(IlstdState::new(num_states, variant, m, rng))
            }
        };
        Ok(Learner {
            gamma,
            n: num_states,
            visits: vec![0; num_states],
            state,
            base_lambda,
            lambda_anneal: None,
            cache: None,
        })
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn visits(&self) -> &[u64] {
        &self.visits
    }

    /// Does this learner keep per-trajectory eligibility state? Such
    /// learners cannot consume isolated replayed transitions.
    pub fn uses_eligibility_traces(&self) -> bool {
        matches!(&self.state, State::TdLambda(s) if s.lambda > 0.0)
    }

    /// Opt-in clamp on importance-sampling ratios in learned-map column
    /// updates. Off by default.
    pub fn set_ratio_cap(&mut self, cap: Option<f64>) {
        if let Some(m) = self.learned_model_mut() {
            m.ratio_cap = cap;
        }
    }

    pub fn set_lambda_anneal(&mut self, anneal: Option<LambdaAnneal>) {
        self.lambda_anneal = anneal;
    }

    /// Run-start initialization: count the initial state and, for
    /// column-style learned maps, blend its column toward the indicator.
    pub fn begin_run(&mut self, initial_state: usize, beta: f64) {
        assert!(initial_state < self.n);
        self.visits[initial_state] += 1;
        match &mut self.state {
            State::LearnedSource(s) => s.model.begin_run(initial_state, beta),
            State::Direct(s) => s.map.begin_run(initial_state, beta),
            State::Decomposition(s) => s.map.begin_run(initial_state, beta),
            State::Triple(s) => s.map.begin_run(initial_state, beta),
            _ => {}
        }
        self.cache = None;
    }

    pub fn begin_run_scheduled(&mut self, initial_state: usize, beta: &Schedule) -> Result<()> {
        let rate = beta.rate(1, self.visits[initial_state] + 1)?;
        self.begin_run(initial_state, rate);
        Ok(())
    }

    /// One update with explicit rates.
    pub fn step(&mut self, t: &Transition, alpha: f64, beta: f64) -> Result<()> {
        self.apply(t, &Rates::Raw { alpha, beta }, true)
    }

    /// One update with schedule-resolved rates; `global_step` is 1-based.
    pub fn step_scheduled(
        &mut self,
        t: &Transition,
        global_step: u64,
        alpha: &Schedule,
        beta: &Schedule,
    ) -> Result<()> {
        self.apply(
            t,
            &Rates::Scheduled {
                n: global_step,
                alpha,
                beta,
            },
            true,
        )
    }

    /// Replayed update. With `model_updates` false only the value-family
    /// update runs: counts and map/transition/reward models are left
    /// untouched.
    pub fn replay_update(
        &mut self,
        t: &Transition,
        global_step: u64,
        alpha: &Schedule,
        beta: &Schedule,
        model_updates: bool,
    ) -> Result<()> {
        self.apply(
            t,
            &Rates::Scheduled {
                n: global_step,
                alpha,
                beta,
            },
            model_updates,
        )
    }

    fn apply(&mut self, t: &Transition, rates: &Rates, model_updates: bool) -> Result<()> {
        assert!(t.from < self.n && t.to < self.n, "transition out of range");
        if let (Some(anneal), Some(n)) = (self.lambda_anneal, rates.global_step()) {
            let frac = (n as f64 / anneal.over_steps as f64).min(1.0);
            let lambda = self.base_lambda + (anneal.target - self.base_lambda) * frac;
            if let Some(m) = self.learned_model_mut() {
                m.lambda = lambda;
            }
        }
        let alpha = rates.alpha(self.visits[t.from].max(1))?;
        let gamma = self.gamma;

        match &mut self.state {
            State::Td0(s) => s.step(t, alpha, gamma),
            State::TdLambda(s) => s.step(t, alpha, gamma),
            State::Ideal(s) => s.step(t, alpha, gamma),
            State::LearnedSource(s) => s.value_update(t, alpha, gamma),
            State::Direct(s) => s.weight_update(t, alpha, gamma),
            State::Decomposition(s) => s.reward_update(t),
            State::Triple(s) => {
                if model_updates {
                    s.record_models(t);
                }
                s.value_update(t, alpha, gamma);
            }
            State::Ilstd(s) => s.step(t, alpha, gamma),
        }

        if model_updates {
            self.visits[t.to] += 1;
            let beta_col = rates.beta(self.visits[t.to])?;
            let beta_row = rates.beta(self.visits[t.from].max(1))?;
            match &mut self.state {
                State::LearnedSource(s) => {
                    s.model
                        .observe(t.from, t.to, gamma, beta_col, beta_row, &self.visits);
                }
                State::Direct(s) => {
                    s.map
                        .observe(t.from, t.to, gamma, beta_col, beta_row, &self.visits);
                }
                State::Decomposition(s) => {
                    s.map
                        .observe(t.from, t.to, gamma, beta_col, beta_row, &self.visits);
                }
                State::Triple(s) => {
                    if s.map_from_model {
                        s.model_based_col_update(t.to, gamma, beta_col);
                        s.map.observe(t.from, t.to, gamma, beta_col, beta_row, &self.visits);
                    } else {
                        s.map.observe(t.from, t.to, gamma, beta_col, beta_row, &self.visits);
                    }
                }
                _ => {}
            }
        }

        self.cache = None;
        Ok(())
    }

    /// Current value estimate. Direct-value learners return their stored
    /// vector; model-readers materialize S₀·w. Cached between updates.
    pub fn value_estimate(&mut self) -> ValueVector {
        if self.cache.is_none() {
            let v = match &self.state {
                State::Td0(s) => DVector::from_column_slice(&s.v),
                State::TdLambda(s) => DVector::from_column_slice(s.values()),
                State::Ideal(s) => DVector::from_column_slice(&s.v),
                State::LearnedSource(s) => DVector::from_column_slice(&s.v),
                State::Triple(s) => DVector::from_column_slice(&s.v),
                State::Ilstd(s) => DVector::from_column_slice(&s.v),
                State::Direct(s) => {
                    let mut out = vec![0.0; self.n];
                    s.map.matvec(&s.weights, &mut out);
                    DVector::from_vec(out)
                }
                State::Decomposition(s) => {
                    let mut out = vec![0.0; self.n];
                    s.map.matvec(&s.r0, &mut out);
                    DVector::from_vec(out)
                }
            };
            self.cache = Some(v);
        }
        ValueVector(self.cache.clone().expect("just filled"))
    }

    /// The online-learned map matrix, when one exists.
    pub fn learned_map(&self) -> Option<&SquareMat> {
        match &self.state {
            State::LearnedSource(s) => Some(&s.model.s),
            State::Direct(s) => s.map.learned_matrix(),
            State::Decomposition(s) => s.map.learned_matrix(),
            State::Triple(s) => Some(&s.map.s),
            _ => None,
        }
    }

    fn learned_model_mut(&mut self) -> Option<&mut model::SrModel> {
        match &mut self.state {
            State::LearnedSource(s) => Some(&mut s.model),
            State::Direct(s) => s.map.learned_mut(),
            State::Decomposition(s) => s.map.learned_mut(),
            State::Triple(s) => Some(&mut s.map),
            _ => None,
        }
    }

    pub fn snapshot(&mut self) -> LearnerSnapshot {
        let values = self.value_estimate().as_slice().to_vec();
        let source_map = self
            .learned_map()
            .map(|m| SourceMap::learned(m.to_dmatrix(), self.gamma));
        let (reward_model, transition_model) = match &self.state {
            State::Direct(s) => (Some(s.weights.clone()), None),
            State::Decomposition(s) => (Some(s.r0.clone()), None),
            State::Triple(s) => (Some(s.r0.clone()), Some(s.trans.to_dense())),
            _ => (None, None),
        };
        LearnerSnapshot {
            values,
            source_map,
            reward_model,
            transition_model,
            counts: self.visits.clone(),
        }
    }
}

/// Serializable view of a learner's models for post-hoc inspection.
#[derive(Debug, Clone)]
pub struct LearnerSnapshot {
    pub values: Vec<f64>,
    pub source_map: Option<SourceMap>,
    pub reward_model: Option<Vec<f64>>,
    pub transition_model: Option<nalgebra::DMatrix<f64>>,
    pub counts: Vec<u64>,
}

impl LearnerSnapshot {
    /// Write each present component as `<prefix>_<part>.csv` under `dir`.
    pub fn write_to_dir(&self, dir: &Path, prefix: &str) -> Result<()> {
        crate::io::write_value_csv(&self.values, &dir.join(format!("{prefix}_values.csv")))?;
        let counts: Vec<f64> = self.counts.iter().map(|&c| c as f64).collect();
        crate::io::write_value_csv(&counts, &dir.join(format!("{prefix}_counts.csv")))?;
        if let Some(map) = &self.source_map {
            crate::io::write_matrix_csv(map.matrix(), &dir.join(format!("{prefix}_source_map.csv")))?;
        }
        if let Some(r) = &self.reward_model {
            crate::io::write_value_csv(r, &dir.join(format!("{prefix}_reward_model.csv")))?;
        }
        if let Some(p) = &self.transition_model {
            crate::io::write_matrix_csv(p, &dir.join(format!("{prefix}_transition_model.csv")))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrp::{exact_source_map, exact_value, partial_source_map, two_state_counterexample};

    fn drive(stream: &[Transition], mut learner: Learner) -> Vec<f64> {
        learner.begin_run(stream[0].from, 0.2);
        for t in stream {
            learner.step(t, 0.15, 0.2).unwrap();
        }
        learner.value_estimate().as_slice().to_vec()
    }

    fn cycle_stream(len: usize) -> Vec<Transition> {
        (0..len)
            .map(|k| Transition {
                from: k % 2,
                reward: if k % 2 == 0 { 1.0 } else { -0.5 },
                to: (k + 1) % 2,
            })
            .collect()
    }

    #[test]
    fn reduction_lattice_all_collapse_to_td0() {
        let stream = cycle_stream(64);
        let mrp = two_state_counterexample();
        let identity = partial_source_map(&mrp, 1, 1.0).unwrap();
        let reference = drive(&stream, Learner::new(LearnerKind::Td0, 2, 0.5).unwrap());
        let kinds: Vec<LearnerKind> = vec![
            LearnerKind::TdLambda { lambda: 0.0 },
            LearnerKind::IdealSource { map: identity.clone() },
            LearnerKind::TdSource { lambda: 0.0 },
            LearnerKind::TdSr { lambda: 0.0 },
            LearnerKind::TdSourceSr { lambda: 0.0, row_first: false },
            LearnerKind::White { lambda: 0.0, fixed_map: Some(identity.clone()) },
            LearnerKind::White { lambda: 0.0, fixed_map: None },
            LearnerKind::PseudoRewardDescent { lambda: 0.0, fixed_map: Some(identity) },
        ];
        for kind in kinds {
            let label = format!("{kind:?}");
            let got = drive(&stream, Learner::new(kind, 2, 0.5).unwrap());
            for (a, b) in got.iter().zip(&reference) {
                assert!((a - b).abs() <= 1e-12, "{label}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn white_and_source_agree_through_fixed_map() {
        let mrp = two_state_counterexample();
        let map = exact_source_map(&mrp).unwrap();
        let mut source = Learner::new(LearnerKind::IdealSource { map: map.clone() }, 2, 0.5).unwrap();
        let mut white = Learner::new(
            LearnerKind::White { lambda: 1.0, fixed_map: Some(map) },
            2,
            0.5,
        )
        .unwrap();
        let stream = cycle_stream(256);
        source.begin_run(0, 0.1);
        white.begin_run(0, 0.1);
        for t in &stream {
            source.step(t, 0.2, 0.1).unwrap();
            white.step(t, 0.2, 0.1).unwrap();
            let v_source = source.value_estimate();
            let v_white = white.value_estimate();
            assert!(v_source.distance(&v_white) < 1e-10);
        }
    }

    #[test]
    fn source_sr_single_step_locality() {
        // One step i→j from the identity: only column j and row i move
        // (their shared entries touched in sequence).
        let mut l = Learner::new(
            LearnerKind::TdSourceSr { lambda: 1.0, row_first: false },
            4,
            0.9,
        )
        .unwrap();
        l.begin_run(1, 0.0); // β=0 keeps the init blend a no-op
        let t = Transition { from: 1, reward: 0.5, to: 2 };
        l.step(&t, 0.1, 0.1).unwrap();
        let s = l.learned_map().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect_identity = !(j == 2 || i == 1);
                let val = s.get(i, j);
                let ident = if i == j { 1.0 } else { 0.0 };
                if expect_identity {
                    assert_eq!(val, ident, "({i},{j}) moved");
                }
            }
        }
        assert!(s.get(1, 2) != 0.0);
    }

    #[test]
    fn triple_model_synchronous_sweep_reproduces_one_sweep_exactness() {
        // With exact models injected, sweeping every state once with α=1
        // must land on the exact values, mirroring the full expected
        // backup.
        let mrp = crate::mrp::Mrp::new(
            nalgebra::DMatrix::from_row_slice(3, 3, &[0.2, 0.5, 0.3, 0.4, 0.1, 0.5, 0.25, 0.25, 0.5]),
            nalgebra::DVector::from_vec(vec![1.0, -0.5, 0.25]),
            0.8,
        )
        .unwrap();
        let vstar = exact_value(&mrp).unwrap();
        let exact = exact_source_map(&mrp).unwrap();

        let mut l = Learner::new(
            LearnerKind::TripleModel { lambda: 1.0, map_from_model: false },
            3,
            0.8,
        )
        .unwrap();
        // Inject exact models.
        if let State::Triple(s) = &mut l.state {
            s.map.s = SquareMat::from_dmatrix(exact.matrix());
            s.r0 = mrp.reward().iter().cloned().collect();
            for from in 0..3 {
                for to in 0..3 {
                    let p = mrp.transition()[(from, to)];
                    let reps = (p * 10_000.0).round() as u64;
                    for _ in 0..reps {
                        s.trans.record(from, to);
                    }
                }
            }
        } else {
            unreachable!();
        }

        // One synchronous sweep: value update from every state, α=1,
        // no model updates in between.
        for state_idx in 0..3 {
            if let State::Triple(s) = &mut l.state {
                let t = Transition { from: state_idx, reward: 0.0, to: 0 };
                s.value_update(&t, 1.0, 0.8);
            }
        }
        l.cache = None;
        let v = l.value_estimate();
        assert!(v.distance(&vstar) < 1e-10, "dist {}", v.distance(&vstar));
    }

    #[test]
    fn snapshot_has_expected_parts() {
        let mut l = Learner::new(
            LearnerKind::TripleModel { lambda: 1.0, map_from_model: false },
            3,
            0.9,
        )
        .unwrap();
        l.begin_run(0, 0.1);
        l.step(&Transition { from: 0, reward: 1.0, to: 1 }, 0.1, 0.1).unwrap();
        let snap = l.snapshot();
        assert!(snap.source_map.is_some());
        assert!(snap.reward_model.is_some());
        assert!(snap.transition_model.is_some());
        assert_eq!(snap.counts.iter().sum::<u64>(), 2);
    }

    #[test]
    fn value_estimate_for_identity_white_is_weights() {
        let mrp = two_state_counterexample();
        let identity = partial_source_map(&mrp, 1, 1.0).unwrap();
        let mut l = Learner::new(
            LearnerKind::White { lambda: 1.0, fixed_map: Some(identity) },
            2,
            0.5,
        )
        .unwrap();
        l.begin_run(0, 0.1);
        l.step(&Transition { from: 0, reward: 2.0, to: 1 }, 0.5, 0.1).unwrap();
        let v = l.value_estimate();
        assert_eq!(v[0], 1.0); // α·δ = 0.5·2.0
        assert_eq!(v[1], 0.0);
    }
}
