//! Tabular Markov-reward-process valuation laboratory.
//!
//! The crate is organized around six areas:
//!
//! * [`mrp`] — exact linear-algebra ground truth: MRPs, value solutions,
//!   source maps (the matrix `(I - γP)^{-1}`) and their partial variants,
//!   plus the norm diagnostics used by the convergence condition.
//! * [`envs`] — seeded generators for the two benchmark environments
//!   (random MRPs and 3D wraparound gridworlds) and trajectory sampling.
//! * [`learners`] — the incremental algorithms: TD(0)/TD(λ), source
//!   learning with ideal or learned maps, TD Source / TD SR / TD Source-SR,
//!   White's pseudo-reward update, pseudo-reward descent, SR-reward
//!   decomposition, triple model learning, and tabular iLSTD.
//! * [`replay`] — append-only experience replay and the mixed
//!   real/replayed stepping used to exploit trajectory independence.
//! * [`schedules`] — fixed, per-state harmonic, and polynomially annealed
//!   learning-rate schedules.
//! * [`harness`] — seeded experiment orchestration, error time series,
//!   grid selection, and CSV output.
//!
//! [`checks`] packages every module's invariant suite behind a uniform
//! pass/fail interface so the CLI and the acceptance tests share one
//! implementation.

pub mod checks;
pub mod envs;
pub mod error;
pub mod harness;
pub mod io;
pub mod learners;
pub mod linalg;
pub mod mrp;
pub mod replay;
pub mod rng;
pub mod schedules;

pub use error::{Error, Result};
pub use learners::{Learner, LearnerKind, Transition};
pub use mrp::{Mrp, SourceMap, ValueVector};
