//! Independent oracles for the exact-arithmetic tests.
//!
//! These deliberately avoid the solver route used by the library: the
//! source map is accumulated as a truncated power series, term by term,
//! so agreement with the LU-based inverse is a two-route consistency
//! check rather than a tautology.

use nalgebra::{DMatrix, DVector};

use crate::mrp::Mrp;

/// Number of series terms needed for γ^K < tail.
pub fn series_terms(gamma: f64, tail: f64) -> usize {
    if gamma == 0.0 {
        return 1;
    }
    (tail.ln() / gamma.ln()).ceil().max(1.0) as usize
}

/// Truncated Neumann series Σ_{k=0}^{K-1} (γP)^k with K chosen so the
/// dropped tail has γ^K < `tail`.
pub fn neumann_source_map(mrp: &Mrp, tail: f64) -> DMatrix<f64> {
    let n = mrp.num_states();
    let terms = series_terms(mrp.gamma(), tail);
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for _ in 1..terms {
        term = mrp.gamma() * mrp.transition() * term;
        sum += &term;
    }
    sum
}

/// Truncated series value Σ_k (γP)^k r, accumulated on vectors.
pub fn neumann_value(mrp: &Mrp, tail: f64) -> DVector<f64> {
    let terms = series_terms(mrp.gamma(), tail);
    let mut sum = mrp.reward().clone();
    let mut term = mrp.reward().clone();
    for _ in 1..terms {
        term = mrp.gamma() * (mrp.transition() * term);
        sum += &term;
    }
    sum
}
