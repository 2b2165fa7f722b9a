//! Stochastic approximation of the source map shared by the learned-map
//! algorithms.
//!
//! The matrix starts at the identity. Two update styles exist and can run
//! together on the same matrix:
//!
//! * column style (TD Source): on transition i→j, blend column j toward
//!   `e = [I]_{·j} + γλ·(c_j/c_i)·[S]_{·i}`. The visit-count ratio is the
//!   importance-sampling correction that turns averaged eligibility
//!   traces into source-trace estimates.
//! * row style (TD SR): blend row i toward `e = [I]_{i·} + γλ·[S]_{j·}`.
//!   No counts involved.
//!
//! Running both per step is the combined "Source-SR" style, column side
//! first by default; the order is observable only through the shared
//! (i, j) entries.

use crate::linalg::SquareMat;

#[derive(Debug, Clone)]
pub(crate) struct SrModel {
    pub s: SquareMat,
    pub lambda: f64,
    pub col_updates: bool,
    pub row_updates: bool,
    pub row_first: bool,
    /// Optional clamp on the importance-sampling ratio; off by default
    /// (the unclipped ratio is what the update family prescribes).
    pub ratio_cap: Option<f64>,
    scratch: Vec<f64>,
}

impl SrModel {
    pub fn new(n: usize, lambda: f64, col_updates: bool, row_updates: bool) -> Self {
        SrModel {
            s: SquareMat::identity(n),
            lambda,
            col_updates,
            row_updates,
            row_first: false,
            ratio_cap: None,
            scratch: vec![0.0; n],
        }
    }

    /// Run-start initialization for the column style: count the initial
    /// state (done by the caller) and blend its column toward the
    /// indicator.
    pub fn begin_run(&mut self, initial_state: usize, beta: f64) {
        if self.col_updates {
            self.s.scale_col(initial_state, 1.0 - beta, beta);
        }
    }

    /// Apply the configured updates for transition `from → to`.
    /// `counts` must already include this transition's destination
    /// increment.
    pub fn observe(
        &mut self,
        from: usize,
        to: usize,
        gamma: f64,
        beta_col: f64,
        beta_row: f64,
        counts: &[u64],
    ) {
        if self.row_first {
            self.row_update(from, to, gamma, beta_row);
            self.col_update(from, to, gamma, beta_col, counts);
        } else {
            self.col_update(from, to, gamma, beta_col, counts);
            self.row_update(from, to, gamma, beta_row);
        }
    }

    fn col_update(&mut self, from: usize, to: usize, gamma: f64, beta: f64, counts: &[u64]) {
        if !self.col_updates {
            return;
        }
        debug_assert!(counts[from] >= 1, "source state never counted");
        let mut ratio = counts[to] as f64 / counts[from] as f64;
        if let Some(cap) = self.ratio_cap {
            ratio = ratio.min(cap);
        }
        self.s.read_col_into(from, &mut self.scratch);
        let w = beta * gamma * self.lambda * ratio;
        self.s.blend_col(to, 1.0 - beta, w, &self.scratch, beta);
    }

    fn row_update(&mut self, from: usize, to: usize, gamma: f64, beta: f64) {
        if !self.row_updates {
            return;
        }
        let w = beta * gamma * self.lambda;
        self.s.blend_row_from_row(from, 1.0 - beta, w, to, beta);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_zero_pins_matrix_at_identity() {
        let mut m = SrModel::new(4, 0.0, true, true);
        let mut counts = vec![0u64; 4];
        counts[1] += 1;
        m.begin_run(1, 0.5);
        for (from, to) in [(1, 2), (2, 0), (0, 0), (0, 3)] {
            counts[to] += 1;
            m.observe(from, to, 0.9, 0.3, 0.3, &counts);
        }
        assert!(m.s.to_dmatrix().is_identity(1e-15));
    }

    #[test]
    fn first_step_column_moves_toward_indicator_plus_discounted_source() {
        // Fresh matrix, first visit of both states: ratio 1, so the
        // column of `to` becomes (1-β)I_to + β(I_to + γλ I_from).
        let mut m = SrModel::new(3, 1.0, true, false);
        let mut counts = vec![0u64; 3];
        counts[0] += 1;
        m.begin_run(0, 0.5);
        counts[2] += 1;
        m.observe(0, 2, 0.9, 0.5, 0.5, &counts);
        assert!((m.s.get(2, 2) - 1.0).abs() < 1e-15);
        assert!((m.s.get(0, 2) - 0.5 * 0.9).abs() < 1e-15);
        assert!((m.s.get(1, 2)).abs() < 1e-15);
    }

    #[test]
    fn self_transition_uses_post_increment_ratio() {
        let mut m = SrModel::new(2, 1.0, true, false);
        let mut counts = vec![0u64; 2];
        counts[0] += 1;
        m.begin_run(0, 0.5);
        counts[0] += 1; // i == j: ratio is c_new[0]/c[0] = 2/2 = 1
        m.observe(0, 0, 0.5, 0.5, 0.5, &counts);
        // e = I_0 + 0.5·[S]_{·0} with [S]_{·0} = I_0, so col 0 = (1-β)I0 + β·1.5·I0.
        assert!((m.s.get(0, 0) - (0.5 + 0.5 * 1.5)).abs() < 1e-15);
    }

    #[test]
    fn ratio_cap_limits_extreme_counts() {
        let mut capped = SrModel::new(2, 1.0, true, false);
        capped.ratio_cap = Some(2.0);
        let mut plain = SrModel::new(2, 1.0, true, false);
        let counts = vec![1u64, 100u64];
        capped.observe(0, 1, 0.9, 0.1, 0.1, &counts);
        plain.observe(0, 1, 0.9, 0.1, 0.1, &counts);
        assert!(capped.s.get(0, 1) < plain.s.get(0, 1));
    }

    #[test]
    fn diagonal_stays_at_least_one_after_any_single_update() {
        for (col_up, row_up) in [(true, false), (false, true), (true, true)] {
            let mut m = SrModel::new(5, 1.0, col_up, row_up);
            let mut counts = vec![0u64; 5];
            counts[3] += 1;
            m.begin_run(3, 0.4);
            counts[1] += 1;
            m.observe(3, 1, 0.95, 0.4, 0.4, &counts);
            for d in 0..5 {
                assert!(m.s.get(d, d) >= 1.0 - 1e-12, "diag {d} dropped");
            }
        }
    }
}
