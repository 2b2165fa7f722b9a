//! Markov reward processes and their source maps.
//!
//! An MRP is the tuple (|S|, P, r, γ) with row-stochastic P and γ < 1.
//! Its value vector solves (I - γP)v = r, and the *source map*
//! S = (I - γP)^{-1} turns expected TD errors into exact value updates:
//! columns of S are source traces (backward view), rows are successor
//! representations (forward view).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::inf_norm;

const ROW_SUM_TOL: f64 = 1e-12;

/// Finite discounted Markov reward process.
#[derive(Debug, Clone, PartialEq)]
pub struct Mrp {
    num_states: usize,
    transition: DMatrix<f64>,
    reward: DVector<f64>,
    gamma: f64,
}

impl Mrp {
    /// Validates row-stochasticity of `transition`, finiteness of
    /// `reward`, and `gamma` ∈ [0, 1).
    pub fn new(transition: DMatrix<f64>, reward: DVector<f64>, gamma: f64) -> Result<Self> {
        let n = transition.nrows();
        if n == 0 || transition.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n.max(1),
                got: transition.ncols(),
            });
        }
        if reward.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: reward.len(),
            });
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::config(format!("gamma must be in [0, 1), got {gamma}")));
        }
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                let p = transition[(i, j)];
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::config(format!(
                        "transition[{i}][{j}] = {p} outside [0, 1]"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::config(format!("row {i} sums to {sum}, not 1")));
            }
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::config("reward contains a non-finite entry"));
        }
        Ok(Mrp {
            num_states: n,
            transition,
            reward,
            gamma,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn reward(&self) -> &DVector<f64> {
        &self.reward
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The same process with one expected reward replaced.
    pub fn with_reward_at(&self, state: usize, reward: f64) -> Result<Mrp> {
        if state >= self.num_states {
            return Err(Error::IndexOutOfRange {
                index: state,
                len: self.num_states,
            });
        }
        let mut r = self.reward.clone();
        r[state] = reward;
        Mrp::new(self.transition.clone(), r, self.gamma)
    }

    /// `I - γP`, the inverse of the source map.
    pub fn value_operator(&self) -> DMatrix<f64> {
        let mut m = -self.gamma * &self.transition;
        for d in 0..self.num_states {
            m[(d, d)] += 1.0;
        }
        m
    }
}

/// How a [`SourceMap`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Construction {
    /// Direct inverse of `I - γP`.
    Exact,
    /// Truncated series Σ_{k<n} (γP)^k.
    NStep(usize),
    /// Decayed full series (I - γλP)^{-1}.
    Lambda(f64),
    /// Truncated decayed series Σ_{k<n} (γλP)^k.
    Partial { n: usize, lambda: f64 },
    /// Produced by a learner.
    Learned,
}

/// A |S|×|S| estimate (or exact value) of the source map.
#[derive(Debug, Clone)]
pub struct SourceMap {
    matrix: DMatrix<f64>,
    construction: Construction,
    gamma_used: f64,
}

impl SourceMap {
    pub fn learned(matrix: DMatrix<f64>, gamma_used: f64) -> Self {
        SourceMap {
            matrix,
            construction: Construction::Learned,
            gamma_used,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn gamma_used(&self) -> f64 {
        self.gamma_used
    }

    pub fn num_states(&self) -> usize {
        self.matrix.nrows()
    }

    /// Contiguous column `j` (the source trace for state j).
    pub fn col(&self, j: usize) -> &[f64] {
        let n = self.matrix.nrows();
        &self.matrix.as_slice()[j * n..(j + 1) * n]
    }
}

/// Value estimate indexed by state.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector(pub DVector<f64>);

impl ValueVector {
    pub fn zeros(n: usize) -> Self {
        ValueVector(DVector::zeros(n))
    }

    pub fn from_vec(v: Vec<f64>) -> Self {
        ValueVector(DVector::from_vec(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.len() == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// Euclidean distance to another value vector.
    pub fn distance(&self, other: &ValueVector) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub fn inf_norm(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

impl std::ops::Index<usize> for ValueVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Solve (I - γP)v = r by dense LU.
pub fn exact_value(mrp: &Mrp) -> Result<ValueVector> {
    let lu = mrp.value_operator().lu();
    let v = lu
        .solve(&mrp.reward().clone())
        .ok_or(Error::SingularSystem)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(ValueVector(v))
}

/// Compute S = (I - γP)^{-1} and validate its structural invariants
/// (unit-dominated diagonal, nonnegativity, ‖S‖∞ ≤ 1/(1-γ)).
pub fn exact_source_map(mrp: &Mrp) -> Result<SourceMap> {
    invert_operator(mrp.value_operator(), mrp.gamma(), Construction::Exact)
}

/// The decayed full map S^λ = (I - γλP)^{-1}.
pub fn lambda_source_map(mrp: &Mrp, lambda: f64) -> Result<SourceMap> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::config(format!("lambda must be in [0, 1], got {lambda}")));
    }
    let g = mrp.gamma() * lambda;
    let mut op = -g * mrp.transition();
    for d in 0..mrp.num_states() {
        op[(d, d)] += 1.0;
    }
    invert_operator(op, g, Construction::Lambda(lambda))
}

fn invert_operator(op: DMatrix<f64>, gamma: f64, construction: Construction) -> Result<SourceMap> {
    let n = op.nrows();
    let inv = op.lu().try_inverse().ok_or(Error::SingularSystem)?;
    for d in 0..n {
        if inv[(d, d)] < 1.0 - 1e-9 {
            return Err(Error::SingularSystem);
        }
    }
    if inv.iter().any(|&x| x < -1e-12 || !x.is_finite()) {
        return Err(Error::SingularSystem);
    }
    if inf_norm(&inv) > 1.0 / (1.0 - gamma) + 1e-9 {
        return Err(Error::SingularSystem);
    }
    Ok(SourceMap {
        matrix: inv,
        construction,
        gamma_used: gamma,
    })
}

/// Partial source map S^λ_n = Σ_{k=0}^{n-1} (γλP)^k, accumulated term
/// by term.
pub fn partial_source_map(mrp: &Mrp, n: usize, lambda: f64) -> Result<SourceMap> {
    if n == 0 {
        return Err(Error::config("partial source map requires n >= 1"));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::config(format!("lambda must be in [0, 1], got {lambda}")));
    }
    let states = mrp.num_states();
    let decayed = mrp.gamma() * lambda;
    let mut sum = DMatrix::<f64>::identity(states, states);
    let mut term = DMatrix::<f64>::identity(states, states);
    for _ in 1..n {
        term = decayed * mrp.transition() * term;
        sum += &term;
    }
    Ok(SourceMap {
        matrix: sum,
        construction: Construction::Partial { n, lambda },
        gamma_used: mrp.gamma(),
    })
}

/// Truncated undecayed map S_n = Σ_{k<n} (γP)^k.
pub fn n_step_source_map(mrp: &Mrp, n: usize) -> Result<SourceMap> {
    let mut map = partial_source_map(mrp, n, 1.0)?;
    map.construction = Construction::NStep(n);
    Ok(map)
}

/// ‖I - (I - γP)·S₀‖ under the induced ∞-norm: the model-accuracy defect
/// of the convergence condition. Uses S^{-1} = I - γP, never an inverse.
pub fn norm_defect(mrp: &Mrp, s0: &SourceMap) -> Result<f64> {
    let n = mrp.num_states();
    if s0.num_states() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s0.num_states(),
        });
    }
    let mut m = mrp.value_operator() * s0.matrix();
    for d in 0..n {
        m[(d, d)] -= 1.0;
    }
    Ok(inf_norm(&m))
}

/// Closed-form defect bound for partial maps:
/// γ·[1 - λ(1-γ)·Σ_{k=0}^{n-2}(λγ)^k]. Equals γ at n = 1 or λ = 0 and
/// decreases toward 0 as n and λ grow.
pub fn partial_trace_bound(gamma: f64, n: usize, lambda: f64) -> f64 {
    assert!(n >= 1, "bound requires n >= 1");
    let mut geo = 0.0;
    let mut term = 1.0;
    for _ in 0..n.saturating_sub(1) {
        geo += term;
        term *= lambda * gamma;
    }
    gamma * (1.0 - lambda * (1.0 - gamma) * geo)
}

/// Rank-1 source backup for a reward change at state `j`:
/// v' = v + Δr_j · [S]_{·j}. O(|S|).
pub fn source_backup_reward_delta(
    v: &ValueVector,
    s0: &SourceMap,
    j: usize,
    delta_r: f64,
) -> Result<ValueVector> {
    let n = v.len();
    if s0.num_states() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s0.num_states(),
        });
    }
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, len: n });
    }
    let mut out = v.0.clone();
    for (slot, s) in out.iter_mut().zip(s0.col(j)) {
        *slot += delta_r * s;
    }
    Ok(ValueVector(out))
}

/// Synchronous backup of all expected TD errors:
/// v = v₀ + S₀(r + γPv₀ - v₀). With the exact map this lands on the
/// true values in one sweep for any v₀.
pub fn full_expected_backup(mrp: &Mrp, s0: &SourceMap, v0: &ValueVector) -> Result<ValueVector> {
    let n = mrp.num_states();
    if s0.num_states() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s0.num_states(),
        });
    }
    if v0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v0.len(),
        });
    }
    let td = mrp.reward() + mrp.gamma() * (mrp.transition() * &v0.0) - &v0.0;
    Ok(ValueVector(&v0.0 + s0.matrix() * td))
}

/// The three terms of the decomposition error
/// S₀r₀ - Sr = ℰr + Sϵ + ℰϵ with ℰ = S₀ - S and ϵ = r₀ - r.
/// The compounding of model errors lives entirely in the last term.
pub fn decomposition_error_terms(
    s_exact: &SourceMap,
    s0: &SourceMap,
    r_exact: &DVector<f64>,
    r0: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    let n = s_exact.num_states();
    if s0.num_states() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s0.num_states(),
        });
    }
    if r_exact.len() != n || r0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: r_exact.len().max(r0.len()),
        });
    }
    let e_mat = s0.matrix() - s_exact.matrix();
    let eps = r0 - r_exact;
    Ok((&e_mat * r_exact, s_exact.matrix() * &eps, e_mat * eps))
}

/// The two-state counterexample showing the asynchronous source backup
/// is not a value-space contraction: r = 0, P = [[.5,.5],[.5,.5]], γ = .5.
pub fn two_state_counterexample() -> Mrp {
    Mrp::new(
        DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]),
        DVector::zeros(2),
        0.5,
    )
    .expect("static example is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_state_value_is_zero() {
        let v = exact_value(&two_state_counterexample()).unwrap();
        assert_abs_diff_eq!(v[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_state_source_map_matches_known_values() {
        let s = exact_source_map(&two_state_counterexample()).unwrap();
        let want = [[1.5, 0.5], [0.5, 1.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(s.matrix()[(i, j)], want[i][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gamma_zero_degenerates_to_identity_and_rewards() {
        let mrp = Mrp::new(
            DMatrix::from_row_slice(2, 2, &[0.2, 0.8, 0.6, 0.4]),
            DVector::from_vec(vec![3.0, -1.0]),
            0.0,
        )
        .unwrap();
        let v = exact_value(&mrp).unwrap();
        assert_abs_diff_eq!(v[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v[1], -1.0, epsilon = 1e-14);
        let s = exact_source_map(&mrp).unwrap();
        assert!(s.matrix().is_identity(1e-14));
    }

    #[test]
    fn gamma_one_is_rejected() {
        let err = Mrp::new(
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DVector::zeros(1),
            1.0,
        );
        assert!(err.is_err());
    }

    #[test]
    fn partial_map_small_cases() {
        let mrp = two_state_counterexample();
        let s1 = partial_source_map(&mrp, 1, 0.7).unwrap();
        assert!(s1.matrix().is_identity(1e-15));
        let s2 = partial_source_map(&mrp, 2, 1.0).unwrap();
        let want = DMatrix::<f64>::identity(2, 2) + 0.5 * mrp.transition();
        assert!((s2.matrix() - want).abs().max() < 1e-15);
    }

    #[test]
    fn defect_of_identity_map_is_gamma() {
        let mrp = two_state_counterexample();
        let ident = partial_source_map(&mrp, 1, 1.0).unwrap();
        assert_abs_diff_eq!(norm_defect(&mrp, &ident).unwrap(), 0.5, epsilon = 1e-12);
        let exact = exact_source_map(&mrp).unwrap();
        assert!(norm_defect(&mrp, &exact).unwrap() <= 1e-9);
    }

    #[test]
    fn bound_edge_cases() {
        assert_abs_diff_eq!(partial_trace_bound(0.9, 1, 0.8), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(partial_trace_bound(0.9, 5, 0.0), 0.9, epsilon = 1e-15);
        assert!(partial_trace_bound(0.95, 500, 1.0) <= 1e-8);
    }

    #[test]
    fn zero_reward_delta_is_identity() {
        let mrp = two_state_counterexample();
        let s = exact_source_map(&mrp).unwrap();
        let v = ValueVector::from_vec(vec![2.0, -3.0]);
        let v2 = source_backup_reward_delta(&v, &s, 1, 0.0).unwrap();
        assert_eq!(v, v2);
    }

    #[test]
    fn reward_delta_reads_source_column() {
        // v = [0,0], bump reward of state 0 by 1: v' is column 0 of S.
        let mrp = two_state_counterexample();
        let s = exact_source_map(&mrp).unwrap();
        let v = ValueVector::zeros(2);
        let v2 = source_backup_reward_delta(&v, &s, 0, 1.0).unwrap();
        assert_abs_diff_eq!(v2[0], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(v2[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn full_backup_fixed_point_and_one_sweep() {
        let mrp = two_state_counterexample();
        let s = exact_source_map(&mrp).unwrap();
        let vstar = exact_value(&mrp).unwrap();
        let again = full_expected_backup(&mrp, &s, &vstar).unwrap();
        assert!(vstar.distance(&again) < 1e-12);
        let from_zero = full_expected_backup(&mrp, &s, &ValueVector::zeros(2)).unwrap();
        assert!(vstar.distance(&from_zero) < 1e-12);
    }

    #[test]
    fn decomposition_terms_sum_identity() {
        let mrp = two_state_counterexample();
        let s = exact_source_map(&mrp).unwrap();
        let r = DVector::from_vec(vec![1.0, -2.0]);
        // Exact models: all three terms vanish.
        let (a, b, c) = decomposition_error_terms(&s, &s, &r, &r).unwrap();
        assert!(a.norm() < 1e-15 && b.norm() < 1e-15 && c.norm() < 1e-15);
        // Reward error only: (0, Sϵ, 0).
        let r0 = DVector::from_vec(vec![1.5, -2.0]);
        let (a, b, c) = decomposition_error_terms(&s, &s, &r, &r0).unwrap();
        assert!(a.norm() < 1e-15 && c.norm() < 1e-15);
        assert!(b.norm() > 0.1);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mrp = two_state_counterexample();
        let s = exact_source_map(&mrp).unwrap();
        let v = ValueVector::zeros(3);
        assert!(matches!(
            full_expected_backup(&mrp, &s, &v),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            source_backup_reward_delta(&ValueVector::zeros(2), &s, 5, 1.0),
            Err(Error::IndexOutOfRange { .. })
        ));
    }
}
