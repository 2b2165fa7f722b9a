//! Learning-rate schedules for α and β.
//!
//! Three families: fixed, per-state harmonic with a floor
//! (`max(floor, base / visit_count)`), and the polynomial annealing
//! family `base·(N₀ + 1)/(N₀ + n^1.1)` used for grid searches.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Fixed(f64),
    HarmonicPerState { base: f64, floor: f64 },
    Annealed { base: f64, n0: f64 },
}

impl Schedule {
    /// Evaluate at 1-based global step `n` with the visit count of the
    /// state being updated. The result is always in (0, base].
    pub fn rate(&self, global_step: u64, visit_count: u64) -> Result<f64> {
        if global_step == 0 {
            return Err(Error::InvalidStep("global step is 1-based"));
        }
        Ok(match *self {
            Schedule::Fixed(a) => a,
            Schedule::HarmonicPerState { base, floor } => {
                if visit_count == 0 {
                    return Err(Error::InvalidStep("harmonic schedule needs visit_count >= 1"));
                }
                (base / visit_count as f64).max(floor)
            }
            Schedule::Annealed { base, n0 } => {
                base * (n0 + 1.0) / (n0 + (global_step as f64).powf(1.1))
            }
        })
    }

    pub fn base(&self) -> f64 {
        match *self {
            Schedule::Fixed(a) => a,
            Schedule::HarmonicPerState { base, .. } => base,
            Schedule::Annealed { base, .. } => base,
        }
    }

    /// Compact label used in config ids and CSV columns.
    pub fn label(&self) -> String {
        match *self {
            Schedule::Fixed(a) => format!("fixed:{a}"),
            Schedule::HarmonicPerState { base, floor } => format!("harmonic:{base},{floor}"),
            Schedule::Annealed { base, n0 } => format!("annealed:{base},{n0}"),
        }
    }
}

/// Base rates of the named "paper-grid" preset.
pub const GRID_BASE_RATES: [f64; 7] = [5e-1, 2e-1, 1e-1, 5e-2, 2e-2, 1e-2, 5e-3];
/// N₀ offsets of the named "paper-grid" preset.
pub const GRID_N0: [f64; 4] = [0.0, 1e2, 1e4, 1e6];

/// All 28 annealed schedules of the preset grid.
pub fn annealed_grid() -> Vec<Schedule> {
    let mut out = Vec::with_capacity(GRID_BASE_RATES.len() * GRID_N0.len());
    for &base in &GRID_BASE_RATES {
        for &n0 in &GRID_N0 {
            out.push(Schedule::Annealed { base, n0 });
        }
    }
    out
}

/// The 7 fixed-rate schedules sharing the grid's base rates.
pub fn fixed_grid() -> Vec<Schedule> {
    GRID_BASE_RATES.iter().map(|&a| Schedule::Fixed(a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn annealed_starts_at_base() {
        for &n0 in &GRID_N0 {
            let s = Schedule::Annealed { base: 0.2, n0 };
            assert_abs_diff_eq!(s.rate(1, 1).unwrap(), 0.2, epsilon = 1e-15);
        }
    }

    #[test]
    fn annealed_matches_direct_evaluation() {
        let s = Schedule::Annealed { base: 0.5, n0: 0.0 };
        let want = 0.5 / 1000f64.powf(1.1);
        assert_abs_diff_eq!(s.rate(1000, 1).unwrap(), want, epsilon = 1e-18);
        assert!((want - 2.5e-4).abs() < 5e-5);
    }

    #[test]
    fn harmonic_floors() {
        let s = Schedule::HarmonicPerState { base: 1.0, floor: 0.01 };
        assert_abs_diff_eq!(s.rate(5, 200).unwrap(), 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(s.rate(5, 4).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn zero_counts_are_rejected() {
        assert!(Schedule::Fixed(0.1).rate(0, 1).is_err());
        assert!(Schedule::HarmonicPerState { base: 1.0, floor: 0.0 }
            .rate(3, 0)
            .is_err());
    }

    #[test]
    fn schedules_are_monotone_non_increasing() {
        let mut all = annealed_grid();
        all.push(Schedule::Fixed(0.3));
        all.push(Schedule::HarmonicPerState { base: 1.0, floor: 0.05 });
        for s in all {
            let mut prev = f64::INFINITY;
            for n in 1..2000u64 {
                let r = s.rate(n, n).unwrap();
                assert!(r <= prev + 1e-15, "{s:?} increased at n={n}");
                assert!(r > 0.0 && r <= s.base() + 1e-15);
                prev = r;
            }
        }
    }
}
