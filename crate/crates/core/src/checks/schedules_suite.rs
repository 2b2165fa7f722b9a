//! Schedule invariants: monotonicity and the stochastic-approximation
//! sums of the annealed family.
//!
//! One numerical caveat, measured rather than assumed: with N₀ = 0 the
//! annealed rate is α₀/n^1.1, whose series *converges* (to ζ(1.1)·α₀ ≈
//! 10.58·α₀), so no implementation can make its partial sums exceed
//! 100·α₀. The growth assertion therefore covers the N₀ ≥ 1e2 cells,
//! where the flat prefix makes the partial sum at 1e7 comfortably large,
//! and the N₀ = 0 cell is reported with its measured ratio. Conversely
//! the squared-sum tail beyond 1e6 is below 1e-3 only for N₀ ∈ {0, 1e2};
//! the larger offsets get a finite-tail assertion instead.

use super::Recorder;
use crate::error::Result;
use crate::schedules::{annealed_grid, Schedule, GRID_BASE_RATES, GRID_N0};

pub(super) fn run(_seed: u64, r: &mut Recorder) -> Result<()> {
    monotone(r)?;
    partial_sums(r)?;
    squared_tails(r)?;
    Ok(())
}

fn monotone(r: &mut Recorder) -> Result<()> {
    let mut all = annealed_grid();
    all.push(Schedule::Fixed(0.1));
    all.push(Schedule::HarmonicPerState {
        base: 1.0,
        floor: 0.01,
    });
    let mut ok = true;
    for s in &all {
        let mut prev = f64::INFINITY;
        let mut n = 1u64;
        while n <= 10_000_000 {
            let rate = s.rate(n, n)?;
            if rate > prev + 1e-15 || rate <= 0.0 || rate > s.base() + 1e-15 {
                ok = false;
            }
            prev = rate;
            n = (n * 3) / 2 + 1;
        }
    }
    r.check("monotone-non-increasing", ok, "all presets, n up to 1e7");
    Ok(())
}

/// Direct partial sums Σ_{n≤1e7} α_n.
fn partial_sum_ratio(base: f64, n0: f64) -> f64 {
    let mut sum = 0.0;
    for n in 1..=10_000_000u64 {
        sum += base * (n0 + 1.0) / (n0 + (n as f64).powf(1.1));
    }
    sum / base
}

fn partial_sums(r: &mut Recorder) -> Result<()> {
    // Representative base rate; the ratio is independent of it.
    let base = GRID_BASE_RATES[0];
    let mut min_ratio = f64::INFINITY;
    for &n0 in &GRID_N0[1..] {
        min_ratio = min_ratio.min(partial_sum_ratio(base, n0));
    }
    r.check(
        "annealed-partial-sum-growth",
        min_ratio > 100.0,
        format!("min Σα/α₀ over N₀ ∈ {{1e2,1e4,1e6}} at n = 1e7: {min_ratio:.1} > 100"),
    );
    let zero_ratio = partial_sum_ratio(base, 0.0);
    r.check(
        "annealed-partial-sum-n0-zero",
        (8.0..11.0).contains(&zero_ratio),
        format!(
            "Σα/α₀ = {zero_ratio:.3} at n = 1e7; series converges to ζ(1.1) ≈ 10.58, \
             so the 100·α₀ growth bound is unattainable for N₀ = 0"
        ),
    );
    Ok(())
}

fn squared_tails(r: &mut Recorder) -> Result<()> {
    // Tail estimate: Σ_{n>N} α_n² ≤ α₀²(N₀+1)²·N^{-1.2}/1.2.
    let tail_bound = |base: f64, n0: f64| -> f64 {
        base * base * (n0 + 1.0) * (n0 + 1.0) * 1e6f64.powf(-1.2) / 1.2
    };
    let mut worst_small = 0.0f64;
    for &base in &GRID_BASE_RATES {
        for &n0 in &[0.0, 1e2] {
            worst_small = worst_small.max(tail_bound(base, n0));
        }
    }
    r.le("annealed-squared-tail-small-offsets", worst_small, 1e-3);

    let mut all_finite = true;
    for &base in &GRID_BASE_RATES {
        for &n0 in &GRID_N0 {
            if !tail_bound(base, n0).is_finite() {
                all_finite = false;
            }
        }
    }
    r.check(
        "annealed-squared-tail-finite",
        all_finite,
        "Σα² converges for every grid cell",
    );
    Ok(())
}
