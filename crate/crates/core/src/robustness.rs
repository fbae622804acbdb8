//! Hull translates of `y' = f(t) y` for a truncated Conley–Miller signal.
//!
//! A translate `f(· + σ)` is flagged recurrent when its antiderivative
//! `F_σ(t) = ∫_0^t f(s + σ) ds` drops below a tolerance somewhere in the
//! second half of the horizon. This is a finite-horizon proxy for
//! recurrence at infinity and is reported as such.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SignalError;
use crate::persistence::Checkpoint;
use crate::signals::{conley_miller, conley_miller_period, QuasiPeriodicSignal};

pub use crate::persistence::DEFAULT_RECURRENCE_TOL;

const BASE_CHECKPOINTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslateResult {
    pub shift: f64,
    /// Minimum of `F_σ` over the grid on `[T/2, T]`.
    pub min_second_half: f64,
    pub argmin: f64,
    pub recurrent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullDemoReport {
    pub n_terms: usize,
    pub horizon: f64,
    pub recurrence_tol: f64,
    pub grid_step: f64,
    pub period: f64,
    pub base: Vec<Checkpoint>,
    /// Minimum of the base `F` over `[1, T]`, including the period multiples.
    pub base_min_after_one: f64,
    pub base_argmin_after_one: f64,
    pub translates: Vec<TranslateResult>,
    pub recurrent_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub seed: u64,
    pub horizon: f64,
    pub recurrence_tol: f64,
    pub grid_step: f64,
    /// Shifts are drawn uniformly from `[0, shift_range)`.
    pub shift_range: f64,
    pub translates: Vec<TranslateResult>,
    pub recurrent_fraction: f64,
}

fn check_horizon(horizon: f64) -> Result<(), SignalError> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(SignalError::NonFinite)
    }
}

/// Grid spacing fine enough to resolve the fastest mode.
pub fn grid_step(f: &QuasiPeriodicSignal, horizon: f64) -> f64 {
    let coarse = horizon / 1000.0;
    match f.max_frequency() {
        Some(w) => coarse.min(TAU / w / 32.0),
        None => coarse,
    }
}

fn uniform_grid(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let m = ((hi - lo) / step).ceil().max(1.0) as usize;
    (0..=m).map(move |k| if k == m { hi } else { lo + k as f64 * (hi - lo) / m as f64 })
}

fn second_half_min(f: &QuasiPeriodicSignal, horizon: f64, step: f64) -> (f64, f64) {
    uniform_grid(horizon / 2.0, horizon, step)
        .map(|t| (f.integral(0.0, t), t))
        .fold((f64::INFINITY, horizon), |acc, cur| if cur.0 < acc.0 { cur } else { acc })
}

/// Evaluates each translate of `f` on the second-half grid.
pub fn evaluate_translates(
    f: &QuasiPeriodicSignal,
    horizon: f64,
    shifts: &[f64],
    recurrence_tol: f64,
) -> Result<(Vec<TranslateResult>, f64), SignalError> {
    check_horizon(horizon)?;
    if shifts.iter().any(|s| !s.is_finite()) || !(recurrence_tol.is_finite()) {
        return Err(SignalError::NonFinite);
    }
    let step = grid_step(f, horizon);
    let results: Vec<TranslateResult> = shifts
        .par_iter()
        .map(|&shift| {
            let (min, argmin) = second_half_min(&f.translate(shift), horizon, step);
            TranslateResult { shift, min_second_half: min, argmin, recurrent: min < recurrence_tol }
        })
        .collect();
    let fraction = if results.is_empty() {
        0.0
    } else {
        results.iter().filter(|r| r.recurrent).count() as f64 / results.len() as f64
    };
    Ok((results, fraction))
}

/// Translates of `conley_miller(n_terms)` by the given shifts, plus the
/// growth profile of the untranslated antiderivative.
pub fn hull_demo(
    n_terms: usize,
    horizon: f64,
    shifts: &[f64],
    recurrence_tol: f64,
) -> Result<HullDemoReport, SignalError> {
    let f = conley_miller(n_terms)?;
    let (translates, recurrent_fraction) = evaluate_translates(&f, horizon, shifts, recurrence_tol)?;
    let step = grid_step(&f, horizon);

    let ts: Vec<f64> = (1..=BASE_CHECKPOINTS).map(|k| horizon * k as f64 / BASE_CHECKPOINTS as f64).collect();
    let values: Vec<f64> = ts.iter().map(|&t| f.integral(0.0, t)).collect();
    let mut base: Vec<Checkpoint> = Vec::with_capacity(ts.len());
    let mut running = f64::INFINITY;
    for (&t, &integral) in ts.iter().zip(&values).rev() {
        running = running.min(integral);
        base.push(Checkpoint { t, integral, min_after: running });
    }
    base.reverse();

    // F vanishes at multiples of the common period; the grid alone can miss them
    let period = conley_miller_period(n_terms);
    let multiples = (1..)
        .map(|k| k as f64 * period)
        .take_while(|&t| t <= horizon)
        .filter(|&t| t >= 1.0);
    let (base_min_after_one, base_argmin_after_one) = uniform_grid(1.0_f64.min(horizon), horizon, step)
        .chain(multiples)
        .map(|t| (f.integral(0.0, t), t))
        .fold((f64::INFINITY, horizon), |acc, cur| if cur.0 < acc.0 { cur } else { acc });

    Ok(HullDemoReport {
        n_terms,
        horizon,
        recurrence_tol,
        grid_step: step,
        period,
        base,
        base_min_after_one,
        base_argmin_after_one,
        translates,
        recurrent_fraction,
    })
}

/// Range of one period of the slowest mode, `2π` for a constant signal.
pub fn shift_range(f: &QuasiPeriodicSignal) -> f64 {
    f.min_frequency().map_or(TAU, |w| TAU / w)
}

pub fn sample_shifts(f: &QuasiPeriodicSignal, num_shifts: usize, seed: u64) -> Vec<f64> {
    let range = shift_range(f);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_shifts).map(|_| rng.random_range(0.0..range)).collect()
}

/// Empirical fraction of seeded random translates that look recurrent.
pub fn recurrence_scan(
    f: &QuasiPeriodicSignal,
    horizon: f64,
    num_shifts: usize,
    seed: u64,
    recurrence_tol: f64,
) -> Result<ScanReport, SignalError> {
    let shifts = sample_shifts(f, num_shifts.max(1), seed);
    let (translates, recurrent_fraction) = evaluate_translates(f, horizon, &shifts, recurrence_tol)?;
    Ok(ScanReport {
        seed,
        horizon,
        recurrence_tol,
        grid_step: grid_step(f, horizon),
        shift_range: shift_range(f),
        translates,
        recurrent_fraction,
    })
}
