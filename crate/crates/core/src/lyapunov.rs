//! Top Lyapunov exponent of a linear cooperative delay system.
//!
//! The exponent is `lim log‖z_t(1̄)‖ / t` along the solution started from the
//! all-ones map. The solution is renormalized to unit segment norm every
//! `renorm_period` time units and the logarithms of the norms are accumulated,
//! so the estimate never overflows.
//!
//! The reported value is the growth rate of `log‖z_t‖` over `[T/2, T]`. It
//! has the same limit as `log‖z_T‖ / T` without the `log C / T` offset that
//! the norm of the initial segment and of the delay window contribute.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::LyapunovError;
use crate::integrator::{default_step, InitialHistory, Stepper};
use crate::model::{DelayRhs, DelaySystem, LinearDelaySystem};
use crate::structure::{condense, zero_pattern, BlockStructure};

pub const DEFAULT_SLOPE_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_HORIZON: f64 = 1e4;
/// Number of largest windows whose slopes must agree.
pub const CONVERGENCE_WINDOWS: usize = 5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// `Σ_i ‖φ_i‖_∞`
    #[default]
    Sup,
    /// `(Σ_i φ_i(0)² + ∫ φ_i²)^{1/2}`
    L2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentOptions {
    /// Initial horizon; `None` means `max(2000, 100·max τ)`.
    pub horizon: Option<f64>,
    /// Horizon cap when the window slopes have not settled.
    pub max_horizon: f64,
    pub renorm_period: f64,
    /// Integration step; `None` means [`default_step`].
    pub step: Option<f64>,
    pub slope_tol: f64,
    pub norm: NormKind,
}

impl Default for ExponentOptions {
    fn default() -> Self {
        ExponentOptions {
            horizon: None,
            max_horizon: DEFAULT_MAX_HORIZON,
            renorm_period: 1.0,
            step: None,
            slope_tol: DEFAULT_SLOPE_TOL,
            norm: NormKind::Sup,
        }
    }
}

impl ExponentOptions {
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = Some(step);
        self
    }

    /// Runs exactly to the horizon, no extension.
    pub fn fixed(mut self) -> Self {
        self.max_horizon = 0.0;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    Converged,
    Uncertain,
}

/// Growth rate of `log‖z_t‖` over `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSlope {
    pub start: f64,
    pub end: f64,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// Growth rate of `log‖z_t‖` over `[T/2, T]`.
    pub value: f64,
    /// `log‖z_T‖ / T`.
    pub raw_value: f64,
    pub horizon: f64,
    /// Slopes over `[W/2, W]` for `W = T, T/2, T/4, …`, largest window first.
    pub window_slopes: Vec<WindowSlope>,
    pub renorm_count: usize,
    pub status: EstimateStatus,
    /// Spread (max − min) of the largest [`CONVERGENCE_WINDOWS`] window slopes.
    pub dispersion: f64,
    pub step: f64,
    pub renorm_period: f64,
    /// Smallest normalized knot value seen at renormalization times after
    /// `2·max τ`; positive when the leading direction is strongly positive.
    pub min_normalized_value: Option<f64>,
}

/// Exponent from the all-ones initial map.
pub fn top_exponent(lin: &LinearDelaySystem, opts: &ExponentOptions) -> Result<LyapunovEstimate, LyapunovError> {
    top_exponent_from(lin, &InitialHistory::ones(lin.n()), opts)
}

/// Exponent from an arbitrary strongly positive initial map.
pub fn top_exponent_from(
    lin: &LinearDelaySystem,
    history: &InitialHistory,
    opts: &ExponentOptions,
) -> Result<LyapunovEstimate, LyapunovError> {
    let tau_max = lin.max_delay();
    let min_horizon = 100.0 * tau_max;
    let horizon = opts.horizon.unwrap_or(min_horizon.max(2000.0));
    if !(horizon >= min_horizon * (1.0 - 1e-12)) {
        return Err(LyapunovError::HorizonTooShort { horizon, min: min_horizon });
    }
    let h = opts.step.unwrap_or_else(|| default_step(lin.delays()));
    let mut st = Stepper::new(lin, history, h)?;
    let h = st.step_size();
    if !(opts.renorm_period.is_finite() && opts.renorm_period > 0.0) {
        return Err(LyapunovError::BadRenormPeriod(opts.renorm_period));
    }
    let period_steps = ((opts.renorm_period / h).round() as usize).max(1);
    let period = period_steps as f64 * h;
    let transient = 2.0 * tau_max;

    let norm_of = |st: &Stepper<'_, LinearDelaySystem>| match opts.norm {
        NormKind::Sup => st.segment_norm(),
        NormKind::L2 => st.segment_norm_l2(),
    };

    let initial = norm_of(&st);
    if !(initial > 0.0 && initial.is_finite()) {
        return Err(LyapunovError::ZeroNorm { t: 0.0 });
    }
    // (time, log‖z_t‖) at every renormalization
    let mut marks: Vec<(f64, f64)> = vec![(0.0, initial.ln())];
    let mut log_norm = initial.ln();
    st.rescale(1.0 / initial);
    let mut renorm_count = 0usize;
    let mut min_normalized: Option<f64> = None;

    let mut target = horizon;
    loop {
        let periods = (target / period * (1.0 - 1e-12)).ceil() as usize;
        let target_steps = periods * period_steps;
        while st.knot_index() < target_steps {
            for _ in 0..period_steps {
                st.step()?;
            }
            let norm = norm_of(&st);
            let t = st.time();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(LyapunovError::ZeroNorm { t });
            }
            log_norm += norm.ln();
            st.rescale(1.0 / norm);
            renorm_count += 1;
            marks.push((t, log_norm));
            if t >= transient {
                let m = st.segment_min();
                min_normalized = Some(min_normalized.map_or(m, |cur| cur.min(m)));
            }
        }
        let t_end = st.time();
        let window_slopes = window_slopes(&marks);
        let dispersion = dispersion(&window_slopes);
        let settled = dispersion < opts.slope_tol;
        if settled || t_end >= opts.max_horizon {
            let status = if settled && t_end >= min_horizon * (1.0 - 1e-12) {
                EstimateStatus::Converged
            } else {
                EstimateStatus::Uncertain
            };
            let value = window_slopes.first().map_or(log_norm / t_end, |w| w.slope);
            return Ok(LyapunovEstimate {
                value,
                raw_value: log_norm / t_end,
                horizon: t_end,
                window_slopes,
                renorm_count,
                status,
                dispersion,
                step: h,
                renorm_period: period,
                min_normalized_value: min_normalized,
            });
        }
        target = (2.0 * t_end).min(opts.max_horizon);
    }
}

/// Windows `[W/2, W]` for `W = T, T/2, …` while `W/2` spans at least one
/// renormalization period.
fn window_slopes(marks: &[(f64, f64)]) -> Vec<WindowSlope> {
    let (t_end, _) = *marks.last().expect("at least the initial mark");
    let period = marks.get(1).map(|m| m.0).unwrap_or(t_end);
    // index of the last mark at or before t
    let at = |t: f64| marks.partition_point(|m| m.0 <= t + 1e-9 * period).saturating_sub(1);
    let mut out = Vec::new();
    let mut w = t_end;
    while w / 2.0 >= period && out.len() < 12 {
        let (a, b) = (marks[at(w / 2.0)], marks[at(w)]);
        if b.0 > a.0 {
            out.push(WindowSlope { start: a.0, end: b.0, slope: (b.1 - a.1) / (b.0 - a.0) });
        }
        w /= 2.0;
    }
    out
}

fn dispersion(slopes: &[WindowSlope]) -> f64 {
    if slopes.len() < CONVERGENCE_WINDOWS {
        return f64::INFINITY;
    }
    let top = &slopes[..CONVERGENCE_WINDOWS];
    let max = top.iter().map(|w| w.slope).fold(f64::NEG_INFINITY, f64::max);
    let min = top.iter().map(|w| w.slope).fold(f64::INFINITY, f64::min);
    max - min
}

/// Real root of `λ + d = β e^{−λτ}` by bisection on `[−d − β, β]`.
///
/// The left side increases and the right side decreases in `λ`, so the real
/// root is unique; for `β > 0` it is the rightmost characteristic root.
pub fn characteristic_root(d: f64, beta: f64, tau: f64) -> f64 {
    if d == beta {
        return 0.0;
    }
    let g = |l: f64| l + d - beta * (-l * tau).exp();
    let (mut lo, mut hi) = (-d - beta, beta);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockExponent {
    pub block: usize,
    /// Patch indices of the block, 0-based.
    pub indices: Vec<usize>,
    pub estimate: LyapunovEstimate,
}

/// Exponent of every diagonal block of the linearized system, in block order.
pub fn block_exponents(sys: &DelaySystem, opts: &ExponentOptions) -> Result<Vec<BlockExponent>, LyapunovError> {
    let structure = condense(&zero_pattern(sys));
    block_exponents_for(&sys.linearized(), &structure, opts)
}

pub fn block_exponents_for(
    lin: &LinearDelaySystem,
    structure: &BlockStructure,
    opts: &ExponentOptions,
) -> Result<Vec<BlockExponent>, LyapunovError> {
    structure
        .blocks
        .par_iter()
        .enumerate()
        .map(|(block, indices)| {
            let wrap = |e: LyapunovError| LyapunovError::Block { block, source: Box::new(e) };
            let sub = lin
                .subsystem(indices)
                .expect("condensed blocks are valid index sets");
            let estimate = top_exponent(&sub, opts).map_err(wrap)?;
            Ok(BlockExponent { block, indices: indices.clone(), estimate })
        })
        .collect()
}
