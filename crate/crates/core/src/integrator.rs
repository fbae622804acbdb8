//! Method of steps with classical RK4 and cubic Hermite dense output.
//!
//! The step is chosen so that every delay is an exact multiple of it. Stage
//! values at `t + h/2 − τ_i` then fall on the midpoint of an already computed
//! segment, and `t − τ_i`, `t + h − τ_i` fall on knots.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::IntegrationError;
use crate::model::DelayRhs;

/// Knot magnitude treated as overflow.
pub const OVERFLOW_LIMIT: f64 = 1e150;

/// Default step `min(0.01, min τ_i / 8)`.
pub fn default_step(delays: &[f64]) -> f64 {
    let tau_min = delays.iter().copied().fold(f64::INFINITY, f64::min);
    (tau_min / 8.0).min(0.01)
}

/// Largest step `≤ h` that divides every delay, with the integer lags.
pub fn adjust_step(delays: &[f64], h: f64) -> Result<(f64, Vec<usize>), IntegrationError> {
    let tau_min = delays.iter().copied().fold(f64::INFINITY, f64::min);
    if !(h.is_finite() && h > 0.0 && h <= tau_min / 4.0 * (1.0 + 1e-12)) {
        return Err(IntegrationError::BadStep(h));
    }
    let tau0 = delays[0];
    let m_start = (tau0 / h * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    for m in m_start..=m_start.saturating_mul(64) {
        let step = tau0 / m as f64;
        let lags: Option<Vec<usize>> = delays
            .iter()
            .map(|&tau| {
                let q = tau / step;
                let r = q.round();
                ((q - r).abs() <= 1e-9).then_some(r as usize)
            })
            .collect();
        if let Some(lags) = lags {
            return Ok((step, lags));
        }
    }
    Err(IntegrationError::IncommensurableDelays { requested: h })
}

#[inline]
fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * m0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * m1
}

/// `max |p(s)|` of a Hermite cubic over `s ∈ [lo, hi] ⊆ [0, 1]`.
fn hermite_sup_abs(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, lo: f64, hi: f64) -> f64 {
    let p = |s: f64| hermite(y0, y1, m0, m1, h, s).abs();
    let mut best = p(lo).max(p(hi));
    // p'(s) = A s² + B s + C
    let a = 6.0 * y0 + 3.0 * h * m0 - 6.0 * y1 + 3.0 * h * m1;
    let b = -6.0 * y0 - 4.0 * h * m0 + 6.0 * y1 - 2.0 * h * m1;
    let c = h * m0;
    let mut consider = |s: f64| {
        if s > lo && s < hi {
            best = best.max(p(s));
        }
    };
    if a.abs() < 1e-300 {
        if b != 0.0 {
            consider(-c / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // numerically stable pair
            let q = -0.5 * (b + b.signum() * sq);
            if q != 0.0 {
                consider(q / a);
                consider(c / q);
            } else {
                consider(-b / (2.0 * a));
            }
        }
    }
    best
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// `∫ p(s)² dt` over `s ∈ [lo, hi]`, exact for the degree-6 integrand.
fn hermite_int_sq(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, lo: f64, hi: f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    GAUSS4
        .iter()
        .map(|&(x, w)| {
            let v = hermite(y0, y1, m0, m1, h, mid + half * x);
            w * v * v
        })
        .sum::<f64>()
        * half
        * h
}

/// Part of a solution window: a stretch of initial history or a Hermite
/// segment restricted to `s ∈ [lo, hi]`.
enum Piece<'a> {
    History { phi: &'a HistoryFn, a: f64, b: f64 },
    Segment { y0: f64, y1: f64, m0: f64, m1: f64, lo: f64, hi: f64 },
}

/// One component of an initial history on `[−τ_i, 0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryFn {
    Constant(f64),
    /// Cubic Hermite through `(grid, values)` with finite-difference slopes.
    Samples { grid: Vec<f64>, values: Vec<f64>, slopes: Vec<f64> },
}

impl HistoryFn {
    pub fn samples(grid: Vec<f64>, values: Vec<f64>) -> Result<HistoryFn, String> {
        if grid.len() != values.len() || grid.len() < 2 {
            return Err("need at least two samples with matching lengths".into());
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err("sample grid must be strictly increasing".into());
        }
        if values.iter().chain(&grid).any(|v| !v.is_finite()) {
            return Err("samples must be finite".into());
        }
        let m = grid.len();
        let secant = |k: usize| (values[k + 1] - values[k]) / (grid[k + 1] - grid[k]);
        let slopes = (0..m)
            .map(|k| {
                if k == 0 {
                    secant(0)
                } else if k == m - 1 {
                    secant(m - 2)
                } else {
                    let (hl, hr) = (grid[k] - grid[k - 1], grid[k + 1] - grid[k]);
                    (secant(k) * hl + secant(k - 1) * hr) / (hl + hr)
                }
            })
            .collect();
        Ok(HistoryFn::Samples { grid, values, slopes })
    }

    /// Samples `f` on `n + 1` equispaced points of `[−tau, 0]`.
    pub fn from_fn(tau: f64, n: usize, f: impl Fn(f64) -> f64) -> HistoryFn {
        let grid: Vec<f64> = (0..=n).map(|k| -tau + tau * k as f64 / n as f64).collect();
        let values = grid.iter().map(|&s| f(s)).collect();
        HistoryFn::samples(grid, values).expect("equispaced grid is valid")
    }

    fn segment(&self, s: f64) -> usize {
        match self {
            HistoryFn::Constant(_) => 0,
            HistoryFn::Samples { grid, .. } => {
                grid.partition_point(|&g| g <= s).saturating_sub(1).min(grid.len() - 2)
            }
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            HistoryFn::Constant(v) => *v,
            HistoryFn::Samples { grid, values, slopes } => {
                let k = self.segment(s);
                let h = grid[k + 1] - grid[k];
                hermite(values[k], values[k + 1], slopes[k], slopes[k + 1], h, (s - grid[k]) / h)
            }
        }
    }

    pub fn value_at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    fn covers(&self, tau: f64) -> bool {
        match self {
            HistoryFn::Constant(v) => v.is_finite(),
            HistoryFn::Samples { grid, .. } => {
                grid[0] <= -tau + 1e-12 * tau && *grid.last().expect("nonempty") >= -1e-12
            }
        }
    }

    fn min_value(&self) -> f64 {
        match self {
            HistoryFn::Constant(v) => *v,
            HistoryFn::Samples { values, .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    fn fold_segments(&self, a: f64, b: f64, mut f: impl FnMut(f64, f64, f64, f64, f64, f64, f64)) {
        if let HistoryFn::Samples { grid, values, slopes } = self {
            let (ka, kb) = (self.segment(a), self.segment(b));
            for k in ka..=kb {
                let h = grid[k + 1] - grid[k];
                let lo = ((a - grid[k]) / h).clamp(0.0, 1.0);
                let hi = ((b - grid[k]) / h).clamp(0.0, 1.0);
                if hi > lo || (ka == kb) {
                    f(values[k], values[k + 1], slopes[k], slopes[k + 1], h, lo, hi);
                }
            }
        }
    }

    fn sup_abs(&self, a: f64, b: f64) -> f64 {
        match self {
            HistoryFn::Constant(v) => v.abs(),
            HistoryFn::Samples { .. } => {
                let mut best: f64 = 0.0;
                self.fold_segments(a, b, |y0, y1, m0, m1, h, lo, hi| {
                    best = best.max(hermite_sup_abs(y0, y1, m0, m1, h, lo, hi));
                });
                best
            }
        }
    }

    fn int_sq(&self, a: f64, b: f64) -> f64 {
        match self {
            HistoryFn::Constant(v) => v * v * (b - a),
            HistoryFn::Samples { .. } => {
                let mut acc = 0.0;
                self.fold_segments(a, b, |y0, y1, m0, m1, h, lo, hi| {
                    acc += hermite_int_sq(y0, y1, m0, m1, h, lo, hi);
                });
                acc
            }
        }
    }
}

/// Initial map `φ = (φ_1, …, φ_n)`, `φ_i` defined on `[−τ_i, 0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialHistory {
    pub components: Vec<HistoryFn>,
}

impl InitialHistory {
    pub fn new(components: Vec<HistoryFn>) -> Self {
        InitialHistory { components }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        InitialHistory { components: vec![HistoryFn::Constant(value); n] }
    }

    /// The all-ones map.
    pub fn ones(n: usize) -> Self {
        InitialHistory::constant(n, 1.0)
    }

    pub fn from_values(values: &[f64]) -> Self {
        InitialHistory { components: values.iter().map(|&v| HistoryFn::Constant(v)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    fn check<S: DelayRhs + ?Sized>(&self, sys: &S) -> Result<(), IntegrationError> {
        if self.dim() != sys.dim() {
            return Err(IntegrationError::HistoryShape { got: self.dim(), expected: sys.dim() });
        }
        for (i, (phi, &tau)) in self.components.iter().zip(sys.delays()).enumerate() {
            if !phi.covers(tau) {
                return Err(IntegrationError::BadHistory {
                    component: i,
                    reason: format!("must be finite and defined on [-{tau}, 0]"),
                });
            }
            if sys.preserves_nonnegativity() && phi.min_value() < 0.0 {
                return Err(IntegrationError::BadHistory { component: i, reason: "negative values".into() });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClampStats {
    pub events: usize,
    /// Largest magnitude of a negative knot value set to zero.
    pub max_magnitude: f64,
}

/// Step-by-step solver keeping only the history window the delays need.
pub struct Stepper<'a, S: DelayRhs + ?Sized> {
    sys: &'a S,
    n: usize,
    h: f64,
    lags: Vec<usize>,
    history: InitialHistory,
    history_scale: f64,
    k: usize,
    cap: usize,
    vals: Vec<f64>,
    ders: Vec<f64>,
    clamp: bool,
    clamp_stats: ClampStats,
    // scratch
    y: Vec<f64>,
    stage: Vec<f64>,
    delayed: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
}

impl<'a, S: DelayRhs + ?Sized> Stepper<'a, S> {
    /// `h` is adjusted downwards so that every delay is a multiple of it.
    pub fn new(sys: &'a S, history: &InitialHistory, h: f64) -> Result<Self, IntegrationError> {
        history.check(sys)?;
        let (h, lags) = adjust_step(sys.delays(), h)?;
        let n = sys.dim();
        let cap = lags.iter().copied().max().unwrap_or(0) + 2;
        let mut st = Stepper {
            sys,
            n,
            h,
            lags,
            history: history.clone(),
            history_scale: 1.0,
            k: 0,
            cap,
            vals: vec![0.0; cap * n],
            ders: vec![0.0; cap * n],
            clamp: sys.preserves_nonnegativity(),
            clamp_stats: ClampStats::default(),
            y: vec![0.0; n],
            stage: vec![0.0; n],
            delayed: vec![0.0; n],
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
        };
        for i in 0..n {
            st.vals[i] = st.history.components[i].value_at_zero();
        }
        st.fill_delayed(0, 0.0);
        let y0: Vec<f64> = st.vals[..n].to_vec();
        let mut d0 = vec![0.0; n];
        sys.rhs_into(0.0, &y0, &st.delayed, &mut d0);
        st.ders[..n].copy_from_slice(&d0);
        Ok(st)
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    pub fn knot_index(&self) -> usize {
        self.k
    }

    pub fn time(&self) -> f64 {
        self.k as f64 * self.h
    }

    pub fn current(&self) -> &[f64] {
        let s = (self.k % self.cap) * self.n;
        &self.vals[s..s + self.n]
    }

    pub fn current_derivative(&self) -> &[f64] {
        let s = (self.k % self.cap) * self.n;
        &self.ders[s..s + self.n]
    }

    pub fn clamp_stats(&self) -> ClampStats {
        self.clamp_stats
    }

    #[inline]
    fn knot(&self, j: usize, i: usize) -> (f64, f64) {
        let s = (j % self.cap) * self.n + i;
        (self.vals[s], self.ders[s])
    }

    /// Delayed values at time `(base + theta)·h − τ_i`, `theta ∈ {0, ½, 1}`.
    fn fill_delayed(&mut self, base: usize, theta: f64) {
        for i in 0..self.n {
            let off = base as isize - self.lags[i] as isize;
            self.delayed[i] = if off < 0 {
                if off == -1 && theta == 1.0 {
                    self.knot(0, i).0
                } else {
                    let s = (off as f64 + theta) * self.h;
                    self.history_scale * self.history.components[i].eval(s)
                }
            } else {
                let j = off as usize;
                if theta == 0.0 {
                    self.knot(j, i).0
                } else if theta == 1.0 {
                    self.knot(j + 1, i).0
                } else {
                    let (y0, m0) = self.knot(j, i);
                    let (y1, m1) = self.knot(j + 1, i);
                    hermite(y0, y1, m0, m1, self.h, theta)
                }
            };
        }
    }

    /// Advances one step of classical RK4.
    pub fn step(&mut self) -> Result<(), IntegrationError> {
        let (n, h, k) = (self.n, self.h, self.k);
        let t = self.time();
        let slot = (k % self.cap) * n;
        self.y.copy_from_slice(&self.vals[slot..slot + n]);
        self.k1.copy_from_slice(&self.ders[slot..slot + n]);

        self.fill_delayed(k, 0.5);
        for i in 0..n {
            self.stage[i] = self.y[i] + 0.5 * h * self.k1[i];
        }
        self.sys.rhs_into(t + 0.5 * h, &self.stage, &self.delayed, &mut self.k2);
        for i in 0..n {
            self.stage[i] = self.y[i] + 0.5 * h * self.k2[i];
        }
        self.sys.rhs_into(t + 0.5 * h, &self.stage, &self.delayed, &mut self.k3);
        self.fill_delayed(k, 1.0);
        for i in 0..n {
            self.stage[i] = self.y[i] + h * self.k3[i];
        }
        self.sys.rhs_into(t + h, &self.stage, &self.delayed, &mut self.k4);

        let t_next = (k + 1) as f64 * h;
        for i in 0..n {
            let mut v = self.y[i] + h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
            if !v.is_finite() {
                return Err(IntegrationError::NonFinite { t: t_next });
            }
            if v.abs() > OVERFLOW_LIMIT {
                return Err(IntegrationError::Overflow { t: t_next });
            }
            if self.clamp && v < 0.0 {
                self.clamp_stats.events += 1;
                self.clamp_stats.max_magnitude = self.clamp_stats.max_magnitude.max(-v);
                v = 0.0;
            }
            self.stage[i] = v;
        }
        self.k = k + 1;
        let slot = (self.k % self.cap) * n;
        self.vals[slot..slot + n].copy_from_slice(&self.stage);
        self.fill_delayed(self.k, 0.0);
        self.sys.rhs_into(t_next, &self.stage, &self.delayed, &mut self.k1);
        self.ders[slot..slot + n].copy_from_slice(&self.k1);
        Ok(())
    }

    /// Multiplies the whole retained history (and the initial map) by `factor`.
    /// Only meaningful for linear systems.
    pub fn rescale(&mut self, factor: f64) {
        self.history_scale *= factor;
        for v in self.vals.iter_mut().chain(self.ders.iter_mut()) {
            *v *= factor;
        }
    }

    fn fold_component(&self, i: usize, mut visit: impl FnMut(Piece<'_>)) {
        let lag = self.lags[i];
        let k = self.k;
        if lag > k {
            let a = (k as f64 - lag as f64) * self.h;
            visit(Piece::History { phi: &self.history.components[i], a, b: 0.0 });
        }
        for j in k.saturating_sub(lag)..k {
            let (y0, m0) = self.knot(j, i);
            let (y1, m1) = self.knot(j + 1, i);
            visit(Piece::Segment { y0, y1, m0, m1, lo: 0.0, hi: 1.0 });
        }
        if k == 0 {
            let y = self.knot(0, i).0;
            visit(Piece::Segment { y0: y, y1: y, m0: 0.0, m1: 0.0, lo: 0.0, hi: 0.0 });
        }
    }

    /// `Σ_i max_{[t−τ_i, t]} |y_i|` at the current knot.
    pub fn segment_norm(&self) -> f64 {
        let scale = self.history_scale.abs();
        (0..self.n)
            .map(|i| {
                let mut best: f64 = 0.0;
                self.fold_component(i, |piece| {
                    let v = match piece {
                        Piece::History { phi, a, b } => scale * phi.sup_abs(a, b),
                        Piece::Segment { y0, y1, m0, m1, lo, hi } => {
                            hermite_sup_abs(y0, y1, m0, m1, self.h, lo, hi)
                        }
                    };
                    best = best.max(v);
                });
                best
            })
            .sum()
    }

    /// `(Σ_i y_i(t)² + ∫_{t−τ_i}^t y_i²)^{1/2}`, an L²-type norm equivalent
    /// to [`Self::segment_norm`].
    pub fn segment_norm_l2(&self) -> f64 {
        let scale2 = self.history_scale * self.history_scale;
        let mut acc: f64 = self.current().iter().map(|v| v * v).sum();
        for i in 0..self.n {
            self.fold_component(i, |piece| {
                acc += match piece {
                    Piece::History { phi, a, b } => scale2 * phi.int_sq(a, b),
                    Piece::Segment { y0, y1, m0, m1, lo, hi } => {
                        hermite_int_sq(y0, y1, m0, m1, self.h, lo, hi)
                    }
                };
            });
        }
        acc.sqrt()
    }

    /// Smallest knot value of the retained segment, over all components.
    pub fn segment_min(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.n {
            let first = self.k.saturating_sub(self.lags[i]);
            for j in first..=self.k {
                best = best.min(self.knot(j, i).0);
            }
        }
        best
    }
}

/// Dense solution on `[0, t_end]` with the initial history for `t < 0`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    n: usize,
    h: f64,
    requested_h: f64,
    delays: Vec<f64>,
    history: InitialHistory,
    steps: usize,
    values: Vec<f64>,
    derivs: Vec<f64>,
    clamp_stats: ClampStats,
}

/// Integrates `sys` from `history` up to the first knot at or after `t_end`.
pub fn integrate<S: DelayRhs + ?Sized>(
    sys: &S,
    history: &InitialHistory,
    t_end: f64,
    h: f64,
) -> Result<Trajectory, IntegrationError> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(IntegrationError::BadHorizon(t_end));
    }
    let mut st = Stepper::new(sys, history, h)?;
    let n = sys.dim();
    let steps = (t_end / st.step_size() * (1.0 - 1e-12)).ceil() as usize;
    let mut values = Vec::with_capacity((steps + 1) * n);
    let mut derivs = Vec::with_capacity((steps + 1) * n);
    values.extend_from_slice(st.current());
    derivs.extend_from_slice(st.current_derivative());
    for _ in 0..steps {
        st.step()?;
        values.extend_from_slice(st.current());
        derivs.extend_from_slice(st.current_derivative());
    }
    Ok(Trajectory {
        n,
        h: st.step_size(),
        requested_h: h,
        delays: sys.delays().to_vec(),
        history: history.clone(),
        steps,
        values,
        derivs,
        clamp_stats: st.clamp_stats(),
    })
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Step actually used.
    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn requested_step(&self) -> f64 {
        self.requested_h
    }

    pub fn t_end(&self) -> f64 {
        self.steps as f64 * self.h
    }

    pub fn num_knots(&self) -> usize {
        self.steps + 1
    }

    pub fn knot_time(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    pub fn knot(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    pub fn clamp_stats(&self) -> ClampStats {
        self.clamp_stats
    }

    pub fn history(&self) -> &InitialHistory {
        &self.history
    }

    #[inline]
    fn kv(&self, k: usize, i: usize) -> (f64, f64) {
        (self.values[k * self.n + i], self.derivs[k * self.n + i])
    }

    pub fn eval(&self, t: f64, i: usize) -> Result<f64, IntegrationError> {
        if i >= self.n {
            return Err(IntegrationError::BadComponent(i));
        }
        let lo = -self.delays[i];
        let hi = self.t_end();
        if !(t >= lo - 1e-12 * lo.abs() && t <= hi) {
            return Err(IntegrationError::OutOfRange { t, lo, hi });
        }
        if t < 0.0 {
            return Ok(self.history.components[i].eval(t));
        }
        let pos = t / self.h;
        let nearest = pos.round();
        if nearest * self.h == t {
            return Ok(self.kv((nearest as usize).min(self.steps), i).0);
        }
        let k = (pos.floor() as usize).min(self.steps.saturating_sub(1));
        let s = pos - k as f64;
        let (y0, m0) = self.kv(k, i);
        let (y1, m1) = self.kv(k + 1, i);
        Ok(hermite(y0, y1, m0, m1, self.h, s))
    }

    fn fold_window(&self, i: usize, a: f64, b: f64, mut visit: impl FnMut(Piece<'_>)) {
        if a < 0.0 {
            visit(Piece::History { phi: &self.history.components[i], a, b: b.min(0.0) });
        }
        if b <= 0.0 || self.steps == 0 {
            if b >= 0.0 {
                let y = self.kv(0, i).0;
                visit(Piece::Segment { y0: y, y1: y, m0: 0.0, m1: 0.0, lo: 0.0, hi: 0.0 });
            }
            return;
        }
        let a = a.max(0.0);
        let ka = ((a / self.h).floor() as usize).min(self.steps - 1);
        let kb = (((b / self.h).ceil() as usize).max(1) - 1).min(self.steps - 1);
        for k in ka..=kb {
            let lo = ((a - k as f64 * self.h) / self.h).clamp(0.0, 1.0);
            let hi = ((b - k as f64 * self.h) / self.h).clamp(0.0, 1.0);
            let (y0, m0) = self.kv(k, i);
            let (y1, m1) = self.kv(k + 1, i);
            visit(Piece::Segment { y0, y1, m0, m1, lo, hi });
        }
    }

    /// `Σ_i max_{[t−τ_i, t]} |y_i|`, including interior extrema of each cubic.
    pub fn segment_norm(&self, t: f64) -> Result<f64, IntegrationError> {
        if !(t >= 0.0 && t <= self.t_end()) {
            return Err(IntegrationError::OutOfRange { t, lo: 0.0, hi: self.t_end() });
        }
        Ok((0..self.n)
            .map(|i| {
                let mut best: f64 = 0.0;
                self.fold_window(i, t - self.delays[i], t, |piece| {
                    let v = match piece {
                        Piece::History { phi, a, b } => phi.sup_abs(a, b),
                        Piece::Segment { y0, y1, m0, m1, lo, hi } => {
                            hermite_sup_abs(y0, y1, m0, m1, self.h, lo, hi)
                        }
                    };
                    best = best.max(v);
                });
                best
            })
            .sum())
    }

    /// `(min, max)` of component `i` over the knots in `[a, b]`.
    pub fn window_knot_extrema(&self, i: usize, a: f64, b: f64) -> (f64, f64) {
        let ka = (a / self.h).ceil().max(0.0) as usize;
        let kb = ((b / self.h).floor() as usize).min(self.steps);
        (ka..=kb).map(|k| self.kv(k, i).0).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
    }

    /// CSV with header `t,y_1,…,y_n`, knots only, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "t")?;
        for i in 1..=self.n {
            write!(out, ",y_{i}")?;
        }
        writeln!(out)?;
        for k in 0..=self.steps {
            write!(out, "{:.16e}", self.knot_time(k))?;
            for v in self.knot(k) {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
