//! Nicholson-type patch systems with per-patch delays.
//!
//! ```text
//! y_i'(t) = −d_i(t) y_i(t) + Σ_j a_ij(t) y_j(t) + β_i(t) g_i(t, y_i(t − τ_i))
//! ```
//!
//! with `g` one of `y e^{−c y}` (Nicholson), `y / (1 + c y^α)` (Mackey–Glass)
//! or `y` (linear). Coefficients are [`QuasiPeriodicSignal`]s.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::signals::QuasiPeriodicSignal;

/// Tolerance for round-off negatives accepted by [`DelaySystem::rhs`].
pub const NEGATIVE_STATE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Nicholson,
    MackeyGlass(f64),
    Linear,
}

impl Nonlinearity {
    /// Birth nonlinearity `g(y)` for exponent coefficient `c`.
    #[inline]
    pub fn apply(&self, c: f64, y: f64) -> f64 {
        match *self {
            Nonlinearity::Nicholson => y * (-c * y).exp(),
            // odd extension keeps round-off negatives finite for fractional α
            Nonlinearity::MackeyGlass(alpha) => y / (1.0 + c * y.abs().powf(alpha)),
            Nonlinearity::Linear => y,
        }
    }
}

/// Right-hand side of a delay system with one discrete delay per component.
///
/// Component `i` may depend on the current state and on its own delayed value
/// `y_i(t − τ_i)` only.
pub trait DelayRhs: Sync {
    fn dim(&self) -> usize;
    fn delays(&self) -> &[f64];
    /// Unchecked evaluation into `out`.
    fn rhs_into(&self, t: f64, y: &[f64], y_delayed: &[f64], out: &mut [f64]);
    /// Solutions from nonnegative data stay nonnegative, so integrators may
    /// clamp round-off negatives.
    fn preserves_nonnegativity(&self) -> bool;

    fn max_delay(&self) -> f64 {
        self.delays().iter().copied().fold(0.0, f64::max)
    }

    fn min_delay(&self) -> f64 {
        self.delays().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    pub delays: Vec<f64>,
    pub d: Vec<QuasiPeriodicSignal>,
    pub beta: Vec<QuasiPeriodicSignal>,
    pub c: Vec<QuasiPeriodicSignal>,
    pub a: Vec<Vec<QuasiPeriodicSignal>>,
    pub nonlinearity: Nonlinearity,
}

/// Full nonlinear patch model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemFile", into = "SystemFile")]
pub struct DelaySystem {
    delays: Vec<f64>,
    d: Vec<QuasiPeriodicSignal>,
    a: Vec<Vec<QuasiPeriodicSignal>>,
    beta: Vec<QuasiPeriodicSignal>,
    c: Vec<QuasiPeriodicSignal>,
    nonlinearity: Nonlinearity,
}

/// Linear cooperative delay system `z' = −d z + A z + β z(t − τ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDelaySystem {
    delays: Vec<f64>,
    d: Vec<QuasiPeriodicSignal>,
    a: Vec<Vec<QuasiPeriodicSignal>>,
    beta: Vec<QuasiPeriodicSignal>,
}

fn check_shape(field: &'static str, got: usize, expected: usize) -> Result<(), ModelError> {
    if got != expected {
        return Err(ModelError::Shape { field, got, expected });
    }
    Ok(())
}

fn check_linear_part(
    delays: &[f64],
    d: &[QuasiPeriodicSignal],
    a: &[Vec<QuasiPeriodicSignal>],
    beta: &[QuasiPeriodicSignal],
) -> Result<(), ModelError> {
    let n = delays.len();
    if n == 0 {
        return Err(ModelError::Empty);
    }
    check_shape("d", d.len(), n)?;
    check_shape("beta", beta.len(), n)?;
    check_shape("a", a.len(), n)?;
    for row in a {
        check_shape("a row", row.len(), n)?;
    }
    for (i, &tau) in delays.iter().enumerate() {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(ModelError::BadDelay { patch: i, value: tau });
        }
    }
    for (i, row) in a.iter().enumerate() {
        if !row[i].is_identically_zero() {
            return Err(ModelError::SelfMigration(i));
        }
    }
    Ok(())
}

fn check_indices(indices: &[usize], n: usize) -> Result<(), ModelError> {
    if indices.is_empty() {
        return Err(ModelError::BadIndexSet("empty".into()));
    }
    let mut seen = vec![false; n];
    for &i in indices {
        if i >= n {
            return Err(ModelError::BadIndexSet(format!("index {i} >= {n}")));
        }
        if seen[i] {
            return Err(ModelError::BadIndexSet(format!("duplicate index {i}")));
        }
        seen[i] = true;
    }
    Ok(())
}

fn pick<T: Clone>(v: &[T], indices: &[usize]) -> Vec<T> {
    indices.iter().map(|&i| v[i].clone()).collect()
}

fn pick_matrix<T: Clone>(m: &[Vec<T>], indices: &[usize]) -> Vec<Vec<T>> {
    indices.iter().map(|&i| pick(&m[i], indices)).collect()
}

#[inline]
fn linear_part_into(
    d: &[QuasiPeriodicSignal],
    a: &[Vec<QuasiPeriodicSignal>],
    t: f64,
    y: &[f64],
    out: &mut [f64],
) {
    for i in 0..y.len() {
        let mut acc = -d[i].eval(t) * y[i];
        for (j, aij) in a[i].iter().enumerate() {
            if j != i && y[j] != 0.0 && !aij.is_identically_zero() {
                acc += aij.eval(t) * y[j];
            }
        }
        out[i] = acc;
    }
}

impl TryFrom<SystemFile> for DelaySystem {
    type Error = ModelError;

    fn try_from(f: SystemFile) -> Result<Self, Self::Error> {
        check_shape("delays", f.delays.len(), f.n)?;
        DelaySystem::new(f.delays, f.d, f.a, f.beta, f.c, f.nonlinearity)
    }
}

impl From<DelaySystem> for SystemFile {
    fn from(s: DelaySystem) -> Self {
        SystemFile {
            n: s.delays.len(),
            delays: s.delays,
            d: s.d,
            beta: s.beta,
            c: s.c,
            a: s.a,
            nonlinearity: s.nonlinearity,
        }
    }
}

impl DelaySystem {
    pub fn new(
        delays: Vec<f64>,
        d: Vec<QuasiPeriodicSignal>,
        a: Vec<Vec<QuasiPeriodicSignal>>,
        beta: Vec<QuasiPeriodicSignal>,
        c: Vec<QuasiPeriodicSignal>,
        nonlinearity: Nonlinearity,
    ) -> Result<Self, ModelError> {
        check_linear_part(&delays, &d, &a, &beta)?;
        check_shape("c", c.len(), delays.len())?;
        if let Nonlinearity::MackeyGlass(alpha) = nonlinearity {
            if !(alpha.is_finite() && alpha >= 1.0) {
                return Err(ModelError::BadExponent(alpha));
            }
        }
        Ok(DelaySystem { delays, d, a, beta, c, nonlinearity })
    }

    /// Scalar system with constant coefficients and no migration.
    pub fn scalar(d: f64, beta: f64, c: f64, tau: f64, nonlinearity: Nonlinearity) -> Result<Self, ModelError> {
        DelaySystem::new(
            vec![tau],
            vec![QuasiPeriodicSignal::constant(d)],
            vec![vec![QuasiPeriodicSignal::zero()]],
            vec![QuasiPeriodicSignal::constant(beta)],
            vec![QuasiPeriodicSignal::constant(c)],
            nonlinearity,
        )
    }

    pub fn n(&self) -> usize {
        self.delays.len()
    }

    pub fn d(&self) -> &[QuasiPeriodicSignal] {
        &self.d
    }

    pub fn a(&self) -> &[Vec<QuasiPeriodicSignal>] {
        &self.a
    }

    pub fn beta(&self) -> &[QuasiPeriodicSignal] {
        &self.beta
    }

    pub fn c(&self) -> &[QuasiPeriodicSignal] {
        &self.c
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        self.nonlinearity
    }

    /// Checked right-hand side; rejects states below `−1e−12`.
    pub fn rhs(&self, t: f64, y: &[f64], y_delayed: &[f64]) -> Result<Vec<f64>, ModelError> {
        let n = self.n();
        check_shape("y", y.len(), n)?;
        check_shape("y_delayed", y_delayed.len(), n)?;
        for (i, &v) in y.iter().chain(y_delayed).enumerate() {
            if v < -NEGATIVE_STATE_TOL || v.is_nan() {
                return Err(ModelError::NegativeState { component: i % n, value: v });
            }
        }
        let mut out = vec![0.0; n];
        self.rhs_into(t, y, y_delayed, &mut out);
        Ok(out)
    }

    /// Linearization along the null solution; independent of `c` and of the
    /// nonlinearity since every kind has unit slope at 0.
    pub fn linearized(&self) -> LinearDelaySystem {
        LinearDelaySystem {
            delays: self.delays.clone(),
            d: self.d.clone(),
            a: self.a.clone(),
            beta: self.beta.clone(),
        }
    }

    /// Restriction to `indices`, dropping coupling to the other patches.
    pub fn subsystem(&self, indices: &[usize]) -> Result<DelaySystem, ModelError> {
        check_indices(indices, self.n())?;
        Ok(DelaySystem {
            delays: pick(&self.delays, indices),
            d: pick(&self.d, indices),
            a: pick_matrix(&self.a, indices),
            beta: pick(&self.beta, indices),
            c: pick(&self.c, indices),
            nonlinearity: self.nonlinearity,
        })
    }

    /// Relabels patches: patch `k` of the result is patch `order[k]` here.
    pub fn permuted(&self, order: &[usize]) -> Result<DelaySystem, ModelError> {
        if order.len() != self.n() {
            return Err(ModelError::BadIndexSet("not a permutation".into()));
        }
        self.subsystem(order)
    }

    /// Every coefficient shifted in time: the hull element at `shift`.
    pub fn translate(&self, shift: f64) -> DelaySystem {
        let tr = |v: &[QuasiPeriodicSignal]| v.iter().map(|s| s.translate(shift)).collect();
        DelaySystem {
            delays: self.delays.clone(),
            d: tr(&self.d),
            a: self.a.iter().map(|row| tr(row)).collect(),
            beta: tr(&self.beta),
            c: tr(&self.c),
            nonlinearity: self.nonlinearity,
        }
    }

    pub fn with_c(&self, c: Vec<QuasiPeriodicSignal>, nonlinearity: Nonlinearity) -> Result<DelaySystem, ModelError> {
        DelaySystem::new(
            self.delays.clone(),
            self.d.clone(),
            self.a.clone(),
            self.beta.clone(),
            c,
            nonlinearity,
        )
    }

    pub fn validate(&self, grid_step: f64, horizon: f64) -> Result<ValidationReport, ModelError> {
        validate(self, grid_step, horizon)
    }
}

impl DelayRhs for DelaySystem {
    fn dim(&self) -> usize {
        self.delays.len()
    }

    fn delays(&self) -> &[f64] {
        &self.delays
    }

    fn rhs_into(&self, t: f64, y: &[f64], y_delayed: &[f64], out: &mut [f64]) {
        linear_part_into(&self.d, &self.a, t, y, out);
        for i in 0..y.len() {
            let g = match self.nonlinearity {
                Nonlinearity::Linear => y_delayed[i],
                kind => kind.apply(self.c[i].eval(t), y_delayed[i]),
            };
            out[i] += self.beta[i].eval(t) * g;
        }
    }

    fn preserves_nonnegativity(&self) -> bool {
        true
    }
}

impl LinearDelaySystem {
    pub fn new(
        delays: Vec<f64>,
        d: Vec<QuasiPeriodicSignal>,
        a: Vec<Vec<QuasiPeriodicSignal>>,
        beta: Vec<QuasiPeriodicSignal>,
    ) -> Result<Self, ModelError> {
        check_linear_part(&delays, &d, &a, &beta)?;
        Ok(LinearDelaySystem { delays, d, a, beta })
    }

    /// `z' = −d z + β z(t − τ)` with constant coefficients.
    pub fn scalar(d: f64, beta: f64, tau: f64) -> Result<Self, ModelError> {
        LinearDelaySystem::new(
            vec![tau],
            vec![QuasiPeriodicSignal::constant(d)],
            vec![vec![QuasiPeriodicSignal::zero()]],
            vec![QuasiPeriodicSignal::constant(beta)],
        )
    }

    pub fn n(&self) -> usize {
        self.delays.len()
    }

    pub fn d(&self) -> &[QuasiPeriodicSignal] {
        &self.d
    }

    pub fn a(&self) -> &[Vec<QuasiPeriodicSignal>] {
        &self.a
    }

    pub fn beta(&self) -> &[QuasiPeriodicSignal] {
        &self.beta
    }

    pub fn rhs(&self, t: f64, z: &[f64], z_delayed: &[f64]) -> Result<Vec<f64>, ModelError> {
        check_shape("z", z.len(), self.n())?;
        check_shape("z_delayed", z_delayed.len(), self.n())?;
        let mut out = vec![0.0; self.n()];
        self.rhs_into(t, z, z_delayed, &mut out);
        Ok(out)
    }

    pub fn subsystem(&self, indices: &[usize]) -> Result<LinearDelaySystem, ModelError> {
        check_indices(indices, self.n())?;
        Ok(LinearDelaySystem {
            delays: pick(&self.delays, indices),
            d: pick(&self.d, indices),
            a: pick_matrix(&self.a, indices),
            beta: pick(&self.beta, indices),
        })
    }

    pub fn translate(&self, shift: f64) -> LinearDelaySystem {
        let tr = |v: &[QuasiPeriodicSignal]| v.iter().map(|s| s.translate(shift)).collect();
        LinearDelaySystem {
            delays: self.delays.clone(),
            d: tr(&self.d),
            a: self.a.iter().map(|row| tr(row)).collect(),
            beta: tr(&self.beta),
        }
    }
}

impl DelayRhs for LinearDelaySystem {
    fn dim(&self) -> usize {
        self.delays.len()
    }

    fn delays(&self) -> &[f64] {
        &self.delays
    }

    fn rhs_into(&self, t: f64, z: &[f64], z_delayed: &[f64], out: &mut [f64]) {
        linear_part_into(&self.d, &self.a, t, z, out);
        for i in 0..z.len() {
            out[i] += self.beta[i].eval(t) * z_delayed[i];
        }
    }

    fn preserves_nonnegativity(&self) -> bool {
        false
    }
}

/// Hypotheses checked by [`validate`]; `A1` (almost periodicity) holds for
/// every finite trigonometric sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 6] =
        [Hypothesis::A1, Hypothesis::A2, Hypothesis::A3, Hypothesis::A4, Hypothesis::A5, Hypothesis::A6];

    pub fn label(&self) -> &'static str {
        match self {
            Hypothesis::A1 => "a1",
            Hypothesis::A2 => "a2",
            Hypothesis::A3 => "a3",
            Hypothesis::A4 => "a4",
            Hypothesis::A5 => "a5",
            Hypothesis::A6 => "a6",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Hypothesis::A1 => "coefficients almost periodic",
            Hypothesis::A2 => "d_i(t) >= d0 > 0",
            Hypothesis::A3 => "a_ij(t) >= 0, a_ii = 0",
            Hypothesis::A4 => "beta_i(t) > 0",
            Hypothesis::A5 => "c_i(t) >= c0 > 0",
            Hypothesis::A6 => "d_i(t) - sum_j a_ji(t) > 0",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassMethod {
    /// Holds for all t ∈ ℝ by the amplitude-sum bound.
    Analytic,
    /// No violation on the sampling grid.
    Grid,
    /// Holds by construction.
    Construction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisStatus {
    Pass { method: PassMethod },
    Fail { patch: usize, other: Option<usize>, witness_t: f64, value: f64 },
}

impl HypothesisStatus {
    pub fn passed(&self) -> bool {
        matches!(self, HypothesisStatus::Pass { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub hypothesis: Hypothesis,
    pub status: HypothesisStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<HypothesisCheck>,
    /// Lower bound of the `d_i` (analytic bound when certified, else grid minimum).
    pub d0: f64,
    /// Lower bound of the `c_i`, same convention.
    pub c0: f64,
    /// Worst-case variation of a checked quantity between grid points.
    pub grid_margin: f64,
    pub grid_step: f64,
    pub horizon: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status.passed())
    }

    pub fn status(&self, h: Hypothesis) -> &HypothesisStatus {
        &self
            .checks
            .iter()
            .find(|c| c.hypothesis == h)
            .expect("every hypothesis is checked")
            .status
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.status.passed())
    }
}

struct Bound {
    /// Lower bound (analytic) or grid minimum.
    low: f64,
    status: HypothesisStatus,
}

/// Checks `s(t) > 0` (or `>= 0` when `strict` is false).
fn check_positive(
    s: &QuasiPeriodicSignal,
    strict: bool,
    grid: &[f64],
    patch: usize,
    other: Option<usize>,
) -> Bound {
    let ok = |v: f64| if strict { v > 0.0 } else { v >= 0.0 };
    let analytic = s.hull_inf();
    if ok(analytic) {
        return Bound { low: analytic, status: HypothesisStatus::Pass { method: PassMethod::Analytic } };
    }
    let (t_min, v_min) = grid
        .iter()
        .map(|&t| (t, s.eval(t)))
        .fold((f64::NAN, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let status = if ok(v_min) {
        HypothesisStatus::Pass { method: PassMethod::Grid }
    } else {
        HypothesisStatus::Fail { patch, other, witness_t: t_min, value: v_min }
    };
    Bound { low: v_min, status }
}

fn first_failure(bounds: Vec<Bound>) -> (f64, HypothesisStatus) {
    let low = bounds.iter().map(|b| b.low).fold(f64::INFINITY, f64::min);
    let status = bounds
        .into_iter()
        .map(|b| b.status)
        .find(|s| !s.passed())
        .unwrap_or(HypothesisStatus::Pass { method: PassMethod::Grid });
    (low, status)
}

fn all_pass_method(bounds: &[Bound]) -> PassMethod {
    if bounds
        .iter()
        .all(|b| b.status == HypothesisStatus::Pass { method: PassMethod::Analytic })
    {
        PassMethod::Analytic
    } else {
        PassMethod::Grid
    }
}

fn summarize(bounds: Vec<Bound>) -> (f64, HypothesisStatus) {
    let method = all_pass_method(&bounds);
    let (low, status) = first_failure(bounds);
    match status {
        HypothesisStatus::Pass { .. } => (low, HypothesisStatus::Pass { method }),
        fail => (low, fail),
    }
}

/// Checks (a1)–(a6) on `t ∈ {0, grid_step, …, horizon}`, short-circuiting to
/// an analytic pass whenever the amplitude-sum lower bound already suffices.
pub fn validate(sys: &DelaySystem, grid_step: f64, horizon: f64) -> Result<ValidationReport, ModelError> {
    if !(grid_step.is_finite() && grid_step > 0.0 && horizon.is_finite() && horizon > 0.0) {
        return Err(ModelError::BadGrid);
    }
    let steps = (horizon / grid_step).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| k as f64 * grid_step).collect();
    let n = sys.n();

    let d_bounds: Vec<Bound> = (0..n).map(|i| check_positive(&sys.d[i], true, &grid, i, None)).collect();
    let mut a_bounds = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                a_bounds.push(check_positive(&sys.a[i][j], false, &grid, i, Some(j)));
            }
        }
    }
    let beta_bounds: Vec<Bound> = (0..n).map(|i| check_positive(&sys.beta[i], true, &grid, i, None)).collect();
    let c_bounds: Vec<Bound> = (0..n).map(|i| check_positive(&sys.c[i], true, &grid, i, None)).collect();
    let column_bounds: Vec<Bound> = (0..n)
        .map(|i| {
            let outflow = (0..n)
                .filter(|&j| j != i)
                .fold(QuasiPeriodicSignal::zero(), |acc, j| acc.add(&sys.a[j][i]));
            check_positive(&sys.d[i].sub(&outflow), true, &grid, i, None)
        })
        .collect();

    let grid_margin = {
        let lip = |v: &[QuasiPeriodicSignal]| v.iter().map(|s| s.lipschitz_bound()).fold(0.0, f64::max);
        let a_lip = sys.a.iter().map(|row| lip(row)).fold(0.0, f64::max);
        0.5 * grid_step * lip(&sys.d).max(lip(&sys.beta)).max(lip(&sys.c)).max(a_lip * n as f64)
    };

    let (d0, a2) = summarize(d_bounds);
    let (_, a3) = summarize(a_bounds);
    let (_, a4) = summarize(beta_bounds);
    let (c0, a5) = summarize(c_bounds);
    let (_, a6) = summarize(column_bounds);

    let checks = vec![
        HypothesisCheck { hypothesis: Hypothesis::A1, status: HypothesisStatus::Pass { method: PassMethod::Construction } },
        HypothesisCheck { hypothesis: Hypothesis::A2, status: a2 },
        HypothesisCheck { hypothesis: Hypothesis::A3, status: a3 },
        HypothesisCheck { hypothesis: Hypothesis::A4, status: a4 },
        HypothesisCheck { hypothesis: Hypothesis::A5, status: a5 },
        HypothesisCheck { hypothesis: Hypothesis::A6, status: a6 },
    ];
    Ok(ValidationReport { checks, d0, c0, grid_margin, grid_step, horizon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::Term;
    use std::f64::consts::{LN_2, PI};

    fn k(v: f64) -> QuasiPeriodicSignal {
        QuasiPeriodicSignal::constant(v)
    }

    fn z() -> QuasiPeriodicSignal {
        QuasiPeriodicSignal::zero()
    }

    fn two_patch(d1: QuasiPeriodicSignal, a21: QuasiPeriodicSignal) -> DelaySystem {
        DelaySystem::new(
            vec![1.0, 1.0],
            vec![d1, k(1.0)],
            vec![vec![z(), z()], vec![a21, z()]],
            vec![k(2.0), k(2.0)],
            vec![k(1.0), k(1.0)],
            Nonlinearity::Nicholson,
        )
        .unwrap()
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert!(matches!(
            DelaySystem::new(vec![], vec![], vec![], vec![], vec![], Nonlinearity::Linear),
            Err(ModelError::Empty)
        ));
        assert!(matches!(
            DelaySystem::scalar(1.0, 2.0, 1.0, 0.0, Nonlinearity::Nicholson),
            Err(ModelError::BadDelay { .. })
        ));
        assert!(matches!(
            DelaySystem::scalar(1.0, 2.0, 1.0, 1.0, Nonlinearity::MackeyGlass(0.5)),
            Err(ModelError::BadExponent(_))
        ));
        let self_loop = DelaySystem::new(
            vec![1.0],
            vec![k(1.0)],
            vec![vec![k(0.1)]],
            vec![k(1.0)],
            vec![k(1.0)],
            Nonlinearity::Nicholson,
        );
        assert!(matches!(self_loop, Err(ModelError::SelfMigration(0))));
    }

    #[test]
    fn validate_constant_scalar() {
        let sys = DelaySystem::scalar(1.0, 2.0, 1.0, 1.0, Nonlinearity::Nicholson).unwrap();
        let r = sys.validate(0.01, 1000.0).unwrap();
        assert!(r.passed());
        assert_eq!(r.d0, 1.0);
        assert_eq!(r.c0, 1.0);
    }

    #[test]
    fn validate_constant_column_violation() {
        let sys = two_patch(k(1.0), k(1.5));
        let r = sys.validate(0.01, 100.0).unwrap();
        assert!(!r.passed());
        match r.status(Hypothesis::A6) {
            HypothesisStatus::Fail { patch, value, .. } => {
                assert_eq!(*patch, 0);
                assert!((value + 0.5).abs() < 1e-12);
            }
            other => panic!("expected a6 failure, got {other:?}"),
        }
        assert!(r.status(Hypothesis::A2).passed());
    }

    #[test]
    fn validate_oscillating_column_violation_has_witness() {
        let d1 = QuasiPeriodicSignal::new(1.0, vec![Term::sine(0.5, 1.0, 0.0)]).unwrap();
        let sys = two_patch(d1, k(0.6));
        let r = sys.validate(0.01, 1000.0).unwrap();
        match r.status(Hypothesis::A6) {
            HypothesisStatus::Fail { patch, witness_t, value, .. } => {
                assert_eq!(*patch, 0);
                let phase = witness_t.rem_euclid(2.0 * PI);
                assert!((phase - 1.5 * PI).abs() < 0.01, "witness {witness_t}");
                assert!((value + 0.1).abs() < 1e-4);
            }
            other => panic!("expected a6 failure, got {other:?}"),
        }
    }

    #[test]
    fn validate_reports_grid_pass_when_bound_is_not_enough() {
        // inf over the hull is 0.2 − 0.1 − 0.1 = 0 but the modes never align
        // at the bottom on [0, 100]
        let d = QuasiPeriodicSignal::new(
            0.2,
            vec![Term::sine(0.1, 1.0, 0.0), Term::sine(0.1, 1.0, PI)],
        )
        .unwrap();
        let sys = DelaySystem::new(
            vec![1.0],
            vec![d],
            vec![vec![z()]],
            vec![k(1.0)],
            vec![k(1.0)],
            Nonlinearity::Nicholson,
        )
        .unwrap();
        let r = sys.validate(0.01, 100.0).unwrap();
        assert_eq!(r.status(Hypothesis::A2), &HypothesisStatus::Pass { method: PassMethod::Grid });
    }

    #[test]
    fn validate_flags_negative_migration_and_birth() {
        let sys = DelaySystem::new(
            vec![1.0, 1.0],
            vec![k(3.0), k(3.0)],
            vec![vec![z(), k(-0.1)], vec![z(), z()]],
            vec![k(1.0), QuasiPeriodicSignal::new(0.0, vec![Term::cosine(1.0, 1.0, 0.0)]).unwrap()],
            vec![k(1.0), k(0.0)],
            Nonlinearity::Nicholson,
        )
        .unwrap();
        let r = sys.validate(0.01, 50.0).unwrap();
        assert!(!r.status(Hypothesis::A3).passed());
        assert!(!r.status(Hypothesis::A4).passed());
        assert!(!r.status(Hypothesis::A5).passed());
        assert!(matches!(sys.validate(0.0, 1.0), Err(ModelError::BadGrid)));
    }

    #[test]
    fn rhs_examples() {
        let sys = DelaySystem::scalar(1.0, 2.0, 1.0, 1.0, Nonlinearity::Nicholson).unwrap();
        assert_eq!(sys.rhs(0.0, &[0.0], &[0.0]).unwrap(), vec![0.0]);
        let eq = sys.rhs(3.0, &[LN_2], &[LN_2]).unwrap()[0];
        assert!(eq.abs() < 1e-15);
        assert!(matches!(sys.rhs(0.0, &[-1e-9], &[0.0]), Err(ModelError::NegativeState { .. })));
        assert!(sys.rhs(0.0, &[-1e-13], &[0.0]).is_ok());
    }

    #[test]
    fn linearized_examples() {
        let nich = DelaySystem::scalar(1.0, 2.0, 1.0, 1.0, Nonlinearity::Nicholson).unwrap();
        let lin = nich.linearized();
        assert_eq!(lin, LinearDelaySystem::scalar(1.0, 2.0, 1.0).unwrap());
        let mg = DelaySystem::scalar(1.0, 2.0, 7.0, 1.0, Nonlinearity::MackeyGlass(1.0)).unwrap();
        assert_eq!(mg.linearized(), lin);
    }

    #[test]
    fn subsystem_examples() {
        let sys = two_patch(k(1.0), QuasiPeriodicSignal::new(0.5, vec![Term::sine(0.25, 1.0, 0.0)]).unwrap());
        let lin = sys.linearized();
        assert_eq!(lin.subsystem(&[0, 1]).unwrap(), lin);
        let single = lin.subsystem(&[1]).unwrap();
        assert_eq!(single, LinearDelaySystem::scalar(1.0, 2.0, 1.0).unwrap());
        assert!(lin.subsystem(&[]).is_err());
        assert!(lin.subsystem(&[0, 0]).is_err());
        assert!(lin.subsystem(&[2]).is_err());
    }

    #[test]
    fn serde_round_trip_and_strictness() {
        let doc = r#"
            n = 2
            delays = [1.0, 0.5]
            d = [1.0, { constant = 2.0, terms = [{ kind = "sin", amplitude = 0.5, frequency = 1.0 }] }]
            beta = [2.0, 2.0]
            c = [1.0, 1.0]
            a = [[0.0, 0.3], [0.0, 0.0]]
            nonlinearity = { mackey_glass = 2.0 }
        "#;
        let sys: DelaySystem = toml::from_str(doc).unwrap();
        assert_eq!(sys.n(), 2);
        assert_eq!(sys.nonlinearity(), Nonlinearity::MackeyGlass(2.0));
        let json = serde_json::to_string(&sys).unwrap();
        let back: DelaySystem = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sys);

        let typo = doc.replace("beta =", "betta =");
        assert!(toml::from_str::<DelaySystem>(&typo).is_err());
        let bad_n = doc.replace("n = 2", "n = 3");
        assert!(toml::from_str::<DelaySystem>(&bad_n).is_err());
        let bad_term = doc.replace("frequency = 1.0", "frequency = 1.0, freq = 2.0");
        assert!(toml::from_str::<DelaySystem>(&bad_term).is_err());
        let nich = doc.replace("{ mackey_glass = 2.0 }", "\"nicholson\"");
        assert_eq!(toml::from_str::<DelaySystem>(&nich).unwrap().nonlinearity(), Nonlinearity::Nicholson);
    }
}
