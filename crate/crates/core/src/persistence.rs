//! Uniform (u0) and strict (s0) persistence at zero.
//!
//! The system is u0-persistent iff the block exponent is positive on every
//! block of `I`, and s0-persistent iff it is positive on every block of `J`.
//! Exponents within `margin_tol` of zero, or not yet converged, give an
//! uncertain verdict instead of a guess.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PersistenceError, SignalError};
use crate::integrator::{default_step, integrate, ClampStats, HistoryFn, InitialHistory};
use crate::lyapunov::{block_exponents_for, EstimateStatus, ExponentOptions, LyapunovEstimate};
use crate::model::{DelayRhs, DelaySystem};
use crate::signals::QuasiPeriodicSignal;
use crate::structure::{condense, zero_pattern, BlockStructure};

pub const DEFAULT_MARGIN_TOL: f64 = 5e-3;
/// Tail minimum expected of every strongly positive start when u0 holds.
pub const M_FLOOR: f64 = 1e-4;
/// Tail maximum expected of every start when neither property holds.
pub const EXTINCTION_LEVEL: f64 = 1e-6;
pub const DEFAULT_RECURRENCE_TOL: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Uncertain,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Uncertain => "uncertain",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    /// `min |λ̃_j|` over the deciding set.
    pub margin: f64,
    /// Block with the smallest exponent in the deciding set.
    pub decisive_block: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub block: usize,
    pub indices: Vec<usize>,
    pub value: f64,
    pub status: EstimateStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistenceVerdict {
    pub u0: Decision,
    pub s0: Decision,
    pub structure: BlockStructure,
    pub exponents: Vec<BlockSummary>,
    pub margin_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub exponent: ExponentOptions,
    pub margin_tol: f64,
    pub validation_step: f64,
    pub validation_horizon: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            exponent: ExponentOptions::default(),
            margin_tol: DEFAULT_MARGIN_TOL,
            validation_step: 0.01,
            validation_horizon: 1e3,
        }
    }
}

/// Applies the three-valued rule to the exponents of one deciding set.
pub fn decide(set: &[usize], exponents: &[BlockSummary], margin_tol: f64) -> Decision {
    let members: Vec<&BlockSummary> = set.iter().map(|&j| &exponents[j]).collect();
    let converged = |b: &&BlockSummary| b.status == EstimateStatus::Converged;
    let yes = members.iter().all(|b| converged(b) && b.value > margin_tol);
    let no = members.iter().any(|b| converged(b) && b.value < -margin_tol);
    let verdict = if yes {
        Verdict::Yes
    } else if no {
        Verdict::No
    } else {
        Verdict::Uncertain
    };
    let margin = members.iter().map(|b| b.value.abs()).fold(f64::INFINITY, f64::min);
    let decisive_block = members
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .map(|b| b.block)
        .expect("deciding sets are nonempty");
    Decision { verdict, margin, decisive_block }
}

/// Verdict from precomputed block exponents.
pub fn verdict_from(structure: BlockStructure, estimates: &[LyapunovEstimate], margin_tol: f64) -> PersistenceVerdict {
    let exponents: Vec<BlockSummary> = structure
        .blocks
        .iter()
        .zip(estimates)
        .enumerate()
        .map(|(block, (indices, est))| BlockSummary {
            block,
            indices: indices.clone(),
            value: est.value,
            status: est.status,
        })
        .collect();
    let u0 = decide(&structure.i_set, &exponents, margin_tol);
    let s0 = decide(&structure.j_set, &exponents, margin_tol);
    PersistenceVerdict { u0, s0, structure, exponents, margin_tol }
}

/// Full pipeline: validate, condense, estimate block exponents, decide.
pub fn classify(sys: &DelaySystem, opts: &ClassifyOptions) -> Result<PersistenceVerdict, PersistenceError> {
    let report = sys.validate(opts.validation_step, opts.validation_horizon)?;
    if !report.passed() {
        let failed: Vec<&str> = report.failures().map(|c| c.hypothesis.label()).collect();
        return Err(PersistenceError::Validation(format!("failed {}", failed.join(", "))));
    }
    let structure = condense(&zero_pattern(sys));
    let blocks = block_exponents_for(&sys.linearized(), &structure, &opts.exponent)?;
    let estimates: Vec<LyapunovEstimate> = blocks.into_iter().map(|b| b.estimate).collect();
    Ok(verdict_from(structure, &estimates, opts.margin_tol))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRun {
    pub history: usize,
    /// `φ(0) ≫ 0`, the start condition of the u0 definition.
    pub strongly_positive_start: bool,
    pub tail_min: Vec<f64>,
    pub tail_max: Vec<f64>,
    /// Minimum over components of the tail minima.
    pub u0_witness: f64,
    /// Maximum over components of the tail minima.
    pub s0_witness: f64,
    pub clamp: ClampStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalReport {
    pub horizon: f64,
    pub window: f64,
    pub step: f64,
    pub runs: Vec<HistoryRun>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub consistent: bool,
    pub checked: Vec<String>,
    pub violations: Vec<String>,
}

impl EmpiricalReport {
    /// Smallest u0 witness over strongly positive starts.
    pub fn m_estimate(&self) -> Option<f64> {
        self.runs
            .iter()
            .filter(|r| r.strongly_positive_start)
            .map(|r| r.u0_witness)
            .reduce(f64::min)
    }

    pub fn max_tail(&self) -> f64 {
        self.runs
            .iter()
            .flat_map(|r| r.tail_max.iter().copied())
            .fold(0.0, f64::max)
    }

    /// Compares tail behaviour with the sign predictions of `verdict`.
    pub fn consistency(&self, verdict: &PersistenceVerdict) -> Consistency {
        let mut checked = Vec::new();
        let mut violations = Vec::new();
        if verdict.u0.verdict == Verdict::Yes {
            checked.push(format!("u0 = yes: tail minimum >= {M_FLOOR:e} from every strongly positive start"));
            for r in self.runs.iter().filter(|r| r.strongly_positive_start) {
                if r.u0_witness < M_FLOOR {
                    violations.push(format!("history {}: tail minimum {:e}", r.history, r.u0_witness));
                }
            }
        }
        if verdict.u0.verdict == Verdict::No && verdict.s0.verdict == Verdict::No {
            checked.push(format!("u0 = s0 = no: tail maximum < {EXTINCTION_LEVEL:e} from every start"));
            for r in &self.runs {
                let m = r.tail_max.iter().copied().fold(0.0, f64::max);
                if m >= EXTINCTION_LEVEL {
                    violations.push(format!("history {}: tail maximum {:e}", r.history, m));
                }
            }
        }
        Consistency { consistent: violations.is_empty(), checked, violations }
    }
}

/// Four constants spanning four orders of magnitude plus one oscillatory map.
pub fn default_histories(sys: &DelaySystem) -> Vec<InitialHistory> {
    let n = sys.n();
    let mut out: Vec<InitialHistory> =
        [0.01, 0.1, 1.0, 10.0].iter().map(|&v| InitialHistory::constant(n, v)).collect();
    out.push(InitialHistory::new(
        sys.delays()
            .iter()
            .enumerate()
            .map(|(i, &tau)| HistoryFn::from_fn(tau, 64, |s| 1.0 + 0.5 * (3.0 * s + i as f64).sin()))
            .collect(),
    ));
    out
}

/// Integrates every history to `horizon` and reports tail statistics over
/// `[horizon − window, horizon]`.
pub fn empirical_check(
    sys: &DelaySystem,
    histories: &[InitialHistory],
    horizon: f64,
    window: f64,
    step: Option<f64>,
) -> Result<EmpiricalReport, PersistenceError> {
    if !(window > 0.0 && window < horizon) {
        return Err(PersistenceError::BadWindow { window, horizon });
    }
    let h = step.unwrap_or_else(|| default_step(sys.delays()));
    let runs = histories
        .par_iter()
        .enumerate()
        .map(|(idx, phi)| {
            let traj = integrate(sys, phi, horizon, h)
                .map_err(|source| PersistenceError::History { history: idx, source })?;
            let t_end = traj.t_end();
            let (tail_min, tail_max): (Vec<f64>, Vec<f64>) =
                (0..sys.n()).map(|i| traj.window_knot_extrema(i, t_end - window, t_end)).unzip();
            let start = traj.knot(0);
            Ok(HistoryRun {
                history: idx,
                strongly_positive_start: start.iter().all(|&v| v > 0.0),
                u0_witness: tail_min.iter().copied().fold(f64::INFINITY, f64::min),
                s0_witness: tail_min.iter().copied().fold(0.0, f64::max),
                tail_min,
                tail_max,
                clamp: traj.clamp_stats(),
            })
        })
        .collect::<Result<Vec<_>, PersistenceError>>()?;
    let step = crate::integrator::adjust_step(sys.delays(), h)
        .map(|(s, _)| s)
        .unwrap_or(h);
    Ok(EmpiricalReport { horizon, window, step, runs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarTrend {
    /// `F(t)` grows linearly beyond its oscillation.
    PersistentTrend,
    /// `F` comes back below the recurrence tolerance in the second half.
    Recurrent,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: f64,
    /// `∫_0^t a`.
    pub integral: f64,
    /// Minimum of the integral over this and all later checkpoints.
    pub min_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarDiagnostic {
    pub checkpoints: Vec<Checkpoint>,
    /// Least-squares slope of `F` over the second half of the checkpoints.
    pub slope: f64,
    /// Spread (max − min) of the fit residuals over the same range.
    pub residual_spread: f64,
    pub min_second_half: f64,
    pub recurrence_tol: f64,
    pub verdict: ScalarTrend,
}

/// Trend test for `y' = a(t) y`: persistent iff `∫_0^t a → ∞`.
pub fn scalar_criterion(
    a: &QuasiPeriodicSignal,
    checkpoints: &[f64],
    recurrence_tol: f64,
) -> Result<ScalarDiagnostic, SignalError> {
    if checkpoints.len() < 2
        || checkpoints[0] <= 0.0
        || checkpoints.windows(2).any(|w| !(w[1] > w[0]))
        || checkpoints.iter().any(|t| !t.is_finite())
    {
        return Err(SignalError::NonFinite);
    }
    let values: Vec<f64> = checkpoints.iter().map(|&t| a.integral(0.0, t)).collect();
    let mut min_after = vec![0.0; values.len()];
    let mut running = f64::INFINITY;
    for k in (0..values.len()).rev() {
        running = running.min(values[k]);
        min_after[k] = running;
    }
    let half = checkpoints.len() / 2;
    let (ts, fs) = (&checkpoints[half..], &values[half..]);
    let m = ts.len() as f64;
    let t_mean = ts.iter().sum::<f64>() / m;
    let f_mean = fs.iter().sum::<f64>() / m;
    let sxx: f64 = ts.iter().map(|t| (t - t_mean).powi(2)).sum();
    let sxy: f64 = ts.iter().zip(fs).map(|(t, f)| (t - t_mean) * (f - f_mean)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let residuals = ts.iter().zip(fs).map(|(t, f)| f - (f_mean + slope * (t - t_mean)));
    let (rmin, rmax) = residuals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
    let residual_spread = rmax - rmin;
    let min_second_half = fs.iter().copied().fold(f64::INFINITY, f64::min);
    let span = ts[ts.len() - 1] - ts[0];

    let verdict = if slope > 0.0 && slope * span > residual_spread {
        ScalarTrend::PersistentTrend
    } else if min_second_half < recurrence_tol {
        ScalarTrend::Recurrent
    } else {
        ScalarTrend::Indeterminate
    };
    Ok(ScalarDiagnostic {
        checkpoints: checkpoints
            .iter()
            .zip(&values)
            .zip(&min_after)
            .map(|((&t, &integral), &min_after)| Checkpoint { t, integral, min_after })
            .collect(),
        slope,
        residual_spread,
        min_second_half,
        recurrence_tol,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::characteristic_root;
    use crate::model::Nonlinearity;
    use crate::signals::{conley_miller, Term};
    use std::f64::consts::LN_2;

    fn summary(block: usize, value: f64, status: EstimateStatus) -> BlockSummary {
        BlockSummary { block, indices: vec![block], value, status }
    }

    #[test]
    fn decision_rule() {
        let c = EstimateStatus::Converged;
        let u = EstimateStatus::Uncertain;
        let exps = vec![summary(0, 0.3, c), summary(1, -0.2, c), summary(2, 0.001, c), summary(3, 0.4, u)];
        assert_eq!(decide(&[0], &exps, 5e-3).verdict, Verdict::Yes);
        assert_eq!(decide(&[0, 1], &exps, 5e-3).verdict, Verdict::No);
        assert_eq!(decide(&[0, 1], &exps, 5e-3).decisive_block, 1);
        assert_eq!(decide(&[0, 2], &exps, 5e-3).verdict, Verdict::Uncertain);
        assert_eq!(decide(&[3], &exps, 5e-3).verdict, Verdict::Uncertain);
        assert_eq!(decide(&[1, 3], &exps, 5e-3).verdict, Verdict::No);
        assert!((decide(&[0, 2], &exps, 5e-3).margin - 0.001).abs() < 1e-15);
    }

    #[test]
    fn persistent_scalar() {
        let sys = DelaySystem::scalar(1.0, 2.0, 1.0, 1.0, Nonlinearity::Nicholson).unwrap();
        let v = classify(&sys, &ClassifyOptions::default()).unwrap();
        assert_eq!(v.structure.i_set, vec![0]);
        assert_eq!(v.structure.j_set, vec![0]);
        assert_eq!((v.u0.verdict, v.s0.verdict), (Verdict::Yes, Verdict::Yes));
        assert!((v.exponents[0].value - characteristic_root(1.0, 2.0, 1.0)).abs() < 1e-3);

        let hist: Vec<InitialHistory> = [0.01, 0.1, 1.0, 10.0].iter().map(|&c| InitialHistory::constant(1, c)).collect();
        let rep = empirical_check(&sys, &hist, 200.0, 20.0, None).unwrap();
        for r in &rep.runs {
            assert!((r.tail_min[0] - LN_2).abs() < 1e-2 && (r.tail_max[0] - LN_2).abs() < 1e-2);
        }
        assert!(rep.consistency(&v).consistent);
    }

    #[test]
    fn subcritical_scalar() {
        let sys = DelaySystem::scalar(1.0, 0.5, 1.0, 1.0, Nonlinearity::Nicholson).unwrap();
        let v = classify(&sys, &ClassifyOptions::default()).unwrap();
        assert_eq!((v.u0.verdict, v.s0.verdict), (Verdict::No, Verdict::No));
        let rep = empirical_check(&sys, &default_histories(&sys), 100.0, 10.0, None).unwrap();
        assert!(rep.max_tail() < 1e-6);
        assert!(rep.consistency(&v).consistent);
    }

    #[test]
    fn classify_refuses_invalid_systems() {
        let sys = DelaySystem::scalar(1.0, 2.0, 0.0, 1.0, Nonlinearity::Nicholson).unwrap();
        assert!(matches!(classify(&sys, &ClassifyOptions::default()), Err(PersistenceError::Validation(_))));
    }

    #[test]
    fn empirical_window_checked() {
        let sys = DelaySystem::scalar(1.0, 2.0, 1.0, 1.0, Nonlinearity::Nicholson).unwrap();
        assert!(empirical_check(&sys, &default_histories(&sys), 10.0, 10.0, None).is_err());
    }

    fn checkpoints(end: f64, step: f64) -> Vec<f64> {
        (1..=(end / step) as usize).map(|k| k as f64 * step).collect()
    }

    #[test]
    fn scalar_criterion_examples() {
        let cps = checkpoints(1e4, 1.0);
        let c = scalar_criterion(&QuasiPeriodicSignal::constant(0.3), &cps, 0.1).unwrap();
        assert_eq!(c.verdict, ScalarTrend::PersistentTrend);
        assert!((c.slope - 0.3).abs() < 1e-9);

        let sin = QuasiPeriodicSignal::new(0.0, vec![Term::sine(1.0, 1.0, 0.0)]).unwrap();
        let s = scalar_criterion(&sin, &cps, 0.1).unwrap();
        assert_eq!(s.verdict, ScalarTrend::Recurrent);
        assert!(s.checkpoints.iter().all(|p| p.integral >= 0.0 && p.integral <= 2.0));

        for &c0 in &[1e-6, 1e-3, 0.0, -1e-3, -0.5] {
            let d = scalar_criterion(&QuasiPeriodicSignal::constant(c0), &cps, 0.1).unwrap();
            assert_eq!(d.verdict == ScalarTrend::PersistentTrend, c0 > 0.0, "c = {c0}");
        }
        assert!(scalar_criterion(&sin, &[2.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn scalar_criterion_on_truncated_zero_mean_signal() {
        // f_6 is 2π·64-periodic, so its integral keeps returning to 0
        let f = conley_miller(6).unwrap();
        let d = scalar_criterion(&f, &checkpoints(1e4, 0.5), 0.1).unwrap();
        assert!(d.checkpoints.iter().all(|p| p.integral >= 0.0));
        assert!(d.min_second_half < 0.1);
        assert_eq!(d.verdict, ScalarTrend::Recurrent);
        assert!(d.slope.abs() < 1e-3);
    }
}
