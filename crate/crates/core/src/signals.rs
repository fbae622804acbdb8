//! Almost periodic coefficients as finite trigonometric sums.
//!
//! A [`QuasiPeriodicSignal`] is `constant + Σ amplitude·w(frequency·t + phase)`
//! with `w` either sine or cosine. Every element of the hull of such a sum is
//! again a sum with the same amplitudes and frequencies and shifted phases, so
//! translation and integration are exact.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::SignalError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    #[serde(alias = "sin")]
    Sine,
    #[serde(alias = "cos")]
    Cosine,
}

/// One oscillatory mode `amplitude·w(frequency·t + phase)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub kind: Waveform,
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Term {
    pub fn sine(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Term { kind: Waveform::Sine, amplitude, frequency, phase }
    }

    pub fn cosine(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Term { kind: Waveform::Cosine, amplitude, frequency, phase }
    }

    #[inline]
    fn eval(&self, t: f64) -> f64 {
        let arg = self.frequency * t + self.phase;
        match self.kind {
            Waveform::Sine => self.amplitude * arg.sin(),
            Waveform::Cosine => self.amplitude * arg.cos(),
        }
    }

    #[inline]
    fn primitive(&self, t: f64) -> f64 {
        let arg = self.frequency * t + self.phase;
        let scale = self.amplitude / self.frequency;
        match self.kind {
            Waveform::Sine => -scale * arg.cos(),
            Waveform::Cosine => scale * arg.sin(),
        }
    }

    fn check(&self) -> Result<(), SignalError> {
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(SignalError::BadFrequency(self.frequency));
        }
        if !self.amplitude.is_finite() || !self.phase.is_finite() {
            return Err(SignalError::NonFinite);
        }
        Ok(())
    }
}

/// A finite trigonometric sum. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalRepr")]
pub struct QuasiPeriodicSignal {
    constant: f64,
    terms: Vec<Term>,
}

/// Accepted file forms: a bare number, or `{ constant, terms }`.
#[derive(Deserialize)]
#[serde(untagged)]
enum SignalRepr {
    Scalar(f64),
    Full(FullRepr),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FullRepr {
    #[serde(default)]
    constant: f64,
    #[serde(default)]
    terms: Vec<Term>,
}

impl TryFrom<SignalRepr> for QuasiPeriodicSignal {
    type Error = SignalError;

    fn try_from(repr: SignalRepr) -> Result<Self, Self::Error> {
        match repr {
            SignalRepr::Scalar(c) => QuasiPeriodicSignal::new(c, Vec::new()),
            SignalRepr::Full(f) => QuasiPeriodicSignal::new(f.constant, f.terms),
        }
    }
}

impl Default for QuasiPeriodicSignal {
    fn default() -> Self {
        QuasiPeriodicSignal::zero()
    }
}

impl QuasiPeriodicSignal {
    pub fn new(constant: f64, terms: Vec<Term>) -> Result<Self, SignalError> {
        if !constant.is_finite() {
            return Err(SignalError::NonFinite);
        }
        for term in &terms {
            term.check()?;
        }
        Ok(QuasiPeriodicSignal { constant, terms })
    }

    pub fn zero() -> Self {
        QuasiPeriodicSignal { constant: 0.0, terms: Vec::new() }
    }

    /// Panics if `value` is not finite.
    pub fn constant(value: f64) -> Self {
        QuasiPeriodicSignal::new(value, Vec::new()).expect("finite constant")
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Mean value over ℝ; the oscillatory modes all average out.
    pub fn mean(&self) -> f64 {
        self.constant
    }

    pub fn amplitude_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.abs()).sum()
    }

    /// Smallest frequency among modes with nonzero amplitude.
    pub fn min_frequency(&self) -> Option<f64> {
        self.terms
            .iter()
            .filter(|t| t.amplitude != 0.0)
            .map(|t| t.frequency)
            .reduce(f64::min)
    }

    pub fn max_frequency(&self) -> Option<f64> {
        self.terms
            .iter()
            .filter(|t| t.amplitude != 0.0)
            .map(|t| t.frequency)
            .reduce(f64::max)
    }

    /// Lipschitz constant `Σ |amplitude·frequency|`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.terms.iter().map(|t| (t.amplitude * t.frequency).abs()).sum()
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.constant + self.terms.iter().map(|term| term.eval(t)).sum::<f64>()
    }

    /// Exact `∫_{t0}^{t1} s(u) du`.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        self.constant * (t1 - t0)
            + self
                .terms
                .iter()
                .map(|term| term.primitive(t1) - term.primitive(t0))
                .sum::<f64>()
    }

    /// Supremum over the hull closure: `constant + Σ|amplitude|`.
    pub fn hull_sup(&self) -> f64 {
        self.constant + self.amplitude_sum()
    }

    /// Infimum over the hull closure: `constant − Σ|amplitude|`.
    pub fn hull_inf(&self) -> f64 {
        self.constant - self.amplitude_sum()
    }

    pub fn is_identically_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.iter().all(|t| t.amplitude == 0.0)
    }

    /// Hull element `t ↦ s(t + shift)`.
    pub fn translate(&self, shift: f64) -> QuasiPeriodicSignal {
        QuasiPeriodicSignal {
            constant: self.constant,
            terms: self
                .terms
                .iter()
                .map(|t| Term { phase: t.phase + t.frequency * shift, ..*t })
                .collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> QuasiPeriodicSignal {
        QuasiPeriodicSignal {
            constant: self.constant * factor,
            terms: self
                .terms
                .iter()
                .map(|t| Term { amplitude: t.amplitude * factor, ..*t })
                .collect(),
        }
    }

    /// Pointwise sum; modes are concatenated, not merged.
    pub fn add(&self, other: &QuasiPeriodicSignal) -> QuasiPeriodicSignal {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        QuasiPeriodicSignal { constant: self.constant + other.constant, terms }
    }

    pub fn sub(&self, other: &QuasiPeriodicSignal) -> QuasiPeriodicSignal {
        self.add(&other.scale(-1.0))
    }
}

/// Truncated zero-mean signal `f_N(t) = Σ_{n=1..N} n⁻²·sin(2⁻ⁿ t)`.
///
/// Its antiderivative from 0 is `Σ 2ⁿ/n²·(1 − cos(2⁻ⁿ t)) ≥ 0`, bounded by
/// [`conley_miller_integral_bound`], which grows without bound in `N`.
pub fn conley_miller(n_terms: usize) -> Result<QuasiPeriodicSignal, SignalError> {
    if n_terms == 0 {
        return Err(SignalError::EmptyTruncation);
    }
    let terms = (1..=n_terms)
        .map(|n| {
            let n_f = n as f64;
            Term::sine(1.0 / (n_f * n_f), 0.5f64.powi(n as i32), 0.0)
        })
        .collect();
    QuasiPeriodicSignal::new(0.0, terms)
}

/// `Σ_{n≤N} 2ⁿ⁺¹/n²`, the supremum of `∫_0^t f_N` over the hull of `f_N`.
pub fn conley_miller_integral_bound(n_terms: usize) -> f64 {
    (1..=n_terms)
        .map(|n| 2f64.powi(n as i32 + 1) / (n as f64).powi(2))
        .sum()
}

/// Common period `2π·2^N` of the truncated signal.
pub fn conley_miller_period(n_terms: usize) -> f64 {
    2.0 * PI * 2f64.powi(n_terms as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let n = panels * 2;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + k as f64 * h);
        }
        acc * h / 3.0
    }

    fn sample() -> QuasiPeriodicSignal {
        QuasiPeriodicSignal::new(1.0, vec![Term::sine(0.5, 1.0, 0.0)]).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(QuasiPeriodicSignal::zero().eval(5.0), 0.0);
        assert_eq!(sample().eval(0.0), 1.0);
        assert!((sample().eval(PI / 2.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn integral_examples() {
        let c = QuasiPeriodicSignal::constant(0.7);
        assert!((c.integral(0.0, 3.0) - 2.1).abs() < 1e-15);
        let s = QuasiPeriodicSignal::new(0.0, vec![Term::sine(1.0, 1.0, 0.0)]).unwrap();
        assert!(s.integral(0.0, 2.0 * PI).abs() < 1e-14);

        let w = 0.3;
        let cosw = QuasiPeriodicSignal::new(0.0, vec![Term::cosine(1.0, w, 0.0)]).unwrap();
        let quad = simpson(|t| (w * t).cos(), 0.0, 10.0, 2000);
        assert!((quad - (w * 10.0).sin() / w).abs() < 1e-10);
        assert!((cosw.integral(0.0, 10.0) - quad).abs() < 1e-8);
    }

    #[test]
    fn hull_sup_matches_grid_search() {
        let grid_max = |s: &QuasiPeriodicSignal| {
            (0..=1_000_000).map(|k| s.eval(k as f64 * 0.01)).fold(f64::MIN, f64::max)
        };
        assert_eq!(QuasiPeriodicSignal::zero().hull_sup(), 0.0);

        let s1 = QuasiPeriodicSignal::new(0.5, vec![Term::sine(0.25, 1.0, 0.0)]).unwrap();
        assert_eq!(s1.hull_sup(), 0.75);
        let g1 = grid_max(&s1);
        assert!(g1 <= 0.75 && 0.75 - g1 < 1e-4);

        let s2 = QuasiPeriodicSignal::new(
            1.0,
            vec![Term::sine(0.3, 1.0, 0.0), Term::cosine(0.2, 2f64.sqrt(), 0.0)],
        )
        .unwrap();
        assert!((s2.hull_sup() - 1.5).abs() < 1e-15);
        let g2 = grid_max(&s2);
        assert!(g2 <= 1.5 && 1.5 - g2 < 1e-3, "grid max {g2}");
    }

    #[test]
    fn identically_zero() {
        assert!(QuasiPeriodicSignal::zero().is_identically_zero());
        assert!(!QuasiPeriodicSignal::constant(1e-300).is_identically_zero());
        let z = QuasiPeriodicSignal::new(0.0, vec![Term::sine(0.0, 1.0, 0.0)]).unwrap();
        assert!(z.is_identically_zero());
    }

    #[test]
    fn rejects_bad_frequencies() {
        assert!(QuasiPeriodicSignal::new(0.0, vec![Term::sine(1.0, 0.0, 0.0)]).is_err());
        assert!(QuasiPeriodicSignal::new(0.0, vec![Term::sine(1.0, -1.0, 0.0)]).is_err());
        assert!(QuasiPeriodicSignal::new(0.0, vec![Term::sine(1.0, f64::INFINITY, 0.0)]).is_err());
        assert!(QuasiPeriodicSignal::new(f64::NAN, vec![]).is_err());
    }

    #[test]
    fn translate_examples() {
        let s = sample();
        assert_eq!(s.translate(0.0), s);
        let sin = QuasiPeriodicSignal::new(0.0, vec![Term::sine(1.0, 1.0, 0.0)]).unwrap();
        let shifted = sin.translate(PI);
        for k in 0..100 {
            let t = k as f64 * 0.13;
            assert!((shifted.eval(t) + t.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn conley_miller_construction() {
        assert!(conley_miller(0).is_err());
        let f1 = conley_miller(1).unwrap();
        assert_eq!(f1.terms(), &[Term::sine(1.0, 0.5, 0.0)]);
        assert_eq!(conley_miller_integral_bound(1), 4.0);
        // ∫_0^t f_1 = 2(1 − cos(t/2)) peaks at t = 2π
        assert!((f1.integral(0.0, 2.0 * PI) - 4.0).abs() < 1e-14);

        let f2 = conley_miller(2).unwrap();
        assert_eq!(f2.terms()[1], Term::sine(0.25, 0.25, 0.0));
        assert_eq!(conley_miller_integral_bound(2), 6.0);
        // The two modes are commensurable, so over ℝ the peak is 5 + 1/16,
        // reached where cos(t/4) = −1/8; the hull bound 6 is not attained.
        let grid_max = (0..=200_000)
            .map(|k| f2.integral(0.0, k as f64 * 8.0 * PI / 200_000.0))
            .fold(f64::MIN, f64::max);
        assert!((grid_max - 5.0625).abs() < 1e-6, "{grid_max}");
        assert!(grid_max <= 6.0);

        let f6 = conley_miller(6).unwrap();
        assert_eq!(f6.mean(), 0.0);
        let t = 1e5;
        assert!((f6.integral(0.0, t) / t).abs() < 0.01);
        let bounds: Vec<f64> = (1..=10).map(conley_miller_integral_bound).collect();
        assert!(bounds.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn conley_miller_antiderivative_is_nonnegative() {
        let f = conley_miller(6).unwrap();
        for k in 0..20_000 {
            assert!(f.integral(0.0, k as f64 * 0.5) >= 0.0);
        }
        let p = conley_miller_period(6);
        assert!(f.integral(0.0, p).abs() < 1e-12);
    }

    fn arb_signal() -> impl Strategy<Value = QuasiPeriodicSignal> {
        let term = (
            -2.0f64..2.0,
            0.05f64..5.0,
            -PI..PI,
            prop::bool::ANY,
        )
            .prop_map(|(a, w, p, sine)| {
                if sine { Term::sine(a, w, p) } else { Term::cosine(a, w, p) }
            });
        (-3.0f64..3.0, prop::collection::vec(term, 0..6))
            .prop_map(|(c, terms)| QuasiPeriodicSignal::new(c, terms).unwrap())
    }

    proptest! {
        #[test]
        fn translate_is_pointwise_shift(s in arb_signal(), sigma in -50.0f64..50.0, t in -100.0f64..100.0) {
            prop_assert!((s.translate(sigma).eval(t) - s.eval(t + sigma)).abs() < 1e-11);
        }

        #[test]
        fn translate_is_a_flow(s in arb_signal(), a in -20.0f64..20.0, b in -20.0f64..20.0, t in -10.0f64..10.0) {
            let lhs = s.translate(a).translate(b).eval(t);
            let rhs = s.translate(a + b).eval(t);
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + s.amplitude_sum() * 10.0));
        }

        #[test]
        fn integral_is_additive(s in arb_signal(), a in -50.0f64..50.0, b in -50.0f64..50.0, c in -50.0f64..50.0) {
            let lhs = s.integral(a, b) + s.integral(b, c);
            let scale = 1.0 + s.constant_term().abs() * 150.0 + s.amplitude_sum() * 40.0;
            prop_assert!((lhs - s.integral(a, c)).abs() < 1e-12 * scale);
        }

        #[test]
        fn time_average_approaches_constant(s in arb_signal(), t_end in 1.0f64..1e4) {
            if let Some(wmin) = s.min_frequency() {
                let bound = s.amplitude_sum() / wmin * 2.0 / t_end;
                let avg = s.integral(0.0, t_end) / t_end;
                prop_assert!((avg - s.constant_term()).abs() <= bound + 1e-12);
            }
        }

    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn hull_sup_dominates(s in arb_signal()) {
            let sup = s.hull_sup();
            for k in 0..100_000 {
                let t = k as f64 * 0.0731 - 3000.0;
                prop_assert!(s.eval(t) <= sup + 1e-12);
            }
        }
    }
}
