//! The biharmonic field E(t) = Σᵢ εᵢ cos[qᵢ ω (t + t0) + δᵢ] and the
//! harmonic content of its first three powers.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-color field. All quantities in atomic units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub eps1: f64,
    pub eps2: f64,
    pub q1: u32,
    pub q2: u32,
    /// Base angular frequency ω.
    pub omega: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub t0: f64,
}

impl FieldSpec {
    /// Field with laser period `period` = 2π/ω (a.u.), δ1 = t0 = 0.
    pub fn two_color(eps1: f64, eps2: f64, q1: u32, q2: u32, period: f64, delta2: f64) -> Self {
        FieldSpec {
            eps1,
            eps2,
            q1,
            q2,
            omega: TAU / period,
            delta1: 0.0,
            delta2,
            t0: 0.0,
        }
    }

    pub fn zero(period: f64) -> Self {
        Self::two_color(0.0, 0.0, 1, 2, period, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q1 == 0 || self.q2 == 0 {
            return Err(Error::invalid("frequency multipliers must be >= 1"));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::invalid(format!("omega must be positive, got {}", self.omega)));
        }
        let all = [self.eps1, self.eps2, self.delta1, self.delta2, self.t0];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field parameters must be finite"));
        }
        Ok(())
    }

    /// Laser period 2π/ω; the t0 average runs over one such period.
    pub fn laser_period(&self) -> f64 {
        TAU / self.omega
    }

    /// Smallest period of E(t): 2π/(gcd(q1, q2) ω).
    pub fn field_period(&self) -> f64 {
        self.laser_period() / gcd(self.q1 as u64, self.q2 as u64) as f64
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn is_one_color(&self) -> bool {
        self.eps1 == 0.0 || self.eps2 == 0.0
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        let tau = t + self.t0;
        self.eps1 * (self.q1 as f64 * self.omega * tau + self.delta1).cos()
            + self.eps2 * (self.q2 as f64 * self.omega * tau + self.delta2).cos()
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// ε1 = (1 − γ) E0, ε2 = γ E0.
pub fn gamma_split(e0: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    if !(e0 >= 0.0) {
        return Err(Error::invalid(format!("E0 must be non-negative, got {e0}")));
    }
    Ok(((1.0 - gamma) * e0, gamma * e0))
}

/// Wrap a phase into [0, 2π).
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// One row of the harmonic catalog of Eⁿ(t): a term
/// `amplitude · cos[(a q1 + b q2) ω (t+t0) + a δ1 + b δ2]`.
///
/// Rows carry the raw signed multiplier and amplitude, exactly as the
/// product-to-sum expansion produces them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogRow {
    /// Row number 1..=14 in the standard ordering.
    pub row: usize,
    /// Coefficients of (q1, q2) in the multiplier and of (δ1, δ2) in the phase.
    pub a: i64,
    pub b: i64,
    pub q: i64,
    pub amplitude: f64,
    pub phase: f64,
}

/// (a, b) of each catalog row, in order.
pub const CATALOG_INDICES: [(i64, i64); 14] = [
    (1, 0),
    (0, 1),
    (2, 0),
    (0, 2),
    (1, 1),
    (-1, 1),
    (1, 0),
    (0, 1),
    (3, 0),
    (0, 3),
    (2, 1),
    (-2, 1),
    (1, 2),
    (-1, 2),
];

/// Symbolic (multiplier, amplitude, phase) of each catalog row, in order.
pub const CATALOG_EXPRESSIONS: [(&str, &str, &str); 14] = [
    ("q1", "e1", "d1"),
    ("q2", "e2", "d2"),
    ("2q1", "e1^2/2", "2d1"),
    ("2q2", "e2^2/2", "2d2"),
    ("q1+q2", "e1 e2", "d1+d2"),
    ("q2-q1", "e1 e2", "d2-d1"),
    ("q1", "3/2 e1 e2^2 + 3/4 e1^3", "d1"),
    ("q2", "3/2 e1^2 e2 + 3/4 e2^3", "d2"),
    ("3q1", "e1^3/4", "3d1"),
    ("3q2", "e2^3/4", "3d2"),
    ("2q1+q2", "3/4 e1^2 e2", "2d1+d2"),
    ("q2-2q1", "3/4 e1^2 e2", "d2-2d1"),
    ("q1+2q2", "3/4 e1 e2^2", "d1+2d2"),
    ("2q2-q1", "3/4 e1 e2^2", "2d2-d1"),
];

fn catalog_amplitude(row: usize, e1: f64, e2: f64) -> f64 {
    match row {
        1 => e1,
        2 => e2,
        3 => e1 * e1 / 2.0,
        4 => e2 * e2 / 2.0,
        5 | 6 => e1 * e2,
        7 => 1.5 * e1 * e2 * e2 + 0.75 * e1 * e1 * e1,
        8 => 1.5 * e1 * e1 * e2 + 0.75 * e2 * e2 * e2,
        9 => e1 * e1 * e1 / 4.0,
        10 => e2 * e2 * e2 / 4.0,
        11 | 12 => 0.75 * e1 * e1 * e2,
        13 | 14 => 0.75 * e1 * e2 * e2,
        _ => unreachable!("catalog has 14 rows"),
    }
}

fn catalog_rows_for_power(power: u32) -> Result<std::ops::RangeInclusive<usize>> {
    match power {
        1 => Ok(1..=2),
        2 => Ok(3..=6),
        3 => Ok(7..=14),
        p => Err(Error::UnsupportedPower(p)),
    }
}

/// Raw catalog rows for E^power (without the constant part of E²).
pub fn harmonic_catalog(spec: &FieldSpec, power: u32) -> Result<Vec<CatalogRow>> {
    let rows = catalog_rows_for_power(power)?;
    Ok(rows
        .map(|row| {
            let (a, b) = CATALOG_INDICES[row - 1];
            CatalogRow {
                row,
                a,
                b,
                q: a * spec.q1 as i64 + b * spec.q2 as i64,
                amplitude: catalog_amplitude(row, spec.eps1, spec.eps2),
                phase: a as f64 * spec.delta1 + b as f64 * spec.delta2,
            }
        })
        .collect())
}

/// A cosine harmonic `amplitude · cos[q ω (t+t0) + phase]`; `q == 0` is the
/// constant term, whose sign is carried by `phase ∈ {0, π}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicTerm {
    pub q: u32,
    pub amplitude: f64,
    pub phase: f64,
}

impl HarmonicTerm {
    pub fn is_dc(&self) -> bool {
        self.q == 0
    }

    pub fn evaluate(&self, omega: f64, tau: f64) -> f64 {
        self.amplitude * (self.q as f64 * omega * tau + self.phase).cos()
    }

    fn dc(value: f64) -> Self {
        HarmonicTerm {
            q: 0,
            amplitude: value.abs(),
            phase: if value < 0.0 { PI } else { 0.0 },
        }
    }
}

/// Exact expansion of E(t)^power into cosine harmonics of ω(t+t0).
///
/// Oscillatory terms come first in catalog order, folded to q > 0,
/// amplitude ≥ 0 and phase ∈ [0, 2π). Terms sharing both multiplier and
/// phase are summed; rows with zero multiplier go into a single trailing
/// constant term.
pub fn harmonic_decomposition(spec: &FieldSpec, power: u32) -> Result<Vec<HarmonicTerm>> {
    let rows = harmonic_catalog(spec, power)?;
    let mut terms: Vec<HarmonicTerm> = Vec::with_capacity(rows.len() + 1);
    let mut dc = if power == 2 {
        Some((spec.eps1 * spec.eps1 + spec.eps2 * spec.eps2) / 2.0)
    } else {
        None
    };

    for r in rows {
        let (mut q, mut amp, mut phase) = (r.q, r.amplitude, r.phase);
        if q == 0 {
            *dc.get_or_insert(0.0) += amp * phase.cos();
            continue;
        }
        if q < 0 {
            q = -q;
            phase = -phase;
        }
        if amp < 0.0 {
            amp = -amp;
            phase += PI;
        }
        let term = HarmonicTerm {
            q: q as u32,
            amplitude: amp,
            phase: wrap_phase(phase),
        };
        match terms
            .iter_mut()
            .find(|t| t.q == term.q && t.phase == term.phase)
        {
            Some(existing) => existing.amplitude += term.amplitude,
            None => terms.push(term),
        }
    }
    if let Some(v) = dc {
        terms.push(HarmonicTerm::dc(v));
    }
    Ok(terms)
}

/// Harmonic content of E, E², E³ for exact averages over finite intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMoments {
    omega: f64,
    t0: f64,
    powers: [Vec<HarmonicTerm>; 3],
}

impl FieldMoments {
    pub fn new(spec: &FieldSpec) -> Self {
        let expand = |p| harmonic_decomposition(spec, p).expect("powers 1..=3 are supported");
        FieldMoments {
            omega: spec.omega,
            t0: spec.t0,
            powers: [expand(1), expand(2), expand(3)],
        }
    }

    /// (1/h)∫ Eⁿ dt over [t, t + h] for n = 1, 2, 3.
    pub fn interval_average(&self, t: f64, h: f64) -> [f64; 3] {
        let mid = t + 0.5 * h + self.t0;
        self.powers.each_ref().map(|terms| {
            terms
                .iter()
                .map(|term| term.evaluate(self.omega, mid) * sinc(0.5 * term.q as f64 * self.omega * h))
                .sum()
        })
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Cycle-averaged field powers entering the time-averaged Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAveragedCoefficients {
    /// ⟨E²⟩ over a cycle.
    pub f1: f64,
    /// ⟨E³⟩ over a cycle.
    pub f2: f64,
}

pub fn time_averaged_coefficients(spec: &FieldSpec) -> TimeAveragedCoefficients {
    let (e1, e2) = (spec.eps1, spec.eps2);
    let (d1, d2) = (spec.delta1, spec.delta2);
    let mut f1 = (e1 * e1 + e2 * e2) / 2.0;
    if spec.q1 == spec.q2 {
        f1 += e1 * e2 * (d1 - d2).cos();
    }
    let mut f2 = 0.0;
    if 2 * spec.q1 == spec.q2 {
        f2 += 0.75 * e1 * e1 * e2 * (2.0 * d1 - d2).cos();
    }
    if spec.q1 == 2 * spec.q2 {
        f2 += 0.75 * e1 * e2 * e2 * (d1 - 2.0 * d2).cos();
    }
    TimeAveragedCoefficients { f1, f2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn spec(e1: f64, e2: f64, q1: u32, q2: u32, d1: f64, d2: f64, t0: f64) -> FieldSpec {
        FieldSpec {
            eps1: e1,
            eps2: e2,
            q1,
            q2,
            omega: 1.0,
            delta1: d1,
            delta2: d2,
            t0,
        }
    }

    fn reconstruct(terms: &[HarmonicTerm], s: &FieldSpec, t: f64) -> f64 {
        terms.iter().map(|h| h.evaluate(s.omega, t + s.t0)).sum()
    }

    #[test]
    fn evaluate_simple() {
        let s = spec(1.0, 0.5, 1, 2, 0.0, FRAC_PI_2, 0.0);
        assert!((s.evaluate(0.0) - 1.0).abs() < 1e-15);
        let z = spec(0.0, 0.0, 1, 2, 0.3, 0.2, 1.0);
        assert_eq!(z.evaluate(12.3), 0.0);
    }

    #[test]
    fn gamma_split_examples() {
        assert_eq!(gamma_split(2.0, 0.5).unwrap(), (1.0, 1.0));
        assert_eq!(gamma_split(3.0, 0.0).unwrap(), (3.0, 0.0));
        let (a, b) = gamma_split(1.0, 0.25).unwrap();
        assert_eq!((a, b), (0.75, 0.25));
        assert!(gamma_split(1.0, 1.5).is_err());
        assert!(gamma_split(1.0, -0.1).is_err());
    }

    #[test]
    fn power_two_generic() {
        let s = spec(0.7, 0.4, 2, 5, 0.3, 1.1, 0.0);
        let t = harmonic_decomposition(&s, 2).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!((t[0].q, t[1].q, t[2].q, t[3].q), (4, 10, 7, 3));
        assert!((t[0].amplitude - 0.49 / 2.0).abs() < 1e-15);
        assert!((t[2].amplitude - 0.28).abs() < 1e-15);
        assert!((t[3].phase - (1.1 - 0.3)).abs() < 1e-15);
        assert!(t[4].is_dc());
        assert!((t[4].amplitude - (0.49 + 0.16) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn power_three_row_seven() {
        let s = spec(0.7, 0.4, 2, 5, 0.3, 1.1, 0.0);
        let t = harmonic_decomposition(&s, 3).unwrap();
        assert_eq!(t.len(), 8);
        assert_eq!(t[0].q, 2);
        let expect = 1.5 * 0.7 * 0.16 + 0.75 * 0.343;
        assert!((t[0].amplitude - expect).abs() < 1e-15);
        assert!((t[0].phase - 0.3).abs() < 1e-15);
        assert!(t.iter().all(|h| !h.is_dc()));
    }

    #[test]
    fn power_three_q12_has_dc() {
        let (e1, e2, d1, d2) = (0.8, 0.3, 0.2, 1.3);
        let s = spec(e1, e2, 1, 2, d1, d2, 0.0);
        let t = harmonic_decomposition(&s, 3).unwrap();
        let dc = t.last().unwrap();
        assert!(dc.is_dc());
        let value = dc.amplitude * dc.phase.cos();
        assert!((value - 0.75 * e1 * e1 * e2 * (d2 - 2.0 * d1).cos()).abs() < 1e-15);
    }

    #[test]
    fn collisions_merge_only_on_equal_phase() {
        // q = (1,2): rows 9 (3q1, 3δ1) and 14 (2q2 - q1, 2δ2 - δ1) share q = 3
        let merged = harmonic_decomposition(&spec(0.8, 0.3, 1, 2, 0.0, 0.0, 0.0), 3).unwrap();
        let kept = harmonic_decomposition(&spec(0.8, 0.3, 1, 2, 0.0, 0.4, 0.0), 3).unwrap();
        assert_eq!(merged.iter().filter(|h| h.q == 3).count(), 1);
        assert_eq!(kept.iter().filter(|h| h.q == 3).count(), 2);
    }

    #[test]
    fn unsupported_power() {
        let s = spec(1.0, 1.0, 1, 2, 0.0, 0.0, 0.0);
        assert!(matches!(harmonic_decomposition(&s, 4), Err(Error::UnsupportedPower(4))));
        assert!(matches!(harmonic_decomposition(&s, 0), Err(Error::UnsupportedPower(0))));
    }

    #[test]
    fn time_averaged_examples() {
        let s = spec(0.8, 0.3, 1, 2, 0.2, 1.3, 0.0);
        let f = time_averaged_coefficients(&s);
        assert!((f.f1 - (0.64 + 0.09) / 2.0).abs() < 1e-15);
        assert!((f.f2 - 0.75 * 0.64 * 0.3 * (0.4f64 - 1.3).cos()).abs() < 1e-15);
        let f13 = time_averaged_coefficients(&spec(0.8, 0.3, 1, 3, 0.2, 1.3, 0.0));
        assert_eq!(f13.f2, 0.0);
        let one = time_averaged_coefficients(&spec(0.8, 0.0, 1, 2, 0.2, 1.3, 0.0));
        assert!((one.f1 - 0.32).abs() < 1e-15);
        assert_eq!(one.f2, 0.0);
    }

    #[test]
    fn interval_average_matches_quadrature() {
        let s = spec(0.8, -0.3, 1, 2, 0.2, 1.3, 0.7);
        let m = FieldMoments::new(&s);
        let (x, w) = (
            [-0.906179845938664, -0.5384693101056831, 0.0, 0.5384693101056831, 0.906179845938664],
            [0.23692688505618908, 0.47862867049936647, 0.5688888888888889, 0.47862867049936647, 0.23692688505618908],
        );
        for (t, h) in [(0.0, 0.5), (3.3, 2.0), (-1.0, 1e-6), (2.0, -0.4)] {
            // composite 5-point Gauss over 50 panels
            let mut want = [0.0; 3];
            let panels = 50;
            for p in 0..panels {
                let a = t + h * p as f64 / panels as f64;
                let half = 0.5 * h / panels as f64;
                for (xi, wi) in x.iter().zip(&w) {
                    let e = s.evaluate(a + half * (1.0 + xi));
                    for n in 0..3 {
                        want[n] += wi * e.powi(n as i32 + 1) * half / h;
                    }
                }
            }
            let got = m.interval_average(t, h);
            for n in 0..3 {
                assert!((got[n] - want[n]).abs() < 1e-13, "t={t} h={h} n={n}: {} vs {}", got[n], want[n]);
            }
        }
    }

    fn arb_spec() -> impl Strategy<Value = FieldSpec> {
        (
            -2.0..2.0f64,
            -2.0..2.0f64,
            1u32..6,
            1u32..6,
            -7.0..7.0f64,
            -7.0..7.0f64,
            -5.0..5.0f64,
        )
            .prop_map(|(e1, e2, q1, q2, d1, d2, t0)| spec(e1, e2, q1, q2, d1, d2, t0))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn reconstruction_matches_powers(s in arb_spec(), t in -20.0..20.0f64) {
            let e = s.evaluate(t);
            for k in 1..=3u32 {
                let terms = harmonic_decomposition(&s, k).unwrap();
                let r = reconstruct(&terms, &s, t);
                let exact = e.powi(k as i32);
                let scale = (s.eps1.abs() + s.eps2.abs()).powi(k as i32).max(1e-300);
                prop_assert!((r - exact).abs() <= 1e-12 * scale, "k={} r={} exact={}", k, r, exact);
                prop_assert!(terms.iter().all(|h| h.amplitude >= 0.0));
            }
        }

        #[test]
        fn t0_shift_covariance(s in arb_spec(), tau in -3.0..3.0f64) {
            let shifted = FieldSpec {
                t0: s.t0 + tau,
                delta1: s.delta1 - s.q1 as f64 * s.omega * tau,
                delta2: s.delta2 - s.q2 as f64 * s.omega * tau,
                ..s
            };
            for k in 1..=3u32 {
                let a = harmonic_decomposition(&s, k).unwrap();
                let b = harmonic_decomposition(&shifted, k).unwrap();
                // same field, so the expansions in ω(t + t0) differ only by the
                // explicit phase shift q ω τ
                for t in [0.0, 0.7, 2.1] {
                    let ra = reconstruct(&a, &s, t);
                    let rb = reconstruct(&b, &shifted, t);
                    prop_assert!((ra - rb).abs() < 1e-11);
                }
                prop_assert_eq!(a.len(), b.len());
                for (x, y) in a.iter().zip(&b) {
                    prop_assert_eq!(x.q, y.q);
                    prop_assert!((x.amplitude - y.amplitude).abs() < 1e-12);
                    if !x.is_dc() && x.amplitude > 1e-9 {
                        let shift = wrap_phase(x.phase - y.phase - x.q as f64 * s.omega * tau);
                        prop_assert!(shift.min(TAU - shift) < 1e-9, "phase shift {}", shift);
                    }
                }
            }
        }

        #[test]
        fn averaged_coefficients_equal_dc_terms(s in arb_spec()) {
            let f = time_averaged_coefficients(&s);
            let dc = |k| {
                harmonic_decomposition(&s, k)
                    .unwrap()
                    .iter()
                    .filter(|h| h.is_dc())
                    .map(|h| h.amplitude * h.phase.cos())
                    .sum::<f64>()
            };
            prop_assert!((f.f1 - dc(2)).abs() < 1e-12 * (1.0 + f.f1.abs()));
            prop_assert!((f.f2 - dc(3)).abs() < 1e-12 * (1.0 + f.f2.abs()));
            if s.q1 != s.q2 {
                prop_assert!(f.f1 >= 0.0);
            }
        }
    }
}
