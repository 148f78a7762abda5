//! Integer vectors n with n·q = 0 over the harmonics of E, E² and E³.
//!
//! Such n label the products of harmonics that survive the t0 average. For
//! coprime (q1, q2) each one collapses the phase n·δ to m·ξ12 with
//! ξ12 = q1δ2 − q2δ1.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{gcd, CATALOG_INDICES};

/// Harmonic multipliers qⱼ = aⱼq1 + bⱼq2 with phases δⱼ = aⱼδ1 + bⱼδ2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HarmonicSet {
    pub q: Vec<i64>,
    /// (aⱼ, bⱼ) per harmonic; `None` for a bare multiplier list.
    pub phase_coefficients: Option<Vec<(i64, i64)>>,
    pub q1: i64,
    pub q2: i64,
}

impl HarmonicSet {
    /// The first `s` catalog rows: s = 2 (E), 6 (E and E²) or 14 (up to E³).
    pub fn catalog(q1: u32, q2: u32, s: usize) -> Result<Self> {
        if ![2, 6, 14].contains(&s) {
            return Err(Error::invalid(format!("harmonic set size must be 2, 6 or 14, got {s}")));
        }
        if q1 == 0 || q2 == 0 {
            return Err(Error::invalid("frequency multipliers must be >= 1"));
        }
        let (q1, q2) = (q1 as i64, q2 as i64);
        let coeffs: Vec<(i64, i64)> = CATALOG_INDICES[..s].to_vec();
        Ok(HarmonicSet {
            q: coeffs.iter().map(|&(a, b)| a * q1 + b * q2).collect(),
            phase_coefficients: Some(coeffs),
            q1,
            q2,
        })
    }

    /// Multipliers without phase bookkeeping; solutions carry no m.
    pub fn bare(q: Vec<i64>) -> Self {
        HarmonicSet {
            q,
            phase_coefficients: None,
            q1: 0,
            q2: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiophantineSolution {
    pub n: Vec<i64>,
    /// n·δ = m ξ12, when the set carries phases and gcd(q1, q2) = 1.
    pub m: Option<i64>,
    /// n·δ = A δ1 + B δ2.
    pub phase_combination: Option<(i64, i64)>,
}

const MAX_BOX: f64 = 1e9;

/// All nonzero n with |nⱼ| ≤ bound, n·q = 0 and leftmost nonzero entry positive.
pub fn diophantine_solutions(set: &HarmonicSet, bound: u32) -> Result<Vec<DiophantineSolution>> {
    if bound == 0 {
        return Err(Error::invalid("component bound must be >= 1"));
    }
    let s = set.q.len();
    let size = (2.0 * bound as f64 + 1.0).powi(s as i32);
    if size > MAX_BOX {
        return Err(Error::invalid(format!(
            "search box (2·{bound}+1)^{s} = {size:.2e} exceeds {MAX_BOX:e}"
        )));
    }
    let b = bound as i64;
    // reach[j] = largest |Σ_{i≥j} nᵢqᵢ| attainable.
    let mut reach = vec![0i64; s + 1];
    for j in (0..s).rev() {
        reach[j] = reach[j + 1] + b * set.q[j].abs();
    }
    let mut out = Vec::new();
    let mut n = vec![0i64; s];
    enumerate(set, &reach, b, 0, 0, false, &mut n, &mut out);
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    set: &HarmonicSet,
    reach: &[i64],
    b: i64,
    depth: usize,
    partial: i64,
    started: bool,
    n: &mut [i64],
    out: &mut Vec<DiophantineSolution>,
) {
    if partial.abs() > reach[depth] {
        return;
    }
    if depth == n.len() {
        if started && partial == 0 {
            out.push(solution(set, n));
        }
        return;
    }
    // before the first nonzero entry only positive values are allowed
    let lo = if started { -b } else { 0 };
    for v in lo..=b {
        n[depth] = v;
        enumerate(set, reach, b, depth + 1, partial + v * set.q[depth], started || v != 0, n, out);
    }
    n[depth] = 0;
}

fn solution(set: &HarmonicSet, n: &[i64]) -> DiophantineSolution {
    let phase_combination = set.phase_coefficients.as_ref().map(|c| {
        n.iter()
            .zip(c)
            .fold((0, 0), |(a, b), (&ni, &(ai, bi))| (a + ni * ai, b + ni * bi))
    });
    let m = phase_combination.and_then(|(a, b)| {
        if gcd(set.q1.unsigned_abs(), set.q2.unsigned_abs()) != 1 || b % set.q1 != 0 {
            return None;
        }
        let m = b / set.q1;
        (a == -m * set.q2).then_some(m)
    });
    DiophantineSolution {
        n: n.to_vec(),
        m,
        phase_combination,
    }
}
