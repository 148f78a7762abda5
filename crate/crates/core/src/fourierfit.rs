//! Amplitude/phase series Σⱼ Cⱼ cos(j ξ12 + φⱼ) in ξ12 = q1δ2 − q2δ1,
//! fitted by discrete Fourier analysis over a uniform δ2 grid.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::wrap_phase;

/// Which j survive for a given k and (q1, q2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    Odd,
    Even,
    All,
    /// The averaged observable is identically zero.
    Vanishing,
}

impl Parity {
    /// q1 + q2 odd: odd k keeps odd j, even k keeps even j.
    /// q1 + q2 even: odd k vanishes, even k keeps every j.
    pub fn for_observable(k: u32, q1: u32, q2: u32) -> Self {
        match ((q1 + q2) % 2 == 1, k % 2 == 1) {
            (true, true) => Parity::Odd,
            (true, false) => Parity::Even,
            (false, true) => Parity::Vanishing,
            (false, false) => Parity::All,
        }
    }

    pub fn allows(&self, j: usize) -> bool {
        match self {
            Parity::Odd => j % 2 == 1,
            Parity::Even => j.is_multiple_of(2),
            Parity::All => true,
            Parity::Vanishing => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub jmax: usize,
    /// Forbidden-parity amplitudes above this fraction of the largest allowed
    /// one are an error.
    pub leakage_threshold: f64,
    /// Absolute bound for data that must vanish.
    pub vanishing_threshold: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            jmax: 15,
            leakage_threshold: 1e-6,
            vanishing_threshold: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierFit {
    pub k: u32,
    pub q1: u32,
    pub q2: u32,
    pub delta1: f64,
    pub parity: Parity,
    pub jmax: usize,
    /// Cⱼ ≥ 0 for j = 0..=jmax; zero outside the parity class.
    pub coefficients: Vec<f64>,
    /// φⱼ ∈ [0, 2π).
    pub phases: Vec<f64>,
    /// Largest |sample − reconstruction| over the input grid.
    pub residual: f64,
}

fn check_uniform(delta2: &[f64]) -> Result<f64> {
    let n = delta2.len();
    let step = TAU / n as f64;
    for (i, &d) in delta2.iter().enumerate() {
        let want = delta2[0] + i as f64 * step;
        if !d.is_finite() || (d - want).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "delta2 samples must be uniform over one period (node {i}: {d}, expected {want})"
            )));
        }
    }
    Ok(step)
}

/// Fits samples v(δ2) on the uniform grid δ2ᵢ = δ2₀ + 2πi/N.
pub fn fit_series(
    delta2: &[f64],
    values: &[f64],
    k: u32,
    q1: u32,
    q2: u32,
    delta1: f64,
    opts: &FitOptions,
) -> Result<FourierFit> {
    if delta2.len() != values.len() {
        return Err(Error::InvalidInput(format!(
            "{} delta2 nodes but {} values",
            delta2.len(),
            values.len()
        )));
    }
    if q1 == 0 || q2 == 0 {
        return Err(Error::invalid("frequency multipliers must be >= 1"));
    }
    let n = delta2.len();
    let need = 2 * opts.jmax * q1 as usize + 2;
    if n < need {
        return Err(Error::InvalidInput(format!(
            "{n} samples cannot resolve jmax={} with q1={q1} (need {need})",
            opts.jmax
        )));
    }
    check_uniform(delta2)?;
    let parity = Parity::for_observable(k, q1, q2);

    let mut raw_c = vec![0.0; opts.jmax + 1];
    let mut raw_phi = vec![0.0; opts.jmax + 1];
    for j in 0..=opts.jmax {
        let h = (j * q1 as usize) as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for (&d, &v) in delta2.iter().zip(values) {
            let (s, c) = (h * d).sin_cos();
            a += v * c;
            b += v * s;
        }
        let norm = if j == 0 { 1.0 } else { 2.0 } / n as f64;
        let (a, b) = (a * norm, b * norm);
        if j == 0 {
            raw_c[0] = a.abs();
            raw_phi[0] = if a < 0.0 { PI } else { 0.0 };
        } else {
            raw_c[j] = a.hypot(b);
            raw_phi[j] = wrap_phase((-b).atan2(a) + (j as u32 * q2) as f64 * delta1);
        }
    }

    if parity == Parity::Vanishing {
        let worst = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if worst > opts.vanishing_threshold {
            let (j, amp) = largest(&raw_c, |_| true);
            return Err(Error::ParityViolation {
                j,
                amplitude: amp.max(worst),
                threshold: opts.vanishing_threshold,
            });
        }
    } else {
        let (_, allowed_max) = largest(&raw_c, |j| parity.allows(j));
        let threshold = (opts.leakage_threshold * allowed_max).max(1e-14);
        let (j, leak) = largest(&raw_c, |j| !parity.allows(j));
        if leak > threshold {
            return Err(Error::ParityViolation { j, amplitude: leak, threshold });
        }
    }

    let mut fit = FourierFit {
        k,
        q1,
        q2,
        delta1,
        parity,
        jmax: opts.jmax,
        coefficients: raw_c,
        phases: raw_phi,
        residual: 0.0,
    };
    for j in 0..=opts.jmax {
        if !parity.allows(j) {
            fit.coefficients[j] = 0.0;
            fit.phases[j] = 0.0;
        }
    }
    fit.residual = delta2
        .iter()
        .zip(values)
        .map(|(&d, &v)| (v - reconstruct(&fit, d)).abs())
        .fold(0.0, f64::max);
    Ok(fit)
}

fn largest(c: &[f64], keep: impl Fn(usize) -> bool) -> (usize, f64) {
    c.iter()
        .enumerate()
        .filter(|(j, _)| keep(*j))
        .fold((0, 0.0), |best, (j, &v)| if v > best.1 { (j, v) } else { best })
}

/// Σⱼ Cⱼ cos(j ξ12 + φⱼ) at δ2.
pub fn reconstruct(fit: &FourierFit, delta2: f64) -> f64 {
    let xi = fit.q1 as f64 * delta2 - fit.q2 as f64 * fit.delta1;
    fit.coefficients
        .iter()
        .zip(&fit.phases)
        .enumerate()
        .map(|(j, (&c, &phi))| c * (j as f64 * xi + phi).cos())
        .sum()
}
