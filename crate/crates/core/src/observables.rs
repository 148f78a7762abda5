//! Expectation values ⟨cos^kθ⟩ and their average over the field origin t0.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagator::{RunDescription, Trajectory, WaveFunction};
use crate::rotor::{BandedOperator, RotorOperators};

/// Default number of t0 nodes.
pub const DEFAULT_N_T0: usize = 32;

/// ψ† A ψ for a real symmetric A.
pub fn expectation_of(op: &BandedOperator, psi: &[Complex64]) -> f64 {
    let v = op.expectation(psi);
    debug_assert!(v.im.abs() < 1e-13 * (1.0 + v.re.abs()));
    v.re
}

/// ⟨ψ|cos^kθ|ψ⟩, k = 1, 2, 3.
pub fn expectation_cos_k(ops: &RotorOperators, psi: &WaveFunction, k: u32) -> Result<f64> {
    if psi.basis != ops.basis {
        return Err(Error::DimensionMismatch {
            operator: ops.dim(),
            state: psi.coeffs.len(),
        });
    }
    Ok(expectation_of(ops.cos_power(k)?, &psi.coeffs))
}

/// ⟨cos^kθ⟩ for one fixed-t0 run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationTrace {
    pub k: u32,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl ExpectationTrace {
    pub fn from_trajectory(traj: &Trajectory, k: u32) -> Result<Self> {
        Ok(ExpectationTrace {
            k,
            times: traj.times.clone(),
            values: traj.values(k)?.to_vec(),
        })
    }
}

/// ⟨⟨cos^kθ⟩⟩ for k = 1, 2, 3, averaged over t0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct T0Average {
    pub times: Vec<f64>,
    pub cos: [Vec<f64>; 3],
    pub t0_nodes: Vec<f64>,
    /// Effective propagation step (a.u.).
    pub dt: f64,
}

impl T0Average {
    pub fn n_t0(&self) -> usize {
        self.t0_nodes.len()
    }

    pub fn values(&self, k: u32) -> Result<&[f64]> {
        match k {
            1..=3 => Ok(&self.cos[k as usize - 1]),
            _ => Err(Error::UnsupportedCosPower(k)),
        }
    }

    pub fn trace(&self, k: u32) -> Result<T0AveragedTrace> {
        Ok(T0AveragedTrace {
            k,
            times: self.times.clone(),
            values: self.values(k)?.to_vec(),
            n_t0: self.n_t0(),
            t0_nodes: self.t0_nodes.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct T0AveragedTrace {
    pub k: u32,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub n_t0: usize,
    pub t0_nodes: Vec<f64>,
}

/// Uniform nodes τ + i·(2π/ω)/n over one laser period.
pub fn t0_nodes(omega: f64, n_t0: usize, offset: f64) -> Vec<f64> {
    let period = 2.0 * std::f64::consts::PI / omega;
    (0..n_t0).map(|i| offset + period * i as f64 / n_t0 as f64).collect()
}

/// Rectangle-rule average over t0 ∈ [0, 2π/ω).
pub fn t0_average(run: &RunDescription, n_t0: usize) -> Result<T0Average> {
    t0_average_from(run, n_t0, 0.0)
}

/// Average over t0 ∈ [τ, τ + 2π/ω).
pub fn t0_average_from(run: &RunDescription, n_t0: usize, offset: f64) -> Result<T0Average> {
    if n_t0 < 2 {
        return Err(Error::invalid(format!("n_t0 must be >= 2, got {n_t0}")));
    }
    let ops = run.operators()?;
    let nodes = t0_nodes(run.field.omega, n_t0, offset);
    let runs: Vec<Result<Trajectory>> = nodes
        .par_iter()
        .map(|&t0| run.with_field(run.field.with_t0(t0)).propagate_with(&ops))
        .collect();
    let mut acc: Option<T0Average> = None;
    for r in runs {
        let traj = r?;
        match acc.as_mut() {
            None => {
                acc = Some(T0Average {
                    dt: traj.stats.dt,
                    times: traj.times,
                    cos: traj.cos,
                    t0_nodes: nodes.clone(),
                })
            }
            Some(a) => {
                for (dst, src) in a.cos.iter_mut().zip(&traj.cos) {
                    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
                }
            }
        }
    }
    let mut avg = acc.expect("n_t0 >= 2");
    for v in avg.cos.iter_mut().flatten() {
        *v /= n_t0 as f64;
    }
    Ok(avg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfPeriodReport {
    pub k: u32,
    pub t0: f64,
    pub shift: f64,
    pub sign: f64,
    pub max_deviation: f64,
}

/// Compares ⟨cos^kθ⟩ at t0 and t0 + π/(qω) for a one-color field, where
/// the field flips sign and the traces must obey the (−1)^k relation.
pub fn one_color_halfperiod_check(run: &RunDescription, k: u32) -> Result<HalfPeriodReport> {
    let f = &run.field;
    let q = match (f.eps1 != 0.0, f.eps2 != 0.0) {
        (true, true) => return Err(Error::InvalidUse("half-period check needs a one-color field".into())),
        (false, true) => f.q2,
        _ => f.q1,
    };
    let shift = std::f64::consts::PI / (q as f64 * f.omega);
    let ops = run.operators()?;
    let a = run.propagate_with(&ops)?;
    let b = run.with_field(f.with_t0(f.t0 + shift)).propagate_with(&ops)?;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let max_deviation = a
        .values(k)?
        .iter()
        .zip(b.values(k)?)
        .map(|(x, y)| (y - sign * x).abs())
        .fold(0.0, f64::max);
    Ok(HalfPeriodReport { k, t0: f.t0, shift, sign, max_deviation })
}
