//! Basis-size and step-size probe.

use serde::Serialize;

use super::{RunDescription, Trajectory};
use crate::error::{Error, Result};
use crate::params::ps_to_au;
use crate::rotor::BasisSpec;

/// Starting point and stopping rule for [`converge`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceTargets {
    pub jmax: u32,
    pub dt: f64,
    pub krylov_dim: usize,
    /// Probe length (a.u.).
    pub probe_t_end: f64,
    /// Largest tolerated change of ⟨cosθ⟩ and ⟨cos²θ⟩ over the probe.
    pub tolerance: f64,
    pub jmax_limit: u32,
}

impl ConvergenceTargets {
    /// Settings of `run` with a 20 ps probe and tolerance 1e-6.
    pub fn from_run(run: &RunDescription) -> Self {
        ConvergenceTargets {
            jmax: run.basis.jmax,
            dt: run.config.dt,
            krylov_dim: run.config.krylov_dim,
            probe_t_end: ps_to_au(20.0),
            tolerance: 1e-6,
            jmax_limit: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Settings {
    pub jmax: u32,
    pub dt: f64,
    pub krylov_dim: usize,
}

/// One comparison round: the change when Jmax is doubled and when dt is halved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub jmax: u32,
    pub dt: f64,
    pub change_jmax: f64,
    pub change_dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub settings: Settings,
    pub tolerance: f64,
    pub probes: Vec<ProbeRecord>,
}

fn probe(run: &RunDescription, targets: &ConvergenceTargets, jmax: u32, dt: f64) -> Result<Trajectory> {
    let mut r = *run;
    r.basis = BasisSpec { jmax, ..run.basis };
    r.config.dt = dt;
    r.config.krylov_dim = targets.krylov_dim;
    r.t_end = targets.probe_t_end;
    r.sample_every = targets.probe_t_end / 200.0;
    r.propagate()
}

fn max_change(a: &Trajectory, b: &Trajectory) -> f64 {
    a.cos[..2]
        .iter()
        .zip(&b.cos[..2])
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

/// Doubles Jmax and halves dt until neither refinement moves ⟨cosθ⟩ or
/// ⟨cos²θ⟩ by more than the tolerance over the probe window.
pub fn converge(run: &RunDescription, targets: &ConvergenceTargets) -> Result<ConvergenceReport> {
    if targets.jmax < run.basis.jmin() || targets.jmax > targets.jmax_limit {
        return Err(Error::invalid(format!(
            "starting Jmax {} outside {}..={}",
            targets.jmax,
            run.basis.jmin(),
            targets.jmax_limit
        )));
    }
    let (mut jmax, mut dt) = (targets.jmax, targets.dt);
    let mut probes = Vec::new();
    let mut base = probe(run, targets, jmax, dt)?;
    loop {
        let bigger = (2 * jmax).min(targets.jmax_limit);
        let change_jmax = if bigger > jmax {
            max_change(&base, &probe(run, targets, bigger, dt)?)
        } else {
            0.0
        };
        let finer = probe(run, targets, jmax, dt / 2.0)?;
        let change_dt = max_change(&base, &finer);
        probes.push(ProbeRecord { jmax, dt, change_jmax, change_dt });
        let jmax_ok = change_jmax < targets.tolerance;
        let dt_ok = change_dt < targets.tolerance;
        if jmax_ok && dt_ok {
            if bigger == jmax && jmax != targets.jmax {
                return Err(Error::NonConvergence {
                    jmax,
                    detail: "basis reached the Jmax limit".into(),
                });
            }
            return Ok(ConvergenceReport {
                settings: Settings { jmax, dt, krylov_dim: targets.krylov_dim },
                tolerance: targets.tolerance,
                probes,
            });
        }
        if !jmax_ok {
            if jmax >= targets.jmax_limit {
                return Err(Error::NonConvergence {
                    jmax,
                    detail: format!("change {change_jmax:.3e} on doubling Jmax"),
                });
            }
            jmax = bigger;
        }
        if !dt_ok {
            dt /= 2.0;
        }
        base = if jmax_ok { finer } else { probe(run, targets, jmax, dt)? };
    }
}
