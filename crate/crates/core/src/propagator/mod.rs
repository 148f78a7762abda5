//! Time propagation of the rotor wavefunction with the short iterative
//! Lanczos method.
//!
//! Two drivers share one step grid. [`propagate_direct`] steps the state
//! through every time step. [`propagate_periodic`] exploits H(t + P) = H(t):
//! it builds the one-period propagator column by column from the same SIL
//! steps, then advances the state period by period. Both evaluate the field
//! at the same instants, so they agree to round-off.

mod converge;
mod lanczos;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use converge::{converge, ConvergenceReport, ConvergenceTargets, ProbeRecord, Settings};
pub use lanczos::{SilIntegrator, StepReport, MAX_HALVINGS};

use crate::error::{Error, Result};
use crate::field::{FieldMoments, FieldSpec};
use crate::params::InternalParams;
use crate::rotor::{BandedOperator, BasisSpec, InteractionCoefficients, InteractionFlags, RotorOperators, MAX_HALF_BANDWIDTH};

/// How the field enters the Hamiltonian of one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldTimeRule {
    /// Fourth-order commutator-free pair of exponentials with H taken at the
    /// two Gauss points of the step.
    #[default]
    GaussPair,
    /// Exact averages of E, E², E³ over the step.
    StepAverage,
    /// Field at the step midpoint.
    Midpoint,
    LeftEndpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    /// Requested step (a.u.); the effective step is the largest value not
    /// above this that tiles the sampling interval (and the field period).
    pub dt: f64,
    pub krylov_dim: usize,
    pub step_tolerance: f64,
    pub field_time_rule: FieldTimeRule,
}

impl PropagatorConfig {
    /// Defaults for a laser period: dt = T/200, 12 Krylov vectors, tolerance 1e-10.
    pub fn for_laser_period(period: f64) -> Self {
        PropagatorConfig {
            dt: period / 200.0,
            krylov_dim: 12,
            step_tolerance: 1e-10,
            field_time_rule: FieldTimeRule::GaussPair,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.krylov_dim < 4 {
            return Err(Error::invalid(format!("krylov_dim must be >= 4, got {}", self.krylov_dim)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.step_tolerance > 0.0) {
            return Err(Error::invalid("step_tolerance must be positive"));
        }
        Ok(())
    }
}

/// Expansion coefficients over |J, M⟩, J = |M|..=Jmax, at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub basis: BasisSpec,
    pub coeffs: Vec<Complex64>,
    pub time: f64,
}

impl WaveFunction {
    /// The field-free eigenstate Y_{J,M} at t = 0.
    pub fn eigenstate(basis: BasisSpec, j: u32) -> Result<Self> {
        let idx = basis.index_of(j).ok_or_else(|| {
            Error::invalid(format!("J={j} outside basis |M|={}..={}", basis.jmin(), basis.jmax))
        })?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); basis.dim()];
        coeffs[idx] = Complex64::new(1.0, 0.0);
        Ok(WaveFunction { basis, coeffs, time: 0.0 })
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.coeffs.iter_mut().for_each(|c| *c /= n);
        }
    }

    /// ⟨self|other⟩.
    pub fn overlap(&self, other: &WaveFunction) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn write_checkpoint(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&self.basis.m.to_le_bytes())?;
        w.write_all(&self.basis.jmax.to_le_bytes())?;
        w.write_all(&self.basis.buffer.to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        w.write_all(&(self.coeffs.len() as u64).to_le_bytes())?;
        for c in &self.coeffs {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_checkpoint(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::InvalidInput(format!("{} is not a wavefunction checkpoint", path.display())));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let m = i32::from_le_bytes(b4);
        r.read_exact(&mut b4)?;
        let jmax = u32::from_le_bytes(b4);
        r.read_exact(&mut b4)?;
        let buffer = u32::from_le_bytes(b4);
        r.read_exact(&mut b8)?;
        let time = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        let basis = BasisSpec { m, jmax, buffer };
        basis.validate()?;
        if n != basis.dim() {
            return Err(Error::InvalidInput(format!("checkpoint holds {n} coefficients, basis needs {}", basis.dim())));
        }
        let mut coeffs = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            coeffs.push(Complex64::new(re, f64::from_le_bytes(b8)));
        }
        Ok(WaveFunction { basis, coeffs, time })
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"BICOLWF1";

/// One SIL step ψ' = exp(−i H dt) ψ.
pub fn sil_step(
    h: &BandedOperator,
    psi: &WaveFunction,
    dt: f64,
    config: &PropagatorConfig,
) -> Result<(WaveFunction, StepReport)> {
    let mut sil = SilIntegrator::new(psi.coeffs.len(), config.krylov_dim, config.step_tolerance);
    let mut out = psi.clone();
    let report = sil.step(h, &mut out.coeffs, dt).map_err(|e| with_time(e, psi.time))?;
    out.time += dt;
    Ok((out, report))
}

fn with_time(e: Error, t: f64) -> Error {
    match e {
        Error::StepFailure { halvings, estimate, .. } => Error::StepFailure { time: t, halvings, estimate },
        other => other,
    }
}

/// A Hamiltonian that can be evaluated at any time.
pub trait TimeDependentHamiltonian: Sync {
    fn dim(&self) -> usize;
    /// Writes H(t) into `out` (half-bandwidth [`MAX_HALF_BANDWIDTH`]).
    fn fill(&self, t: f64, out: &mut BandedOperator);
    /// Writes the average of H over [t, t + dt] into `out`.
    fn fill_interval(&self, t: f64, dt: f64, out: &mut BandedOperator) {
        self.fill(t + 0.5 * dt, out);
    }
    /// P with H(t + P) = H(t) for all t, if any.
    fn period(&self) -> Option<f64>;
    /// True if H does not depend on t.
    fn is_static(&self) -> bool;
}

/// Full rotor Hamiltonian or its cycle-averaged counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianMode {
    #[default]
    Full,
    TimeAveraged,
}

pub struct RotorHamiltonian<'a> {
    ops: &'a RotorOperators,
    params: InternalParams,
    spec: FieldSpec,
    flags: InteractionFlags,
    mode: HamiltonianMode,
    averaged: InteractionCoefficients,
    moments: FieldMoments,
}

impl<'a> RotorHamiltonian<'a> {
    pub fn new(
        ops: &'a RotorOperators,
        params: InternalParams,
        spec: FieldSpec,
        flags: InteractionFlags,
        mode: HamiltonianMode,
    ) -> Self {
        RotorHamiltonian {
            ops,
            params,
            spec,
            flags,
            mode,
            averaged: InteractionCoefficients::time_averaged(&params, flags, &spec),
            moments: FieldMoments::new(&spec),
        }
    }
}

impl TimeDependentHamiltonian for RotorHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.ops.dim()
    }

    fn fill(&self, t: f64, out: &mut BandedOperator) {
        let c = match self.mode {
            HamiltonianMode::Full => {
                InteractionCoefficients::instantaneous(&self.params, self.flags, self.spec.evaluate(t))
            }
            HamiltonianMode::TimeAveraged => self.averaged,
        };
        self.ops.fill(self.params.b, &c, out);
    }

    fn fill_interval(&self, t: f64, dt: f64, out: &mut BandedOperator) {
        let c = match self.mode {
            HamiltonianMode::Full => {
                let [e1, e2, e3] = self.moments.interval_average(t, dt);
                InteractionCoefficients::from_moments(&self.params, self.flags, e1, e2, e3)
            }
            HamiltonianMode::TimeAveraged => self.averaged,
        };
        self.ops.fill(self.params.b, &c, out);
    }

    fn period(&self) -> Option<f64> {
        match self.mode {
            HamiltonianMode::Full => Some(self.spec.field_period()),
            HamiltonianMode::TimeAveraged => None,
        }
    }

    fn is_static(&self) -> bool {
        self.mode == HamiltonianMode::TimeAveraged
            || (self.spec.eps1 == 0.0 && self.spec.eps2 == 0.0)
            || self.flags == InteractionFlags::NONE
    }
}

/// Sampled expectation values ⟨cos^kθ⟩, k = 1, 2, 3.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub cos: [Vec<f64>; 3],
    /// Coefficient vectors at each sample, when requested.
    pub states: Option<Vec<Vec<Complex64>>>,
    pub stats: PropagationStats,
}

impl Trajectory {
    pub fn values(&self, k: u32) -> Result<&[f64]> {
        match k {
            1..=3 => Ok(&self.cos[k as usize - 1]),
            _ => Err(Error::UnsupportedCosPower(k)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Direct,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationStats {
    pub method: Method,
    /// Effective step.
    pub dt: f64,
    /// SIL steps taken (columns × steps for the periodic driver).
    pub steps: u64,
    pub max_step_drift: f64,
    pub cumulative_drift: f64,
    pub max_error_estimate: f64,
    pub max_krylov_dim: usize,
}

impl PropagationStats {
    fn new(method: Method, dt: f64) -> Self {
        PropagationStats {
            method,
            dt,
            steps: 0,
            max_step_drift: 0.0,
            cumulative_drift: 0.0,
            max_error_estimate: 0.0,
            max_krylov_dim: 0,
        }
    }

    fn record(&mut self, r: &StepReport) {
        self.steps += 1;
        self.max_step_drift = self.max_step_drift.max(r.norm_drift);
        self.cumulative_drift += r.norm_drift;
        self.max_error_estimate = self.max_error_estimate.max(r.error_estimate);
        self.max_krylov_dim = self.max_krylov_dim.max(r.krylov_dim);
    }
}

/// The uniform step grid shared by both drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepGrid {
    pub dt: f64,
    pub steps_per_sample: usize,
    /// Steps per Hamiltonian period when the grid tiles it.
    pub steps_per_period: Option<usize>,
    pub n_samples: usize,
}

impl StepGrid {
    pub fn new(
        ham: &dyn TimeDependentHamiltonian,
        dt: f64,
        sample_every: f64,
        t_end: f64,
    ) -> Result<Self> {
        if !(t_end > 0.0) || !(sample_every > 0.0) || sample_every > t_end * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "need 0 < sample_every <= t_end (got sample_every={sample_every}, t_end={t_end})"
            )));
        }
        let n_samples = (t_end / sample_every + 1e-9).floor() as usize;
        let period = if ham.is_static() { Some(sample_every) } else { ham.period() };
        if let Some(p) = period {
            let per_period = (p / dt - 1e-9).ceil().max(1.0) as usize;
            let dtp = p / per_period as f64;
            let s = sample_every / dtp;
            let sr = s.round();
            if sr >= 1.0 && (s - sr).abs() <= 1e-9 * s {
                return Ok(StepGrid {
                    dt: dtp,
                    steps_per_sample: sr as usize,
                    steps_per_period: Some(per_period),
                    n_samples,
                });
            }
        }
        let s = (sample_every / dt - 1e-9).ceil().max(1.0) as usize;
        Ok(StepGrid {
            dt: sample_every / s as f64,
            steps_per_sample: s,
            steps_per_period: None,
            n_samples,
        })
    }

    fn step_start(&self, t_start: f64, step: usize) -> f64 {
        t_start + step as f64 * self.dt
    }

}

/// The exponentials that make up one step, applied in order.
#[derive(Debug, Clone)]
struct StepOperators {
    parts: Vec<(BandedOperator, f64)>,
    scratch: BandedOperator,
}

// exp(−i dt(α1H1 + α2H2)) exp(−i dt(α2H1 + α1H2)), H1 and H2 at the Gauss points
const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6
const CF4_A1: f64 = 0.25 - GAUSS_OFFSET;
const CF4_A2: f64 = 0.25 + GAUSS_OFFSET;

impl StepOperators {
    fn new(dim: usize, rule: FieldTimeRule, is_static: bool) -> Self {
        let n = if rule == FieldTimeRule::GaussPair && !is_static { 2 } else { 1 };
        StepOperators {
            parts: (0..n).map(|_| (BandedOperator::zeros(dim, MAX_HALF_BANDWIDTH), 0.0)).collect(),
            scratch: BandedOperator::zeros(dim, MAX_HALF_BANDWIDTH),
        }
    }

    fn fill(&mut self, ham: &dyn TimeDependentHamiltonian, t: f64, dt: f64, rule: FieldTimeRule) {
        if self.parts.len() == 2 {
            ham.fill(t + (0.5 - GAUSS_OFFSET) * dt, &mut self.parts[0].0);
            ham.fill(t + (0.5 + GAUSS_OFFSET) * dt, &mut self.scratch);
            let (first, second) = self.parts.split_at_mut(1);
            let (h1, h2) = (&mut first[0].0, &self.scratch);
            second[0].0.set_combination(2.0 * CF4_A1, h1, 2.0 * CF4_A2, h2);
            // the two halves sum to H1 + H2
            h1.add_scaled(1.0, h2);
            h1.add_scaled(-1.0, &second[0].0);
            first[0].1 = 0.5 * dt;
            second[0].1 = 0.5 * dt;
            return;
        }
        let h = &mut self.parts[0].0;
        match rule {
            FieldTimeRule::StepAverage => ham.fill_interval(t, dt, h),
            FieldTimeRule::LeftEndpoint => ham.fill(t, h),
            FieldTimeRule::Midpoint | FieldTimeRule::GaussPair => ham.fill(t + 0.5 * dt, h),
        }
        self.parts[0].1 = dt;
    }

    fn apply(&self, sil: &mut SilIntegrator, psi: &mut [Complex64], stats: &mut PropagationStats, t: f64) -> Result<()> {
        for (h, tau) in &self.parts {
            let r = sil.step(h, psi, *tau).map_err(|e| with_time(e, t))?;
            stats.record(&r);
        }
        Ok(())
    }
}

fn sample_into(ops: &RotorOperators, psi: &[Complex64], out: &mut [Vec<f64>; 3]) {
    for (k, dst) in out.iter_mut().enumerate() {
        dst.push(crate::observables::expectation_of(&ops.cos[k], psi));
    }
}

/// Steps ψ through every time step of the grid.
pub fn propagate_direct(
    ham: &dyn TimeDependentHamiltonian,
    ops: &RotorOperators,
    psi0: &WaveFunction,
    t_end: f64,
    sample_every: f64,
    config: &PropagatorConfig,
    keep_states: bool,
) -> Result<Trajectory> {
    config.validate()?;
    check_state(ham, psi0)?;
    let grid = StepGrid::new(ham, config.dt, sample_every, t_end)?;
    let mut stats = PropagationStats::new(Method::Direct, grid.dt);
    let mut sil = SilIntegrator::new(ham.dim(), config.krylov_dim, config.step_tolerance);
    let is_static = ham.is_static();
    let mut ops_step = StepOperators::new(ham.dim(), config.field_time_rule, is_static);
    let mut psi = psi0.coeffs.clone();
    let mut times = Vec::with_capacity(grid.n_samples + 1);
    let mut cos: [Vec<f64>; 3] = Default::default();
    let mut states = keep_states.then(Vec::new);

    let record = |psi: &[Complex64], t: f64, times: &mut Vec<f64>, cos: &mut [Vec<f64>; 3], states: &mut Option<Vec<Vec<Complex64>>>| {
        times.push(t);
        sample_into(ops, psi, cos);
        if let Some(s) = states.as_mut() {
            s.push(psi.to_vec());
        }
    };
    record(&psi, psi0.time, &mut times, &mut cos, &mut states);
    if is_static {
        ops_step.fill(ham, psi0.time, grid.dt, config.field_time_rule);
    }
    let mut step = 0usize;
    for k in 1..=grid.n_samples {
        for _ in 0..grid.steps_per_sample {
            let t = grid.step_start(psi0.time, step);
            if !is_static {
                ops_step.fill(ham, t, grid.dt, config.field_time_rule);
            }
            ops_step.apply(&mut sil, &mut psi, &mut stats, t)?;
            step += 1;
        }
        record(&psi, psi0.time + (k * grid.steps_per_sample) as f64 * grid.dt, &mut times, &mut cos, &mut states);
    }
    Ok(Trajectory { times, cos, states, stats })
}

fn check_state(ham: &dyn TimeDependentHamiltonian, psi0: &WaveFunction) -> Result<()> {
    if psi0.coeffs.len() != ham.dim() {
        return Err(Error::DimensionMismatch {
            operator: ham.dim(),
            state: psi0.coeffs.len(),
        });
    }
    let n = psi0.norm();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(format!("initial state is not normalized (norm {n})")));
    }
    Ok(())
}

/// Propagator matrices over one Hamiltonian period starting at `t_start`.
struct PeriodPropagators {
    /// U(t_start + P, t_start).
    monodromy: DMatrix<Complex64>,
    /// U(t_start + r dt, t_start) for the residues r the sampling visits.
    partial: BTreeMap<usize, DMatrix<Complex64>>,
}

fn build_period_propagators(
    ham: &dyn TimeDependentHamiltonian,
    grid: &StepGrid,
    per_period: usize,
    t_start: f64,
    residues: &[usize],
    config: &PropagatorConfig,
    stats: &mut PropagationStats,
) -> Result<PeriodPropagators> {
    let n = ham.dim();
    let is_static = ham.is_static();
    let steps: Vec<StepOperators> = (0..if is_static { 1 } else { per_period })
        .map(|i| {
            let mut s = StepOperators::new(n, config.field_time_rule, is_static);
            s.fill(ham, grid.step_start(t_start, i), grid.dt, config.field_time_rule);
            s
        })
        .collect();
    let mut partial: BTreeMap<usize, DMatrix<Complex64>> = residues
        .iter()
        .filter(|&&r| r != 0)
        .map(|&r| (r, DMatrix::zeros(n, n)))
        .collect();
    let mut monodromy = DMatrix::zeros(n, n);
    let mut sil = SilIntegrator::new(n, config.krylov_dim, config.step_tolerance);
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..n {
        col.fill(Complex64::new(0.0, 0.0));
        col[c] = Complex64::new(1.0, 0.0);
        for i in 0..per_period {
            if let Some(u) = partial.get_mut(&i) {
                u.column_mut(c).copy_from_slice(&col);
            }
            steps[if is_static { 0 } else { i }].apply(&mut sil, &mut col, stats, grid.step_start(t_start, i))?;
        }
        monodromy.column_mut(c).copy_from_slice(&col);
    }
    Ok(PeriodPropagators { monodromy, partial })
}

/// Advances ψ period by period with the one-period propagator.
///
/// Fails with [`Error::InvalidUse`] if the step grid does not tile the
/// Hamiltonian period.
pub fn propagate_periodic(
    ham: &dyn TimeDependentHamiltonian,
    ops: &RotorOperators,
    psi0: &WaveFunction,
    t_end: f64,
    sample_every: f64,
    config: &PropagatorConfig,
    keep_states: bool,
) -> Result<Trajectory> {
    config.validate()?;
    check_state(ham, psi0)?;
    let grid = StepGrid::new(ham, config.dt, sample_every, t_end)?;
    let per_period = grid
        .steps_per_period
        .ok_or_else(|| Error::InvalidUse("step grid does not tile the Hamiltonian period".into()))?;
    let mut stats = PropagationStats::new(Method::Periodic, grid.dt);
    let mut residues: Vec<usize> = (0..=grid.n_samples)
        .map(|k| (k * grid.steps_per_sample) % per_period)
        .collect();
    residues.sort_unstable();
    residues.dedup();
    let props = build_period_propagators(ham, &grid, per_period, psi0.time, &residues, config, &mut stats)?;

    let mut times = Vec::with_capacity(grid.n_samples + 1);
    let mut cos: [Vec<f64>; 3] = Default::default();
    let mut states = keep_states.then(Vec::new);
    let mut phi = DVector::from_column_slice(&psi0.coeffs);
    let mut periods_done = 0usize;
    for k in 0..=grid.n_samples {
        let total = k * grid.steps_per_sample;
        let (periods, r) = (total / per_period, total % per_period);
        while periods_done < periods {
            phi = &props.monodromy * &phi;
            let nrm = phi.norm();
            phi /= Complex64::new(nrm, 0.0);
            periods_done += 1;
        }
        let psi = match props.partial.get(&r) {
            Some(u) => u * &phi,
            None => phi.clone(),
        };
        times.push(psi0.time + total as f64 * grid.dt);
        sample_into(ops, psi.as_slice(), &mut cos);
        if let Some(s) = states.as_mut() {
            s.push(psi.as_slice().to_vec());
        }
    }
    Ok(Trajectory { times, cos, states, stats })
}

/// Which driver to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagationMethod {
    /// Periodic whenever the step grid tiles the period.
    #[default]
    Auto,
    Direct,
    Periodic,
}

/// Periodic driver when the grid allows it, direct stepping otherwise.
#[allow(clippy::too_many_arguments)]
pub fn propagate(
    ham: &dyn TimeDependentHamiltonian,
    ops: &RotorOperators,
    psi0: &WaveFunction,
    t_end: f64,
    sample_every: f64,
    config: &PropagatorConfig,
    method: PropagationMethod,
    keep_states: bool,
) -> Result<Trajectory> {
    let grid = StepGrid::new(ham, config.dt, sample_every, t_end)?;
    let periodic = match method {
        PropagationMethod::Direct => false,
        PropagationMethod::Periodic => true,
        // the period build costs dim × steps_per_period steps
        PropagationMethod::Auto => grid.steps_per_period.is_some_and(|p| {
            (ham.dim() * p) < grid.n_samples * grid.steps_per_sample
        }),
    };
    if periodic {
        propagate_periodic(ham, ops, psi0, t_end, sample_every, config, keep_states)
    } else {
        propagate_direct(ham, ops, psi0, t_end, sample_every, config, keep_states)
    }
}

/// Everything that defines one fixed-t0 simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunDescription {
    pub molecule: InternalParams,
    pub field: FieldSpec,
    pub flags: InteractionFlags,
    pub mode: HamiltonianMode,
    pub basis: BasisSpec,
    /// Initial state Y_{J,M}, with M taken from the basis.
    pub initial_j: u32,
    pub t_end: f64,
    pub sample_every: f64,
    pub config: PropagatorConfig,
    pub method: PropagationMethod,
}

impl RunDescription {
    pub fn with_field(&self, field: FieldSpec) -> Self {
        RunDescription { field, ..*self }
    }

    pub fn hamiltonian<'a>(&self, ops: &'a RotorOperators) -> RotorHamiltonian<'a> {
        RotorHamiltonian::new(ops, self.molecule, self.field, self.flags, self.mode)
    }

    pub fn initial_state(&self) -> Result<WaveFunction> {
        WaveFunction::eigenstate(self.basis, self.initial_j)
    }

    pub fn operators(&self) -> Result<RotorOperators> {
        RotorOperators::new(self.basis)
    }

    /// Propagates with operators built from `ops`, which must match the basis.
    pub fn propagate_with(&self, ops: &RotorOperators) -> Result<Trajectory> {
        if ops.basis != self.basis {
            return Err(Error::InvalidUse("operators built for a different basis".into()));
        }
        self.field.validate()?;
        let ham = self.hamiltonian(ops);
        let psi0 = self.initial_state()?;
        propagate(&ham, ops, &psi0, self.t_end, self.sample_every, &self.config, self.method, false)
    }

    pub fn propagate(&self) -> Result<Trajectory> {
        self.propagate_with(&self.operators()?)
    }
}
