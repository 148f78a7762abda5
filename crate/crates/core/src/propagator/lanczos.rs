//! Short iterative Lanczos approximation of exp(−i H dt) ψ for real
//! symmetric banded H.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rotor::BandedOperator;

/// Step halvings attempted before a step is declared failed.
pub const MAX_HALVINGS: u32 = 20;

/// Weight below which the Krylov expansion is exhausted at double precision.
const EXHAUSTED_WEIGHT: f64 = 1e-17;

/// Outcome of one accepted step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    /// Largest Krylov dimension used.
    pub krylov_dim: usize,
    /// Largest last-vector weight |c_{m-1}| over the accepted substeps.
    pub error_estimate: f64,
    /// |‖ψ'‖ − ‖ψ‖| before renormalization.
    pub norm_drift: f64,
    /// Number of times dt was halved.
    pub halvings: u32,
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL.
///
/// `diag` is overwritten with the eigenvalues; `vecs` (n×n, row-major) with
/// the eigenvectors as columns.
pub(crate) fn tridiagonal_eigen(diag: &mut [f64], offdiag: &[f64], vecs: &mut [f64]) {
    let n = diag.len();
    debug_assert!(offdiag.len() + 1 >= n);
    debug_assert_eq!(vecs.len(), n * n);
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&offdiag[..n.saturating_sub(1)]);
    vecs.fill(0.0);
    for i in 0..n {
        vecs[i * n + i] = 1.0;
    }
    let d = diag;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 200, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = vecs[k * n + i + 1];
                    vecs[k * n + i + 1] = s * vecs[k * n + i] + c * f;
                    vecs[k * n + i] = c * vecs[k * n + i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Reusable Lanczos workspace for one state dimension.
#[derive(Debug, Clone)]
pub struct SilIntegrator {
    dim: usize,
    max_krylov: usize,
    tolerance: f64,
    basis: Vec<Vec<Complex64>>,
    w: Vec<Complex64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    coeffs: Vec<Complex64>,
    eig_vals: Vec<f64>,
    eig_vecs: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl SilIntegrator {
    pub fn new(dim: usize, max_krylov: usize, tolerance: f64) -> Self {
        let m = max_krylov.max(1);
        SilIntegrator {
            dim,
            max_krylov: m,
            tolerance,
            basis: vec![vec![Complex64::new(0.0, 0.0); dim]; m],
            w: vec![Complex64::new(0.0, 0.0); dim],
            alpha: Vec::with_capacity(m),
            beta: Vec::with_capacity(m),
            coeffs: vec![Complex64::new(0.0, 0.0); m],
            eig_vals: Vec::with_capacity(m),
            eig_vecs: Vec::with_capacity(m * m),
            scratch: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// ψ ← exp(−i H dt) ψ, renormalized to its incoming norm.
    ///
    /// Steps whose last Krylov weight exceeds the tolerance are retried as
    /// two half steps with the same H, up to [`MAX_HALVINGS`] times.
    pub fn step(&mut self, h: &BandedOperator, psi: &mut [Complex64], dt: f64) -> Result<StepReport> {
        if h.dim() != psi.len() || psi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                operator: h.dim(),
                state: psi.len(),
            });
        }
        let norm_in = norm(psi);
        if norm_in == 0.0 {
            return Ok(StepReport::default());
        }
        let mut report = StepReport::default();
        self.step_split(h, psi, dt, 0, &mut report)?;
        let norm_out = norm(psi);
        report.norm_drift = (norm_out - norm_in).abs();
        let scale = norm_in / norm_out;
        psi.iter_mut().for_each(|z| *z *= scale);
        Ok(report)
    }

    fn step_split(
        &mut self,
        h: &BandedOperator,
        psi: &mut [Complex64],
        dt: f64,
        depth: u32,
        report: &mut StepReport,
    ) -> Result<()> {
        let (m, err) = self.krylov(h, psi, dt);
        if err <= self.tolerance {
            self.write_back(m, psi);
            report.krylov_dim = report.krylov_dim.max(m);
            report.error_estimate = report.error_estimate.max(err);
            report.halvings = report.halvings.max(depth);
            return Ok(());
        }
        if depth >= MAX_HALVINGS {
            return Err(Error::StepFailure {
                time: f64::NAN,
                halvings: depth,
                estimate: err,
            });
        }
        self.step_split(h, psi, dt / 2.0, depth + 1, report)?;
        self.step_split(h, psi, dt / 2.0, depth + 1, report)
    }

    /// Builds the Krylov space and the coefficients c = exp(−i T dt) e₁.
    /// Returns the dimension used and the last-vector weight |c_{m−1}|.
    fn krylov(&mut self, h: &BandedOperator, psi: &[Complex64], dt: f64) -> (usize, f64) {
        let n0 = norm(psi);
        self.alpha.clear();
        self.beta.clear();
        for (v, &p) in self.basis[0].iter_mut().zip(psi) {
            *v = p / n0;
        }
        let adt = dt.abs();
        // running product β₀⋯β_{j−1} |dt|^j / j!, the leading-order size of the
        // weight on Krylov vector j
        let mut weight = 1.0;
        let mut m = self.max_krylov;
        for j in 0..self.max_krylov {
            h.apply(&self.basis[j], &mut self.w);
            let a = dot(&self.basis[j], &self.w).re;
            self.alpha.push(a);
            for (w, v) in self.w.iter_mut().zip(&self.basis[j]) {
                *w -= v * a;
            }
            if j > 0 {
                let b = self.beta[j - 1];
                for (w, v) in self.w.iter_mut().zip(&self.basis[j - 1]) {
                    *w -= v * b;
                }
            }
            // full reorthogonalization
            for i in 0..=j {
                let c = dot(&self.basis[i], &self.w);
                for (w, v) in self.w.iter_mut().zip(&self.basis[i]) {
                    *w -= v * c;
                }
            }
            let b = norm(&self.w);
            let scale = a.abs().max(b).max(f64::MIN_POSITIVE);
            if b <= 1e-13 * scale {
                // invariant subspace: exact in this dimension
                m = j + 1;
                self.exponentiate(m, dt);
                return (m, 0.0);
            }
            weight *= b * adt / (j + 1) as f64;
            if j + 1 == self.max_krylov || (j + 1 >= 3 && weight < EXHAUSTED_WEIGHT) {
                // vector j+1 would carry no weight at double precision
                m = j + 1;
                break;
            }
            self.beta.push(b);
            let next = &mut self.basis[j + 1];
            for (v, w) in next.iter_mut().zip(&self.w) {
                *v = w / b;
            }
        }
        self.exponentiate(m, dt);
        (m, self.coeffs[m - 1].norm())
    }

    fn exponentiate(&mut self, m: usize, dt: f64) {
        self.eig_vals.clear();
        self.eig_vals.extend_from_slice(&self.alpha[..m]);
        self.eig_vecs.resize(m * m, 0.0);
        tridiagonal_eigen(&mut self.eig_vals, &self.beta, &mut self.eig_vecs);
        for j in 0..m {
            let mut c = Complex64::new(0.0, 0.0);
            for k in 0..m {
                let phase = Complex64::from_polar(1.0, -self.eig_vals[k] * dt);
                c += phase * (self.eig_vecs[j * m + k] * self.eig_vecs[k]);
            }
            self.coeffs[j] = c;
        }
    }

    fn write_back(&mut self, m: usize, psi: &mut [Complex64]) {
        let n0 = norm(psi);
        self.scratch.fill(Complex64::new(0.0, 0.0));
        for j in 0..m {
            let c = self.coeffs[j] * n0;
            for (s, v) in self.scratch.iter_mut().zip(&self.basis[j]) {
                *s += v * c;
            }
        }
        psi.copy_from_slice(&self.scratch);
    }
}
