#![allow(dead_code)]

use bicolor_core::params::{fs_to_au, intensity_to_field, ps_to_au, to_internal};
use bicolor_core::propagator::{HamiltonianMode, PropagationMethod, PropagatorConfig, RunDescription};
use bicolor_core::{BandedOperator, BasisSpec, FieldSpec, InteractionFlags, MoleculeParams};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for l in 2..=n {
        let p2 = ((2 * l - 1) as f64 * z * p1 - (l - 1) as f64 * p0) / l as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    (0..n)
        .map(|i| {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, z);
                let dz = p / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, z);
            (z, 2.0 / ((1.0 - z * z) * dp * dp))
        })
        .unzip()
}

/// Orthonormal associated Legendre functions P̄_J^M(x), J = M..=jmax.
pub fn normalized_legendre(m: u32, jmax: u32, x: f64) -> Vec<f64> {
    let mf = m as f64;
    let mut pmm = ((2.0 * mf + 1.0) / 2.0).sqrt();
    for i in 1..=m {
        // (2i−1)/sqrt((2i−1)(2i)) per factor of (2m−1)!!/sqrt((2m)!)
        pmm *= ((2 * i - 1) as f64 / (2 * i) as f64).sqrt();
    }
    pmm *= (1.0 - x * x).powf(mf / 2.0);
    let mut out = vec![pmm];
    if jmax == m {
        return out;
    }
    out.push(x * (2.0 * mf + 3.0).sqrt() * pmm);
    let a = |l: f64| ((4.0 * l * l - 1.0) / (l * l - mf * mf)).sqrt();
    for l in (m + 2)..=jmax {
        let lf = l as f64;
        let n = out.len();
        out.push(a(lf) * (x * out[n - 1] - out[n - 2] / a(lf - 1.0)));
    }
    out
}

/// ⟨J M|cos^kθ|J' M⟩ by quadrature, J, J' = |M|..=jmax.
pub fn quadrature_cos_power(m: u32, jmax: u32, k: u32) -> DMatrix<f64> {
    let (x, w) = gauss_legendre(64);
    let n = (jmax - m + 1) as usize;
    let mut out = DMatrix::zeros(n, n);
    for (&xi, &wi) in x.iter().zip(&w) {
        let p = normalized_legendre(m, jmax, xi);
        let f = xi.powi(k as i32) * wi;
        for a in 0..n {
            for b in 0..n {
                out[(a, b)] += p[a] * p[b] * f;
            }
        }
    }
    out
}

/// exp(−i H dt) ψ through the eigendecomposition of H.
pub fn dense_exp_apply(h: &DMatrix<f64>, psi: &[Complex64], dt: f64) -> Vec<Complex64> {
    let eig = SymmetricEigen::new(h.clone());
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let phases = DVector::from_iterator(
        h.nrows(),
        eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -l * dt)),
    );
    let psi = DVector::from_column_slice(psi);
    let c = v.adjoint() * psi;
    let c = c.component_mul(&phases);
    (v * c).as_slice().to_vec()
}

pub fn banded_to_dense(h: &BandedOperator) -> DMatrix<f64> {
    h.to_dense()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// OCS at 5e11 W/cm², q = (1, 2), δ1 = 0, starting from J = M = 0.
pub fn ocs_run(
    period_fs: f64,
    gamma: f64,
    delta2: f64,
    flags: InteractionFlags,
    jmax: u32,
    t_end_ps: f64,
    sample_ps: f64,
) -> RunDescription {
    let e0 = intensity_to_field(5e11).unwrap().au;
    let period = fs_to_au(period_fs);
    RunDescription {
        molecule: to_internal(&MoleculeParams::OCS).unwrap(),
        field: FieldSpec::two_color((1.0 - gamma) * e0, gamma * e0, 1, 2, period, delta2),
        flags,
        mode: HamiltonianMode::Full,
        basis: BasisSpec::new(0, jmax).unwrap(),
        initial_j: 0,
        t_end: ps_to_au(t_end_ps),
        sample_every: ps_to_au(sample_ps),
        config: PropagatorConfig::for_laser_period(period),
        method: PropagationMethod::Auto,
    }
}
