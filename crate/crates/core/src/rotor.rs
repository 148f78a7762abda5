//! Banded operators over the fixed-M spherical-harmonic basis |J, M⟩,
//! J = |M|..=Jmax, and assembly of the rotor Hamiltonian.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{time_averaged_coefficients, FieldSpec};
use crate::params::InternalParams;

/// Half-bandwidth of the rotor Hamiltonian, set by cos³θ.
pub const MAX_HALF_BANDWIDTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    pub m: i32,
    pub jmax: u32,
    /// Extra levels used when forming operator powers.
    pub buffer: u32,
}

impl BasisSpec {
    pub fn new(m: i32, jmax: u32) -> Result<Self> {
        let b = BasisSpec { m, jmax, buffer: 3 };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.jmax < self.m.unsigned_abs() {
            return Err(Error::invalid(format!(
                "Jmax={} is below |M|={}",
                self.jmax,
                self.m.unsigned_abs()
            )));
        }
        if self.buffer < 3 {
            return Err(Error::invalid(format!("basis buffer must be >= 3, got {}", self.buffer)));
        }
        Ok(())
    }

    pub fn jmin(&self) -> u32 {
        self.m.unsigned_abs()
    }

    pub fn dim(&self) -> usize {
        (self.jmax - self.jmin() + 1) as usize
    }

    /// Index of level J in the coefficient vector.
    pub fn index_of(&self, j: u32) -> Option<usize> {
        (j >= self.jmin() && j <= self.jmax).then(|| (j - self.jmin()) as usize)
    }

    pub fn j_of(&self, index: usize) -> u32 {
        self.jmin() + index as u32
    }

    fn extended(&self) -> BasisSpec {
        BasisSpec {
            jmax: self.jmax + self.buffer,
            ..*self
        }
    }
}

/// Real symmetric banded matrix; `bands[d][i]` holds element (i, i + d).
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperator {
    dim: usize,
    bands: Vec<Vec<f64>>,
}

impl BandedOperator {
    pub fn zeros(dim: usize, half_bandwidth: usize) -> Self {
        let bands = (0..=half_bandwidth)
            .map(|d| vec![0.0; dim.saturating_sub(d)])
            .collect();
        BandedOperator { dim, bands }
    }

    pub fn from_diagonal(diag: Vec<f64>) -> Self {
        BandedOperator {
            dim: diag.len(),
            bands: vec![diag],
        }
    }

    /// Upper triangle of `a` within `half_bandwidth` of the diagonal.
    pub fn from_dense(a: &DMatrix<f64>, half_bandwidth: usize) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        let dim = a.nrows();
        let mut out = Self::zeros(dim, half_bandwidth.min(dim.saturating_sub(1)));
        for (d, band) in out.bands.iter_mut().enumerate() {
            for (i, v) in band.iter_mut().enumerate() {
                *v = a[(i, i + d)];
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_bandwidth(&self) -> usize {
        self.bands.len() - 1
    }

    /// Elements (i, i+d) for i in 0..dim-d.
    pub fn band(&self, d: usize) -> &[f64] {
        &self.bands[d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        assert!(hi < self.dim, "index ({i},{j}) out of range for dim {}", self.dim);
        self.bands.get(hi - lo).map_or(0.0, |b| b[lo])
    }

    /// y = A x.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        let diag = &self.bands[0];
        for i in 0..self.dim {
            y[i] = x[i] * diag[i];
        }
        for (d, band) in self.bands.iter().enumerate().skip(1) {
            for (i, &a) in band.iter().enumerate() {
                y[i] += x[i + d] * a;
                y[i + d] += x[i] * a;
            }
        }
    }

    /// Real quadratic form x† A x.
    pub fn expectation(&self, x: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &a) in self.bands[0].iter().enumerate() {
            acc += x[i].conj() * x[i] * a;
        }
        for (d, band) in self.bands.iter().enumerate().skip(1) {
            for (i, &a) in band.iter().enumerate() {
                // (i, i+d) and its mirror
                acc += (x[i].conj() * x[i + d] + x[i + d].conj() * x[i]) * a;
            }
        }
        acc
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| {
            let d = i.abs_diff(j);
            if d < self.bands.len() {
                self.get(i, j)
            } else {
                0.0
            }
        })
    }

    /// Banded product; the result's bandwidth is the sum of the factors'.
    pub fn multiply(&self, other: &BandedOperator) -> BandedOperator {
        assert_eq!(self.dim, other.dim);
        let kb = (self.half_bandwidth() + other.half_bandwidth()).min(self.dim.saturating_sub(1));
        let (ka, kc) = (self.half_bandwidth(), other.half_bandwidth());
        let mut out = BandedOperator::zeros(self.dim, kb);
        for d in 0..=kb {
            for i in 0..self.dim.saturating_sub(d) {
                let j = i + d;
                let lo = i.saturating_sub(ka).max(j.saturating_sub(kc));
                let hi = (i + ka).min(j + kc).min(self.dim - 1);
                let mut s = 0.0;
                for l in lo..=hi {
                    s += self.get(i, l) * other.get(l, j);
                }
                out.bands[d][i] = s;
            }
        }
        out
    }

    /// Leading `dim × dim` block.
    pub fn truncated(&self, dim: usize) -> BandedOperator {
        assert!(dim <= self.dim);
        BandedOperator {
            dim,
            bands: self
                .bands
                .iter()
                .enumerate()
                .map(|(d, b)| b[..dim.saturating_sub(d)].to_vec())
                .collect(),
        }
    }

    /// self += alpha · other, widening the band if needed.
    pub fn add_scaled(&mut self, alpha: f64, other: &BandedOperator) {
        assert_eq!(self.dim, other.dim);
        while self.bands.len() < other.bands.len() {
            let d = self.bands.len();
            self.bands.push(vec![0.0; self.dim.saturating_sub(d)]);
        }
        for (dst, src) in self.bands.iter_mut().zip(&other.bands) {
            for (a, &b) in dst.iter_mut().zip(src) {
                *a += alpha * b;
            }
        }
    }

    /// self = a·x + b·y for operators of equal shape.
    pub fn set_combination(&mut self, a: f64, x: &BandedOperator, b: f64, y: &BandedOperator) {
        assert!(self.dim == x.dim && self.dim == y.dim);
        assert!(self.bands.len() == x.bands.len() && self.bands.len() == y.bands.len());
        for ((dst, xs), ys) in self.bands.iter_mut().zip(&x.bands).zip(&y.bands) {
            for ((d, &u), &v) in dst.iter_mut().zip(xs).zip(ys) {
                *d = a * u + b * v;
            }
        }
    }

    /// Upper bound on the spectral radius (Gershgorin).
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                let lo = i.saturating_sub(self.half_bandwidth());
                let hi = (i + self.half_bandwidth()).min(self.dim - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Plain-text dump: one row per line, whitespace separated.
    pub fn to_text(&self) -> String {
        let dense = self.to_dense();
        let mut out = String::new();
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim).map(|j| format!("{:.17e}", dense[(i, j)])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// J² with eigenvalues J(J+1).
pub fn j_squared(basis: &BasisSpec) -> BandedOperator {
    BandedOperator::from_diagonal(
        (0..basis.dim())
            .map(|i| {
                let j = basis.j_of(i) as f64;
                j * (j + 1.0)
            })
            .collect(),
    )
}

/// cosθ, with ⟨J,M|cosθ|J+1,M⟩ = sqrt(((J+1)² − M²)/((2J+1)(2J+3))).
pub fn cos_matrix(basis: &BasisSpec) -> BandedOperator {
    let m2 = (basis.m as f64).powi(2);
    let mut op = BandedOperator::zeros(basis.dim(), 1);
    for (i, v) in op.bands[1].iter_mut().enumerate() {
        let j = basis.j_of(i) as f64;
        *v = (((j + 1.0).powi(2) - m2) / ((2.0 * j + 1.0) * (2.0 * j + 3.0))).sqrt();
    }
    op
}

/// cos^kθ, formed as a matrix power on the extended basis and then truncated.
pub fn cos_power_matrix(basis: &BasisSpec, k: u32) -> Result<BandedOperator> {
    if !(1..=3).contains(&k) {
        return Err(Error::UnsupportedCosPower(k));
    }
    if basis.buffer < k {
        return Err(Error::invalid(format!("basis buffer {} < power {k}", basis.buffer)));
    }
    let ext = cos_matrix(&basis.extended());
    let mut acc = ext.clone();
    for _ in 1..k {
        acc = acc.multiply(&ext);
    }
    Ok(acc.truncated(basis.dim()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InteractionFlags {
    pub include_mu: bool,
    pub include_alpha: bool,
    pub include_beta: bool,
}

impl InteractionFlags {
    pub const NONE: Self = Self::new(false, false, false);
    pub const MU: Self = Self::new(true, false, false);
    pub const MU_ALPHA: Self = Self::new(true, true, false);
    pub const ALL: Self = Self::new(true, true, true);

    pub const fn new(include_mu: bool, include_alpha: bool, include_beta: bool) -> Self {
        InteractionFlags {
            include_mu,
            include_alpha,
            include_beta,
        }
    }

    /// Parses `mu`, `alpha`, `beta` joined by `+` (or `none`).
    pub fn parse(s: &str) -> Result<Self> {
        let mut f = Self::NONE;
        if s.trim() == "none" {
            return Ok(f);
        }
        for part in s.split('+').map(str::trim) {
            match part {
                "mu" => f.include_mu = true,
                "alpha" => f.include_alpha = true,
                "beta" => f.include_beta = true,
                other => return Err(Error::invalid(format!("unknown interaction '{other}'"))),
            }
        }
        Ok(f)
    }

    pub fn label(&self) -> String {
        let parts: Vec<&str> = [
            (self.include_mu, "mu"),
            (self.include_alpha, "alpha"),
            (self.include_beta, "beta"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, n)| *n)
        .collect();
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("+")
        }
    }
}

/// The operators every Hamiltonian on a basis is built from.
#[derive(Debug, Clone)]
pub struct RotorOperators {
    pub basis: BasisSpec,
    pub j2: BandedOperator,
    /// cos^kθ for k = 1, 2, 3.
    pub cos: [BandedOperator; 3],
}

impl RotorOperators {
    pub fn new(basis: BasisSpec) -> Result<Self> {
        basis.validate()?;
        Ok(RotorOperators {
            basis,
            j2: j_squared(&basis),
            cos: [
                cos_power_matrix(&basis, 1)?,
                cos_power_matrix(&basis, 2)?,
                cos_power_matrix(&basis, 3)?,
            ],
        })
    }

    pub fn cos_power(&self, k: u32) -> Result<&BandedOperator> {
        match k {
            1..=3 => Ok(&self.cos[k as usize - 1]),
            _ => Err(Error::UnsupportedCosPower(k)),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// H = B J² + c₀ I + Σₖ cₖ cos^kθ written into `out`.
    pub fn fill(&self, b: f64, c: &InteractionCoefficients, out: &mut BandedOperator) {
        debug_assert_eq!(out.dim, self.dim());
        debug_assert_eq!(out.bands.len(), MAX_HALF_BANDWIDTH + 1);
        for band in out.bands.iter_mut() {
            band.fill(0.0);
        }
        for (dst, &j2) in out.bands[0].iter_mut().zip(&self.j2.bands[0]) {
            *dst = b * j2 + c.identity;
        }
        for (op, coef) in self.cos.iter().zip([c.cos1, c.cos2, c.cos3]) {
            if coef == 0.0 {
                continue;
            }
            for (dst, src) in out.bands.iter_mut().zip(&op.bands) {
                for (a, &s) in dst.iter_mut().zip(src) {
                    *a += coef * s;
                }
            }
        }
    }
}

/// Scalar prefactors of I, cosθ, cos²θ, cos³θ in the interaction.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InteractionCoefficients {
    pub identity: f64,
    pub cos1: f64,
    pub cos2: f64,
    pub cos3: f64,
}

impl InteractionCoefficients {
    /// From the field moments E, ⟨E²⟩ and ⟨E³⟩ (instantaneous or cycle-averaged).
    pub fn from_moments(p: &InternalParams, flags: InteractionFlags, e1: f64, e2: f64, e3: f64) -> Self {
        let mut c = Self::default();
        if flags.include_mu {
            c.cos1 -= p.mu * e1;
        }
        if flags.include_alpha {
            c.cos2 -= 0.5 * p.dalpha * e2;
            c.identity -= 0.5 * p.alpha_perp * e2;
        }
        if flags.include_beta {
            c.cos3 -= p.dbeta * e3 / 6.0;
            c.cos1 -= 0.5 * p.beta_perp * e3;
        }
        c
    }

    pub fn instantaneous(p: &InternalParams, flags: InteractionFlags, e: f64) -> Self {
        Self::from_moments(p, flags, e, e * e, e * e * e)
    }

    /// Cycle-averaged interaction; the dipole term averages to zero.
    pub fn time_averaged(p: &InternalParams, flags: InteractionFlags, spec: &FieldSpec) -> Self {
        let f = time_averaged_coefficients(spec);
        let flags = InteractionFlags {
            include_mu: false,
            ..flags
        };
        Self::from_moments(p, flags, 0.0, f.f1, f.f2)
    }
}

/// H(t) = B J² − μ cosθ E − ½(Δα cos²θ + α⊥) E² − ⅙(Δβ cos³θ + 3β⊥ cosθ) E³.
pub fn assemble_hamiltonian(
    p: &InternalParams,
    spec: &FieldSpec,
    flags: InteractionFlags,
    basis: &BasisSpec,
    t: f64,
) -> Result<BandedOperator> {
    let ops = RotorOperators::new(*basis)?;
    let c = InteractionCoefficients::instantaneous(p, flags, spec.evaluate(t));
    let mut h = BandedOperator::zeros(ops.dim(), MAX_HALF_BANDWIDTH);
    ops.fill(p.b, &c, &mut h);
    Ok(h)
}

/// Time-averaged Hamiltonian B J² − ½(Δα cos²θ + α⊥) f1 − ⅙(Δβ cos³θ + 3β⊥ cosθ) f2.
pub fn assemble_time_averaged(
    p: &InternalParams,
    spec: &FieldSpec,
    flags: InteractionFlags,
    basis: &BasisSpec,
) -> Result<BandedOperator> {
    let ops = RotorOperators::new(*basis)?;
    let c = InteractionCoefficients::time_averaged(p, flags, spec);
    let mut h = BandedOperator::zeros(ops.dim(), MAX_HALF_BANDWIDTH);
    ops.fill(p.b, &c, &mut h);
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{to_internal, MoleculeParams};
    use nalgebra::SymmetricEigen;

    fn basis(m: i32, jmax: u32) -> BasisSpec {
        BasisSpec::new(m, jmax).unwrap()
    }

    fn assert_symmetric(op: &BandedOperator) {
        let d = op.to_dense();
        assert_eq!(d, d.transpose());
    }

    #[test]
    fn j_squared_diagonal() {
        let j = j_squared(&basis(0, 4));
        assert_eq!(j.band(0), &[0.0, 2.0, 6.0, 12.0, 20.0]);
        assert_eq!(j.half_bandwidth(), 0);
        assert_eq!(j_squared(&basis(2, 5)).get(0, 0), 6.0);
    }

    #[test]
    fn cos_matrix_elements() {
        let c = cos_matrix(&basis(0, 10));
        assert!((c.get(0, 1) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(c.band(0).iter().all(|&v| v == 0.0));
        let c1 = cos_matrix(&basis(1, 10));
        assert!((c1.get(0, 1) - (3.0f64 / 15.0).sqrt()).abs() < 1e-15);
        assert_symmetric(&c);
    }

    #[test]
    fn cos_squared_known_elements() {
        let c2 = cos_power_matrix(&basis(0, 10), 2).unwrap();
        assert!((c2.get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((c2.get(1, 1) - 3.0 / 5.0).abs() < 1e-15);
        assert_eq!(c2.half_bandwidth(), 2);
        assert_eq!(cos_power_matrix(&basis(0, 10), 3).unwrap().half_bandwidth(), 3);
        assert!(matches!(
            cos_power_matrix(&basis(0, 10), 4),
            Err(Error::UnsupportedCosPower(4))
        ));
    }

    #[test]
    fn powers_from_extended_basis_do_not_lose_edge_couplings() {
        let b = basis(0, 6);
        let ext = cos_power_matrix(&b, 2).unwrap();
        let naive = cos_matrix(&b).multiply(&cos_matrix(&b));
        // the last diagonal element needs the coupling through Jmax + 1
        assert!(ext.get(6, 6) > naive.get(6, 6) + 0.1);
        assert_eq!(ext.get(3, 3), naive.get(3, 3));
    }

    #[test]
    fn truncation_consistency_across_buffers() {
        let mut small = basis(1, 30);
        let mut large = small;
        small.buffer = 3;
        large.buffer = 10;
        for k in 1..=3 {
            let a = cos_power_matrix(&small, k).unwrap();
            let b = cos_power_matrix(&large, k).unwrap();
            let lim = small.dim() - k as usize;
            for i in 0..lim {
                for j in 0..lim {
                    assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn cos_power_spectra_within_unit_interval() {
        for k in 1..=3 {
            for m in [0, 2] {
                let op = cos_power_matrix(&basis(m, 24), k).unwrap();
                assert_symmetric(&op);
                let ev = SymmetricEigen::new(op.to_dense()).eigenvalues;
                for v in ev.iter() {
                    assert!(v.abs() <= 1.0 + 1e-6, "k={k} m={m} eigenvalue {v}");
                    if k == 2 {
                        assert!(*v >= -1e-6);
                    }
                }
            }
        }
    }

    fn ocs() -> InternalParams {
        to_internal(&MoleculeParams::OCS).unwrap()
    }

    #[test]
    fn field_free_limits() {
        let p = ocs();
        let b = basis(0, 12);
        let spec = FieldSpec::two_color(0.01, 0.01, 1, 2, 1000.0, 0.5);
        let h = assemble_hamiltonian(&p, &spec, InteractionFlags::NONE, &b, 3.0).unwrap();
        let j2 = j_squared(&b);
        for i in 0..b.dim() {
            assert_eq!(h.get(i, i), p.b * j2.get(i, i));
            if i + 1 < b.dim() {
                assert_eq!(h.get(i, i + 1), 0.0);
            }
        }
        let zero = FieldSpec::zero(1000.0);
        let h0 = assemble_hamiltonian(&p, &zero, InteractionFlags::ALL, &b, 3.0).unwrap();
        assert_eq!(h0.to_dense(), h.to_dense());
    }

    #[test]
    fn dipole_band_matches_cos_matrix() {
        let p = ocs();
        let b = basis(0, 12);
        let spec = FieldSpec::two_color(0.004, 0.002, 1, 2, 16000.0, 1.0);
        let t = 1234.5;
        let e = spec.evaluate(t);
        let h = assemble_hamiltonian(&p, &spec, InteractionFlags::MU, &b, t).unwrap();
        let c = cos_matrix(&b);
        for i in 0..b.dim() - 1 {
            assert!((h.get(i, i + 1) + p.mu * e * c.get(i, i + 1)).abs() < 1e-18);
        }
        assert_symmetric(&h);
    }

    #[test]
    fn alpha_only_structure() {
        let p = ocs();
        let b = basis(0, 12);
        // constant field: q1 = q2 with equal phases and t chosen so the cosines are 1
        let spec = FieldSpec::two_color(0.003, 0.0, 1, 2, 16000.0, 0.0);
        let e = spec.evaluate(0.0);
        let h = assemble_hamiltonian(&p, &spec, InteractionFlags::new(false, true, false), &b, 0.0).unwrap();
        let c2 = cos_power_matrix(&b, 2).unwrap();
        let j2 = j_squared(&b);
        for i in 0..b.dim() {
            let expect = p.b * j2.get(i, i) - (p.alpha_perp + p.dalpha * c2.get(i, i)) * e * e / 2.0;
            assert!((h.get(i, i) - expect).abs() < 1e-18);
            if i + 1 < b.dim() {
                assert_eq!(h.get(i, i + 1), 0.0);
            }
        }
        assert!(h.get(0, 2) != 0.0);
        assert!(b.dim() > 3 && h.get(0, 3) == 0.0);
    }

    #[test]
    fn time_averaged_examples() {
        let p = ocs();
        let b = basis(0, 10);
        let flags = InteractionFlags::ALL;
        // q = (1,3): no cubic term survives
        let s13 = FieldSpec::two_color(0.003, 0.002, 1, 3, 16000.0, 0.4);
        let h13 = assemble_time_averaged(&p, &s13, flags, &b).unwrap();
        assert_eq!(h13.get(0, 1), 0.0);
        assert_eq!(h13.get(0, 3), 0.0);
        // q = (1,2), δ2 = π/2: cos(2δ1 − δ2) = 0
        let s12 = FieldSpec::two_color(0.003, 0.002, 1, 2, 16000.0, std::f64::consts::FRAC_PI_2);
        let h12 = assemble_time_averaged(&p, &s12, flags, &b).unwrap();
        assert!(h12.get(0, 3).abs() < 1e-20);
        // one-color: f1 = ε1²/2
        let one = FieldSpec::two_color(0.003, 0.0, 1, 2, 16000.0, 0.0);
        let h1 = assemble_time_averaged(&p, &one, flags, &b).unwrap();
        let c2 = cos_power_matrix(&b, 2).unwrap();
        let f1 = 0.003f64.powi(2) / 2.0;
        let expect = -(p.alpha_perp + p.dalpha * c2.get(0, 0)) * f1 / 2.0;
        assert!((h1.get(0, 0) - expect).abs() < 1e-20);
        assert_eq!(h1.get(0, 3), 0.0);
    }

    #[test]
    fn flags_round_trip() {
        for f in [InteractionFlags::NONE, InteractionFlags::MU, InteractionFlags::MU_ALPHA, InteractionFlags::ALL] {
            assert_eq!(InteractionFlags::parse(&f.label()).unwrap(), f);
        }
        assert!(InteractionFlags::parse("mu+gamma").is_err());
    }

    #[test]
    fn basis_validation() {
        assert!(BasisSpec::new(3, 2).is_err());
        let b = BasisSpec { m: 0, jmax: 5, buffer: 2 };
        assert!(b.validate().is_err());
        let b = basis(-2, 6);
        assert_eq!(b.dim(), 5);
        assert_eq!(b.index_of(2), Some(0));
        assert_eq!(b.index_of(1), None);
    }
}
