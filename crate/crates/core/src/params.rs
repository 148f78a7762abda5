//! Molecular constants and unit conversions.
//!
//! Everything downstream of this module works in atomic units (ħ = 1,
//! energies in Hartree, times in a.u. of time, fields in a.u. of field).
//! The conversion factors below are the only place laboratory units enter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1 Debye in atomic units of dipole moment (e·a0).
pub const DEBYE_TO_AU: f64 = 0.3934303;
/// 1 cm⁻¹ in Hartree.
pub const WAVENUMBER_TO_HARTREE: f64 = 4.5563353e-6;
/// 1 atomic unit of time in femtoseconds.
pub const AU_TIME_FS: f64 = 0.02418884;
/// 1 atomic unit of electric field in V/cm.
pub const AU_FIELD_V_PER_CM: f64 = 5.14220675e9;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT_SI: f64 = 299_792_458.0;
/// Speed of light, cm/s.
pub const SPEED_OF_LIGHT_CGS: f64 = 2.99792458e10;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY_SI: f64 = 8.8541878128e-12;

pub fn fs_to_au(t_fs: f64) -> f64 {
    t_fs / AU_TIME_FS
}

pub fn au_to_fs(t_au: f64) -> f64 {
    t_au * AU_TIME_FS
}

pub fn ps_to_au(t_ps: f64) -> f64 {
    fs_to_au(t_ps * 1e3)
}

pub fn au_to_ps(t_au: f64) -> f64 {
    au_to_fs(t_au) * 1e-3
}

/// Molecular constants in laboratory units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoleculeParams {
    /// Rotational constant, cm⁻¹.
    pub b: f64,
    /// Permanent dipole moment, Debye.
    pub mu: f64,
    /// Polarizability anisotropy Δα = α∥ − α⊥, a.u.
    pub dalpha: f64,
    /// Perpendicular polarizability α⊥, a.u.
    pub alpha_perp: f64,
    /// Hyperpolarizability anisotropy Δβ = β∥ − 3β⊥, a.u.
    pub dbeta: f64,
    /// Perpendicular hyperpolarizability β⊥, a.u.
    pub beta_perp: f64,
}

impl MoleculeParams {
    /// Carbonyl sulfide.
    pub const OCS: MoleculeParams = MoleculeParams {
        b: 0.20286,
        mu: 0.71,
        dalpha: 27.26,
        alpha_perp: 26.08,
        dbeta: 132.3,
        beta_perp: -59.1,
    };

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("b", self.b),
            ("mu", self.mu),
            ("dalpha", self.dalpha),
            ("alpha_perp", self.alpha_perp),
            ("dbeta", self.dbeta),
            ("beta_perp", self.beta_perp),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("molecule field {name} is not finite ({v})")));
        }
        if self.b <= 0.0 {
            return Err(Error::invalid(format!(
                "rotational constant must be positive, got {} cm^-1",
                self.b
            )));
        }
        Ok(())
    }
}

impl Default for MoleculeParams {
    fn default() -> Self {
        Self::OCS
    }
}

/// Molecular constants in atomic units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InternalParams {
    /// Rotational constant, Hartree.
    pub b: f64,
    pub mu: f64,
    pub dalpha: f64,
    pub alpha_perp: f64,
    pub dbeta: f64,
    pub beta_perp: f64,
    /// Rotational period π/B, a.u. of time.
    pub t_rot: f64,
}

pub fn to_internal(p: &MoleculeParams) -> Result<InternalParams> {
    p.validate()?;
    let b = p.b * WAVENUMBER_TO_HARTREE;
    Ok(InternalParams {
        b,
        mu: p.mu * DEBYE_TO_AU,
        dalpha: p.dalpha,
        alpha_perp: p.alpha_perp,
        dbeta: p.dbeta,
        beta_perp: p.beta_perp,
        t_rot: std::f64::consts::PI / b,
    })
}

impl InternalParams {
    /// Inverse of [`to_internal`].
    pub fn to_lab(&self) -> MoleculeParams {
        MoleculeParams {
            b: self.b / WAVENUMBER_TO_HARTREE,
            mu: self.mu / DEBYE_TO_AU,
            dalpha: self.dalpha,
            alpha_perp: self.alpha_perp,
            dbeta: self.dbeta,
            beta_perp: self.beta_perp,
        }
    }
}

/// Rotational period T_rot = 1/(2Bc) in picoseconds, B in cm⁻¹.
pub fn rotational_period(b_cm: f64) -> Result<f64> {
    if !(b_cm > 0.0) || !b_cm.is_finite() {
        return Err(Error::invalid(format!(
            "rotational constant must be positive, got {b_cm}"
        )));
    }
    Ok(1e12 / (2.0 * b_cm * SPEED_OF_LIGHT_CGS))
}

/// Peak field strength in both unit systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldStrength {
    pub v_per_cm: f64,
    pub au: f64,
}

/// Peak field E0 = sqrt(2I/(c ε0)) for a laser intensity in W/cm².
pub fn intensity_to_field(intensity_w_cm2: f64) -> Result<FieldStrength> {
    if !(intensity_w_cm2 >= 0.0) || !intensity_w_cm2.is_finite() {
        return Err(Error::invalid(format!(
            "intensity must be a finite non-negative number, got {intensity_w_cm2}"
        )));
    }
    let intensity_si = intensity_w_cm2 * 1e4;
    let e_si = (2.0 * intensity_si / (SPEED_OF_LIGHT_SI * VACUUM_PERMITTIVITY_SI)).sqrt();
    let v_per_cm = e_si * 1e-2;
    Ok(FieldStrength {
        v_per_cm,
        au: v_per_cm / AU_FIELD_V_PER_CM,
    })
}
