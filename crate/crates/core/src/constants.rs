//! Physical constants, loaded from a versioned TOML data file.
//!
//! Public energies are frequencies `E/h` in MHz, fields in mT and lengths in
//! micrometres. Atomic units appear only inside the matrix-element layer.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The constants file shipped with the crate.
pub const DEFAULT_CONSTANTS_TOML: &str = include_str!("../data/constants.toml");

/// Raw contents of a constants file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantsFile {
    pub codata_version: String,
    pub atom: String,
    pub rydberg_infinity_mhz: f64,
    pub hartree_mhz: f64,
    pub bohr_radius_um: f64,
    pub bohr_magneton_mhz_per_mt: f64,
    pub electron_g_factor: f64,
    pub electron_mass_u: f64,
    pub atom_mass_u: f64,
    pub atomic_mass_unit_kg: f64,
    pub boltzmann_j_per_k: f64,
    pub planck_j_s: f64,
}

/// Derived constants used throughout the crate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Reduced-mass-corrected Rydberg frequency of the atom, MHz.
    pub rydberg_frequency: f64,
    /// Bohr radius, um.
    pub bohr_radius: f64,
    /// Bohr magneton over h, MHz/mT.
    pub bohr_magneton_over_h: f64,
    /// Electron spin g factor (positive convention).
    pub electron_g_factor: f64,
    /// Orbital g factor `1 - m_e/M`.
    pub orbital_g_factor: f64,
    /// Hartree energy over h, MHz.
    pub hartree_frequency: f64,
    /// Atomic mass, kg.
    pub atom_mass: f64,
    /// Boltzmann constant over h, MHz/K.
    pub boltzmann_over_h: f64,
    /// Boltzmann constant, J/K.
    pub boltzmann: f64,
    pub codata_version: String,
    /// SHA-256 of the source file contents.
    pub source_hash: String,
}

impl PhysicalConstants {
    pub fn rb87() -> Self {
        Self::from_toml_str(DEFAULT_CONSTANTS_TOML).expect("shipped constants file is valid")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: ConstantsFile =
            toml::from_str(text).map_err(|e| Error::Parse(format!("constants file: {e}")))?;
        let mass_ratio = raw.electron_mass_u / raw.atom_mass_u;
        let consts = PhysicalConstants {
            rydberg_frequency: raw.rydberg_infinity_mhz / (1.0 + mass_ratio),
            bohr_radius: raw.bohr_radius_um,
            bohr_magneton_over_h: raw.bohr_magneton_mhz_per_mt,
            electron_g_factor: raw.electron_g_factor,
            orbital_g_factor: 1.0 - mass_ratio,
            hartree_frequency: raw.hartree_mhz,
            atom_mass: raw.atom_mass_u * raw.atomic_mass_unit_kg,
            boltzmann_over_h: raw.boltzmann_j_per_k / raw.planck_j_s * 1e-6,
            boltzmann: raw.boltzmann_j_per_k,
            codata_version: raw.codata_version,
            source_hash: hex::encode(Sha256::digest(text.as_bytes())),
        };
        consts.validate()?;
        Ok(consts)
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("rydberg_frequency", self.rydberg_frequency),
            ("bohr_radius", self.bohr_radius),
            ("bohr_magneton_over_h", self.bohr_magneton_over_h),
            ("electron_g_factor", self.electron_g_factor),
            ("orbital_g_factor", self.orbital_g_factor),
            ("hartree_frequency", self.hartree_frequency),
            ("atom_mass", self.atom_mass),
            ("boltzmann_over_h", self.boltzmann_over_h),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!("constant {name} must be positive, got {value}")));
            }
        }
        // The reduced-mass correction lowers Ry below Eh/2 by less than 1e-4.
        let half_hartree = self.hartree_frequency / 2.0;
        if self.rydberg_frequency > half_hartree * (1.0 + 1e-12)
            || self.rydberg_frequency < half_hartree * (1.0 - 1e-4)
        {
            return Err(Error::Config(format!(
                "rydberg frequency {} MHz inconsistent with hartree/2 = {} MHz",
                self.rydberg_frequency, half_hartree
            )));
        }
        Ok(())
    }

    /// `sqrt(k_B T / m)` in m/s for a temperature in uK.
    pub fn thermal_velocity(&self, temperature_uk: f64) -> f64 {
        (self.boltzmann * temperature_uk * 1e-6 / self.atom_mass).sqrt()
    }

    /// Converts a length in um to bohr.
    pub fn um_to_bohr(&self, length_um: f64) -> f64 {
        length_um / self.bohr_radius
    }
}
