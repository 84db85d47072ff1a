//! Natural ↔ SI conversion.
//!
//! Internally `ħ = c = 1` and wavenumbers are measured in `k_ref` (m⁻¹).
//! Then energy is in `ħ c k_ref`, momentum in `ħ k_ref`, mass in
//! `ħ k_ref / c` and length in `1/k_ref`.

use serde::{Deserialize, Serialize};

/// Reduced Planck constant, J·s (CODATA 2018, exact).
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s (exact).
pub const C_SI: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    Si,
    Natural,
}

/// Converter for a given reference wavenumber and constants.
///
/// The constants are parameters so that tests can rescale `ħ`; production
/// code uses [`UnitScale::si`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitScale {
    pub k_ref: f64,
    pub hbar: f64,
    pub c: f64,
}

impl UnitScale {
    pub fn si(k_ref: f64) -> Self {
        Self { k_ref, hbar: HBAR_SI, c: C_SI }
    }

    pub fn wavenumber_to_natural(&self, k_si: f64) -> f64 {
        k_si / self.k_ref
    }
    pub fn wavenumber_to_si(&self, k: f64) -> f64 {
        k * self.k_ref
    }
    pub fn length_to_natural(&self, x_si: f64) -> f64 {
        x_si * self.k_ref
    }
    pub fn length_to_si(&self, x: f64) -> f64 {
        x / self.k_ref
    }
    pub fn energy_to_si(&self, e: f64) -> f64 {
        e * self.hbar * self.c * self.k_ref
    }
    pub fn energy_to_natural(&self, e_si: f64) -> f64 {
        e_si / (self.hbar * self.c * self.k_ref)
    }
    pub fn momentum_to_si(&self, p: f64) -> f64 {
        p * self.hbar * self.k_ref
    }
    pub fn mass_to_si(&self, m: f64) -> f64 {
        m * self.hbar * self.k_ref / self.c
    }
    pub fn mass_to_natural(&self, m_si: f64) -> f64 {
        m_si * self.c / (self.hbar * self.k_ref)
    }
    pub fn time_to_si(&self, t: f64) -> f64 {
        t / (self.c * self.k_ref)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_round_trip() {
        let u = UnitScale::si(7.3e6);
        let e = 2.718;
        let back = u.energy_to_natural(u.energy_to_si(e));
        assert!((back - e).abs() / e < 1e-15);
        let m = 0.42;
        assert!((u.mass_to_natural(u.mass_to_si(m)) - m).abs() / m < 1e-15);
    }

    #[test]
    fn mass_energy_consistency() {
        let u = UnitScale::si(1.0e7);
        // E = m c²
        let m = 1.5;
        assert!((u.mass_to_si(m) * C_SI * C_SI - u.energy_to_si(m)).abs() / u.energy_to_si(m) < 1e-15);
    }
}
