//! Recoil-unit system and SI conversions.
//!
//! Every other module is dimensionless: energy in `E_r`, length in `1/k`,
//! time in `ħ/E_r`, velocity in `E_r/(ħk)` and momentum in `ħk`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Planck constant, CODATA 2018 (exact).
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// Atomic mass unit, CODATA 2018.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of ⁸⁷Rb, 86.909180531 u.
pub const RB87_MASS: f64 = 86.909_180_531 * ATOMIC_MASS_UNIT;
/// Lattice laser wavelength used for the λ/2 standing wave.
pub const LATTICE_WAVELENGTH: f64 = 783e-9;
pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    wavelength: f64,
    atom_mass: f64,
    hbar: f64,
    planck_h: f64,
    gravity: f64,
}

impl PhysicalConstants {
    /// `hbar` is derived from `planck_h`. Gravity may be zero (no tilt); the
    /// other inputs must be strictly positive and finite.
    pub fn new(wavelength: f64, atom_mass: f64, planck_h: f64, gravity: f64) -> Result<Self> {
        for (name, v) in [("wavelength", wavelength), ("atom_mass", atom_mass), ("planck_h", planck_h)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(gravity.is_finite() && gravity >= 0.0) {
            return Err(Error::invalid("gravity", format!("must be non-negative and finite, got {gravity}")));
        }
        Ok(Self { wavelength, atom_mass, hbar: planck_h / (2.0 * PI), planck_h, gravity })
    }

    /// ⁸⁷Rb in a 783 nm lattice under standard gravity.
    pub fn rb87() -> Self {
        Self::new(LATTICE_WAVELENGTH, RB87_MASS, PLANCK_H, STANDARD_GRAVITY).expect("valid constants")
    }

    pub fn with_wavelength(self, wavelength: f64) -> Result<Self> {
        Self::new(wavelength, self.atom_mass, self.planck_h, self.gravity)
    }

    pub fn with_atom_mass(self, atom_mass: f64) -> Result<Self> {
        Self::new(self.wavelength, atom_mass, self.planck_h, self.gravity)
    }

    pub fn with_gravity(self, gravity: f64) -> Result<Self> {
        Self::new(self.wavelength, self.atom_mass, self.planck_h, gravity)
    }

    pub fn with_planck_h(self, planck_h: f64) -> Result<Self> {
        Self::new(self.wavelength, self.atom_mass, planck_h, self.gravity)
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }
    pub fn atom_mass(&self) -> f64 {
        self.atom_mass
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn planck_h(&self) -> f64 {
        self.planck_h
    }
    pub fn gravity(&self) -> f64 {
        self.gravity
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::rb87()
    }
}

/// Photon wavevector, recoil energy and the derived unit scales.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoilScale {
    pub k: f64,
    pub recoil_energy: f64,
    pub length_unit: f64,
    pub time_unit: f64,
    pub velocity_unit: f64,
    hbar: f64,
}

pub fn recoil_scale(c: &PhysicalConstants) -> RecoilScale {
    let k = 2.0 * PI / c.wavelength;
    let recoil_energy = c.hbar * c.hbar * k * k / (2.0 * c.atom_mass);
    RecoilScale {
        k,
        recoil_energy,
        length_unit: 1.0 / k,
        time_unit: c.hbar / recoil_energy,
        velocity_unit: recoil_energy / (c.hbar * k),
        hbar: c.hbar,
    }
}

impl RecoilScale {
    /// Recoil energy expressed as a frequency `E_r/h` in Hz.
    pub fn recoil_frequency(&self) -> f64 {
        self.recoil_energy / (2.0 * PI * self.hbar)
    }

    pub fn length_to_si(&self, z: f64) -> f64 {
        z * self.length_unit
    }
    pub fn length_from_si(&self, meters: f64) -> f64 {
        meters / self.length_unit
    }
    pub fn time_to_si(&self, t: f64) -> f64 {
        t * self.time_unit
    }
    pub fn time_from_si(&self, seconds: f64) -> f64 {
        seconds / self.time_unit
    }
    pub fn energy_to_si(&self, e: f64) -> f64 {
        e * self.recoil_energy
    }
    pub fn energy_from_si(&self, joules: f64) -> f64 {
        joules / self.recoil_energy
    }
    pub fn velocity_to_si(&self, v: f64) -> f64 {
        v * self.velocity_unit
    }
    pub fn velocity_from_si(&self, mps: f64) -> f64 {
        mps / self.velocity_unit
    }
}

/// Dimensionless coefficient `m g / (k E_r)` of the `-z` term in the slow potential.
pub fn gravity_slope(c: &PhysicalConstants) -> f64 {
    let s = recoil_scale(c);
    c.atom_mass * c.gravity / (s.k * s.recoil_energy)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightSpeed {
    /// m/s
    pub si: f64,
    /// E_r/(ħk); 4 by construction.
    pub dimensionless: f64,
}

/// Effective light speed `2ħk/m` of the lattice Dirac point.
pub fn c_eff_physical(c: &PhysicalConstants) -> LightSpeed {
    let s = recoil_scale(c);
    let si = 2.0 * c.hbar * s.k / c.atom_mass;
    LightSpeed { si, dimensionless: si / s.velocity_unit }
}
