//! Universal physical constants (SI units, CODATA 2018).
//!
//! Everything downstream computes in SI. Mixed units (cm⁻³, mm, ns, GHz, mK)
//! are accepted only at the input boundary and converted on ingest, see
//! [`crate::input`].

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Speed of light in vacuum (m/s, exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Unified atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Universal constants used by the detector model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants<S> {
    /// Boltzmann constant (J/K).
    pub k_b: S,
    /// Reduced Planck constant (J·s).
    pub hbar: S,
    /// Planck constant (J·s).
    pub h: S,
    /// Bohr magneton (J/T).
    pub mu_b: S,
    /// Vacuum permittivity (F/m).
    pub eps_0: S,
}

impl<S: Scalar> PhysicalConstants<S> {
    /// CODATA 2018 values. `hbar` is derived from the exact `h` so that
    /// `h = 2π·hbar` holds to machine precision.
    pub fn standard() -> Self {
        let h = 6.626_070_15e-34;
        PhysicalConstants {
            k_b: S::of(1.380_649e-23),
            hbar: S::of(h / (2.0 * std::f64::consts::PI)),
            h: S::of(h),
            mu_b: S::of(9.274_010_078_3e-24),
            eps_0: S::of(8.854_187_812_8e-12),
        }
    }

    /// Relative deviation of `h` from `2π·hbar`.
    pub fn planck_consistency(&self) -> S {
        let two_pi_hbar = S::of(2.0) * S::PI() * self.hbar;
        ((self.h - two_pi_hbar) / self.h).abs()
    }

    pub fn all_positive(&self) -> bool {
        [self.k_b, self.hbar, self.h, self.mu_b, self.eps_0]
            .iter()
            .all(|v| *v > S::zero())
    }
}

impl<S: Scalar> Default for PhysicalConstants<S> {
    fn default() -> Self {
        Self::standard()
    }
}
