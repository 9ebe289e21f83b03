//! Atomic species data for the four-level scheme |1⟩..|4⟩.
//!
//! |1⟩, |2⟩ are the two ²S₁/₂ ground sublevels; |3⟩ is a ²P₁/₂ sublevel
//! (photon absorption channel) and |4⟩ a ²P₃/₂ sublevel (cycling readout
//! channel). All fields are SI.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::ATOMIC_MASS_UNIT;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Immutable physical data for the active atom.
///
/// `a_31` and `a_24` are total spontaneous decay rates (inverse lifetimes,
/// s⁻¹). The |4⟩→|2⟩ rate is written A₂₄ or A₄₂ interchangeably; a single
/// constant backs both spellings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicSpecies<S> {
    pub name: String,
    /// Atomic mass (kg).
    pub mass: S,
    /// Collisional cross-section (m²).
    pub sigma_col: S,
    /// Spontaneous decay rate of |3⟩→|1⟩ (s⁻¹).
    pub a_31: S,
    /// Decay rate of the |4⟩→|2⟩ cycling transition (s⁻¹).
    pub a_24: S,
    /// |1⟩↔|3⟩ transition wavelength (m).
    pub lambda_31: S,
    /// |2⟩↔|4⟩ transition wavelength (m).
    pub lambda_24: S,
}

impl<S: Scalar> AtomicSpecies<S> {
    /// Built-in cesium preset.
    ///
    /// Rates are the D1/D2 inverse lifetimes (τ = 34.894 ns and 30.473 ns),
    /// wavelengths the D1/D2 vacuum values, mass 132.90545196 u, and the
    /// collisional cross-section the generic alkali figure 1e-14 cm².
    pub fn cesium() -> Self {
        AtomicSpecies {
            name: "cesium".to_string(),
            mass: S::of(132.905_451_96 * ATOMIC_MASS_UNIT),
            sigma_col: S::of(1e-18),
            a_31: S::of(1.0 / 34.894e-9),
            a_24: S::of(1.0 / 30.473e-9),
            lambda_31: S::of(894.593e-9),
            lambda_24: S::of(852.347e-9),
        }
    }

    /// A₄₂ spelling of the cycling-transition decay rate.
    pub fn a_42(&self) -> S {
        self.a_24
    }

    /// Loads a species record from a JSON file (fields as named, SI units).
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let species: AtomicSpecies<S> = serde_json::from_str(text)?;
        species.validate()?;
        Ok(species)
    }

    /// Rates, masses and lengths must be strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("sigma_col", self.sigma_col),
            ("a_31", self.a_31),
            ("a_24", self.a_24),
            ("lambda_31", self.lambda_31),
            ("lambda_24", self.lambda_24),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > S::zero()) {
                return Err(Error::invalid(format!(
                    "species field {name} must be finite and positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}
