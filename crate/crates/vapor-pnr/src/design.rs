//! Detector design: the full tunable parameter set for one detector instance.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::species::AtomicSpecies;

/// One detector instance: cell, drive, and readout parameters. All SI.
///
/// Frequencies (`omega_e`, `detuning`, `omega_r`) are stored as ordinary
/// frequencies in s⁻¹, not angular; formulas that need the angular form
/// apply the 2π factor explicitly at the call site (see
/// [`crate::model::FrequencyConvention`]). Decay rates live on
/// [`AtomicSpecies`] and are inverse lifetimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorDesign<S> {
    pub species: AtomicSpecies<S>,
    /// Atom number density n (m⁻³).
    pub n_density: S,
    /// Vapor temperature T (K).
    pub temperature: S,
    /// Cell length ℓ_cell (m).
    pub cell_length: S,
    /// Beam cross-section area A (m²).
    pub beam_area: S,
    /// Number of passes q through the cell.
    pub passes: u32,
    /// Static magnetic field B (T).
    pub b_field: S,
    /// Photon and escort pulse duration T_p (s).
    pub pulse_duration: S,
    /// Escort Rabi frequency Ω_e (s⁻¹).
    pub omega_e: S,
    /// Detuning Δ of photon and escort from the upper level (s⁻¹).
    pub detuning: S,
    /// Wavelength of the photon to be detected (m).
    pub photon_wavelength: S,
    /// Readout laser Rabi frequency Ω_r (s⁻¹).
    pub omega_r: S,
    /// Overall imaging detection efficiency η_det ∈ (0,1].
    pub eta_det: S,
    /// Upconversion pre-efficiency η_up ∈ (0,1]; 1 when no upconversion stage.
    pub eta_up: S,
}

/// One unit/range violation found by [`DetectorDesign::validate_units`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Violation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Model-validity warning: the design is numerically usable but sits outside
/// an approximation's comfort zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityWarning {
    pub field: String,
    pub message: String,
}

impl<S: Scalar> DetectorDesign<S> {
    /// Cesium cell reference design: n = 1e9 cm⁻³, T = 1 mK, T_p = 10 ns,
    /// Δ = 0.5 GHz, Ω_e = A₃₁, ℓ_cell = 2 mm, A = 1e-2 mm², q = 100,
    /// B = 1 T, Ω_r = 0.01·A₂₄, η_det = 1/8.
    pub fn reference_cesium() -> Self {
        let species = AtomicSpecies::cesium();
        let omega_e = species.a_31;
        let omega_r = S::of(0.01) * species.a_24;
        let photon_wavelength = species.lambda_31;
        DetectorDesign {
            species,
            n_density: S::of(1e15),
            temperature: S::of(1e-3),
            cell_length: S::of(2e-3),
            beam_area: S::of(1e-8),
            passes: 100,
            b_field: S::one(),
            pulse_duration: S::of(1e-8),
            omega_e,
            detuning: S::of(0.5e9),
            photon_wavelength,
            omega_r,
            eta_det: S::of(0.125),
            eta_up: S::one(),
        }
    }

    /// Checks that every field is finite, positive where required, and within
    /// its documented sanity range. Returns one entry per offending field;
    /// an empty list means the design is usable.
    pub fn validate_units(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        if let Err(e) = self.species.validate() {
            out.push(Violation::new("species", e.to_string()));
        }
        if !(self.species.sigma_col >= S::of(1e-20) && self.species.sigma_col <= S::of(1e-16)) {
            out.push(Violation::new(
                "species.sigma_col",
                "outside the [1e-20, 1e-16] m² alkali sanity range",
            ));
        }

        let positive = [
            ("n_density", self.n_density),
            ("temperature", self.temperature),
            ("cell_length", self.cell_length),
            ("beam_area", self.beam_area),
            ("pulse_duration", self.pulse_duration),
            ("detuning", self.detuning),
            ("photon_wavelength", self.photon_wavelength),
            ("omega_r", self.omega_r),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > S::zero()) {
                out.push(Violation::new(name, format!("must be finite and positive, got {value}")));
            }
        }

        // omega_e = 0 is the escort-off configuration: nothing absorbs, but
        // every formula stays well defined
        if !(self.omega_e.is_finite() && self.omega_e >= S::zero()) {
            out.push(Violation::new("omega_e", "must be finite and non-negative"));
        }
        if !(self.b_field.is_finite() && self.b_field >= S::zero()) {
            out.push(Violation::new("b_field", "must be finite and non-negative"));
        }
        if self.passes < 1 {
            out.push(Violation::new("passes", "must be >= 1"));
        }
        for (name, value) in [("eta_det", self.eta_det), ("eta_up", self.eta_up)] {
            if !(value.is_finite() && value > S::zero() && value <= S::one()) {
                out.push(Violation::new(name, format!("must lie in (0,1], got {value}")));
            }
        }
        out
    }

    /// Non-fatal model-validity flags. Currently: the adiabatic elimination
    /// behind the effective two-level model assumes the drive is far detuned,
    /// flagged when Δ < 10·Ω_e.
    pub fn validity_warnings(&self) -> Vec<ValidityWarning> {
        let mut out = Vec::new();
        if self.detuning < S::of(10.0) * self.omega_e {
            out.push(ValidityWarning {
                field: "detuning".to_string(),
                message: format!(
                    "detuning {} < 10 x omega_e {}: adiabatic-elimination assumption is strained",
                    self.detuning, self.omega_e
                ),
            });
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate_units().is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_design_is_valid() {
        let d: DetectorDesign<f64> = DetectorDesign::reference_cesium();
        assert!(d.validate_units().is_empty());
        assert!(d.validity_warnings().is_empty());
    }

    #[test]
    fn zero_cell_length_is_one_violation() {
        let mut d: DetectorDesign<f64> = DetectorDesign::reference_cesium();
        d.cell_length = 0.0;
        let v = d.validate_units();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "cell_length");
    }

    #[test]
    fn negative_temperature_is_flagged() {
        let mut d: DetectorDesign<f64> = DetectorDesign::reference_cesium();
        d.temperature = -1.0;
        let v = d.validate_units();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "temperature");
    }

    #[test]
    fn near_resonant_escort_warns() {
        let mut d: DetectorDesign<f64> = DetectorDesign::reference_cesium();
        d.detuning = 5.0 * d.omega_e;
        assert_eq!(d.validity_warnings().len(), 1);
        assert!(d.validate_units().is_empty());
    }

    #[test]
    fn eta_det_above_one_rejected() {
        let mut d: DetectorDesign<f64> = DetectorDesign::reference_cesium();
        d.eta_det = 1.5;
        assert_eq!(d.validate_units().len(), 1);
    }
}
