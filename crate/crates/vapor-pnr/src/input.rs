//! Unit-annotated design ingestion.
//!
//! Designs are stated in the units experimenters quote them in — density in
//! cm⁻³, lengths in mm, durations in ns, detunings in GHz, temperatures in
//! mK, Rabi frequencies as multiples of the decay rates — and converted to
//! SI here, once, at the boundary. Field names carry their unit as a suffix
//! so a config file cannot be misread.

use serde::{Deserialize, Serialize};

use crate::design::DetectorDesign;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::species::AtomicSpecies;

/// Species selection: a built-in preset name, a JSON file of SI fields, or
/// an inline record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpeciesInput {
    Preset(String),
    File { file: String },
    Inline(AtomicSpecies<f64>),
}

impl SpeciesInput {
    pub fn resolve<S: Scalar>(&self) -> Result<AtomicSpecies<S>> {
        let species64: AtomicSpecies<f64> = match self {
            SpeciesInput::Preset(name) => match name.as_str() {
                "cesium" => AtomicSpecies::cesium(),
                other => {
                    return Err(Error::invalid(format!(
                        "unknown species preset '{other}' (built-in: cesium)"
                    )))
                }
            },
            SpeciesInput::File { file } => AtomicSpecies::from_json_file(file)?,
            SpeciesInput::Inline(record) => record.clone(),
        };
        species64.validate()?;
        Ok(AtomicSpecies {
            name: species64.name,
            mass: S::of(species64.mass),
            sigma_col: S::of(species64.sigma_col),
            a_31: S::of(species64.a_31),
            a_24: S::of(species64.a_24),
            lambda_31: S::of(species64.lambda_31),
            lambda_24: S::of(species64.lambda_24),
        })
    }
}

/// A Rabi frequency given either absolutely or as a multiple of a decay
/// rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RabiInput {
    /// Multiple of A₃₁ (escort) or A₂₄ (readout).
    TimesDecayRate(f64),
    Ghz(f64),
    Mhz(f64),
}

impl RabiInput {
    fn resolve(&self, decay_rate: f64) -> f64 {
        match *self {
            RabiInput::TimesDecayRate(x) => x * decay_rate,
            RabiInput::Ghz(x) => x * 1e9,
            RabiInput::Mhz(x) => x * 1e6,
        }
    }
}

fn default_eta_up() -> f64 {
    1.0
}

/// The mixed-unit design document accepted at the input boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignInput {
    pub species: SpeciesInput,
    /// Atom density (cm⁻³).
    pub n_density_per_cm3: f64,
    /// Temperature (mK).
    pub temperature_mk: f64,
    /// Cell length (mm).
    pub cell_length_mm: f64,
    /// Beam area (mm²).
    pub beam_area_mm2: f64,
    pub passes: u32,
    /// Magnetic field (T).
    pub b_field_t: f64,
    /// Pulse duration (ns).
    pub pulse_duration_ns: f64,
    pub escort_rabi: RabiInput,
    /// Drive detuning (GHz, ordinary frequency as stored).
    pub detuning_ghz: f64,
    /// Photon wavelength (nm); omit to use the species' |1⟩↔|3⟩ line.
    #[serde(default)]
    pub photon_wavelength_nm: Option<f64>,
    pub readout_rabi: RabiInput,
    pub eta_det: f64,
    #[serde(default = "default_eta_up")]
    pub eta_up: f64,
}

impl DesignInput {
    pub fn to_design<S: Scalar>(&self) -> Result<DetectorDesign<S>> {
        let species = self.species.resolve::<S>()?;
        let a_31 = species.a_31.as_f64();
        let a_24 = species.a_24.as_f64();
        let photon_wavelength = self
            .photon_wavelength_nm
            .map(|nm| S::of(nm * 1e-9))
            .unwrap_or(species.lambda_31);
        let design = DetectorDesign {
            species,
            n_density: S::of(self.n_density_per_cm3 * 1e6),
            temperature: S::of(self.temperature_mk * 1e-3),
            cell_length: S::of(self.cell_length_mm * 1e-3),
            beam_area: S::of(self.beam_area_mm2 * 1e-6),
            passes: self.passes,
            b_field: S::of(self.b_field_t),
            pulse_duration: S::of(self.pulse_duration_ns * 1e-9),
            omega_e: S::of(self.escort_rabi.resolve(a_31)),
            detuning: S::of(self.detuning_ghz * 1e9),
            photon_wavelength,
            omega_r: S::of(self.readout_rabi.resolve(a_24)),
            eta_det: S::of(self.eta_det),
            eta_up: S::of(self.eta_up),
        };
        let violations = design.validate_units();
        if violations.is_empty() {
            Ok(design)
        } else {
            let summary = violations
                .iter()
                .map(|v| format!("{}: {}", v.field, v.message))
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::invalid(format!("design failed validation: {summary}")))
        }
    }
}
