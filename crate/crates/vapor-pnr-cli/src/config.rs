//! Run configuration: one JSON document per run.
//!
//! The design block carries unit-suffixed fields (see
//! `vapor_pnr::input::DesignInput`); command-specific blocks are optional
//! and only required by their subcommand. Configs are parsed strictly
//! (unknown fields rejected) and validated before any computation.

use std::path::PathBuf;

use anyhow::{bail, Context};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use vapor_pnr::explore::{AxisSpec, DesignField, Metric};
use vapor_pnr::input::DesignInput;
use vapor_pnr::pulse::PulseShape;
use vapor_pnr::FrequencyConvention;

fn default_seed() -> u64 {
    0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub design: DesignInput,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Frequency convention for single-convention commands; the budget
    /// report always shows both.
    #[serde(default)]
    pub convention: FrequencyConvention,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeBlock>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).context("config does not match the schema")?;
        // parse-then-validate: reject unit violations before any computation
        config
            .design
            .to_design::<f64>()
            .context("design block failed validation")?;
        Ok(config)
    }

    /// Canonical serialization of the effective config (after overrides);
    /// hashed into every output header.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Pulse envelope selection for the dynamics command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseInput {
    Square,
    /// Complex samples [re, im] on a uniform grid over the pulse window.
    Sampled { samples: Vec<[f64; 2]> },
    /// Gaussian envelope; center and width as fractions of the duration.
    Gaussian {
        #[serde(default = "default_center")]
        center_fraction: f64,
        #[serde(default = "default_width")]
        width_fraction: f64,
        #[serde(default = "default_points")]
        points: usize,
    },
}

fn default_center() -> f64 {
    0.5
}
fn default_width() -> f64 {
    0.1
}
fn default_points() -> usize {
    512
}

impl PulseInput {
    pub fn to_pulse(&self, duration: f64) -> anyhow::Result<PulseShape<f64>> {
        let pulse = match self {
            PulseInput::Square => PulseShape::square(duration)?,
            PulseInput::Sampled { samples } => PulseShape::sampled(
                duration,
                samples.iter().map(|[re, im]| Complex::new(*re, *im)).collect(),
            )?,
            PulseInput::Gaussian {
                center_fraction,
                width_fraction,
                points,
            } => PulseShape::gaussian_sampled(
                duration,
                center_fraction * duration,
                width_fraction * duration,
                *points,
            )?,
        };
        Ok(pulse)
    }

    pub fn is_square(&self) -> bool {
        matches!(self, PulseInput::Square)
    }
}

/// Desk-scale oracle comparison settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    #[serde(default = "default_mode_count")]
    pub mode_count: usize,
    #[serde(default = "default_atom_count")]
    pub atom_count: usize,
    /// Comb recurrence time as a multiple of the pulse duration.
    #[serde(default = "default_recurrence")]
    pub recurrence_pulses: f64,
    /// Photon spectral width in units of 1/pulse duration.
    #[serde(default = "default_spectral_width")]
    pub spectral_width_pulses: f64,
}

fn default_mode_count() -> usize {
    64
}
fn default_atom_count() -> usize {
    8
}
fn default_recurrence() -> f64 {
    8.0
}
fn default_spectral_width() -> f64 {
    6.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsBlock {
    #[serde(default = "square_pulse")]
    pub escort: PulseInput,
    #[serde(default = "square_pulse")]
    pub photon: PulseInput,
    #[serde(default = "default_true")]
    pub record_trajectory: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleBlock>,
}

fn square_pulse() -> PulseInput {
    PulseInput::Square
}
fn default_true() -> bool {
    true
}

/// A readout exposure, absolute or relative to the design's t_ro.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DurationInput {
    TimesTRo(f64),
    S(f64),
    Ms(f64),
    Us(f64),
}

impl DurationInput {
    pub fn resolve(&self, t_ro: f64) -> anyhow::Result<f64> {
        let seconds = match *self {
            DurationInput::TimesTRo(x) => x * t_ro,
            DurationInput::S(x) => x,
            DurationInput::Ms(x) => x * 1e-3,
            DurationInput::Us(x) => x * 1e-6,
        };
        if !(seconds.is_finite() && seconds > 0.0) {
            bail!("readout duration must resolve to a positive time, got {seconds}");
        }
        Ok(seconds)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfusionBlock {
    pub n_min: u32,
    pub n_max: u32,
    pub trials: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    pub n_photons_true: u32,
    pub readout_duration: DurationInput,
    pub trials: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionBlock>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridScale {
    #[default]
    Linear,
    Log,
}

/// One sweep axis: an explicit value list, or a generated range.
/// Grid values are in the field's SI unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, untagged)]
pub enum AxisInput {
    Values { field: String, values: Vec<f64> },
    Range {
        field: String,
        min: f64,
        max: f64,
        count: usize,
        #[serde(default)]
        scale: GridScale,
    },
}

impl AxisInput {
    pub fn to_axis(&self) -> anyhow::Result<AxisSpec<f64>> {
        match self {
            AxisInput::Values { field, values } => {
                if values.is_empty() {
                    bail!("axis {field} has an empty grid");
                }
                Ok(AxisSpec {
                    field: field.parse::<DesignField>()?,
                    values: values.clone(),
                })
            }
            AxisInput::Range {
                field,
                min,
                max,
                count,
                scale,
            } => {
                if *count == 0 {
                    bail!("axis {field} has an empty grid");
                }
                if !(min.is_finite() && max.is_finite() && min < max) {
                    bail!("axis {field} needs finite min < max");
                }
                if *scale == GridScale::Log && *min <= 0.0 {
                    bail!("axis {field}: log scale needs min > 0");
                }
                let values = (0..*count)
                    .map(|i| {
                        let frac = if *count == 1 {
                            0.0
                        } else {
                            i as f64 / (*count - 1) as f64
                        };
                        match scale {
                            GridScale::Linear => min + (max - min) * frac,
                            GridScale::Log => {
                                (min.ln() + (max.ln() - min.ln()) * frac).exp()
                            }
                        }
                    })
                    .collect();
                Ok(AxisSpec {
                    field: field.parse::<DesignField>()?,
                    values,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub axes: Vec<AxisInput>,
    /// Metric names; omitted means all metrics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<String>>,
}

impl SweepBlock {
    pub fn metrics(&self) -> anyhow::Result<Vec<Metric>> {
        match &self.outputs {
            None => Ok(Metric::ALL.to_vec()),
            Some(names) => names
                .iter()
                .map(|n| n.parse::<Metric>().map_err(Into::into))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeFieldInput {
    pub field: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeBlock {
    pub free: Vec<FreeFieldInput>,
    pub dark_budget: f64,
    #[serde(default = "default_true")]
    pub require_validity: bool,
    /// When > 0, also emit the (η, net dark) front from a grid of this
    /// density per free dimension.
    #[serde(default)]
    pub pareto_density: usize,
}
