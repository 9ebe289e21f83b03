//! Parameter sweeps, constrained design optimization, and Pareto fronts over
//! the closed-form detector model.

use serde::{Deserialize, Serialize};

use crate::design::DetectorDesign;
use crate::error::{Error, Result};
use crate::model::{model_report, FrequencyConvention, ModelReport};
use crate::scalar::Scalar;
use crate::simplex::{minimize, SimplexOptions, SimplexResult};

/// A tunable design field addressable by name in sweeps and optimizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignField {
    NDensity,
    Temperature,
    CellLength,
    BeamArea,
    Passes,
    BField,
    PulseDuration,
    OmegaE,
    Detuning,
    PhotonWavelength,
    OmegaR,
    EtaDet,
    EtaUp,
}

impl DesignField {
    pub const ALL: [DesignField; 13] = [
        DesignField::NDensity,
        DesignField::Temperature,
        DesignField::CellLength,
        DesignField::BeamArea,
        DesignField::Passes,
        DesignField::BField,
        DesignField::PulseDuration,
        DesignField::OmegaE,
        DesignField::Detuning,
        DesignField::PhotonWavelength,
        DesignField::OmegaR,
        DesignField::EtaDet,
        DesignField::EtaUp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DesignField::NDensity => "n_density",
            DesignField::Temperature => "temperature",
            DesignField::CellLength => "cell_length",
            DesignField::BeamArea => "beam_area",
            DesignField::Passes => "passes",
            DesignField::BField => "b_field",
            DesignField::PulseDuration => "pulse_duration",
            DesignField::OmegaE => "omega_e",
            DesignField::Detuning => "detuning",
            DesignField::PhotonWavelength => "photon_wavelength",
            DesignField::OmegaR => "omega_r",
            DesignField::EtaDet => "eta_det",
            DesignField::EtaUp => "eta_up",
        }
    }

    /// SI unit of the field, for table headers.
    pub fn unit(self) -> &'static str {
        match self {
            DesignField::NDensity => "1/m^3",
            DesignField::Temperature => "K",
            DesignField::CellLength | DesignField::PhotonWavelength => "m",
            DesignField::BeamArea => "m^2",
            DesignField::Passes | DesignField::EtaDet | DesignField::EtaUp => "",
            DesignField::BField => "T",
            DesignField::PulseDuration => "s",
            DesignField::OmegaE | DesignField::Detuning | DesignField::OmegaR => "1/s",
        }
    }

    pub fn set<S: Scalar>(self, design: &mut DetectorDesign<S>, value: S) {
        match self {
            DesignField::NDensity => design.n_density = value,
            DesignField::Temperature => design.temperature = value,
            DesignField::CellLength => design.cell_length = value,
            DesignField::BeamArea => design.beam_area = value,
            DesignField::Passes => {
                design.passes = value.round().max(S::one()).as_f64() as u32;
            }
            DesignField::BField => design.b_field = value,
            DesignField::PulseDuration => design.pulse_duration = value,
            DesignField::OmegaE => design.omega_e = value,
            DesignField::Detuning => design.detuning = value,
            DesignField::PhotonWavelength => design.photon_wavelength = value,
            DesignField::OmegaR => design.omega_r = value,
            DesignField::EtaDet => design.eta_det = value,
            DesignField::EtaUp => design.eta_up = value,
        }
    }

    pub fn get<S: Scalar>(self, design: &DetectorDesign<S>) -> S {
        match self {
            DesignField::NDensity => design.n_density,
            DesignField::Temperature => design.temperature,
            DesignField::CellLength => design.cell_length,
            DesignField::BeamArea => design.beam_area,
            DesignField::Passes => S::from_count(u64::from(design.passes)),
            DesignField::BField => design.b_field,
            DesignField::PulseDuration => design.pulse_duration,
            DesignField::OmegaE => design.omega_e,
            DesignField::Detuning => design.detuning,
            DesignField::PhotonWavelength => design.photon_wavelength,
            DesignField::OmegaR => design.omega_r,
            DesignField::EtaDet => design.eta_det,
            DesignField::EtaUp => design.eta_up,
        }
    }
}

impl std::str::FromStr for DesignField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DesignField::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown design field '{s}'")))
    }
}

/// A derived quantity reportable per sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Eta,
    LossScatter,
    LossTransmission,
    LossCollision,
    DarkCountProb,
    NetDarkLinear,
    NetDarkExact,
    AtomCount,
    CollisionTime,
    AbsorptionLength,
    ReadoutTime,
    ZeemanDetuning,
}

impl Metric {
    pub const ALL: [Metric; 12] = [
        Metric::Eta,
        Metric::LossScatter,
        Metric::LossTransmission,
        Metric::LossCollision,
        Metric::DarkCountProb,
        Metric::NetDarkLinear,
        Metric::NetDarkExact,
        Metric::AtomCount,
        Metric::CollisionTime,
        Metric::AbsorptionLength,
        Metric::ReadoutTime,
        Metric::ZeemanDetuning,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Eta => "eta",
            Metric::LossScatter => "loss_scatter",
            Metric::LossTransmission => "loss_transmission",
            Metric::LossCollision => "loss_collision",
            Metric::DarkCountProb => "dark_count_prob",
            Metric::NetDarkLinear => "net_dark_linear",
            Metric::NetDarkExact => "net_dark_exact",
            Metric::AtomCount => "atom_count",
            Metric::CollisionTime => "collision_time",
            Metric::AbsorptionLength => "absorption_length",
            Metric::ReadoutTime => "readout_time",
            Metric::ZeemanDetuning => "zeeman_detuning",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Metric::CollisionTime | Metric::ReadoutTime => "s",
            Metric::AbsorptionLength => "m",
            Metric::ZeemanDetuning => "1/s",
            Metric::AtomCount => "atoms",
            _ => "",
        }
    }

    pub fn extract<S: Scalar>(self, report: &ModelReport<S>) -> S {
        match self {
            Metric::Eta => report.budget.eta,
            Metric::LossScatter => report.budget.loss_scatter,
            Metric::LossTransmission => report.budget.loss_transmission,
            Metric::LossCollision => report.budget.loss_collision,
            Metric::DarkCountProb => report.dark_count_prob,
            Metric::NetDarkLinear => report.net_dark_count.linear,
            Metric::NetDarkExact => report.net_dark_count.exact,
            Metric::AtomCount => S::from_count(report.atom_count),
            Metric::CollisionTime => report.collision_time,
            Metric::AbsorptionLength => report.absorption_length,
            Metric::ReadoutTime => report.readout_time,
            Metric::ZeemanDetuning => report.zeeman_detuning,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown metric '{s}'")))
    }
}

/// One sweep axis: a design field and the grid of values it takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec<S> {
    pub field: DesignField,
    pub values: Vec<S>,
}

/// A Cartesian sweep over a base design.
#[derive(Debug, Clone)]
pub struct SweepSpec<S> {
    pub base: DetectorDesign<S>,
    pub convention: FrequencyConvention,
    pub axes: Vec<AxisSpec<S>>,
    /// Metrics reported per row; empty means coordinates only.
    pub outputs: Vec<Metric>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow<S> {
    /// One coordinate per axis, in axis order.
    pub coords: Vec<S>,
    /// One value per requested metric; `None` where evaluation failed.
    pub values: Vec<Option<S>>,
    pub clamped: bool,
    pub validity_warnings: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable<S> {
    pub axis_names: Vec<String>,
    pub metric_names: Vec<String>,
    pub rows: Vec<SweepRow<S>>,
}

/// Evaluates the full Cartesian grid; per-point failures are recorded in-row
/// and the sweep continues.
pub fn run_sweep<S: Scalar>(spec: &SweepSpec<S>) -> Result<SweepTable<S>> {
    if spec.axes.is_empty() {
        return Err(Error::invalid("sweep needs at least one axis"));
    }
    for axis in &spec.axes {
        if axis.values.is_empty() {
            return Err(Error::invalid(format!(
                "axis {} has an empty grid",
                axis.field.name()
            )));
        }
        if axis.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "axis {} has non-finite grid values",
                axis.field.name()
            )));
        }
    }

    let total: usize = spec.axes.iter().map(|a| a.values.len()).product();
    let mut rows = Vec::with_capacity(total);
    let mut index = vec![0usize; spec.axes.len()];
    for _ in 0..total {
        let mut design = spec.base.clone();
        let coords: Vec<S> = spec
            .axes
            .iter()
            .zip(&index)
            .map(|(axis, &i)| {
                let v = axis.values[i];
                axis.field.set(&mut design, v);
                v
            })
            .collect();

        let row = match model_report(&design, spec.convention) {
            Ok(report) => SweepRow {
                coords,
                values: spec.outputs.iter().map(|m| Some(m.extract(&report))).collect(),
                clamped: report.budget.clamped,
                validity_warnings: design.validity_warnings().len(),
                error: None,
            },
            Err(e) => SweepRow {
                coords,
                values: vec![None; spec.outputs.len()],
                clamped: false,
                validity_warnings: design.validity_warnings().len(),
                error: Some(e.to_string()),
            },
        };
        rows.push(row);

        // odometer increment, last axis fastest
        for pos in (0..index.len()).rev() {
            index[pos] += 1;
            if index[pos] < spec.axes[pos].values.len() {
                break;
            }
            index[pos] = 0;
        }
    }

    Ok(SweepTable {
        axis_names: spec.axes.iter().map(|a| a.field.name().to_string()).collect(),
        metric_names: spec.outputs.iter().map(|m| m.name().to_string()).collect(),
        rows,
    })
}

/// Maximize η subject to a net-dark-count budget over box-bounded fields.
#[derive(Debug, Clone)]
pub struct OptimizationProblem<S> {
    pub base: DetectorDesign<S>,
    pub convention: FrequencyConvention,
    /// Free fields with inclusive box bounds.
    pub free: Vec<(DesignField, S, S)>,
    /// Constraint: net_dark_count.exact <= dark_budget.
    pub dark_budget: S,
    /// Require all model-validity warnings clear at the optimum. Disable to
    /// explore the raw budget formula into the near-resonant region.
    pub require_validity: bool,
}

/// Additive penalty applied per unit of constraint violation (and per
/// validity/clamp flag) on top of −η.
const PENALTY_WEIGHT: f64 = 1e3;
/// Penalized objective assigned to points where evaluation fails outright.
const FAILURE_PENALTY: f64 = 1e6;

/// One objective evaluation in the optimization trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry<S> {
    pub coords: Vec<S>,
    pub eta: Option<S>,
    pub net_dark_exact: Option<S>,
    pub penalized: S,
    pub feasible: bool,
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome<S> {
    pub design: DetectorDesign<S>,
    pub report: ModelReport<S>,
    pub coords: Vec<S>,
    pub trace: Vec<TraceEntry<S>>,
    pub evaluations: usize,
    pub converged: bool,
}

struct Objective<'a, S: Scalar> {
    problem: &'a OptimizationProblem<S>,
    trace: Vec<TraceEntry<S>>,
}

impl<S: Scalar> Objective<'_, S> {
    fn design_at(&self, x: &[S]) -> DetectorDesign<S> {
        let mut design = self.problem.base.clone();
        for ((field, _, _), &v) in self.problem.free.iter().zip(x) {
            field.set(&mut design, v);
        }
        design
    }

    /// −η plus penalties; records the evaluation.
    fn penalized(&mut self, x: &[S]) -> S {
        let design = self.design_at(x);
        let entry = match model_report(&design, self.problem.convention) {
            Ok(report) => {
                let eta = report.budget.eta;
                let dark = report.net_dark_count.exact;
                let violation = (dark - self.problem.dark_budget).max(S::zero());
                let mut flags = 0usize;
                if report.budget.clamped {
                    flags += 1;
                }
                if self.problem.require_validity {
                    flags += design.validity_warnings().len();
                }
                let feasible = violation == S::zero() && flags == 0;
                let penalized = -eta
                    + S::of(PENALTY_WEIGHT) * violation
                    + S::of(PENALTY_WEIGHT) * S::from_count(flags as u64);
                TraceEntry {
                    coords: x.to_vec(),
                    eta: Some(eta),
                    net_dark_exact: Some(dark),
                    penalized,
                    feasible,
                }
            }
            Err(_) => TraceEntry {
                coords: x.to_vec(),
                eta: None,
                net_dark_exact: None,
                penalized: S::of(FAILURE_PENALTY),
                feasible: false,
            },
        };
        let value = entry.penalized;
        self.trace.push(entry);
        value
    }
}

/// Points per free dimension in the coarse seeding probe.
const PROBE_POINTS: usize = 5;

/// Derivative-free search: a 5-points-per-dimension probe grid seeds a
/// Nelder-Mead descent of the penalized objective; feasibility is re-checked
/// exactly at the reported optimum, falling back to the best feasible
/// evaluation when the simplex drifted out.
pub fn optimize<S: Scalar>(problem: &OptimizationProblem<S>) -> Result<OptimizeOutcome<S>> {
    if problem.free.is_empty() {
        return Err(Error::invalid("optimization needs at least one free field"));
    }
    for (field, lo, hi) in &problem.free {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!(
                "bounds for {} must be finite with lo < hi",
                field.name()
            )));
        }
    }
    if !(problem.dark_budget > S::zero() && problem.dark_budget <= S::one()) {
        return Err(Error::invalid("dark budget must lie in (0,1]"));
    }

    let mut objective = Objective {
        problem,
        trace: Vec::new(),
    };

    // coarse probe
    let dim = problem.free.len();
    let mut best: Option<(Vec<S>, S)> = None;
    let mut any_feasible = false;
    let total = PROBE_POINTS.pow(dim as u32);
    let mut index = vec![0usize; dim];
    for _ in 0..total {
        let x: Vec<S> = problem
            .free
            .iter()
            .zip(&index)
            .map(|((_, lo, hi), &i)| {
                *lo + (*hi - *lo) * S::from_count(i as u64)
                    / S::from_count((PROBE_POINTS - 1) as u64)
            })
            .collect();
        let f = objective.penalized(&x);
        any_feasible |= objective.trace.last().map(|e| e.feasible).unwrap_or(false);
        if best.as_ref().map(|(_, fb)| f < *fb).unwrap_or(true) {
            best = Some((x, f));
        }
        for pos in (0..dim).rev() {
            index[pos] += 1;
            if index[pos] < PROBE_POINTS {
                break;
            }
            index[pos] = 0;
        }
    }
    if !any_feasible {
        return Err(Error::Infeasible(format!(
            "no probe point satisfies net_dark_count.exact <= {} with clear validity flags",
            problem.dark_budget
        )));
    }
    let (x0, _) = best.expect("probe grid is non-empty");

    let bounds: Vec<(S, S)> = problem.free.iter().map(|(_, lo, hi)| (*lo, *hi)).collect();
    let SimplexResult {
        x, converged, ..
    } = minimize(
        |x| objective.penalized(x),
        &x0,
        &bounds,
        &SimplexOptions::default(),
    );

    // exact feasibility at the reported optimum
    let final_feasible = {
        objective.penalized(&x);
        objective.trace.last().map(|e| e.feasible).unwrap_or(false)
    };
    let coords = if final_feasible {
        x
    } else {
        objective
            .trace
            .iter()
            .filter(|e| e.feasible)
            .min_by(|a, b| a.penalized.partial_cmp(&b.penalized).unwrap_or(std::cmp::Ordering::Equal))
            .map(|e| e.coords.clone())
            .ok_or_else(|| Error::Infeasible("search never visited a feasible point".into()))?
    };

    let design = objective.design_at(&coords);
    let report = model_report(&design, problem.convention)?;
    let evaluations = objective.trace.len();
    Ok(OptimizeOutcome {
        design,
        report,
        coords,
        trace: objective.trace,
        evaluations,
        converged,
    })
}

/// An (η, net dark count) point on the trade-off front, with its design.
#[derive(Debug, Clone)]
pub struct ParetoPoint<S> {
    pub design: DetectorDesign<S>,
    pub coords: Vec<S>,
    pub eta: S,
    pub net_dark_exact: S,
}

/// Evaluates a `grid_density`-per-dimension grid over the free fields and
/// returns the nondominated set (maximizing η, minimizing net dark count).
/// Points with failed evaluations, clamped budgets, or (when required)
/// validity warnings are excluded.
pub fn pareto_front<S: Scalar>(
    problem: &OptimizationProblem<S>,
    grid_density: usize,
) -> Result<Vec<ParetoPoint<S>>> {
    if problem.free.is_empty() {
        return Err(Error::invalid("pareto front needs at least one free field"));
    }
    if grid_density == 0 {
        return Err(Error::invalid("grid_density must be >= 1"));
    }
    let dim = problem.free.len();
    let mut candidates: Vec<ParetoPoint<S>> = Vec::new();
    let total = grid_density.pow(dim as u32);
    let mut index = vec![0usize; dim];
    for _ in 0..total {
        let x: Vec<S> = problem
            .free
            .iter()
            .zip(&index)
            .map(|((_, lo, hi), &i)| {
                if grid_density == 1 {
                    (*lo + *hi) / S::of(2.0)
                } else {
                    *lo + (*hi - *lo) * S::from_count(i as u64)
                        / S::from_count((grid_density - 1) as u64)
                }
            })
            .collect();
        let mut design = problem.base.clone();
        for ((field, _, _), &v) in problem.free.iter().zip(&x) {
            field.set(&mut design, v);
        }
        if let Ok(report) = model_report(&design, problem.convention) {
            let invalid = report.budget.clamped
                || (problem.require_validity && !design.validity_warnings().is_empty());
            if !invalid {
                candidates.push(ParetoPoint {
                    design,
                    coords: x,
                    eta: report.budget.eta,
                    net_dark_exact: report.net_dark_count.exact,
                });
            }
        }
        for pos in (0..dim).rev() {
            index[pos] += 1;
            if index[pos] < grid_density {
                break;
            }
            index[pos] = 0;
        }
    }

    // sort by eta descending, then dark ascending; sweep keeps strictly
    // improving dark counts
    candidates.sort_by(|a, b| {
        b.eta
            .partial_cmp(&a.eta)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(
                a.net_dark_exact
                    .partial_cmp(&b.net_dark_exact)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
    });
    // every kept point has the lowest dark count seen so far, so a later
    // candidate (with no-better eta) is nondominated iff it strictly beats it
    let mut front: Vec<ParetoPoint<S>> = Vec::new();
    for point in candidates {
        match front.last() {
            None => front.push(point),
            Some(last) => {
                if point.net_dark_exact < last.net_dark_exact {
                    front.push(point);
                }
            }
        }
    }
    Ok(front)
}

/// True when `a` weakly dominates `b` (no worse in both coordinates,
/// strictly better in one) for the (maximize η, minimize dark) ordering.
pub fn dominates<S: Scalar>(a: (S, S), b: (S, S)) -> bool {
    let (eta_a, dark_a) = a;
    let (eta_b, dark_b) = b;
    eta_a >= eta_b && dark_a <= dark_b && (eta_a > eta_b || dark_a < dark_b)
}
