//! Closed-form detector model: collision time, absorption length, readout
//! time, Zeeman detuning, dark counts, and the efficiency budget.
//!
//! Everything here is a pure function of a [`DetectorDesign`]. The three loss
//! terms of the budget are computed independently and kept separate so a
//! design search can see which one dominates.
//!
//! # Frequency conventions
//!
//! Detunings enter the formulas quadratically, so whether a quoted "0.5 GHz"
//! is an ordinary frequency ν or an angular frequency ω = 2πν changes results
//! by (2π)² per power of two. Designs store ordinary frequencies; every
//! detuning-sensitive function takes a [`FrequencyConvention`] selecting how
//! the stored value is interpreted:
//!
//! * [`FrequencyConvention::Ordinary`] — use Δ as stored (s⁻¹) and the Zeeman
//!   detuning δ = 2μ_B·B/(3h).
//! * [`FrequencyConvention::Angular`] — use 2πΔ and δ = 2μ_B·B/(3ħ).
//!
//! Decay rates are inverse lifetimes either way. The ordinary convention is
//! the one that reproduces the reference dark-count figures; see the golden
//! data in `tests/`.

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::design::DetectorDesign;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Interpretation of stored frequency fields in detuning-sensitive formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyConvention {
    #[default]
    Ordinary,
    Angular,
}

impl FrequencyConvention {
    pub const BOTH: [FrequencyConvention; 2] =
        [FrequencyConvention::Ordinary, FrequencyConvention::Angular];

    pub fn label(self) -> &'static str {
        match self {
            FrequencyConvention::Ordinary => "ordinary",
            FrequencyConvention::Angular => "angular",
        }
    }
}

/// Effective detuning used in formulas under the given convention.
pub fn effective_detuning<S: Scalar>(design: &DetectorDesign<S>, conv: FrequencyConvention) -> S {
    match conv {
        FrequencyConvention::Ordinary => design.detuning,
        FrequencyConvention::Angular => S::of(2.0) * S::PI() * design.detuning,
    }
}

/// Mean time between state-changing collisions,
/// τ_col = √(M/(3·k_B·T)) / (n·σ).
pub fn collision_time<S: Scalar>(design: &DetectorDesign<S>) -> Result<S> {
    if !design.temperature.is_finite() || design.temperature <= S::zero() {
        return Err(Error::invalid("collision_time requires temperature > 0"));
    }
    if !design.n_density.is_finite() || design.n_density <= S::zero() {
        return Err(Error::invalid("collision_time requires n_density > 0"));
    }
    let consts = PhysicalConstants::<S>::standard();
    let thermal = (design.species.mass / (S::of(3.0) * consts.k_b * design.temperature)).sqrt();
    Ok(thermal / (design.n_density * design.species.sigma_col))
}

/// Absorption length of the medium,
/// ℓ_abs = Δ² / (λ_ph²·n·Ω_e²·T_p·A₃₁).
///
/// Ω_e = 0 yields an infinite absorption length (nothing is absorbed), which
/// the budget handles gracefully.
pub fn absorption_length<S: Scalar>(
    design: &DetectorDesign<S>,
    conv: FrequencyConvention,
) -> Result<S> {
    if design.species.a_31 == S::zero() {
        return Err(Error::invalid("absorption_length requires a_31 != 0"));
    }
    let delta = effective_detuning(design, conv);
    let denom = design.photon_wavelength.powi(2)
        * design.n_density
        * design.omega_e.powi(2)
        * design.pulse_duration
        * design.species.a_31;
    Ok(delta.powi(2) / denom)
}

/// Mean time for one fluorescence photon from an excited atom to be
/// registered, t_ro = (2Ω_r² + A₂₄²) / (A₂₄·Ω_r²·η_det).
pub fn readout_time<S: Scalar>(design: &DetectorDesign<S>) -> Result<S> {
    if design.eta_det == S::zero() {
        return Err(Error::invalid("readout_time requires eta_det > 0"));
    }
    let a = design.species.a_24;
    let or2 = design.omega_r.powi(2);
    Ok((S::of(2.0) * or2 + a.powi(2)) / (a * or2 * design.eta_det))
}

/// Photon scattering rate on the cycling transition,
/// A₂₄·Ω_r²/(2Ω_r² + A₂₄²); saturates at A₂₄/2.
pub fn cycling_scatter_rate<S: Scalar>(design: &DetectorDesign<S>) -> S {
    let a = design.species.a_24;
    let or2 = design.omega_r.powi(2);
    a * or2 / (S::of(2.0) * or2 + a.powi(2))
}

/// Zeeman detuning of the dark-count channel, δ = 2μ_B·B/3 divided by h
/// (ordinary) or ħ (angular).
pub fn zeeman_detuning<S: Scalar>(design: &DetectorDesign<S>, conv: FrequencyConvention) -> S {
    let consts = PhysicalConstants::<S>::standard();
    let planck = match conv {
        FrequencyConvention::Ordinary => consts.h,
        FrequencyConvention::Angular => consts.hbar,
    };
    S::of(2.0) * consts.mu_b * design.b_field / (S::of(3.0) * planck)
}

/// Probability that one ground-state atom emits a dark-count photon during a
/// single readout, P_dc = t_ro·A₄₂·Ω_r² / (6·(δ² + Ω_r²/3)).
pub fn dark_count_prob<S: Scalar>(
    design: &DetectorDesign<S>,
    conv: FrequencyConvention,
) -> Result<S> {
    let t_ro = readout_time(design)?;
    let delta = zeeman_detuning(design, conv);
    let or2 = design.omega_r.powi(2);
    Ok(t_ro * design.species.a_42() * or2
        / (S::of(6.0) * (delta.powi(2) + or2 / S::of(3.0))))
}

/// Number of atoms in the interaction volume, n·A·ℓ_cell, rounded to the
/// nearest integer.
pub fn atom_count<S: Scalar>(design: &DetectorDesign<S>) -> u64 {
    let n = design.n_density * design.beam_area * design.cell_length;
    let n = n.round().as_f64();
    if n <= 0.0 {
        0
    } else {
        n as u64
    }
}

/// Net dark-count probability over all atoms, both bookkeepings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetDarkCount<S> {
    /// N·P_dc, the small-probability linear estimate.
    pub linear: S,
    /// 1 − (1 − P_dc)^N, exact for independent atoms.
    pub exact: S,
}

pub fn net_dark_count<S: Scalar>(
    design: &DetectorDesign<S>,
    conv: FrequencyConvention,
) -> Result<NetDarkCount<S>> {
    let p = dark_count_prob(design, conv)?;
    let n = atom_count(design);
    Ok(net_dark_count_from(p, n))
}

/// Dark-count aggregation from a per-atom probability and an atom count.
pub fn net_dark_count_from<S: Scalar>(p_dc: S, atoms: u64) -> NetDarkCount<S> {
    let n = S::from_count(atoms);
    // ln1p-based form keeps the exact branch accurate for tiny p
    let exact = if p_dc == S::zero() {
        S::zero()
    } else {
        -(n * (-p_dc).ln_1p()).exp() + S::one()
    };
    NetDarkCount {
        linear: n * p_dc,
        exact,
    }
}

/// The loss terms of the efficiency budget and the resulting η, kept
/// separately for diagnosis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBudget<S> {
    /// (T_p·A₃₁·Ω_e²/(16Δ²))² — photon Raman-scattered instead of staying
    /// absorbed.
    pub loss_scatter: S,
    /// exp(−q·ℓ_cell/ℓ_abs) — photon leaves the medium unabsorbed.
    pub loss_transmission: S,
    /// t_ro/(2τ_col) — absorbed excitation collisionally lost before readout.
    pub loss_collision: S,
    /// η_up·(1 − Σ losses), clamped to [0,1].
    pub eta: S,
    /// Set when the loss sum left [0,1] and η was clamped; the small-loss
    /// approximation behind the budget is unreliable there.
    pub clamped: bool,
}

/// Evaluates the efficiency budget
/// η ≈ η_up·(1 − (T_p·A₃₁·Ω_e²/16Δ²)² − exp(−q·ℓ_cell/ℓ_abs) − t_ro/2τ_col).
pub fn efficiency_budget<S: Scalar>(
    design: &DetectorDesign<S>,
    conv: FrequencyConvention,
) -> Result<EfficiencyBudget<S>> {
    let delta = effective_detuning(design, conv);
    let loss_scatter = (design.pulse_duration * design.species.a_31 * design.omega_e.powi(2)
        / (S::of(16.0) * delta.powi(2)))
    .powi(2);

    let l_abs = absorption_length(design, conv)?;
    let optical_depth = S::from_count(design.passes as u64) * design.cell_length / l_abs;
    let loss_transmission = (-optical_depth).exp();

    let loss_collision = readout_time(design)? / (S::of(2.0) * collision_time(design)?);

    let raw = S::one() - loss_scatter - loss_transmission - loss_collision;
    let clamped = !(S::zero()..=S::one()).contains(&raw);
    let eta = design.eta_up * raw.max(S::zero()).min(S::one());

    Ok(EfficiencyBudget {
        loss_scatter,
        loss_transmission,
        loss_collision,
        eta,
        clamped,
    })
}

/// Every closed-form metric of a design under one convention, evaluated at
/// once. This is the row format used by sweeps and the CLI budget report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport<S> {
    pub convention: FrequencyConvention,
    pub atom_count: u64,
    /// τ_col (s).
    pub collision_time: S,
    /// ℓ_abs (m).
    pub absorption_length: S,
    /// t_ro (s).
    pub readout_time: S,
    /// δ (s⁻¹).
    pub zeeman_detuning: S,
    /// P_dc per atom per readout.
    pub dark_count_prob: S,
    pub net_dark_count: NetDarkCount<S>,
    pub budget: EfficiencyBudget<S>,
}

pub fn model_report<S: Scalar>(
    design: &DetectorDesign<S>,
    conv: FrequencyConvention,
) -> Result<ModelReport<S>> {
    Ok(ModelReport {
        convention: conv,
        atom_count: atom_count(design),
        collision_time: collision_time(design)?,
        absorption_length: absorption_length(design, conv)?,
        readout_time: readout_time(design)?,
        zeeman_detuning: zeeman_detuning(design, conv),
        dark_count_prob: dark_count_prob(design, conv)?,
        net_dark_count: net_dark_count(design, conv)?,
        budget: efficiency_budget(design, conv)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    use FrequencyConvention::{Angular, Ordinary};

    fn reference() -> DetectorDesign<f64> {
        DetectorDesign::reference_cesium()
    }

    // Frozen values: each evaluated once externally (hand/REPL evaluation of
    // the formulas with the CODATA constants and cesium data) and recorded.

    #[test]
    fn collision_time_reference_value() {
        let tau = collision_time(&reference()).unwrap();
        assert_relative_eq!(tau, 2.308_307_583_5e3, max_relative = 1e-9);
    }

    #[test]
    fn collision_time_scalings_exact() {
        let d = reference();
        let tau = collision_time(&d).unwrap();
        let mut dn = d.clone();
        dn.n_density *= 2.0;
        assert_relative_eq!(collision_time(&dn).unwrap(), tau / 2.0, max_relative = 1e-14);
        let mut dt = d.clone();
        dt.temperature *= 4.0;
        assert_relative_eq!(collision_time(&dt).unwrap(), tau / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn collision_time_rejects_bad_inputs() {
        let mut d = reference();
        d.temperature = 0.0;
        assert!(collision_time(&d).is_err());
        let mut d = reference();
        d.n_density = -1.0;
        assert!(collision_time(&d).is_err());
    }

    #[test]
    fn absorption_length_reference_values() {
        let d = reference();
        assert_relative_eq!(
            absorption_length(&d, Ordinary).unwrap(),
            1.327_215_019_3,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            absorption_length(&d, Angular).unwrap(),
            5.239_634_878_3e1,
            max_relative = 1e-9
        );
    }

    #[test]
    fn absorption_length_scalings_exact() {
        let d = reference();
        let l = absorption_length(&d, Ordinary).unwrap();
        let mut d2 = d.clone();
        d2.detuning *= 2.0;
        assert_relative_eq!(absorption_length(&d2, Ordinary).unwrap(), 4.0 * l, max_relative = 1e-14);
        let mut d4 = d.clone();
        d4.omega_e *= 2.0;
        assert_relative_eq!(absorption_length(&d4, Ordinary).unwrap(), l / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn readout_time_reference_value() {
        let t = readout_time(&reference()).unwrap();
        assert_relative_eq!(t, 2.438_327_568_0e-3, max_relative = 1e-9);
    }

    #[test]
    fn readout_time_dominant_term() {
        // A₂₄² >> 2Ω_r² at Ω_r = 0.01·A₂₄, so t_ro ~ A₂₄/(Ω_r²·η_det) to 0.1%
        let d = reference();
        let full = readout_time(&d).unwrap();
        let approx = d.species.a_24 / (d.omega_r.powi(2) * d.eta_det);
        assert!(((full - approx) / full).abs() < 1e-3);
    }

    #[test]
    fn readout_time_strong_drive_limit() {
        // monotone approach to 2/(A₂₄·η_det) as Ω_r grows
        let mut d = reference();
        let limit = 2.0 / (d.species.a_24 * d.eta_det);
        let mut prev = f64::INFINITY;
        for scale in [1e2, 1e3, 1e4, 1e5] {
            d.omega_r = scale * d.species.a_24;
            let t = readout_time(&d).unwrap();
            assert!(t < prev);
            prev = t;
        }
        assert_relative_eq!(prev, limit, max_relative = 1e-9);
    }

    #[test]
    fn readout_time_eta_det_scaling() {
        let d = reference();
        let t = readout_time(&d).unwrap();
        let mut half = d.clone();
        half.eta_det /= 2.0;
        assert_relative_eq!(readout_time(&half).unwrap(), 2.0 * t, max_relative = 1e-14);
        let mut zero = d;
        zero.eta_det = 0.0;
        assert!(readout_time(&zero).is_err());
    }

    #[test]
    fn zeeman_detuning_values() {
        let d = reference();
        // 2/3 of mu_B/h = 1.3996e10 Hz/T
        assert_relative_eq!(zeeman_detuning(&d, Ordinary), 9.330_829_957_4e9, max_relative = 1e-9);
        assert_relative_eq!(
            zeeman_detuning(&d, Angular),
            9.330_829_957_4e9 * 2.0 * std::f64::consts::PI,
            max_relative = 1e-9
        );
        let mut zero = reference();
        zero.b_field = 0.0;
        assert_eq!(zeeman_detuning(&zero, Ordinary), 0.0);
        let mut double = reference();
        double.b_field = 2.0;
        assert_relative_eq!(
            zeeman_detuning(&double, Ordinary),
            2.0 * zeeman_detuning(&d, Ordinary),
            max_relative = 1e-14
        );
    }

    #[test]
    fn dark_count_reference_values() {
        let d = reference();
        assert_relative_eq!(
            dark_count_prob(&d, Ordinary).unwrap(),
            1.649_508_710_5e-5,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            dark_count_prob(&d, Angular).unwrap(),
            4.178_254_376_1e-7,
            max_relative = 1e-9
        );
        // within a factor of 2 of the published ~2e-5 under the ordinary reading
        let p = dark_count_prob(&d, Ordinary).unwrap();
        assert!(p > 1e-5 && p < 4e-5);
    }

    #[test]
    fn dark_count_limits() {
        // B -> large kills the dark channel
        let mut d = reference();
        d.b_field = 1e4;
        assert!(dark_count_prob(&d, Ordinary).unwrap() < 1e-12);
        // delta = 0 simplifies to t_ro*A42/2
        let mut d0 = reference();
        d0.b_field = 0.0;
        let expected = readout_time(&d0).unwrap() * d0.species.a_42() / 2.0;
        assert_relative_eq!(dark_count_prob(&d0, Ordinary).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn dark_count_decreasing_in_b() {
        let mut prev = f64::INFINITY;
        for b in [0.1, 0.3, 1.0, 3.0, 10.0] {
            let mut d = reference();
            d.b_field = b;
            let p = dark_count_prob(&d, Ordinary).unwrap();
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn atom_count_reference_is_20000() {
        assert_eq!(atom_count(&reference()), 20_000);
    }

    #[test]
    fn atom_count_scalings() {
        let mut d = reference();
        d.beam_area = 0.0;
        assert_eq!(atom_count(&d), 0);
        let mut d2 = reference();
        d2.cell_length *= 2.0;
        assert_eq!(atom_count(&d2), 40_000);
    }

    #[test]
    fn net_dark_count_pair() {
        let pair = net_dark_count_from(2e-5, 20_000);
        assert_relative_eq!(pair.linear, 0.4, max_relative = 1e-12);
        assert_relative_eq!(pair.exact, 0.329_682_635_3, max_relative = 1e-9);
        // exact route recomputed independently
        let direct = 1.0 - (1.0 - 2e-5f64).powi(20_000);
        assert_relative_eq!(pair.exact, direct, max_relative = 1e-12);

        let zero = net_dark_count_from(0.0, 20_000);
        assert_eq!(zero.linear, 0.0);
        assert_eq!(zero.exact, 0.0);
    }

    #[test]
    fn net_dark_count_exact_below_linear() {
        for &(p, n) in &[(1e-8, 100u64), (1e-5, 20_000), (1e-3, 5_000), (0.05, 100)] {
            let pair = net_dark_count_from(p, n);
            assert!(pair.exact <= pair.linear + 1e-15);
            if pair.linear < 0.02 {
                assert_relative_eq!(pair.exact, pair.linear, max_relative = 0.01);
            }
        }
    }

    #[test]
    fn budget_reference_values_ordinary() {
        let b = efficiency_budget(&reference(), Ordinary).unwrap();
        assert_relative_eq!(b.loss_scatter, 3.462_385_951_4e-9, max_relative = 1e-9);
        assert_relative_eq!(b.loss_transmission, 8.601_130_169_0e-1, max_relative = 1e-9);
        assert_relative_eq!(b.loss_collision, 5.281_634_877_1e-7, max_relative = 1e-9);
        assert_relative_eq!(b.eta, 1.398_864_514_7e-1, max_relative = 1e-9);
        assert!(!b.clamped);
    }

    #[test]
    fn budget_reference_values_angular() {
        let b = efficiency_budget(&reference(), Angular).unwrap();
        assert_relative_eq!(b.loss_scatter, 2.221_549_546_0e-12, max_relative = 1e-9);
        assert_relative_eq!(b.loss_transmission, 9.961_902_158_5e-1, max_relative = 1e-9);
        assert_relative_eq!(b.eta, 3.809_255_986_3e-3, max_relative = 1e-9);
        assert!(!b.clamped);
    }

    #[test]
    fn budget_many_passes_limit() {
        // with transmission killed by passes and other losses negligible,
        // eta approaches eta_up
        let mut d = reference();
        d.passes = 4_000_000;
        d.eta_up = 0.9;
        let b = efficiency_budget(&d, Ordinary).unwrap();
        assert!(b.loss_transmission < 1e-12);
        assert_relative_eq!(b.eta, 0.9, max_relative = 1e-5);
    }

    #[test]
    fn budget_no_escort() {
        let mut d = reference();
        d.omega_e = 0.0;
        let b = efficiency_budget(&d, Ordinary).unwrap();
        assert_eq!(b.loss_scatter, 0.0);
        assert_eq!(b.loss_transmission, 1.0);
        assert!(b.eta < 1e-6);
        assert!(b.clamped); // raw = -loss_collision < 0
    }

    #[test]
    fn budget_monotone_in_passes() {
        let mut prev = -1.0;
        for q in [1u32, 2, 5, 10, 30, 100, 300] {
            let mut d = reference();
            d.passes = q;
            let b = efficiency_budget(&d, Ordinary).unwrap();
            assert!(b.eta >= prev);
            prev = b.eta;
        }
    }

    #[test]
    fn loss_scatter_monotonicities() {
        let d = reference();
        let base = efficiency_budget(&d, Ordinary).unwrap().loss_scatter;
        let mut up = d.clone();
        up.omega_e *= 1.5;
        assert!(efficiency_budget(&up, Ordinary).unwrap().loss_scatter > base);
        let mut det = d.clone();
        det.detuning *= 4.0;
        let b = efficiency_budget(&det, Ordinary).unwrap().loss_scatter;
        assert_relative_eq!(b, base / 256.0, max_relative = 1e-9);
    }

    #[test]
    fn report_is_finite_for_valid_designs() {
        let d = reference();
        for conv in FrequencyConvention::BOTH {
            let r = model_report(&d, conv).unwrap();
            assert!(r.collision_time.is_finite());
            assert!(r.absorption_length.is_finite());
            assert!(r.readout_time.is_finite());
            assert!(r.zeeman_detuning.is_finite());
            assert!(r.dark_count_prob.is_finite());
            assert!(r.budget.eta.is_finite());
        }
    }

    #[test]
    fn f32_path_smoke() {
        let d: DetectorDesign<f32> = DetectorDesign::reference_cesium();
        assert_eq!(atom_count(&d), 20_000);
        let b = efficiency_budget(&d, Ordinary).unwrap();
        assert!((b.eta - 0.1399).abs() < 1e-3);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn outputs_finite_and_transmission_monotone(
                n_scale in 0.1f64..10.0,
                omega_scale in 0.1f64..5.0,
                tp_scale in 0.2f64..5.0,
                t_scale in 0.1f64..100.0,
                b in 0.0f64..5.0,
            ) {
                let mut d = reference();
                d.n_density *= n_scale;
                d.omega_e *= omega_scale;
                d.pulse_duration *= tp_scale;
                d.temperature *= t_scale;
                d.b_field = b;
                prop_assert!(d.validate_units().is_empty());
                for conv in FrequencyConvention::BOTH {
                    let r = model_report(&d, conv).unwrap();
                    for v in [
                        r.collision_time, r.absorption_length, r.readout_time,
                        r.zeeman_detuning, r.dark_count_prob,
                        r.net_dark_count.linear, r.net_dark_count.exact,
                        r.budget.loss_scatter, r.budget.loss_transmission,
                        r.budget.loss_collision, r.budget.eta,
                    ] {
                        prop_assert!(v.is_finite());
                    }
                    // transmission strictly decreasing in n, omega_e^2, T_p
                    let base = r.budget.loss_transmission;
                    for bump in [DensityBump::N, DensityBump::Omega, DensityBump::Tp] {
                        let mut up = d.clone();
                        match bump {
                            DensityBump::N => up.n_density *= 1.5,
                            DensityBump::Omega => up.omega_e *= 1.5,
                            DensityBump::Tp => up.pulse_duration *= 1.5,
                        }
                        let t = efficiency_budget(&up, conv).unwrap().loss_transmission;
                        prop_assert!(t < base);
                    }
                }
            }
        }

        enum DensityBump {
            N,
            Omega,
            Tp,
        }
    }
}
