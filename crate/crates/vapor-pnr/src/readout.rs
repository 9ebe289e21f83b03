//! Monte Carlo simulation of cycling-transition readout.
//!
//! Each trial walks the per-photon/per-atom probability chain: a photon is
//! absorbed by a fresh atom, the excited atom survives collisional
//! de-excitation over the readout window, a surviving atom registers at
//! least one fluorescence photon, and every ground-state atom may fire a
//! dark count. Atoms are taken as individually resolvable by the imaging
//! system, so the inferred photon number is the count of bright atoms.
//!
//! Trials draw from per-trial RNG streams derived from `(seed, trial_index)`,
//! so results are identical regardless of execution schedule.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::design::DetectorDesign;
use crate::error::{Error, Result};
use crate::model::{
    atom_count, collision_time, cycling_scatter_rate, dark_count_prob, efficiency_budget,
    readout_time, FrequencyConvention,
};
use crate::scalar::Scalar;

/// The per-event probabilities driving one readout Monte Carlo.
///
/// Derivable from a design via [`ChainProbabilities::from_design`], or set
/// directly to study a limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainProbabilities {
    /// Per incident photon: absorbed by some atom (1 − scatter − transmission).
    pub p_absorb: f64,
    /// Per excited atom: survives collisions over the readout window,
    /// exp(−duration/(2τ_col)).
    pub p_survive: f64,
    /// Per surviving excited atom: registers ≥1 photon,
    /// 1 − exp(−duration/t_ro).
    pub p_detect: f64,
    /// Per ground atom: dark count, min(1, P_dc·duration/t_ro).
    pub p_dark: f64,
}

impl ChainProbabilities {
    pub fn from_design<S: Scalar>(
        design: &DetectorDesign<S>,
        conv: FrequencyConvention,
        readout_duration: S,
    ) -> Result<Self> {
        if !readout_duration.is_finite() || readout_duration <= S::zero() {
            return Err(Error::invalid("readout_duration must be positive"));
        }
        let budget = efficiency_budget(design, conv)?;
        let p_absorb = (S::one() - budget.loss_scatter - budget.loss_transmission)
            .max(S::zero())
            .min(S::one());
        let tau_col = collision_time(design)?;
        let p_survive = (-readout_duration / (S::of(2.0) * tau_col)).exp();
        let t_ro = readout_time(design)?;
        let p_detect = -(-readout_duration / t_ro).exp_m1();
        let p_dark = (dark_count_prob(design, conv)? * readout_duration / t_ro).min(S::one());
        Ok(ChainProbabilities {
            p_absorb: p_absorb.as_f64(),
            p_survive: p_survive.as_f64(),
            p_detect: p_detect.as_f64(),
            p_dark: p_dark.as_f64(),
        })
    }

    /// Probability that one incident photon ends up counted.
    pub fn per_photon_efficiency(&self) -> f64 {
        self.p_absorb * self.p_survive * self.p_detect
    }

    fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_absorb", self.p_absorb),
            ("p_survive", self.p_survive),
            ("p_detect", self.p_detect),
            ("p_dark", self.p_dark),
        ] {
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(Error::invalid(format!("{name} must lie in [0,1], got {p}")));
            }
        }
        Ok(())
    }
}

/// One readout Monte Carlo configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutScenario<S> {
    pub design: DetectorDesign<S>,
    #[serde(default)]
    pub convention: FrequencyConvention,
    pub n_photons_true: u32,
    /// Readout exposure (s).
    pub readout_duration: S,
    pub trials: u32,
    pub rng_seed: u64,
}

impl<S: Scalar> ReadoutScenario<S> {
    /// The atom-exact counting model assumes far fewer photons than atoms;
    /// flagged past N/10.
    pub fn validity_warnings(&self) -> Vec<String> {
        let n_atoms = atom_count(&self.design);
        let mut out = Vec::new();
        if u64::from(self.n_photons_true) > n_atoms / 10 {
            out.push(format!(
                "n_photons_true = {} exceeds a tenth of the {} atoms; counting model strained",
                self.n_photons_true, n_atoms
            ));
        }
        out
    }
}

/// One Monte Carlo realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// Photons absorbed (each by a distinct atom).
    pub n_absorbed: u32,
    /// Excited atoms that survived and registered ≥1 photon.
    pub n_atoms_detected: u32,
    /// Ground atoms that fired a dark count.
    pub n_dark_atoms: u32,
    /// Estimator output: bright-atom count.
    pub inferred_n: u32,
}

/// Runs the scenario's trials with probabilities derived from its design.
pub fn run_trials<S: Scalar>(scenario: &ReadoutScenario<S>) -> Result<Vec<TrialOutcome>> {
    let probs = ChainProbabilities::from_design(
        &scenario.design,
        scenario.convention,
        scenario.readout_duration,
    )?;
    run_trials_with(
        &probs,
        atom_count(&scenario.design),
        scenario.n_photons_true,
        scenario.trials,
        scenario.rng_seed,
    )
}

/// Runs `trials` readout realizations over `n_atoms` atoms with the given
/// chain probabilities. Deterministic for a fixed seed; trial `k` draws from
/// its own stream `(seed, k)`.
pub fn run_trials_with(
    probs: &ChainProbabilities,
    n_atoms: u64,
    n_photons_true: u32,
    trials: u32,
    seed: u64,
) -> Result<Vec<TrialOutcome>> {
    probs.validate()?;
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let mut out = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        out.push(run_one_trial(probs, n_atoms, n_photons_true, seed, trial));
    }
    Ok(out)
}

fn run_one_trial(
    probs: &ChainProbabilities,
    n_atoms: u64,
    n_photons_true: u32,
    seed: u64,
    trial: u32,
) -> TrialOutcome {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(trial).wrapping_add(1));

    // absorption claims distinct atoms, so it is capped by the atom count
    let mut n_absorbed: u32 = 0;
    for _ in 0..n_photons_true {
        if u64::from(n_absorbed) >= n_atoms {
            break;
        }
        if rng.random_bool(probs.p_absorb) {
            n_absorbed += 1;
        }
    }

    let mut survivors: u32 = 0;
    for _ in 0..n_absorbed {
        if rng.random_bool(probs.p_survive) {
            survivors += 1;
        }
    }

    let mut n_atoms_detected: u32 = 0;
    for _ in 0..survivors {
        if rng.random_bool(probs.p_detect) {
            n_atoms_detected += 1;
        }
    }

    let ground_atoms = n_atoms.saturating_sub(u64::from(n_absorbed));
    let n_dark_atoms: u32 = if probs.p_dark == 0.0 || ground_atoms == 0 {
        0
    } else {
        let dark = Binomial::new(ground_atoms, probs.p_dark).expect("validated dark probability");
        dark.sample(&mut rng).min(u64::from(u32::MAX)) as u32
    };

    TrialOutcome {
        n_absorbed,
        n_atoms_detected,
        n_dark_atoms,
        inferred_n: n_atoms_detected + n_dark_atoms,
    }
}

/// Empirical confusion matrix over a range of true photon numbers, with the
/// adjacent-number discrimination errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    /// True photon numbers, one per matrix row.
    pub n_values: Vec<u32>,
    /// P(inferred = m | true = n); columns m = 0..=max observed.
    pub confusion: Vec<Vec<f64>>,
    /// Trials behind each row.
    pub trials: u32,
    /// Maximum-likelihood error between rows n and n+1 under equal priors
    /// (ties resolved toward the smaller n).
    pub error_n_vs_n1: Vec<f64>,
    pub rng_seed: u64,
}

impl DiscriminationReport {
    /// Binomial standard error per confusion cell.
    pub fn standard_errors(&self) -> Vec<Vec<f64>> {
        let t = f64::from(self.trials);
        self.confusion
            .iter()
            .map(|row| row.iter().map(|p| (p * (1.0 - p) / t).sqrt()).collect())
            .collect()
    }
}

/// Builds the empirical confusion matrix by running `trials` readouts per
/// true photon number in `n_range`.
pub fn discrimination_report(
    probs: &ChainProbabilities,
    n_atoms: u64,
    n_range: std::ops::RangeInclusive<u32>,
    trials: u32,
    rng_seed: u64,
) -> Result<DiscriminationReport> {
    let n_values: Vec<u32> = n_range.collect();
    if n_values.is_empty() {
        return Err(Error::invalid("n_range must be non-empty"));
    }
    let mut counts: Vec<Vec<u64>> = Vec::with_capacity(n_values.len());
    let mut max_inferred = 0u32;
    for (row, &n) in n_values.iter().enumerate() {
        // decorrelate rows by folding the row index into the seed
        let seed = rng_seed.wrapping_add((row as u64) << 32);
        let outcomes = run_trials_with(probs, n_atoms, n, trials, seed)?;
        let mut hist: Vec<u64> = Vec::new();
        for o in &outcomes {
            let m = o.inferred_n;
            if m > max_inferred {
                max_inferred = m;
            }
            if hist.len() <= m as usize {
                hist.resize(m as usize + 1, 0);
            }
            hist[m as usize] += 1;
        }
        counts.push(hist);
    }
    let width = max_inferred as usize + 1;
    let confusion: Vec<Vec<f64>> = counts
        .into_iter()
        .map(|mut hist| {
            hist.resize(width, 0);
            hist.into_iter().map(|c| c as f64 / f64::from(trials)).collect()
        })
        .collect();

    let error_n_vs_n1 = confusion
        .windows(2)
        .map(|rows| ml_error_between(&rows[0], &rows[1]))
        .collect();

    Ok(DiscriminationReport {
        n_values,
        confusion,
        trials,
        error_n_vs_n1,
        rng_seed,
    })
}

/// Equal-prior Bayes error between two outcome distributions:
/// ½·Σ_m min(P(m|a), P(m|b)). A maximum-likelihood decision with ties toward
/// the first row attains exactly this error.
pub fn ml_error_between(row_a: &[f64], row_b: &[f64]) -> f64 {
    let len = row_a.len().max(row_b.len());
    let mut acc = 0.0;
    for m in 0..len {
        let a = row_a.get(m).copied().unwrap_or(0.0);
        let b = row_b.get(m).copied().unwrap_or(0.0);
        acc += a.min(b);
    }
    0.5 * acc
}

/// Closed-form adjacent-number ML error for a pure binomial detector (per
/// photon detection probability `p`, no dark counts): the Bayes error
/// between Binomial(n, p) and Binomial(n+1, p).
pub fn binomial_ml_error(n: u32, p: f64) -> f64 {
    let row_a = binomial_pmf(n, p);
    let row_b = binomial_pmf(n + 1, p);
    ml_error_between(&row_a, &row_b)
}

fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    let n_us = n as usize;
    let mut pmf = vec![0.0; n_us + 1];
    let q = 1.0 - p;
    if q == 0.0 {
        pmf[n_us] = 1.0;
        return pmf;
    }
    // walk pmf(k) up from pmf(0) = q^n
    let mut v = q.powi(n as i32);
    for (k, slot) in pmf.iter_mut().enumerate() {
        *slot = v;
        if k < n_us {
            v = v * (n_us - k) as f64 / (k + 1) as f64 * (p / q);
        }
    }
    pmf
}

/// Expected fluorescence yield of one excited atom over a readout window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluorescenceYield<S> {
    /// Expected detected photons, duration/t_ro.
    pub expected_detected_photons: S,
    /// Underlying scattered-photon rate A₂₄·Ω_r²/(2Ω_r² + A₂₄²) (s⁻¹).
    pub scattered_rate: S,
}

pub fn fluorescence_photon_count<S: Scalar>(
    design: &DetectorDesign<S>,
    readout_duration: S,
) -> Result<FluorescenceYield<S>> {
    if !readout_duration.is_finite() || readout_duration <= S::zero() {
        return Err(Error::invalid("readout_duration must be positive"));
    }
    Ok(FluorescenceYield {
        expected_detected_photons: readout_duration / readout_time(design)?,
        scattered_rate: cycling_scatter_rate(design),
    })
}
