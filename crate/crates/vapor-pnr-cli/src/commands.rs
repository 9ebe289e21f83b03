//! Subcommand implementations.

use anyhow::{anyhow, bail, Context};
use serde_json::json;

use vapor_pnr::design::DetectorDesign;
use vapor_pnr::dynamics::{design_photon_drive, MarkovProblem};
use vapor_pnr::explore::{
    optimize, pareto_front, run_sweep, DesignField, OptimizationProblem, SweepSpec,
};
use vapor_pnr::model::{model_report, FrequencyConvention, ModelReport};
use vapor_pnr::ode::OdeOptions;
use vapor_pnr::oracle::{
    build_coupling, calibrate_to_bulk, effective_decay_rate, integrate_schrodinger,
    markov_prediction, sample_positions, AmplitudeState, ModeGrid,
};
use vapor_pnr::readout::{discrimination_report, run_trials, ChainProbabilities, ReadoutScenario};
use vapor_pnr::{constants::SPEED_OF_LIGHT, model};

use crate::config::RunConfig;
use crate::output::OutputSink;

fn design_of(config: &RunConfig) -> anyhow::Result<DetectorDesign<f64>> {
    Ok(config.design.to_design::<f64>()?)
}

fn fmt_metric(v: f64) -> String {
    format!("{v:.6e}")
}

/// budget: every closed-form metric under both frequency conventions.
pub fn cmd_budget(config: &RunConfig, sink: &mut OutputSink) -> anyhow::Result<()> {
    let design = design_of(config)?;
    let ordinary = model_report(&design, FrequencyConvention::Ordinary)?;
    let angular = model_report(&design, FrequencyConvention::Angular)?;
    let warnings = design.validity_warnings();

    let path = sink.write_json(
        "budget.json",
        json!({
            "ordinary": ordinary,
            "angular": angular,
            "validity_warnings": warnings,
        }),
    )?;

    print_budget_table(&ordinary, &angular);
    if !warnings.is_empty() {
        println!("validity warnings:");
        for w in &warnings {
            println!("  {}: {}", w.field, w.message);
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn print_budget_table(ordinary: &ModelReport<f64>, angular: &ModelReport<f64>) {
    let row = |name: &str, o: String, a: String, unit: &str| {
        println!("{name:<28} {o:>16} {a:>16}  {unit}");
    };
    println!("{:<28} {:>16} {:>16}  unit", "quantity", "ordinary", "angular");
    row(
        "atoms in beam (N)",
        ordinary.atom_count.to_string(),
        angular.atom_count.to_string(),
        "",
    );
    row(
        "collision time",
        fmt_metric(ordinary.collision_time),
        fmt_metric(angular.collision_time),
        "s",
    );
    row(
        "absorption length",
        fmt_metric(ordinary.absorption_length),
        fmt_metric(angular.absorption_length),
        "m",
    );
    row(
        "readout time",
        fmt_metric(ordinary.readout_time),
        fmt_metric(angular.readout_time),
        "s",
    );
    row(
        "zeeman detuning",
        fmt_metric(ordinary.zeeman_detuning),
        fmt_metric(angular.zeeman_detuning),
        "1/s",
    );
    row(
        "dark count prob (per atom)",
        fmt_metric(ordinary.dark_count_prob),
        fmt_metric(angular.dark_count_prob),
        "",
    );
    row(
        "net dark count (linear)",
        fmt_metric(ordinary.net_dark_count.linear),
        fmt_metric(angular.net_dark_count.linear),
        "",
    );
    row(
        "net dark count (exact)",
        fmt_metric(ordinary.net_dark_count.exact),
        fmt_metric(angular.net_dark_count.exact),
        "",
    );
    row(
        "loss: scatter",
        fmt_metric(ordinary.budget.loss_scatter),
        fmt_metric(angular.budget.loss_scatter),
        "",
    );
    row(
        "loss: transmission",
        fmt_metric(ordinary.budget.loss_transmission),
        fmt_metric(angular.budget.loss_transmission),
        "",
    );
    row(
        "loss: collision",
        fmt_metric(ordinary.budget.loss_collision),
        fmt_metric(angular.budget.loss_collision),
        "",
    );
    row(
        "eta",
        fmt_metric(ordinary.budget.eta),
        fmt_metric(angular.budget.eta),
        "",
    );
    row(
        "clamped",
        ordinary.budget.clamped.to_string(),
        angular.budget.clamped.to_string(),
        "",
    );
}

/// dynamics: closed-form and numeric absorption solves, optional oracle
/// comparison.
pub fn cmd_dynamics(config: &RunConfig, sink: &mut OutputSink) -> anyhow::Result<()> {
    let block = config
        .dynamics
        .as_ref()
        .ok_or_else(|| anyhow!("config has no dynamics block"))?;
    let design = design_of(config)?;
    let conv = config.convention;
    let t_p = design.pulse_duration;

    // escort off: nothing couples, the bulk normalization is undefined and
    // the drive is irrelevant
    let phi = if design.omega_e == 0.0 {
        num_complex::Complex::new(0.0, 0.0)
    } else {
        design_photon_drive(&design, conv)?
    };
    let escort = block.escort.to_pulse(t_p)?;
    let photon = block.photon.to_pulse(t_p)?;
    let problem = MarkovProblem {
        coupling_peak: vapor_pnr::dynamics::coupling_peak(&design, conv),
        escort: escort.clone(),
        drive_peak: phi,
        photon,
        decay_rate: design.species.a_31,
    };

    let numeric = problem.solve_numeric(&OdeOptions::default(), block.record_trajectory)?;
    let closed = if block.escort.is_square() && block.photon.is_square() {
        Some(problem.solve_square()?)
    } else {
        None
    };
    let agreement_rel = closed.as_ref().map(|c| {
        (c.beta_final - numeric.beta_final).norm() / c.beta_final.norm().max(1e-300)
    });

    if block.record_trajectory && sink.format.wants_csv() {
        let mut body = Vec::new();
        numeric.write_trajectory_csv(&mut body)?;
        sink.write_csv("dynamics_trajectory.csv", &String::from_utf8(body)?)?;
    }

    let oracle_data = match &block.oracle {
        None => None,
        Some(oracle_block) => Some(run_oracle_comparison(
            config,
            &design,
            conv,
            oracle_block,
            &escort,
            sink,
        )?),
    };

    let data = json!({
        "convention": conv,
        "photon_drive": {"re": phi.re, "im": phi.im},
        "numeric": {
            "p_absorb": numeric.p_absorb,
            "p_scatter": numeric.p_scatter,
            "beta_re": numeric.beta_final.re,
            "beta_im": numeric.beta_final.im,
        },
        "closed_form": closed.as_ref().map(|c| json!({
            "p_absorb": c.p_absorb,
            "p_scatter": c.p_scatter,
            "beta_re": c.beta_final.re,
            "beta_im": c.beta_final.im,
        })),
        "agreement_rel": agreement_rel,
        "oracle": oracle_data,
    });
    let path = sink.write_json("dynamics.json", &data)?;

    println!("p_absorb (numeric)  {:.9e}", numeric.p_absorb);
    if let Some(c) = &closed {
        println!("p_absorb (closed)   {:.9e}", c.p_absorb);
    }
    if let Some(a) = agreement_rel {
        println!("closed/numeric agreement (rel) {a:.3e}");
    }
    if let Some(o) = &oracle_data {
        println!(
            "oracle absorption {:.6e} vs markov {:.6e} (rel {:.3e}), norm drift {:.3e}",
            o["aggregate_absorption"].as_f64().unwrap_or(f64::NAN),
            o["markov_prediction"].as_f64().unwrap_or(f64::NAN),
            o["relative_deviation"].as_f64().unwrap_or(f64::NAN),
            o["norm_drift"].as_f64().unwrap_or(f64::NAN),
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn run_oracle_comparison(
    config: &RunConfig,
    design: &DetectorDesign<f64>,
    conv: FrequencyConvention,
    block: &crate::config::OracleBlock,
    escort: &vapor_pnr::pulse::PulseShape<f64>,
    sink: &mut OutputSink,
) -> anyhow::Result<serde_json::Value> {
    let t_p = design.pulse_duration;
    let positions = sample_positions(block.atom_count, design.cell_length, config.seed);
    let spacing = 2.0 * std::f64::consts::PI / (block.recurrence_pulses * t_p);
    let bandwidth = block.mode_count as f64 * spacing;
    let omega_0 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / design.photon_wavelength;
    let grid = ModeGrid::flat_comb(
        block.mode_count,
        omega_0,
        bandwidth,
        &positions,
        SPEED_OF_LIGHT,
    )?;
    let sigma = block.spectral_width_pulses / t_p;
    let initial = AmplitudeState::gaussian_photon(&grid, omega_0, sigma, 0.5 * t_p)?;

    let l_abs = model::absorption_length(design, conv)?;
    let bulk = 1.0 - (-(design.passes as f64) * design.cell_length / l_abs).exp();
    if !(0.0..1.0).contains(&bulk) || bulk <= 0.0 {
        bail!("bulk absorption {bulk} outside (0,1); oracle calibration undefined");
    }

    let tight = OdeOptions {
        rtol: 1e-11,
        atol: 1e-14,
        ..OdeOptions::default()
    };
    let calibration =
        calibrate_to_bulk(design, &grid, escort, conv, &initial, t_p, bulk, &tight)?;
    let coupling = build_coupling(design, &grid, escort.clone(), conv, calibration)?;
    let trajectory = integrate_schrodinger(&grid, &coupling, &initial, t_p, &tight)?;
    let aggregate = trajectory.final_state().absorbed_probability();
    let markov = markov_prediction(&grid, &coupling, &initial, t_p, 2048, &tight)?;
    let deviation = (aggregate - markov).abs() / markov.max(1e-300);

    if sink.format.wants_csv() {
        let mut body = Vec::new();
        trajectory.write_csv(&mut body)?;
        sink.write_csv("oracle_trajectory.csv", &String::from_utf8(body)?)?;
    }

    Ok(json!({
        "mode_count": grid.mode_count(),
        "atom_count": grid.atom_count(),
        "mode_spacing": grid.mode_spacing(),
        "quantization_bandwidth": grid.quantization_bandwidth(),
        "calibration": calibration,
        "effective_decay_rate": effective_decay_rate(&grid, &coupling),
        "bulk_target": bulk,
        "aggregate_absorption": aggregate,
        "markov_prediction": markov,
        "relative_deviation": deviation,
        "norm_drift": trajectory.norm_drift,
    }))
}

/// mc: seeded readout trials and optional confusion matrix.
pub fn cmd_mc(config: &RunConfig, sink: &mut OutputSink) -> anyhow::Result<()> {
    let block = config
        .mc
        .as_ref()
        .ok_or_else(|| anyhow!("config has no mc block"))?;
    let design = design_of(config)?;
    let conv = config.convention;
    let t_ro = model::readout_time(&design)?;
    let duration = block.readout_duration.resolve(t_ro)?;

    let scenario = ReadoutScenario {
        design: design.clone(),
        convention: conv,
        n_photons_true: block.n_photons_true,
        readout_duration: duration,
        trials: block.trials,
        rng_seed: config.seed,
    };
    for w in scenario.validity_warnings() {
        eprintln!("warning: {w}");
    }

    let probs = ChainProbabilities::from_design(&design, conv, duration)?;
    let outcomes = run_trials(&scenario)?;
    let trials = outcomes.len() as f64;
    let mean_inferred =
        outcomes.iter().map(|o| f64::from(o.inferred_n)).sum::<f64>() / trials;
    let frac_exact = outcomes
        .iter()
        .filter(|o| o.inferred_n == block.n_photons_true)
        .count() as f64
        / trials;
    let frac_any_dark =
        outcomes.iter().filter(|o| o.n_dark_atoms >= 1).count() as f64 / trials;
    let mean_dark =
        outcomes.iter().map(|o| f64::from(o.n_dark_atoms)).sum::<f64>() / trials;

    if sink.format.wants_csv() {
        let mut body = String::from("trial,n_absorbed,n_atoms_detected,n_dark_atoms,inferred_n\n");
        for (i, o) in outcomes.iter().enumerate() {
            body.push_str(&format!(
                "{},{},{},{},{}\n",
                i, o.n_absorbed, o.n_atoms_detected, o.n_dark_atoms, o.inferred_n
            ));
        }
        sink.write_csv("mc_trials.csv", &body)?;
    }

    let confusion = match &block.confusion {
        None => None,
        Some(c) => {
            if c.n_min > c.n_max {
                bail!("confusion block needs n_min <= n_max");
            }
            let report = discrimination_report(
                &probs,
                model::atom_count(&design),
                c.n_min..=c.n_max,
                c.trials,
                config.seed,
            )?;
            if sink.format.wants_csv() {
                let mut body = String::from("true_n");
                let width = report.confusion.first().map(|r| r.len()).unwrap_or(0);
                for m in 0..width {
                    body.push_str(&format!(",m{m}"));
                }
                body.push('\n');
                for (row, &n) in report.confusion.iter().zip(&report.n_values) {
                    body.push_str(&n.to_string());
                    for p in row {
                        body.push_str(&format!(",{p}"));
                    }
                    body.push('\n');
                }
                sink.write_csv("mc_confusion.csv", &body)?;
            }
            Some(report)
        }
    };

    let data = json!({
        "convention": conv,
        "readout_duration_s": duration,
        "chain_probabilities": probs,
        "per_photon_efficiency": probs.per_photon_efficiency(),
        "n_photons_true": block.n_photons_true,
        "trials": block.trials,
        "mean_inferred": mean_inferred,
        "fraction_inferred_exact": frac_exact,
        "fraction_with_dark": frac_any_dark,
        "mean_dark_atoms": mean_dark,
        "confusion": confusion,
    });
    let path = if sink.format.wants_json() {
        Some(sink.write_json("mc_summary.json", &data)?)
    } else {
        None
    };

    println!("per-photon efficiency {:.6}", probs.per_photon_efficiency());
    println!("mean inferred n       {mean_inferred:.4}");
    println!("fraction exact        {frac_exact:.4}");
    println!("fraction with dark    {frac_any_dark:.4}");
    if let Some(p) = path {
        println!("wrote {}", p.display());
    }
    Ok(())
}

/// sweep: Cartesian grid over design fields.
pub fn cmd_sweep(config: &RunConfig, sink: &mut OutputSink) -> anyhow::Result<()> {
    let block = config
        .sweep
        .as_ref()
        .ok_or_else(|| anyhow!("config has no sweep block"))?;
    let design = design_of(config)?;
    let axes = block
        .axes
        .iter()
        .map(|a| a.to_axis())
        .collect::<anyhow::Result<Vec<_>>>()?;
    if axes.is_empty() {
        bail!("sweep needs at least one axis");
    }
    let outputs = block.metrics()?;
    let spec = SweepSpec {
        base: design,
        convention: config.convention,
        axes,
        outputs: outputs.clone(),
    };
    let table = run_sweep(&spec)?;

    if sink.format.wants_csv() {
        let mut units = String::from("# units:");
        for axis in &spec.axes {
            units.push_str(&format!(" {}={}", axis.field.name(), axis.field.unit()));
        }
        for m in &outputs {
            units.push_str(&format!(" {}={}", m.name(), m.unit()));
        }
        units.push('\n');

        let mut body = units;
        let mut header: Vec<String> = table.axis_names.clone();
        header.extend(table.metric_names.iter().cloned());
        header.push("clamped".into());
        header.push("validity_warnings".into());
        header.push("error".into());
        body.push_str(&header.join(","));
        body.push('\n');
        for row in &table.rows {
            let mut cells: Vec<String> = row.coords.iter().map(|v| v.to_string()).collect();
            for v in &row.values {
                cells.push(v.map(|x| x.to_string()).unwrap_or_default());
            }
            cells.push(row.clamped.to_string());
            cells.push(row.validity_warnings.to_string());
            cells.push(row.error.clone().unwrap_or_default());
            body.push_str(&cells.join(","));
            body.push('\n');
        }
        sink.write_csv("sweep.csv", &body)?;
    }
    if sink.format.wants_json() {
        sink.write_json("sweep.json", &table)?;
    }

    println!(
        "swept {} points over {} axes",
        table.rows.len(),
        table.axis_names.len()
    );
    for p in sink.written() {
        println!("wrote {}", p.display());
    }
    Ok(())
}

/// optimize: constrained search, trace, and optional Pareto front.
pub fn cmd_optimize(config: &RunConfig, sink: &mut OutputSink) -> anyhow::Result<()> {
    let block = config
        .optimize
        .as_ref()
        .ok_or_else(|| anyhow!("config has no optimize block"))?;
    let design = design_of(config)?;
    let free = block
        .free
        .iter()
        .map(|f| {
            let field: DesignField = f.field.parse()?;
            Ok((field, f.min, f.max))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let problem = OptimizationProblem {
        base: design,
        convention: config.convention,
        free,
        dark_budget: block.dark_budget,
        require_validity: block.require_validity,
    };

    let outcome = optimize(&problem).context("optimization failed")?;

    let coords: serde_json::Map<String, serde_json::Value> = problem
        .free
        .iter()
        .zip(&outcome.coords)
        .map(|((field, _, _), &v)| (field.name().to_string(), json!(v)))
        .collect();
    let data = json!({
        "convention": config.convention,
        "dark_budget": block.dark_budget,
        "require_validity": block.require_validity,
        "optimum": coords,
        "report": outcome.report,
        "converged": outcome.converged,
        "evaluations": outcome.evaluations,
    });
    sink.write_json("optimize.json", &data)?;
    sink.write_jsonl("optimize_trace.jsonl", &outcome.trace)?;

    if block.pareto_density > 0 {
        let front = pareto_front(&problem, block.pareto_density)?;
        let mut body = String::from("# nondominated (eta max, net_dark_exact min)\n");
        let mut header: Vec<String> = problem
            .free
            .iter()
            .map(|(f, _, _)| f.name().to_string())
            .collect();
        header.push("eta".into());
        header.push("net_dark_exact".into());
        body.push_str(&header.join(","));
        body.push('\n');
        for point in &front {
            let mut cells: Vec<String> = point.coords.iter().map(|v| v.to_string()).collect();
            cells.push(point.eta.to_string());
            cells.push(point.net_dark_exact.to_string());
            body.push_str(&cells.join(","));
            body.push('\n');
        }
        sink.write_csv("pareto.csv", &body)?;
    }

    println!(
        "optimum eta {:.6} (net dark exact {:.3e}) after {} evaluations",
        outcome.report.budget.eta, outcome.report.net_dark_count.exact, outcome.evaluations
    );
    for ((field, _, _), &v) in problem.free.iter().zip(&outcome.coords) {
        println!("  {} = {v:.6e}", field.name());
    }
    for p in sink.written() {
        println!("wrote {}", p.display());
    }
    Ok(())
}
