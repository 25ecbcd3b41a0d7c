//! One function per command. Each returns a table and a map of key scalars.

use std::f64::consts::PI;

use acmag_core::bounds::strategy_comparison;
use acmag_core::dynamics::{generator_closed_form, FieldParams, GeneratorForm, Param};
use acmag_core::fit::fit_log_log;
use acmag_core::linalg::PureState;
use acmag_core::nv::{
    adaptive_loop, parameter_uncertainty, scaling_study, sweep_signal, symmetric_range,
    AdaptiveConfig, ReadoutModel, ScalingConfig, SweepResult,
};
use acmag_core::qfim::{
    probe_search, qfim_closed_form, qfim_determinant, qfim_from_generators,
    relative_error_envelope, RelativeErrors,
};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{mhz, GeneratorChoice, RunConfig};
use crate::output::{Cell, Table};
use crate::{CliError, StudyCommand};

pub struct StudyOutput {
    pub table: Table,
    pub results: Value,
}

fn numerical(study: &'static str) -> impl Fn(acmag_core::Error) -> CliError {
    move |source| CliError::Numerical { study, source }
}

pub fn execute(command: StudyCommand, cfg: &RunConfig) -> Result<StudyOutput, CliError> {
    match command {
        StudyCommand::QfimScan => qfim_scan(cfg),
        StudyCommand::Convergence => convergence(cfg),
        StudyCommand::Bounds => bounds(cfg),
        StudyCommand::ProbeSearch => probes(cfg),
        StudyCommand::NvSweep => nv_sweep(cfg),
        StudyCommand::NvScaling => nv_scaling(cfg),
        StudyCommand::Adaptive => adaptive(cfg),
    }
}

fn qfim_scan(cfg: &RunConfig) -> Result<StudyOutput, CliError> {
    let err = numerical("qfim-scan");
    let p = cfg.field_params();
    let mut table = Table::new(&["omega_t", "t", "f_bb", "f_bw", "f_ww", "det"]);
    let mut last = None;
    for x in cfg.scan.values() {
        let t = x / p.omega;
        let f = qfim_closed_form(&p, t).map_err(&err)?;
        table.push(vec![x.into(), t.into(), f.f_bb.into(), f.f_bw.into(), f.f_ww.into(), qfim_determinant(&p, t).into()]);
        last = Some(f);
    }
    let mut results = Map::new();
    results.insert("points".into(), json!(table.rows.len()));
    if let Some(f) = last {
        results.insert("final_off_diagonal_ratio".into(), json!(f.off_diagonal_ratio()));
        results.insert("final_det".into(), json!(f.det()));
    }
    Ok(StudyOutput { table, results: Value::Object(results) })
}

fn convergence(cfg: &RunConfig) -> Result<StudyOutput, CliError> {
    let err = numerical("convergence");
    let p = cfg.field_params();
    let xs = cfg.convergence.scan().values();
    let envelopes: Vec<RelativeErrors> =
        xs.iter().map(|&x| relative_error_envelope(&p, x)).collect::<Result<_, _>>().map_err(&err)?;
    let mut header = vec!["omega_t"];
    header.extend(RelativeErrors::NAMES);
    let mut table = Table::new(&header);
    for e in &envelopes {
        let mut row: Vec<Cell> = vec![e.omega_t.into()];
        row.extend(e.values().iter().map(|&v| Cell::from(v)));
        table.push(row);
    }
    let mut slopes = Map::new();
    for (i, name) in RelativeErrors::NAMES.iter().enumerate() {
        let ys: Vec<f64> = envelopes.iter().map(|e| e.values()[i]).collect();
        let fit = fit_log_log(&xs, &ys).map_err(&err)?;
        slopes.insert(name.to_string(), json!(fit.slope));
    }
    Ok(StudyOutput { table, results: json!({ "slopes": slopes, "points": xs.len() }) })
}

fn bounds(cfg: &RunConfig) -> Result<StudyOutput, CliError> {
    let err = numerical("bounds");
    let p = cfg.field_params();
    let matched = FieldParams { b_c: p.b, omega_c: p.omega, phi_c: p.phi, ..p };
    let mut table = Table::new(&[
        "omega_t",
        "f_b_max",
        "f_w_max",
        "ratio_b",
        "ratio_w",
        "seq_var_ratio_b",
        "seq_var_ratio_w",
        "std_ratio_b",
        "std_ratio_w",
    ]);
    let mut last = None;
    for x in cfg.bounds.scan().values() {
        let c = strategy_comparison(&matched, x / p.omega, cfg.bounds.repetitions).map_err(&err)?;
        table.push(vec![
            x.into(),
            c.f_b_max.into(),
            c.f_w_max.into(),
            c.ratio_b.into(),
            c.ratio_w.into(),
            c.seq_var_ratio_b.into(),
            c.seq_var_ratio_w.into(),
            c.std_ratio_b.into(),
            c.std_ratio_w.into(),
        ]);
        last = Some(c);
    }
    let mut results = Map::new();
    results.insert("limit_ratio".into(), json!(16.0 / (PI * PI)));
    results.insert("limit_seq_var_ratio".into(), json!(8.0 / (PI * PI)));
    results.insert("limit_std_ratio".into(), json!(4.0 / PI));
    if let Some(c) = last {
        results.insert("final".into(), serde_json::to_value(c)?);
    }
    Ok(StudyOutput { table, results: Value::Object(results) })
}

fn probes(cfg: &RunConfig) -> Result<StudyOutput, CliError> {
    let err = numerical("probe-search");
    let p = cfg.field_params();
    let s = &cfg.probe_search;
    let form = match s.generators {
        GeneratorChoice::Asymptotic => GeneratorForm::Asymptotic,
        GeneratorChoice::Exact => GeneratorForm::Exact,
    };
    let g = generator_closed_form(&p, s.omega_t / p.omega, form);
    let bell = qfim_from_generators(&PureState::bell_phi_plus(), &g, true).map_err(&err)?.det();
    let samples = probe_search(&g, s.samples, cfg.seed).map_err(&err)?;
    let mut table = Table::new(&["index", "f_bb", "f_bw", "f_ww", "det", "sensor_purity"]);
    for x in &samples {
        table.push(vec![x.index.into(), x.qfim.f_bb.into(), x.qfim.f_bw.into(), x.qfim.f_ww.into(), x.det.into(), x.sensor_purity.into()]);
    }
    let best = samples.iter().max_by(|a, b| a.det.total_cmp(&b.det));
    let results = json!({
        "samples": samples.len(),
        "bell_det": bell,
        "max_det": best.map(|b| b.det),
        "max_det_index": best.map(|b| b.index),
        "max_excess_over_bell": best.map(|b| b.det - bell),
    });
    Ok(StudyOutput { table, results })
}

fn sweep_json(s: &SweepResult) -> Value {
    json!({ "slopes": s.slopes, "slope_stderr": s.slope_stderr, "center_value": s.values[s.center] })
}

fn nv_sweep(cfg: &RunConfig) -> Result<StudyOutput, CliError> {
    let err = numerical("nv-sweep");
    let nv = cfg.nv_params();
    let p = cfg.nv_field_params();
    let fixed = FieldParams { b: p.b_c, omega: p.omega_c, ..p };
    let seq = cfg.sequence.config();
    let readout = cfg.readout.model();
    let n = seq.n as f64;
    let b_values = symmetric_range(fixed.b, cfg.sweep.half_width_b / n, cfg.sweep.points);
    let w_values = symmetric_range(fixed.omega, mhz(cfg.sweep.half_width_omega_mhz) / (n * n), cfg.sweep.points);
    let sb = sweep_signal(Param::B, &b_values, &fixed, &seq, &nv, &readout, cfg.seed, 0).map_err(&err)?;
    let sw = sweep_signal(Param::Omega, &w_values, &fixed, &seq, &nv, &readout, cfg.seed, 1).map_err(&err)?;
    let u = parameter_uncertainty(&sb, &sw, &readout).map_err(&err)?;

    let used = readout.signals_used.count();
    let mut header = vec!["axis", "value", "p_phi_plus", "p_phi_minus", "p_psi_plus", "p_psi_minus"];
    let signal_names = ["signal_1", "signal_2", "signal_3"];
    header.extend(&signal_names[..used]);
    let mut table = Table::new(&header);
    for (axis, sweep) in [("b", &sb), ("omega", &sw)] {
        for ((v, probs), signals) in sweep.values.iter().zip(&sweep.probabilities).zip(&sweep.signals) {
            let mut row: Vec<Cell> = vec![axis.into(), (*v).into()];
            row.extend(probs.iter().map(|&x| Cell::from(x)));
            row.extend(signals.iter().map(|&x| Cell::from(x)));
            table.push(row);
        }
    }
    let results = json!({
        "frame_frequency": nv.frame_frequency(),
        "sigma": readout.sigma,
        "sweep_b": sweep_json(&sb),
        "sweep_omega": sweep_json(&sw),
        "uncertainty": serde_json::to_value(u)?,
    });
    Ok(StudyOutput { table, results })
}

fn nv_scaling(cfg: &RunConfig) -> Result<StudyOutput, CliError> {
    let err = numerical("nv-scaling");
    let nv = cfg.nv_params();
    let s = &cfg.scaling;
    let seq = cfg.sequence.config();
    let readout = ReadoutModel { shot_noise: s.noisy_signals, ..cfg.readout.model() };
    let study = ScalingConfig {
        n_values: (1..=s.n_max).collect(),
        tau: seq.tau,
        b_c: cfg.scaling_amplitude(),
        pulse: seq.pulse,
        clock: seq.clock,
        half_width_b: s.half_width_b,
        half_width_w: mhz(s.half_width_omega_mhz),
        points: s.points,
        readout,
    };
    let r = scaling_study(&study, &nv, cfg.seed).map_err(&err)?;
    let mut table = Table::new(&["n", "delta_b", "delta_w", "delta_b_err", "delta_w_err", "condition"]);
    for row in &r.rows {
        table.push(vec![
            row.n.into(),
            row.delta_b.into(),
            row.delta_w.into(),
            row.delta_b_err.into(),
            row.delta_w_err.into(),
            row.condition.into(),
        ]);
    }
    let results = json!({
        "exponent_b": r.exponent_b,
        "exponent_b_stderr": r.exponent_b_stderr,
        "exponent_w": r.exponent_w,
        "exponent_w_stderr": r.exponent_w_stderr,
        "residual_b": r.residual_b,
        "residual_w": r.residual_w,
        "b_c": study.b_c,
    });
    Ok(StudyOutput { table, results })
}

fn adaptive(cfg: &RunConfig) -> Result<StudyOutput, CliError> {
    let err = numerical("adaptive");
    let nv = cfg.nv_params();
    let truth = cfg.nv_field_params();
    let a = &cfg.adaptive;
    let readout = ReadoutModel { n_avg: a.shots, sigma: ReadoutModel::from_averages(a.shots).sigma, ..cfg.readout.model() };
    let loop_cfg = AdaptiveConfig {
        sequence: cfg.sequence.config(),
        readout,
        rounds: a.rounds,
        window_b: a.window_b,
        window_w: mhz(a.window_omega_mhz),
        ..AdaptiveConfig::default()
    };
    let initial = (truth.b + a.offset_b, truth.omega + mhz(a.offset_omega_mhz));
    let trajectories: Vec<_> = (0..a.trials)
        .into_par_iter()
        .map(|trial| adaptive_loop(&truth, initial, &loop_cfg, &nv, cfg.seed, trial as u64))
        .collect::<Result<_, _>>()
        .map_err(&err)?;

    let mut table = Table::new(&["trial", "round", "b", "omega", "error_b", "error_omega"]);
    let mut improved_b = 0;
    let mut improved_w = 0;
    let mut final_b = 0.0;
    let mut final_w = 0.0;
    for (trial, traj) in trajectories.iter().enumerate() {
        for e in traj {
            table.push(vec![
                trial.into(),
                e.round.into(),
                e.b.into(),
                e.omega.into(),
                (e.b - truth.b).into(),
                (e.omega - truth.omega).into(),
            ]);
        }
        let (first, last) = (traj[0], traj[traj.len() - 1]);
        improved_b += usize::from((last.b - truth.b).abs() < (first.b - truth.b).abs());
        improved_w += usize::from((last.omega - truth.omega).abs() < (first.omega - truth.omega).abs());
        final_b += (last.b - truth.b).abs();
        final_w += (last.omega - truth.omega).abs();
    }
    let trials = trajectories.len().max(1) as f64;
    let results = json!({
        "trials": trajectories.len(),
        "rounds": a.rounds,
        "sigma": readout.sigma,
        "fraction_improved_b": improved_b as f64 / trials,
        "fraction_improved_omega": improved_w as f64 / trials,
        "mean_final_abs_error_b": final_b / trials,
        "mean_final_abs_error_omega": final_w / trials,
    });
    Ok(StudyOutput { table, results })
}
