//! Repetition-count scaling, decoupling error order and the adaptive loop.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::readout::{
    parameter_uncertainty, sequence_probabilities, sweep_signal, symmetric_range, ReadoutModel,
    SequenceConfig,
};
use super::{
    build_sequence, ideal_propagator, sequence_propagator, NvParams, PiPulseModel, TargetClock,
    EXPERIMENT_CONTROL_AMPLITUDE,
};
use crate::dynamics::{FieldParams, Param};
use crate::error::{Error, Result};
use crate::fit::{fit_log_log, LineFit};
use crate::seeding::task_rng;

/// Least-squares slope of `ln δ` against `ln N`, with its standard error.
pub fn fit_scaling_exponent(n_values: &[f64], deltas: &[f64]) -> Result<(f64, f64)> {
    let LineFit { slope, slope_stderr, .. } = fit_log_log(n_values, deltas)?;
    Ok((slope, slope_stderr))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub n_values: Vec<usize>,
    pub tau: f64,
    /// Operating amplitude, G.
    pub b_c: f64,
    pub pulse: PiPulseModel,
    pub clock: TargetClock,
    /// Sweep half-widths at `N = 1`; they shrink as `1/N` (amplitude) and
    /// `1/N²` (frequency).
    pub half_width_b: f64,
    pub half_width_w: f64,
    pub points: usize,
    pub readout: ReadoutModel,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            n_values: (1..=8).collect(),
            tau: 0.001,
            b_c: EXPERIMENT_CONTROL_AMPLITUDE,
            pulse: PiPulseModel::Ideal,
            clock: TargetClock::Contiguous,
            half_width_b: 1.0,
            half_width_w: 500.0,
            points: 5,
            readout: ReadoutModel::default().noiseless(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub delta_b: f64,
    pub delta_w: f64,
    pub delta_b_err: f64,
    pub delta_w_err: f64,
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub rows: Vec<ScalingRow>,
    pub exponent_b: f64,
    pub exponent_b_stderr: f64,
    pub exponent_w: f64,
    pub exponent_w_stderr: f64,
    /// RMS residual of `ln δ` about the fitted power law.
    pub residual_b: f64,
    pub residual_w: f64,
}

/// Uncertainties from amplitude and frequency sweeps at each `N`, and the
/// fitted power laws. Sweep `k` of repetition index `i` uses noise stream
/// trial `2i + k`.
pub fn scaling_study(cfg: &ScalingConfig, nv: &NvParams, seed: u64) -> Result<ScalingResult> {
    if cfg.n_values.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, found: cfg.n_values.len() });
    }
    if cfg.points < 3 {
        return Err(Error::TooFewPoints { needed: 3, found: cfg.points });
    }
    if !(cfg.half_width_b > 0.0 && cfg.half_width_w > 0.0) {
        return Err(Error::InvalidInput("sweep half-widths must be positive".into()));
    }
    let fixed = nv.operating_point(cfg.b_c);
    let rows: Vec<ScalingRow> = cfg
        .n_values
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let seq = SequenceConfig { n, tau: cfg.tau, pulse: cfg.pulse, clock: cfg.clock };
            let nf = n as f64;
            let b_values = symmetric_range(fixed.b, cfg.half_width_b / nf, cfg.points);
            let w_values = symmetric_range(fixed.omega, cfg.half_width_w / (nf * nf), cfg.points);
            let trial = 2 * i as u64;
            let sb = sweep_signal(Param::B, &b_values, &fixed, &seq, nv, &cfg.readout, seed, trial)?;
            let sw = sweep_signal(Param::Omega, &w_values, &fixed, &seq, nv, &cfg.readout, seed, trial + 1)?;
            let u = parameter_uncertainty(&sb, &sw, &cfg.readout)?;
            Ok(ScalingRow {
                n,
                delta_b: u.delta_b,
                delta_w: u.delta_w,
                delta_b_err: u.delta_b_err,
                delta_w_err: u.delta_w_err,
                condition: u.condition,
            })
        })
        .collect::<Result<_>>()?;
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let fb = fit_log_log(&ns, &rows.iter().map(|r| r.delta_b).collect::<Vec<_>>())?;
    let fw = fit_log_log(&ns, &rows.iter().map(|r| r.delta_w).collect::<Vec<_>>())?;
    Ok(ScalingResult {
        rows,
        exponent_b: fb.slope,
        exponent_b_stderr: fb.slope_stderr,
        exponent_w: fw.slope,
        exponent_w_stderr: fw.slope_stderr,
        residual_b: fb.rms_residual,
        residual_w: fw.rms_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecouplingError {
    pub n: usize,
    pub tau: f64,
    /// Frobenius norm of `U_seq − U_ideal`.
    pub error: f64,
}

/// Sequence error against the decoupled reference at fixed signal time
/// `n0·tau0`, halving `τ` (and doubling `N`) `halvings` times. Ideal pulses,
/// contiguous clock.
pub fn decoupling_error_series(
    nv: &NvParams,
    p: &FieldParams,
    n0: usize,
    tau0: f64,
    halvings: usize,
) -> Result<Vec<DecouplingError>> {
    (0..=halvings)
        .map(|k| {
            let n = n0 << k;
            let tau = tau0 / (1u64 << k) as f64;
            let seq = build_sequence(n, tau, PiPulseModel::Ideal, TargetClock::Contiguous)?;
            let u = sequence_propagator(&seq, nv, p)?;
            let ideal = ideal_propagator(&seq, nv, p, 64)?;
            Ok(DecouplingError { n, tau, error: (&u - &ideal).frobenius_norm() })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveConfig {
    pub sequence: SequenceConfig,
    pub readout: ReadoutModel,
    pub rounds: usize,
    /// Allowed distance of the estimate from the initial guess.
    pub window_b: f64,
    pub window_w: f64,
    /// Finite-difference steps for the model Jacobian.
    pub step_b: f64,
    pub step_w: f64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            sequence: SequenceConfig { n: 8, tau: 0.001, pulse: PiPulseModel::Ideal, clock: TargetClock::Contiguous },
            readout: ReadoutModel::default(),
            rounds: 5,
            window_b: 0.5,
            window_w: 20.0,
            step_b: 1e-3,
            step_w: 1e-1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub round: usize,
    pub b: f64,
    pub omega: f64,
}

fn signals(probs: [f64; 4], readout: &ReadoutModel) -> Vec<f64> {
    let p = readout.apply_spam(probs);
    (0..readout.signals_used.count()).map(|i| 1.0 - p[i]).collect()
}

/// Repeatedly sets the control to the current estimate, measures noisy
/// signals against the true field `truth`, and takes a least-squares Newton
/// step through the model Jacobian. Round `r` draws noise from stream
/// `(seed, r, trial)`. Returns the initial guess followed by one estimate per
/// round.
pub fn adaptive_loop(
    truth: &FieldParams,
    initial: (f64, f64),
    cfg: &AdaptiveConfig,
    nv: &NvParams,
    seed: u64,
    trial: u64,
) -> Result<Vec<Estimate>> {
    cfg.readout.validate()?;
    let mut est = Estimate { round: 0, b: initial.0, omega: initial.1 };
    let mut out = vec![est];
    for round in 1..=cfg.rounds {
        let control = FieldParams { b_c: est.b, omega_c: est.omega, phi_c: -truth.phi, ..*truth };
        let mut rng = task_rng(seed, round as u64, trial);
        let measured: Vec<f64> = signals(sequence_probabilities(&cfg.sequence, nv, &control)?, &cfg.readout)
            .into_iter()
            .map(|s| {
                let noise: f64 = if cfg.readout.shot_noise { rng.sample(StandardNormal) } else { 0.0 };
                s + cfg.readout.sigma * noise
            })
            .collect();
        let model = |b: f64, w: f64| -> Result<Vec<f64>> {
            let p = FieldParams { b, omega: w, ..control };
            Ok(signals(sequence_probabilities(&cfg.sequence, nv, &p)?, &cfg.readout))
        };
        let predicted = model(est.b, est.omega)?;
        let (bp, bm) = (model(est.b + cfg.step_b, est.omega)?, model(est.b - cfg.step_b, est.omega)?);
        let (wp, wm) = (model(est.b, est.omega + cfg.step_w)?, model(est.b, est.omega - cfg.step_w)?);
        let m = predicted.len();
        let j: Vec<[f64; 2]> = (0..m)
            .map(|i| [(bp[i] - bm[i]) / (2.0 * cfg.step_b), (wp[i] - wm[i]) / (2.0 * cfg.step_w)])
            .collect();
        let (inv, _) = super::readout::normal_inverse(&j)?;
        let mut rhs = [0.0; 2];
        for i in 0..m {
            let r = measured[i] - predicted[i];
            rhs[0] += j[i][0] * r;
            rhs[1] += j[i][1] * r;
        }
        est = Estimate {
            round,
            b: est.b + inv[0][0] * rhs[0] + inv[0][1] * rhs[1],
            omega: est.omega + inv[1][0] * rhs[0] + inv[1][1] * rhs[1],
        };
        let outside = !((est.b - initial.0).abs() <= cfg.window_b && (est.omega - initial.1).abs() <= cfg.window_w);
        if outside {
            return Err(Error::Divergence { round });
        }
        out.push(est);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let ns: Vec<f64> = (1..=8).map(f64::from).collect();
        let d: Vec<f64> = ns.iter().map(|n| 3.7 / n).collect();
        let (e, s) = fit_scaling_exponent(&ns, &d).unwrap();
        assert!((e + 1.0).abs() < 1e-12);
        assert!(s < 1e-12);
        assert!(fit_scaling_exponent(&ns, &[0.0; 8]).is_err());
        assert!(fit_scaling_exponent(&ns[..2], &d[..2]).is_err());
    }

    #[test]
    fn zero_rounds_returns_initial_guess() {
        let nv = NvParams::default();
        let truth = nv.operating_point(5.65);
        let cfg = AdaptiveConfig { rounds: 0, ..AdaptiveConfig::default() };
        let t = adaptive_loop(&truth, (5.5, truth.omega + 3.0), &cfg, &nv, 0, 0).unwrap();
        assert_eq!(t, vec![Estimate { round: 0, b: 5.5, omega: truth.omega + 3.0 }]);
    }

    #[test]
    fn noiseless_newton_step_converges() {
        let nv = NvParams::default();
        let truth = nv.operating_point(5.65);
        let cfg = AdaptiveConfig { rounds: 1, readout: ReadoutModel::default().noiseless(), ..AdaptiveConfig::default() };
        let start = (5.60, truth.omega - 2.0);
        let t = adaptive_loop(&truth, start, &cfg, &nv, 0, 0).unwrap();
        let last = t.last().unwrap();
        assert!((last.b - truth.b).abs() < 0.1 * (start.0 - truth.b).abs());
        assert!((last.omega - truth.omega).abs() < 0.1 * (start.1 - truth.omega).abs());
    }

    #[test]
    fn divergence_names_round() {
        let nv = NvParams::default();
        let truth = nv.operating_point(5.65);
        let cfg = AdaptiveConfig {
            readout: ReadoutModel::default().noiseless(),
            window_b: 1e-4,
            ..AdaptiveConfig::default()
        };
        let err = adaptive_loop(&truth, (5.5, truth.omega), &cfg, &nv, 0, 0);
        assert_eq!(err, Err(Error::Divergence { round: 1 }));
    }
}
