//! Bell-basis readout, signal sweeps and Jacobian-based uncertainties.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_sequence, simulate_sequence, NvParams, PiPulseModel, TargetClock};
use crate::dynamics::{FieldParams, Param};
use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::linalg::{bell_basis, expm_hermitian, on_sensor, pauli_vector, Operator, PureState};
use crate::seeding::task_rng;

/// Sequence averages per sweep point used in the experiment.
pub const DEFAULT_AVERAGES: f64 = 3e6;

/// Largest acceptable condition number of the column-normalized Jacobian.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSet {
    Two,
    Three,
}

impl SignalSet {
    pub fn count(self) -> usize {
        match self {
            Self::Two => 2,
            Self::Three => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutModel {
    /// Per-signal shot-noise standard deviation.
    pub sigma: f64,
    pub n_avg: f64,
    pub spam_contrast: f64,
    pub spam_baseline: f64,
    pub signals_used: SignalSet,
    /// Add Gaussian noise of width `sigma` to simulated signals.
    pub shot_noise: bool,
}

impl Default for ReadoutModel {
    fn default() -> Self {
        Self::from_averages(DEFAULT_AVERAGES)
    }
}

impl ReadoutModel {
    /// Shot-noise limit `√(p(1−p)/n)` at `p = 1/4`, no SPAM, two signals,
    /// noise on.
    pub fn from_averages(n_avg: f64) -> Self {
        Self {
            sigma: (0.25 * 0.75 / n_avg).sqrt(),
            n_avg,
            spam_contrast: 1.0,
            spam_baseline: 0.0,
            signals_used: SignalSet::Two,
            shot_noise: true,
        }
    }

    pub fn noiseless(self) -> Self {
        Self { shot_noise: false, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidInput("readout sigma must be positive".into()));
        }
        if !(self.n_avg > 0.0) {
            return Err(Error::InvalidInput("readout n_avg must be positive".into()));
        }
        let c = self.spam_contrast;
        let b = self.spam_baseline;
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidInput("spam_contrast must lie in (0, 1]".into()));
        }
        if !(b >= 0.0) || b + c > 1.0 {
            return Err(Error::InvalidInput("spam_baseline must be >= 0 with baseline + contrast <= 1".into()));
        }
        Ok(())
    }

    /// `p ← b + c·p` on each outcome.
    pub fn apply_spam(&self, p: [f64; 4]) -> [f64; 4] {
        p.map(|v| self.spam_baseline + self.spam_contrast * v)
    }
}

/// `U_r = exp(−iπ(σx+σy+σz)/(3√3))`, a 2π/3 turn about (1,1,1).
pub fn readout_rotation() -> Operator {
    let n = pauli_vector([1.0, 1.0, 1.0]);
    expm_hermitian(&n, PI / (3.0 * 3f64.sqrt())).expect("2x2")
}

/// Probabilities of `(Φ+, Φ−, Ψ+, Ψ−)` after `rotation` on the electron.
pub fn bell_probabilities(state: &PureState, rotation: &Operator) -> Result<[f64; 4]> {
    if state.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: state.dim() });
    }
    let rotated = on_sensor(rotation).apply(state)?;
    let basis = bell_basis();
    Ok([0, 1, 2, 3].map(|i| basis[i].inner(&rotated).norm_sqr()))
}

/// Bell-basis probabilities after the standard readout rotation.
pub fn bell_readout(state: &PureState) -> Result<[f64; 4]> {
    bell_probabilities(state, &readout_rotation())
}

/// Sequence settings shared by sweeps and studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub n: usize,
    pub tau: f64,
    pub pulse: PiPulseModel,
    pub clock: TargetClock,
}

/// Noiseless Bell probabilities for field parameters `p`.
pub fn sequence_probabilities(cfg: &SequenceConfig, nv: &NvParams, p: &FieldParams) -> Result<[f64; 4]> {
    let seq = build_sequence(cfg.n, cfg.tau, cfg.pulse, cfg.clock)?;
    let state = simulate_sequence(&seq, nv, p, &PureState::bell_phi_plus())?;
    bell_readout(&state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: Param,
    pub values: Vec<f64>,
    /// Noiseless Bell probabilities before SPAM.
    pub probabilities: Vec<[f64; 4]>,
    /// `1 − p_i` for the signals in use, after SPAM and noise.
    pub signals: Vec<Vec<f64>>,
    /// Index of the sweep value closest to the operating point.
    pub center: usize,
    /// `∂s_i/∂θ` from the local linear fit, one per signal.
    pub slopes: Vec<f64>,
    pub slope_stderr: Vec<f64>,
}

const SLOPE_WINDOW: usize = 5;

/// Simulates the sequence at every value of `axis` with the remaining
/// parameters from `fixed`, and fits local slopes over a 5-point window
/// centered on the value nearest the operating point (`fixed` itself).
/// Point `i` draws its noise from stream `(seed, i, trial)`.
#[allow(clippy::too_many_arguments)]
pub fn sweep_signal(
    axis: Param,
    values: &[f64],
    fixed: &FieldParams,
    cfg: &SequenceConfig,
    nv: &NvParams,
    readout: &ReadoutModel,
    seed: u64,
    trial: u64,
) -> Result<SweepResult> {
    if values.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, found: values.len() });
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !(hi > lo) {
        return Err(Error::InvalidInput("sweep range has zero width".into()));
    }
    readout.validate()?;
    let operating = match axis {
        Param::B => fixed.b,
        Param::Omega => fixed.omega,
    };
    let used = readout.signals_used.count();
    let points: Vec<([f64; 4], Vec<f64>)> = values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let p = match axis {
                Param::B => FieldParams { b: v, ..*fixed },
                Param::Omega => FieldParams { omega: v, ..*fixed },
            };
            let probs = sequence_probabilities(cfg, nv, &p)?;
            let distorted = readout.apply_spam(probs);
            let mut rng = task_rng(seed, i as u64, trial);
            let signals = (0..used)
                .map(|k| {
                    let noise: f64 = if readout.shot_noise { rng.sample(StandardNormal) } else { 0.0 };
                    1.0 - distorted[k] + readout.sigma * noise
                })
                .collect();
            Ok((probs, signals))
        })
        .collect::<Result<_>>()?;
    let (probabilities, signals): (Vec<_>, Vec<_>) = points.into_iter().unzip();

    let center = values
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - operating).abs().total_cmp(&(b.1 - operating).abs()))
        .map(|(i, _)| i)
        .unwrap();
    let half = SLOPE_WINDOW / 2;
    let start = center.saturating_sub(half);
    let end = (center + half + 1).min(values.len());
    if end - start < 3 {
        return Err(Error::TooFewPoints { needed: 3, found: end - start });
    }
    let x = &values[start..end];
    let mut slopes = Vec::with_capacity(used);
    let mut slope_stderr = Vec::with_capacity(used);
    for k in 0..used {
        let y: Vec<f64> = signals[start..end].iter().map(|s| s[k]).collect();
        let fit = fit_line(x, &y)?;
        slopes.push(fit.slope);
        slope_stderr.push(fit.slope_stderr);
    }
    Ok(SweepResult { axis, values: values.to_vec(), probabilities, signals, center, slopes, slope_stderr })
}

/// `count` equally spaced values on `[center − half_width, center + half_width]`.
pub fn symmetric_range(center: f64, half_width: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![center];
    }
    (0..count)
        .map(|i| center - half_width + 2.0 * half_width * i as f64 / (count - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterUncertainty {
    pub delta_b: f64,
    pub delta_w: f64,
    /// Error bars from the slope standard errors.
    pub delta_b_err: f64,
    pub delta_w_err: f64,
    /// Condition number of the column-normalized Jacobian.
    pub condition: f64,
}

/// `(JᵀJ)⁻¹` for an `m×2` Jacobian, with the condition number of the
/// column-normalized matrix.
pub(crate) fn normal_inverse(j: &[[f64; 2]]) -> Result<([[f64; 2]; 2], f64)> {
    let col_norm = |c: usize| j.iter().map(|r| r[c] * r[c]).sum::<f64>().sqrt();
    let (n0, n1) = (col_norm(0), col_norm(1));
    if n0 == 0.0 || n1 == 0.0 {
        return Err(Error::SingularJacobian { condition: f64::INFINITY });
    }
    let cross: f64 = j.iter().map(|r| r[0] * r[1]).sum::<f64>() / (n0 * n1);
    // Normalized Gram matrix [[1, c], [c, 1]] has eigenvalues 1 ± |c|.
    let lam_max = 1.0 + cross.abs();
    let lam_min = 1.0 - cross.abs();
    let condition = if lam_min <= 0.0 { f64::INFINITY } else { (lam_max / lam_min).sqrt() };
    if condition > MAX_CONDITION {
        return Err(Error::SingularJacobian { condition });
    }
    let a = n0 * n0;
    let d = n1 * n1;
    let b = cross * n0 * n1;
    let det = a * d - b * b;
    Ok(([[d / det, -b / det], [-b / det, a / det]], condition))
}

fn deltas(j: &[[f64; 2]], sigma: f64) -> Result<([f64; 2], f64)> {
    let (inv, condition) = normal_inverse(j)?;
    Ok(([sigma * inv[0][0].sqrt(), sigma * inv[1][1].sqrt()], condition))
}

/// `δθ_j = σ √[(JᵀJ)⁻¹]_jj` with `J_ij = ∂s_i/∂θ_j` from the two sweeps.
/// With two signals this is `J⁻¹σ²J⁻ᵀ`; with three it is the least-squares
/// (pseudoinverse) estimator.
pub fn parameter_uncertainty(
    sweep_b: &SweepResult,
    sweep_w: &SweepResult,
    readout: &ReadoutModel,
) -> Result<ParameterUncertainty> {
    if sweep_b.axis != Param::B || sweep_w.axis != Param::Omega {
        return Err(Error::InvalidInput("expected one amplitude sweep and one frequency sweep".into()));
    }
    let m = readout.signals_used.count();
    if sweep_b.slopes.len() < m || sweep_w.slopes.len() < m {
        return Err(Error::DimensionMismatch { expected: m, found: sweep_b.slopes.len().min(sweep_w.slopes.len()) });
    }
    let j: Vec<[f64; 2]> = (0..m).map(|i| [sweep_b.slopes[i], sweep_w.slopes[i]]).collect();
    let errs: Vec<[f64; 2]> = (0..m).map(|i| [sweep_b.slope_stderr[i], sweep_w.slope_stderr[i]]).collect();
    let (base, condition) = deltas(&j, readout.sigma)?;

    // First-order propagation of the slope standard errors.
    let mut var = [0.0; 2];
    for i in 0..m {
        for c in 0..2 {
            if errs[i][c] == 0.0 {
                continue;
            }
            let h = 1e-6 * j[i][c].abs().max(f64::MIN_POSITIVE);
            let mut jp = j.clone();
            jp[i][c] += h;
            let mut jm = j.clone();
            jm[i][c] -= h;
            let (dp, _) = deltas(&jp, readout.sigma)?;
            let (dm, _) = deltas(&jm, readout.sigma)?;
            for k in 0..2 {
                let grad = (dp[k] - dm[k]) / (2.0 * h);
                var[k] += (grad * errs[i][c]).powi(2);
            }
        }
    }
    Ok(ParameterUncertainty {
        delta_b: base[0],
        delta_w: base[1],
        delta_b_err: var[0].sqrt(),
        delta_w_err: var[1].sqrt(),
        condition,
    })
}
