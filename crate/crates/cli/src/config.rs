//! Run configuration read from a TOML file.
//!
//! Frequencies are given in MHz and converted to rad·µs⁻¹ here; fields are
//! in Gauss and times in µs.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use acmag_core::dynamics::FieldParams;
use acmag_core::nv::{
    NvParams, PiPulseModel, ReadoutModel, SequenceConfig, SignalSet, TargetClock,
    EXPERIMENT_CONTROL_AMPLITUDE,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub fn mhz(v: f64) -> f64 {
    2.0 * PI * v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub field: FieldSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub convergence: ConvergenceSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub probe_search: ProbeSearchSection,
    #[serde(default)]
    pub nv: NvSection,
    #[serde(default)]
    pub sequence: SequenceSection,
    #[serde(default)]
    pub readout: ReadoutSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub scaling: ScalingSection,
    #[serde(default)]
    pub adaptive: AdaptiveSection,
}

/// The true AC field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    #[serde(default = "one")]
    pub b: f64,
    pub omega_mhz: f64,
    #[serde(default)]
    pub phi: f64,
    /// Coupling in rad·µs⁻¹·G⁻¹. Defaults to 1 for the qubit studies and to
    /// the NV effective coupling for NV studies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

/// Control field; unset entries follow the target.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_c_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_c: Option<f64>,
}

/// Log-spaced `ωT` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub omega_t_min: f64,
    pub omega_t_max: f64,
    pub points: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self { omega_t_min: 10.0, omega_t_max: 1e4, points: 61 }
    }
}

impl ScanSection {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.omega_t_min];
        }
        let (a, b) = (self.omega_t_min.ln(), self.omega_t_max.ln());
        (0..self.points).map(|k| (a + (b - a) * k as f64 / (self.points - 1) as f64).exp()).collect()
    }

    fn validate(&self, name: &str) -> Result<(), CliError> {
        if !(self.omega_t_min > 0.0 && self.omega_t_max >= self.omega_t_min) {
            return Err(CliError::invalid(&format!("{name}.omega_t_min"), "needs 0 < omega_t_min <= omega_t_max"));
        }
        Ok(())
    }
}

/// `ωT` range for the relative-error envelopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    pub omega_t_min: f64,
    pub omega_t_max: f64,
    pub points: usize,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self { omega_t_min: 1e2, omega_t_max: 1e5, points: 31 }
    }
}

impl ConvergenceSection {
    pub fn scan(&self) -> ScanSection {
        ScanSection { omega_t_min: self.omega_t_min, omega_t_max: self.omega_t_max, points: self.points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    pub omega_t_min: f64,
    pub omega_t_max: f64,
    pub points: usize,
    pub repetitions: u64,
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self { omega_t_min: 10.0, omega_t_max: 1e4, points: 31, repetitions: 1000 }
    }
}

impl BoundsSection {
    pub fn scan(&self) -> ScanSection {
        ScanSection { omega_t_min: self.omega_t_min, omega_t_max: self.omega_t_max, points: self.points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorChoice {
    Asymptotic,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSearchSection {
    pub samples: usize,
    pub omega_t: f64,
    pub generators: GeneratorChoice,
}

impl Default for ProbeSearchSection {
    fn default() -> Self {
        Self { samples: 1000, omega_t: 1e3, generators: GeneratorChoice::Asymptotic }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NvSection {
    pub d_mhz: f64,
    pub q_mhz: f64,
    pub a_mhz: f64,
    pub gamma_e_mhz_per_g: f64,
    pub gamma_n_mhz_per_g: f64,
    pub b_z0: f64,
}

impl Default for NvSection {
    fn default() -> Self {
        Self { d_mhz: 2870.0, q_mhz: -4.95, a_mhz: -2.16, gamma_e_mhz_per_g: 2.8, gamma_n_mhz_per_g: -0.31e-3, b_z0: 357.0 }
    }
}

impl NvSection {
    pub fn params(&self) -> NvParams {
        NvParams {
            d: mhz(self.d_mhz),
            q: mhz(self.q_mhz),
            a: mhz(self.a_mhz),
            gamma_e: mhz(self.gamma_e_mhz_per_g),
            gamma_n: mhz(self.gamma_n_mhz_per_g),
            b_z0: self.b_z0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    Ideal,
    Finite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceSection {
    pub n: usize,
    pub tau_us: f64,
    pub pulse: PulseKind,
    pub rabi_mhz: f64,
    pub hyperfine_on: bool,
    pub clock: TargetClock,
}

impl Default for SequenceSection {
    fn default() -> Self {
        Self { n: 8, tau_us: 0.001, pulse: PulseKind::Ideal, rabi_mhz: 20.0, hyperfine_on: true, clock: TargetClock::Contiguous }
    }
}

impl SequenceSection {
    pub fn pulse_model(&self) -> PiPulseModel {
        match self.pulse {
            PulseKind::Ideal => PiPulseModel::Ideal,
            PulseKind::Finite => PiPulseModel::Finite { rabi_freq: mhz(self.rabi_mhz), hyperfine_on: self.hyperfine_on },
        }
    }

    pub fn config(&self) -> SequenceConfig {
        SequenceConfig { n: self.n, tau: self.tau_us, pulse: self.pulse_model(), clock: self.clock }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutSection {
    pub n_avg: f64,
    /// Overrides the shot-noise limit derived from `n_avg`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub spam_contrast: f64,
    pub spam_baseline: f64,
    pub signals: SignalSet,
    pub shot_noise: bool,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        let r = ReadoutModel::default();
        Self {
            n_avg: r.n_avg,
            sigma: None,
            spam_contrast: r.spam_contrast,
            spam_baseline: r.spam_baseline,
            signals: r.signals_used,
            shot_noise: r.shot_noise,
        }
    }
}

impl ReadoutSection {
    pub fn model(&self) -> ReadoutModel {
        let base = ReadoutModel::from_averages(self.n_avg);
        ReadoutModel {
            sigma: self.sigma.unwrap_or(base.sigma),
            spam_contrast: self.spam_contrast,
            spam_baseline: self.spam_baseline,
            signals_used: self.signals,
            shot_noise: self.shot_noise,
            ..base
        }
    }
}

/// Sweep half-widths are for `N = 1` and shrink as `1/N` and `1/N²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub points: usize,
    pub half_width_b: f64,
    pub half_width_omega_mhz: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { points: 21, half_width_b: 1.0, half_width_omega_mhz: 500.0 / (2.0 * PI) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub n_max: usize,
    pub points: usize,
    pub half_width_b: f64,
    pub half_width_omega_mhz: f64,
    /// Add readout noise to the sweep signals.
    pub noisy_signals: bool,
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self { n_max: 8, points: 5, half_width_b: 1.0, half_width_omega_mhz: 500.0 / (2.0 * PI), noisy_signals: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveSection {
    pub rounds: usize,
    pub trials: usize,
    /// Averages per round.
    pub shots: f64,
    /// Initial offsets of the estimate from the true field.
    pub offset_b: f64,
    pub offset_omega_mhz: f64,
    pub window_b: f64,
    pub window_omega_mhz: f64,
}

impl Default for AdaptiveSection {
    fn default() -> Self {
        Self { rounds: 5, trials: 100, shots: 3e6, offset_b: -0.05, offset_omega_mhz: 0.3, window_b: 0.5, window_omega_mhz: 3.0 }
    }
}

fn one() -> f64 {
    1.0
}

fn check(ok: bool, field: &str, reason: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::invalid(field, reason))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let f = &self.field;
        check(f.omega_mhz.is_finite() && f.omega_mhz > 0.0, "field.omega_mhz", "must be positive")?;
        check(f.b.is_finite() && f.b >= 0.0, "field.b", "must be non-negative")?;
        check(f.phi.is_finite(), "field.phi", "must be finite")?;
        if let Some(g) = f.gamma {
            check(g.is_finite() && g > 0.0, "field.gamma", "must be positive")?;
        }
        if let Some(b) = self.control.b_c {
            check(b.is_finite() && b >= 0.0, "control.b_c", "must be non-negative")?;
        }
        if let Some(w) = self.control.omega_c_mhz {
            check(w.is_finite() && w > 0.0, "control.omega_c_mhz", "must be positive")?;
        }
        self.scan.validate("scan")?;
        check(self.scan.points >= 1, "scan.points", "must be at least 1")?;
        self.convergence.scan().validate("convergence")?;
        check(self.convergence.points >= 3, "convergence.points", "must be at least 3")?;
        check(self.convergence.omega_t_min > 2.0 * PI, "convergence.omega_t_min", "must exceed 2π")?;
        self.bounds.scan().validate("bounds")?;
        check(self.bounds.repetitions > 0, "bounds.repetitions", "must be positive")?;
        check(self.probe_search.omega_t > 0.0, "probe_search.omega_t", "must be positive")?;
        self.nv_params().validate().map_err(|e| CliError::invalid("nv", &e.to_string()))?;
        let s = &self.sequence;
        check(s.n >= 1, "sequence.n", "must be at least 1")?;
        check(s.tau_us > 0.0 && s.tau_us.is_finite(), "sequence.tau_us", "must be positive")?;
        check(s.rabi_mhz > 0.0 && s.rabi_mhz.is_finite(), "sequence.rabi_mhz", "must be positive")?;
        check(self.readout.n_avg > 0.0, "readout.n_avg", "must be positive")?;
        self.readout.model().validate().map_err(|e| CliError::invalid("readout", &e.to_string()))?;
        check(self.sweep.points >= 3, "sweep.points", "must be at least 3")?;
        check(self.sweep.half_width_b > 0.0, "sweep.half_width_b", "must be positive")?;
        check(self.sweep.half_width_omega_mhz > 0.0, "sweep.half_width_omega_mhz", "must be positive")?;
        check(self.scaling.n_max >= 3, "scaling.n_max", "must be at least 3")?;
        check(self.scaling.points >= 3, "scaling.points", "must be at least 3")?;
        check(self.scaling.half_width_b > 0.0, "scaling.half_width_b", "must be positive")?;
        check(self.scaling.half_width_omega_mhz > 0.0, "scaling.half_width_omega_mhz", "must be positive")?;
        check(self.adaptive.shots > 0.0, "adaptive.shots", "must be positive")?;
        check(self.adaptive.window_b > 0.0, "adaptive.window_b", "must be positive")?;
        check(self.adaptive.window_omega_mhz > 0.0, "adaptive.window_omega_mhz", "must be positive")?;
        Ok(())
    }

    pub fn nv_params(&self) -> NvParams {
        self.nv.params()
    }

    /// Target and control for the qubit studies; coupling defaults to 1.
    pub fn field_params(&self) -> FieldParams {
        self.field_with_gamma(self.field.gamma.unwrap_or(1.0), self.field.phi)
    }

    /// Target and control for the NV studies; the control phase defaults to
    /// `−φ`.
    pub fn nv_field_params(&self) -> FieldParams {
        let gamma = self.field.gamma.unwrap_or_else(|| self.nv_params().effective_gamma());
        self.field_with_gamma(gamma, -self.field.phi)
    }

    fn field_with_gamma(&self, gamma: f64, default_phi_c: f64) -> FieldParams {
        let f = &self.field;
        FieldParams {
            b: f.b,
            omega: mhz(f.omega_mhz),
            phi: f.phi,
            b_c: self.control.b_c.unwrap_or(f.b),
            omega_c: mhz(self.control.omega_c_mhz.unwrap_or(f.omega_mhz)),
            phi_c: self.control.phi_c.unwrap_or(default_phi_c),
            gamma,
        }
    }

    /// Control amplitude for the NV scaling study.
    pub fn scaling_amplitude(&self) -> f64 {
        self.control.b_c.unwrap_or(if self.field.b > 0.0 { self.field.b } else { EXPERIMENT_CONTROL_AMPLITUDE })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn minimal_config() {
        let cfg = parse("[field]\nomega_mhz = 1.0\n").unwrap();
        assert_eq!(cfg.seed, 0);
        let p = cfg.field_params();
        assert!((p.omega - 2.0 * PI).abs() < 1e-15);
        assert_eq!((p.b, p.b_c, p.gamma), (1.0, 1.0, 1.0));
        assert_eq!(cfg.convergence.omega_t_min, 1e2);
    }

    #[test]
    fn missing_omega_names_field() {
        let err = parse("[field]\nb = 2.0\n").unwrap_err();
        assert!(err.to_string().contains("omega_mhz"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse("[field]\nomega_mhz = 1.0\nbogus = 3\n").is_err());
        assert!(parse("colour = 1\n[field]\nomega_mhz = 1.0\n").is_err());
    }

    #[test]
    fn invalid_values_name_field() {
        let err = parse("[field]\nomega_mhz = 1.0\n[sequence]\nn = 0\ntau_us = 0.001\npulse = \"ideal\"\nrabi_mhz = 20.0\nhyperfine_on = true\nclock = \"contiguous\"\n")
            .unwrap_err();
        assert!(err.to_string().contains("sequence.n"), "{err}");
        let err = parse("[field]\nomega_mhz = -1.0\n").unwrap_err();
        assert!(err.to_string().contains("field.omega_mhz"));
    }

    #[test]
    fn nv_defaults() {
        let cfg = parse("[field]\nomega_mhz = 1871.48\nb = 5.65\nphi = 0.2\n").unwrap();
        let nv = cfg.nv_params();
        assert_eq!(nv, NvParams::default());
        let p = cfg.nv_field_params();
        assert!((p.gamma - nv.effective_gamma()).abs() < 1e-15);
        assert_eq!(p.phi_c, -0.2);
    }
}
