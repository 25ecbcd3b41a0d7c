//! Electron-nuclear NV two-qubit model in the rotating frame, with the
//! dynamical-decoupling sequence that interleaves target and control fields.
//!
//! The electron (sensor) is the first tensor factor, the nitrogen nuclear
//! spin (ancilla) the second. Frequencies are angular, in rad·µs⁻¹.

mod readout;
mod study;

pub use readout::*;
pub use study::*;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::FieldParams;
use crate::error::{Error, Result};
use crate::linalg::{
    expm_hermitian, on_sensor, sigma_x, sigma_y, sigma_z, tensor, Operator, PureState,
};

const TWO_PI: f64 = 2.0 * PI;

/// Control frequency quoted with the experiment, `2π·1870` rad·µs⁻¹. The
/// frame frequency computed from the constants is slightly higher.
pub const CAPTION_CONTROL_FREQUENCY: f64 = TWO_PI * 1870.0;

/// Control amplitude used in the experiment, in Gauss.
pub const EXPERIMENT_CONTROL_AMPLITUDE: f64 = 5.65;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NvParams {
    /// Zero-field splitting.
    pub d: f64,
    /// Nuclear quadrupole splitting.
    pub q: f64,
    /// Hyperfine coupling.
    pub a: f64,
    /// Electron gyromagnetic ratio, rad·µs⁻¹·G⁻¹.
    pub gamma_e: f64,
    /// Nitrogen gyromagnetic ratio, rad·µs⁻¹·G⁻¹.
    pub gamma_n: f64,
    /// Static bias field, G.
    pub b_z0: f64,
}

impl Default for NvParams {
    fn default() -> Self {
        Self {
            d: TWO_PI * 2870.0,
            q: -TWO_PI * 4.95,
            a: -TWO_PI * 2.16,
            gamma_e: TWO_PI * 2.8,
            gamma_n: -TWO_PI * 0.31e-3,
            b_z0: 357.0,
        }
    }
}

impl NvParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.d, self.q, self.a, self.gamma_e, self.gamma_n, self.b_z0];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("NV parameters must be finite".into()));
        }
        if !(self.d > 0.0) {
            return Err(Error::InvalidInput("zero-field splitting d must be positive".into()));
        }
        if !(self.gamma_e > 0.0) {
            return Err(Error::InvalidInput("gamma_e must be positive".into()));
        }
        Ok(())
    }

    /// `D − γ_e B_z0 − A/2`, the transition frequency the frame rotates at.
    pub fn frame_frequency(&self) -> f64 {
        self.d - self.gamma_e * self.b_z0 - 0.5 * self.a
    }

    /// Effective coupling of a transverse field to the two-level electron
    /// subspace, `γ_e/√2`.
    pub fn effective_gamma(&self) -> f64 {
        self.gamma_e / 2f64.sqrt()
    }

    /// Rotating-frame interaction `(A/4)(−σz^e − σz^e σz^n)`; the nuclear
    /// `σz^n` term is dropped.
    pub fn interaction(&self) -> Operator {
        let zz = tensor(&sigma_z(), &sigma_z()).expect("4x4");
        (&(-&on_sensor(&sigma_z())) - &zz) * (0.25 * self.a)
    }

    /// Target and control both at the frame frequency with amplitude `b`
    /// and zero phase.
    pub fn operating_point(&self, b: f64) -> FieldParams {
        FieldParams::matched(self.effective_gamma(), b, self.frame_frequency())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Target,
    Control,
}

/// Drive amplitude, phase and detuning of one segment in the frame.
fn segment_drive(nv: &NvParams, p: &FieldParams, segment: Segment) -> (f64, f64, f64) {
    let frame = nv.frame_frequency();
    match segment {
        Segment::Target => (p.gamma * p.b, p.phi, p.omega - frame),
        Segment::Control => (-p.gamma * p.b_c, p.phi_c, p.omega_c - frame),
    }
}

fn transverse(amplitude: f64, angle: f64) -> Operator {
    let (s, c) = angle.sin_cos();
    on_sensor(&(&(sigma_x() * (amplitude * c)) - &(sigma_y() * (amplitude * s))))
}

/// Target segment: `γB[cos(δt+φ)σx^e − sin(δt+φ)σy^e] + H'`,
/// control segment: `−γB_c[cos(δ_c t+φ_c)σx^e − sin(δ_c t+φ_c)σy^e] + H'`,
/// with detunings taken from the frame frequency.
pub fn nv_rotating_hamiltonian(nv: &NvParams, p: &FieldParams, t: f64, segment: Segment) -> Operator {
    let (amp, phase, detuning) = segment_drive(nv, p, segment);
    &transverse(amp, detuning * t + phase) + &nv.interaction()
}

/// `(σx ⊗ I) H (σx ⊗ I)`.
pub fn conjugate_by_pi(h: &Operator) -> Result<Operator> {
    let x = on_sensor(&sigma_x());
    x.matmul(h)?.matmul(&x)
}

/// Exact propagator of a segment over `[t0, t1]`. The drive rotates about
/// z at the detuning and the interaction commutes with `σz^e`, so in the
/// co-rotating frame the Hamiltonian is constant:
/// `U = R(t1) e^{−iK(t1−t0)} R(t0)†` with `R(t) = e^{iδtσz^e/2}` and
/// `K = H(0) + (δ/2)σz^e`.
pub fn segment_propagator(nv: &NvParams, p: &FieldParams, segment: Segment, t0: f64, t1: f64) -> Result<Operator> {
    let (amp, phase, detuning) = segment_drive(nv, p, segment);
    let k = &(&transverse(amp, phase) + &nv.interaction()) + &on_sensor(&(sigma_z() * (0.5 * detuning)));
    let body = expm_hermitian(&k, t1 - t0)?;
    if detuning == 0.0 {
        return Ok(body);
    }
    let sz = on_sensor(&sigma_z());
    let r1 = expm_hermitian(&sz, -0.5 * detuning * t1)?;
    let r0_dag = expm_hermitian(&sz, 0.5 * detuning * t0)?;
    r1.matmul(&body)?.matmul(&r0_dag)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PiPulseModel {
    /// Instantaneous `σx^e`.
    Ideal,
    /// Square Rabi drive `(Ω/2)σx^e` for `π/Ω`, optionally with the
    /// interaction on during the pulse.
    Finite { rabi_freq: f64, hyperfine_on: bool },
}

impl PiPulseModel {
    /// Finite pulse at the default Rabi frequency `2π·20` rad·µs⁻¹.
    pub fn finite_default() -> Self {
        Self::Finite { rabi_freq: TWO_PI * 20.0, hyperfine_on: true }
    }

    pub fn validate(&self) -> Result<()> {
        if let Self::Finite { rabi_freq, .. } = self {
            if !(*rabi_freq > 0.0) || !rabi_freq.is_finite() {
                return Err(Error::InvalidInput("rabi_freq must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn unitary(&self, nv: &NvParams) -> Result<Operator> {
        match *self {
            Self::Ideal => Ok(on_sensor(&sigma_x())),
            Self::Finite { rabi_freq, hyperfine_on } => {
                let mut h = on_sensor(&(sigma_x() * (0.5 * rabi_freq)));
                if hyperfine_on {
                    h = &h + &nv.interaction();
                }
                expm_hermitian(&h, PI / rabi_freq)
            }
        }
    }
}

/// Time argument used for the field phases inside each block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetClock {
    /// Laboratory time: target on `[2kτ, (2k+1)τ]`, control on
    /// `[(2k+1)τ, (2k+2)τ]`.
    #[default]
    Interleaved,
    /// Signal time: both segments of block `k` run on `[kτ, (k+1)τ]`, so the
    /// field phase advances continuously over `T = Nτ`.
    Contiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Block {
    TargetEvolution { start: f64, duration: f64 },
    PiPulse,
    ControlEvolution { start: f64, duration: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub n: usize,
    pub tau: f64,
    pub pulse: PiPulseModel,
    pub clock: TargetClock,
    pub blocks: Vec<Block>,
}

impl PulseSequence {
    /// Field exposure time, `2Nτ` (pulse durations excluded).
    pub fn total_duration(&self) -> f64 {
        2.0 * self.n as f64 * self.tau
    }

    /// Signal time `T = Nτ`.
    pub fn signal_time(&self) -> f64 {
        self.n as f64 * self.tau
    }
}

/// `N` repetitions of target(τ), π, control(τ), π.
pub fn build_sequence(n: usize, tau: f64, pulse: PiPulseModel, clock: TargetClock) -> Result<PulseSequence> {
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput("tau must be positive".into()));
    }
    pulse.validate()?;
    let mut blocks = Vec::with_capacity(4 * n);
    for k in 0..n {
        let k = k as f64;
        let (target_start, control_start) = match clock {
            TargetClock::Interleaved => (2.0 * k * tau, (2.0 * k + 1.0) * tau),
            TargetClock::Contiguous => (k * tau, k * tau),
        };
        blocks.push(Block::TargetEvolution { start: target_start, duration: tau });
        blocks.push(Block::PiPulse);
        blocks.push(Block::ControlEvolution { start: control_start, duration: tau });
        blocks.push(Block::PiPulse);
    }
    Ok(PulseSequence { n, tau, pulse, clock, blocks })
}

/// Propagator of the whole sequence, later blocks on the left.
pub fn sequence_propagator(seq: &PulseSequence, nv: &NvParams, p: &FieldParams) -> Result<Operator> {
    let pulse = seq.pulse.unitary(nv)?;
    let mut u = Operator::identity(4);
    for block in &seq.blocks {
        let step = match *block {
            Block::TargetEvolution { start, duration } => {
                segment_propagator(nv, p, Segment::Target, start, start + duration)?
            }
            Block::ControlEvolution { start, duration } => {
                segment_propagator(nv, p, Segment::Control, start, start + duration)?
            }
            Block::PiPulse => pulse.clone(),
        };
        u = step.matmul(&u)?;
    }
    let deviation = u.unitary_deviation();
    if deviation > 1e-8 {
        return Err(Error::Propagation { deviation });
    }
    Ok(u)
}

pub fn simulate_sequence(seq: &PulseSequence, nv: &NvParams, p: &FieldParams, probe: &PureState) -> Result<PureState> {
    if probe.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: probe.dim() });
    }
    sequence_propagator(seq, nv, p)?.apply(probe)
}

/// Decoupled reference evolution: `H_θ(t) + σx^e H_c(t) σx^e` without the
/// interaction, over the signal time `[0, Nτ]`. Evaluated exactly when both
/// detunings vanish, otherwise with `steps_per_block` midpoint panels per
/// block.
pub fn ideal_propagator(seq: &PulseSequence, nv: &NvParams, p: &FieldParams, steps_per_block: usize) -> Result<Operator> {
    let frame = nv.frame_frequency();
    let h = |t: f64| -> Operator {
        let (a_t, ph_t, d_t) = segment_drive(nv, p, Segment::Target);
        let (a_c, ph_c, d_c) = segment_drive(nv, p, Segment::Control);
        let control = transverse(a_c, d_c * t + ph_c);
        let x = on_sensor(&sigma_x());
        &transverse(a_t, d_t * t + ph_t) + &(&(&x * &control) * &x)
    };
    let t_end = seq.signal_time();
    if p.omega == frame && p.omega_c == frame {
        return expm_hermitian(&h(0.0), t_end);
    }
    let grid = crate::dynamics::TimeGrid::new(0.0, t_end, seq.n * steps_per_block.max(1))?;
    crate::dynamics::propagate(h, &grid)
}
