//! Single-parameter benchmarks from the spectral range of `∂_θH₀`, and the
//! simultaneous-versus-sequential comparison built on them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{FieldParams, Param};
use crate::error::{Error, Result};
use crate::qfim::qfim_closed_form;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// `∫₀ᵀ |cos ωt| dt`
    AbsCos,
    /// `∫₀ᵀ t |sin ωt| dt`
    TAbsSin,
}

/// Splits `x ≥ 0` into whole half-periods `m` and a remainder in `[0, π)`.
fn half_periods(x: f64) -> (f64, f64) {
    let m = (x / PI).floor();
    let r = (x - m * PI).clamp(0.0, PI);
    (m, r)
}

/// `∫₀ˣ |cos u| du`.
fn abs_cos_primitive(x: f64) -> f64 {
    let (m, r) = half_periods(x);
    let partial = if r <= 0.5 * PI { r.sin() } else { 2.0 - r.sin() };
    2.0 * m + partial
}

/// `∫₀ˣ u |sin u| du`. Segment `k` contributes `(2k+1)π`; the partial
/// segment follows from the primitive `sin u − u cos u`.
fn t_abs_sin_primitive(x: f64) -> f64 {
    let (m, r) = half_periods(x);
    let partial = r.sin() + m * PI * (1.0 - r.cos()) - r * r.cos();
    PI * m * m + partial
}

/// Exact envelope integrals over `[0, T]`.
pub fn envelope_integral(kind: EnvelopeKind, omega: f64, t: f64) -> Result<f64> {
    if !(omega > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidInput("envelope integral needs omega > 0 and T > 0".into()));
    }
    let x = omega * t;
    Ok(match kind {
        EnvelopeKind::AbsCos => abs_cos_primitive(x) / omega,
        EnvelopeKind::TAbsSin => t_abs_sin_primitive(x) / (omega * omega),
    })
}

/// `4(∫₀ᵀ |f_θ(t)| dt)²` where `∂_θH₀ = f_θ(t) σx`, evaluated at zero phase.
pub fn single_param_qfi_bound(theta: Param, p: &FieldParams, t: f64) -> Result<f64> {
    let integral = match theta {
        Param::B => p.gamma * envelope_integral(EnvelopeKind::AbsCos, p.omega, t)?,
        Param::Omega => p.gamma * p.b * envelope_integral(EnvelopeKind::TAbsSin, p.omega, t)?,
    };
    Ok(4.0 * integral * integral)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyComparison {
    pub f_b_max: f64,
    pub f_w_max: f64,
    /// `F_B^max / F_BB`
    pub ratio_b: f64,
    /// `F_ω^max / F_ωω`
    pub ratio_w: f64,
    /// Simultaneous over sequential variance, `F^max / (2 F_diag)`.
    pub seq_var_ratio_b: f64,
    pub seq_var_ratio_w: f64,
    /// Simultaneous over single-parameter standard deviation, `√ratio`.
    pub std_ratio_b: f64,
    pub std_ratio_w: f64,
    pub regime_omega_t: f64,
    pub repetitions: u64,
}

/// Compares the matched-control protocol with the single-parameter optimum
/// and with a sequential split of `repetitions` into two halves.
pub fn strategy_comparison(p: &FieldParams, t: f64, repetitions: u64) -> Result<StrategyComparison> {
    if repetitions == 0 {
        return Err(Error::InvalidInput("repetitions must be positive".into()));
    }
    if p.b != p.b_c || p.omega != p.omega_c || p.phi != p.phi_c {
        return Err(Error::InvalidInput("strategy comparison needs matched control".into()));
    }
    if !(p.b > 0.0) {
        return Err(Error::InvalidInput("strategy comparison needs B > 0".into()));
    }
    let f = qfim_closed_form(p, t)?;
    let f_b_max = single_param_qfi_bound(Param::B, p, t)?;
    let f_w_max = single_param_qfi_bound(Param::Omega, p, t)?;
    let ratio_b = f_b_max / f.f_bb;
    let ratio_w = f_w_max / f.f_ww;
    Ok(StrategyComparison {
        f_b_max,
        f_w_max,
        ratio_b,
        ratio_w,
        seq_var_ratio_b: 0.5 * ratio_b,
        seq_var_ratio_w: 0.5 * ratio_w,
        std_ratio_b: ratio_b.sqrt(),
        std_ratio_w: ratio_w.sqrt(),
        regime_omega_t: p.omega * t,
        repetitions,
    })
}
