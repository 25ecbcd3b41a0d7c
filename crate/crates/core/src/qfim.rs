//! Quantum Fisher information matrix for the amplitude/frequency pair.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    generator_closed_form, hamiltonian_eval, propagate, FieldParams, GeneratorForm, GeneratorPair,
    HamiltonianPart, Param, TimeGrid,
};
use crate::error::{Error, Result};
use crate::linalg::{
    eigh, expm_hermitian, on_sensor, partial_trace, pure_cov, sigma_x, sigma_y, sigma_z, tensor,
    Keep, Operator, PureState, C64,
};
use crate::seeding::task_rng;

/// Below this value of `det(F)/‖F‖²_F` the matrix is treated as singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-10;

/// Symmetric 2×2 Fisher information for `(B, ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Qfim2 {
    pub f_bb: f64,
    pub f_bw: f64,
    pub f_ww: f64,
}

impl Qfim2 {
    pub fn get(&self, a: Param, b: Param) -> f64 {
        match (a, b) {
            (Param::B, Param::B) => self.f_bb,
            (Param::Omega, Param::Omega) => self.f_ww,
            _ => self.f_bw,
        }
    }

    pub fn det(&self) -> f64 {
        self.f_bb * self.f_ww - self.f_bw * self.f_bw
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.f_bb * self.f_bb + 2.0 * self.f_bw * self.f_bw + self.f_ww * self.f_ww
    }

    /// `det(F)/‖F‖²_F`, scale-free measure of singularity. Zero for the
    /// zero matrix.
    pub fn singularity_ratio(&self) -> f64 {
        let n = self.frobenius_sqr();
        if n == 0.0 {
            0.0
        } else {
            self.det() / n
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singularity_ratio() < SINGULARITY_THRESHOLD
    }

    /// `|F_Bω| / √(F_BB F_ωω)`.
    pub fn off_diagonal_ratio(&self) -> f64 {
        self.f_bw.abs() / (self.f_bb * self.f_ww).sqrt()
    }
}

/// Cramér-Rao covariance bound `(1/M) F⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovBound {
    pub var_b: f64,
    pub var_w: f64,
    pub cov_bw: f64,
    pub repetitions: u64,
}

/// `F_ab = 4 Cov(h_a, h_b)`. With `ancilla` the generators act on the
/// sensor of a two-qubit probe as `h ⊗ I`.
pub fn qfim_from_generators(probe: &PureState, g: &GeneratorPair, ancilla: bool) -> Result<Qfim2> {
    let (hb, hw) = if ancilla {
        (on_sensor(&g.h_b), on_sensor(&g.h_omega))
    } else {
        (g.h_b.clone(), g.h_omega.clone())
    };
    Ok(Qfim2 {
        f_bb: 4.0 * pure_cov(probe, &hb, &hb)?,
        f_bw: 4.0 * pure_cov(probe, &hb, &hw)?,
        f_ww: 4.0 * pure_cov(probe, &hw, &hw)?,
    })
}

/// Exact matched-control QFIM for the Bell probe (phase zero).
pub fn qfim_closed_form(p: &FieldParams, t: f64) -> Result<Qfim2> {
    let (g, b, w) = (p.gamma, p.b, p.omega);
    if w == 0.0 {
        return Err(Error::InvalidInput("omega must be non-zero".into()));
    }
    let x = w * t;
    let (s2, c2) = (2.0 * x).sin_cos();
    let g2 = g * g;
    // 1 − cos 2x written as 2 sin²x
    let f_bb = g2 * (2.0 * x * x + 2.0 * x.sin().powi(2) + 2.0 * x * s2) / (2.0 * w * w);
    let (bw, ww) = if x.abs() < SERIES_CUTOFF {
        (cross_bracket_series(x), frequency_bracket_series(x))
    } else {
        (
            -1.0 - x * x + (1.0 + 3.0 * x * x) * c2,
            1.0 + 4.0 * x * x + 2.0 * x.powi(4) - (1.0 + 2.0 * x * x) * (c2 + 2.0 * x * s2),
        )
    };
    let f_bw = g2 * b * bw / (4.0 * w.powi(3));
    let f_ww = g2 * b * b * ww / (8.0 * w.powi(4));
    Ok(Qfim2 { f_bb, f_bw, f_ww })
}

/// Below this `ωT` the off-diagonal and frequency brackets are summed as
/// power series; the trigonometric forms cancel to O(x⁴) and O(x⁶).
const SERIES_CUTOFF: f64 = 0.5;
const SERIES_TERMS: usize = 24;

/// Coefficient of `x^{2k}` in `cos 2x`.
fn cos2_coeff(k: usize) -> f64 {
    let mut c = 1.0;
    for j in 1..=2 * k {
        c *= 2.0 / j as f64;
    }
    if k % 2 == 1 { -c } else { c }
}

/// Coefficient of `x^{2k}` in `cos 2x + 2x sin 2x`.
fn cos2_plus_sin2_coeff(k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    // 2x sin 2x contributes 2·(−1)^{k−1} 2^{2k−1}/(2k−1)!
    let mut s = 2.0;
    for j in 1..2 * k {
        s *= 2.0 / j as f64;
    }
    let s = if (k - 1) % 2 == 1 { -s } else { s };
    cos2_coeff(k) + s
}

/// `−1 − x² + (1 + 3x²) cos 2x`, from `x⁴` on.
fn cross_bracket_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut pow = x2 * x2;
    let mut sum = 0.0;
    for k in 2..SERIES_TERMS {
        sum += (cos2_coeff(k) + 3.0 * cos2_coeff(k - 1)) * pow;
        pow *= x2;
    }
    sum
}

/// `1 + 4x² + 2x⁴ − (1 + 2x²)(cos 2x + 2x sin 2x)`, from `x⁶` on.
fn frequency_bracket_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut pow = x2 * x2 * x2;
    let mut sum = 0.0;
    for k in 3..SERIES_TERMS {
        sum -= (cos2_plus_sin2_coeff(k) + 2.0 * cos2_plus_sin2_coeff(k - 1)) * pow;
        pow *= x2;
    }
    sum
}

/// Long-time limit `diag(γ²T², γ²B²T⁴/4)`.
pub fn qfim_asymptotic(p: &FieldParams, t: f64) -> Qfim2 {
    let g2 = p.gamma * p.gamma;
    Qfim2 { f_bb: g2 * t * t, f_bw: 0.0, f_ww: 0.25 * g2 * p.b * p.b * t.powi(4) }
}

/// `det F = γ⁴B²T⁴ (2ωT − sin 2ωT)² / (16ω²)`.
pub fn qfim_determinant(p: &FieldParams, t: f64) -> f64 {
    let x = p.omega * t;
    let d = 2.0 * x - (2.0 * x).sin();
    p.gamma.powi(4) * p.b * p.b * t.powi(4) * d * d / (16.0 * p.omega * p.omega)
}

pub fn qcrb(f: &Qfim2, repetitions: u64) -> Result<CovBound> {
    if repetitions == 0 {
        return Err(Error::InvalidInput("repetitions must be positive".into()));
    }
    let det = f.det();
    if f.is_singular() || det <= 1e-12 {
        return Err(Error::SingularQfim { ratio: f.singularity_ratio() });
    }
    let m = repetitions as f64;
    Ok(CovBound {
        var_b: f.f_ww / det / m,
        var_w: f.f_bb / det / m,
        cov_bw: -f.f_bw / det / m,
        repetitions,
    })
}

/// Relative deviations of the exact generators and QFIM from their
/// long-time limits at one value of `ωT`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeErrors {
    pub omega_t: f64,
    pub h_b: f64,
    pub h_omega: f64,
    pub f_bb: f64,
    pub f_ww: f64,
    /// Normalized by `√(F_BB^∞ F_ωω^∞)`.
    pub f_bw: f64,
}

impl RelativeErrors {
    pub fn values(&self) -> [f64; 5] {
        [self.h_b, self.h_omega, self.f_bb, self.f_ww, self.f_bw]
    }

    pub const NAMES: [&'static str; 5] = ["h_b", "h_omega", "f_bb", "f_ww", "f_bw"];
}

fn relative_errors_at(p: &FieldParams, omega_t: f64) -> Result<RelativeErrors> {
    let t = omega_t / p.omega;
    let exact = generator_closed_form(p, t, GeneratorForm::Exact);
    let asym = generator_closed_form(p, t, GeneratorForm::Asymptotic);
    let rel = |a: &Operator, b: &Operator| (a - b).frobenius_norm() / b.frobenius_norm();
    let f = qfim_closed_form(p, t)?;
    let fa = qfim_asymptotic(p, t);
    Ok(RelativeErrors {
        omega_t,
        h_b: rel(&exact.h_b, &asym.h_b),
        h_omega: rel(&exact.h_omega, &asym.h_omega),
        f_bb: (f.f_bb - fa.f_bb).abs() / fa.f_bb,
        f_ww: (f.f_ww - fa.f_ww).abs() / fa.f_ww,
        f_bw: f.f_bw.abs() / (fa.f_bb * fa.f_ww).sqrt(),
    })
}

/// Exact-versus-asymptotic relative errors for each requested `ωT > 2π`.
pub fn relative_error_curves(p: &FieldParams, omega_t_values: &[f64]) -> Result<Vec<RelativeErrors>> {
    if p.b <= 0.0 || p.omega <= 0.0 {
        return Err(Error::InvalidInput("relative errors need B > 0 and omega > 0".into()));
    }
    omega_t_values
        .iter()
        .map(|&x| {
            if !(x > 2.0 * PI) {
                return Err(Error::InvalidInput(format!("omega_t = {x} must exceed 2π")));
            }
            relative_errors_at(p, x)
        })
        .collect()
}

const ENVELOPE_SAMPLES: usize = 257;

/// Upper envelope of the oscillating relative errors: the maximum of each
/// curve over one full oscillation period `[ωT, ωT + 2π]`.
pub fn relative_error_envelope(p: &FieldParams, omega_t: f64) -> Result<RelativeErrors> {
    let xs: Vec<f64> = (0..ENVELOPE_SAMPLES)
        .map(|k| omega_t + 2.0 * PI * k as f64 / (ENVELOPE_SAMPLES - 1) as f64)
        .collect();
    let rows = relative_error_curves(p, &xs)?;
    let mut env = RelativeErrors { omega_t, h_b: 0.0, h_omega: 0.0, f_bb: 0.0, f_ww: 0.0, f_bw: 0.0 };
    for r in rows {
        env.h_b = env.h_b.max(r.h_b);
        env.h_omega = env.h_omega.max(r.h_omega);
        env.f_bb = env.f_bb.max(r.f_bb);
        env.f_ww = env.f_ww.max(r.f_ww);
        env.f_bw = env.f_bw.max(r.f_bw);
    }
    Ok(env)
}

/// `|Tr(ρ_S U_rel)|` with `ρ_S` the sensor's reduced state.
pub fn probe_overlap(probe: &PureState, u_rel: &Operator) -> Result<f64> {
    let rho_s = reduced_sensor_state(probe, u_rel)?;
    Ok(rho_s.matmul(u_rel)?.trace().norm())
}

/// Same overlap from the rotation decomposition
/// `U_rel = e^{iα}(cos a + i sin a k·σ)`:
/// `√(cos²a + (ρ̃₁₁ − ρ̃₂₂)² sin²a)` with `ρ̃₁₁ − ρ̃₂₂ = Tr(ρ_S k·σ)`.
pub fn probe_overlap_closed_form(probe: &PureState, u_rel: &Operator) -> Result<f64> {
    let rho_s = reduced_sensor_state(probe, u_rel)?;
    // Strip the global phase so that det = 1.
    let det = u_rel[(0, 0)] * u_rel[(1, 1)] - u_rel[(0, 1)] * u_rel[(1, 0)];
    let su2 = u_rel.scale(det.sqrt().inv());
    let cos_a = 0.5 * su2.trace().re;
    // i sin a k·σ = (su2 − su2†)/2
    let anti = (&su2 - &su2.adjoint()) * 0.5;
    let [_, kx, ky, kz] = anti.scale(-C64::i()).pauli_coefficients()?;
    let sin_a = (kx * kx + ky * ky + kz * kz).sqrt();
    let bloch_along_k = if sin_a > 0.0 {
        let k_sigma = &(&(sigma_x() * (kx / sin_a)) + &(sigma_y() * (ky / sin_a))) + &(sigma_z() * (kz / sin_a));
        rho_s.matmul(&k_sigma)?.trace().re
    } else {
        0.0
    };
    Ok((cos_a * cos_a + bloch_along_k * bloch_along_k * sin_a * sin_a).sqrt())
}

fn reduced_sensor_state(probe: &PureState, u_rel: &Operator) -> Result<Operator> {
    if probe.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: probe.dim() });
    }
    if u_rel.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: u_rel.dim() });
    }
    let deviation = u_rel.unitary_deviation();
    if deviation > 1e-10 {
        return Err(Error::NotUnitary { deviation });
    }
    partial_trace(&probe.density(), Keep::First)
}

/// Finite-difference steps for [`classical_fim`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimStep {
    pub db: f64,
    pub domega: f64,
}

impl FimStep {
    /// `10⁻⁴` of each parameter (absolute `10⁻⁴` for a zero parameter).
    pub fn relative_default(b: f64, omega: f64) -> Self {
        let rel = |v: f64| if v == 0.0 { 1e-4 } else { 1e-4 * v.abs() };
        Self { db: rel(b), domega: rel(omega) }
    }
}

const RICHARDSON_TRIGGER: f64 = 1e-4;
const RICHARDSON_LEVELS: usize = 6;

fn check_probabilities(p: &[f64]) -> Result<()> {
    for (index, &value) in p.iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonPositiveProbability { index, value });
        }
    }
    Ok(())
}

fn central_difference<F>(f: &F, h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let plus = f(h)?;
    let minus = f(-h)?;
    check_probabilities(&plus)?;
    check_probabilities(&minus)?;
    Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        if diff == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        diff / scale
    }
}

/// Central difference with step `h`; when halving the step changes the
/// estimate by more than `10⁻⁴` relative, a Richardson table over further
/// halvings is used instead.
fn derivative<F>(f: &F, h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let d_h = central_difference(f, h)?;
    let d_half = central_difference(f, 0.5 * h)?;
    if max_rel_diff(&d_h, &d_half) <= RICHARDSON_TRIGGER {
        return Ok(d_half);
    }
    let mut table: Vec<Vec<f64>> = vec![d_h, d_half];
    let mut best = extrapolate(&table);
    let mut step = 0.5 * h;
    for _ in 2..RICHARDSON_LEVELS {
        step *= 0.5;
        table.push(central_difference(f, step)?);
        let next = extrapolate(&table);
        let converged = max_rel_diff(&best, &next) <= 1e-8;
        best = next;
        if converged {
            break;
        }
    }
    Ok(best)
}

/// Neville-style Richardson extrapolation for an error series in `h²`.
fn extrapolate(table: &[Vec<f64>]) -> Vec<f64> {
    let mut row: Vec<Vec<f64>> = table.to_vec();
    let mut factor = 4.0;
    while row.len() > 1 {
        row = row
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(fine, coarse)| (factor * fine - coarse) / (factor - 1.0)).collect())
            .collect();
        factor *= 4.0;
    }
    row.pop().unwrap()
}

/// Classical Fisher information `Σ_i ∂_a p_i ∂_b p_i / p_i` of a
/// measurement whose outcome distribution is `prob_fn(B, ω)`.
pub fn classical_fim<F>(prob_fn: F, b: f64, omega: f64, step: FimStep) -> Result<Qfim2>
where
    F: Fn(f64, f64) -> Result<Vec<f64>>,
{
    let p0 = prob_fn(b, omega)?;
    check_probabilities(&p0)?;
    let db = derivative(&|h: f64| prob_fn(b + h, omega), step.db)?;
    let dw = derivative(&|h: f64| prob_fn(b, omega + h), step.domega)?;
    let mut f = Qfim2 { f_bb: 0.0, f_bw: 0.0, f_ww: 0.0 };
    for ((p, a), c) in p0.iter().zip(&db).zip(&dw) {
        f.f_bb += a * a / p;
        f.f_bw += a * c / p;
        f.f_ww += c * c / p;
    }
    Ok(f)
}

/// `O_B = σz ⊗ σy`.
pub fn amplitude_observable() -> Operator {
    tensor(&sigma_z(), &sigma_y()).expect("4x4")
}

/// `O_ω = σx ⊗ σz`.
pub fn frequency_observable() -> Operator {
    tensor(&sigma_x(), &sigma_z()).expect("4x4")
}

/// Joint eigenbasis of the commuting pair `(O_B, O_ω)`.
pub fn saturating_basis() -> Vec<PureState> {
    // O_B + 2 O_ω has the non-degenerate spectrum {−3, −1, 1, 3}.
    let combo = &amplitude_observable() + &(frequency_observable() * 2.0);
    let (_, vectors) = eigh(&combo);
    (0..4)
        .map(|c| PureState::normalized((0..4).map(|r| vectors[(r, c)]).collect()).expect("unit eigenvector"))
        .collect()
}

/// Outcome probabilities of measuring `(O_B, O_ω)` on the Bell probe after
/// evolution with target `(b, omega)` and control fixed at `operating`,
/// referred back through the known operating-point propagator.
pub fn saturating_measurement_probabilities(
    operating: &FieldParams,
    t: f64,
    steps: usize,
    b: f64,
    omega: f64,
) -> Result<Vec<f64>> {
    let p = operating.with_target(b, omega);
    let grid = TimeGrid::new(0.0, t, steps)?;
    let u = propagate(|s| hamiltonian_eval(&p, HamiltonianPart::Total, s), &grid)?;
    let u0_dag = expm_hermitian(&(sigma_z() * (0.5 * operating.omega_c)), -t)?;
    let rel = on_sensor(&u0_dag.matmul(&u)?);
    let psi = rel.apply(&PureState::bell_phi_plus())?;
    Ok(saturating_basis().iter().map(|e| e.inner(&psi).norm_sqr()).collect())
}

/// Haar-random pure state from normalized complex Gaussian amplitudes.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PureState {
    let amps = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    PureState::normalized(amps).expect("Gaussian vector is non-zero almost surely")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeSample {
    pub index: usize,
    pub qfim: Qfim2,
    pub det: f64,
    /// `Tr(ρ_S²)` of the sensor's reduced state.
    pub sensor_purity: f64,
}

/// QFIM of `samples` Haar-random two-qubit probes (generators on the
/// sensor). Sample `i` uses stream `(seed, i)`.
pub fn probe_search(g: &GeneratorPair, samples: usize, seed: u64) -> Result<Vec<ProbeSample>> {
    (0..samples)
        .into_par_iter()
        .map(|index| {
            let mut rng = task_rng(seed, index as u64, 0);
            let probe = haar_state(4, &mut rng);
            let qfim = qfim_from_generators(&probe, g, true)?;
            let rho = partial_trace(&probe.density(), Keep::First)?;
            let sensor_purity = rho.matmul(&rho)?.trace().re;
            Ok(ProbeSample { index, qfim, det: qfim.det(), sensor_purity })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{generator_pair_numeric, TimeGrid};

    fn unit() -> FieldParams {
        FieldParams::matched(1.0, 1.0, 1.0)
    }

    #[test]
    fn bell_probe_with_asymptotic_generators_is_diagonal() {
        let p = FieldParams::matched(0.7, 1.3, 4.0);
        let t = 2.5;
        let g = generator_closed_form(&p, t, GeneratorForm::Asymptotic);
        let f = qfim_from_generators(&PureState::bell_phi_plus(), &g, true).unwrap();
        let expected = qfim_asymptotic(&p, t);
        assert!((f.f_bb - expected.f_bb).abs() < 1e-12);
        assert!((f.f_ww - expected.f_ww).abs() < 1e-12);
        assert!(f.f_bw.abs() < 1e-12);
    }

    #[test]
    fn single_qubit_probe() {
        let p = FieldParams::matched(2.0, 1.0, 1.0);
        let t = 3.0;
        let g = GeneratorPair { h_b: sigma_x() * (0.5 * p.gamma * t), h_omega: sigma_y() };
        let f = qfim_from_generators(&PureState::basis(2, 0), &g, false).unwrap();
        assert!((f.f_bb - p.gamma * p.gamma * t * t).abs() < 1e-12);
        let err = qfim_from_generators(&PureState::basis(2, 0), &g, true);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn closed_form_reference_values() {
        let f = qfim_closed_form(&unit(), 1.0).unwrap();
        // (3 − cos 2 + 2 sin 2)/2
        let expected = (3.0 - 2f64.cos() + 2.0 * 2f64.sin()) / 2.0;
        assert!((f.f_bb - expected).abs() < 1e-14);
        assert!((f.f_bb - 2.61737).abs() < 1e-5);

        let no_field = FieldParams { b: 0.0, ..unit() };
        let f0 = qfim_closed_form(&no_field, 2.0).unwrap();
        assert_eq!((f0.f_ww, f0.f_bw), (0.0, 0.0));

        assert!(qfim_closed_form(&FieldParams { omega: 0.0, ..unit() }, 1.0).is_err());
    }

    #[test]
    fn closed_form_matches_numeric_generators() {
        let p = FieldParams::matched(1.0, 1.0, 1.0);
        let grid = TimeGrid::with_density(1.0, 1.0, 2e4).unwrap();
        let g = generator_pair_numeric(&p, &grid, HamiltonianPart::Total).unwrap();
        let f = qfim_from_generators(&PureState::bell_phi_plus(), &g, true).unwrap();
        let exact = qfim_closed_form(&p, 1.0).unwrap();
        assert!((f.f_bb - exact.f_bb).abs() / exact.f_bb < 1e-7);
        assert!((f.f_ww - exact.f_ww).abs() / exact.f_ww < 1e-7);
    }

    #[test]
    fn small_argument_series() {
        // Leading terms −16x⁴/3 and 32x⁶/9.
        let x: f64 = 1e-3;
        assert!((cross_bracket_series(x) / x.powi(4) + 16.0 / 3.0).abs() < 1e-5);
        assert!((frequency_bracket_series(x) / x.powi(6) - 32.0 / 9.0).abs() < 1e-5);
        // Both routes agree near the cutoff.
        let x = SERIES_CUTOFF;
        let (s2, c2) = (2.0 * x).sin_cos();
        let bw = -1.0 - x * x + (1.0 + 3.0 * x * x) * c2;
        let ww = 1.0 + 4.0 * x * x + 2.0 * x.powi(4) - (1.0 + 2.0 * x * x) * (c2 + 2.0 * x * s2);
        assert!((cross_bracket_series(x) / bw - 1.0).abs() < 1e-12);
        assert!((frequency_bracket_series(x) / ww - 1.0).abs() < 1e-10);
    }

    #[test]
    fn off_diagonal_decays_at_long_times() {
        let p = FieldParams::matched(1.0, 1.0, 1.0);
        let f = qfim_closed_form(&p, 1e3).unwrap();
        assert!(f.off_diagonal_ratio() <= 2e-3, "{}", f.off_diagonal_ratio());
    }

    #[test]
    fn determinant_cases() {
        assert_eq!(qfim_determinant(&unit(), 0.0), 0.0);
        let d = qfim_determinant(&unit(), PI);
        let matrix_det = qfim_closed_form(&unit(), PI).unwrap().det();
        assert!((d - PI.powi(6) / 4.0).abs() < 1e-10);
        assert!((d - matrix_det).abs() / d < 1e-9);
        for t in [1e-3, 0.1, 0.5, 2.0, 7.0] {
            assert!(qfim_determinant(&unit(), t) > 0.0);
        }
    }

    #[test]
    fn qcrb_cases() {
        let f = Qfim2 { f_bb: 4.0, f_bw: 0.0, f_ww: 16.0 };
        let c = qcrb(&f, 1).unwrap();
        assert_eq!((c.var_b, c.var_w, c.cov_bw), (0.25, 0.0625, 0.0));

        let g = Qfim2 { f_bb: 3.0, f_bw: 1.2, f_ww: 5.0 };
        let one = qcrb(&g, 1).unwrap();
        let ten = qcrb(&g, 10).unwrap();
        assert!((ten.var_b - one.var_b / 10.0).abs() < 1e-16);
        assert!((ten.var_w - one.var_w / 10.0).abs() < 1e-16);
        assert!((ten.cov_bw - one.cov_bw / 10.0).abs() < 1e-16);

        let singular = Qfim2 { f_bb: 1.0, f_bw: 2.0, f_ww: 4.0 };
        assert!(matches!(qcrb(&singular, 1), Err(Error::SingularQfim { .. })));
        assert!(qcrb(&f, 0).is_err());
    }

    #[test]
    fn relative_error_reference_point() {
        let rows = relative_error_curves(&unit(), &[100.0]).unwrap();
        assert!((rows[0].h_omega - 0.01).abs() < 5e-4, "{}", rows[0].h_omega);
        assert!(relative_error_curves(&unit(), &[3.0]).is_err());
    }

    #[test]
    fn envelope_decreases() {
        let mut last = [f64::INFINITY; 5];
        for x in [1e2, 3e2, 1e3, 3e3, 1e4] {
            let env = relative_error_envelope(&unit(), x).unwrap().values();
            for (a, b) in env.iter().zip(&last) {
                assert!(a < b);
            }
            last = env;
        }
    }

    #[test]
    fn overlap_cases() {
        let bell = PureState::bell_phi_plus();
        assert!((probe_overlap(&bell, &Operator::identity(2)).unwrap() - 1.0).abs() < 1e-15);

        let a = 0.61;
        let k: [f64; 3] = [0.3, -0.5, 0.81];
        let norm = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        let k_sigma = crate::linalg::pauli_vector([k[0] / norm, k[1] / norm, k[2] / norm]);
        let u = expm_hermitian(&k_sigma, a).unwrap();
        assert!((probe_overlap(&bell, &u).unwrap() - a.cos().abs()).abs() < 1e-14);

        let zero = PureState::basis(4, 0);
        let uz = expm_hermitian(&sigma_z(), a).unwrap();
        assert!((probe_overlap(&zero, &uz).unwrap() - 1.0).abs() < 1e-14);
        assert!((probe_overlap_closed_form(&zero, &uz).unwrap() - 1.0).abs() < 1e-14);

        let bad = Operator::from_real_rows([[1.0, 1.0], [0.0, 1.0]]);
        assert!(matches!(probe_overlap(&bell, &bad), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn classical_fim_of_constant_distribution_vanishes() {
        let f = classical_fim(|_, _| Ok(vec![0.25; 4]), 1.0, 1.0, FimStep::relative_default(1.0, 1.0)).unwrap();
        assert_eq!((f.f_bb, f.f_bw, f.f_ww), (0.0, 0.0, 0.0));
    }

    #[test]
    fn classical_fim_reports_bad_outcome() {
        let err = classical_fim(|_, _| Ok(vec![0.5, 0.5, 0.0]), 1.0, 1.0, FimStep::relative_default(1.0, 1.0));
        assert_eq!(err, Err(Error::NonPositiveProbability { index: 2, value: 0.0 }));
    }

    #[test]
    fn classical_fim_of_binomial_model() {
        // p = (cos²(θ/2), sin²(θ/2)) with θ = B·ω has F_BB = ω², F_ωω = B², F_Bω = Bω.
        let model = |b: f64, w: f64| {
            let th = b * w;
            Ok(vec![(0.5 * th).cos().powi(2), (0.5 * th).sin().powi(2)])
        };
        let (b, w) = (0.8, 1.3);
        let f = classical_fim(model, b, w, FimStep::relative_default(b, w)).unwrap();
        assert!((f.f_bb - w * w).abs() < 1e-6);
        assert!((f.f_ww - b * b).abs() < 1e-6);
        assert!((f.f_bw - b * w).abs() < 1e-6);
    }

    #[test]
    fn richardson_recovers_curved_derivative() {
        // Large step on a rapidly curving function forces extrapolation.
        let model = |b: f64, _w: f64| Ok(vec![0.5 + 0.4 * (50.0 * b).sin(), 0.5 - 0.4 * (50.0 * b).sin()]);
        let b = 0.01;
        let step = FimStep { db: 5e-3, domega: 1e-3 };
        let f = classical_fim(model, b, 1.0, step).unwrap();
        let d = 20.0 * (50.0 * b).cos();
        let p1 = 0.5 + 0.4 * (50.0 * b).sin();
        let expected = d * d / p1 + d * d / (1.0 - p1);
        assert!((f.f_bb - expected).abs() / expected < 1e-6, "{} vs {expected}", f.f_bb);
    }

    #[test]
    fn saturating_basis_diagonalizes_both_observables() {
        let basis = saturating_basis();
        for e in &basis {
            for o in [amplitude_observable(), frequency_observable()] {
                let oe = o.apply(e).unwrap();
                let lambda = e.inner(&oe);
                assert!((lambda.norm() - 1.0).abs() < 1e-12);
                assert!(oe.distance_up_to_phase(e) < 1e-12);
            }
        }
        // Bell probe gives the uniform distribution.
        let bell = PureState::bell_phi_plus();
        for e in &basis {
            assert!((e.inner(&bell).norm_sqr() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_sampling_is_seeded() {
        let g = generator_closed_form(&unit(), 10.0, GeneratorForm::Asymptotic);
        let a = probe_search(&g, 16, 5).unwrap();
        let b = probe_search(&g, 16, 5).unwrap();
        assert_eq!(a, b);
        let c = probe_search(&g, 16, 6).unwrap();
        assert_ne!(a[0].det, c[0].det);
    }
}
