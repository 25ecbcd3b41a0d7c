//! Field Hamiltonians, time-ordered propagation and estimation generators.
//!
//! Units: fields in Gauss, times in µs, angular frequencies in rad·µs⁻¹ and
//! the coupling `gamma` in rad·µs⁻¹·G⁻¹. Generators are returned as plain
//! matrices; their physical units follow from the parameter they belong to.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm_hermitian, sigma_x, sigma_y, sigma_z, Operator};

/// Target and control AC-field parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    pub b: f64,
    pub omega: f64,
    pub phi: f64,
    pub b_c: f64,
    pub omega_c: f64,
    pub phi_c: f64,
    pub gamma: f64,
}

impl FieldParams {
    /// Control matched to the target: `(B_c, ω_c, φ_c) = (B, ω, φ)` with φ = 0.
    pub fn matched(gamma: f64, b: f64, omega: f64) -> Self {
        Self { b, omega, phi: 0.0, b_c: b, omega_c: omega, phi_c: 0.0, gamma }
    }

    pub fn with_target(self, b: f64, omega: f64) -> Self {
        Self { b, omega, ..self }
    }

    pub fn with_control(self, b_c: f64, omega_c: f64) -> Self {
        Self { b_c, omega_c, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.b >= 0.0, "b must be non-negative"),
            (self.b_c >= 0.0, "b_c must be non-negative"),
            (self.omega > 0.0, "omega must be positive"),
            (self.omega_c > 0.0, "omega_c must be positive"),
            (self.gamma > 0.0, "gamma must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidInput(msg.into()));
            }
        }
        let all = [self.b, self.omega, self.phi, self.b_c, self.omega_c, self.phi_c, self.gamma];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("field parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Uniform grid on `[t_start, t_end]` with `steps` midpoint panels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        if !(t_end > t_start) || steps == 0 {
            return Err(Error::InvalidInput(format!(
                "time grid needs t_end > t_start and steps >= 1 (got [{t_start}, {t_end}], {steps})"
            )));
        }
        Ok(Self { t_start, t_end, steps })
    }

    /// `[0, t]` with roughly `per_unit` panels per unit of `scale·t`.
    pub fn with_density(t: f64, scale: f64, per_unit: f64) -> Result<Self> {
        let steps = (per_unit * scale * t).ceil().max(1.0) as usize;
        Self::new(0.0, t, steps)
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps as f64
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        self.t_start + (k as f64 + 0.5) * self.dt()
    }

    pub fn refined(&self) -> Self {
        Self { steps: self.steps * 2, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianPart {
    Target,
    Control,
    Total,
}

/// Estimated parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    B,
    Omega,
}

/// Target `γB cos(ωt+φ)σx`, control `−γB_c cos(ω_c t+φ_c)σx + (ω_c/2)σz`,
/// or their sum.
pub fn hamiltonian_eval(p: &FieldParams, part: HamiltonianPart, t: f64) -> Operator {
    let target = || sigma_x() * (p.gamma * p.b * (p.omega * t + p.phi).cos());
    let control = || {
        &(sigma_x() * (-p.gamma * p.b_c * (p.omega_c * t + p.phi_c).cos()))
            + &(sigma_z() * (0.5 * p.omega_c))
    };
    match part {
        HamiltonianPart::Target => target(),
        HamiltonianPart::Control => control(),
        HamiltonianPart::Total => {
            // Same expression order as target/control so matched control cancels exactly.
            let drive = p.gamma * p.b * (p.omega * t + p.phi).cos()
                - p.gamma * p.b_c * (p.omega_c * t + p.phi_c).cos();
            &(sigma_x() * drive) + &(sigma_z() * (0.5 * p.omega_c))
        }
    }
}

/// `∂_θ H₀(t)` for the target Hamiltonian.
pub fn target_derivative(p: &FieldParams, param: Param, t: f64) -> Operator {
    let arg = p.omega * t + p.phi;
    match param {
        Param::B => sigma_x() * (p.gamma * arg.cos()),
        Param::Omega => sigma_x() * (-p.gamma * p.b * t * arg.sin()),
    }
}

/// Time-ordered product of midpoint exponentials, later steps on the left.
pub fn propagate<F>(h: F, grid: &TimeGrid) -> Result<Operator>
where
    F: Fn(f64) -> Operator,
{
    let dt = grid.dt();
    let mut u: Option<Operator> = None;
    for k in 0..grid.steps {
        let step = expm_hermitian(&h(grid.midpoint(k)), dt)?;
        u = Some(match u {
            None => step,
            Some(prev) => step.matmul(&prev)?,
        });
    }
    let u = u.expect("grid has at least one step");
    let deviation = u.unitary_deviation();
    if deviation > 1e-8 {
        return Err(Error::Propagation { deviation });
    }
    Ok(u)
}

/// Heisenberg-picture generators `h_θ(T) = ∫ U†(t) ∂_θH₀(t) U(t) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPair {
    pub h_b: Operator,
    pub h_omega: Operator,
}

impl GeneratorPair {
    pub fn get(&self, param: Param) -> &Operator {
        match param {
            Param::B => &self.h_b,
            Param::Omega => &self.h_omega,
        }
    }
}

/// Both generators along the evolution generated by `part` (use
/// [`HamiltonianPart::Target`] for the uncontrolled sensor and
/// [`HamiltonianPart::Total`] for the controlled one).
///
/// Midpoint rule on a shared grid: the propagator to each panel midpoint is
/// the product of full steps so far times a half step at the midpoint
/// Hamiltonian.
pub fn generator_pair_numeric(
    p: &FieldParams,
    grid: &TimeGrid,
    part: HamiltonianPart,
) -> Result<GeneratorPair> {
    let dt = grid.dt();
    let mut u = Operator::identity(2);
    let mut h_b = Operator::zeros(2);
    let mut h_omega = Operator::zeros(2);
    for k in 0..grid.steps {
        let t = grid.midpoint(k);
        let h = hamiltonian_eval(p, part, t);
        let half = expm_hermitian(&h, 0.5 * dt)?;
        let u_mid = &half * &u;
        let u_mid_dag = u_mid.adjoint();
        let heis = |d: Operator| &(&u_mid_dag * &d) * &u_mid;
        h_b = &h_b + &(heis(target_derivative(p, Param::B, t)) * dt);
        h_omega = &h_omega + &(heis(target_derivative(p, Param::Omega, t)) * dt);
        u = &half * &u_mid;
    }
    if u.unitary_deviation() > 1e-8 {
        return Err(Error::Propagation { deviation: u.unitary_deviation() });
    }
    Ok(GeneratorPair { h_b: hermitize(&h_b), h_omega: hermitize(&h_omega) })
}

pub fn generator_numeric(
    p: &FieldParams,
    param: Param,
    grid: &TimeGrid,
    part: HamiltonianPart,
) -> Result<Operator> {
    Ok(generator_pair_numeric(p, grid, part)?.get(param).clone())
}

/// [`generator_numeric`] with a step-halving check: fails with
/// [`Error::GridTooCoarse`] when refining the grid moves the result by more
/// than `tolerance` (max-entry norm). Returns the refined estimate.
pub fn generator_numeric_checked(
    p: &FieldParams,
    param: Param,
    grid: &TimeGrid,
    part: HamiltonianPart,
    tolerance: f64,
) -> Result<Operator> {
    let coarse = generator_numeric(p, param, grid, part)?;
    let fine = generator_numeric(p, param, &grid.refined(), part)?;
    let discrepancy = coarse.max_abs_diff(&fine);
    if discrepancy > tolerance {
        return Err(Error::GridTooCoarse { discrepancy, tolerance });
    }
    Ok(fine)
}

fn hermitize(m: &Operator) -> Operator {
    (m + &m.adjoint()) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorForm {
    Exact,
    Asymptotic,
}

/// Pauli `(x, y)` coefficients of the matched-control generators.
/// The phase is taken as zero.
pub fn generator_coefficients(p: &FieldParams, t: f64, form: GeneratorForm) -> [[f64; 2]; 2] {
    let (g, b, w) = (p.gamma, p.b, p.omega);
    match form {
        GeneratorForm::Asymptotic => [[0.5 * g * t, 0.0], [0.0, 0.25 * g * b * t * t]],
        GeneratorForm::Exact => {
            let (s2, c2) = (2.0 * w * t).sin_cos();
            let hb_x = 0.5 * g * (t + s2 / (2.0 * w));
            let hb_y = -0.5 * g * (1.0 - c2) / (2.0 * w);
            let hw_x = -0.5 * g * b * (-t * c2 / (2.0 * w) + s2 / (4.0 * w * w));
            let hw_y = 0.5 * g * b * (0.5 * t * t - t * s2 / (2.0 * w) - (c2 - 1.0) / (4.0 * w * w));
            [[hb_x, hb_y], [hw_x, hw_y]]
        }
    }
}

/// Closed-form generators under matched control `U(0→t) = exp(−iωtσz/2)`.
pub fn generator_closed_form(p: &FieldParams, t: f64, form: GeneratorForm) -> GeneratorPair {
    let [[bx, by], [wx, wy]] = generator_coefficients(p, t, form);
    let make = |x: f64, y: f64| &(sigma_x() * x) + &(sigma_y() * y);
    GeneratorPair { h_b: make(bx, by), h_omega: make(wx, wy) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    fn unit() -> FieldParams {
        FieldParams::matched(1.0, 1.0, 1.0)
    }

    #[test]
    fn hamiltonian_cases() {
        let p = FieldParams { b: 2.0, b_c: 2.0, gamma: 0.5, ..unit() };
        let h = hamiltonian_eval(&p, HamiltonianPart::Target, 0.0);
        assert!(h.max_abs_diff(&(sigma_x() * 1.0)) < 1e-15);

        let zeeman = sigma_z() * 0.5;
        for t in [0.0, 0.3, 1.7, 12.0] {
            let h = hamiltonian_eval(&p, HamiltonianPart::Total, t);
            assert_eq!(h, zeeman);
        }

        let free = FieldParams { b_c: 0.0, ..p };
        let hc = hamiltonian_eval(&free, HamiltonianPart::Control, 0.8);
        assert_eq!(hc, zeeman);
    }

    #[test]
    fn matched_control_propagator_is_z_rotation() {
        let p = FieldParams::matched(1.0, 1.3, 2.1);
        let t = 3.0;
        let grid = TimeGrid::new(0.0, t, 37).unwrap();
        let u = propagate(|s| hamiltonian_eval(&p, HamiltonianPart::Total, s), &grid).unwrap();
        let half = 0.5 * p.omega * t;
        let expected = Operator::diag(&[C64::from_polar(1.0, -half), C64::from_polar(1.0, half)]);
        assert!(u.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn propagation_is_second_order() {
        // H(t) = cos(t) σx + 0.4 σz on [0, 1]; reference with 10⁶ steps.
        let h = |t: f64| &(sigma_x() * t.cos()) + &(sigma_z() * 0.4);
        let reference = propagate(h, &TimeGrid::new(0.0, 1.0, 1_000_000).unwrap()).unwrap();
        let e1 = propagate(h, &TimeGrid::new(0.0, 1.0, 50).unwrap()).unwrap().max_abs_diff(&reference);
        let e2 = propagate(h, &TimeGrid::new(0.0, 1.0, 100).unwrap()).unwrap().max_abs_diff(&reference);
        let ratio = e1 / e2;
        assert!((3.8..4.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn closed_form_reference_values() {
        let g = generator_closed_form(&unit(), 1.0, GeneratorForm::Exact);
        let [_, x, y, _] = g.h_b.pauli_coefficients().unwrap();
        // ½(1 + sin2/2), −¼(1 − cos2)
        assert!((x - 0.727_324_356_8).abs() < 1e-9, "{x}");
        assert!((y + 0.354_036_709_2).abs() < 1e-9, "{y}");

        let p = FieldParams::matched(1.0, 2.0, 5.0);
        let a = generator_closed_form(&p, 3.0, GeneratorForm::Asymptotic);
        assert!(a.h_b.max_abs_diff(&(sigma_x() * 1.5)) < 1e-15);
        assert!(a.h_omega.max_abs_diff(&(sigma_y() * 4.5)) < 1e-15);

        let z = generator_closed_form(&p, 0.0, GeneratorForm::Exact);
        assert!(z.h_omega.max_abs() < 1e-15);
    }

    #[test]
    fn numeric_generator_matches_reference_point() {
        let grid = TimeGrid::with_density(1.0, 1.0, 1e4).unwrap();
        let g = generator_pair_numeric(&unit(), &grid, HamiltonianPart::Total).unwrap();
        let exact = generator_closed_form(&unit(), 1.0, GeneratorForm::Exact);
        assert!(g.h_b.max_abs_diff(&exact.h_b) < 1e-8);
        assert!(g.h_omega.max_abs_diff(&exact.h_omega) < 1e-8);
    }

    #[test]
    fn omega_generator_vanishes_without_field() {
        let p = FieldParams { b: 0.0, b_c: 0.0, ..unit() };
        let grid = TimeGrid::new(0.0, 2.0, 200).unwrap();
        let h = generator_numeric(&p, Param::Omega, &grid, HamiltonianPart::Total).unwrap();
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn long_time_generator_approaches_asymptote() {
        let p = FieldParams::matched(1.0, 1.0, 20.0);
        let t = 10.0;
        let grid = TimeGrid::with_density(t, p.omega, 200.0).unwrap();
        let h_b = generator_numeric(&p, Param::B, &grid, HamiltonianPart::Total).unwrap();
        let asym = sigma_x() * (0.5 * p.gamma * t);
        let rel = (&h_b - &asym).frobenius_norm() / asym.frobenius_norm();
        assert!(rel <= 1.1 / (p.omega * t), "rel {rel}");
    }

    #[test]
    fn uncontrolled_generators_commute() {
        let p = FieldParams::matched(1.0, 1.5, 3.0);
        let grid = TimeGrid::new(0.0, 4.0, 4000).unwrap();
        let g = generator_pair_numeric(&p, &grid, HamiltonianPart::Target).unwrap();
        let comm = g.h_b.commutator(&g.h_omega).unwrap();
        assert!(comm.max_abs() <= 1e-8);
        // Both stay along σx.
        let [_, _, y, z] = g.h_omega.pauli_coefficients().unwrap();
        assert!(y.abs() < 1e-12 && z.abs() < 1e-12);
    }

    #[test]
    fn checked_generator_flags_coarse_grid() {
        let p = FieldParams::matched(1.0, 1.0, 20.0);
        let coarse = TimeGrid::new(0.0, 5.0, 20).unwrap();
        let err = generator_numeric_checked(&p, Param::Omega, &coarse, HamiltonianPart::Total, 1e-6);
        assert!(matches!(err, Err(Error::GridTooCoarse { .. })));
        let fine = TimeGrid::with_density(5.0, 20.0, 1e3).unwrap();
        assert!(generator_numeric_checked(&p, Param::Omega, &fine, HamiltonianPart::Total, 1e-3).is_ok());
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        assert!(FieldParams { omega: 0.0, ..unit() }.validate().is_err());
        assert!(FieldParams { b: -1.0, ..unit() }.validate().is_err());
        assert!(unit().validate().is_ok());
    }
}
