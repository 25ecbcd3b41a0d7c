//! Small dense complex linear algebra for one- and two-qubit systems.
//!
//! Operators are stored row-major. The two-qubit ordering is
//! sensor ⊗ ancilla, with `|0⟩` the first basis vector of each qubit.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest operator dimension accepted anywhere in the crate.
pub const MAX_DIM: usize = 16;

const HERMITIAN_TOL: f64 = 1e-10;

pub const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Which tensor factor of a two-qubit operator to keep in a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{}) [", self.dim, self.dim)?;
        for r in 0..self.dim {
            write!(f, "  ")?;
            for c in 0..self.dim {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for Operator {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    /// Builds an operator from row-major entries; the length must be a
    /// perfect square no larger than `MAX_DIM²`.
    pub fn from_row_major(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() || dim == 0 {
            return Err(Error::InvalidInput(format!(
                "{} entries do not form a square matrix",
                data.len()
            )));
        }
        if dim > MAX_DIM {
            return Err(Error::TooLarge { dim, max: MAX_DIM });
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        Self::from_fn(N, |r, c| C64::new(rows[r][c], 0.0))
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// `|a⟩⟨b|`.
    pub fn outer(a: &PureState, b: &PureState) -> Self {
        Self::from_fn(a.dim(), |r, c| a.amplitudes[r] * b.amplitudes[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn matmul(&self, rhs: &Operator) -> Result<Operator> {
        self.check_same_dim(rhs)?;
        Ok(self.mul_unchecked(rhs))
    }

    fn mul_unchecked(&self, rhs: &Operator) -> Operator {
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in out[r * n..(r + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Operator { dim: n, data: out }
    }

    /// `self · rhs · self†`.
    pub fn conjugate(&self, rhs: &Operator) -> Result<Operator> {
        Ok(self.matmul(rhs)?.mul_unchecked(&self.adjoint()))
    }

    pub fn commutator(&self, rhs: &Operator) -> Result<Operator> {
        Ok(&self.matmul(rhs)? - &rhs.mul_unchecked(self))
    }

    pub fn anticommutator(&self, rhs: &Operator) -> Result<Operator> {
        Ok(&self.matmul(rhs)? + &rhs.mul_unchecked(self))
    }

    pub fn apply(&self, psi: &PureState) -> Result<PureState> {
        if psi.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: psi.dim() });
        }
        Ok(PureState { amplitudes: self.apply_vec(&psi.amplitudes) })
    }

    fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|r| self.data[r * n..(r + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim, "max_abs_diff: dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius inner product `tr(A† B)`.
    pub fn hs_inner(&self, other: &Operator) -> C64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for r in 0..self.dim {
            for c in r..self.dim {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn unitary_deviation(&self) -> f64 {
        self.adjoint().mul_unchecked(self).max_abs_diff(&Operator::identity(self.dim))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_deviation() <= tol
    }

    /// Distance between two unitaries after removing the relative global
    /// phase, in the max-entry norm.
    pub fn diff_up_to_phase(&self, other: &Operator) -> f64 {
        let overlap = self.hs_inner(other);
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
        self.scale(phase).max_abs_diff(other)
    }

    /// Real Pauli coefficients `(c0, cx, cy, cz)` with
    /// `self = c0 I + cx σx + cy σy + cz σz`, valid for Hermitian 2×2 input.
    pub fn pauli_coefficients(&self) -> Result<[f64; 4]> {
        if self.dim != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: self.dim });
        }
        let a = self[(0, 0)];
        let b = self[(0, 1)];
        let c = self[(1, 0)];
        let d = self[(1, 1)];
        Ok([
            0.5 * (a + d).re,
            0.5 * (b + c).re,
            0.5 * (c - b).im,
            0.5 * (a - d).re,
        ])
    }

    fn check_same_dim(&self, rhs: &Operator) -> Result<()> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: rhs.dim });
        }
        Ok(())
    }

    pub(crate) fn check_hermitian(&self) -> Result<()> {
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL * self.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(())
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator add: dimension mismatch");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator sub: dimension mismatch");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_re(-1.0)
    }
}

/// Panics on dimension mismatch; use [`Operator::matmul`] for a checked
/// product.
impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator mul: dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, s: f64) -> Operator {
        self.scale_re(s)
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(self, s: f64) -> Operator {
        self.scale_re(s)
    }
}

pub fn pauli(axis: Axis) -> Operator {
    match axis {
        Axis::X => Operator::from_fn(2, |r, c| if r != c { ONE } else { ZERO }),
        Axis::Y => Operator::from_row_major(vec![ZERO, -I, I, ZERO]).unwrap(),
        Axis::Z => Operator::diag(&[ONE, -ONE]),
    }
}

pub fn sigma_x() -> Operator {
    pauli(Axis::X)
}

pub fn sigma_y() -> Operator {
    pauli(Axis::Y)
}

pub fn sigma_z() -> Operator {
    pauli(Axis::Z)
}

/// `n·σ` for a (not necessarily unit) real vector.
pub fn pauli_vector(n: [f64; 3]) -> Operator {
    &(&(sigma_x() * n[0]) + &(sigma_y() * n[1])) + &(sigma_z() * n[2])
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    let dim = a.dim * b.dim;
    if dim > MAX_DIM {
        return Err(Error::TooLarge { dim, max: MAX_DIM });
    }
    Ok(Operator::from_fn(dim, |r, c| {
        a[(r / b.dim, c / b.dim)] * b[(r % b.dim, c % b.dim)]
    }))
}

/// `op ⊗ I₂`: acts on the sensor of a sensor ⊗ ancilla pair.
pub fn on_sensor(op: &Operator) -> Operator {
    tensor(op, &Operator::identity(2)).expect("2x2 ⊗ 2x2 fits")
}

/// `I₂ ⊗ op`: acts on the ancilla.
pub fn on_ancilla(op: &Operator) -> Operator {
    tensor(&Operator::identity(2), op).expect("2x2 ⊗ 2x2 fits")
}

/// `exp(-i H t)` by spectral decomposition. Two-level input uses the
/// closed-form Pauli decomposition; larger input is diagonalised.
pub fn expm_hermitian(h: &Operator, t: f64) -> Result<Operator> {
    if h.dim > MAX_DIM {
        return Err(Error::TooLarge { dim: h.dim, max: MAX_DIM });
    }
    h.check_hermitian()?;
    Ok(match h.dim {
        1 => Operator::diag(&[(-I * h[(0, 0)].re * t).exp()]),
        2 => expm_qubit(h, t),
        _ => expm_eigen(h, t),
    })
}

fn expm_qubit(h: &Operator, t: f64) -> Operator {
    let [c0, cx, cy, cz] = h.pauli_coefficients().expect("dim checked");
    let r = (cx * cx + cy * cy + cz * cz).sqrt();
    let phase = (-I * c0 * t).exp();
    let (s, c) = (r * t).sin_cos();
    if r == 0.0 {
        return Operator::identity(2).scale(phase);
    }
    let (nx, ny, nz) = (cx / r, cy / r, cz / r);
    // cos(rt) I - i sin(rt) n·σ
    let m00 = C64::new(c, -s * nz);
    let m11 = C64::new(c, s * nz);
    let m01 = C64::new(-s * ny, -s * nx);
    let m10 = C64::new(s * ny, -s * nx);
    Operator { dim: 2, data: vec![m00 * phase, m01 * phase, m10 * phase, m11 * phase] }
}

fn expm_eigen(h: &Operator, t: f64) -> Operator {
    let (values, vectors) = eigh(h);
    let n = h.dim;
    let phases: Vec<C64> = values.iter().map(|&e| (-I * e * t).exp()).collect();
    Operator::from_fn(n, |r, c| {
        (0..n).map(|k| vectors[(r, k)] * phases[k] * vectors[(c, k)].conj()).sum()
    })
}

/// Eigenvalues (ascending) and eigenvectors (as columns) of a Hermitian
/// operator.
pub fn eigh(h: &Operator) -> (Vec<f64>, Operator) {
    let n = h.dim;
    let m = DMatrix::from_fn(n, n, |r, c| {
        // symmetrize to absorb rounding-level anti-Hermitian parts
        0.5 * (h[(r, c)] + h[(c, r)].conj())
    });
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Operator::from_fn(n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Reduced density matrix of a two-qubit operator.
pub fn partial_trace(rho: &Operator, keep: Keep) -> Result<Operator> {
    if rho.dim != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim });
    }
    Ok(Operator::from_fn(2, |r, c| match keep {
        Keep::First => rho[(2 * r, 2 * c)] + rho[(2 * r + 1, 2 * c + 1)],
        Keep::Second => rho[(r, c)] + rho[(2 + r, 2 + c)],
    }))
}

/// Symmetrized covariance `½⟨{A,B}⟩ − ⟨A⟩⟨B⟩` in a pure state.
pub fn pure_cov(psi: &PureState, a: &Operator, b: &Operator) -> Result<f64> {
    for op in [a, b] {
        if op.dim != psi.dim() {
            return Err(Error::DimensionMismatch { expected: psi.dim(), found: op.dim });
        }
    }
    let a_psi = a.apply_vec(&psi.amplitudes);
    let b_psi = b.apply_vec(&psi.amplitudes);
    // ⟨Aψ|Bψ⟩ = ⟨AB⟩ for Hermitian A; its real part is ½⟨{A,B}⟩.
    let ab: C64 = a_psi.iter().zip(&b_psi).map(|(x, y)| x.conj() * y).sum();
    let ea: C64 = psi.amplitudes.iter().zip(&a_psi).map(|(x, y)| x.conj() * y).sum();
    let eb: C64 = psi.amplitudes.iter().zip(&b_psi).map(|(x, y)| x.conj() * y).sum();
    Ok(ab.re - ea.re * eb.re)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Accepts amplitudes whose squared norm is 1 within 1e-12.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let norm_sqr: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm_sqr });
        }
        if amplitudes.len() > MAX_DIM {
            return Err(Error::TooLarge { dim: amplitudes.len(), max: MAX_DIM });
        }
        Ok(Self { amplitudes })
    }

    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        Self::new(amplitudes.into_iter().map(|z| z / norm).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn bell_phi_plus() -> Self {
        bell_basis()[0].clone()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        Ok(self.inner(&op.apply(self)?))
    }

    pub fn density(&self) -> Operator {
        Operator::outer(self, self)
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let dim = self.dim() * other.dim();
        if dim > MAX_DIM {
            return Err(Error::TooLarge { dim, max: MAX_DIM });
        }
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Ok(PureState { amplitudes })
    }

    /// `1 − |⟨a|b⟩|`, zero iff the states agree up to a global phase.
    pub fn distance_up_to_phase(&self, other: &PureState) -> f64 {
        (1.0 - self.inner(other).norm()).max(0.0)
    }
}

/// Bell basis in the order Φ+, Φ−, Ψ+, Ψ−.
pub fn bell_basis() -> [PureState; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = |a: [f64; 4]| PureState {
        amplitudes: a.iter().map(|&x| C64::new(x * h, 0.0)).collect(),
    };
    [
        v([1.0, 0.0, 0.0, 1.0]),
        v([1.0, 0.0, 0.0, -1.0]),
        v([0.0, 1.0, 1.0, 0.0]),
        v([0.0, 1.0, -1.0, 0.0]),
    ]
}
