//! Exact complex linear algebra for single- and two-qubit objects: the trine
//! states and their duals, Bob's POVM, Y-axis rotations, the local filter,
//! Bell projections, and POVM sampling.
//!
//! Convention: every single-qubit object is stored in X-basis coordinates,
//! i.e. amplitudes of {|0_x⟩, |1_x⟩}. The Z basis is |j_z⟩ = (|0_x⟩ +
//! (−1)^j |1_x⟩)/√2. Conversion to the Z⊗Z product basis happens only inside
//! the Bell projections. State equality is up to global phase; subnormalized
//! states are first-class and their norm² carries branch probability.

use num_complex::Complex64;

use crate::error::Error;
use crate::{Result, ALGEBRA_TOL, PROB_TOL};

pub type C64 = Complex64;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[inline]
fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

// ---------------------------------------------------------------------------
// 2×2 complex matrices
// ---------------------------------------------------------------------------

/// A 2×2 complex matrix, row-major, in X-basis coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub e: [[C64; 2]; 2],
}

impl Mat2 {
    pub const fn new(e: [[C64; 2]; 2]) -> Self {
        Mat2 { e }
    }

    pub fn zero() -> Self {
        Mat2::new([[C64::ZERO; 2]; 2])
    }

    pub fn identity() -> Self {
        Mat2::new([[C64::ONE, C64::ZERO], [C64::ZERO, C64::ONE]])
    }

    pub fn diag(a: C64, b: C64) -> Self {
        Mat2::new([[a, C64::ZERO], [C64::ZERO, b]])
    }

    /// Outer product |ket⟩⟨bra|.
    pub fn outer(ket: &[C64; 2], bra: &[C64; 2]) -> Self {
        let mut e = [[C64::ZERO; 2]; 2];
        for (i, row) in e.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = ket[i] * bra[j].conj();
            }
        }
        Mat2::new(e)
    }

    pub fn adjoint(&self) -> Self {
        let mut e = [[C64::ZERO; 2]; 2];
        for (i, row) in e.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.e[j][i].conj();
            }
        }
        Mat2::new(e)
    }

    pub fn mul(&self, rhs: &Mat2) -> Self {
        let mut e = [[C64::ZERO; 2]; 2];
        for (i, row) in e.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.e[i][0] * rhs.e[0][j] + self.e[i][1] * rhs.e[1][j];
            }
        }
        Mat2::new(e)
    }

    pub fn add(&self, rhs: &Mat2) -> Self {
        let mut e = self.e;
        for (i, row) in e.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x += rhs.e[i][j];
            }
        }
        Mat2::new(e)
    }

    pub fn sub(&self, rhs: &Mat2) -> Self {
        let mut e = self.e;
        for (i, row) in e.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x -= rhs.e[i][j];
            }
        }
        Mat2::new(e)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut e = self.e;
        for row in e.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        Mat2::new(e)
    }

    pub fn mul_vec(&self, v: &[C64; 2]) -> [C64; 2] {
        [
            self.e[0][0] * v[0] + self.e[0][1] * v[1],
            self.e[1][0] * v[0] + self.e[1][1] * v[1],
        ]
    }

    pub fn trace(&self) -> C64 {
        self.e[0][0] + self.e[1][1]
    }

    pub fn max_abs_diff(&self, rhs: &Mat2) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.e[i][j] - rhs.e[i][j]).norm());
            }
        }
        m
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Eigenvalues of a Hermitian 2×2 matrix, ascending. The caller must
    /// ensure Hermiticity; only the real parts of the diagonal are used.
    pub fn hermitian_eigenvalues(&self) -> (f64, f64) {
        let a = self.e[0][0].re;
        let d = self.e[1][1].re;
        let b2 = self.e[0][1].norm_sqr();
        let mean = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + b2).sqrt();
        (mean - disc, mean + disc)
    }

    /// Largest singular value (spectral norm).
    pub fn operator_norm(&self) -> f64 {
        let gram = self.adjoint().mul(self);
        let (_, hi) = gram.hermitian_eigenvalues();
        hi.max(0.0).sqrt()
    }
}

/// Pauli operators expressed in X-basis coordinates. The physical σ_x has the
/// X-basis states as eigenvectors, so its coordinate form is diagonal; σ_z
/// flips |0_x⟩ ↔ |1_x⟩, which maps |0_z⟩ to |1_z⟩ as it must.
pub fn pauli_x() -> Mat2 {
    Mat2::diag(C64::ONE, -C64::ONE)
}

pub fn pauli_y() -> Mat2 {
    Mat2::new([[C64::ZERO, c(0.0, 1.0)], [c(0.0, -1.0), C64::ZERO]])
}

pub fn pauli_z() -> Mat2 {
    Mat2::new([[C64::ZERO, C64::ONE], [C64::ONE, C64::ZERO]])
}

// ---------------------------------------------------------------------------
// Pure states
// ---------------------------------------------------------------------------

/// A single-qubit pure state in X-basis coordinates, possibly subnormalized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureState {
    pub amps: [C64; 2],
}

impl PureState {
    pub const fn new(a0: C64, a1: C64) -> Self {
        PureState { amps: [a0, a1] }
    }

    pub fn from_reals(a0: f64, a1: f64) -> Self {
        PureState::new(cr(a0), cr(a1))
    }

    pub fn x0() -> Self {
        PureState::from_reals(1.0, 0.0)
    }

    pub fn x1() -> Self {
        PureState::from_reals(0.0, 1.0)
    }

    pub fn z0() -> Self {
        PureState::from_reals(FRAC_1_SQRT_2, FRAC_1_SQRT_2)
    }

    pub fn z1() -> Self {
        PureState::from_reals(FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps[0].norm_sqr() + self.amps[1].norm_sqr()
    }

    /// Inner product ⟨self|other⟩.
    pub fn overlap(&self, other: &PureState) -> C64 {
        self.amps[0].conj() * other.amps[0] + self.amps[1].conj() * other.amps[1]
    }

    /// Physical equality: |⟨a|b⟩|² = ‖a‖²‖b‖² within tolerance.
    pub fn coincides_up_to_phase(&self, other: &PureState, tol: f64) -> bool {
        let ov = self.overlap(other).norm_sqr();
        (ov - self.norm_sq() * other.norm_sq()).abs() <= tol
    }

    pub fn normalized(&self) -> Option<PureState> {
        let n = self.norm_sq().sqrt();
        if n == 0.0 {
            return None;
        }
        Some(PureState::new(self.amps[0] / n, self.amps[1] / n))
    }

    pub fn projector(&self) -> Mat2 {
        Mat2::outer(&self.amps, &self.amps)
    }
}

/// The trine state ψ_j, j ∈ 1..=3: X-basis amplitudes (1/2, ±√3/2) for
/// j = 1, 2 and (1, 0) for j = 3.
pub fn trine_state(j: usize) -> Result<PureState> {
    match j {
        1 => Ok(PureState::from_reals(0.5, SQRT3 / 2.0)),
        2 => Ok(PureState::from_reals(0.5, -SQRT3 / 2.0)),
        3 => Ok(PureState::from_reals(1.0, 0.0)),
        _ => Err(Error::IndexOutOfRange(j)),
    }
}

/// The dual state ψ̄_j orthogonal to ψ_j.
pub fn trine_dual(j: usize) -> Result<PureState> {
    match j {
        1 => Ok(PureState::from_reals(SQRT3 / 2.0, -0.5)),
        2 => Ok(PureState::from_reals(SQRT3 / 2.0, 0.5)),
        3 => Ok(PureState::from_reals(0.0, 1.0)),
        _ => Err(Error::IndexOutOfRange(j)),
    }
}

// ---------------------------------------------------------------------------
// Operators with validated invariants
// ---------------------------------------------------------------------------

/// A 2×2 unitary (U†U = 1 to within the algebra tolerance).
#[derive(Clone, Copy, Debug)]
pub struct Unitary(Mat2);

impl Unitary {
    pub fn new(m: Mat2) -> Result<Self> {
        let dev = m.adjoint().mul(&m).max_abs_diff(&Mat2::identity());
        if dev > ALGEBRA_TOL {
            return Err(Error::InvalidState(format!(
                "matrix is not unitary (U†U deviates from 1 by {dev:e})"
            )));
        }
        Ok(Unitary(m))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn apply(&self, s: &PureState) -> PureState {
        let a = self.0.mul_vec(&s.amps);
        PureState::new(a[0], a[1])
    }
}

/// The Bloch-sphere Y-axis rotation by 2bπ/3 for trit b, with the sign fixed
/// so that `rotation(1)` carries ψ_j to ψ_(j mod 3)+1 up to global phase.
/// In X-basis coordinates this is the plane rotation by bπ/3.
pub fn rotation(b: u8) -> Unitary {
    let theta = f64::from(b % 3) * std::f64::consts::PI / 3.0;
    let (s, co) = theta.sin_cos();
    Unitary(Mat2::new([[cr(co), cr(-s)], [cr(s), cr(co)]]))
}

/// A Kraus operator: a 2×2 contraction (operator norm ≤ 1).
#[derive(Clone, Copy, Debug)]
pub struct KrausOperator(Mat2);

impl KrausOperator {
    pub fn new(m: Mat2) -> Result<Self> {
        let norm = m.operator_norm();
        if norm > 1.0 + ALGEBRA_TOL {
            return Err(Error::ContractionViolated {
                eigenvalue: norm * norm,
            });
        }
        Ok(KrausOperator(m))
    }

    pub fn identity() -> Self {
        KrausOperator(Mat2::identity())
    }

    pub fn pauli_x() -> Self {
        KrausOperator(pauli_x())
    }

    pub fn pauli_y() -> Self {
        KrausOperator(pauli_y())
    }

    pub fn pauli_z() -> Self {
        KrausOperator(pauli_z())
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }
}

/// The successful branch of the local filtering operation,
/// F = |0_x⟩⟨0_x| + (1/√3)|1_x⟩⟨1_x| = diag(1, 1/√3).
pub fn filter_op() -> KrausOperator {
    KrausOperator(Mat2::diag(C64::ONE, cr(1.0 / SQRT3)))
}

/// Applies a Kraus operator to a pure state. The result may be subnormalized;
/// its norm² is the branch probability weight.
pub fn apply_kraus(e: &KrausOperator, s: &PureState) -> PureState {
    let a = e.matrix().mul_vec(&s.amps);
    PureState::new(a[0], a[1])
}

/// A single-qubit density matrix: Hermitian, PSD, trace in (0, 1].
#[derive(Clone, Copy, Debug)]
pub struct DensityMatrix(Mat2);

impl DensityMatrix {
    pub fn new(m: Mat2) -> Result<Self> {
        if !m.is_hermitian(ALGEBRA_TOL) {
            return Err(Error::InvalidState(
                "density matrix is not Hermitian".into(),
            ));
        }
        let (lo, _) = m.hermitian_eigenvalues();
        if lo < -ALGEBRA_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix has negative eigenvalue {lo:e}"
            )));
        }
        let tr = m.trace().re;
        if tr <= 0.0 || tr > 1.0 + ALGEBRA_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix trace {tr} outside (0, 1]"
            )));
        }
        Ok(DensityMatrix(m))
    }

    pub fn from_pure(s: &PureState) -> Result<Self> {
        DensityMatrix::new(s.projector())
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(Mat2::identity().scale(0.5))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }
}

/// A POVM: PSD effects summing to the identity.
#[derive(Clone, Debug)]
pub struct Povm {
    effects: Vec<Mat2>,
}

impl Povm {
    pub fn new(effects: Vec<Mat2>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidPovm("no effects".into()));
        }
        let mut sum = Mat2::zero();
        for (k, m) in effects.iter().enumerate() {
            if !m.is_hermitian(ALGEBRA_TOL) {
                return Err(Error::InvalidPovm(format!("effect {k} is not Hermitian")));
            }
            let (lo, _) = m.hermitian_eigenvalues();
            if lo < -ALGEBRA_TOL {
                return Err(Error::InvalidPovm(format!(
                    "effect {k} has negative eigenvalue {lo:e}"
                )));
            }
            sum = sum.add(m);
        }
        let dev = sum.max_abs_diff(&Mat2::identity());
        if dev > ALGEBRA_TOL {
            return Err(Error::InvalidPovm(format!(
                "effects sum deviates from identity by {dev:e}"
            )));
        }
        Ok(Povm { effects })
    }

    pub fn effects(&self) -> &[Mat2] {
        &self.effects
    }

    pub fn outcome_probability(&self, k: usize, rho: &DensityMatrix) -> f64 {
        self.effects[k].mul(rho.matrix()).trace().re
    }
}

/// Bob's measurement: the three effects (2/3)|ψ̄_j⟩⟨ψ̄_j|, j = 1..=3.
pub fn bob_povm() -> Povm {
    let effects = (1..=3)
        .map(|j| {
            trine_dual(j)
                .expect("fixed index")
                .projector()
                .scale(2.0 / 3.0)
        })
        .collect();
    Povm::new(effects).expect("trine dual frame is complete")
}

/// Samples a POVM outcome by cumulative-sum inversion in fixed effect order.
/// Returns the 0-based effect index. `rho` must be trace-normalized; the
/// probabilities must sum to 1 within the probability tolerance.
pub fn sample_povm(povm: &Povm, rho: &DensityMatrix, u: f64) -> Result<usize> {
    let probs: Vec<f64> = (0..povm.effects().len())
        .map(|k| povm.outcome_probability(k, rho))
        .collect();
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::ProbabilityNormalization { sum, tol: PROB_TOL });
    }
    let mut acc = 0.0;
    let mut last_nonzero = None;
    for (k, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            last_nonzero = Some(k);
        }
        acc += p;
        if u < acc {
            return Ok(k);
        }
    }
    // u landed in the rounding slack above the accumulated sum.
    Ok(last_nonzero.unwrap_or(povm.effects().len() - 1))
}

// ---------------------------------------------------------------------------
// Two-qubit vectors and Bell projections
// ---------------------------------------------------------------------------

/// Index of |a_z⟩_A ⊗ |i_x⟩_B in the amplitude array.
#[inline]
fn zx(a: usize, i: usize) -> usize {
    2 * a + i
}

/// A two-qubit vector with the A qubit in Z-basis coordinates and the B qubit
/// in X-basis coordinates, possibly subnormalized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitVector {
    pub amps: [C64; 4],
}

impl TwoQubitVector {
    pub const fn new(amps: [C64; 4]) -> Self {
        TwoQubitVector { amps }
    }

    /// Builds the vector from Z⊗Z amplitudes (|a_z⟩|k_z⟩ ordering). The basis
    /// change on B is the Hadamard, its own inverse.
    pub fn from_zz(u: [C64; 4]) -> Self {
        let mut amps = [C64::ZERO; 4];
        for a in 0..2 {
            amps[zx(a, 0)] = (u[zx(a, 0)] + u[zx(a, 1)]) * FRAC_1_SQRT_2;
            amps[zx(a, 1)] = (u[zx(a, 0)] - u[zx(a, 1)]) * FRAC_1_SQRT_2;
        }
        TwoQubitVector::new(amps)
    }

    /// Amplitudes in the Z⊗Z product basis.
    pub fn to_zz(&self) -> [C64; 4] {
        let mut u = [C64::ZERO; 4];
        for a in 0..2 {
            u[zx(a, 0)] = (self.amps[zx(a, 0)] + self.amps[zx(a, 1)]) * FRAC_1_SQRT_2;
            u[zx(a, 1)] = (self.amps[zx(a, 0)] - self.amps[zx(a, 1)]) * FRAC_1_SQRT_2;
        }
        u
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|x| x.norm_sqr()).sum()
    }

    /// Applies 1 ⊗ M (an operator on the B qubit, in X coordinates).
    pub fn apply_b(&self, m: &Mat2) -> Self {
        let mut amps = [C64::ZERO; 4];
        for a in 0..2 {
            let v = [self.amps[zx(a, 0)], self.amps[zx(a, 1)]];
            let w = m.mul_vec(&v);
            amps[zx(a, 0)] = w[0];
            amps[zx(a, 1)] = w[1];
        }
        TwoQubitVector::new(amps)
    }

    /// Squared overlaps with the Bell basis (Φ+, Φ−, Ψ+, Ψ−). The four
    /// weights sum to the squared norm.
    pub fn bell_projections(&self) -> [f64; 4] {
        let u = self.to_zz();
        let r = FRAC_1_SQRT_2;
        let phi_p = (u[0] + u[3]) * r;
        let phi_m = (u[0] - u[3]) * r;
        let psi_p = (u[1] + u[2]) * r;
        let psi_m = (u[1] - u[2]) * r;
        [
            phi_p.norm_sqr(),
            phi_m.norm_sqr(),
            psi_p.norm_sqr(),
            psi_m.norm_sqr(),
        ]
    }

    /// The B-qubit marginal (partial trace over A), in X coordinates.
    pub fn partial_trace_a(&self) -> Mat2 {
        let mut e = [[C64::ZERO; 2]; 2];
        for (i, row) in e.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                for a in 0..2 {
                    *x += self.amps[zx(a, i)] * self.amps[zx(a, j)].conj();
                }
            }
        }
        Mat2::new(e)
    }
}

/// The two-qubit source state |φ⟩ = (|0_z⟩ψ_1 + |1_z⟩ψ_2)/√2.
pub fn source_state() -> TwoQubitVector {
    let p1 = trine_state(1).expect("fixed index");
    let p2 = trine_state(2).expect("fixed index");
    let mut amps = [C64::ZERO; 4];
    for i in 0..2 {
        amps[zx(0, i)] = p1.amps[i] * FRAC_1_SQRT_2;
        amps[zx(1, i)] = p2.amps[i] * FRAC_1_SQRT_2;
    }
    TwoQubitVector::new(amps)
}
