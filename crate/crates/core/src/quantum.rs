//! Bloch vectors, two-qubit density matrices and joint correlators.
//!
//! The two-qubit Hilbert space uses the ordered basis `|00⟩, |01⟩, |10⟩, |11⟩`
//! with Alice's qubit as the left tensor factor.

use nalgebra::{Matrix2, Matrix3, Matrix4, SymmetricEigen, Vector3, Vector4};
use num_complex::Complex64;

use crate::error::{domain, Error, Result};

/// Tolerance on `|r| = 1` for observable directions.
pub const UNIT_TOLERANCE: f64 = 1e-12;
/// Tolerance on `ρ = ρ†` and `Tr ρ = 1`.
pub const MATRIX_TOLERANCE: f64 = 1e-12;
/// Smallest eigenvalue accepted as positive semidefinite.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pauli X = |0⟩⟨1| + |1⟩⟨0|.
pub fn pauli_x() -> Matrix2<Complex64> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

/// Pauli Y.
pub fn pauli_y() -> Matrix2<Complex64> {
    Matrix2::new(ZERO, -I, I, ZERO)
}

/// Pauli Z = |0⟩⟨0| − |1⟩⟨1|.
pub fn pauli_z() -> Matrix2<Complex64> {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}

/// The Pauli vector `σ = (X, Y, Z)`.
pub fn pauli_vector() -> [Matrix2<Complex64>; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

/// Unit vector `r(Ô)` on the Poincaré sphere, so that `Ô = r · σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    x: f64,
    y: f64,
    z: f64,
}

impl BlochVector {
    pub const X: BlochVector = BlochVector { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: BlochVector = BlochVector { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 1.0 };

    // Polarization eigenstates: H/V are ±Z, D/A are ±X, R/L are ±Y.
    pub const HORIZONTAL: BlochVector = Self::Z;
    pub const VERTICAL: BlochVector = BlochVector { x: 0.0, y: 0.0, z: -1.0 };
    pub const DIAGONAL: BlochVector = Self::X;
    pub const ANTIDIAGONAL: BlochVector = BlochVector { x: -1.0, y: 0.0, z: 0.0 };
    pub const RIGHT_CIRCULAR: BlochVector = Self::Y;
    pub const LEFT_CIRCULAR: BlochVector = BlochVector { x: 0.0, y: -1.0, z: 0.0 };

    /// Builds a direction from components that must already be unit length.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm_sq = x * x + y * y + z * z;
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > UNIT_TOLERANCE {
            return domain(format!(
                "Bloch vector ({x}, {y}, {z}) has squared norm {norm_sq}, expected 1"
            ));
        }
        Ok(Self { x, y, z })
    }

    /// Rescales any non-zero finite vector onto the unit sphere.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return domain("cannot normalize a zero or non-finite vector");
        }
        Ok(Self { x: x / norm, y: y / norm, z: z / norm })
    }

    pub(crate) fn from_vector_unchecked(v: Vector3<f64>) -> Self {
        Self { x: v[0], y: v[1], z: v[2] }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Rotates the direction by a 3×3 matrix, which must be orthogonal.
    pub fn rotated(&self, rotation: &Matrix3<f64>) -> Self {
        Self::from_vector_unchecked(rotation * self.to_vector())
    }

    /// The dichotomic observable `r · σ`.
    pub fn observable(&self) -> Matrix2<Complex64> {
        pauli_x() * Complex64::from(self.x)
            + pauli_y() * Complex64::from(self.y)
            + pauli_z() * Complex64::from(self.z)
    }

    /// Projector `(I + s r·σ)/2` onto the eigenvalue `s = ±1`.
    pub fn projector(&self, outcome: Outcome) -> Matrix2<Complex64> {
        let sign = Complex64::from(outcome.sign());
        (Matrix2::identity() + self.observable() * sign) * Complex64::from(0.5)
    }
}

impl std::ops::Neg for BlochVector {
    type Output = BlochVector;

    fn neg(self) -> Self::Output {
        Self { x: -self.x, y: -self.y, z: -self.z }
    }
}

/// A ±1 measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }
}

/// Joint density matrix of Alice's and Bob's qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    rho: Matrix4<Complex64>,
    visibility: Option<f64>,
}

fn singlet_ket() -> Vector4<Complex64> {
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    Vector4::new(ZERO, Complex64::from(amp), Complex64::from(-amp), ZERO)
}

impl TwoQubitState {
    /// `|Ψ⁻⟩⟨Ψ⁻|` with `|Ψ⁻⟩ = (|01⟩ − |10⟩)/√2`.
    pub fn singlet() -> Self {
        let psi = singlet_ket();
        Self { rho: psi * psi.adjoint(), visibility: Some(1.0) }
    }

    /// Werner state `V |Ψ⁻⟩⟨Ψ⁻| + (1 − V) I/4`.
    pub fn werner(visibility: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return domain(format!("visibility {visibility} outside [0, 1]"));
        }
        let singlet = Self::singlet().rho;
        let mixed = Matrix4::<Complex64>::identity() * Complex64::from(0.25);
        let rho = singlet * Complex64::from(visibility) + mixed * Complex64::from(1.0 - visibility);
        Ok(Self { rho, visibility: Some(visibility) })
    }

    /// Werner state with singlet fidelity `F`, i.e. visibility `(4F − 1)/3`.
    pub fn werner_from_fidelity(fidelity: f64) -> Result<Self> {
        if !(0.25..=1.0).contains(&fidelity) {
            return domain(format!("fidelity {fidelity} outside [1/4, 1]"));
        }
        Self::werner(visibility_from_fidelity(fidelity))
    }

    /// Wraps an arbitrary density matrix after checking Hermiticity, unit
    /// trace and positivity.
    pub fn from_density_matrix(rho: Matrix4<Complex64>) -> Result<Self> {
        let state = Self { rho, visibility: None };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn rho(&self) -> &Matrix4<Complex64> {
        &self.rho
    }

    /// Visibility when the state was built as a Werner state.
    pub fn visibility(&self) -> Option<f64> {
        self.visibility
    }

    pub fn check_invariants(&self) -> Result<()> {
        let herm_err = (self.rho - self.rho.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm_err > MATRIX_TOLERANCE {
            return domain(format!("density matrix is not Hermitian (deviation {herm_err:e})"));
        }
        let trace = self.rho.trace();
        if (trace - ONE).norm() > MATRIX_TOLERANCE {
            return domain(format!("density matrix trace is {trace}, expected 1"));
        }
        let min_eig = self.eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < EIGENVALUE_FLOOR {
            return domain(format!("density matrix has negative eigenvalue {min_eig:e}"));
        }
        Ok(())
    }

    /// Eigenvalues of the (Hermitian) density matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut eig: Vec<f64> = SymmetricEigen::new(self.rho).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        eig
    }

    /// Fidelity `⟨ψ|ρ|ψ⟩` with a normalized pure state.
    pub fn fidelity_with_pure(&self, psi: &Vector4<Complex64>) -> f64 {
        (psi.adjoint() * self.rho * psi)[(0, 0)].re
    }

    /// Fidelity with the singlet.
    pub fn singlet_fidelity(&self) -> f64 {
        self.fidelity_with_pure(&singlet_ket())
    }

    /// Expectation value `Tr[ρ A ⊗ B]`.
    pub fn expectation(&self, alice: &Matrix2<Complex64>, bob: &Matrix2<Complex64>) -> f64 {
        (self.rho * alice.kronecker(bob)).trace().re
    }

    /// Correlation tensor `T_ij = Tr[ρ σ_i ⊗ σ_j]`, so that
    /// `E(a, b) = aᵀ T b` for any state.
    pub fn correlation_tensor(&self) -> Matrix3<f64> {
        let sigma = pauli_vector();
        Matrix3::from_fn(|i, j| self.expectation(&sigma[i], &sigma[j]))
    }

    /// Born probability of the joint outcome `(alice_outcome, bob_outcome)`
    /// when measuring along `a` and `b`.
    pub fn joint_probability(
        &self,
        a: &BlochVector,
        alice_outcome: Outcome,
        b: &BlochVector,
        bob_outcome: Outcome,
    ) -> f64 {
        self.expectation(&a.projector(alice_outcome), &b.projector(bob_outcome))
    }
}

/// `V = (4F − 1)/3`.
pub fn visibility_from_fidelity(fidelity: f64) -> f64 {
    (4.0 * fidelity - 1.0) / 3.0
}

/// `F = (3V + 1)/4`.
pub fn fidelity_from_visibility(visibility: f64) -> f64 {
    (3.0 * visibility + 1.0) / 4.0
}

/// Joint expectation `E(a, b) = Tr[ρ (a·σ) ⊗ (b·σ)]`.
pub fn correlator(state: &TwoQubitState, a: &BlochVector, b: &BlochVector) -> f64 {
    state.expectation(&a.observable(), &b.observable())
}

impl From<&TwoQubitState> for Matrix3<f64> {
    fn from(state: &TwoQubitState) -> Self {
        state.correlation_tensor()
    }
}

impl TryFrom<[f64; 3]> for BlochVector {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        BlochVector::new(v[0], v[1], v[2])
    }
}
