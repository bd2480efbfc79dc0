//! Misalignment of Alice's Poincaré sphere relative to Bob's.
//!
//! Bob's sphere is held fixed. Alice's measurement directions are rotated by
//! `R_y(χ) R_z(φ) R_y(θ)`: first an in-plane turn by θ about the shared Y
//! axis, then a tilt of the Y axis by φ, then a final turn by χ about Y.
//! The tilt and final turn are right-handed, which makes the image of ŷ equal
//! to `n′ = (−sin φ cos χ, cos φ, sin φ sin χ)`. The in-plane turn by θ is
//! taken in the sense that carries ẑ towards −x̂, so that on the shared-axis
//! slice the correlations depend on θ − χ.

use nalgebra::{Matrix3, Vector3};

use crate::chsh::{chsh_combinations, ChshResult, CorrelationMatrix};
use crate::error::{domain, Result};
use crate::quantum::{correlator, BlochVector, TwoQubitState};

const ORTHOGONALITY_TOLERANCE: f64 = 1e-12;

/// A plane angle, stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn deg(degrees: f64) -> Self {
        Angle(degrees.to_radians())
    }

    pub fn rad(radians: f64) -> Self {
        Angle(radians)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }
}

impl std::ops::Sub for Angle {
    type Output = Angle;

    fn sub(self, rhs: Angle) -> Angle {
        Angle(self.0 - rhs.0)
    }
}

impl std::ops::Add for Angle {
    type Output = Angle;

    fn add(self, rhs: Angle) -> Angle {
        Angle(self.0 + rhs.0)
    }
}

/// Right-handed rotation about ŷ.
pub fn rotation_about_y(angle: Angle) -> Matrix3<f64> {
    let (s, c) = angle.radians().sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Right-handed rotation about ẑ.
pub fn rotation_about_z(angle: Angle) -> Matrix3<f64> {
    let (s, c) = angle.radians().sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// The (θ, φ, χ) misalignment and the rotation it induces on Alice's sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRotation {
    pub theta: Angle,
    pub phi: Angle,
    pub chi: Angle,
    matrix: Matrix3<f64>,
}

impl FrameRotation {
    pub fn new(theta: Angle, phi: Angle, chi: Angle) -> Self {
        let matrix = rotation_about_y(chi) * rotation_about_z(phi) * rotation_about_y(Angle::ZERO - theta);
        Self { theta, phi, chi, matrix }
    }

    pub fn identity() -> Self {
        Self::new(Angle::ZERO, Angle::ZERO, Angle::ZERO)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    /// Image of Alice's Y axis, `n′`.
    pub fn tilted_axis(&self) -> Vector3<f64> {
        self.matrix * Vector3::y()
    }
}

/// Shorthand for [`FrameRotation::new`].
pub fn rotation_matrix(theta: Angle, phi: Angle, chi: Angle) -> FrameRotation {
    FrameRotation::new(theta, phi, chi)
}

/// Two mutually unbiased observables: perpendicular Bloch vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementPair {
    pub first: BlochVector,
    pub second: BlochVector,
}

impl MeasurementPair {
    pub fn new(first: BlochVector, second: BlochVector) -> Result<Self> {
        let overlap = first.dot(&second);
        if overlap.abs() > ORTHOGONALITY_TOLERANCE {
            return domain(format!("measurement directions are not perpendicular (overlap {overlap:e})"));
        }
        Ok(Self { first, second })
    }
}

/// Alice's `(R ẑ, R x̂)`.
pub fn alice_directions(rot: &FrameRotation) -> MeasurementPair {
    let m = rot.matrix();
    MeasurementPair {
        first: BlochVector::Z.rotated(m),
        second: BlochVector::X.rotated(m),
    }
}

/// Bob's fixed `P = −(Z + X)/√2` and `Q = (Z − X)/√2`.
pub fn bob_directions() -> MeasurementPair {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    MeasurementPair {
        first: BlochVector::from_vector_unchecked(Vector3::new(-h, 0.0, -h)),
        second: BlochVector::from_vector_unchecked(Vector3::new(-h, 0.0, h)),
    }
}

/// Correlator matrix with rows Alice `(X′, Z′)` and columns Bob `(P, Q)`,
/// so combination 0 is the canonical `XP + XQ + ZP − ZQ`.
pub fn correlation_matrix(state: &TwoQubitState, rot: &FrameRotation) -> CorrelationMatrix {
    let alice = alice_directions(rot);
    let bob = bob_directions();
    let rows = [alice.second, alice.first];
    let cols = [bob.first, bob.second];
    CorrelationMatrix::from_correlators([
        [correlator(state, &rows[0], &cols[0]), correlator(state, &rows[0], &cols[1])],
        [correlator(state, &rows[1], &cols[0]), correlator(state, &rows[1], &cols[1])],
    ])
}

/// CHSH result for the state with Alice's sphere misaligned by (θ, φ, χ).
pub fn chsh_at(state: &TwoQubitState, theta: Angle, phi: Angle, chi: Angle) -> ChshResult {
    chsh_combinations(&correlation_matrix(state, &FrameRotation::new(theta, phi, chi)))
}

/// Evaluates CHSH for many rotations of one state.
///
/// Caches the correlation tensor `T` so each evaluation is a handful of
/// 3-vector products instead of 4×4 complex traces. Agrees with
/// [`chsh_at`] to round-off.
#[derive(Debug, Clone)]
pub struct ChshEvaluator {
    // Bob's directions premultiplied by T: column j is T b_j.
    t_bob: [Vector3<f64>; 2],
}

impl ChshEvaluator {
    pub fn new(state: &TwoQubitState) -> Self {
        let t = state.correlation_tensor();
        let bob = bob_directions();
        Self { t_bob: [t * bob.first.to_vector(), t * bob.second.to_vector()] }
    }

    /// CHSH for Alice's sphere rotated by an arbitrary rotation matrix.
    pub fn evaluate(&self, rotation: &Matrix3<f64>) -> ChshResult {
        // Alice's X′ and Z′ are the first and third columns of the rotation.
        let x = rotation.column(0);
        let z = rotation.column(2);
        let [tp, tq] = &self.t_bob;
        chsh_combinations(&CorrelationMatrix::from_correlators([
            [x.dot(tp), x.dot(tq)],
            [z.dot(tp), z.dot(tq)],
        ]))
    }

    pub fn evaluate_frame(&self, rot: &FrameRotation) -> ChshResult {
        self.evaluate(rot.matrix())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chsh::closed_form_s;
    use crate::TSIRELSON_BOUND;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_vec(v: BlochVector, expected: [f64; 3]) {
        assert_abs_diff_eq!(v.x(), expected[0], epsilon = 1e-12);
        assert_abs_diff_eq!(v.y(), expected[1], epsilon = 1e-12);
        assert_abs_diff_eq!(v.z(), expected[2], epsilon = 1e-12);
    }

    #[test]
    fn identity_rotation() {
        let r = FrameRotation::identity();
        assert_abs_diff_eq!(*r.matrix(), Matrix3::identity(), epsilon = 1e-15);
        let a = alice_directions(&r);
        assert_vec(a.first, [0.0, 0.0, 1.0]);
        assert_vec(a.second, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn in_plane_turn_fixes_y() {
        let r = rotation_matrix(Angle::deg(37.0), Angle::ZERO, Angle::ZERO);
        assert_abs_diff_eq!(r.tilted_axis(), Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn full_tilt_sends_y_to_minus_x() {
        let r = rotation_matrix(Angle::ZERO, Angle::deg(90.0), Angle::ZERO);
        assert_abs_diff_eq!(r.tilted_axis(), Vector3::new(-1.0, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn matrices_are_proper_rotations_with_expected_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..500 {
            let (t, p, c) = (rng.random_range(-360.0..360.0), rng.random_range(0.0..90.0), rng.random_range(-360.0..360.0));
            let r = rotation_matrix(Angle::deg(t), Angle::deg(p), Angle::deg(c));
            let m = r.matrix();
            assert_abs_diff_eq!(m.transpose() * m, Matrix3::identity(), epsilon = 1e-12);
            assert_abs_diff_eq!(m.determinant(), 1.0, epsilon = 1e-12);
            let (sp, cp) = p.to_radians().sin_cos();
            let (sc, cc) = c.to_radians().sin_cos();
            assert_abs_diff_eq!(r.tilted_axis(), Vector3::new(-sp * cc, cp, sp * sc), epsilon = 1e-12);
            let a = alice_directions(&r);
            assert_abs_diff_eq!(a.first.norm(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(a.second.norm(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(a.first.dot(&a.second), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn quarter_turn_swaps_alice_axes() {
        let a = alice_directions(&rotation_matrix(Angle::deg(90.0), Angle::ZERO, Angle::ZERO));
        assert_vec(a.first, [-1.0, 0.0, 0.0]);
        assert_vec(a.second, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn half_quarter_turn_aligns_with_bob() {
        let a = alice_directions(&rotation_matrix(Angle::deg(45.0), Angle::ZERO, Angle::ZERO));
        let b = bob_directions();
        // Each of Alice's directions is parallel or antiparallel to one of Bob's.
        for v in [a.first, a.second] {
            let best = b.first.dot(&v).abs().max(b.second.dot(&v).abs());
            assert_abs_diff_eq!(best, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn bob_directions_are_complementary() {
        let b = bob_directions();
        assert_abs_diff_eq!(b.first.dot(&b.second), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.first.norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.first.dot(&BlochVector::Z), -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert!(MeasurementPair::new(b.first, b.second).is_ok());
        assert!(MeasurementPair::new(b.first, b.first).is_err());
    }

    #[test]
    fn chsh_at_examples() {
        let s = TwoQubitState::singlet();
        assert_abs_diff_eq!(chsh_at(&s, Angle::ZERO, Angle::ZERO, Angle::ZERO).s_max, TSIRELSON_BOUND, epsilon = 1e-12);
        assert_abs_diff_eq!(chsh_at(&s, Angle::deg(45.0), Angle::ZERO, Angle::ZERO).s_max, 2.0, epsilon = 1e-12);
        let w = TwoQubitState::werner(0.992).unwrap();
        let r = chsh_at(&w, Angle::ZERO, Angle::ZERO, Angle::ZERO);
        assert_abs_diff_eq!(r.s_max, TSIRELSON_BOUND * 0.992, epsilon = 1e-12);
        assert_eq!(r.best_combo_index, 0);
    }

    #[test]
    fn shared_axis_slice_matches_closed_form() {
        for state in [TwoQubitState::singlet(), TwoQubitState::werner(0.992).unwrap()] {
            let v = state.visibility().unwrap();
            for k in 0..3600 {
                let theta = Angle::deg(k as f64 * 0.1);
                let s = chsh_at(&state, theta, Angle::ZERO, Angle::ZERO).s_max;
                assert_abs_diff_eq!(s, closed_form_s(theta, v), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn evaluator_matches_trace_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let state = TwoQubitState::werner(0.83).unwrap();
        let eval = ChshEvaluator::new(&state);
        for _ in 0..500 {
            let rot = rotation_matrix(
                Angle::deg(rng.random_range(0.0..360.0)),
                Angle::deg(rng.random_range(0.0..180.0)),
                Angle::deg(rng.random_range(0.0..360.0)),
            );
            let a = chsh_combinations(&correlation_matrix(&state, &rot));
            let b = eval.evaluate_frame(&rot);
            for k in 0..4 {
                assert_abs_diff_eq!(a.combos[k], b.combos[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn periodicity_in_theta() {
        let s = TwoQubitState::singlet();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let t = rng.random_range(0.0..360.0);
            let p = rng.random_range(0.0..90.0);
            let a = chsh_at(&s, Angle::deg(t), Angle::deg(p), Angle::ZERO).s_max;
            let b = chsh_at(&s, Angle::deg(t + 180.0), Angle::deg(p), Angle::ZERO).s_max;
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            let a0 = chsh_at(&s, Angle::deg(t), Angle::ZERO, Angle::ZERO).s_max;
            let b0 = chsh_at(&s, Angle::deg(t + 90.0), Angle::ZERO, Angle::ZERO).s_max;
            assert_abs_diff_eq!(a0, b0, epsilon = 1e-12);
        }
    }
}
