//! CHSH combinations of a 2×2 correlator matrix.
//!
//! Rows index Alice's observables, columns Bob's. With rows `(X, Z)` and
//! columns `(P, Q)`, combination 0 is `XP + XQ + ZP − ZQ`, the canonical
//! ordering of the CHSH expression. Flipping the outcome labels of one
//! observable negates a row or column and permutes/negates the four
//! combinations, so the maximum absolute value over the four combinations
//! is the relabeling-maximised CHSH parameter.

use crate::error::{domain, Result};
use crate::frames::Angle;
use crate::{LOCAL_BOUND, TSIRELSON_BOUND};

/// Margin above the local bound required to count as a strict violation.
pub const SATURATION_EPSILON: f64 = 1e-9;

const ENTRY_TOLERANCE: f64 = 1e-12;

/// `e[i][j]` is the correlator of Alice's i-th and Bob's j-th observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationMatrix {
    e: [[f64; 2]; 2],
}

impl CorrelationMatrix {
    pub fn new(e: [[f64; 2]; 2]) -> Result<Self> {
        for &v in e.iter().flatten() {
            if !v.is_finite() || v.abs() > 1.0 + ENTRY_TOLERANCE {
                return domain(format!("correlator {v} outside [-1, 1]"));
            }
        }
        Ok(Self { e })
    }

    /// Skips the range check; used where entries are correlators of a valid
    /// state by construction.
    pub(crate) fn from_correlators(e: [[f64; 2]; 2]) -> Self {
        Self { e }
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.e
    }

    pub fn get(&self, alice: usize, bob: usize) -> f64 {
        self.e[alice][bob]
    }

    /// Relabels outcomes: each sign multiplies one observable's outcomes.
    pub fn relabeled(&self, alice_signs: [f64; 2], bob_signs: [f64; 2]) -> Self {
        let mut e = self.e;
        for (i, row) in e.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v *= alice_signs[i] * bob_signs[j];
            }
        }
        Self { e }
    }
}

/// The four signed CHSH sums and their relabeling-maximised absolute value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshResult {
    pub combos: [f64; 4],
    pub s_max: f64,
    pub best_combo_index: usize,
    /// One-standard-deviation uncertainty of `s_max`, when estimated from counts.
    pub sigma: Option<f64>,
}

impl ChshResult {
    pub fn is_violation(&self) -> bool {
        is_violation(self)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = Some(sigma);
        self
    }
}

/// Evaluates the four combinations, each with exactly one minus sign:
///
/// ```text
/// e11 + e12 + e21 − e22
/// e11 + e12 − e21 + e22
/// e11 − e12 + e21 + e22
/// −e11 + e12 + e21 + e22
/// ```
pub fn chsh_combinations(m: &CorrelationMatrix) -> ChshResult {
    let [[e11, e12], [e21, e22]] = m.e;
    let combos = [
        e11 + e12 + e21 - e22,
        e11 + e12 - e21 + e22,
        e11 - e12 + e21 + e22,
        -e11 + e12 + e21 + e22,
    ];
    let mut best_combo_index = 0;
    let mut s_max = combos[0].abs();
    for (k, c) in combos.iter().enumerate().skip(1) {
        if c.abs() > s_max {
            s_max = c.abs();
            best_combo_index = k;
        }
    }
    ChshResult { combos, s_max, best_combo_index, sigma: None }
}

/// Strict violation: `s_max > 2 + ε`, so exact saturation is not a violation.
pub fn is_violation(r: &ChshResult) -> bool {
    r.s_max > LOCAL_BOUND + SATURATION_EPSILON
}

/// CHSH parameter when the Y direction is perfectly shared (φ = 0):
/// `2√2 V max(|sin θ|, |cos θ|)`.
pub fn closed_form_s(theta: Angle, visibility: f64) -> f64 {
    let (s, c) = theta.radians().sin_cos();
    TSIRELSON_BOUND * visibility * s.abs().max(c.abs())
}
