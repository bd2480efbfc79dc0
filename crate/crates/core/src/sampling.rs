//! Grid scans over (θ, φ), cosine-weighted cumulative violation probability,
//! and Monte Carlo over uniformly random relative frames.
//!
//! The weighted estimate at grid position `t` is
//!
//! ```text
//! p(t) = Σ_{s=0}^{t} μ(s) f(φ_s)
//! μ(s) = C [cos φ_{s−1} − cos φ_s]   for 1 ≤ s ≤ t,   μ(0) = 0
//! ```
//!
//! with `C` normalising the weights to one, and `p(0) = f(φ_0)` (μ(0) = 1 when
//! only the perfectly shared direction is included). The weights are the
//! probability that a uniformly random axis falls in the polar band
//! `(φ_{s−1}, φ_s]`.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chsh::{is_violation, ChshResult};
use crate::error::{domain, Error, Result};
use crate::exec::Execution;
use crate::frames::{Angle, ChshEvaluator, FrameRotation};
use crate::quantum::TwoQubitState;

/// Samples per independently seeded Monte Carlo block.
pub const MONTE_CARLO_BLOCK: usize = 1 << 16;

const GRID_TOLERANCE: f64 = 1e-9;

/// Inclusive `start:step:stop` range in degrees. Points are `start + k·step`
/// for integer `k`, snapped to 1e-10° so that e.g. `42.6:0.1:44.2` yields
/// 42.9 rather than 42.900000000000006.
pub fn degree_values(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && step.is_finite() && stop.is_finite()) {
        return domain("range bounds must be finite");
    }
    if step <= 0.0 {
        return domain(format!("range step {step} must be positive"));
    }
    if stop < start {
        return domain(format!("range stop {stop} is below start {start}"));
    }
    let span = (stop - start) / step;
    let n = (span + GRID_TOLERANCE).floor() as usize;
    Ok((0..=n).map(|k| snap_degrees(start + k as f64 * step)).collect())
}

/// [`degree_values`] as angles.
pub fn degree_range(start: f64, step: f64, stop: f64) -> Result<Vec<Angle>> {
    Ok(degree_values(start, step, stop)?.into_iter().map(Angle::deg).collect())
}

fn snap_degrees(x: f64) -> f64 {
    let snapped = (x * 1e10).round() / 1e10;
    if snapped == 0.0 { 0.0 } else { snapped }
}

/// The two angle grids and the fixed χ used by [`scan`].
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSpec {
    pub theta_grid: Vec<Angle>,
    pub phi_grid: Vec<Angle>,
    pub chi: Angle,
}

impl SamplingSpec {
    pub fn new(theta_grid: Vec<Angle>, phi_grid: Vec<Angle>, chi: Angle) -> Result<Self> {
        check_grid("θ", &theta_grid)?;
        check_grid("φ", &phi_grid)?;
        Ok(Self { theta_grid, phi_grid, chi })
    }
}

impl Default for SamplingSpec {
    /// θ = 0:10:180 (19 points), φ = 0:10:90 (10 points), χ = 0.
    fn default() -> Self {
        Self {
            theta_grid: degree_range(0.0, 10.0, 180.0).expect("static grid"),
            phi_grid: degree_range(0.0, 10.0, 90.0).expect("static grid"),
            chi: Angle::ZERO,
        }
    }
}

fn check_grid(name: &str, grid: &[Angle]) -> Result<()> {
    if grid.is_empty() {
        return domain(format!("{name} grid is empty"));
    }
    if grid.iter().any(|a| !a.radians().is_finite()) {
        return domain(format!("{name} grid contains a non-finite angle"));
    }
    if grid.windows(2).any(|w| w[1].radians() <= w[0].radians()) {
        return domain(format!("{name} grid is not strictly increasing"));
    }
    Ok(())
}

/// All θ points at one φ.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiRow {
    pub phi: Angle,
    /// Fraction of θ points with a strict violation.
    pub f: f64,
    pub violations: usize,
    pub mean_s: f64,
    pub points: Vec<ChshResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationCurve {
    pub theta_grid: Vec<Angle>,
    pub chi: Angle,
    pub rows: Vec<PhiRow>,
    /// `(t, p(t))` for every φ position; empty unless the φ grid starts at 0.
    pub cumulative: Vec<(usize, f64)>,
}

impl ViolationCurve {
    pub fn f_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.f).collect()
    }

    pub fn phi_grid(&self) -> Vec<Angle> {
        self.rows.iter().map(|r| r.phi).collect()
    }
}

/// Evaluates the CHSH parameter at every (θ, φ) grid point.
pub fn scan(state: &TwoQubitState, spec: &SamplingSpec) -> Result<ViolationCurve> {
    scan_with(state, spec, Execution::default())
}

pub fn scan_with(state: &TwoQubitState, spec: &SamplingSpec, exec: Execution) -> Result<ViolationCurve> {
    check_grid("θ", &spec.theta_grid)?;
    check_grid("φ", &spec.phi_grid)?;
    let eval = ChshEvaluator::new(state);
    let n_theta = spec.theta_grid.len();
    let points = exec.map(n_theta * spec.phi_grid.len(), |k| {
        let (p, t) = (k / n_theta, k % n_theta);
        eval.evaluate_frame(&FrameRotation::new(spec.theta_grid[t], spec.phi_grid[p], spec.chi))
    });

    let rows: Vec<PhiRow> = points
        .chunks(n_theta)
        .zip(&spec.phi_grid)
        .map(|(pts, &phi)| {
            let violations = pts.iter().filter(|r| is_violation(r)).count();
            PhiRow {
                phi,
                f: violations as f64 / n_theta as f64,
                violations,
                mean_s: pts.iter().map(|r| r.s_max).sum::<f64>() / n_theta as f64,
                points: pts.to_vec(),
            }
        })
        .collect();

    let mut curve = ViolationCurve { theta_grid: spec.theta_grid.clone(), chi: spec.chi, rows, cumulative: Vec::new() };
    if spec.phi_grid[0].radians() == 0.0 {
        curve.cumulative = (0..curve.rows.len())
            .map(|t| cumulative_probability(&curve, t).map(|p| (t, p)))
            .collect::<Result<_>>()?;
    }
    Ok(curve)
}

/// Normalisation `C = 1 / (1 − cos φ_t)` of the band weights on a uniform
/// grid with spacing `phi_step`.
pub fn normalization_constant(t: usize, phi_step: Angle) -> Result<f64> {
    if t == 0 {
        return domain("normalization is only defined for t ≥ 1");
    }
    let denom = 1.0 - (t as f64 * phi_step.radians()).cos();
    if denom <= 0.0 || !denom.is_finite() {
        return domain(format!("degenerate φ range for t = {t}, step {}°", phi_step.degrees()));
    }
    Ok(1.0 / denom)
}

/// Weight μ(s) of grid position `s` in the estimate `p(t)`, for a uniform φ
/// grid `0, step, 2·step, …`.
pub fn mu(s: i64, t: usize, phi_step: Angle) -> Result<f64> {
    if s < 0 {
        return domain(format!("weight index {s} is negative"));
    }
    let s = s as usize;
    if t == 0 {
        return Ok(if s == 0 { 1.0 } else { 0.0 });
    }
    if s == 0 || s > t {
        return Ok(0.0);
    }
    let c = normalization_constant(t, phi_step)?;
    let h = phi_step.radians();
    Ok(c * (((s - 1) as f64 * h).cos() - (s as f64 * h).cos()))
}

/// Band weights μ(0..=t) for an arbitrary increasing φ grid starting at 0.
pub fn band_weights(phi_grid: &[Angle], t: usize) -> Result<Vec<f64>> {
    if phi_grid.first().map(|a| a.radians()) != Some(0.0) {
        return domain("φ grid must start at 0");
    }
    if t >= phi_grid.len() {
        return Err(Error::Range(format!("t = {t} exceeds the {} available φ rows", phi_grid.len())));
    }
    let mut w = vec![0.0; t + 1];
    if t == 0 {
        w[0] = 1.0;
        return Ok(w);
    }
    let cos: Vec<f64> = phi_grid[..=t].iter().map(|a| a.radians().cos()).collect();
    let total = cos[0] - cos[t];
    if total <= 0.0 {
        return domain("φ grid spans no solid angle");
    }
    for s in 1..=t {
        w[s] = (cos[s - 1] - cos[s]) / total;
    }
    Ok(w)
}

/// `p(t) = Σ μ(s) f(φ_s)`.
pub fn cumulative_probability(curve: &ViolationCurve, t: usize) -> Result<f64> {
    let weights = band_weights(&curve.phi_grid(), t)?;
    let p = weights.iter().zip(&curve.rows).map(|(w, r)| w * r.f).sum::<f64>();
    Ok(p.clamp(0.0, 1.0))
}

/// Fraction of θ ∈ [0°, 180°) at resolution `theta_step` giving a strict
/// violation at tilt `phi` (χ = 0).
pub fn violation_fraction_continuous(state: &TwoQubitState, phi: Angle, theta_step: Angle) -> Result<f64> {
    violation_fraction_continuous_with(state, phi, theta_step, Execution::default())
}

pub fn violation_fraction_continuous_with(
    state: &TwoQubitState,
    phi: Angle,
    theta_step: Angle,
    exec: Execution,
) -> Result<f64> {
    let step = theta_step.degrees();
    if step.is_nan() || step <= 0.0 || !step.is_finite() {
        return domain(format!("θ step {step}° must be positive"));
    }
    let ratio = 180.0 / step;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-6 * ratio.max(1.0) || n < 1.0 {
        return domain(format!("θ step {step}° does not divide 180°"));
    }
    let n = n as usize;
    let eval = ChshEvaluator::new(state);
    let hits = exec.sum_u64(n, |k| {
        let theta = Angle::deg(k as f64 * step);
        is_violation(&eval.evaluate_frame(&FrameRotation::new(theta, phi, Angle::ZERO))) as u64
    });
    Ok(hits as f64 / n as f64)
}

/// A Haar-random rotation from three uniforms on [0, 1), via a uniformly
/// distributed unit quaternion (Shoemake's construction).
pub fn uniform_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quaternion::new(b * (tau * u3).cos(), a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin());
    UnitQuaternion::new_unchecked(q).to_rotation_matrix().into_inner()
}

/// Generator for Monte Carlo block `block`: ChaCha8 keyed by the root seed,
/// with the block index as stream id.
pub fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub p: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Probability that a uniformly random relative frame yields a strict CHSH
/// violation, with its binomial standard error.
pub fn random_frame_violation_probability(
    state: &TwoQubitState,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    random_frame_violation_probability_with(state, samples, seed, Execution::default())
}

pub fn random_frame_violation_probability_with(
    state: &TwoQubitState,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return domain("Monte Carlo needs at least one sample");
    }
    let eval = ChshEvaluator::new(state);
    let block = MONTE_CARLO_BLOCK as u64;
    let blocks = samples.div_ceil(block) as usize;
    let hits = exec.sum_u64(blocks, |b| {
        let len = (samples - b as u64 * block).min(block);
        let mut rng = block_rng(seed, b);
        (0..len).filter(|_| is_violation(&eval.evaluate(&uniform_rotation(&mut rng)))).count() as u64
    });
    let n = samples as f64;
    let p = hits as f64 / n;
    Ok(MonteCarloEstimate { p, stderr: (p * (1.0 - p) / n).sqrt(), samples, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chsh::closed_form_s;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_grids() {
        let spec = SamplingSpec::default();
        assert_eq!(spec.theta_grid.len(), 19);
        assert_eq!(spec.phi_grid.len(), 10);
        assert_eq!(spec.theta_grid[18].degrees(), 180.0);
        assert_eq!(spec.phi_grid[9].degrees(), 90.0);
    }

    #[test]
    fn range_parsing_edges() {
        assert_eq!(degree_range(42.6, 0.1, 44.2).unwrap().len(), 17);
        assert_eq!(degree_range(0.0, 10.0, 0.0).unwrap().len(), 1);
        assert_eq!(degree_range(0.0, 10.0, 95.0).unwrap().len(), 10);
        assert!(degree_range(0.0, 0.0, 10.0).is_err());
        assert!(degree_range(10.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(SamplingSpec::new(vec![], vec![Angle::ZERO], Angle::ZERO).is_err());
        assert!(SamplingSpec::new(vec![Angle::deg(10.0), Angle::deg(5.0)], vec![Angle::ZERO], Angle::ZERO).is_err());
        let bad = SamplingSpec { theta_grid: vec![], phi_grid: vec![Angle::ZERO], chi: Angle::ZERO };
        assert!(scan(&TwoQubitState::singlet(), &bad).is_err());
    }

    #[test]
    fn shared_axis_row_on_default_grid() {
        // Oracle: closed form on the 19 grid points. 45° and 135° are not grid
        // points, so every point strictly violates.
        let oracle = (0..=18).filter(|k| closed_form_s(Angle::deg(*k as f64 * 10.0), 1.0) > 2.0 + 1e-9).count();
        assert_eq!(oracle, 19);
        let curve = scan(&TwoQubitState::singlet(), &SamplingSpec::default()).unwrap();
        assert_eq!(curve.rows[0].violations, oracle);
        assert_eq!(curve.rows[0].f, 1.0);
        assert_eq!(curve.cumulative[0], (0, 1.0));
    }

    #[test]
    fn grid_through_saturation_points() {
        let spec = SamplingSpec::new(degree_range(0.0, 5.0, 175.0).unwrap(), vec![Angle::ZERO], Angle::ZERO).unwrap();
        let curve = scan(&TwoQubitState::singlet(), &spec).unwrap();
        assert_eq!(curve.rows[0].violations, 34);
        assert_eq!(curve.rows[0].f, 34.0 / 36.0);
    }

    #[test]
    fn werner_near_minimum() {
        let w = TwoQubitState::werner(0.992).unwrap();
        let spec = SamplingSpec::new(vec![Angle::deg(43.0)], vec![Angle::ZERO], Angle::ZERO).unwrap();
        let s = scan(&w, &spec).unwrap().rows[0].points[0].s_max;
        let expected = 2.0 * 2f64.sqrt() * 0.992 * 43f64.to_radians().cos();
        assert_abs_diff_eq!(s, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(s, 2.052, epsilon = 5e-4);
    }

    #[test]
    fn f_counts_are_exact() {
        let curve = scan(&TwoQubitState::werner(0.9).unwrap(), &SamplingSpec::default()).unwrap();
        for row in &curve.rows {
            let v = row.points.iter().filter(|r| r.is_violation()).count();
            assert_eq!(row.f, v as f64 / 19.0);
        }
    }

    #[test]
    fn mu_weights() {
        let step = Angle::deg(10.0);
        assert_abs_diff_eq!(normalization_constant(9, step).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mu(1, 9, step).unwrap(), 1.0 - 10f64.to_radians().cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(mu(1, 9, step).unwrap(), 0.015192, epsilon = 1e-6);
        assert_eq!(mu(0, 0, step).unwrap(), 1.0);
        assert_eq!(mu(0, 3, step).unwrap(), 0.0);
        assert_eq!(mu(5, 3, step).unwrap(), 0.0);
        assert!(mu(-1, 3, step).is_err());
        for t in 1..=9 {
            let total: f64 = (0..=t as i64).map(|s| mu(s, t, step).unwrap()).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn band_weights_match_mu_on_uniform_grid() {
        let grid = degree_range(0.0, 10.0, 90.0).unwrap();
        for t in 0..=9 {
            let w = band_weights(&grid, t).unwrap();
            for (s, &ws) in w.iter().enumerate() {
                assert_abs_diff_eq!(ws, mu(s as i64, t, Angle::deg(10.0)).unwrap(), epsilon = 1e-14);
            }
        }
        assert!(matches!(band_weights(&grid, 10), Err(Error::Range(_))));
        assert!(band_weights(&grid[1..], 2).is_err());
    }

    #[test]
    fn cumulative_identity_and_range() {
        let curve = scan(&TwoQubitState::singlet(), &SamplingSpec::default()).unwrap();
        assert_eq!(cumulative_probability(&curve, 0).unwrap(), curve.rows[0].f);
        assert!(matches!(cumulative_probability(&curve, 10), Err(Error::Range(_))));
        for (t, p) in &curve.cumulative {
            assert!((0.0..=1.0).contains(p), "p({t}) = {p}");
        }
    }

    #[test]
    fn continuous_fraction_examples() {
        let s = TwoQubitState::singlet();
        let f = violation_fraction_continuous(&s, Angle::ZERO, Angle::deg(0.01)).unwrap();
        assert!((1.0 - 2.0 / 18000.0..1.0).contains(&f), "{f}");

        // Two failure windows around 45° and 135°, each of half-width
        // 45° − arccos(1/(√2 V)).
        let v = 0.992;
        let w = TwoQubitState::werner(v).unwrap();
        let half = 45.0 - (1.0 / (2f64.sqrt() * v)).acos().to_degrees();
        let analytic = 1.0 - 4.0 * half / 180.0;
        let f = violation_fraction_continuous(&w, Angle::ZERO, Angle::deg(0.01)).unwrap();
        assert_abs_diff_eq!(f, analytic, epsilon = 3e-4);
        assert_abs_diff_eq!(f, 0.990, epsilon = 1e-3);

        let weak = TwoQubitState::werner(std::f64::consts::FRAC_1_SQRT_2).unwrap();
        for phi in [0.0, 30.0, 90.0] {
            assert_eq!(violation_fraction_continuous(&weak, Angle::deg(phi), Angle::deg(0.5)).unwrap(), 0.0);
        }
    }

    #[test]
    fn continuous_fraction_rejects_bad_steps() {
        let s = TwoQubitState::singlet();
        assert!(violation_fraction_continuous(&s, Angle::ZERO, Angle::ZERO).is_err());
        assert!(violation_fraction_continuous(&s, Angle::ZERO, Angle::deg(-1.0)).is_err());
        assert!(violation_fraction_continuous(&s, Angle::ZERO, Angle::deg(7.0)).is_err());
    }

    #[test]
    fn monte_carlo_errors_and_threshold() {
        let s = TwoQubitState::singlet();
        assert!(random_frame_violation_probability(&s, 0, 1).is_err());
        let w = TwoQubitState::werner(0.5).unwrap();
        let est = random_frame_violation_probability(&w, 20_000, 3).unwrap();
        assert_eq!(est.p, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn monte_carlo_is_deterministic_across_execution_modes() {
        let s = TwoQubitState::werner(0.95).unwrap();
        let n = 3 * MONTE_CARLO_BLOCK as u64 + 17;
        let a = random_frame_violation_probability_with(&s, n, 42, Execution::Sequential).unwrap();
        let b = random_frame_violation_probability_with(&s, n, 42, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let c = random_frame_violation_probability_with(&s, n, 42, Execution::Parallel).unwrap();
        assert_eq!(b, c);
    }

    #[test]
    fn uniform_rotation_is_orthogonal() {
        let mut rng = block_rng(1, 0);
        for _ in 0..1000 {
            let r = uniform_rotation(&mut rng);
            assert_abs_diff_eq!(r.transpose() * r, Matrix3::identity(), epsilon = 1e-12);
            assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-12);
        }
    }
}
