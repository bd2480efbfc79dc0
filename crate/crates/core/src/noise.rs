//! Poissonian coincidence counting and CHSH estimation from counts.
//!
//! Each setting records `N ~ Poisson(rate · duration)` pairs, split among
//! the four joint outcomes by their Born probabilities. This is the same
//! law as four independent Poisson processes, one per outcome. Detector
//! dark counts, accidentals and inefficiency are not modelled.

use rand::SeedableRng;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::Serialize;

use crate::chsh::{chsh_combinations, ChshResult, CorrelationMatrix};
use crate::error::{domain, Error, Result};
use crate::frames::{alice_directions, bob_directions, FrameRotation};
use crate::quantum::{BlochVector, Outcome, TwoQubitState};
use crate::LOCAL_BOUND;

/// Pair rate of the reference source, in pairs per second.
pub const DEFAULT_RATE: f64 = 1500.0;

/// Coincidence counts for one pair of measurement settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub pp: u64,
    pub pm: u64,
    pub mp: u64,
    pub mm: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.pp + self.pm + self.mp + self.mm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountRecord {
    /// (Alice's observable index, Bob's observable index).
    pub setting: (usize, usize),
    pub counts: Counts,
    /// Integration time in seconds.
    pub duration: f64,
    /// Expected pairs per second.
    pub rate: f64,
}

impl CountRecord {
    pub fn new(setting: (usize, usize), counts: Counts, duration: f64, rate: f64) -> Self {
        Self { setting, counts, duration, rate }
    }
}

/// Born probabilities `[p(++), p(+−), p(−+), p(−−)]`, clipped at zero and
/// renormalised against round-off.
pub fn outcome_probabilities(state: &TwoQubitState, a: &BlochVector, b: &BlochVector) -> [f64; 4] {
    let mut p = [0.0; 4];
    for (k, (oa, ob)) in Outcome::BOTH.iter().flat_map(|&oa| Outcome::BOTH.map(|ob| (oa, ob))).enumerate() {
        p[k] = state.joint_probability(a, oa, b, ob).max(0.0);
    }
    let total: f64 = p.iter().sum();
    p.map(|x| x / total)
}

fn sample_counts<R: Rng + ?Sized>(rng: &mut R, mean: f64, probs: [f64; 4]) -> Counts {
    let n = Poisson::new(mean).expect("positive mean").sample(rng) as u64;
    let mut out = [0u64; 4];
    let mut remaining = n;
    let mut mass = 1.0;
    for k in 0..3 {
        if remaining == 0 {
            break;
        }
        let q = if mass > 0.0 { (probs[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
        out[k] = Binomial::new(remaining, q).expect("valid probability").sample(rng);
        remaining -= out[k];
        mass -= probs[k];
    }
    out[3] = remaining;
    Counts { pp: out[0], pm: out[1], mp: out[2], mm: out[3] }
}

fn check_exposure(rate: f64, duration: f64) -> Result<()> {
    if !(rate > 0.0 && rate.is_finite()) {
        return domain(format!("rate {rate} must be positive"));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return domain(format!("duration {duration} must be positive"));
    }
    Ok(())
}

/// Simulates one setting's coincidence counts. Deterministic for a fixed
/// seed. The returned record has setting `(0, 0)`.
pub fn simulate_counts(
    state: &TwoQubitState,
    alice_dir: &BlochVector,
    bob_dir: &BlochVector,
    rate: f64,
    duration: f64,
    seed: u64,
) -> Result<CountRecord> {
    check_exposure(rate, duration)?;
    let probs = outcome_probabilities(state, alice_dir, bob_dir);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = sample_counts(&mut rng, rate * duration, probs);
    Ok(CountRecord::new((0, 0), counts, duration, rate))
}

/// `(ê, σ)` with `ê = (n₊₊ + n₋₋ − n₊₋ − n₋₊)/N` and `σ = √((1 − ê²)/N)`.
pub fn estimate_correlator(rec: &CountRecord) -> Result<(f64, f64)> {
    let c = rec.counts;
    let n = c.total();
    if n == 0 {
        return Err(Error::InsufficientData("no coincidences recorded".into()));
    }
    let n = n as f64;
    let e = ((c.pp + c.mm) as f64 - (c.pm + c.mp) as f64) / n;
    Ok((e, ((1.0 - e * e).max(0.0) / n).sqrt()))
}

/// Correlators estimated from counts, with one-sigma errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedChsh {
    pub e_hat: [[f64; 2]; 2],
    pub sigma_e: [[f64; 2]; 2],
    /// CHSH of `e_hat`; `sigma` is the quadrature sum of all four `sigma_e`.
    pub result: ChshResult,
    pub records: Vec<CountRecord>,
}

/// Combines four records, one per setting `(i, j)` with `i, j ∈ {0, 1}`.
pub fn estimate_chsh(records: &[CountRecord]) -> Result<EstimatedChsh> {
    let mut e_hat = [[0.0; 2]; 2];
    let mut sigma_e = [[0.0; 2]; 2];
    let mut seen = [[false; 2]; 2];
    for rec in records {
        let (i, j) = rec.setting;
        if i > 1 || j > 1 {
            return domain(format!("setting ({i}, {j}) is not a CHSH setting"));
        }
        if seen[i][j] {
            return domain(format!("setting ({i}, {j}) recorded twice"));
        }
        seen[i][j] = true;
        (e_hat[i][j], sigma_e[i][j]) = estimate_correlator(rec)?;
    }
    if seen.iter().flatten().any(|s| !s) {
        return Err(Error::InsufficientData("all four CHSH settings are required".into()));
    }
    let sigma = sigma_e.iter().flatten().map(|s| s * s).sum::<f64>().sqrt();
    let result = chsh_combinations(&CorrelationMatrix::new(e_hat)?).with_sigma(sigma);
    Ok(EstimatedChsh { e_hat, sigma_e, result, records: records.to_vec() })
}

/// Seed for sub-stream `index` of a root seed.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(index);
    rng.next_u64()
}

/// Simulates all four CHSH settings for a misaligned frame, rows Alice
/// `(X′, Z′)` and columns Bob `(P, Q)`. Setting `(i, j)` uses seed
/// `derive_seed(seed, 2i + j)`.
pub fn simulate_chsh(
    state: &TwoQubitState,
    rot: &FrameRotation,
    rate: f64,
    duration: f64,
    seed: u64,
) -> Result<EstimatedChsh> {
    check_exposure(rate, duration)?;
    let alice = alice_directions(rot);
    let bob = bob_directions();
    let rows = [alice.second, alice.first];
    let cols = [bob.first, bob.second];
    let mut records = Vec::with_capacity(4);
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in cols.iter().enumerate() {
            let mut rec = simulate_counts(state, a, b, rate, duration, derive_seed(seed, (2 * i + j) as u64))?;
            rec.setting = (i, j);
            records.push(rec);
        }
    }
    estimate_chsh(&records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationClass {
    /// `s_max − σ > 2`.
    ViolatesBySigma,
    /// `s_max > 2 ≥ s_max − σ`.
    ViolatesMeanOnly,
    NoViolation,
}

impl ViolationClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationClass::ViolatesBySigma => "violates_by_sigma",
            ViolationClass::ViolatesMeanOnly => "violates_mean_only",
            ViolationClass::NoViolation => "no_violation",
        }
    }
}

impl std::fmt::Display for ViolationClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifies a result carrying a one-sigma uncertainty.
pub fn classify(result: &ChshResult) -> Result<ViolationClass> {
    let sigma = result.sigma.ok_or_else(|| Error::Contract("CHSH result has no uncertainty".into()))?;
    Ok(if result.s_max - sigma > LOCAL_BOUND {
        ViolationClass::ViolatesBySigma
    } else if result.s_max > LOCAL_BOUND {
        ViolationClass::ViolatesMeanOnly
    } else {
        ViolationClass::NoViolation
    })
}

pub fn classify_violation(est: &EstimatedChsh) -> Result<ViolationClass> {
    classify(&est.result)
}
