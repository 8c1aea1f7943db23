//! Truncated states with random coefficients, C_n = r_n e^{inθ}, and seeded
//! ensembles of them.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::par::Exec;

/// Identifier of the random stream, embedded in every emitted file.
pub const PRNG_ID: &str = "chacha20/rand_chacha-0.3/u64-seed_from_u64/f64-53bit-uniform";

/// Moduli below this are treated as zero when checking for a degenerate draw.
pub const DEGENERATE_MODULUS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Distribution {
    /// r_n ~ Uniform[0, 1)
    #[default]
    #[serde(rename = "uniform-unit")]
    UniformUnit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsrcSpec {
    pub n: usize,
    #[serde(default)]
    pub theta: f64,
    pub seed: u64,
    #[serde(default)]
    pub distribution: Distribution,
}

impl TsrcSpec {
    pub fn new(n: usize, theta: f64, seed: u64) -> Self {
        TsrcSpec { n, theta, seed, distribution: Distribution::UniformUnit }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() {
            return Err(Error::ConfigInvalid(format!("theta must be finite, got {}", self.theta)));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        TsrcSpec { seed, ..self }
    }

    pub fn with_n(self, n: usize) -> Self {
        TsrcSpec { n, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub base: TsrcSpec,
    pub realizations: usize,
}

impl EnsembleSpec {
    pub fn new(base: TsrcSpec, realizations: usize) -> Self {
        EnsembleSpec { base, realizations }
    }
}

/// The N+1 moduli r_0..r_N for `spec`.
pub fn draw_moduli(spec: &TsrcSpec) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    match spec.distribution {
        Distribution::UniformUnit => (0..=spec.n).map(|_| rng.gen::<f64>()).collect(),
    }
}

/// Normalized Σ r_n e^{inθ}|n⟩ from explicit moduli.
pub fn from_moduli(moduli: &[f64], theta: f64) -> Result<FockState> {
    if moduli.is_empty() {
        return Err(Error::ConfigInvalid("need at least one modulus".into()));
    }
    if moduli.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::ConfigInvalid("moduli must be finite and non-negative".into()));
    }
    if moduli.iter().all(|r| *r < DEGENERATE_MODULUS) {
        return Err(Error::DegenerateDraw { realization: None });
    }
    let amplitudes = moduli
        .iter()
        .enumerate()
        .map(|(n, &r)| C64::from_polar(r, n as f64 * theta))
        .collect();
    FockState::new(amplitudes)?.normalize()
}

pub fn generate_tsrc(spec: &TsrcSpec) -> Result<FockState> {
    spec.validate()?;
    from_moduli(&draw_moduli(spec), spec.theta)
}

/// Seed of realization `j`: the base seed itself for j = 0, otherwise the
/// SplitMix64 finalizer applied to `base + j·0x9E3779B97F4A7C15`.
pub fn derive_seed(base: u64, j: usize) -> u64 {
    if j == 0 {
        return base;
    }
    let mut z = base.wrapping_add((j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn ensemble_states(spec: &EnsembleSpec, exec: Exec) -> Result<Vec<FockState>> {
    if spec.realizations == 0 {
        return Err(Error::ConfigInvalid("realizations must be at least 1".into()));
    }
    exec.try_map(spec.realizations, |j| {
        let s = spec.base.with_seed(derive_seed(spec.base.seed, j));
        generate_tsrc(&s).map_err(|e| match e {
            Error::DegenerateDraw { .. } => Error::DegenerateDraw { realization: Some(j) },
            other => other,
        })
    })
}
