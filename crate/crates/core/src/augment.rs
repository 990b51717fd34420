//! Attribute-guided augmentation: Gaussian perturbation around fitted twins.
//!
//! Sample `j` picks a twin uniformly at random and draws every attribute from
//! a normal distribution centered on that twin's value with standard
//! deviation `deviation_fraction * span / 2`, so with the default fraction of
//! 0.15 about 95% of the draws land within 15% of the attribute span of the
//! twin. Angles then wrap and bounded values clamp.
//!
//! Randomness for sample `j` comes from its own ChaCha stream keyed by
//! `(seed, j)`, so the list is identical however it is chunked across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::attributes::{normalize_psi, Attribute, AttributeVector, ATTRIBUTE_COUNT};
use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_DEVIATION_FRACTION: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentConfig {
    pub deviation_fraction: f64,
    /// Number of samples to draw.
    pub n: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            deviation_fraction: DEFAULT_DEVIATION_FRACTION,
            n: 600,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.deviation_fraction > 0.0 && self.deviation_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "deviation_fraction must lie in (0, 1], got {}",
                self.deviation_fraction
            )));
        }
        if self.n == 0 {
            return Err(Error::Config("augmentation needs n >= 1".into()));
        }
        Ok(())
    }

    /// Per-attribute standard deviation, `deviation_fraction * span / 2`.
    pub fn sigma(&self, attribute: Attribute) -> f64 {
        self.deviation_fraction * attribute.span() / 2.0
    }

    pub fn sigmas(&self) -> [f64; ATTRIBUTE_COUNT] {
        Attribute::ALL.map(|a| self.sigma(a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSample {
    pub psi: AttributeVector,
    pub source_twin: usize,
    pub draw_index: usize,
}

/// Deterministic generator for sample `index` under `seed`.
pub(crate) fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draw one perturbed vector around `center` with per-attribute `sigmas`.
pub fn perturb(
    center: &AttributeVector,
    sigmas: &[f64; ATTRIBUTE_COUNT],
    rng: &mut impl Rng,
) -> Result<AttributeVector> {
    let mut raw = center.components();
    for (value, &sigma) in raw.iter_mut().zip(sigmas) {
        let normal = Normal::new(*value, sigma)
            .map_err(|e| Error::InvalidInput(format!("bad standard deviation {sigma}: {e}")))?;
        *value = normal.sample(rng);
    }
    Ok(normalize_psi(raw))
}

/// Draw `cfg.n` samples around uniformly chosen twins.
pub fn sample_augmented(
    twins: &[AttributeVector],
    cfg: &AugmentConfig,
) -> Result<Vec<AugmentedSample>> {
    sample_with_sigmas(twins, cfg, &cfg.sigmas())
}

/// As [`sample_augmented`] with explicit standard deviations.
pub fn sample_with_sigmas(
    twins: &[AttributeVector],
    cfg: &AugmentConfig,
    sigmas: &[f64; ATTRIBUTE_COUNT],
) -> Result<Vec<AugmentedSample>> {
    if twins.is_empty() {
        return Err(Error::InvalidInput("no twins to augment".into()));
    }
    if cfg.n == 0 {
        return Err(Error::InvalidInput("augmentation needs n >= 1".into()));
    }
    if let Some(bad) = sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidInput(format!(
            "standard deviations must be positive, got {bad}"
        )));
    }
    par::try_map_range(cfg.n, |j| {
        let mut rng = sample_rng(cfg.seed, j as u64);
        let source_twin = rng.random_range(0..twins.len());
        let psi = perturb(&twins[source_twin], sigmas, &mut rng)?;
        Ok(AugmentedSample {
            psi,
            source_twin,
            draw_index: j,
        })
    })
}
