use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{ChaffSource, ChannelSet};
use crate::embedding::Embedding;
use crate::error::{MvotError, Result};
use crate::rng::{gaussian_vec, norm, stream_rng, unit_direction};

/// Truncated normal over cosine values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub mean: f64,
    pub std: f64,
    pub lo: f64,
    pub hi: f64,
}

impl DistributionSpec {
    pub const fn new(mean: f64, std: f64, lo: f64, hi: f64) -> Self {
        Self { mean, std, lo, hi }
    }

    /// Point mass at `value`.
    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0, value, value)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { mean, std, lo, hi } = *self;
        if ![mean, std, lo, hi].iter().all(|v| v.is_finite()) {
            return Err(MvotError::InvalidDistribution(format!("non-finite field in {self:?}")));
        }
        if std < 0.0 {
            return Err(MvotError::InvalidDistribution(format!("negative std {std}")));
        }
        if lo > hi {
            return Err(MvotError::InvalidDistribution(format!("empty truncation [{lo}, {hi}]")));
        }
        if lo < -1.0 || hi > 1.0 {
            return Err(MvotError::InvalidDistribution(format!(
                "truncation [{lo}, {hi}] outside [-1, 1]"
            )));
        }
        if std == 0.0 && !(lo..=hi).contains(&mean) {
            return Err(MvotError::InvalidDistribution(format!(
                "point mass {mean} outside truncation [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Inverse-CDF draw restricted to `[lo, hi]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.std == 0.0 || self.lo == self.hi {
            return self.mean.clamp(self.lo, self.hi);
        }
        let normal = Normal::new(self.mean, self.std).expect("validated distribution");
        let (a, b) = (normal.cdf(self.lo), normal.cdf(self.hi));
        if b - a < 1e-300 {
            // All mass sits in one tail; fall back to the nearer bound.
            return if self.mean < self.lo { self.lo } else { self.hi };
        }
        let u: f64 = rng.random();
        normal.inverse_cdf(a + u * (b - a)).clamp(self.lo, self.hi)
    }
}

/// How the per-channel ground truths of one identity relate to each other.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelCoupling {
    /// Each channel is an independent draw from the face process.
    #[default]
    Independent,
    /// Every channel carries the same vector.
    Cloned,
    /// Channels share one latent direction plus independent noise. `noise`
    /// in `[0, 1]`: 0 is `Cloned`, 1 is `Independent`; each channel has
    /// cosine `1 - noise` to the latent.
    SharedLatent { noise: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub num_identities: usize,
    pub dim: usize,
    pub n_channels: usize,
    /// Cosine between a genuine capture and the enrolled ground truth.
    pub genuine_cos: DistributionSpec,
    /// Cosine of a same-population cohort capture to the ground truth.
    pub imposter_cos: DistributionSpec,
    /// Band the unrelated-face and chaff scores are expected to fall in.
    pub unrelated_cos: DistributionSpec,
    pub rng_seed: u64,
    #[serde(default)]
    pub coupling: ChannelCoupling,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        Self {
            num_identities: 100,
            dim: 512,
            n_channels: 5,
            genuine_cos: DistributionSpec::new(0.9, 0.05, 0.8, 1.0),
            imposter_cos: DistributionSpec::new(0.3, 0.05, 0.2, 0.4),
            unrelated_cos: DistributionSpec::new(0.0, 0.1, -0.25, 0.25),
            rng_seed: 0,
            coupling: ChannelCoupling::Independent,
        }
    }
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_identities == 0 {
            return Err(MvotError::InvalidParams("num_identities must be positive".into()));
        }
        if self.dim < 2 {
            return Err(MvotError::DimensionTooSmall(self.dim));
        }
        if self.n_channels == 0 {
            return Err(MvotError::InvalidParams("n_channels must be positive".into()));
        }
        for d in [&self.genuine_cos, &self.imposter_cos, &self.unrelated_cos] {
            d.validate()?;
        }
        for (name, d) in [("genuine", &self.genuine_cos), ("imposter", &self.imposter_cos)] {
            if d.lo <= -1.0 {
                return Err(MvotError::InvalidDistribution(format!(
                    "{name} lower bound must exceed -1 for exact-cosine construction"
                )));
            }
        }
        if self.genuine_cos.lo <= self.imposter_cos.hi {
            return Err(MvotError::InvalidDistribution(format!(
                "genuine band [{}, {}] must lie strictly above imposter band [{}, {}]",
                self.genuine_cos.lo, self.genuine_cos.hi, self.imposter_cos.lo, self.imposter_cos.hi
            )));
        }
        if let ChannelCoupling::SharedLatent { noise } = self.coupling {
            if !(0.0..=1.0).contains(&noise) {
                return Err(MvotError::InvalidParams(format!("coupling noise {noise} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Builds `q = ρ·u + √(1−ρ²)·w` per channel with `w` a fresh unit vector
/// orthogonal to `u`, so `cos(q, u) = ρ` exactly up to f32 rounding.
pub fn derive_channels<R: Rng + ?Sized>(latents: &[Embedding], target_cos: f64, rng: &mut R) -> Result<ChannelSet> {
    let targets = vec![target_cos; latents.len()];
    derive_channels_with(latents, &targets, rng)
}

/// [`derive_channels`] with an individual target cosine per channel.
pub fn derive_channels_with<R: Rng + ?Sized>(
    latents: &[Embedding],
    target_cos: &[f64],
    rng: &mut R,
) -> Result<ChannelSet> {
    if latents.len() != target_cos.len() {
        return Err(MvotError::ChannelMismatch {
            expected: latents.len(),
            got: target_cos.len(),
        });
    }
    let channels = latents
        .iter()
        .zip(target_cos)
        .map(|(u, &rho)| exact_cosine_vector(u, rho, rng))
        .collect::<Result<Vec<_>>>()?;
    ChannelSet::new(channels)
}

fn exact_cosine_vector<R: Rng + ?Sized>(latent: &Embedding, rho: f64, rng: &mut R) -> Result<Embedding> {
    if !(rho > -1.0 && rho <= 1.0) {
        return Err(MvotError::InvalidParams(format!("target cosine {rho} outside (-1, 1]")));
    }
    if latent.dim() < 2 {
        return Err(MvotError::DimensionTooSmall(latent.dim()));
    }
    if rho == 1.0 {
        return Ok(latent.clone());
    }
    let u = {
        let v = latent.to_f64();
        let n = norm(&v);
        v.into_iter().map(|x| x / n).collect::<Vec<_>>()
    };
    let w = loop {
        let mut w = gaussian_vec(rng, u.len());
        let proj: f64 = w.iter().zip(&u).map(|(a, b)| a * b).sum();
        w.iter_mut().zip(&u).for_each(|(a, b)| *a -= proj * b);
        let n = norm(&w);
        if n > 1e-9 {
            w.iter_mut().for_each(|a| *a /= n);
            break w;
        }
    };
    let s = (1.0 - rho * rho).sqrt();
    let q: Vec<f64> = u.iter().zip(&w).map(|(a, b)| rho * a + s * b).collect();
    Embedding::from_f64(&q)
}

/// Synthetic identities, one ground-truth unit vector per channel.
///
/// All ground truths, unrelated faces and synthetic chaff are draws from the
/// same isotropic face process. Identity `i` is generated from its own
/// random stream, so it does not depend on `num_identities`.
#[derive(Clone, Debug)]
pub struct Population {
    spec: PopulationSpec,
    identities: Vec<ChannelSet>,
}

impl Population {
    pub fn sample(spec: PopulationSpec) -> Result<Self> {
        spec.validate()?;
        let identities = (0..spec.num_identities)
            .map(|id| {
                let mut rng = stream_rng(spec.rng_seed, id as u64);
                face(&spec, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spec, identities })
    }

    pub fn spec(&self) -> &PopulationSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.identities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.identities.is_empty()
    }

    pub fn ground_truth(&self, id: usize) -> Result<&ChannelSet> {
        self.identities
            .get(id)
            .ok_or_else(|| MvotError::UnknownIdentity(id.to_string()))
    }

    pub fn identities(&self) -> &[ChannelSet] {
        &self.identities
    }

    /// Fresh capture of `id` with per-channel cosines drawn independently
    /// from `genuine_cos`.
    pub fn genuine_query<R: Rng + ?Sized>(&self, id: usize, rng: &mut R) -> Result<ChannelSet> {
        self.capture(id, &self.spec.genuine_cos, rng)
    }

    /// Same-population cohort capture: cosine to `id`'s ground truth drawn
    /// from `imposter_cos`.
    pub fn cohort_query<R: Rng + ?Sized>(&self, id: usize, rng: &mut R) -> Result<ChannelSet> {
        self.capture(id, &self.spec.imposter_cos, rng)
    }

    /// Genuine capture of a different, uniformly chosen identity. Falls back
    /// to an unrelated face when the population has a single identity.
    pub fn imposter_query<R: Rng + ?Sized>(&self, claimed: usize, rng: &mut R) -> Result<ChannelSet> {
        self.ground_truth(claimed)?;
        if self.len() < 2 {
            let face = self.unrelated_face(rng)?;
            return derive_channels_with(face.channels(), &self.draw_targets(&self.spec.genuine_cos, rng), rng);
        }
        let mut other = rng.random_range(0..self.len() - 1);
        if other >= claimed {
            other += 1;
        }
        self.genuine_query(other, rng)
    }

    /// A new identity from the face process that is not in the population.
    pub fn unrelated_face<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelSet> {
        face(&self.spec, rng)
    }

    pub fn chaff_source(&self, seed: u64) -> ChaffSource {
        ChaffSource::synthetic(self.spec.dim, seed)
    }

    fn capture<R: Rng + ?Sized>(&self, id: usize, dist: &DistributionSpec, rng: &mut R) -> Result<ChannelSet> {
        let truth = self.ground_truth(id)?;
        let targets = self.draw_targets(dist, rng);
        derive_channels_with(truth.channels(), &targets, rng)
    }

    fn draw_targets<R: Rng + ?Sized>(&self, dist: &DistributionSpec, rng: &mut R) -> Vec<f64> {
        (0..self.spec.n_channels).map(|_| dist.sample(rng)).collect()
    }
}

/// One draw from the face process, honoring the channel coupling.
fn face<R: Rng + ?Sized>(spec: &PopulationSpec, rng: &mut R) -> Result<ChannelSet> {
    let unit = |rng: &mut R| Embedding::from_f64(&unit_direction(rng, spec.dim));
    let channels = match spec.coupling {
        ChannelCoupling::Independent => (0..spec.n_channels).map(|_| unit(rng)).collect::<Result<Vec<_>>>()?,
        ChannelCoupling::Cloned => vec![unit(rng)?; spec.n_channels],
        ChannelCoupling::SharedLatent { noise } => {
            let latent = unit(rng)?;
            let rho = (1.0 - noise).max(-1.0 + 1e-12);
            derive_channels(&vec![latent; spec.n_channels], rho, rng)?.into_channels()
        }
    };
    ChannelSet::new(channels)
}
