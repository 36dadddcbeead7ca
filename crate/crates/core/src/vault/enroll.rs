use itertools::Itertools;
use rand::Rng;

use super::{Commitment, HelperData, ProtocolParams, Vault, SALT_LEN};
use crate::embedding::{Embedding, TupleHasher};
use crate::error::{MvotError, Result};
use crate::rng::unit_direction;
use crate::sources::{ChaffSource, ChannelSet};

/// Where each template entry landed. Analysis-only: never part of
/// [`HelperData`] and never serialized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnrollmentTrace {
    pub template_positions: Vec<usize>,
}

pub fn enroll<R: Rng + ?Sized>(
    template: &ChannelSet,
    chaff: &ChaffSource,
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<HelperData> {
    enroll_traced(template, chaff, params, rng).map(|(h, _)| h)
}

pub fn enroll_traced<R: Rng + ?Sized>(
    template: &ChannelSet,
    chaff: &ChaffSource,
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<(HelperData, EnrollmentTrace)> {
    params.validate()?;
    let needed = params.n * params.m;
    let vectors = match chaff.generate(needed) {
        Err(MvotError::ChaffShortage { available, .. }) => {
            return Err(MvotError::ChaffShortage { needed, available });
        }
        other => other?,
    };
    enroll_with_chaff(template, &vectors, params, rng)
}

/// Enrollment from an explicit chaff pool of at least `n·m` vectors; vault
/// `i` takes `chaff[i·m .. (i+1)·m]`.
///
/// Random draws happen in a fixed order (per vault: position, then one
/// scale and one perturbation per entry; then the salt) and do not depend on
/// `k`, so the same rng state yields the same vaults for any `k`.
pub fn enroll_with_chaff<R: Rng + ?Sized>(
    template: &ChannelSet,
    chaff: &[Embedding],
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<(HelperData, EnrollmentTrace)> {
    params.validate()?;
    if template.len() != params.n {
        return Err(MvotError::ChannelMismatch {
            expected: params.n,
            got: template.len(),
        });
    }
    if template.dim() != params.dim {
        return Err(MvotError::DimensionMismatch {
            expected: params.dim,
            got: template.dim(),
        });
    }
    let needed = params.n * params.m;
    if chaff.len() < needed {
        return Err(MvotError::ChaffShortage {
            needed,
            available: chaff.len(),
        });
    }
    if let Some(bad) = chaff[..needed].iter().find(|c| c.dim() != params.dim) {
        return Err(MvotError::DimensionMismatch {
            expected: params.dim,
            got: bad.dim(),
        });
    }

    let mut vaults = Vec::with_capacity(params.n);
    let mut positions = Vec::with_capacity(params.n);
    for (i, t) in template.channels().iter().enumerate() {
        let position = rng.random_range(0..=params.m);
        let pool = &chaff[i * params.m..(i + 1) * params.m];
        let mut entries = Vec::with_capacity(params.m + 1);
        let mut pool_iter = pool.iter();
        for slot in 0..=params.m {
            let source = if slot == position {
                t
            } else {
                pool_iter.next().expect("pool holds exactly m vectors")
            };
            entries.push(obfuscate(source, params, rng)?);
        }
        vaults.push(Vault::new(i as u32, entries)?);
        positions.push(position);
    }

    let mut salt = [0u8; SALT_LEN];
    rng.fill(&mut salt[..]);

    let commitments = commit(&vaults, &positions, params.k, &salt);
    let helper = HelperData {
        params: params.clone(),
        vaults,
        salt,
        commitments,
        format_version: super::FORMAT_VERSION,
    };
    Ok((
        helper,
        EnrollmentTrace {
            template_positions: positions,
        },
    ))
}

/// Stored form of one entry: `r · (e + ε)`, `r ~ U[r_min, r_max]`,
/// `ε = δ·‖e‖·u·d` with `u ~ U[0, 1]` and `d` a uniform direction.
fn obfuscate<R: Rng + ?Sized>(entry: &Embedding, params: &ProtocolParams, rng: &mut R) -> Result<Embedding> {
    let [lo, hi] = params.scalar_range;
    let r = if lo == hi { lo } else { rng.random_range(lo..=hi) };
    let u: f64 = rng.random();
    let dir = unit_direction(rng, entry.dim());
    let mag = params.noise_delta * entry.norm() * u;
    let values: Vec<f64> = entry
        .as_slice()
        .iter()
        .zip(&dir)
        .map(|(&x, d)| r * (f64::from(x) + mag * d))
        .collect();
    Embedding::from_f64(&values)
}

/// One commitment per `k`-subset, over the stored bytes of the template
/// entries.
fn commit(vaults: &[Vault], positions: &[usize], k: usize, salt: &[u8]) -> Vec<Commitment> {
    let hasher = TupleHasher::new(salt);
    let stored: Vec<_> = vaults
        .iter()
        .zip(positions)
        .map(|(v, &p)| v.entries()[p].canonical_bytes())
        .collect();
    (0..vaults.len() as u32)
        .combinations(k)
        .map(|subset| {
            let digest = hasher.digest(subset.iter().map(|&i| (i, stored[i as usize].as_bytes())));
            Commitment { subset, digest }
        })
        .collect()
}

/// Fresh enrollment under the old helper's parameters. The new salt is
/// guaranteed to differ from the old one, so no commitment value carries
/// over.
pub fn revoke_and_reenroll<R: Rng + ?Sized>(
    template: &ChannelSet,
    old: &HelperData,
    chaff: &ChaffSource,
    rng: &mut R,
) -> Result<HelperData> {
    loop {
        let fresh = enroll(template, chaff, &old.params, rng)?;
        if fresh.salt != old.salt {
            return Ok(fresh);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::cosine_similarity;
    use crate::rng::stream_rng;
    use crate::sources::{Population, PopulationSpec};

    fn small_pop() -> Population {
        Population::sample(PopulationSpec {
            num_identities: 4,
            dim: 64,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn vault_shapes_and_commitment_count() {
        let pop = small_pop();
        let params = ProtocolParams::for_chaff(5, 50, 5, 64).unwrap();
        let mut rng = stream_rng(1, 0);
        let (h, trace) =
            enroll_traced(pop.ground_truth(0).unwrap(), &pop.chaff_source(3), &params, &mut rng).unwrap();
        assert_eq!(h.vaults.len(), 5);
        assert!(h.vaults.iter().all(|v| v.len() == 51));
        assert_eq!(h.commitments.len(), 1);
        assert_eq!(trace.template_positions.len(), 5);

        let k4 = ProtocolParams::for_chaff(5, 50, 4, 64).unwrap();
        let h4 = enroll(pop.ground_truth(0).unwrap(), &pop.chaff_source(3), &k4, &mut rng).unwrap();
        assert_eq!(h4.commitments.len(), 5);
        assert!(h4.validate().is_ok());
    }

    #[test]
    fn chaff_shortage_and_mismatch() {
        let pop = small_pop();
        let params = ProtocolParams::for_chaff(5, 50, 5, 64).unwrap();
        let mut rng = stream_rng(1, 0);
        let few = ChaffSource::vectors(ChaffSource::synthetic(64, 0).generate(100).unwrap());
        let err = enroll(pop.ground_truth(0).unwrap(), &few, &params, &mut rng).unwrap_err();
        assert!(matches!(err, MvotError::ChaffShortage { needed: 250, available: 100 }));

        let wrong_dim = ChaffSource::synthetic(32, 0);
        assert!(matches!(
            enroll(pop.ground_truth(0).unwrap(), &wrong_dim, &params, &mut rng),
            Err(MvotError::DimensionMismatch { .. })
        ));
        let three = ChannelSet::new(pop.ground_truth(0).unwrap().channels()[..3].to_vec()).unwrap();
        assert!(matches!(
            enroll(&three, &pop.chaff_source(0), &params, &mut rng),
            Err(MvotError::ChannelMismatch { .. })
        ));
    }

    #[test]
    fn obfuscation_bounds() {
        let params = ProtocolParams::default();
        let mut rng = stream_rng(2, 0);
        let pop = Population::sample(PopulationSpec::default()).unwrap();
        for t in 0..200 {
            let tpl = &pop.identities()[t % pop.len()][0];
            let q = pop.genuine_query(t % pop.len(), &mut rng).unwrap();
            let stored = obfuscate(tpl, &params, &mut rng).unwrap();
            let ratio = stored.norm() / tpl.norm();
            assert!(ratio >= 0.5 * 0.95 - 1e-6 && ratio <= 2.0 * 1.05 + 1e-6);
            let shift = cosine_similarity(&q[0], &stored).unwrap() - cosine_similarity(&q[0], tpl).unwrap();
            assert!(shift.abs() <= 2.0 * params.noise_delta, "{shift}");
        }
    }

    #[test]
    fn without_obfuscation_stores_inputs() {
        let params = ProtocolParams::for_chaff(2, 4, 2, 16).unwrap().without_obfuscation();
        let pop = Population::sample(PopulationSpec {
            num_identities: 1,
            dim: 16,
            n_channels: 2,
            ..Default::default()
        })
        .unwrap();
        let mut rng = stream_rng(0, 0);
        let (h, trace) = enroll_traced(pop.ground_truth(0).unwrap(), &pop.chaff_source(1), &params, &mut rng).unwrap();
        for (i, v) in h.vaults.iter().enumerate() {
            assert_eq!(&v.entries()[trace.template_positions[i]], &pop.identities()[0][i]);
        }
    }

    #[test]
    fn revocation_refreshes_everything() {
        let pop = small_pop();
        let params = ProtocolParams::for_chaff(5, 40, 4, 64).unwrap();
        let mut rng = stream_rng(5, 0);
        let tpl = pop.ground_truth(1).unwrap();
        let old = enroll(tpl, &pop.chaff_source(10), &params, &mut rng).unwrap();
        let new = revoke_and_reenroll(tpl, &old, &pop.chaff_source(11), &mut rng).unwrap();
        assert_ne!(old.salt, new.salt);
        let old_digests: std::collections::HashSet<_> = old.commitments.iter().map(|c| c.digest).collect();
        assert!(new.commitments.iter().all(|c| !old_digests.contains(&c.digest)));
    }
}
