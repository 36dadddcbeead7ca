use serde::{Deserialize, Serialize};

use super::HelperData;
use crate::embedding::{cosine_with_norms, CanonicalBytes, TupleHasher};
use crate::error::{MvotError, Result};
use crate::sources::ChannelSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum Decision {
    Accept { subset: Vec<u32> },
    Reject,
}

impl Decision {
    pub fn is_accept(&self) -> bool {
        matches!(self, Decision::Accept { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub tr: usize,
    /// Highest similarity in each vault.
    pub best_scores: Vec<f64>,
    /// Retrieved entry indices per vault, most similar first.
    pub candidates: Vec<Vec<u32>>,
    /// On accept: rank within `candidates` of the matching entry, one per
    /// vault of the accepted subset.
    pub matched_ranks: Option<Vec<u32>>,
    pub hash_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    #[serde(flatten)]
    pub decision: Decision,
    pub diagnostics: Diagnostics,
}

impl Verification {
    pub fn accepted(&self) -> bool {
        self.decision.is_accept()
    }
}

/// A query's similarity ranking against every vault, retained up to some
/// maximum threshold. Deciding at any `tr` up to that maximum reuses it.
pub struct RankedQuery<'a> {
    helper: &'a HelperData,
    max_tr: usize,
    /// Per vault: (entry index, score), best first, ties by ascending index.
    ranked: Vec<Vec<(u32, f64)>>,
    bytes: Vec<Vec<CanonicalBytes>>,
}

/// Scores every stored entry against the matching query channel and keeps
/// the top `max_tr` per vault.
pub fn rank_query<'a>(helper: &'a HelperData, query: &ChannelSet, max_tr: usize) -> Result<RankedQuery<'a>> {
    let p = &helper.params;
    if query.len() != p.n {
        return Err(MvotError::ChannelMismatch {
            expected: p.n,
            got: query.len(),
        });
    }
    if query.dim() != p.dim {
        return Err(MvotError::DimensionMismatch {
            expected: p.dim,
            got: query.dim(),
        });
    }
    p.check_tr(max_tr)?;

    let mut ranked = Vec::with_capacity(p.n);
    let mut bytes = Vec::with_capacity(p.n);
    for (vault, q) in helper.vaults.iter().zip(query.channels()) {
        let qn = q.norm();
        let mut scores: Vec<(u32, f64)> = vault
            .entries()
            .iter()
            .zip(vault.norms())
            .enumerate()
            .map(|(i, (e, &en))| (i as u32, cosine_with_norms(q.as_slice(), qn, e.as_slice(), en)))
            .collect();
        let by_rank = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
        if max_tr < scores.len() {
            scores.select_nth_unstable_by(max_tr - 1, by_rank);
            scores.truncate(max_tr);
        }
        scores.sort_unstable_by(by_rank);
        bytes.push(
            scores
                .iter()
                .map(|&(i, _)| vault.entries()[i as usize].canonical_bytes())
                .collect(),
        );
        ranked.push(scores);
    }
    Ok(RankedQuery {
        helper,
        max_tr,
        ranked,
        bytes,
    })
}

impl RankedQuery<'_> {
    pub fn max_tr(&self) -> usize {
        self.max_tr
    }

    /// Hashes every combination of the top-`tr` candidates, subset by
    /// subset, and stops at the first commitment match.
    pub fn decide(&self, tr: usize) -> Result<Verification> {
        if tr == 0 || tr > self.max_tr {
            return Err(MvotError::ThresholdOutOfRange { tr, max: self.max_tr });
        }
        let hasher = TupleHasher::new(&self.helper.salt);
        let mut hash_count = 0u64;
        let mut outcome = None;
        'subsets: for c in &self.helper.commitments {
            let lists: Vec<usize> = c.subset.iter().map(|&i| self.ranked[i as usize].len().min(tr)).collect();
            let mut digits = vec![0usize; c.subset.len()];
            loop {
                let parts = c
                    .subset
                    .iter()
                    .zip(&digits)
                    .map(|(&v, &d)| (v, self.bytes[v as usize][d].as_bytes()));
                hash_count += 1;
                if hasher.digest(parts) == c.digest {
                    outcome = Some((c.subset.clone(), digits.iter().map(|&d| d as u32).collect()));
                    break 'subsets;
                }
                // Odometer increment, last position fastest.
                let mut pos = digits.len();
                loop {
                    if pos == 0 {
                        continue 'subsets;
                    }
                    pos -= 1;
                    digits[pos] += 1;
                    if digits[pos] < lists[pos] {
                        break;
                    }
                    digits[pos] = 0;
                }
            }
        }

        let (decision, matched_ranks) = match outcome {
            Some((subset, ranks)) => (Decision::Accept { subset }, Some(ranks)),
            None => (Decision::Reject, None),
        };
        Ok(Verification {
            decision,
            diagnostics: Diagnostics {
                tr,
                best_scores: self.ranked.iter().map(|r| r[0].1).collect(),
                candidates: self
                    .ranked
                    .iter()
                    .map(|r| r.iter().take(tr).map(|&(i, _)| i).collect())
                    .collect(),
                matched_ranks,
                hash_count,
            },
        })
    }
}

pub fn verify(helper: &HelperData, query: &ChannelSet, tr: usize) -> Result<Verification> {
    rank_query(helper, query, tr)?.decide(tr)
}

/// Decisions for several thresholds from a single similarity scan.
pub fn verify_sweep(helper: &HelperData, query: &ChannelSet, trs: &[usize]) -> Result<Vec<Verification>> {
    let max_tr = trs.iter().copied().max().ok_or_else(|| MvotError::InvalidParams("empty tr sweep".into()))?;
    for &tr in trs {
        helper.params.check_tr(tr)?;
    }
    let ranked = rank_query(helper, query, max_tr)?;
    trs.iter().map(|&tr| ranked.decide(tr)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::sources::{Population, PopulationSpec};
    use crate::vault::{enroll, enroll_traced, ProtocolParams};

    fn setup(m: usize, k: usize, dim: usize) -> (Population, ProtocolParams) {
        let pop = Population::sample(PopulationSpec {
            num_identities: 8,
            dim,
            ..Default::default()
        })
        .unwrap();
        (pop, ProtocolParams::for_chaff(5, m, k, dim).unwrap())
    }

    #[test]
    fn enrolled_template_is_accepted_at_tr1() {
        let (pop, params) = setup(2000, 5, 512);
        let mut rng = stream_rng(0, 0);
        let tpl = pop.ground_truth(2).unwrap();
        let h = enroll(tpl, &pop.chaff_source(1), &params, &mut rng).unwrap();
        let v = verify(&h, tpl, 1).unwrap();
        assert_eq!(v.decision, Decision::Accept { subset: vec![0, 1, 2, 3, 4] });
        assert_eq!(v.diagnostics.hash_count, 1);
        assert_eq!(v.diagnostics.matched_ranks, Some(vec![0; 5]));
    }

    #[test]
    fn rejecting_query_hashes_full_product() {
        let (pop, params) = setup(200, 5, 128);
        let mut rng = stream_rng(1, 0);
        let h = enroll(pop.ground_truth(0).unwrap(), &pop.chaff_source(2), &params, &mut rng).unwrap();
        let stranger = pop.unrelated_face(&mut rng).unwrap();
        let v = verify(&h, &stranger, 2).unwrap();
        assert_eq!(v.decision, Decision::Reject);
        assert_eq!(v.diagnostics.hash_count, 32);

        let (pop4, p4) = setup(200, 4, 128);
        let h4 = enroll(pop4.ground_truth(0).unwrap(), &pop4.chaff_source(2), &p4, &mut rng).unwrap();
        let v = verify(&h4, &stranger, 3).unwrap();
        assert_eq!(v.diagnostics.hash_count, 5 * 81);
    }

    #[test]
    fn k_of_n_accepts_with_one_bad_channel() {
        let (pop, params) = setup(300, 4, 128);
        let mut rng = stream_rng(3, 0);
        let tpl = pop.ground_truth(1).unwrap();
        let h = enroll(tpl, &pop.chaff_source(4), &params, &mut rng).unwrap();
        let stranger = pop.unrelated_face(&mut rng).unwrap();
        let mut channels = tpl.channels().to_vec();
        channels[2] = stranger[2].clone();
        let q = ChannelSet::new(channels).unwrap();
        let v = verify(&h, &q, 1).unwrap();
        assert_eq!(v.decision, Decision::Accept { subset: vec![0, 1, 3, 4] });
    }

    #[test]
    fn genuine_query_beating_chaff_is_accepted() {
        let (pop, params) = setup(2000, 5, 512);
        let mut rng = stream_rng(4, 0);
        let h = enroll(pop.ground_truth(3).unwrap(), &pop.chaff_source(5), &params, &mut rng).unwrap();
        let q = pop.genuine_query(3, &mut rng).unwrap();
        let v = verify(&h, &q, 1).unwrap();
        // Genuine scores sit in [0.8, 1]; chaff at dim 512 stays far below.
        assert!(v.diagnostics.best_scores.iter().all(|&s| s > 0.7));
        assert!(v.accepted());
    }

    #[test]
    fn ties_break_by_ascending_index() {
        let (pop, params) = setup(20, 2, 16);
        let params = ProtocolParams { n: 5, ..params }.without_obfuscation();
        let mut rng = stream_rng(6, 0);
        let tpl = pop.ground_truth(0).unwrap();
        // Chaff identical to the template in every vault.
        let chaff: Vec<_> = (0..5).flat_map(|i| vec![tpl[i].clone(); 20]).collect();
        let (h, _) = crate::vault::enroll_with_chaff(tpl, &chaff, &params, &mut rng).unwrap();
        let v = verify(&h, tpl, 1).unwrap();
        assert!(v.diagnostics.candidates.iter().all(|c| c == &vec![0]));
        // All entries are byte-identical, so entry 0 matches whatever the position.
        assert!(v.accepted());
    }

    #[test]
    fn argument_errors() {
        let (pop, params) = setup(50, 5, 32);
        let mut rng = stream_rng(7, 0);
        let (h, _) = enroll_traced(pop.ground_truth(0).unwrap(), &pop.chaff_source(0), &params, &mut rng).unwrap();
        let q = pop.ground_truth(0).unwrap();
        assert!(matches!(verify(&h, q, 0), Err(MvotError::ThresholdOutOfRange { .. })));
        assert!(matches!(verify(&h, q, 52), Err(MvotError::ThresholdOutOfRange { .. })));
        assert!(matches!(verify(&h, q, 30), Err(MvotError::CombinationBudget { .. })));
        let short = ChannelSet::new(q.channels()[..4].to_vec()).unwrap();
        assert!(matches!(verify(&h, &short, 1), Err(MvotError::ChannelMismatch { .. })));
        let other_dim = Population::sample(PopulationSpec { num_identities: 1, dim: 16, ..Default::default() }).unwrap();
        assert!(matches!(
            verify(&h, other_dim.ground_truth(0).unwrap(), 1),
            Err(MvotError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sweep_matches_individual_calls() {
        let (pop, params) = setup(100, 4, 32);
        let mut rng = stream_rng(8, 0);
        let h = enroll(pop.ground_truth(0).unwrap(), &pop.chaff_source(0), &params, &mut rng).unwrap();
        for _ in 0..20 {
            let q = pop.cohort_query(0, &mut rng).unwrap();
            let sweep = verify_sweep(&h, &q, &[1, 2, 3, 5]).unwrap();
            for v in &sweep {
                assert_eq!(v, &verify(&h, &q, v.diagnostics.tr).unwrap());
            }
        }
    }
}
