//! Quantifies the resistance claims of the vault scheme: brute-force work
//! factor, exhaustive attack simulation on small instances, false-accept
//! probability under unrelated queries, chaff distinguishers and cross-channel
//! linkability.

use std::collections::HashMap;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{cosine_similarity, Embedding, TupleHasher};
use crate::error::{MvotError, Result};
use crate::rng::stream_rng;
use crate::sources::{ChannelSet, Population};
use crate::stats::{chi_square_gof, wilson_95};
use crate::vault::{enroll, enroll_traced, verify, HelperData, ProtocolParams};

/// Default ceiling on hash evaluations for [`brute_force_attack`].
pub const DEFAULT_ATTACK_BUDGET: u64 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkFactorReport {
    /// `log2(m^n)`: one commitment over all `n` vaults.
    pub paper_bits: f64,
    /// `log2(C(n,k) · m^k)`: the `k`-of-`n` commitment set.
    pub refined_bits: f64,
    /// `(C(n,k) · m^k + 1) / 2`.
    pub expected_tries: f64,
}

pub fn work_factor(params: &ProtocolParams) -> WorkFactorReport {
    let log_m = (params.m as f64).log2();
    let paper_bits = params.n as f64 * log_m;
    let refined_bits = (params.num_subsets() as f64).log2() + params.k as f64 * log_m;
    WorkFactorReport {
        paper_bits,
        refined_bits,
        expected_tries: (refined_bits.exp2() + 1.0) / 2.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub tries_to_success: u64,
    pub succeeded: bool,
    /// Total candidate tuples: `C(n,k) · (m+1)^k`.
    pub search_space: u64,
    pub wall_time_s: f64,
}

/// Enumerates every candidate tuple (one entry per vault of a `k`-subset)
/// in uniformly random order and hashes each against the commitments until
/// one matches.
///
/// Refuses when the search space exceeds `budget`; at deployment-scale
/// parameters this refusal is the expected outcome.
pub fn brute_force_attack<R: Rng + ?Sized>(helper: &HelperData, budget: u64, rng: &mut R) -> Result<AttackResult> {
    let p = &helper.params;
    let per_vault = (p.m + 1) as u128;
    let subsets = p.num_subsets();
    let space = per_vault
        .checked_pow(p.k as u32)
        .and_then(|x| x.checked_mul(subsets))
        .filter(|&x| x <= u128::from(budget));
    let Some(space) = space else {
        return Err(MvotError::AttackBudget {
            bits: work_factor(p).refined_bits,
            budget_bits: (budget as f64).log2(),
        });
    };
    let space = space as u64;
    let per_subset = space / subsets as u64;

    let start = Instant::now();
    let hasher = TupleHasher::new(&helper.salt);
    let bytes: Vec<Vec<_>> = helper
        .vaults
        .iter()
        .map(|v| v.entries().iter().map(Embedding::canonical_bytes).collect())
        .collect();

    // Sparse Fisher-Yates: a uniformly random permutation of 0..space,
    // materialized only where it has been touched.
    let mut swapped: HashMap<u64, u64> = HashMap::new();
    let mut digits = vec![0usize; p.k];
    for i in 0..space {
        let j = rng.random_range(i..space);
        let at_j = *swapped.get(&j).unwrap_or(&j);
        let at_i = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, at_i);
        swapped.remove(&i);
        let candidate = at_j;

        let commitment = &helper.commitments[(candidate / per_subset) as usize];
        let mut rest = candidate % per_subset;
        for d in digits.iter_mut().rev() {
            *d = (rest % per_vault as u64) as usize;
            rest /= per_vault as u64;
        }
        let parts = commitment
            .subset
            .iter()
            .zip(&digits)
            .map(|(&v, &d)| (v, bytes[v as usize][d].as_bytes()));
        if hasher.digest(parts) == commitment.digest {
            return Ok(AttackResult {
                tries_to_success: i + 1,
                succeeded: true,
                search_space: space,
                wall_time_s: start.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(AttackResult {
        tries_to_success: space,
        succeeded: false,
        search_space: space,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarEstimate {
    pub trials: u64,
    pub accepts: u64,
    pub estimate: f64,
    /// Wilson 95% interval.
    pub ci: (f64, f64),
    /// Union bound `C(n,k) · (tr/(m+1))^k`, capped at 1.
    pub analytic_bound: f64,
    pub tr: usize,
    pub seed: u64,
}

/// Upper bound on the chance that a query unrelated to the enrolled
/// identity is accepted, assuming the template is exchangeable with chaff.
pub fn far_analytic_bound(params: &ProtocolParams, tr: usize) -> f64 {
    let per_vault = tr as f64 / (params.m + 1) as f64;
    (params.num_subsets() as f64 * per_vault.powi(params.k as i32)).min(1.0)
}

/// Monte-Carlo false-accept rate: one enrollment of identity 0, then
/// `trials` unrelated faces verified against it at `params.tr`.
pub fn far_attack_probability(
    params: &ProtocolParams,
    population: &Population,
    trials: u64,
    seed: u64,
) -> Result<FarEstimate> {
    if trials == 0 {
        return Err(MvotError::InvalidParams("trials must be at least 1".into()));
    }
    check_population(params, population)?;
    let mut rng = stream_rng(seed, 0);
    let helper = enroll(population.ground_truth(0)?, &population.chaff_source(rng.random()), params, &mut rng)?;
    let accepts = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<u64> {
            let mut rng = stream_rng(seed, t + 1);
            let q = population.unrelated_face(&mut rng)?;
            Ok(u64::from(verify(&helper, &q, params.tr)?.accepted()))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(FarEstimate {
        trials,
        accepts,
        estimate: accepts as f64 / trials as f64,
        ci: wilson_95(accepts, trials),
        analytic_bound: far_analytic_bound(params, params.tr),
        tr: params.tr,
        seed,
    })
}

fn check_population(params: &ProtocolParams, population: &Population) -> Result<()> {
    let spec = population.spec();
    if spec.dim != params.dim {
        return Err(MvotError::DimensionMismatch {
            expected: params.dim,
            got: spec.dim,
        });
    }
    if spec.n_channels != params.n {
        return Err(MvotError::ChannelMismatch {
            expected: params.n,
            got: spec.n_channels,
        });
    }
    Ok(())
}

/// One vault with the (analysis-only) knowledge of where the template is.
#[derive(Clone, Debug)]
pub struct RankTrial {
    pub entries: Vec<Embedding>,
    pub template_index: usize,
}

/// Builds a rank trial by enrolling identity `trial % len` and returning
/// vault 0. `template_scale` multiplies the template before enrollment;
/// anything other than 1 plants a norm defect.
pub fn synthetic_rank_trial(
    population: &Population,
    params: &ProtocolParams,
    seed: u64,
    trial: u64,
    template_scale: f64,
) -> Result<RankTrial> {
    check_population(params, population)?;
    let mut rng = stream_rng(seed, trial);
    let id = (trial as usize) % population.len();
    let truth = population.ground_truth(id)?;
    let template = if template_scale == 1.0 {
        truth.clone()
    } else {
        ChannelSet::new(
            truth
                .channels()
                .iter()
                .map(|c| c.scaled(template_scale))
                .collect::<Result<Vec<_>>>()?,
        )?
    };
    let (helper, trace) = enroll_traced(&template, &population.chaff_source(rng.random()), params, &mut rng)?;
    Ok(RankTrial {
        entries: helper.vaults[0].entries().to_vec(),
        template_index: trace.template_positions[0],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankTestReport {
    pub trials: usize,
    pub bins: usize,
    pub norm_counts: Vec<u64>,
    pub mean_cos_counts: Vec<u64>,
    pub p_norm: f64,
    pub p_mean_cos: f64,
    /// Bonferroni-combined: `min(1, 2 · min(p_norm, p_mean_cos))`.
    pub p_value: f64,
}

/// Ranks the true template among its vault's entries under two
/// distinguisher statistics (norm, mean cosine to the other entries) and
/// tests the ranks for uniformity with a chi-square over deciles.
pub fn chaff_rank_test<F>(mut enroll_fn: F, trials: usize, seed: u64) -> Result<RankTestReport>
where
    F: FnMut(u64) -> Result<RankTrial>,
{
    if trials < 100 {
        return Err(MvotError::InvalidParams(format!("rank test needs >= 100 trials, got {trials}")));
    }
    let mut tie_rng = stream_rng(seed, u64::MAX);
    let mut norm_ranks = Vec::with_capacity(trials);
    let mut cos_ranks = Vec::with_capacity(trials);
    let mut size = None;
    for t in 0..trials {
        let trial = enroll_fn(t as u64)?;
        let len = trial.entries.len();
        if len < 2 {
            return Err(MvotError::Analysis("rank undefined: vault holds no chaff".into()));
        }
        if trial.template_index >= len {
            return Err(MvotError::Analysis(format!(
                "template index {} outside vault of {len}",
                trial.template_index
            )));
        }
        if *size.get_or_insert(len) != len {
            return Err(MvotError::Analysis("vault size changed between trials".into()));
        }
        let norms: Vec<f64> = trial.entries.iter().map(Embedding::norm).collect();
        let mean_cos = mean_cosine_to_others(&trial.entries);
        norm_ranks.push(rank_of(&norms, trial.template_index, &mut tie_rng));
        cos_ranks.push(rank_of(&mean_cos, trial.template_index, &mut tie_rng));
    }
    let entries = size.unwrap();
    let bins = entries.min(10);
    let bin_of = |rank: usize| rank * bins / entries;
    let mut probs = vec![0.0; bins];
    for r in 0..entries {
        probs[bin_of(r)] += 1.0 / entries as f64;
    }
    let histogram = |ranks: &[usize]| {
        let mut c = vec![0u64; bins];
        for &r in ranks {
            c[bin_of(r)] += 1;
        }
        c
    };
    let norm_counts = histogram(&norm_ranks);
    let mean_cos_counts = histogram(&cos_ranks);
    let (_, p_norm) = chi_square_gof(&norm_counts, &probs);
    let (_, p_mean_cos) = chi_square_gof(&mean_cos_counts, &probs);
    Ok(RankTestReport {
        trials,
        bins,
        norm_counts,
        mean_cos_counts,
        p_norm,
        p_mean_cos,
        p_value: (2.0 * p_norm.min(p_mean_cos)).min(1.0),
    })
}

/// Descending rank of `values[index]`, ties broken uniformly at random.
fn rank_of<R: Rng + ?Sized>(values: &[f64], index: usize, rng: &mut R) -> usize {
    let v = values[index];
    let greater = values.iter().filter(|&&x| x > v).count();
    let ties = values.iter().filter(|&&x| x == v).count() - 1;
    greater + rng.random_range(0..=ties)
}

/// Mean cosine of each entry to every other entry, via the sum of unit
/// vectors.
fn mean_cosine_to_others(entries: &[Embedding]) -> Vec<f64> {
    let dim = entries[0].dim();
    let units: Vec<Vec<f64>> = entries
        .iter()
        .map(|e| {
            let n = e.norm();
            e.as_slice().iter().map(|&x| f64::from(x) / n).collect()
        })
        .collect();
    let mut sum = vec![0.0; dim];
    for u in &units {
        sum.iter_mut().zip(u).for_each(|(s, x)| *s += x);
    }
    let others = (entries.len() - 1) as f64;
    units
        .iter()
        .map(|u| {
            let dot: f64 = u.iter().zip(&sum).map(|(a, b)| a * b).sum();
            (dot - 1.0) / others
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkabilityReport {
    pub trials: u64,
    pub correct: u64,
    /// `|2·P(correct) − 1|`, in `[0, 1]`.
    pub epsilon: f64,
    pub seed: u64,
}

/// Advantage of a cosine linker: shown channel 0 of an identity and two
/// channel-1 vectors (same identity, unrelated face) in random order, it
/// picks the one more similar to the channel-0 vector.
pub fn linkability_advantage(population: &Population, trials: u64, seed: u64) -> Result<LinkabilityReport> {
    if population.spec().n_channels < 2 {
        return Err(MvotError::InvalidParams("linkability needs at least 2 channels".into()));
    }
    if trials == 0 {
        return Err(MvotError::InvalidParams("trials must be at least 1".into()));
    }
    let correct = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<u64> {
            let mut rng = stream_rng(seed, t);
            let id = rng.random_range(0..population.len());
            let own = population.ground_truth(id)?;
            let other = population.unrelated_face(&mut rng)?;
            let s_true = cosine_similarity(&own[0], &own[1])?;
            let s_false = cosine_similarity(&own[0], &other[1])?;
            let pick_true = if s_true == s_false { rng.random_bool(0.5) } else { s_true > s_false };
            Ok(u64::from(pick_true))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(LinkabilityReport {
        trials,
        correct,
        epsilon: (2.0 * correct as f64 / trials as f64 - 1.0).abs(),
        seed,
    })
}

/// JSON record for the benchmark aggregator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityRecord {
    pub operation: String,
    pub params: serde_json::Value,
    pub estimates: serde_json::Value,
    pub ci: Option<(f64, f64)>,
    pub seed: Option<u64>,
}

impl SecurityRecord {
    pub fn new<P: Serialize, E: Serialize>(
        operation: &str,
        params: &P,
        estimates: &E,
        ci: Option<(f64, f64)>,
        seed: Option<u64>,
    ) -> Result<Self> {
        Ok(Self {
            operation: operation.to_string(),
            params: serde_json::to_value(params)?,
            estimates: serde_json::to_value(estimates)?,
            ci,
            seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::{ChannelCoupling, PopulationSpec};

    #[test]
    fn work_factor_examples() {
        let p = ProtocolParams::default();
        let wf = work_factor(&p);
        assert!((wf.paper_bits - 54.83).abs() < 0.05);
        assert_eq!(wf.paper_bits, wf.refined_bits);
        assert!((wf.paper_bits.exp2() / 2000f64.powi(5) - 1.0).abs() < 1e-9);

        let tiny = ProtocolParams::keygen(1, 1, 1, 2, Some(2)).unwrap();
        assert_eq!(work_factor(&tiny).paper_bits, 1.0);

        let k4 = ProtocolParams { k: 4, gamma: 43, ..ProtocolParams::default() };
        let wf4 = work_factor(&k4);
        let oracle = (5.0 * 2000f64.powi(4)).log2();
        assert!((wf4.refined_bits - oracle).abs() < 1e-12);
        assert!((wf4.refined_bits - 46.19).abs() < 0.01);
        assert!(wf4.refined_bits <= wf4.paper_bits);
    }

    #[test]
    fn attack_refuses_at_default_scale() {
        let pop = Population::sample(PopulationSpec {
            num_identities: 1,
            ..Default::default()
        })
        .unwrap();
        let mut rng = stream_rng(0, 0);
        let h = enroll(pop.ground_truth(0).unwrap(), &pop.chaff_source(0), &ProtocolParams::default(), &mut rng)
            .unwrap();
        let err = brute_force_attack(&h, DEFAULT_ATTACK_BUDGET, &mut rng).unwrap_err();
        assert!(err.to_string().contains("54.8 bits"), "{err}");
    }

    fn tiny_helper(seed: u64) -> HelperData {
        let pop = Population::sample(PopulationSpec {
            num_identities: 1,
            dim: 8,
            n_channels: 2,
            rng_seed: seed,
            ..Default::default()
        })
        .unwrap();
        let params = ProtocolParams::for_chaff(2, 3, 2, 8).unwrap();
        let mut rng = stream_rng(seed, 1);
        enroll(pop.ground_truth(0).unwrap(), &pop.chaff_source(seed), &params, &mut rng).unwrap()
    }

    #[test]
    fn attack_always_succeeds_within_space() {
        for seed in 0..50 {
            let h = tiny_helper(seed);
            let r = brute_force_attack(&h, DEFAULT_ATTACK_BUDGET, &mut stream_rng(seed, 2)).unwrap();
            assert!(r.succeeded);
            assert_eq!(r.search_space, 16);
            assert!((1..=16).contains(&r.tries_to_success));
        }
    }

    #[test]
    fn far_degenerate_threshold_accepts_everything() {
        let pop = Population::sample(PopulationSpec {
            num_identities: 2,
            dim: 16,
            ..Default::default()
        })
        .unwrap();
        let params = ProtocolParams::for_chaff(5, 20, 1, 16).unwrap().with_tr(21).unwrap();
        let est = far_attack_probability(&params, &pop, 50, 3).unwrap();
        assert_eq!(est.accepts, 50);
        assert_eq!(est.analytic_bound, 1.0);
    }

    #[test]
    fn far_analytic_values() {
        let p = ProtocolParams::default().with_tr(1).unwrap();
        assert!((far_analytic_bound(&p, 1) - (1.0f64 / 2001.0).powi(5)).abs() < 1e-25);
        assert!((far_analytic_bound(&p, 1) - 3.1e-17).abs() < 0.05e-17);
        let k4 = ProtocolParams { k: 4, gamma: 43, ..ProtocolParams::default() };
        assert!((far_analytic_bound(&k4, 3) - 2.5e-11).abs() < 0.05e-11);
    }

    #[test]
    fn rank_test_rejects_single_entry_vault() {
        let one = Embedding::new(vec![1.0, 0.0]).unwrap();
        let err = chaff_rank_test(
            |_| {
                Ok(RankTrial {
                    entries: vec![one.clone()],
                    template_index: 0,
                })
            },
            100,
            0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("rank undefined"));
    }

    #[test]
    fn mean_cosine_matches_pairwise() {
        let chaff = crate::sources::ChaffSource::synthetic(16, 1).generate(12).unwrap();
        let fast = mean_cosine_to_others(&chaff);
        for (i, f) in fast.iter().enumerate() {
            let slow: f64 = (0..chaff.len())
                .filter(|&j| j != i)
                .map(|j| cosine_similarity(&chaff[i], &chaff[j]).unwrap())
                .sum::<f64>()
                / 11.0;
            assert!((f - slow).abs() < 1e-6);
        }
    }

    #[test]
    fn linkability_extremes() {
        let base = PopulationSpec {
            num_identities: 2000,
            dim: 128,
            ..Default::default()
        };
        let indep = Population::sample(base.clone()).unwrap();
        assert!(linkability_advantage(&indep, 10_000, 1).unwrap().epsilon <= 0.05);
        let cloned = Population::sample(PopulationSpec {
            coupling: ChannelCoupling::Cloned,
            ..base
        })
        .unwrap();
        assert!(linkability_advantage(&cloned, 2_000, 1).unwrap().epsilon >= 0.9);
    }
}
