//! End-to-end benchmark harness.
//!
//! The ROC sweeps the retrieval threshold `tr` rather than a cosine cutoff:
//! each `tr` yields one (FPR, TPR) point for the whole enroll/verify
//! pipeline. Genuine and imposter queries are shared across every
//! configuration of a run, and enrollments reuse the same random streams, so
//! configurations are compared on paired samples.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::cosine_similarity;
use crate::error::{MvotError, Result};
use crate::rng::stream_rng;
use crate::sources::{ChannelSet, Population, PopulationSpec};
use crate::stats::{mean, percentile};
use crate::vault::{enroll, rank_query, verify, HelperData, ProtocolParams};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const MIN_TRIALS: u64 = 100;
pub const HISTOGRAM_BIN_WIDTH: f64 = 0.05;

// Stream offsets keep enrollment, genuine and imposter draws independent.
const ENROLL_STREAM: u64 = 1 << 40;
const GENUINE_STREAM: u64 = 2 << 40;
const IMPOSTER_STREAM: u64 = 3 << 40;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImposterKind {
    /// Genuine capture of a different population identity.
    #[default]
    OtherIdentity,
    /// Cohort capture whose cosine to the claimed identity follows
    /// `imposter_cos`.
    Cohort,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub population: PopulationSpec,
    pub params_grid: Vec<ProtocolParams>,
    pub tr_sweep: Vec<usize>,
    /// Threshold at which the TPR/TNR table is reported.
    pub table_tr: usize,
    pub genuine_trials: u64,
    pub imposter_trials: u64,
    /// Number of enrolled identities; trials cycle through them.
    pub enrollments: usize,
    #[serde(default)]
    pub imposter_kind: ImposterKind,
    pub rng_seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let base = ProtocolParams::default();
        Self {
            population: PopulationSpec::default(),
            params_grid: vec![
                base.clone(),
                ProtocolParams { m: 4000, ..base.clone() },
                ProtocolParams {
                    m: 4000,
                    k: 4,
                    gamma: 47,
                    ..base
                },
            ],
            tr_sweep: vec![1, 2, 3, 4, 5],
            table_tr: 3,
            genuine_trials: 200,
            imposter_trials: 1000,
            enrollments: 10,
            imposter_kind: ImposterKind::OtherIdentity,
            rng_seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        self.population.validate()?;
        if self.params_grid.is_empty() {
            return Err(MvotError::InvalidParams("params grid is empty".into()));
        }
        if self.tr_sweep.is_empty() {
            return Err(MvotError::InvalidParams("tr sweep is empty".into()));
        }
        if self.genuine_trials < MIN_TRIALS || self.imposter_trials < MIN_TRIALS {
            return Err(MvotError::InvalidParams(format!(
                "need at least {MIN_TRIALS} genuine and imposter trials, got {} and {}",
                self.genuine_trials, self.imposter_trials
            )));
        }
        if self.enrollments == 0 {
            return Err(MvotError::InvalidParams("enrollments must be positive".into()));
        }
        for p in &self.params_grid {
            p.validate()?;
            if p.dim != self.population.dim || p.n != self.population.n_channels {
                return Err(MvotError::InvalidParams(format!(
                    "params (n={}, dim={}) do not match population (n={}, dim={})",
                    p.n, p.dim, self.population.n_channels, self.population.dim
                )));
            }
            for &tr in self.tr_sweep.iter().chain([&self.table_tr]) {
                p.check_tr(tr)?;
            }
        }
        Ok(())
    }

    fn thresholds(&self) -> Vec<usize> {
        let mut trs = self.tr_sweep.clone();
        trs.push(self.table_tr);
        trs.sort_unstable();
        trs.dedup();
        trs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub tr: usize,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub simulate_s: f64,
    pub match_s: f64,
    pub hash_s: f64,
    pub total_s: f64,
}

impl PhaseTimes {
    fn add(mut self, o: PhaseTimes) -> Self {
        self.simulate_s += o.simulate_s;
        self.match_s += o.match_s;
        self.hash_s += o.hash_s;
        self.total_s += o.total_s;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigReport {
    pub params: ProtocolParams,
    pub table_tr: usize,
    pub tpr: f64,
    pub tnr: f64,
    pub fpr: f64,
    pub genuine_accepts: u64,
    pub imposter_accepts: u64,
    /// One point per swept `tr`, ascending `tr`.
    pub roc: Vec<RocPoint>,
    pub auc: f64,
    pub genuine_trials: u64,
    pub imposter_trials: u64,
    pub seed: u64,
    /// Summed per-trial phase times.
    pub timing: PhaseTimes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub seed: u64,
    pub population: PopulationSpec,
    pub imposter_kind: ImposterKind,
    pub configs: Vec<ConfigReport>,
}

impl BenchReport {
    /// Copy with every timing field zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for c in &mut r.configs {
            c.timing = PhaseTimes::default();
        }
        r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub tr: usize,
    pub tpr: f64,
    pub tnr: f64,
    pub genuine_trials: u64,
    pub imposter_trials: u64,
    pub seed: u64,
}

/// Trapezoidal area under the ROC through `(0,0)`, the points sorted by
/// FPR, and `(1,1)`.
pub fn roc_auc(points: &[RocPoint]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.fpr, p.tpr)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.insert(0, (0.0, 0.0));
    pts.push((1.0, 1.0));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Runs every configuration of the grid over the whole `tr` sweep.
pub fn run_roc(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let population = Population::sample(config.population.clone())?;
    let configs = config
        .params_grid
        .iter()
        .map(|p| run_config(config, &population, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchReport {
        schema_version: REPORT_SCHEMA_VERSION,
        seed: config.rng_seed,
        population: config.population.clone(),
        imposter_kind: config.imposter_kind,
        configs,
    })
}

/// TPR/TNR rows at `table_tr`, one per configuration.
pub fn run_table(config: &BenchConfig) -> Result<(BenchReport, Vec<TableRow>)> {
    let report = run_roc(config)?;
    let rows = table_rows(&report);
    Ok((report, rows))
}

pub fn table_rows(report: &BenchReport) -> Vec<TableRow> {
    report
        .configs
        .iter()
        .map(|c| TableRow {
            m: c.params.m,
            n: c.params.n,
            k: c.params.k,
            tr: c.table_tr,
            tpr: c.tpr,
            tnr: c.tnr,
            genuine_trials: c.genuine_trials,
            imposter_trials: c.imposter_trials,
            seed: c.seed,
        })
        .collect()
}

struct TrialOutcome {
    accepts: Vec<bool>,
    times: PhaseTimes,
}

fn run_config(config: &BenchConfig, population: &Population, params: &ProtocolParams) -> Result<ConfigReport> {
    let seed = config.rng_seed;
    let helpers = (0..config.enrollments)
        .into_par_iter()
        .map(|e| {
            let mut rng = stream_rng(seed, ENROLL_STREAM + e as u64);
            let id = e % population.len();
            let chaff = population.chaff_source(rng.random());
            enroll(population.ground_truth(id)?, &chaff, params, &mut rng).map(|h| (id, h))
        })
        .collect::<Result<Vec<(usize, HelperData)>>>()?;

    let trs = config.thresholds();
    let run = |stream: u64, trials: u64, genuine: bool| -> Result<Vec<TrialOutcome>> {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let (id, helper) = &helpers[t as usize % helpers.len()];
                let mut rng = stream_rng(seed, stream + t);
                let start = Instant::now();
                let query = if genuine {
                    population.genuine_query(*id, &mut rng)?
                } else {
                    match config.imposter_kind {
                        ImposterKind::OtherIdentity => population.imposter_query(*id, &mut rng)?,
                        ImposterKind::Cohort => population.cohort_query(*id, &mut rng)?,
                    }
                };
                let simulated = Instant::now();
                let (accepts, match_t, hash_t) = sweep_timed(helper, &query, &trs)?;
                Ok(TrialOutcome {
                    accepts,
                    times: PhaseTimes {
                        simulate_s: (simulated - start).as_secs_f64(),
                        match_s: match_t.as_secs_f64(),
                        hash_s: hash_t.as_secs_f64(),
                        total_s: start.elapsed().as_secs_f64(),
                    },
                })
            })
            .collect()
    };
    let genuine = run(GENUINE_STREAM, config.genuine_trials, true)?;
    let imposter = run(IMPOSTER_STREAM, config.imposter_trials, false)?;

    let count = |outcomes: &[TrialOutcome], i: usize| outcomes.iter().filter(|o| o.accepts[i]).count() as u64;
    let idx = |tr: usize| trs.binary_search(&tr).expect("threshold present");
    let g_n = config.genuine_trials as f64;
    let i_n = config.imposter_trials as f64;
    let roc: Vec<RocPoint> = config
        .tr_sweep
        .iter()
        .map(|&tr| RocPoint {
            tr,
            fpr: count(&imposter, idx(tr)) as f64 / i_n,
            tpr: count(&genuine, idx(tr)) as f64 / g_n,
        })
        .collect();
    let mut roc_sorted = roc.clone();
    roc_sorted.sort_by_key(|p| p.tr);
    let genuine_accepts = count(&genuine, idx(config.table_tr));
    let imposter_accepts = count(&imposter, idx(config.table_tr));
    let timing = genuine
        .iter()
        .chain(&imposter)
        .fold(PhaseTimes::default(), |acc, o| acc.add(o.times));
    Ok(ConfigReport {
        params: params.clone(),
        table_tr: config.table_tr,
        tpr: genuine_accepts as f64 / g_n,
        tnr: 1.0 - imposter_accepts as f64 / i_n,
        fpr: imposter_accepts as f64 / i_n,
        genuine_accepts,
        imposter_accepts,
        auc: roc_auc(&roc_sorted),
        roc: roc_sorted,
        genuine_trials: config.genuine_trials,
        imposter_trials: config.imposter_trials,
        seed,
        timing,
    })
}

fn sweep_timed(helper: &HelperData, query: &ChannelSet, trs: &[usize]) -> Result<(Vec<bool>, Duration, Duration)> {
    let max_tr = *trs.last().expect("non-empty");
    let t0 = Instant::now();
    let ranked = rank_query(helper, query, max_tr)?;
    let t1 = Instant::now();
    let accepts = trs
        .iter()
        .map(|&tr| ranked.decide(tr).map(|v| v.accepted()))
        .collect::<Result<Vec<_>>>()?;
    Ok((accepts, t1 - t0, t1.elapsed()))
}

/// Counts over `[-1, 1]` in fixed-width bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(bin_width: f64) -> Self {
        let bins = (2.0 / bin_width).round() as usize;
        Self {
            lo: -1.0,
            bin_width,
            counts: vec![0; bins],
        }
    }

    pub fn add(&mut self, x: f64) {
        let i = ((x - self.lo) / self.bin_width).floor();
        let i = (i.max(0.0) as usize).min(self.counts.len() - 1);
        self.counts[i] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let lo = self.lo + i as f64 * self.bin_width;
        (lo, lo + self.bin_width)
    }

    /// Fraction of samples in bins lying entirely within `[lo, hi]`.
    pub fn mass_within(&self, lo: f64, hi: f64) -> f64 {
        let eps = 1e-9;
        let inside: u64 = self
            .counts
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let (a, b) = self.bin_edges(*i);
                a >= lo - eps && b <= hi + eps
            })
            .map(|(_, c)| c)
            .sum();
        inside as f64 / self.total().max(1) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let (a, b) = self.bin_edges(i);
            writeln!(out, "{a:.2},{b:.2},{c}").unwrap();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreHistograms {
    pub samples: usize,
    pub seed: u64,
    pub genuine: Histogram,
    pub imposter: Histogram,
    pub chaff: Histogram,
}

/// Cosine score distributions: genuine capture vs. ground truth, cohort
/// capture vs. ground truth, and synthetic chaff vs. ground truth.
pub fn score_histograms(population: &Population, samples: usize, seed: u64) -> Result<ScoreHistograms> {
    if samples < 1000 {
        return Err(MvotError::InvalidParams(format!("need at least 1000 samples, got {samples}")));
    }
    let mut rng = stream_rng(seed, 0);
    let channels = population.spec().n_channels;
    let chaff = population.chaff_source(rng.random()).generate(samples)?;
    let mut h = ScoreHistograms {
        samples,
        seed,
        genuine: Histogram::new(HISTOGRAM_BIN_WIDTH),
        imposter: Histogram::new(HISTOGRAM_BIN_WIDTH),
        chaff: Histogram::new(HISTOGRAM_BIN_WIDTH),
    };
    for chaff_vec in &chaff {
        let id = rng.random_range(0..population.len());
        let c = rng.random_range(0..channels);
        let truth = &population.ground_truth(id)?[c];
        let g = population.genuine_query(id, &mut rng)?;
        let i = population.cohort_query(id, &mut rng)?;
        h.genuine.add(cosine_similarity(&g[c], truth)?);
        h.imposter.add(cosine_similarity(&i[c], truth)?);
        h.chaff.add(cosine_similarity(chaff_vec, truth)?);
    }
    Ok(h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub mean_s: f64,
    pub p95_s: f64,
    pub min_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub params: ProtocolParams,
    pub repetitions: usize,
    /// `simulate`, `match`, `hash`, `verify`.
    pub phases: Vec<PhaseTiming>,
}

impl TimingReport {
    pub fn phase(&self, name: &str) -> Option<&PhaseTiming> {
        self.phases.iter().find(|p| p.phase == name)
    }
}

/// Sequential wall-clock timing of the verification phases:
/// - `simulate`: producing an `n`-channel genuine query
/// - `match`: `(m+1)·n` cosine similarities plus top-`tr` selection
/// - `hash`: full enumeration of `C(n,k)·tr^k` tuples on a rejecting query
/// - `verify`: end-to-end verification of a genuine query
pub fn timing_report(params: &ProtocolParams, repetitions: usize, seed: u64) -> Result<TimingReport> {
    if repetitions < 10 {
        return Err(MvotError::InvalidParams(format!("need at least 10 repetitions, got {repetitions}")));
    }
    params.validate()?;
    let population = Population::sample(PopulationSpec {
        num_identities: 2,
        dim: params.dim,
        n_channels: params.n,
        rng_seed: seed,
        ..Default::default()
    })?;
    let mut rng = stream_rng(seed, 0);
    let helper = enroll(population.ground_truth(0)?, &population.chaff_source(rng.random()), params, &mut rng)?;
    let tr = params.tr;

    let mut samples: [Vec<f64>; 4] = Default::default();
    for _ in 0..repetitions {
        let t = Instant::now();
        let genuine = population.genuine_query(0, &mut rng)?;
        samples[0].push(t.elapsed().as_secs_f64());

        let t = Instant::now();
        let ranked = rank_query(&helper, &genuine, tr)?;
        samples[1].push(t.elapsed().as_secs_f64());
        drop(ranked);

        let stranger = population.unrelated_face(&mut rng)?;
        let ranked = rank_query(&helper, &stranger, tr)?;
        let t = Instant::now();
        let v = ranked.decide(tr)?;
        samples[2].push(t.elapsed().as_secs_f64());
        std::hint::black_box(v);

        let t = Instant::now();
        std::hint::black_box(verify(&helper, &genuine, tr)?);
        samples[3].push(t.elapsed().as_secs_f64());
    }
    let phases = ["simulate", "match", "hash", "verify"]
        .iter()
        .zip(&samples)
        .map(|(name, s)| PhaseTiming {
            phase: name.to_string(),
            mean_s: mean(s),
            p95_s: percentile(s, 0.95),
            min_s: s.iter().copied().fold(f64::INFINITY, f64::min),
        })
        .collect();
    Ok(TimingReport {
        params: params.clone(),
        repetitions,
        phases,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// ROC rows of one configuration: `fpr,tpr,tr`.
pub fn roc_csv(config: &ConfigReport) -> String {
    let mut out = String::from("fpr,tpr,tr\n");
    for p in &config.roc {
        writeln!(out, "{},{},{}", p.fpr, p.tpr, p.tr).unwrap();
    }
    out
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("m,n,k,tr,tpr,tnr,genuine_trials,imposter_trials,seed\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.m, r.n, r.k, r.tr, r.tpr, r.tnr, r.genuine_trials, r.imposter_trials, r.seed
        )
        .unwrap();
    }
    out
}

pub fn timing_csv(report: &TimingReport) -> String {
    let mut out = String::from("phase,mean_s,p95_s,min_s,repetitions\n");
    for p in &report.phases {
        writeln!(out, "{},{},{},{},{}", p.phase, p.mean_s, p.p95_s, p.min_s, report.repetitions).unwrap();
    }
    out
}

/// Writes the report. JSON holds everything; CSV holds the ROC points,
/// one file per configuration (`path` for the first, `<stem>_<i>.csv`
/// after that). Returns the files written.
pub fn emit_report(report: &BenchReport, path: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    match format {
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(report)?;
            text.push('\n');
            std::fs::write(path, text)?;
            Ok(vec![path.to_path_buf()])
        }
        ReportFormat::Csv => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("roc");
            let mut written = Vec::new();
            for (i, c) in report.configs.iter().enumerate() {
                let p = if i == 0 {
                    path.to_path_buf()
                } else {
                    path.with_file_name(format!("{stem}_{i}.csv"))
                };
                std::fs::write(&p, roc_csv(c))?;
                written.push(p);
            }
            Ok(written)
        }
    }
}

pub fn read_report(path: &Path) -> Result<BenchReport> {
    let report: BenchReport = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if report.schema_version != REPORT_SCHEMA_VERSION {
        return Err(MvotError::InvalidParams(format!(
            "report schema {} unsupported (expected {REPORT_SCHEMA_VERSION})",
            report.schema_version
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::DistributionSpec;

    fn reference_auc(points: &[(f64, f64)]) -> f64 {
        let mut xs = vec![(0.0, 0.0)];
        xs.extend_from_slice(points);
        xs.push((1.0, 1.0));
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut area = 0.0;
        for i in 1..xs.len() {
            let dx = xs[i].0 - xs[i - 1].0;
            area += dx * xs[i - 1].1 + dx * (xs[i].1 - xs[i - 1].1) * 0.5;
        }
        area
    }

    #[test]
    fn auc_matches_reference_trapezoid() {
        let pts = [(0.1, 0.5), (0.0, 0.3), (0.4, 0.9), (0.4, 0.95)];
        let roc: Vec<RocPoint> = pts
            .iter()
            .enumerate()
            .map(|(i, &(fpr, tpr))| RocPoint { tr: i + 1, fpr, tpr })
            .collect();
        assert!((roc_auc(&roc) - reference_auc(&pts)).abs() < 1e-12);
        assert_eq!(roc_auc(&[RocPoint { tr: 1, fpr: 0.0, tpr: 1.0 }]), 1.0);
        assert_eq!(roc_auc(&[]), 0.5);
    }

    #[test]
    fn histogram_binning() {
        let mut h = Histogram::new(0.05);
        assert_eq!(h.counts.len(), 40);
        for x in [-1.0, 1.0, 0.81, 0.99, 0.3] {
            h.add(x);
        }
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[39], 2);
        assert!((h.mass_within(0.8, 1.0) - 0.6).abs() < 1e-12);
        assert!(h.to_csv().starts_with("bin_lo,bin_hi,count\n-1.00,-0.95,1\n"));
    }

    fn tiny_config() -> BenchConfig {
        let population = PopulationSpec {
            num_identities: 20,
            dim: 64,
            ..Default::default()
        };
        BenchConfig {
            params_grid: vec![ProtocolParams::for_chaff(5, 100, 5, 64).unwrap()],
            population,
            tr_sweep: vec![1, 2, 3],
            table_tr: 2,
            genuine_trials: 100,
            imposter_trials: 100,
            enrollments: 5,
            ..Default::default()
        }
    }

    #[test]
    fn config_validation() {
        let mut c = tiny_config();
        c.genuine_trials = 50;
        assert!(c.validate().is_err());
        let mut c = tiny_config();
        c.params_grid.clear();
        assert!(c.validate().is_err());
        let mut c = tiny_config();
        c.tr_sweep = vec![200];
        assert!(c.validate().is_err());
        assert!(tiny_config().validate().is_ok());
    }

    #[test]
    fn degenerate_genuine_gives_perfect_roc() {
        let mut c = tiny_config();
        c.population.genuine_cos = DistributionSpec::constant(1.0);
        let r = run_roc(&c).unwrap();
        let cfg = &r.configs[0];
        assert_eq!(cfg.roc[0].tpr, 1.0);
        assert_eq!(cfg.auc, 1.0);
    }

    #[test]
    fn reports_round_trip_and_are_deterministic() {
        let c = tiny_config();
        let a = run_roc(&c).unwrap();
        let b = run_roc(&c).unwrap();
        assert_eq!(a.without_timing(), b.without_timing());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        emit_report(&a, &path, ReportFormat::Json).unwrap();
        assert_eq!(read_report(&path).unwrap(), a);
        let csv = dir.path().join("roc.csv");
        emit_report(&a, &csv, ReportFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "fpr,tpr,tr");
        assert_eq!(lines.len(), 1 + c.tr_sweep.len());
    }

    #[test]
    fn timing_requires_repetitions() {
        assert!(timing_report(&ProtocolParams::default(), 5, 0).is_err());
    }

    #[test]
    fn histograms_need_samples() {
        let pop = Population::sample(PopulationSpec {
            num_identities: 2,
            dim: 16,
            ..Default::default()
        })
        .unwrap();
        assert!(score_histograms(&pop, 999, 0).is_err());
    }
}
