//! `mvot`: key generation, enrollment, verification, benchmarks, attack
//! simulation and synthetic data generation.
//!
//! Exit codes: 0 success or accept, 1 reject (or an attack that was not
//! carried out), 2 usage error, 3 I/O or format error.

mod config;
mod input;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mvot_core::bench::{self, BenchConfig, ReportFormat};
use mvot_core::rng::stream_rng;
use mvot_core::security::{brute_force_attack, work_factor, DEFAULT_ATTACK_BUDGET};
use mvot_core::{
    deserialize_helper, enroll, serialize_helper, verify, EmbeddingTable, MvotError, Population, PopulationSpec,
    ProtocolParams,
};
use serde_json::{json, Value};

use config::{read_json, write_or_print, CliConfig};
use input::{ChaffSpec, InputSpec};

#[derive(Parser, Debug)]
#[command(name = "mvot", version, about = "Multi-vault obfuscated biometric templates")]
struct Cli {
    /// Root seed. Enrollment, queries and attacks draw fresh entropy when
    /// omitted; the seed actually used is echoed in the output.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores; 1 runs serially).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    /// JSON config with optional `params`, `population` and `bench` sections.
    #[arg(long, global = true, env = "MVOT_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derive protocol parameters for a target work factor.
    Keygen(KeygenArgs),
    /// Build a helper file from a template.
    Enroll(EnrollArgs),
    /// Check a query against a helper file (exit 0 accept, 1 reject).
    Verify(VerifyArgs),
    /// Run the benchmark suite and write reports.
    Bench(BenchArgs),
    /// Brute-force a helper file's commitments.
    Attack(AttackArgs),
    /// Write a synthetic population (and optional chaff) in ingestion format.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct KeygenArgs {
    /// Target security in bits.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    gamma: u32,
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 512)]
    dim: usize,
    /// Chaff per vault; defaults to the smallest count meeting `gamma`.
    #[arg(long)]
    m: Option<usize>,
    /// Retrieval threshold stored as the default for verification.
    #[arg(long)]
    tr: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EnrollArgs {
    /// Params JSON (from `keygen`); falls back to the config, then defaults.
    #[arg(long)]
    params: Option<PathBuf>,
    /// `synthetic:<id>`, `genuine:<id>`, or an ingestion file.
    #[arg(long)]
    template: InputSpec,
    /// Identity to take from an ingestion file.
    #[arg(long)]
    identity: Option<String>,
    /// `synthetic`, `synthetic:<seed>`, or an ingestion file.
    #[arg(long, default_value = "synthetic")]
    chaff: ChaffSpec,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    helper: PathBuf,
    /// `synthetic:<id>`, `genuine:<id>`, `cohort:<id>`, `unrelated`, or an
    /// ingestion file.
    #[arg(long)]
    query: InputSpec,
    #[arg(long)]
    identity: Option<String>,
    /// Defaults to the threshold stored in the helper's params.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    tr: Option<u32>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    hist_samples: usize,
    #[arg(long, default_value_t = 10)]
    timing_reps: usize,
}

#[derive(Args, Debug)]
struct AttackArgs {
    #[arg(long)]
    helper: PathBuf,
    /// Maximum hash evaluations.
    #[arg(long, default_value_t = DEFAULT_ATTACK_BUDGET)]
    budget: u64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// PopulationSpec JSON; falls back to the config, then defaults.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Ingestion file for the ground-truth templates.
    #[arg(long)]
    out: PathBuf,
    /// Number of chaff vectors to write to `--chaff-out`.
    #[arg(long, requires = "chaff_out")]
    chaff: Option<usize>,
    #[arg(long)]
    chaff_out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Reject(Value),
    Core(MvotError),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Reject(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Core(e) => match e {
                MvotError::AttackBudget { .. } => 1,
                MvotError::Io(_)
                | MvotError::Json(_)
                | MvotError::Format(_)
                | MvotError::Parse { .. }
                | MvotError::DuplicateRecord { .. }
                | MvotError::ChaffShortage { .. } => 3,
                _ => 2,
            },
        }
    }
}

impl From<MvotError> for CliError {
    fn from(e: MvotError) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Reject(_) => f.write_str("rejected"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t as usize).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Reject(out)) => {
            println!("{}", serde_json::to_string_pretty(&out).expect("json value serializes"));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = CliConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.unwrap_or_else(rand::random);
    match &cli.command {
        Command::Keygen(a) => keygen(a),
        Command::Enroll(a) => cmd_enroll(a, &config, seed),
        Command::Verify(a) => cmd_verify(a, &config, seed),
        Command::Bench(a) => cmd_bench(a, &config, cli.seed),
        Command::Attack(a) => cmd_attack(a, seed),
        Command::Simulate(a) => cmd_simulate(a, &config, cli.seed),
    }
}

fn keygen(a: &KeygenArgs) -> Result<(), CliError> {
    let mut params = ProtocolParams::keygen(a.gamma, a.n, a.k, a.dim, a.m)?;
    if let Some(tr) = a.tr {
        params = params.with_tr(tr)?;
    }
    let wf = work_factor(&params);
    eprintln!(
        "m = {}, work factor {:.2} bits (k-of-n: {:.2} bits)",
        params.m, wf.paper_bits, wf.refined_bits
    );
    write_or_print(a.out.as_ref(), &serde_json::to_value(&params).map_err(MvotError::from)?)
}

fn load_params(path: Option<&PathBuf>, config: &CliConfig) -> Result<ProtocolParams, CliError> {
    let params: ProtocolParams = match path {
        Some(p) => read_json(p)?,
        None => config.params.clone().unwrap_or_default(),
    };
    params.validate()?;
    Ok(params)
}

fn synthetic_population(spec: &PopulationSpec) -> impl FnOnce() -> Result<Population, CliError> + '_ {
    move || Population::sample(spec.clone()).map_err(CliError::from)
}

fn cmd_enroll(a: &EnrollArgs, config: &CliConfig, seed: u64) -> Result<(), CliError> {
    let params = load_params(a.params.as_ref(), config)?;
    let population = config.population_for(&params);
    let mut rng = stream_rng(seed, 0);
    let template = a
        .template
        .resolve(synthetic_population(&population), a.identity.as_deref(), params.n, params.dim, &mut rng)?;
    let chaff = a.chaff.source(params.dim, &mut rng);
    let helper = enroll(&template, &chaff, &params, &mut rng)?;
    let bytes = serialize_helper(&helper);
    std::fs::write(&a.out, &bytes).map_err(|e| CliError::io(&a.out, e))?;
    write_or_print(
        None,
        &json!({
            "operation": "enroll",
            "seed": seed,
            "helper": a.out,
            "bytes": bytes.len(),
            "commitments": helper.commitments.len(),
            "params": params,
            "population": population,
            "work_factor": work_factor(&params),
        }),
    )
}

fn cmd_verify(a: &VerifyArgs, config: &CliConfig, seed: u64) -> Result<(), CliError> {
    let bytes = std::fs::read(&a.helper).map_err(|e| CliError::io(&a.helper, e))?;
    let helper = deserialize_helper(&bytes)?;
    let params = &helper.params;
    let tr = a.tr.map_or(params.tr, |t| t as usize);
    let population = config.population_for(params);
    let mut rng = stream_rng(seed, 1);
    let query = a
        .query
        .resolve(synthetic_population(&population), a.identity.as_deref(), params.n, params.dim, &mut rng)?;
    let v = verify(&helper, &query, tr)?;
    let mut out = json!({
        "operation": "verify",
        "seed": seed,
        "helper": a.helper,
        "tr": tr,
        "params": params,
        "population": population,
    });
    let obj = out.as_object_mut().expect("object");
    if let Value::Object(fields) = serde_json::to_value(&v).map_err(MvotError::from)? {
        obj.extend(fields);
    }
    if v.accepted() {
        write_or_print(None, &out)
    } else {
        Err(CliError::Reject(out))
    }
}

fn cmd_bench(a: &BenchArgs, config: &CliConfig, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg: BenchConfig = config.bench.clone().unwrap_or_default();
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    let (report, rows) = bench::run_table(&cfg)?;
    let population = Population::sample(cfg.population.clone())?;
    let hist = bench::score_histograms(&population, a.hist_samples, cfg.rng_seed)?;
    let timing_params = cfg.params_grid[0].clone().with_tr(cfg.table_tr)?;
    let timing = bench::timing_report(&timing_params, a.timing_reps, cfg.rng_seed)?;

    let write = |name: &str, text: String| -> Result<PathBuf, CliError> {
        let p = a.out.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    };
    let mut files = bench::emit_report(&report, &a.out.join("roc.csv"), ReportFormat::Csv)?;
    files.push(write("table.csv", bench::table_csv(&rows))?);
    files.push(write("timing.csv", bench::timing_csv(&timing))?);
    files.push(write("hist_genuine.csv", hist.genuine.to_csv())?);
    files.push(write("hist_imposter.csv", hist.imposter.to_csv())?);
    files.push(write("hist_chaff.csv", hist.chaff.to_csv())?);
    let full = json!({
        "operation": "bench",
        "schema_version": bench::REPORT_SCHEMA_VERSION,
        "config": cfg,
        "report": report,
        "table": rows,
        "histograms": hist,
        "timing": timing,
    });
    let report_path = a.out.join("report.json");
    write_or_print(Some(&report_path), &full)?;
    files.push(report_path);
    write_or_print(
        None,
        &json!({
            "operation": "bench",
            "seed": cfg.rng_seed,
            "table": rows,
            "files": files,
        }),
    )
}

fn cmd_attack(a: &AttackArgs, seed: u64) -> Result<(), CliError> {
    let bytes = std::fs::read(&a.helper).map_err(|e| CliError::io(&a.helper, e))?;
    let helper = deserialize_helper(&bytes)?;
    let mut rng = stream_rng(seed, 2);
    let result = brute_force_attack(&helper, a.budget, &mut rng)?;
    write_or_print(
        None,
        &json!({
            "operation": "brute_force_attack",
            "seed": seed,
            "budget": a.budget,
            "params": helper.params,
            "work_factor": work_factor(&helper.params),
            "result": result,
        }),
    )
}

fn cmd_simulate(a: &SimulateArgs, config: &CliConfig, seed: Option<u64>) -> Result<(), CliError> {
    let mut spec: PopulationSpec = match &a.spec {
        Some(p) => read_json(p)?,
        None => config.population.clone().unwrap_or_default(),
    };
    if let Some(s) = seed {
        spec.rng_seed = s;
    }
    let population = Population::sample(spec.clone())?;
    let mut table = EmbeddingTable::new(spec.dim);
    for (i, set) in population.identities().iter().enumerate() {
        table.push_channel_set(&format!("id-{i}"), set)?;
    }
    table.save(&a.out)?;
    let mut chaff_rows = 0;
    if let (Some(count), Some(path)) = (a.chaff, &a.chaff_out) {
        let mut chaff = EmbeddingTable::new(spec.dim);
        for (i, v) in population.chaff_source(spec.rng_seed).generate(count)?.into_iter().enumerate() {
            chaff.insert(format!("chaff-{i}"), 0, v)?;
        }
        chaff.save(path)?;
        chaff_rows = count;
    }
    write_or_print(
        None,
        &json!({
            "operation": "simulate",
            "seed": spec.rng_seed,
            "population": spec,
            "rows": table.len(),
            "out": a.out,
            "chaff_rows": chaff_rows,
            "chaff_out": a.chaff_out,
        }),
    )
}
