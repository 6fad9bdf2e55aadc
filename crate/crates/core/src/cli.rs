//! Command-line pipelines. Each `cmd_*` reads its inputs, writes its
//! artifacts into the output directory and returns the written paths.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{simulate_sweep, SmoothnessParams, SweepKind};
use crate::apps::{assign_blocks, reduction_ratio, train_id3, train_id3_from_histogram, LabeledSchema};
use crate::cube::{CellVector, CubeSchema};
use crate::error::{Error, Result};
use crate::estimate::{estimate, Method};
use crate::io::{
    csv_table, fmt_num, load_cube, read_queries, read_records, read_release, read_schema, release_to_json, Provenance,
};
use crate::partition::{release_cells_only, release_dpcube, KdParams, ReleasedHistogram};
use crate::privacy::{BudgetLedger, NoiseSource, PrivacyParam};
use crate::quadrature::QuadSettings;
use crate::workload::{evaluate_bands, generate_workload, log2_bands, weighted_variance};

/// Mixed into the seed of workload generation so query draws never reuse
/// the release noise stream.
pub const WORKLOAD_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Cell,
    Dpcube,
}

#[derive(Debug, Parser)]
#[command(name = "dpcube", version, about = "Differentially private data-cube release")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bin raw records into cube cell counts.
    Ingest(IngestArgs),
    /// Release a noisy histogram of the data.
    Release(ReleaseArgs),
    /// Answer range queries from a release.
    Query(QueryArgs),
    /// Measure a release against the true data on a random workload.
    Evaluate(EvaluateArgs),
    /// Tabulate the analytic error measures along one parameter.
    Simulate(SimulateArgs),
    /// Train an ID3 tree on a release and report its accuracy.
    Classify(ClassifyArgs),
    /// Block two datasets with a release's boxes.
    Blocking(BlockingArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Schema JSON.
    #[arg(long)]
    pub schema: PathBuf,
    /// Headed CSV of records.
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BudgetArgs {
    /// Total privacy budget.
    #[arg(long)]
    pub alpha: f64,
    /// Phase-one share for dpcube (default alpha/4).
    #[arg(long)]
    pub alpha1: Option<f64>,
    /// Variance threshold for splitting (default 4/alpha1^2).
    #[arg(long)]
    pub xi0: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Strategy::Dpcube)]
    pub strategy: Strategy,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReleaseArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QueryArgs {
    /// Release JSON.
    #[arg(long)]
    pub release: PathBuf,
    /// CSV of queries: `id,<name>_lo,<name>_hi,...` in bin indices.
    #[arg(long)]
    pub queries: PathBuf,
    /// Estimator (default uniform, or cell for cell-only releases).
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[arg(long)]
    pub release: PathBuf,
    /// A second release to compare against, e.g. a cell-only baseline.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Number of random queries.
    #[arg(long, default_value_t = 100_000)]
    pub queries: usize,
    /// Restrict to one estimator (default: every one the release supports).
    #[arg(long)]
    pub method: Option<Method>,
    /// Error tolerance for the usefulness column.
    #[arg(long, default_value_t = 100.0)]
    pub epsilon: f64,
    /// Workload seed (default: the release seed).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Parameter to vary: s, alpha1, np, gamma or eta.
    #[arg(long)]
    pub sweep: SweepKind,
    #[arg(long, default_value_t = 11)]
    pub np: usize,
    /// Query size held fixed by the other sweeps.
    #[arg(long, default_value_t = 5)]
    pub s: usize,
    #[arg(long, default_value_t = 5.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 5.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha1: f64,
    /// Monte Carlo samples per point.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Attribute holding the class label.
    #[arg(long)]
    pub class_dim: String,
    /// Estimator turning the release into cell counts (default ls, or cell).
    #[arg(long)]
    pub method: Option<Method>,
    /// Maximum tree depth (default: number of features).
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Held-out records for accuracy (default: the training data).
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BlockingArgs {
    /// Release JSON whose subcube boxes become the blocks.
    #[arg(long)]
    pub release: PathBuf,
    /// First dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// Second dataset.
    #[arg(long)]
    pub data2: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Validated budget split and partitioning settings of one release.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunConfig {
    pub alpha: PrivacyParam,
    pub alpha1: PrivacyParam,
    pub alpha2: Option<PrivacyParam>,
    pub xi0: f64,
    pub seed: u64,
    pub strategy: Strategy,
}

impl RunConfig {
    pub fn new(b: &BudgetArgs) -> Result<Self> {
        let alpha = PrivacyParam::new(b.alpha)?;
        match b.strategy {
            Strategy::Cell => {
                if b.alpha1.is_some_and(|a1| a1 != b.alpha) {
                    return Err(Error::InvalidParameter(
                        "the cell strategy spends all of alpha in one phase".into(),
                    ));
                }
                Ok(Self {
                    alpha,
                    alpha1: alpha,
                    alpha2: None,
                    xi0: 0.0,
                    seed: b.seed,
                    strategy: b.strategy,
                })
            }
            Strategy::Dpcube => {
                let a1 = b.alpha1.unwrap_or(b.alpha / 4.0);
                if !(a1 > 0.0 && a1 < b.alpha) {
                    return Err(Error::InvalidParameter(format!(
                        "alpha1 must lie in (0, {}), got {a1}",
                        b.alpha
                    )));
                }
                let alpha1 = PrivacyParam::new(a1)?;
                let alpha2 = PrivacyParam::new(b.alpha - a1)?;
                let xi0 = b.xi0.unwrap_or(4.0 / (a1 * a1));
                if !(xi0 >= 0.0 && xi0.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "xi0 must be finite and nonnegative, got {xi0}"
                    )));
                }
                Ok(Self {
                    alpha,
                    alpha1,
                    alpha2: Some(alpha2),
                    xi0,
                    seed: b.seed,
                    strategy: b.strategy,
                })
            }
        }
    }

    /// Runs the configured release, charging a fresh ledger of `alpha`.
    pub fn release(&self, x: &CellVector) -> Result<(ReleasedHistogram, BudgetLedger)> {
        let mut ledger = BudgetLedger::new(self.alpha);
        let mut src = NoiseSource::new(self.seed);
        let h = match self.alpha2 {
            None => release_cells_only(x, self.alpha1, &mut ledger, &mut src)?,
            Some(alpha2) => {
                let params = KdParams::for_cells(x.schema().m(), self.xi0)?;
                release_dpcube(x, self.alpha1, alpha2, &params, &mut ledger, &mut src)?
            }
        };
        Ok((h, ledger))
    }
}

const PATH_FIELDS: [&str; 8] = [
    "schema", "data", "data2", "release", "baseline", "queries", "test", "out",
];

/// Provenance of a command: its non-path parameters plus the SHA-256 of
/// every input file, so the hash does not depend on where files live.
fn provenance<A: Serialize>(args: &A, seed: u64) -> Result<Provenance> {
    let mut value = serde_json::to_value(args)?;
    let mut inputs = serde_json::Map::new();
    strip_paths(&mut value, &mut inputs)?;
    Provenance::of(&serde_json::json!({ "params": value, "inputs": inputs }), seed)
}

fn strip_paths(value: &mut serde_json::Value, inputs: &mut serde_json::Map<String, serde_json::Value>) -> Result<()> {
    if let serde_json::Value::Object(map) = value {
        for key in PATH_FIELDS {
            if let Some(v) = map.remove(key) {
                if let (Some(path), true) = (v.as_str(), key != "out") {
                    inputs.insert(key.to_string(), file_digest(Path::new(path))?.into());
                }
            }
        }
        for v in map.values_mut() {
            strip_paths(v, inputs)?;
        }
    }
    Ok(())
}

fn file_digest(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn default_method(h: &ReleasedHistogram, preferred: Method) -> Method {
    if h.has_subcubes() {
        preferred
    } else {
        Method::CellOnly
    }
}

pub fn cmd_ingest(args: &IngestArgs) -> Result<Vec<PathBuf>> {
    let prov = provenance(args, 0)?;
    let schema = read_schema(&args.input.schema)?;
    let x = load_cube(schema.clone(), &args.input.data)?;
    let mut header = vec!["cell".to_string()];
    header.extend(schema.dims().iter().map(|d| d.name().to_string()));
    header.push("count".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = (0..schema.m())
        .map(|i| {
            let mut r = vec![i.to_string()];
            for (d, c) in schema.coord_of(i).into_iter().enumerate() {
                r.push(schema.dims()[d].bins()[c].clone());
            }
            r.push(fmt_num(x.values()[i]));
            r
        })
        .collect();
    Ok(vec![write(
        &args.out,
        "counts.csv",
        &csv_table(&prov, &header, &rows)?,
    )?])
}

pub fn cmd_release(args: &ReleaseArgs) -> Result<Vec<PathBuf>> {
    let cfg = RunConfig::new(&args.budget)?;
    let prov = provenance(args, cfg.seed)?;
    let schema = read_schema(&args.input.schema)?;
    let x = load_cube(schema, &args.input.data)?;
    let (h, ledger) = cfg.release(&x)?;
    Ok(vec![
        write(&args.out, "release.json", &(release_to_json(&h, &prov)? + "\n"))?,
        write(&args.out, "ledger.jsonl", &ledger.to_json_lines()?)?,
    ])
}

pub fn cmd_query(args: &QueryArgs) -> Result<Vec<PathBuf>> {
    let h = read_release(&args.release)?;
    let prov = provenance(args, h.seed)?;
    let method = args.method.unwrap_or(default_method(&h, Method::Uniform));
    let queries = read_queries(&args.queries, h.schema())?;
    let rows = queries
        .iter()
        .map(|(id, q)| Ok(vec![id.clone(), fmt_num(estimate(q, &h, method)?.value)]))
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![write(
        &args.out,
        "estimates.csv",
        &csv_table(&prov, &["id", "estimate"], &rows)?,
    )?])
}

fn same_schema(a: &CubeSchema, b: &CubeSchema) -> Result<()> {
    if a != b {
        return Err(Error::SchemaMismatch("release and data use different schemas".into()));
    }
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Vec<PathBuf>> {
    let schema = read_schema(&args.input.schema)?;
    let x = load_cube(schema.clone(), &args.input.data)?;
    let mut releases = vec![("release", read_release(&args.release)?)];
    if let Some(b) = &args.baseline {
        releases.push(("baseline", read_release(b)?));
    }
    for (_, h) in &releases {
        same_schema(h.schema(), &schema)?;
    }
    let seed = args.seed.unwrap_or(releases[0].1.seed);
    let prov = provenance(args, seed)?;
    let w = generate_workload(&schema, args.queries, seed ^ WORKLOAD_SEED_SALT, None)?;
    let bands = log2_bands(schema.m());
    let mut rows = Vec::new();
    for (name, h) in &releases {
        let methods: Vec<Method> = match args.method {
            Some(m) if m.needs_subcubes() && !h.has_subcubes() => vec![Method::CellOnly],
            Some(m) => vec![m],
            None => Method::ALL
                .into_iter()
                .filter(|m| h.has_subcubes() || !m.needs_subcubes())
                .collect(),
        };
        let wv = weighted_variance(h, &x);
        for r in evaluate_bands(&w, &x, h, &methods, &bands, args.epsilon)? {
            rows.push(vec![
                name.to_string(),
                r.method.name().to_string(),
                r.band.map_or("all".to_string(), |(lo, hi)| format!("{lo}-{hi}")),
                r.queries.to_string(),
                fmt_num(r.avg_abs_error),
                fmt_num(r.usefulness),
                fmt_num(wv),
            ]);
        }
    }
    let header = [
        "release",
        "method",
        "band",
        "queries",
        "avg_abs_error",
        "usefulness",
        "weighted_variance",
    ];
    Ok(vec![write(
        &args.out,
        "evaluation.csv",
        &csv_table(&prov, &header, &rows)?,
    )?])
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let prov = provenance(args, args.seed)?;
    if !(args.alpha1 > 0.0 && args.alpha1 < args.alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha1 must lie in (0, {})",
            args.alpha
        )));
    }
    let base = SmoothnessParams::new(
        args.gamma,
        args.np,
        args.s.min(args.np),
        args.alpha1,
        args.alpha - args.alpha1,
        args.eta,
    )?;
    let rows: Vec<Vec<String>> = simulate_sweep(args.sweep, &base, args.samples, args.seed, &QuadSettings::default())?
        .into_iter()
        .map(|r| {
            vec![
                fmt_num(r.value),
                fmt_num(r.e_h),
                fmt_num(r.max_e_h),
                fmt_num(r.e_ls),
                fmt_num(r.se_ls),
            ]
        })
        .collect();
    let header = [args.sweep.name(), "e_h", "max_e_h", "e_ls", "se_ls"];
    let name = format!("sweep_{}.csv", args.sweep.name());
    Ok(vec![write(&args.out, &name, &csv_table(&prov, &header, &rows)?)?])
}

#[derive(Serialize)]
struct TreeFile<'a> {
    provenance: &'a Provenance,
    method: Method,
    tree: &'a crate::apps::DecisionTree,
}

pub fn cmd_classify(args: &ClassifyArgs) -> Result<Vec<PathBuf>> {
    let cfg = RunConfig::new(&args.budget)?;
    let prov = provenance(args, cfg.seed)?;
    let schema = read_schema(&args.input.schema)?;
    let x = load_cube(schema.clone(), &args.input.data)?;
    let test = match &args.test {
        Some(p) => load_cube(schema.clone(), p)?,
        None => x.clone(),
    };
    let ls = LabeledSchema::with_class(&schema, &args.class_dim)?;
    let depth = args.max_depth.unwrap_or(ls.features().len());
    let (h, _) = cfg.release(&x)?;
    let method = args.method.unwrap_or(default_method(&h, Method::LeastSquares));
    let exact = train_id3(&x, &ls, depth)?;
    let private = train_id3_from_histogram(&h, &ls, depth, method)?;
    let tree = TreeFile {
        provenance: &prov,
        method,
        tree: &private,
    };
    let rows = vec![
        vec!["exact".to_string(), fmt_num(exact.accuracy(&test)?)],
        vec!["private".to_string(), fmt_num(private.accuracy(&test)?)],
    ];
    Ok(vec![
        write(&args.out, "tree.json", &(serde_json::to_string_pretty(&tree)? + "\n"))?,
        write(
            &args.out,
            "accuracy.csv",
            &csv_table(&prov, &["model", "accuracy"], &rows)?,
        )?,
    ])
}

pub fn cmd_blocking(args: &BlockingArgs) -> Result<Vec<PathBuf>> {
    let h = read_release(&args.release)?;
    let prov = provenance(args, h.seed)?;
    let schema: Arc<CubeSchema> = h.schema().clone();
    let first = read_records(&args.data, &schema)?;
    let second = read_records(&args.data2, &schema)?;
    let a = assign_blocks(&first, &second, &h)?;
    let rows = vec![vec![a.blocks().len().to_string(), fmt_num(reduction_ratio(&a)?)]];
    Ok(vec![write(
        &args.out,
        "blocking.csv",
        &csv_table(&prov, &["k", "reduction_ratio"], &rows)?,
    )?])
}

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Release(a) => cmd_release(a),
        Command::Query(a) => cmd_query(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Blocking(a) => cmd_blocking(a),
    }
}
