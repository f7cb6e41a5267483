//! `catclust run`: one algorithm on one dataset, serialized as a RunRecord.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use catclust::dataset::{CategoricalDataset, ColumnRef, LoadOptions, MissingPolicy};
use catclust::eval::{evaluate, objective_under_modes, EvalReport};
use catclust::kmodes::{run_kmodes, InitMethod, KModesConfig};
use catclust::medoids::{exhaustive_search, local_search, ExhaustiveConfig, Guarantee, LocalSearchConfig};
use catclust::metric::DistanceMode;
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::datasets::{self, DatasetConfig};
use crate::error::{CliError, CliResult};
use crate::Context;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmArg {
    Kmodes,
    Exhaustive,
    LocalSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitArg {
    FirstKDistinct,
    Random,
}

impl From<InitArg> for InitMethod {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::FirstKDistinct => InitMethod::FirstKDistinct,
            InitArg::Random => InitMethod::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingArg {
    Category,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistancesArg {
    Auto,
    Matrix,
    OnTheFly,
}

impl From<DistancesArg> for DistanceMode {
    fn from(a: DistancesArg) -> Self {
        match a {
            DistancesArg::Auto => DistanceMode::Auto,
            DistancesArg::Matrix => DistanceMode::Matrix,
            DistancesArg::OnTheFly => DistanceMode::OnTheFly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Tsv,
    Text,
}

/// Input file and how to parse it.
#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// CSV file, or the name of a known dataset in the data directory.
    pub input: String,
    /// Class label column (name or 0-based index); excluded from clustering.
    #[arg(long)]
    pub label_column: Option<String>,
    /// Token marking a missing value.
    #[arg(long, default_value = "?")]
    pub missing_token: String,
    /// Treat missing values as their own category, or refuse them.
    #[arg(long, value_enum, default_value_t = MissingArg::Category)]
    pub missing: MissingArg,
    /// First line holds column names.
    #[arg(long)]
    pub header: bool,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

impl InputArgs {
    fn options(&self, defaults: LoadOptions) -> CliResult<LoadOptions> {
        if !self.delimiter.is_ascii() {
            return Err(CliError::Input("delimiter must be a single ASCII character".into()));
        }
        let label_column = match &self.label_column {
            Some(c) => Some(c.parse::<ColumnRef>().unwrap()),
            None => defaults.label_column,
        };
        Ok(LoadOptions {
            label_column,
            missing_token: self.missing_token.clone(),
            missing_policy: match self.missing {
                MissingArg::Category => MissingPolicy::TreatAsCategory,
                MissingArg::Reject => MissingPolicy::Reject,
            },
            has_header: self.header,
            delimiter: self.delimiter as u8,
            column_names: None,
        })
    }

    /// Resolves the input to a file path and load options.
    pub fn resolve(&self, ctx: &Context) -> CliResult<(PathBuf, LoadOptions)> {
        let as_path = Path::new(&self.input);
        if as_path.is_file() {
            return Ok((as_path.to_path_buf(), self.options(LoadOptions::default())?));
        }
        let config = DatasetConfig::load(ctx.datasets_config.as_deref())?;
        match config.datasets.get(&self.input) {
            Some(entry) => {
                let path = if ctx.offline {
                    ctx.data_dir.join(&entry.file)
                } else {
                    datasets::fetch(entry, &ctx.data_dir, false)?
                };
                if !path.is_file() {
                    return Err(CliError::Input(format!(
                        "dataset {} not found; provide the file locally at {}",
                        self.input,
                        path.display()
                    )));
                }
                Ok((path, self.options(entry.load_options())?))
            }
            None => Err(CliError::Input(format!("input file {} does not exist", as_path.display()))),
        }
    }

    pub fn load(&self, ctx: &Context) -> CliResult<CategoricalDataset> {
        let (path, opts) = self.resolve(ctx)?;
        Ok(catclust::load_csv(&path, &opts)?)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub algorithm: AlgorithmArg,
    #[arg(short, long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// k-modes initialization.
    #[arg(long, value_enum, default_value_t = InitArg::FirstKDistinct)]
    pub init: InitArg,
    /// k-modes iteration cap.
    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,
    /// Local search: medoids exchanged per swap.
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    /// Local search: independent seeded restarts.
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Local search: smallest relative improvement a swap must achieve.
    #[arg(long, default_value_t = 1e-9)]
    pub min_relative_improvement: f64,
    /// Local search: swap cap per restart.
    #[arg(long, default_value_t = 10_000)]
    pub max_steps: usize,
    #[arg(long, value_enum, default_value_t = DistancesArg::Auto)]
    pub distances: DistancesArg,
    /// Cluster distinct rows (with multiplicities) and report per distinct row.
    #[arg(long)]
    pub dedupe: bool,
    /// Run exhaustive search beyond the default size limit.
    #[arg(long)]
    pub force: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write here instead of stdout.
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Include wall-clock timings (makes output non-reproducible).
    #[arg(long)]
    #[serde(skip)]
    pub timings: bool,
}

#[derive(Debug, Serialize)]
pub struct DatasetSummary {
    pub path: String,
    pub records: usize,
    pub total_weight: u64,
    pub distinct: usize,
    pub attributes: usize,
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Solution {
    Modes {
        modes: Vec<Vec<String>>,
        iterations: usize,
        converged: bool,
        objective_trace: Vec<u64>,
    },
    Medoids {
        medoid_indices: Vec<usize>,
        medoids: Vec<Vec<String>>,
        medoid_objective: u64,
        guarantee: Guarantee,
        steps: u64,
    },
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub load_ms: f64,
    pub solve_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct RunRecord<'a> {
    pub version: &'static str,
    pub config: &'a RunArgs,
    pub dataset: DatasetSummary,
    pub solution: Solution,
    /// k-modes objective of the final partition, modes refit.
    pub mode_objective: u64,
    pub cluster_sizes: Vec<u64>,
    pub evaluation: Option<EvalReport>,
    pub assignment: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

fn decode(ds: &CategoricalDataset, values: &[u32]) -> Vec<String> {
    ds.decode_values(values).into_iter().map(str::to_owned).collect()
}

pub fn execute(args: &RunArgs, ctx: &Context) -> CliResult<()> {
    if args.k == 0 {
        return Err(CliError::Input("k must be at least 1".into()));
    }
    let load_start = Instant::now();
    let (path, opts) = args.input.resolve(ctx)?;
    let mut ds = catclust::load_csv(&path, &opts)?;
    if args.dedupe {
        ds = ds.dedupe();
    }
    let load_time = load_start.elapsed();

    let solve_start = Instant::now();
    let (solution, assignment) = match args.algorithm {
        AlgorithmArg::Kmodes => {
            let cfg = KModesConfig {
                init: args.init.into(),
                seed: args.seed,
                max_iterations: args.max_iterations,
                ..KModesConfig::new(args.k)
            };
            let res = run_kmodes(&ds, &cfg)?;
            let modes = res.modes.iter().map(|m| decode(&ds, &m.0)).collect();
            (
                Solution::Modes {
                    modes,
                    iterations: res.iterations,
                    converged: res.converged,
                    objective_trace: res.objective_trace,
                },
                res.assignment,
            )
        }
        AlgorithmArg::Exhaustive | AlgorithmArg::LocalSearch => {
            let sol = if args.algorithm == AlgorithmArg::Exhaustive {
                let cfg = ExhaustiveConfig {
                    size_limit: if args.force { None } else { ExhaustiveConfig::new(args.k).size_limit },
                    distances: args.distances.into(),
                    ..ExhaustiveConfig::new(args.k)
                };
                exhaustive_search(&ds, &cfg).map_err(|e| match e {
                    catclust::Error::InstanceTooLarge { .. } => {
                        CliError::Input(format!("{e}; pass --force to run it anyway"))
                    }
                    e => e.into(),
                })?
            } else {
                let cfg = LocalSearchConfig {
                    p: args.p,
                    seed: args.seed,
                    min_relative_improvement: args.min_relative_improvement,
                    max_steps: args.max_steps,
                    restarts: args.restarts,
                    distances: args.distances.into(),
                    ..LocalSearchConfig::default()
                };
                local_search(&ds, args.k, &cfg)?
            };
            let medoids = sol
                .medoid_indices
                .iter()
                .map(|&i| decode(&ds, &ds.records[i].values))
                .collect();
            (
                Solution::Medoids {
                    medoid_indices: sol.medoid_indices,
                    medoids,
                    medoid_objective: sol.medoid_objective,
                    guarantee: sol.guarantee,
                    steps: sol.steps,
                },
                sol.assignment,
            )
        }
    };
    let solve_time = solve_start.elapsed();

    let medoid_objective = match &solution {
        Solution::Medoids { medoid_objective, .. } => Some(*medoid_objective),
        Solution::Modes { .. } => None,
    };
    let mut cluster_sizes = vec![0u64; args.k];
    for (rec, &c) in ds.records.iter().zip(&assignment) {
        cluster_sizes[c] += rec.weight;
    }
    let evaluation = if ds.has_labels() {
        Some(evaluate(&ds, &assignment, medoid_objective)?)
    } else {
        None
    };
    let record = RunRecord {
        version: crate::VERSION,
        config: args,
        dataset: DatasetSummary {
            path: path.display().to_string(),
            records: ds.len(),
            total_weight: ds.total_weight,
            distinct: ds.distinct_points().len(),
            attributes: ds.m(),
        },
        mode_objective: objective_under_modes(&ds, &assignment)?,
        solution,
        cluster_sizes,
        evaluation,
        assignment,
        timings: args.timings.then(|| Timings {
            load_ms: load_time.as_secs_f64() * 1e3,
            solve_ms: solve_time.as_secs_f64() * 1e3,
        }),
    };
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&record)? + "\n",
        Format::Tsv => render_tsv(&ds, &record),
        Format::Text => render_text(&record),
    };
    crate::emit(&text, args.output.as_deref())
}

fn render_tsv(ds: &CategoricalDataset, record: &RunRecord) -> String {
    let mut out = Vec::new();
    let labelled = ds.has_labels();
    let _ = writeln!(out, "record\tweight\tcluster{}", if labelled { "\tlabel" } else { "" });
    for (i, (rec, c)) in ds.records.iter().zip(&record.assignment).enumerate() {
        let _ = write!(out, "{i}\t{}\t{c}", rec.weight);
        if labelled {
            let label = rec.label.and_then(|l| ds.label_name(l)).unwrap_or("");
            let _ = write!(out, "\t{label}");
        }
        let _ = writeln!(out);
    }
    String::from_utf8(out).expect("utf-8")
}

fn render_text(record: &RunRecord) -> String {
    let mut out = String::new();
    let d = &record.dataset;
    out += &format!("{}\n", record.version);
    out += &format!(
        "dataset: {} ({} records, {} distinct, {} attributes)\n",
        d.path, d.total_weight, d.distinct, d.attributes
    );
    out += &format!("algorithm: {:?}, k = {}\n", record.config.algorithm, record.config.k);
    match &record.solution {
        Solution::Modes { modes, iterations, converged, .. } => {
            out += &format!("iterations: {iterations} (converged: {converged})\n");
            for (i, m) in modes.iter().enumerate() {
                out += &format!("mode {i}: {}\n", m.join(","));
            }
        }
        Solution::Medoids { medoid_indices, medoids, medoid_objective, guarantee, .. } => {
            out += &format!("medoid objective: {medoid_objective}\n");
            out += &format!(
                "guarantee: {} x optimal k-median, {} x optimal k-modes\n",
                guarantee.kmedian_factor, guarantee.kmodes_factor
            );
            for (i, (idx, m)) in medoid_indices.iter().zip(medoids).enumerate() {
                out += &format!("medoid {i}: record {idx}: {}\n", m.join(","));
            }
        }
    }
    out += &format!("mode objective: {}\n", record.mode_objective);
    out += &format!("cluster sizes: {:?}\n", record.cluster_sizes);
    if let Some(e) = &record.evaluation {
        out += &format!("clustering error: {}\n", e.error_display);
        for (row, counts) in e.confusion.counts.iter().enumerate() {
            let cells: Vec<String> = e
                .confusion
                .classes
                .iter()
                .zip(counts)
                .map(|(c, n)| format!("{c}={n}"))
                .collect();
            out += &format!("cluster {row}: {}\n", cells.join(" "));
        }
    }
    if let Some(t) = &record.timings {
        out += &format!("load: {:.1} ms, solve: {:.1} ms\n", t.load_ms, t.solve_ms);
    }
    out
}
