use std::path::PathBuf;
use std::time::Instant;

use catclust::audit::{
    audit_lemma1, audit_lemma2, audit_mode_optimality, audit_oracle, random_dataset, InstanceParams,
};
use catclust::eval::evaluate;
use catclust::kmodes::{run_kmodes, KModesConfig};
use catclust::medoids::{exhaustive_search, local_search, ExhaustiveConfig, LocalSearchConfig};
use catclust::metric::{check_metric_properties, pairwise_matrix, DEFAULT_MATRIX_BUDGET};
use clap::{Args, ValueEnum};
use rand::SeedableRng;
use serde::Serialize;

use crate::datasets::{self, DatasetConfig};
use crate::error::{CliError, CliResult};
use crate::run::{Format, InputArgs};
use crate::Context;

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Datasets to fetch; all known ones when omitted.
    pub names: Vec<String>,
    /// Download again even when the file is cached.
    #[arg(long)]
    pub refresh: bool,
}

pub fn fetch(args: &FetchArgs, ctx: &Context) -> CliResult<()> {
    let config = DatasetConfig::load(ctx.datasets_config.as_deref())?;
    let names: Vec<String> = if args.names.is_empty() {
        config.datasets.keys().cloned().collect()
    } else {
        args.names.clone()
    };
    for name in &names {
        let entry = config.get(name)?;
        let path = if ctx.offline {
            let path = ctx.data_dir.join(&entry.file);
            if !path.is_file() {
                return Err(CliError::Input(format!(
                    "offline: provide the file locally at {}",
                    path.display()
                )));
            }
            path
        } else {
            datasets::fetch(entry, &ctx.data_dir, args.refresh)?
        };
        println!("{name}\t{}", path.display());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Table {
    Votes,
    Mushroom,
}

impl Table {
    fn name(self) -> &'static str {
        match self {
            Table::Votes => "votes",
            Table::Mushroom => "mushroom",
        }
    }

    /// Published (k-modes error, k-modes objective, medoid error, medoid objective).
    fn published(self) -> (f64, u64, f64, u64) {
        match self {
            Table::Votes => (0.136, 1706, 0.149, 1701),
            Table::Mushroom => (0.435, 63015, 0.121, 62512),
        }
    }
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub table: Table,
    /// Seed for the local-search restarts (mushroom).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Local-search restarts (mushroom).
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Use exhaustive search on mushroom too (hours of compute).
    #[arg(long)]
    pub force: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Comparison {
    quantity: &'static str,
    published: String,
    measured: String,
    deviation: String,
}

#[derive(Debug, Serialize)]
struct Reproduction {
    version: &'static str,
    dataset: &'static str,
    records: u64,
    k: usize,
    medoid_algorithm: &'static str,
    rows: Vec<Comparison>,
}

fn error_row(quantity: &'static str, published: f64, measured: &str) -> Comparison {
    let value: f64 = measured.parse().unwrap_or(f64::NAN);
    Comparison {
        quantity,
        published: format!("{published:.3}"),
        measured: measured.to_owned(),
        deviation: format!("{:+.3}", value - published),
    }
}

fn objective_row(quantity: &'static str, published: u64, measured: u64) -> Comparison {
    Comparison {
        quantity,
        published: published.to_string(),
        measured: measured.to_string(),
        deviation: format!("{:+.2}%", (measured as f64 - published as f64) / published as f64 * 100.0),
    }
}

pub fn reproduce(args: &ReproduceArgs, ctx: &Context) -> CliResult<()> {
    let config = DatasetConfig::load(ctx.datasets_config.as_deref())?;
    let ds = datasets::load_known(&config, args.table.name(), &ctx.data_dir, !ctx.offline)?;
    let k = 2;
    let (kmodes_error, kmodes_objective, medoid_error, medoid_objective) = args.table.published();

    let km = run_kmodes(&ds, &KModesConfig::new(k))?;
    let km_eval = evaluate(&ds, &km.assignment, None)?;

    let use_exhaustive = args.table == Table::Votes || args.force;
    let sol = if use_exhaustive {
        let cfg = ExhaustiveConfig {
            size_limit: None,
            ..ExhaustiveConfig::new(k)
        };
        exhaustive_search(&ds, &cfg)?
    } else {
        let cfg = LocalSearchConfig {
            seed: args.seed,
            restarts: args.restarts,
            ..LocalSearchConfig::default()
        };
        local_search(&ds, k, &cfg)?
    };
    let med_eval = evaluate(&ds, &sol.assignment, Some(sol.medoid_objective))?;

    let report = Reproduction {
        version: crate::VERSION,
        dataset: args.table.name(),
        records: ds.total_weight,
        k,
        medoid_algorithm: if use_exhaustive { "exhaustive" } else { "local-search p=1" },
        rows: vec![
            error_row("k-modes error", kmodes_error, &km_eval.error_display),
            objective_row("k-modes objective", kmodes_objective, km.mode_objective),
            error_row("medoid error", medoid_error, &med_eval.error_display),
            objective_row("medoid objective", medoid_objective, sol.medoid_objective),
        ],
    };
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Tsv | Format::Text => {
            let sep = if args.format == Format::Tsv { "\t" } else { "  " };
            let mut out = String::new();
            if args.format == Format::Text {
                out += &format!(
                    "{} (n = {}, k = {k}, first-k-distinct init; medoids by {})\n",
                    report.dataset, report.records, report.medoid_algorithm
                );
            }
            let header = ["quantity", "published", "measured", "deviation"];
            let width = |s: &str| if args.format == Format::Text { format!("{s:<18}") } else { s.to_owned() };
            out += header.iter().map(|h| width(h)).collect::<Vec<_>>().join(sep).trim_end();
            out += "\n";
            for r in &report.rows {
                let cells = [r.quantity, &r.published, &r.measured, &r.deviation];
                out += cells.iter().map(|c| width(c)).collect::<Vec<_>>().join(sep).trim_end();
                out += "\n";
            }
            out
        }
    };
    crate::emit(&text, args.output.as_deref())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Metric axioms on random record triples.
    Metric,
    /// Best member within twice the mode cost on random subsets.
    Lemma1,
    /// Exhaustive medoid optimum within twice the k-modes optimum.
    Lemma2,
    /// Pruned exhaustive search against naive enumeration.
    Oracle,
    /// Mode cost against the full category-product minimum.
    Modes,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum, required_unless_present = "lemma", conflicts_with = "lemma")]
    pub suite: Option<Suite>,
    /// Shorthand for `lemma1` / `lemma2`.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub lemma: Option<u8>,
    /// Number of triples, subsets, instances or clusters; suite default when omitted.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset for the metric and lemma1 suites.
    #[arg(long, default_value = "votes")]
    pub dataset: String,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct VerifyRecord<T: Serialize> {
    version: &'static str,
    suite: Suite,
    seed: u64,
    passed: bool,
    report: T,
}

fn finish<T: Serialize>(
    args: &VerifyArgs,
    suite: Suite,
    passed: bool,
    summary: String,
    report: T,
) -> CliResult<()> {
    let text = match args.format {
        Format::Json => {
            let rec = VerifyRecord {
                version: crate::VERSION,
                suite,
                seed: args.seed,
                passed,
                report,
            };
            serde_json::to_string_pretty(&rec)? + "\n"
        }
        Format::Tsv | Format::Text => {
            format!("{}\t{summary}\n", if passed { "PASS" } else { "FAIL" })
        }
    };
    crate::emit(&text, args.output.as_deref())?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Verification(format!("verification failed: {summary}")))
    }
}

pub fn verify(args: &VerifyArgs, ctx: &Context) -> CliResult<()> {
    let suite = match (args.suite, args.lemma) {
        (Some(s), _) => s,
        (None, Some(1)) => Suite::Lemma1,
        (None, _) => Suite::Lemma2,
    };
    let load = || {
        InputArgs {
            input: args.dataset.clone(),
            label_column: None,
            missing_token: "?".into(),
            missing: crate::run::MissingArg::Category,
            header: false,
            delimiter: ',',
        }
        .load(ctx)
    };
    match suite {
        Suite::Metric => {
            let trials = args.trials.unwrap_or(100_000);
            let r = check_metric_properties(&load()?, trials, args.seed);
            let summary = format!("metric: {} triples, {} violations", r.triples_checked, r.violations.len());
            finish(args, suite, r.passed, summary, r)
        }
        Suite::Lemma1 => {
            let trials = args.trials.unwrap_or(1000);
            let r = audit_lemma1(&load()?, trials, args.seed)?;
            let mut summary = format!(
                "lemma1: {} subsets, max ratio {:.4}, {} violations; histogram",
                r.trials,
                r.max_ratio,
                r.violations.len()
            );
            for bin in &r.histogram {
                match bin.upper {
                    Some(u) => summary += &format!(" [{:.1},{:.1}):{}", bin.lower, u, bin.count),
                    None => summary += &format!(" >{:.1}:{}", bin.lower, bin.count),
                }
            }
            finish(args, suite, r.passed, summary, r)
        }
        Suite::Lemma2 => {
            let trials = args.trials.unwrap_or(200);
            let r = audit_lemma2(&InstanceParams::LEMMA2, trials, args.seed)?;
            let summary = format!(
                "lemma2: {} instances, max ratio {:.4}, {} violations",
                r.trials,
                r.max_ratio,
                r.violations.len()
            );
            finish(args, suite, r.passed, summary, r)
        }
        Suite::Oracle => {
            let trials = args.trials.unwrap_or(50);
            let r = audit_oracle(&InstanceParams::ORACLE, trials, args.seed)?;
            let summary = format!("oracle: {} instances, {} mismatches", r.trials, r.mismatches.len());
            finish(args, suite, r.passed, summary, r)
        }
        Suite::Modes => {
            let trials = args.trials.unwrap_or(1000);
            let r = audit_mode_optimality(&InstanceParams::MODES, trials, args.seed)?;
            let summary = format!("modes: {} clusters, {} mismatches", r.trials, r.mismatches.len());
            finish(args, suite, r.passed, summary, r)
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Dataset sizes (records) to time.
    #[arg(long, value_delimiter = ',', default_values_t = [250usize, 500, 1000])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    pub attributes: usize,
    #[arg(long, default_value_t = 3)]
    pub categories: usize,
    #[arg(short, long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Local-search restarts.
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Time only the matrix and local search.
    #[arg(long)]
    pub skip_exhaustive: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Serialize)]
struct BenchRow {
    n: usize,
    distinct: usize,
    matrix_ms: f64,
    exhaustive_ms: Option<f64>,
    exhaustive_objective: Option<u64>,
    local_search_ms: f64,
    local_search_objective: u64,
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn bench(args: &BenchArgs) -> CliResult<()> {
    let mut rows = Vec::new();
    for &n in &args.sizes {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
        let ds = random_dataset(&mut rng, n, args.attributes, args.categories);
        let pts = ds.distinct_points();

        let start = Instant::now();
        pairwise_matrix(&pts, DEFAULT_MATRIX_BUDGET)?;
        let matrix_ms = ms(start);

        let (exhaustive_ms, exhaustive_objective) = if args.skip_exhaustive {
            (None, None)
        } else {
            let start = Instant::now();
            let cfg = ExhaustiveConfig {
                size_limit: None,
                ..ExhaustiveConfig::new(args.k)
            };
            let sol = exhaustive_search(&ds, &cfg)?;
            (Some(ms(start)), Some(sol.medoid_objective))
        };

        let start = Instant::now();
        let cfg = LocalSearchConfig {
            seed: args.seed,
            restarts: args.restarts,
            ..LocalSearchConfig::default()
        };
        let sol = local_search(&ds, args.k, &cfg)?;
        rows.push(BenchRow {
            n,
            distinct: pts.len(),
            matrix_ms,
            exhaustive_ms,
            exhaustive_objective,
            local_search_ms: ms(start),
            local_search_objective: sol.medoid_objective,
        });
    }
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
        Format::Tsv | Format::Text => {
            let mut out = String::from("n\tdistinct\tmatrix_ms\texhaustive_ms\texhaustive_obj\tlocal_ms\tlocal_obj\n");
            let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
            for r in &rows {
                out += &format!(
                    "{}\t{}\t{:.1}\t{}\t{}\t{:.1}\t{}\n",
                    r.n,
                    r.distinct,
                    r.matrix_ms,
                    opt(r.exhaustive_ms.map(|v| format!("{v:.1}"))),
                    opt(r.exhaustive_objective.map(|v| v.to_string())),
                    r.local_search_ms,
                    r.local_search_objective
                );
            }
            out
        }
    };
    crate::emit(&text, None)
}
