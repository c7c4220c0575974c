use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use ae_search::data::{synthetic, ColumnRef, LoadOptions, Normalization};
use ae_search::fitness::{evaluate, Budget};
use ae_search::genome::{architecture_free_combinations, count_valid_unit_assignments, Chromosome, GeneBounds, MAX_HIDDEN_PAIRS};
use ae_search::harness::{
    compare, export_trajectories, run_search, sweep_alpha, write_sweep_csv, ExperimentPlan, HarnessError, RunConfig,
    DEFAULT_ALPHAS,
};
use ae_search::strategies::{SearchConfig, Strategy};

#[derive(Parser)]
#[command(name = "ae-search", version, about = "Evolutionary architecture search for autoencoders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one search and write its logs to --out.
    Search(SearchArgs),
    /// Repeat a search for several penalty weights.
    SweepAlpha(SweepArgs),
    /// Run every strategy on every dataset, then rank them.
    Compare(CompareArgs),
    /// Print the size of the search space.
    SpaceSize {
        /// Feature counts to tabulate valid unit assignments for.
        #[arg(long, value_delimiter = ',')]
        features: Vec<usize>,
    },
    /// Train and score a single chromosome.
    EvalOne(EvalOneArgs),
    /// Turn solutions logs into plot-ready CSVs.
    ExportPlots {
        /// Run directories containing solutions.csv.
        #[arg(long = "run", required = true)]
        runs: Vec<PathBuf>,
    },
    /// Write the bundled glass/sonar/spect-shaped datasets.
    MakeData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args, Clone)]
struct DataArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Rescale every column to [0, 1].
    #[arg(long, value_parser = ["minmax"])]
    normalize: Option<String>,
    /// Column to remove, by header name or 0-based index.
    #[arg(long)]
    drop_column: Option<String>,
}

#[derive(Args, Clone)]
struct TrainArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 600)]
    max_seconds: u64,
    /// Evaluation budget; 0 means unlimited.
    #[arg(long, default_value_t = 500)]
    max_evals: u64,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Retrain repeated chromosomes instead of reusing their score.
    #[arg(long)]
    no_memo: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    data: Option<DataArgs>,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
    #[arg(long, default_value_t = 0.0001)]
    alpha: f64,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long)]
    out: PathBuf,
    /// Re-run from a recorded config.json; other search flags are ignored.
    #[arg(long, conflicts_with_all = ["dataset", "strategy"])]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Strategy,
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    datasets: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    strategies: Vec<Strategy>,
    #[arg(long, value_parser = ["minmax"])]
    normalize: Option<String>,
    #[arg(long)]
    drop_column: Option<String>,
    #[arg(long, default_value_t = 0.0001)]
    alpha: f64,
    #[command(flatten)]
    train: TrainArgs,
    /// Run the (dataset, strategy) cells concurrently.
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalOneArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Fifteen comma-separated genes.
    #[arg(long)]
    chromosome: String,
    #[arg(long, default_value_t = 0.0001)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

/// A header is assumed when the first non-empty line has a non-numeric cell.
fn sniff_header(path: &Path) -> bool {
    std::fs::read_to_string(path)
        .ok()
        .and_then(|t| t.lines().find(|l| !l.trim().is_empty()).map(str::to_string))
        .is_some_and(|l| l.split(',').any(|c| c.trim().parse::<f64>().is_err()))
}

fn load_options(path: &Path, normalize: &Option<String>, drop_column: &Option<String>) -> LoadOptions {
    LoadOptions {
        has_header: sniff_header(path),
        drop_column: drop_column.as_deref().map(ColumnRef::parse),
        normalize: if normalize.is_some() {
            Normalization::MinMax
        } else {
            Normalization::None
        },
    }
}

fn search_config(strategy: Strategy, alpha: f64, t: &TrainArgs) -> SearchConfig {
    let mut cfg = SearchConfig::defaults_for(strategy);
    cfg.alpha = alpha;
    cfg.master_seed = t.seed;
    cfg.train.epochs = t.epochs;
    cfg.train.batch_size = t.batch;
    cfg.budget = Budget {
        max_wall_clock: Duration::from_secs(t.max_seconds),
        max_evaluations: (t.max_evals > 0).then_some(t.max_evals),
        termination_cost: 0.0,
    };
    if let Some(p) = t.population {
        cfg.population_size = p;
    }
    if let Some(i) = t.iterations {
        cfg.iterations = i;
    }
    cfg.workers = t.workers;
    cfg.memoize = !t.no_memo;
    cfg
}

fn run_config(data: &DataArgs, search: SearchConfig) -> RunConfig {
    let mut cfg = RunConfig::new(&data.dataset, search);
    cfg.load = load_options(&data.dataset, &data.normalize, &data.drop_column);
    cfg
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.8}"))
}

fn cmd_search(a: SearchArgs) -> Result<(), HarnessError> {
    let cfg = match (&a.config, &a.data, a.strategy) {
        (Some(path), _, _) => RunConfig::read(path)?,
        (None, Some(data), Some(strategy)) => run_config(data, search_config(strategy, a.alpha, &a.train)),
        _ => return Err(HarnessError::Usage("search needs --dataset and --strategy, or --config".into())),
    };
    let (_, best) = run_search(&cfg, &a.out)?;
    println!(
        "best {} fitness {} (train {}, test {}, penalty {}) after {} evaluations in {:.1}s",
        best.chromosome,
        fmt_opt(best.fitness),
        fmt_opt(best.train_mse),
        fmt_opt(best.test_mse),
        best.penalty,
        best.evaluations,
        best.wall_time_s
    );
    if let Some(layout) = &best.hidden_layout {
        println!("hidden layout: {layout}");
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<(), HarnessError> {
    let cfg = run_config(&a.data, search_config(a.strategy, 0.0, &a.train));
    let dataset = cfg.load_dataset()?;
    let alphas = if a.alphas.is_empty() {
        DEFAULT_ALPHAS.to_vec()
    } else {
        a.alphas
    };
    let rows = sweep_alpha(&dataset, &cfg.search, &alphas)?;
    std::fs::create_dir_all(&a.out).map_err(|source| HarnessError::OutDir {
        path: a.out.clone(),
        source,
    })?;
    write_sweep_csv(&rows, &a.out.join("sweep.csv"))?;
    println!("{:>8}  {:>12}  layout", "alpha", "loss");
    for row in &rows {
        match &row.result {
            Ok(e) => println!("{:>8}  {:>12.8}  {}", row.alpha, e.loss, e.hidden_layout),
            Err(msg) => println!("{:>8}  {:>12}  error: {msg}", row.alpha, "-"),
        }
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<(), HarnessError> {
    let load = a
        .datasets
        .first()
        .map(|p| load_options(p, &a.normalize, &a.drop_column))
        .unwrap_or_default();
    let strategies = if a.strategies.is_empty() {
        Strategy::ALL.to_vec()
    } else {
        a.strategies
    };
    let plan = ExperimentPlan {
        datasets: a.datasets,
        strategies,
        load,
        template: search_config(Strategy::Ga, a.alpha, &a.train),
        out_dir: a.out,
        parallel: a.parallel,
    };
    let (table, ranking, friedman) = compare(&plan)?;
    let names: Vec<String> = table.strategies.iter().map(|s| format!("{s:>10}")).collect();
    println!("{:<12}{}", "dataset", names.join(""));
    for (d, ranks) in table.datasets.iter().zip(&ranking.ranks) {
        let cells: Vec<String> = ranks.iter().map(|r| format!("{r:>10.2}")).collect();
        println!("{d:<12}{}", cells.join(""));
    }
    let avg: Vec<String> = ranking.average.iter().map(|r| format!("{r:>10.2}")).collect();
    println!("{:<12}{}", "average", avg.join(""));
    if let Some(f) = friedman {
        println!("friedman chi2 = {:.4}, df = {}, p = {:.6e}", f.statistic, f.degrees_of_freedom, f.p_value);
    }
    Ok(())
}

fn cmd_space_size(features: &[usize]) {
    println!("search space size (unit genes excluded): {}", architecture_free_combinations());
    for &f in features {
        let per_layer: Vec<u128> = (0..=MAX_HIDDEN_PAIRS).map(|l| count_valid_unit_assignments(f, l)).collect();
        let cells: Vec<String> = per_layer.iter().enumerate().map(|(l, n)| format!("L={l}: {n}")).collect();
        println!("f={f}: valid unit assignments {}", cells.join(", "));
    }
}

fn cmd_eval_one(a: EvalOneArgs) -> Result<(), HarnessError> {
    let mut search = SearchConfig::defaults_for(Strategy::Random);
    search.alpha = a.alpha;
    search.master_seed = a.seed;
    search.train.epochs = a.epochs;
    search.train.batch_size = a.batch;
    let cfg = run_config(&a.data, search);
    let dataset = cfg.load_dataset()?;
    let bounds = GeneBounds::for_features(dataset.feature_count()).map_err(|e| HarnessError::Usage(e.to_string()))?;
    let c = Chromosome::parse(&a.chromosome, &bounds).map_err(|e| HarnessError::Usage(e.to_string()))?;
    let record = evaluate(&c, &dataset, &cfg.search.eval_settings())
        .map_err(|e| HarnessError::Usage(e.to_string()))?;
    let json = serde_json::to_string_pretty(&record).expect("records serialise");
    println!("{json}");
    Ok(())
}

fn cmd_export(runs: &[PathBuf]) -> Result<(), HarnessError> {
    for run in runs {
        let e = export_trajectories(run)?;
        println!(
            "{}: {} valid rows, best {}",
            run.display(),
            e.time_series.len(),
            fmt_opt(e.best())
        );
    }
    Ok(())
}

fn cmd_make_data(out: &Path, seed: u64) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for shape in [synthetic::Shape::Glass, synthetic::Shape::Sonar, synthetic::Shape::Spect] {
        let (d, classes) = synthetic::generate(shape, seed);
        let path = out.join(format!("{}.csv", shape.name()));
        synthetic::write_with_class(&d, &classes, &path).with_context(|| format!("writing {}", path.display()))?;
        println!("{} ({} x {})", path.display(), d.rows(), d.feature_count());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Search(a) => cmd_search(a),
        Command::SweepAlpha(a) => cmd_sweep(a),
        Command::Compare(a) => cmd_compare(a),
        Command::SpaceSize { features } => {
            cmd_space_size(&features);
            Ok(())
        }
        Command::EvalOne(a) => cmd_eval_one(a),
        Command::ExportPlots { runs } => cmd_export(&runs),
        Command::MakeData { out, seed } => {
            return match cmd_make_data(&out, seed) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(4)
                }
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
