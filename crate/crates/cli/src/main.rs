//! `ocd`: fit, score, and probe ordinal cumulative-link causal networks from
//! the command line.

mod commands;
mod config;
mod experiments;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ocd_core::LinkFunction;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "ocd", version, about = "Ordinal causal discovery")]
struct Cli {
    /// Worker threads for candidate scoring (default: OCD_THREADS or all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the causal graph of a coded CSV by score-and-search
    Fit(FitArgs),
    /// Score a fixed graph (edge list) on a dataset
    Score(ScoreArgs),
    /// Decide the causal direction of two-column datasets
    Pair(PairArgs),
    /// Generate synthetic ordinal network data
    Simulate(SimulateArgs),
    /// Convert real-valued CSV columns to ordinal codes
    Discretize(DiscretizeArgs),
    /// Structural Hamming distance between two edge-list files
    Eval(EvalArgs),
    /// Run a named reproducible experiment
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct CommonFitArgs {
    /// Link function: probit or logit
    #[arg(long)]
    link: Option<LinkFunction>,
    /// Optimizer iteration cap
    #[arg(long)]
    max_iter: Option<usize>,
    /// Gradient infinity-norm tolerance
    #[arg(long)]
    tol_grad: Option<f64>,
    /// Relative objective-decrease tolerance
    #[arg(long)]
    tol_nll: Option<f64>,
    /// Separation guard: magnitude bound on unconstrained coordinates
    #[arg(long)]
    param_bound: Option<f64>,
}

impl CommonFitArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(link) = self.link {
            cfg.link = link;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = self.tol_grad {
            cfg.tol_grad = v;
        }
        if let Some(v) = self.tol_nll {
            cfg.tol_nll = v;
        }
        if let Some(v) = self.param_bound {
            cfg.param_bound = v;
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV of integer category codes (header row required)
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Load defaults from a previously echoed config JSON; flags override
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-column level counts: `auto` or `l1,l2,...`
    #[arg(long)]
    levels: Option<String>,
    /// Treat the CSV as real-valued and quantile-discretize into L levels
    #[arg(long, value_name = "L")]
    discretize: Option<String>,
    /// Treat the CSV as nonnegative reals; code 0 / (0, median] / rest
    #[arg(long)]
    trichotomize_zero: bool,
    /// Search strategy: greedy or exhaustive
    #[arg(long)]
    search: Option<String>,
    /// Initial graph: `empty` or an edge-list path
    #[arg(long)]
    init: Option<String>,
    /// Maximum parents per node during search
    #[arg(long)]
    max_parents: Option<usize>,
    /// Apply the first improving move per sweep instead of the best
    #[arg(long)]
    first_improvement: bool,
    /// RNG seed (echoed for provenance; the search itself is deterministic)
    #[arg(long)]
    seed: Option<u64>,
    /// Write the result JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the estimated graph in DOT format
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Also write the estimated graph as an edge list
    #[arg(long)]
    edgelist: Option<PathBuf>,
    #[command(flatten)]
    fit: CommonFitArgs,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    csv: PathBuf,
    /// Edge-list file naming the graph to score
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    fit: CommonFitArgs,
}

#[derive(Args)]
struct PairArgs {
    /// A two-column CSV, or a directory of them
    #[arg(long)]
    csv: PathBuf,
    /// Truth labels CSV with rows `pair,forward|backward`
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Discretize real-valued pairs at L-1 quantiles; a comma list sweeps L
    #[arg(long, value_name = "L[,L2,...]")]
    discretize: Option<String>,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_tsv: Option<PathBuf>,
    #[command(flatten)]
    fit: CommonFitArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of nodes
    #[arg(long)]
    p: Option<usize>,
    /// Number of edges in the random DAG
    #[arg(long)]
    edges: Option<usize>,
    /// Levels per node: one count for all nodes or a comma list
    #[arg(long)]
    levels: Option<String>,
    /// Signal strength: effects and intercepts are N(0, sigma^2)
    #[arg(long)]
    sigma: Option<f64>,
    /// Sample size
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Also write the true graph as an edge list
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Generate the hidden-confounder pair scenario instead of a random DAG
    #[arg(long)]
    confounder: bool,
    #[arg(long)]
    link: Option<LinkFunction>,
}

#[derive(Args)]
struct DiscretizeArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Quantile-discretize every column into L levels
    #[arg(long, value_name = "L")]
    levels: Option<usize>,
    /// Code 0 as 1, (0, median of nonzero] as 2, rest as 3
    #[arg(long)]
    trichotomize_zero: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Estimated graph edge list
    #[arg(long)]
    estimated: PathBuf,
    /// True graph edge list
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// One of: fig1-identifiability, shd-curve, confounder-grid, binary-null
    name: String,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write metrics.tsv and summary.json under this directory
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Sigma grid: comma list or `lo..hi` (0.25 steps)
    #[arg(long)]
    sigmas: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    edges: Option<usize>,
    /// Category count per variable
    #[arg(long = "L")]
    levels: Option<usize>,
    #[arg(long)]
    max_parents: Option<usize>,
    #[arg(long)]
    first_improvement: bool,
    #[command(flatten)]
    fit: CommonFitArgs,
}

fn load_config_file(path: &PathBuf) -> ocd_core::Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| ocd_core::Error::Validation(format!("bad config file: {e}")))
}

fn resolve_fit(args: FitArgs) -> ocd_core::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let mut loaded = load_config_file(path)?;
            let base = RunConfig::base("fit");
            if loaded.levels.is_empty() {
                loaded.levels = base.levels;
            }
            if loaded.search.is_empty() {
                loaded.search = base.search;
            }
            if loaded.init.is_empty() {
                loaded.init = base.init;
            }
            if loaded.max_iter == 0 {
                loaded.max_iter = base.max_iter;
                loaded.tol_grad = base.tol_grad;
                loaded.tol_nll = base.tol_nll;
                loaded.param_bound = base.param_bound;
            }
            loaded.subcommand = "fit".into();
            loaded
        }
        None => RunConfig::base("fit"),
    };
    if let Some(v) = args.csv {
        cfg.csv = Some(v);
    }
    if let Some(v) = args.levels {
        cfg.levels = v;
    }
    if args.discretize.is_some() {
        cfg.discretize = args.discretize;
    }
    if args.trichotomize_zero {
        cfg.trichotomize_zero = true;
    }
    if let Some(v) = args.search {
        cfg.search = v;
    }
    if let Some(v) = args.init {
        cfg.init = v;
    }
    if args.max_parents.is_some() {
        cfg.max_parents = args.max_parents;
    }
    if args.first_improvement {
        cfg.first_improvement = true;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if args.out.is_some() {
        cfg.out = args.out;
    }
    if args.dot.is_some() {
        cfg.dot = args.dot;
    }
    if args.edgelist.is_some() {
        cfg.edgelist = args.edgelist;
    }
    args.fit.apply(&mut cfg);
    Ok(cfg)
}

fn resolve_experiment(args: ExperimentArgs) -> ocd_core::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let mut loaded = load_config_file(path)?;
            if loaded.max_iter == 0 {
                let base = RunConfig::base("experiment");
                loaded.max_iter = base.max_iter;
                loaded.tol_grad = base.tol_grad;
                loaded.tol_nll = base.tol_nll;
                loaded.param_bound = base.param_bound;
                loaded.levels = base.levels;
            }
            loaded.subcommand = "experiment".into();
            loaded
        }
        None => RunConfig::base("experiment"),
    };
    cfg.experiment = Some(args.name);
    if args.out_dir.is_some() {
        cfg.out_dir = args.out_dir;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if args.repeats.is_some() {
        cfg.repeats = args.repeats;
    }
    if args.sigmas.is_some() {
        cfg.sigmas = args.sigmas;
    }
    if args.n.is_some() {
        cfg.n = args.n;
    }
    if args.p.is_some() {
        cfg.p = args.p;
    }
    if args.edges.is_some() {
        cfg.edges = args.edges;
    }
    if let Some(l) = args.levels {
        cfg.levels = l.to_string();
    }
    if args.max_parents.is_some() {
        cfg.max_parents = args.max_parents;
    }
    if args.first_improvement {
        cfg.first_improvement = true;
    }
    args.fit.apply(&mut cfg);
    Ok(cfg)
}

fn init_threads(flag: Option<usize>) {
    let threads = flag.or_else(|| {
        std::env::var("OCD_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(k) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global();
    }
}

fn dispatch(command: Command) -> ocd_core::Result<()> {
    match command {
        Command::Fit(args) => commands::run_fit(resolve_fit(args)?),
        Command::Score(args) => {
            let mut cfg = RunConfig::base("score");
            cfg.csv = Some(args.csv);
            cfg.graph = Some(args.graph);
            if let Some(v) = args.levels {
                cfg.levels = v;
            }
            cfg.out = args.out;
            args.fit.apply(&mut cfg);
            commands::run_score(cfg)
        }
        Command::Pair(args) => {
            let mut cfg = RunConfig::base("pair");
            cfg.csv = Some(args.csv);
            cfg.truth = args.truth;
            cfg.discretize = args.discretize;
            cfg.out_json = args.out_json;
            cfg.out_tsv = args.out_tsv;
            args.fit.apply(&mut cfg);
            commands::run_pair(cfg)
        }
        Command::Simulate(args) => {
            let mut cfg = RunConfig::base("simulate");
            cfg.p = args.p;
            cfg.edges = args.edges;
            if let Some(v) = args.levels {
                cfg.levels = v;
            }
            cfg.sigma = args.sigma;
            cfg.n = Some(args.n);
            cfg.seed = args.seed;
            cfg.out = Some(args.out);
            cfg.truth = args.truth;
            cfg.confounder = args.confounder;
            if let Some(link) = args.link {
                cfg.link = link;
            }
            commands::run_simulate(cfg)
        }
        Command::Discretize(args) => {
            let mut cfg = RunConfig::base("discretize");
            cfg.csv = Some(args.csv);
            cfg.out = Some(args.out);
            cfg.discretize = args.levels.map(|l| l.to_string());
            cfg.trichotomize_zero = args.trichotomize_zero;
            commands::run_discretize(cfg)
        }
        Command::Eval(args) => {
            let mut cfg = RunConfig::base("eval");
            cfg.estimated = Some(args.estimated);
            cfg.truth = Some(args.truth);
            cfg.out = args.out;
            commands::run_eval(cfg)
        }
        Command::Experiment(args) => experiments::run_experiment(resolve_experiment(args)?),
    }
}

fn main() {
    let cli = Cli::parse();
    init_threads(cli.threads);
    if let Err(err) = dispatch(cli.command) {
        std::process::exit(output::report_error(&err));
    }
}
