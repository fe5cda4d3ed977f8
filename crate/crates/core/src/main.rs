use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use lcr::cycles::{pair_search, CancellationPair};
use lcr::error::LcrError;
use lcr::experiments::{bench_counting, run_plan, ExperimentPlan};
use lcr::inference::{analyze_with, TestStatus, VarianceForm};
use lcr::io::{read_edge_list, sha256_hex, write_edge_list, LoadedGraph, ParamFile};
use lcr::mle::{fit, lrt, SolverConfig};
use lcr::model::{draw_heterogeneity, MisspecParams, ModelParams};
use lcr::oracle::{run_oracle_suite, InjectedFault, OracleConfig};
use lcr::report::{Provenance, ResultDocument};
use lcr::rng::derive_seed;

const EXIT_IO: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;
const EXIT_CAPACITY: u8 = 5;
const EXIT_ORACLE: u8 = 6;

#[derive(Parser)]
#[command(name = "lcr", version, about = "Reciprocity estimation and testing for directed networks")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph and write it as an edge list.
    Simulate(SimulateArgs),
    /// Log-ratio estimate, plug-in variance and test of rho = rho0.
    Estimate(AnalysisArgs),
    /// Same as `estimate`, reported as a test.
    Test(AnalysisArgs),
    /// Maximum-likelihood fit.
    Mle(MleArgs),
    /// Enumerate cancellation pairs of one cycle length.
    Pairs(PairsArgs),
    /// Compare fast routines with slow references on small graphs.
    OracleCheck(OracleArgs),
    /// Run an experiment plan.
    Experiment(ExperimentArgs),
    /// Time counting and variance across graph sizes.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Parameter document to sample from, instead of --n/--rho/--gamma.
    #[arg(long, conflicts_with_all = ["n", "rho", "gamma"])]
    params: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Set all node effects to zero.
    #[arg(long)]
    homogeneous: bool,
    /// Within-community tilt of the two-community variant.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Edge-list destination.
    #[arg(long)]
    out: PathBuf,
    /// Where to write the parameters used.
    #[arg(long)]
    params_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize, PartialEq, Eq, Debug)]
#[serde(rename_all = "kebab-case")]
enum VarianceArg {
    Complete,
    SparseLimit,
}

impl From<VarianceArg> for VarianceForm {
    fn from(v: VarianceArg) -> Self {
        match v {
            VarianceArg::Complete => VarianceForm::Complete,
            VarianceArg::SparseLimit => VarianceForm::SparseLimit,
        }
    }
}

#[derive(Args)]
struct AnalysisArgs {
    /// Edge list (tab-separated source and target per line).
    input: PathBuf,
    /// Node count, for graphs with isolated trailing nodes.
    #[arg(long)]
    n: Option<usize>,
    /// Built-in quadrilateral pair, 1 to 3.
    #[arg(long)]
    pair: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    rho0: Option<f64>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long, value_enum)]
    variance: Option<VarianceArg>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MleArgs {
    input: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    /// Also run the likelihood-ratio test of rho = 0.
    #[arg(long)]
    lrt: bool,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PairsArgs {
    /// Cycle length.
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    None,
    NullDiagonal,
    RepeatedNodes,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 200)]
    graphs: usize,
    #[arg(long, default_value_t = 50)]
    ratio_trials: usize,
    /// Break the fast counter on purpose.
    #[arg(long, value_enum, default_value_t = FaultArg::None)]
    fault: FaultArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Plan document (TOML).
    plan: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Replace the master seed of every design.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the replication count of every design.
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [500, 1000, 2000, 4000])]
    n_grid: Vec<usize>,
    /// Expected out-degree held fixed across sizes.
    #[arg(long, default_value_t = 20.0)]
    degree: f64,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Settings readable from `--config`.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    threads: Option<usize>,
    level: Option<f64>,
    rho0: Option<f64>,
    pair: Option<usize>,
    variance: Option<VarianceArg>,
    solver: Option<SolverConfig>,
}

enum Failure {
    Lcr(LcrError),
    Oracle,
}

impl From<LcrError> for Failure {
    fn from(e: LcrError) -> Self {
        Failure::Lcr(e)
    }
}

type Outcome = Result<u8, Failure>;

fn exit_code(e: &LcrError) -> u8 {
    match e {
        LcrError::Io(_) => EXIT_IO,
        LcrError::Domain(_) => EXIT_USAGE,
        LcrError::Parse { .. } => EXIT_PARSE,
        LcrError::Capacity(_) => EXIT_CAPACITY,
    }
}

fn io_err(path: &Path, e: std::io::Error) -> LcrError {
    LcrError::Io(format!("{}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, LcrError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), LcrError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), LcrError> {
    match output {
        Some(p) => write_text(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, LcrError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = read_text(path)?;
    toml::from_str(&text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        LcrError::parse(line, format!("{}: {}", path.display(), e.message()))
    })
}

fn load_graph(path: &Path, n: Option<usize>) -> Result<LoadedGraph, LcrError> {
    let loaded = read_edge_list(path, n)?;
    let s = &loaded.stats;
    info!(
        "{}: {} nodes, {} edges ({} self-loops, {} duplicates dropped)",
        path.display(),
        loaded.graph.n(),
        loaded.graph.edge_count(),
        s.self_loops,
        s.duplicates
    );
    Ok(loaded)
}

fn simulate(args: SimulateArgs, cfg: &FileConfig) -> Outcome {
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let (params, theta, community) = match &args.params {
        Some(path) => {
            let file = ParamFile::from_toml(&read_text(path)?)?;
            let theta = args.theta.or(file.theta);
            (file.model()?, theta, file.community.clone())
        }
        None => {
            let missing = |name: &str| LcrError::domain(format!("--{name} is required without --params"));
            let n = args.n.ok_or_else(|| missing("n"))?;
            let rho = args.rho.ok_or_else(|| missing("rho"))?;
            let gamma = args.gamma.ok_or_else(|| missing("gamma"))?;
            let (alpha, beta) = if args.homogeneous {
                (vec![0.0; n], vec![0.0; n])
            } else {
                draw_heterogeneity(n, derive_seed(seed, 0, 0))
            };
            (ModelParams::new(rho, gamma, alpha, beta)?, args.theta, None)
        }
    };
    let graph_seed = derive_seed(seed, 1, 0);
    let (g, file) = match theta {
        Some(theta) => {
            let m = MisspecParams::new(params, theta, community)?;
            (m.sample(graph_seed), ParamFile::from_misspec(&m))
        }
        None => (params.sample(graph_seed), ParamFile::from_params(&params)),
    };
    let mut buf = Vec::new();
    write_edge_list(&g, None, &mut buf)?;
    fs::write(&args.out, &buf).map_err(|e| io_err(&args.out, e))?;
    if let Some(p) = &args.params_out {
        write_text(p, &format!("# seed = {seed}\n{}", file.to_toml()))?;
    }
    info!("wrote {} edges on {} nodes to {}", g.edge_count(), g.n(), args.out.display());
    Ok(0)
}

fn analysis(args: AnalysisArgs, cfg: &FileConfig, kind: &str) -> Outcome {
    let pair_id = args.pair.or(cfg.pair).unwrap_or(1);
    let rho0 = args.rho0.or(cfg.rho0).unwrap_or(0.0);
    let level = args.level.or(cfg.level).unwrap_or(0.05);
    let variance = args.variance.or(cfg.variance).unwrap_or(VarianceArg::Complete);
    let seed = cfg.seed.unwrap_or(0);
    let pair = CancellationPair::quadrilateral(pair_id)?;
    let loaded = load_graph(&args.input, args.n)?;
    let a = analyze_with(&loaded.graph, &pair, rho0, level, variance.into())?;
    let config = serde_json::json!({
        "input": args.input.display().to_string(),
        "n": loaded.graph.n(),
        "pair": pair_id,
        "rho0": rho0,
        "level": level,
        "variance": variance,
        "ingest": loaded.stats,
    });
    let degenerate = a.test.status != TestStatus::Ok;
    if degenerate {
        warn!("degenerate statistic: {:?}", a.test.status);
    }
    let doc = ResultDocument::new(
        kind,
        Provenance::new(Some(loaded.sha256), seed, Some(pair_id), config),
        loaded.labels,
        a,
    );
    emit(args.output.as_deref(), &doc.to_json())?;
    Ok(if degenerate { EXIT_DEGENERATE } else { 0 })
}

#[derive(Serialize)]
struct MleOutput {
    fit: lcr::mle::MleFit,
    #[serde(skip_serializing_if = "Option::is_none")]
    lrt: Option<lcr::mle::LrtResult>,
}

fn mle(args: MleArgs, cfg: &FileConfig) -> Outcome {
    let mut solver = cfg.solver.unwrap_or_default();
    if let Some(t) = args.tol {
        solver.tol = t;
    }
    if let Some(m) = args.max_iter {
        solver.max_iter = m;
    }
    let loaded = load_graph(&args.input, args.n)?;
    let f = fit(&loaded.graph, &solver)?;
    let l = if args.lrt { Some(lrt(&loaded.graph, &solver)?) } else { None };
    let degenerate = !f.converged || f.diverged;
    if degenerate {
        warn!("the likelihood maximum was not found (diverged: {})", f.diverged);
    }
    let config = serde_json::json!({
        "input": args.input.display().to_string(),
        "n": loaded.graph.n(),
        "solver": solver,
        "lrt": args.lrt,
    });
    let doc = ResultDocument::new(
        "mle",
        Provenance::new(Some(loaded.sha256), cfg.seed.unwrap_or(0), None, config),
        loaded.labels,
        MleOutput { fit: f, lrt: l },
    );
    emit(args.output.as_deref(), &doc.to_json())?;
    Ok(if degenerate { EXIT_DEGENERATE } else { 0 })
}

fn pairs(args: PairsArgs, cfg: &FileConfig) -> Outcome {
    let classes = pair_search(args.m)?;
    let doc = ResultDocument::new(
        "pairs",
        Provenance::new(None, cfg.seed.unwrap_or(0), None, serde_json::json!({ "m": args.m })),
        None,
        classes,
    );
    emit(args.output.as_deref(), &doc.to_json())?;
    Ok(0)
}

fn oracle_check(args: OracleArgs, cfg: &FileConfig) -> Outcome {
    let config = OracleConfig {
        seed: args.seed.or(cfg.seed).unwrap_or(0),
        graphs: args.graphs,
        ratio_trials: args.ratio_trials,
        fault: match args.fault {
            FaultArg::None => InjectedFault::None,
            FaultArg::NullDiagonal => InjectedFault::NullDiagonal,
            FaultArg::RepeatedNodes => InjectedFault::RepeatedNodes,
        },
    };
    let report = run_oracle_suite(&config)?;
    for c in &report.checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let passed = report.passed();
    let doc = ResultDocument::new(
        "oracle_check",
        Provenance::new(None, config.seed, None, serde_json::to_value(config).expect("config serializes")),
        None,
        report,
    );
    emit(args.output.as_deref(), &doc.to_json())?;
    if passed {
        Ok(0)
    } else {
        Err(Failure::Oracle)
    }
}

fn experiment(args: ExperimentArgs, cfg: &FileConfig) -> Outcome {
    let text = read_text(&args.plan)?;
    let mut plan = ExperimentPlan::from_toml(&text)?;
    plan.override_seed(args.seed.or(cfg.seed), args.reps);
    let out = run_plan(&plan)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| io_err(&args.out_dir, e))?;
    let summary: serde_json::Value = serde_json::from_str(&out.json).expect("reports are valid JSON");
    let doc = ResultDocument::new(
        "experiment",
        Provenance::new(
            Some(sha256_hex(text.as_bytes())),
            plan.seed(),
            None,
            serde_json::to_value(&plan).expect("plans serialize"),
        ),
        None,
        summary,
    );
    let dir = &args.out_dir;
    write_text(&dir.join("summary.json"), &doc.to_json())?;
    write_text(&dir.join("summary.tsv"), &out.tsv)?;
    for (name, body) in &out.extra {
        write_text(&dir.join(name), body)?;
    }
    write_text(&dir.join("timing.tsv"), &out.timing_tsv)?;
    info!("wrote results to {}", dir.display());
    Ok(0)
}

fn bench(args: BenchArgs, cfg: &FileConfig) -> Outcome {
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let report = bench_counting(&args.n_grid, args.degree, args.repeats, seed)?;
    eprint!("{}", report.table().to_tsv());
    if let Some(e) = report.exponent {
        eprintln!("fitted exponent: {e:.3}");
    }
    let config = serde_json::json!({
        "n_grid": args.n_grid,
        "degree": args.degree,
        "repeats": args.repeats,
    });
    let doc = ResultDocument::new("bench", Provenance::new(None, seed, Some(1), config), None, report);
    emit(args.output.as_deref(), &doc.to_json())?;
    Ok(0)
}

fn run(cli: Cli) -> Outcome {
    let cfg = load_config(cli.config.as_deref())?;
    if let Some(t) = cli.threads.or(cfg.threads) {
        if t == 0 {
            return Err(LcrError::domain("--threads must be positive").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| LcrError::domain(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate(a) => simulate(a, &cfg),
        Command::Estimate(a) => analysis(a, &cfg, "estimate"),
        Command::Test(a) => analysis(a, &cfg, "test"),
        Command::Mle(a) => mle(a, &cfg),
        Command::Pairs(a) => pairs(a, &cfg),
        Command::OracleCheck(a) => oracle_check(a, &cfg),
        Command::Experiment(a) => experiment(a, &cfg),
        Command::Bench(a) => bench(a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Oracle) => {
            eprintln!("error: oracle check failed");
            ExitCode::from(EXIT_ORACLE)
        }
        Err(Failure::Lcr(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
