use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use btpredict::evaluation::{cross_validate, noise_sweep, EvalOptions, MetricsReport, Stratum};
use btpredict::learning::{GaussianPrior, ModelConfig, PriorMode};
use btpredict::techtree::DEFAULT_ENUMERATION_CAP;
use btpredict::{
    bundled_dag, fit_model, generate_synthetic_replays, load_model, load_model_embedded, load_tech_dag,
    parse_replay_log, posterior, save_model, write_replay_log, InferenceError, Model, Race, Replay, TechDag,
};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NO_COMPATIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "btpredict", version, about = "Bayesian build-tree prediction from replays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect a tech dag
    #[command(subcommand)]
    Dag(DagCommand),
    /// Fit a model from replay logs
    Learn(LearnArgs),
    /// Posterior over build trees for one observation
    Predict(PredictArgs),
    /// Noise sweep on a fitted model, or k-fold cross-validation
    Evaluate(EvaluateArgs),
    /// Sample synthetic replays from a model
    Generate(GenerateArgs),
}

#[derive(Subcommand)]
enum DagCommand {
    /// Building count and build-tree counts with and without duplicates
    Stats {
        /// Dag file, or builtin:<race>
        #[arg(long)]
        dag: String,
    },
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, default_value_t = ModelConfig::DEFAULT_T_MAX_S)]
    t_max: u32,
    #[arg(long, default_value_t = ModelConfig::DEFAULT_SIGMA_MIN_S)]
    sigma_min: f64,
    /// Pseudo-count of the variance prior
    #[arg(long, default_value_t = GaussianPrior::DEFAULT_N0)]
    prior_n0: f64,
    /// Prior standard deviation in seconds
    #[arg(long, default_value_t = GaussianPrior::DEFAULT_SIGMA0_S)]
    prior_sigma0: f64,
    #[arg(long, value_enum, default_value_t = PriorArg::Uniform)]
    prior: PriorArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum PriorArg {
    Uniform,
    Histogram,
}

impl FitArgs {
    fn config(&self) -> ModelConfig {
        ModelConfig {
            t_max_s: self.t_max,
            sigma_min_s: self.sigma_min,
            prior: GaussianPrior {
                n0: self.prior_n0,
                sigma0_s: self.prior_sigma0,
            },
            prior_mode: match self.prior {
                PriorArg::Uniform => PriorMode::Uniform,
                PriorArg::Histogram => PriorMode::Histogram,
            },
        }
    }
}

#[derive(Args)]
struct LearnArgs {
    /// Dag file, or builtin:<race>
    #[arg(long)]
    dag: String,
    /// Replay log (repeatable)
    #[arg(long, required = true)]
    replays: Vec<PathBuf>,
    /// Model file to write (stdout if absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum PredictFormat {
    Csv,
    Lines,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Game time in seconds
    #[arg(long)]
    time: u32,
    /// Observed buildings, e.g. gateway+cybernetics_core or gateway:2,pylon
    #[arg(long, default_value = "")]
    obs: String,
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[arg(long, value_enum, default_value_t = PredictFormat::Csv)]
    format: PredictFormat,
    /// Re-target the model onto this dag instead of the embedded one
    #[arg(long)]
    dag: Option<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Fitted model: runs a noise sweep over the replays
    #[arg(long, conflicts_with_all = ["dag", "folds"])]
    model: Option<PathBuf>,
    /// Dag for cross-validation, [label=]path; an unlabeled dag serves every match-up
    #[arg(long)]
    dag: Vec<String>,
    /// Replay log, [label=]path; the label names the match-up (default: file stem)
    #[arg(long, required = true)]
    replays: Vec<String>,
    /// Comma-separated probabilities of hiding each building
    #[arg(long, value_delimiter = ',', default_value = "0")]
    noise: Vec<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, env = "BTPREDICT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Print the per-match-up table with average, min and max rows
    #[arg(long)]
    summary: bool,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, env = "BTPREDICT_SEED", default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Data(String),
    NoCompatible(String),
}

type Outcome = Result<(), Failure>;

fn data<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Data(format!("{context}: {e}"))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(data(&path.display().to_string()))
}

fn load_dag(spec: &str) -> Result<Arc<TechDag>, Failure> {
    if let Some(race) = spec.strip_prefix("builtin:") {
        let race: Race = race.parse().map_err(|e| Failure::Usage(format!("{e}")))?;
        return Ok(Arc::new(bundled_dag(race)));
    }
    let text = read(Path::new(spec))?;
    load_tech_dag(&text).map(Arc::new).map_err(data(spec))
}

fn load_replays(path: &Path, dag: &TechDag) -> Result<Vec<Replay>, Failure> {
    let text = read(path)?;
    parse_replay_log(&text, dag).map_err(data(&path.display().to_string()))
}

fn load_model_file(path: &Path, dag: Option<&str>) -> Result<Model, Failure> {
    let text = read(path)?;
    let context = path.display().to_string();
    match dag {
        Some(spec) => load_model(&text, &load_dag(spec)?).map_err(data(&context)),
        None => load_model_embedded(&text).map_err(data(&context)),
    }
}

fn split_label(arg: &str) -> (Option<&str>, &str) {
    match arg.split_once('=') {
        Some((label, path)) if !label.is_empty() => (Some(label), path),
        _ => (None, arg),
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => std::fs::write(p, text).map_err(data(&p.display().to_string())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dag_stats(spec: &str) -> Outcome {
    let dag = load_dag(spec)?;
    println!("race {}", dag.race());
    println!("buildings {}", dag.len());
    for (label, dup) in [("build_trees_no_dup", false), ("build_trees_dup", true)] {
        match dag.enumerate_build_trees_capped(dup, DEFAULT_ENUMERATION_CAP) {
            Ok(trees) => println!("{label} {}", trees.len()),
            Err(_) => println!("{label} over-cap {DEFAULT_ENUMERATION_CAP}"),
        }
    }
    Ok(())
}

fn learn(args: &LearnArgs) -> Outcome {
    let dag = load_dag(&args.dag)?;
    let mut replays = Vec::new();
    for path in &args.replays {
        replays.extend(load_replays(path, &dag)?);
    }
    let model = fit_model(&replays, dag, args.fit.config()).map_err(data("learn"))?;
    let repairs: u32 = replays.iter().map(Replay::repairs).sum();
    eprintln!(
        "fitted {} build trees from {} replays ({} missing prerequisites inserted)",
        model.len(),
        replays.len(),
        repairs
    );
    write_out(args.out.as_deref(), &save_model(&model))
}

fn predict(args: &PredictArgs) -> Outcome {
    let model = load_model_file(&args.model, args.dag.as_deref())?;
    let dag = model.dag().clone();
    let obs = dag.parse_observation(&args.obs).map_err(data("--obs"))?;
    let post = match posterior(&model, args.time, &obs) {
        Ok(p) => p,
        Err(e @ InferenceError::NoCompatibleTree(_)) => return Err(Failure::NoCompatible(e.to_string())),
        Err(e) => return Err(Failure::Data(e.to_string())),
    };
    match args.format {
        PredictFormat::Csv => {
            println!("rank,probability,tree");
            for (i, (bt, p)) in post.top(args.top).iter().enumerate() {
                println!("{},{p},{}", i + 1, dag.format_tree(bt));
            }
        }
        PredictFormat::Lines => {
            for (bt, p) in post.top(args.top) {
                println!("{p:.6} {}", dag.format_tree(bt));
            }
        }
    }
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Outcome {
    for &p in &args.noise {
        if !(0.0..=1.0).contains(&p) {
            return Err(Failure::Usage(format!("noise level {p} outside [0, 1]")));
        }
    }
    let options = EvalOptions {
        seed: args.seed,
        jobs: args.jobs.max(1),
    };
    let report = if let Some(path) = &args.model {
        let model = load_model_file(path, None)?;
        let mut replays = Vec::new();
        for spec in &args.replays {
            replays.extend(load_replays(Path::new(split_label(spec).1), model.dag())?);
        }
        noise_sweep(&model, &replays, &args.noise, &options).map_err(data("evaluate"))?
    } else {
        let folds = args.folds.unwrap_or(10);
        let mut default_dag = None;
        let mut labeled = Vec::new();
        for spec in &args.dag {
            match split_label(spec) {
                (Some(label), path) => labeled.push((label.to_string(), load_dag(path)?)),
                (None, path) => default_dag = Some(load_dag(path)?),
            }
        }
        let mut corpus = Vec::new();
        for spec in &args.replays {
            let (label, path) = split_label(spec);
            let matchup = match label {
                Some(l) => l.to_string(),
                None => Path::new(path)
                    .file_stem()
                    .map_or_else(|| path.to_string(), |s| s.to_string_lossy().into_owned()),
            };
            let dag = labeled
                .iter()
                .find(|(l, _)| *l == matchup)
                .map(|(_, d)| d.clone())
                .or_else(|| default_dag.clone())
                .ok_or_else(|| Failure::Usage(format!("no --dag for match-up {matchup}")))?;
            let replays = load_replays(Path::new(path), &dag)?;
            corpus.push(Stratum { matchup, dag, replays });
        }
        let mut report = MetricsReport::default();
        for &p in &args.noise {
            report.extend(cross_validate(&corpus, folds, p, args.fit.config(), &options).map_err(data("evaluate"))?);
        }
        report
    };
    print!("{}", if args.summary { report.to_summary_csv() } else { report.to_csv() });
    Ok(())
}

fn generate(args: &GenerateArgs) -> Outcome {
    let model = load_model_file(&args.model, None)?;
    let replays = generate_synthetic_replays(&model, args.n, args.seed).map_err(data("generate"))?;
    print!("{}", write_replay_log(&replays, model.dag()));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Dag(DagCommand::Stats { dag }) => dag_stats(dag),
        Command::Learn(a) => learn(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Generate(a) => generate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_DATA)
        }
        Err(Failure::NoCompatible(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_NO_COMPATIBLE)
        }
    }
}
