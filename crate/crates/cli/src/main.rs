use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eyetask::context_map::{
    build_fused_matrix, emit_projection, select_features, smacof_embed, subsample_rows, CorrelationDistance,
    SmacofParams,
};
use eyetask::eval::{render_report, Level};
use eyetask::gaze_data::{ingest_trial, load_manifest};
use eyetask::pipeline::{
    evaluate_manifest, predict_trial, train_from_manifest, ClassifierKind, Gamma, KernelKind,
};
use eyetask::preprocess::{apply_standardizer, drop_invalid, fit_standardizer};
use eyetask::synth::{generate, write_corpus, SynthConfig};
use eyetask::{Dataset, Error, Field, Matrix, ModelFile, RunConfig, TaskLabel};

const SEED_ENV: &str = "EYETASK_SEED";

#[derive(Parser)]
#[command(name = "eyetask", version, about = "Classify visual tasks from eye-tracking recordings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus of trial CSVs plus a manifest.
    Synth(SynthArgs),
    /// Project samples and variables into one map and rank features.
    Explore(ExploreArgs),
    /// Train a classifier and write a model file.
    Train(TrainArgs),
    /// Predict the task of one trial file.
    Predict(PredictArgs),
    /// Score a saved model on every trial of a manifest.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory; created if missing.
    out_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    users: usize,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    /// Defaults to $EYETASK_SEED, then 42.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ExploreArgs {
    manifest: PathBuf,
    /// SVG output; the coordinates go to a sibling .csv.
    #[arg(long, short)]
    out: PathBuf,
    /// Number of features to select.
    #[arg(short, default_value_t = 5)]
    k: usize,
    /// Sample rows embedded alongside the variables.
    #[arg(long, default_value_t = 2000)]
    max_rows: usize,
    /// Map correlation r to (1 - r) / 2 instead of 1 - |r|.
    #[arg(long)]
    signed: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated class names, in label order.
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
}

#[derive(Args)]
struct TrainArgs {
    manifest: PathBuf,
    /// Model output path.
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value_t = LevelArg::Trial)]
    level: LevelArg,
}

/// Overrides for [`RunConfig`]; unset flags keep the config file or default value.
#[derive(Args)]
struct RunArgs {
    /// TOML file with RunConfig keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    /// svm or adaboost.
    #[arg(long)]
    classifier: Option<ClassifierKind>,
    #[arg(long = "c")]
    c: Option<f64>,
    /// linear or rbf.
    #[arg(long)]
    kernel: Option<KernelKind>,
    /// `scale` or a positive number.
    #[arg(long)]
    gamma: Option<Gamma>,
    #[arg(long)]
    tol: Option<f64>,
    /// Row cap for SVM training, 0 for none.
    #[arg(long)]
    svm_max_rows: Option<usize>,
    #[arg(long)]
    n_estimators: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Train each tree on a weighted bootstrap sample.
    #[arg(long)]
    resample: bool,
    #[arg(long)]
    unweighted_vote: bool,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    validation_fraction: Option<f64>,
    /// Shuffle without per-class stratification.
    #[arg(long)]
    no_stratify: bool,
    /// Keep every trial whole inside one split.
    #[arg(long)]
    split_by_trial: bool,
    /// Fit the standardizer on all rows before splitting.
    #[arg(long)]
    paper_order: bool,
    /// Defaults to the config file, then $EYETASK_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PredictArgs {
    model: PathBuf,
    trial: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    model: PathBuf,
    manifest: PathBuf,
    /// Write the report here as text, plus a sibling .csv.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LevelArg::Trial)]
    level: LevelArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Sample,
    Trial,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Level {
        match l {
            LevelArg::Sample => Level::Sample,
            LevelArg::Trial => Level::Trial,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Shape { .. } => 2,
        Error::Training(_) | Error::Weight(_) => 4,
        _ => 3,
    }
}

fn env_seed() -> Result<Option<u64>, Error> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn read_config(path: &Path) -> Result<(RunConfig, bool), Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let has_seed = table.contains_key("seed");
    let cfg = table
        .try_into()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok((cfg, has_seed))
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, Error> {
        let (mut cfg, config_seed) = match &self.config {
            Some(path) => read_config(path)?,
            None => (RunConfig::default(), false),
        };
        if let Some(v) = self.labels {
            cfg.labels = v;
        }
        if let Some(v) = self.features {
            cfg.features = v;
        }
        if let Some(v) = self.classifier {
            cfg.classifier = v;
        }
        if let Some(v) = self.c {
            cfg.c = v;
        }
        if let Some(v) = self.kernel {
            cfg.kernel = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.svm_max_rows {
            cfg.svm_max_rows = v;
        }
        if let Some(v) = self.n_estimators {
            cfg.n_estimators = v;
        }
        if let Some(v) = self.max_depth {
            cfg.max_depth = v;
        }
        if let Some(v) = self.test_fraction {
            cfg.test_fraction = v;
        }
        if let Some(v) = self.validation_fraction {
            cfg.validation_fraction = v;
        }
        cfg.resample |= self.resample;
        cfg.unweighted_vote |= self.unweighted_vote;
        cfg.split_by_trial |= self.split_by_trial;
        cfg.paper_order |= self.paper_order;
        if self.no_stratify {
            cfg.stratified = false;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        } else if !config_seed {
            if let Some(seed) = env_seed()? {
                cfg.seed = seed;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn synth(args: SynthArgs) -> Result<(), Error> {
    let cfg = SynthConfig {
        n_users: args.users,
        samples_per_trial: args.samples,
        noise_scale: args.noise,
        seed: match args.seed {
            Some(s) => s,
            None => env_seed()?.unwrap_or(SynthConfig::default().seed),
        },
        ..Default::default()
    };
    cfg.validate()?;
    let trials = generate(&cfg)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|source| Error::Io {
        path: args.out_dir.clone(),
        source,
    })?;
    let manifest = write_corpus(&args.out_dir, &trials, &cfg.label_set()?)?;
    println!("{} trials written", trials.len());
    println!("manifest: {}", manifest.display());
    Ok(())
}

/// All seven CSV columns, time included, one row per valid sample.
fn explore_dataset(trials: &[eyetask::Trial], labels: &eyetask::LabelSet) -> Result<Dataset, Error> {
    let mut names = vec!["time".to_string()];
    names.extend(Field::ALL.iter().map(|f| f.name().to_string()));
    let mut data = Vec::new();
    let mut tasks: Vec<TaskLabel> = Vec::new();
    for t in trials {
        for s in &t.samples {
            data.push(s.time_ms as f64);
            data.extend(Field::ALL.iter().map(|&f| s.get(f).unwrap_or(f64::NAN)));
            tasks.push(t.task);
        }
    }
    if tasks.is_empty() {
        return Err(Error::EmptyDataset("no valid samples in any trial".into()));
    }
    let rows = Matrix::from_vec(tasks.len(), names.len(), data)?;
    Dataset::from_labeled_rows(names, rows, tasks, labels.clone())
}

fn explore(args: ExploreArgs) -> Result<(), Error> {
    let labels = match args.labels {
        Some(names) => eyetask::LabelSet::new(names)?,
        None => eyetask::LabelSet::default(),
    };
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let n_vars = Field::ALL.len() + 1;
    if args.k == 0 || args.k > n_vars {
        return Err(Error::Config(format!("k must lie in 1..={n_vars}, got {}", args.k)));
    }
    if args.max_rows == 0 {
        return Err(Error::Config("max-rows must be positive".into()));
    }
    let trials = drop_invalid(load_manifest(&args.manifest, &labels)?);
    let all = explore_dataset(&trials, &labels)?;
    let selected = select_features(&all, args.k)?;

    let sample = subsample_rows(&all, args.max_rows, seed);
    let scaled = apply_standardizer(&fit_standardizer(&sample)?, &sample)?;
    let mapping = if args.signed {
        CorrelationDistance::Signed
    } else {
        CorrelationDistance::Absolute
    };
    let fused = build_fused_matrix(&scaled, mapping)?;
    let projection = smacof_embed(
        &fused,
        &SmacofParams {
            seed,
            ..Default::default()
        },
    )?;
    let csv = emit_projection(&projection, &args.out)?;
    eprintln!(
        "{} rows and {} variables embedded, stress {:.4} after {} iterations",
        sample.len(),
        n_vars,
        projection.stress,
        projection.iterations
    );
    eprintln!("map: {}", args.out.display());
    eprintln!("coordinates: {}", csv.display());
    for name in selected {
        println!("{name}");
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), Error> {
    let cfg = args.run.resolve()?;
    let outcome = train_from_manifest(&args.manifest, &cfg, args.level.into())?;
    outcome.model.save(&args.out)?;
    println!("classifier: {}", outcome.model.payload.kind());
    println!("fitted rows: {}", outcome.fitted_rows);
    println!("train accuracy: {:.3}", outcome.train.accuracy);
    println!(
        "validation accuracy: {:.3} ({} {}s)",
        outcome.validation.accuracy, outcome.validation.n_units, outcome.validation.level
    );
    println!(
        "test accuracy: {:.3} ({} {}s)",
        outcome.test.accuracy, outcome.test.n_units, outcome.test.level
    );
    println!("model: {}", args.out.display());
    Ok(())
}

fn predict(args: PredictArgs) -> Result<(), Error> {
    let model = ModelFile::load(&args.model)?;
    let trial = ingest_trial(&args.trial, "trial", TaskLabel::new(0))?;
    let p = predict_trial(&model, &trial)?;
    println!("{}", model.label_set.name(p.label));
    for (name, count) in model.label_set.names().iter().zip(&p.tally) {
        println!("{name}\t{count}");
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let model = ModelFile::load(&args.model)?;
    let report = evaluate_manifest(&model, &args.manifest, args.level.into())?;
    print!("{}", report.to_text());
    if let Some(out) = args.out {
        let csv = render_report(&report, &out)?;
        eprintln!("report: {} and {}", out.display(), csv.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Explore(a) => explore(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
