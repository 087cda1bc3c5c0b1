use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qlime_core::explain::{self, Explanation};
use qlime_core::harness::{self, DatasetSource, ExperimentConfig, Grid, SynthSpec};
use qlime_core::{
    corpus, model, CoFeaturePolicy, Error, ErrorKind, LimeConfig, QlimeConfig, SavedModel, Simulation,
    Vocabulary,
};

#[derive(Debug, Parser)]
#[command(name = "qlime", version, about = "Quantum-inspired local explanations for bag-of-words classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a logistic-regression model on a `text,label` CSV.
    Train(TrainArgs),
    /// Explain one prediction of a saved model.
    Explain(ExplainArgs),
    /// Sweep configurations and compare LIME with Q-LIME π.
    Bench(BenchArgs),
    /// Write a synthetic `text,label` CSV with planted token weights.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn enabled(self) -> bool {
        matches!(self, Toggle::On)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Qlime,
    Lime,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Quantum,
    Hold,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Dense,
    Product,
}

impl From<BackendArg> for Simulation {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Dense => Simulation::Dense,
            BackendArg::Product => Simulation::Product,
        }
    }
}

/// `none` or a positive shot count.
#[derive(Debug, Clone, Copy)]
struct Shots(Option<usize>);

fn parse_shots(s: &str) -> Result<Shots, String> {
    harness::parse_shot(s)
        .map(Shots)
        .ok_or_else(|| format!("expected a positive count or `none`, got {s:?}"))
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 15)]
    max_features: usize,
    #[arg(long, value_enum, default_value = "on")]
    stopwords: Toggle,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep a seeded random subset of this many rows.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    text: String,
    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,
    #[arg(long, value_parser = parse_shots, default_value = "none")]
    shots: Shots,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturbed draws averaged per feature.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, value_enum, default_value = "quantum")]
    policy: PolicyArg,
    #[arg(long, default_value_t = 300)]
    perturbations: usize,
    /// Q-LIME state simulation.
    #[arg(long, value_enum, default_value = "dense")]
    backend: BackendArg,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// A `text,label` CSV, or `synth` for the built-in synthetic corpus.
    #[arg(long)]
    data: String,
    #[arg(long, default_value = "max_features=5,10,15")]
    grid: String,
    #[arg(long, default_value = "on,off")]
    stopwords: String,
    #[arg(long, default_value = "none,100")]
    shots: String,
    #[arg(long, default_value_t = 5)]
    instances: usize,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep a seeded random subset of this many CSV rows.
    #[arg(long)]
    limit: Option<usize>,
    /// Synthetic corpus size (with `--data synth`).
    #[arg(long, default_value_t = 500)]
    docs: usize,
    /// Synthetic vocabulary size (with `--data synth`).
    #[arg(long, default_value_t = 15)]
    vocab: usize,
    /// Results CSV; printed to stdout when omitted.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Markdown report of per-instance top-k lists.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Q-LIME state simulation.
    #[arg(long, value_enum, default_value = "dense")]
    backend: BackendArg,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    docs: usize,
    #[arg(long, default_value_t = 15)]
    vocab: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn finish<W: Write>(mut w: W, path: &Path) -> Result<(), Error> {
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn train(args: TrainArgs) -> Result<(), Error> {
    let corpus = corpus::load_dataset(&args.data, args.limit, args.seed)?;
    let vocab = Vocabulary::build(&corpus, args.max_features, args.stopwords.enabled())?;
    let featurize = |idx: &[usize]| -> (Vec<_>, Vec<u8>) {
        idx.iter()
            .map(|&i| {
                let doc = &corpus.documents()[i];
                (vocab.featurize(&doc.text), doc.label)
            })
            .unzip()
    };
    let (train_x, train_y) = featurize(corpus.train_indices());
    let (test_x, test_y) = featurize(corpus.test_indices());
    let cfg = model::TrainConfig {
        seed: args.seed,
        ..model::TrainConfig::default()
    };
    let model = model::train_logistic(&train_x, &train_y, &cfg)?;
    if !test_x.is_empty() {
        eprintln!(
            "test accuracy {:.3} on {} documents ({} features)",
            model.accuracy(&test_x, &test_y)?,
            test_x.len(),
            vocab.len()
        );
    }
    let mut out = create(&args.out)?;
    SavedModel::new(&model, &vocab).to_writer(&mut out)?;
    finish(out, &args.out)
}

fn explain(args: ExplainArgs) -> Result<(), Error> {
    let file = File::open(&args.model).map_err(|source| Error::Io {
        path: args.model.clone(),
        source,
    })?;
    let (model, vocab) = SavedModel::from_reader(io::BufReader::new(file))?.into_parts()?;
    let x = vocab.featurize(&args.text);

    let mut explanations: Vec<Explanation> = Vec::new();
    if matches!(args.method, MethodArg::Lime | MethodArg::Both) {
        let cfg = LimeConfig {
            n_perturbations: args.perturbations,
            seed: args.seed,
            ..LimeConfig::default()
        };
        explanations.push(explain::lime_explain(&model, &x, &vocab, &cfg)?);
    }
    if matches!(args.method, MethodArg::Qlime | MethodArg::Both) {
        let cfg = QlimeConfig {
            shots: args.shots.0,
            repeats: args.repeats,
            seed: args.seed,
            policy: match args.policy {
                PolicyArg::Quantum => CoFeaturePolicy::QuantumSampled,
                PolicyArg::Hold => CoFeaturePolicy::DeterministicHold,
            },
            simulation: args.backend.into(),
            ..QlimeConfig::default()
        };
        explanations.push(explain::qlime_explain(&model, &x, &vocab, &cfg)?);
    }
    if let [lime, qlime] = explanations.as_slice() {
        eprintln!("top-{} overlap: {}", args.top_k, explain::overlap(lime, qlime, args.top_k)?);
    }

    let explanations: Vec<Explanation> = explanations
        .into_iter()
        .map(|e| e.truncated(args.top_k))
        .collect();
    let stdout = io::stdout().lock();
    match explanations.as_slice() {
        [single] => serde_json::to_writer_pretty(stdout, single)?,
        many => serde_json::to_writer_pretty(stdout, many)?,
    }
    println!();
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Error> {
    let dataset = if args.data == "synth" {
        DatasetSource::Synth(SynthSpec::new(args.docs, args.vocab, args.seed))
    } else {
        DatasetSource::Csv {
            path: PathBuf::from(&args.data),
            limit: args.limit,
        }
    };
    let grid = Grid {
        max_features: harness::parse_max_features(&args.grid)?,
        stopwords: harness::parse_stopwords(&args.stopwords)?,
        shots: harness::parse_shots(&args.shots)?,
    };
    let mut base = ExperimentConfig {
        n_instances: args.instances,
        top_k: args.top_k,
        seed: args.seed,
        ..ExperimentConfig::new(dataset)
    };
    base.qlime.simulation = args.backend.into();

    let mut results = Vec::new();
    for cfg in grid.configs(&base) {
        let result = harness::run_experiment(&cfg)?;
        eprintln!(
            "max_features={:<2} stopwords={:<5} shots={:<4} accuracy={:.2} lime={:.4}s qlime={:.4}s overlap={:.2}",
            result.max_features,
            result.stopwords,
            result.shots.map_or("None".to_owned(), |s| s.to_string()),
            result.accuracy,
            result.lime_time,
            result.qlime_time,
            result.overlap
        );
        results.push(result);
    }

    match &args.csv {
        Some(path) => {
            let mut out = create(path)?;
            harness::emit_results_csv(&results, &mut out)?;
            finish(out, path)?;
        }
        None => harness::emit_results_csv(&results, io::stdout().lock())?,
    }
    if let Some(path) = &args.report {
        let mut out = create(path)?;
        for result in &results {
            harness::emit_instance_report(result, &mut out)?;
        }
        finish(out, path)?;
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), Error> {
    let corpus = SynthSpec::new(args.docs, args.vocab, args.seed).generate()?;
    let mut out = create(&args.out)?;
    corpus::write_dataset(corpus.documents(), &mut out)?;
    finish(out, &args.out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Train(args) => train(args),
        Command::Explain(args) => explain(args),
        Command::Bench(args) => bench(args),
        Command::Synth(args) => synth(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Invariant => 3,
            })
        }
    }
}
