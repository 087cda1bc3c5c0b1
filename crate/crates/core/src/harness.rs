//! Experiment runner comparing the two explainers.
//!
//! One [`ExperimentConfig`] yields one [`ExperimentResult`]: accuracy on the
//! test split, mean per-instance wall-clock time of each explainer, mean
//! model-evaluation counts, and the mean top-k overlap. Everything except the
//! timings is a pure function of the config.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, LabeledCorpus, Vocabulary};
use crate::error::{Error, Result};
use crate::explain::{self, Explanation, LimeConfig, QlimeConfig};
use crate::features::BitVector;
use crate::model::{self, LogisticModel, TrainConfig};
use crate::statevec::MAX_QUBITS;

/// Longest review snippet in the instance report, in characters.
pub const SNIPPET_CHARS: usize = 200;

pub const CSV_HEADER: [&str; 9] = [
    "max_features",
    "stopwords",
    "shots",
    "accuracy",
    "lime_time",
    "qlime_time",
    "overlap",
    "lime_evals",
    "qlime_evals",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_docs: usize,
    pub planted_weights: Vec<f64>,
    pub seed: u64,
}

impl SynthSpec {
    /// `n_docs` documents over `vocab_size` tokens with the default planted
    /// weights.
    pub fn new(n_docs: usize, vocab_size: usize, seed: u64) -> Self {
        Self {
            n_docs,
            planted_weights: corpus::default_planted_weights(vocab_size),
            seed,
        }
    }

    pub fn generate(&self) -> Result<LabeledCorpus> {
        corpus::synth_corpus(self.n_docs, &self.planted_weights, self.seed)
    }
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self::new(500, 15, 7)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DatasetSource {
    Csv { path: PathBuf, limit: Option<usize> },
    Synth(SynthSpec),
}

impl DatasetSource {
    /// CSV rows are subsampled and split with `seed`; synthetic corpora use
    /// their own seed.
    pub fn load(&self, seed: u64) -> Result<LabeledCorpus> {
        match self {
            DatasetSource::Csv { path, limit } => corpus::load_dataset(path, *limit, seed),
            DatasetSource::Synth(spec) => spec.generate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub max_features: usize,
    pub stopwords: bool,
    pub shots: Option<usize>,
    pub n_instances: usize,
    pub top_k: usize,
    pub seed: u64,
    pub lime: LimeConfig,
    /// `shots` above overrides `qlime.shots`; the per-instance seeds of both
    /// explainers are derived from `seed`.
    pub qlime: QlimeConfig,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSource) -> Self {
        Self {
            dataset,
            max_features: 15,
            stopwords: true,
            shots: None,
            n_instances: 5,
            top_k: 5,
            seed: 0,
            lime: LimeConfig::default(),
            qlime: QlimeConfig::default(),
            train: TrainConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_features == 0 || self.max_features > MAX_QUBITS {
            return Err(Error::Argument(format!(
                "max_features {} out of range (1..={MAX_QUBITS})",
                self.max_features
            )));
        }
        if self.n_instances == 0 || self.top_k == 0 {
            return Err(Error::Argument("n_instances and top_k must be at least 1".into()));
        }
        if self.shots == Some(0) {
            return Err(Error::Argument("shots must be at least 1".into()));
        }
        Ok(())
    }

    fn label(&self) -> String {
        format!(
            "(max_features={}, stopwords={}, shots={})",
            self.max_features,
            python_bool(self.stopwords),
            shots_label(self.shots)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    /// Index of the document in the corpus.
    pub document: usize,
    pub snippet: String,
    pub popcount: usize,
    pub lime_top: Vec<String>,
    pub qlime_top: Vec<String>,
    pub overlap: usize,
    pub lime_evals: u64,
    pub qlime_evals: u64,
    pub lime_time: f64,
    pub qlime_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub max_features: usize,
    pub stopwords: bool,
    pub shots: Option<usize>,
    pub top_k: usize,
    pub accuracy: f64,
    /// Mean seconds per instance.
    pub lime_time: f64,
    pub qlime_time: f64,
    pub overlap: f64,
    pub lime_evals: f64,
    pub qlime_evals: f64,
    pub vocabulary: Vec<String>,
    pub per_instance: Vec<InstanceResult>,
}

impl ExperimentResult {
    /// Total top-k overlap over all instances; `overlap` is this divided by
    /// the instance count.
    pub fn overlap_sum(&self) -> usize {
        self.per_instance.iter().map(|i| i.overlap).sum()
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    values.sum::<f64>() / n as f64
}

/// Runs both explainers on `n_instances` random test instances.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let ctx = |e: Error| e.with_context(cfg.label());
    cfg.validate().map_err(ctx)?;
    let corpus = cfg.dataset.load(cfg.seed).map_err(ctx)?;
    let vocab = Vocabulary::build(&corpus, cfg.max_features, cfg.stopwords).map_err(ctx)?;
    let features: Vec<BitVector> = corpus
        .documents()
        .iter()
        .map(|d| vocab.featurize(&d.text))
        .collect();

    let split = |idx: &[usize]| -> (Vec<BitVector>, Vec<u8>) {
        idx.iter()
            .map(|&i| (features[i].clone(), corpus.documents()[i].label))
            .unzip()
    };
    let (train_x, train_y) = split(corpus.train_indices());
    let (test_x, test_y) = split(corpus.test_indices());
    let model = model::train_logistic(&train_x, &train_y, &cfg.train).map_err(ctx)?;
    if test_x.is_empty() {
        return Err(ctx(Error::Corpus("test split is empty".into())));
    }
    let accuracy = model.accuracy(&test_x, &test_y).map_err(ctx)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut candidates = corpus.test_indices().to_vec();
    candidates.shuffle(&mut rng);
    let chosen: Vec<usize> = candidates
        .into_iter()
        .filter(|&i| features[i].popcount() > 0)
        .take(cfg.n_instances)
        .collect();
    if chosen.is_empty() {
        return Err(ctx(Error::Corpus(
            "no test instance has a present feature".into(),
        )));
    }

    let mut per_instance = Vec::with_capacity(chosen.len());
    for doc in chosen {
        let x = &features[doc];
        let lime_cfg = LimeConfig {
            seed: rng.random(),
            ..cfg.lime.clone()
        };
        let qlime_cfg = QlimeConfig {
            seed: rng.random(),
            shots: cfg.shots,
            ..cfg.qlime.clone()
        };
        let (lime, lime_time) =
            timed(&model, |m| explain::lime_explain(m, x, &vocab, &lime_cfg)).map_err(ctx)?;
        let (qlime, qlime_time) =
            timed(&model, |m| explain::qlime_explain(m, x, &vocab, &qlime_cfg)).map_err(ctx)?;

        let flippable = x.iter().filter(|&b| b == qlime_cfg.flip_mode.source_bit()).count();
        let expected_qlime = 1 + (qlime_cfg.repeats * flippable) as u64;
        if lime.model_evals != lime_cfg.n_perturbations as u64 || qlime.model_evals != expected_qlime {
            return Err(ctx(Error::Invariant(format!(
                "document {doc}: LIME used {} evaluations (expected {}), Q-LIME used {} (expected {expected_qlime})",
                lime.model_evals, lime_cfg.n_perturbations, qlime.model_evals
            ))));
        }

        per_instance.push(InstanceResult {
            document: doc,
            snippet: snippet(&corpus.documents()[doc].text),
            popcount: x.popcount(),
            lime_top: owned(explain::top_k(&lime, cfg.top_k)),
            qlime_top: owned(explain::top_k(&qlime, cfg.top_k)),
            overlap: explain::overlap(&lime, &qlime, cfg.top_k).map_err(ctx)?,
            lime_evals: lime.model_evals,
            qlime_evals: qlime.model_evals,
            lime_time,
            qlime_time,
        });
    }

    Ok(ExperimentResult {
        max_features: cfg.max_features,
        stopwords: cfg.stopwords,
        shots: cfg.shots,
        top_k: cfg.top_k,
        accuracy,
        lime_time: mean(per_instance.iter().map(|i| i.lime_time)),
        qlime_time: mean(per_instance.iter().map(|i| i.qlime_time)),
        overlap: mean(per_instance.iter().map(|i| i.overlap as f64)),
        lime_evals: mean(per_instance.iter().map(|i| i.lime_evals as f64)),
        qlime_evals: mean(per_instance.iter().map(|i| i.qlime_evals as f64)),
        vocabulary: vocab.tokens().to_vec(),
        per_instance,
    })
}

/// Runs one explainer, checking its reported evaluation count against the
/// model's counter.
fn timed<F>(model: &LogisticModel, explain: F) -> Result<(Explanation, f64)>
where
    F: FnOnce(&LogisticModel) -> Result<Explanation>,
{
    let before = model.eval_count();
    let start = Instant::now();
    let explanation = explain(model)?;
    let elapsed = start.elapsed().as_secs_f64();
    let counted = model.eval_count() - before;
    if counted != explanation.model_evals {
        return Err(Error::Invariant(format!(
            "{:?} reported {} model evaluations but the model counted {counted}",
            explanation.method, explanation.model_evals
        )));
    }
    Ok((explanation, elapsed))
}

fn owned(tokens: Vec<&str>) -> Vec<String> {
    tokens.into_iter().map(str::to_owned).collect()
}

fn snippet(text: &str) -> String {
    let flat: String = text
        .chars()
        .map(|c| if c.is_whitespace() { ' ' } else { c })
        .collect();
    if flat.chars().count() <= SNIPPET_CHARS {
        return flat;
    }
    let mut cut: String = flat.chars().take(SNIPPET_CHARS - 3).collect();
    cut.push_str("...");
    cut
}

fn python_bool(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

fn shots_label(shots: Option<usize>) -> String {
    shots.map_or_else(|| "None".to_owned(), |s| s.to_string())
}

/// The Cartesian product of configurations swept by `bench`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub max_features: Vec<usize>,
    pub stopwords: Vec<bool>,
    pub shots: Vec<Option<usize>>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            max_features: vec![5, 10, 15],
            stopwords: vec![true, false],
            shots: vec![None, Some(100)],
        }
    }
}

impl Grid {
    /// Configurations in sweep order: max_features, then stopwords, then
    /// shots.
    pub fn configs(&self, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &max_features in &self.max_features {
            for &stopwords in &self.stopwords {
                for &shots in &self.shots {
                    out.push(ExperimentConfig {
                        max_features,
                        stopwords,
                        shots,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

/// Parses `max_features=5,10,15` (the key is optional).
pub fn parse_max_features(spec: &str) -> Result<Vec<usize>> {
    let values = spec.strip_prefix("max_features=").unwrap_or(spec);
    parse_list(values, |v| {
        v.parse::<usize>()
            .ok()
            .filter(|&k| (1..=MAX_QUBITS).contains(&k))
    })
}

/// Parses `on,off` (also accepts true/false).
pub fn parse_stopwords(spec: &str) -> Result<Vec<bool>> {
    parse_list(spec, |v| match v.to_ascii_lowercase().as_str() {
        "on" | "true" => Some(true),
        "off" | "false" => Some(false),
        _ => None,
    })
}

/// Parses `none,100`.
pub fn parse_shots(spec: &str) -> Result<Vec<Option<usize>>> {
    parse_list(spec, parse_shot)
}

pub fn parse_shot(v: &str) -> Option<Option<usize>> {
    if v.eq_ignore_ascii_case("none") {
        return Some(None);
    }
    v.parse::<usize>().ok().filter(|&s| s > 0).map(Some)
}

fn parse_list<T>(spec: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let values: Vec<T> = spec
        .split(',')
        .map(str::trim)
        .map(|v| parse(v).ok_or_else(|| Error::Argument(format!("invalid value {v:?} in {spec:?}"))))
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::Argument(format!("empty list {spec:?}")));
    }
    Ok(values)
}

/// Runs every configuration of `grid`, sequentially so per-instance timings
/// are uncontended.
pub fn run_sweep(base: &ExperimentConfig, grid: &Grid) -> Result<Vec<ExperimentResult>> {
    grid.configs(base).iter().map(run_experiment).collect()
}

/// One formatted CSV row. Fields are kept as the exact strings written.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRow {
    pub max_features: String,
    pub stopwords: String,
    pub shots: String,
    pub accuracy: String,
    pub lime_time: String,
    pub qlime_time: String,
    pub overlap: String,
    pub lime_evals: String,
    pub qlime_evals: String,
}

impl From<&ExperimentResult> for ResultRow {
    fn from(r: &ExperimentResult) -> Self {
        Self {
            max_features: r.max_features.to_string(),
            stopwords: python_bool(r.stopwords).to_owned(),
            shots: shots_label(r.shots),
            accuracy: format!("{:.2}", r.accuracy),
            lime_time: format!("{:.3}", r.lime_time),
            qlime_time: format!("{:.3}", r.qlime_time),
            overlap: format!("{:.2}", r.overlap),
            lime_evals: format!("{:.2}", r.lime_evals),
            qlime_evals: format!("{:.2}", r.qlime_evals),
        }
    }
}

/// Writes the results table: times with 3 decimals, everything else with 2.
pub fn emit_results_csv<W: Write>(results: &[ExperimentResult], sink: W) -> Result<()> {
    if results.is_empty() {
        return Err(Error::Argument("no results to write".into()));
    }
    let mut writer = csv::Writer::from_writer(sink);
    for r in results {
        writer.serialize(ResultRow::from(r))?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_results_csv<R: std::io::Read>(source: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(source);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::Argument(format!(
            "unexpected results header {}",
            header.join(",")
        )));
    }
    Ok(reader.deserialize().collect::<Result<_, csv::Error>>()?)
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn token_cell(tokens: &[String], shared: &[String]) -> String {
    tokens
        .iter()
        .map(|t| {
            if shared.contains(t) {
                format!("**{}**", md_escape(t))
            } else {
                md_escape(t)
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Writes a markdown table of per-instance top-k lists with shared tokens in
/// bold.
pub fn emit_instance_report<W: Write>(result: &ExperimentResult, mut sink: W) -> Result<()> {
    if result.per_instance.is_empty() {
        return Err(Error::Argument("result has no instances".into()));
    }
    let k = result.top_k;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "### max_features={}, stopwords={}, shots={}\n",
        result.max_features,
        python_bool(result.stopwords),
        shots_label(result.shots)
    );
    let _ = writeln!(
        out,
        "| # | Review snippet | LIME top-{k} | Q-LIME π top-{k} | Overlap |"
    );
    out.push_str("|---|---|---|---|---|\n");
    for (i, inst) in result.per_instance.iter().enumerate() {
        let shared: Vec<String> = inst
            .lime_top
            .iter()
            .filter(|t| inst.qlime_top.contains(t))
            .cloned()
            .collect();
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            i + 1,
            md_escape(&inst.snippet),
            token_cell(&inst.lime_top, &shared),
            token_cell(&inst.qlime_top, &shared),
            inst.overlap
        );
    }
    out.push('\n');
    sink.write_all(out.as_bytes()).map_err(|source| Error::Io {
        path: PathBuf::from("<report>"),
        source,
    })
}
