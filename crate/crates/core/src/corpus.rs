//! Text ingestion and binary bag-of-words featurization.
//!
//! Tokenization: strip `<…>` tags, lowercase, split into maximal runs of
//! alphanumeric characters and keep runs of two or more characters. This is
//! why "don't" yields "don".

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::BitVector;
use crate::model::sigmoid;

static HTML_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^>]*>").unwrap());

static BUILTIN_STOPWORDS: LazyLock<StopwordList> =
    LazyLock::new(|| StopwordList::parse(include_str!("../data/stopwords.txt")));

/// Train fraction of every split.
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    /// Parses one token per line. Blank lines and lines starting with `#`
    /// are skipped; tokens are lowercased.
    pub fn parse(contents: &str) -> Self {
        let words = contents
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty() && !line.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::parse(&contents))
    }

    /// The list shipped with this crate.
    pub fn builtin() -> &'static StopwordList {
        &BUILTIN_STOPWORDS
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Tokenizes `text`, dropping builtin stopwords when `remove_stopwords` is set.
pub fn preprocess(text: &str, remove_stopwords: bool) -> Vec<String> {
    preprocess_with(text, remove_stopwords.then(StopwordList::builtin))
}

pub fn preprocess_with(text: &str, stopwords: Option<&StopwordList>) -> Vec<String> {
    let stripped = HTML_TAG.replace_all(text, "");
    let lowered = stripped.to_lowercase();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|tok| tok.chars().count() >= 2)
        .filter(|tok| !stopwords.is_some_and(|s| s.contains(tok)))
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub text: String,
    pub label: u8,
}

/// Documents plus a disjoint train/test partition of their indices.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    documents: Vec<Document>,
    train: Vec<usize>,
    test: Vec<usize>,
}

impl LabeledCorpus {
    /// Splits 80/20 by a seeded shuffle; `|train| = ⌈0.8·N⌉`.
    pub fn split(documents: Vec<Document>, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::split_with(documents, &mut rng)
    }

    fn split_with<R: Rng + ?Sized>(documents: Vec<Document>, rng: &mut R) -> Result<Self> {
        if let Some((i, doc)) = documents.iter().enumerate().find(|(_, d)| d.label > 1) {
            return Err(Error::Corpus(format!(
                "document {i} has label {}, expected 0 or 1",
                doc.label
            )));
        }
        let n = documents.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let n_train = train_size(n);
        let mut test = order.split_off(n_train);
        let mut train = order;
        train.sort_unstable();
        test.sort_unstable();
        Ok(Self {
            documents,
            train,
            test,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test
    }

    pub fn train_docs(&self) -> impl Iterator<Item = &Document> + '_ {
        self.train.iter().map(|&i| &self.documents[i])
    }

    pub fn test_docs(&self) -> impl Iterator<Item = &Document> + '_ {
        self.test.iter().map(|&i| &self.documents[i])
    }
}

/// `⌈0.8·n⌉`, computed exactly.
pub fn train_size(n: usize) -> usize {
    (4 * n).div_ceil(5)
}

/// Ordered token list; a token's position is its feature index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    max_features: usize,
    stopwords_removed: bool,
}

impl Vocabulary {
    /// Keeps the `max_features` tokens with the highest document frequency
    /// over the train split (ties go to the lexicographically smaller
    /// token), then orders them lexicographically.
    pub fn build(corpus: &LabeledCorpus, max_features: usize, remove_stopwords: bool) -> Result<Self> {
        if max_features == 0 {
            return Err(Error::Argument("max_features must be at least 1".into()));
        }
        if corpus.train.is_empty() {
            return Err(Error::Corpus("train split is empty".into()));
        }
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        for doc in corpus.train_docs() {
            let distinct: HashSet<String> = preprocess(&doc.text, remove_stopwords).into_iter().collect();
            for tok in distinct {
                *doc_freq.entry(tok).or_default() += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = doc_freq.into_iter().collect();
        ranked.sort_unstable_by(|(ta, fa), (tb, fb)| fb.cmp(fa).then_with(|| ta.cmp(tb)));
        ranked.truncate(max_features);
        let mut tokens: Vec<String> = ranked.into_iter().map(|(t, _)| t).collect();
        tokens.sort_unstable();
        let mut vocab = Self::from_tokens(tokens, remove_stopwords)?;
        vocab.max_features = max_features;
        Ok(vocab)
    }

    /// Wraps an existing token list, keeping its order.
    pub fn from_tokens(tokens: Vec<String>, stopwords_removed: bool) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if tok.chars().count() < 2 || *tok != tok.to_lowercase() {
                return Err(Error::Corpus(format!(
                    "vocabulary token {tok:?} must be lowercase with at least 2 characters"
                )));
            }
            if stopwords_removed && StopwordList::builtin().contains(tok) {
                return Err(Error::Corpus(format!("vocabulary token {tok:?} is a stopword")));
            }
            if index.insert(tok.clone(), i).is_some() {
                return Err(Error::Corpus(format!("duplicate vocabulary token {tok:?}")));
            }
        }
        Ok(Self {
            max_features: tokens.len(),
            tokens,
            index,
            stopwords_removed,
        })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn max_features(&self) -> usize {
        self.max_features
    }

    pub fn stopwords_removed(&self) -> bool {
        self.stopwords_removed
    }

    /// Presence vector of `tokens`; order and multiplicity are ignored.
    pub fn vectorize<S: AsRef<str>>(&self, tokens: &[S]) -> BitVector {
        let mut bits = BitVector::zeros(self.len());
        for tok in tokens {
            if let Some(i) = self.index_of(tok.as_ref()) {
                bits.set(i, true);
            }
        }
        bits
    }

    /// Tokenizes with this vocabulary's stopword setting, then vectorizes.
    pub fn featurize(&self, text: &str) -> BitVector {
        self.vectorize(&preprocess(text, self.stopwords_removed))
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    text: String,
    label: String,
}

/// Reads a `text,label` CSV.
///
/// With `limit`, a seeded uniform subset of that many rows is kept (in file
/// order) before the 80/20 split. Row numbers in errors count data rows from
/// 1, excluding the header.
pub fn load_dataset(path: &Path, limit: Option<usize>, seed: u64) -> Result<LabeledCorpus> {
    let ingest = |row: usize, message: String| Error::Ingestion {
        path: path.to_path_buf(),
        row,
        message,
    };
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let headers = reader.headers().map_err(|e| ingest(0, e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names != ["text", "label"] {
        return Err(ingest(0, format!("expected header `text,label`, found `{}`", names.join(","))));
    }

    let mut documents = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| ingest(row, e.to_string()))?;
        if record.len() != 2 {
            return Err(ingest(row, format!("expected 2 fields, found {}", record.len())));
        }
        let parsed: CsvRow = record
            .deserialize(Some(&headers))
            .map_err(|e| ingest(row, e.to_string()))?;
        let label = match parsed.label.trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(ingest(row, format!("label {other:?} is not 0 or 1"))),
        };
        documents.push(Document {
            text: parsed.text,
            label,
        });
    }
    if documents.is_empty() {
        return Err(Error::Corpus(format!("{} contains no rows", path.display())));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if let Some(limit) = limit {
        if limit == 0 {
            return Err(Error::Argument("dataset limit must be at least 1".into()));
        }
        if limit < documents.len() {
            let mut keep = index::sample(&mut rng, documents.len(), limit).into_vec();
            keep.sort_unstable();
            let mut all: Vec<Option<Document>> = documents.into_iter().map(Some).collect();
            documents = keep.into_iter().map(|i| all[i].take().unwrap()).collect();
        }
    }
    LabeledCorpus::split_with(documents, &mut rng)
}

/// Writes documents as a `text,label` CSV.
pub fn write_dataset<W: std::io::Write>(documents: &[Document], sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    for doc in documents {
        writer.serialize(doc)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Token pool for synthetic corpora. Index `i` carries planted weight `i`.
pub const SYNTH_TOKENS: [&str; 20] = [
    "brilliant",
    "awful",
    "excellent",
    "terrible",
    "wonderful",
    "acting",
    "boring",
    "cast",
    "dull",
    "ending",
    "film",
    "great",
    "horrible",
    "masterpiece",
    "movie",
    "plot",
    "scene",
    "script",
    "story",
    "worst",
];

/// Planted weights with five dominant coordinates (±4, alternating sign)
/// followed by weak ±0.25 coordinates.
pub fn default_planted_weights(vocab_size: usize) -> Vec<f64> {
    (0..vocab_size)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            if i < 5 {
                4.0 * sign
            } else {
                0.25 * sign
            }
        })
        .collect()
}

/// A labelled corpus with known structure.
///
/// Each document contains each of the first `planted_weights.len()` entries
/// of [`SYNTH_TOKENS`] independently with probability ½, and is positive with
/// probability `σ(w·x + b₀)` where `b₀ = -Σw/2` balances the classes.
pub fn synth_corpus(n_docs: usize, planted_weights: &[f64], seed: u64) -> Result<LabeledCorpus> {
    let vocab_size = planted_weights.len();
    if n_docs == 0 {
        return Err(Error::Argument("synthetic corpus needs at least one document".into()));
    }
    if vocab_size == 0 || vocab_size > SYNTH_TOKENS.len() {
        return Err(Error::Argument(format!(
            "synthetic vocabulary size {vocab_size} out of range (1..={})",
            SYNTH_TOKENS.len()
        )));
    }
    if planted_weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Argument("planted weights must be finite".into()));
    }
    let bias = -planted_weights.iter().sum::<f64>() / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let documents = (0..n_docs)
        .map(|_| {
            let present: Vec<bool> = (0..vocab_size).map(|_| rng.random_bool(0.5)).collect();
            let logit = bias
                + present
                    .iter()
                    .zip(planted_weights)
                    .filter(|(&p, _)| p)
                    .map(|(_, w)| w)
                    .sum::<f64>();
            let label = u8::from(rng.random_bool(sigmoid(logit)));
            let text = present
                .iter()
                .zip(SYNTH_TOKENS)
                .filter(|(&p, _)| p)
                .map(|(_, t)| t)
                .collect::<Vec<_>>()
                .join(" ");
            Document { text, label }
        })
        .collect();
    LabeledCorpus::split_with(documents, &mut rng)
}
