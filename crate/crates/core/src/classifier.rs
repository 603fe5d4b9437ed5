//! Token classification and the end-to-end pipeline.
//!
//! A [`TokenClassifier`] maps one [`TokenizedSequence`] to a score matrix of
//! shape `max_sequence_length × inventory.len()`. Scores are raw; decoding
//! takes the per-row argmax over the decodable labels, lowest index first on
//! ties. Three backends exist:
//!
//! - [`MockHashClassifier`]: pseudo-random but reproducible scores.
//! - [`GazetteerClassifier`]: longest-match lexicon lookup.
//! - [`ExternalModel`]: a subprocess speaking line-delimited JSON, used to
//!   plug in fine-tuned transformer weights.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arabizi::{
    process_pipeline_front, strip_diacritics, ArabiziError, ExternalConfig, ExternalTransliterator, RuleTable,
    Transliterator, WordProvenance,
};
use crate::exec::Execution;
use crate::tags::{decode_spans, join_words, AnnotatedSentence, EntityClass, EntitySpan, LabelInventory, Tag, TagError};
use crate::tokenizer::{
    align_labels, encode_sentence, merge_windows, AlignmentApproach, TokenizedSequence, TokenizerConfig,
    TokenizerError, Vocabulary,
};

/// The 50 fine-grained classes, one per line, in label order.
pub const DEFAULT_CLASS_LIST: &str = include_str!("../data/classes_default.txt");

/// A small Arabic lexicon over [`DEFAULT_CLASS_LIST`] for the gazetteer backend.
pub const DEFAULT_LEXICON: &str = include_str!("../data/lexicon_default.tsv");

pub fn default_inventory() -> LabelInventory {
    LabelInventory::from_class_list(DEFAULT_CLASS_LIST).expect("built-in class list is valid")
}

/// Gazetteer over the built-in lexicon and class list.
pub fn default_gazetteer(approach: AlignmentApproach) -> GazetteerClassifier {
    GazetteerClassifier::load(DEFAULT_LEXICON.as_bytes(), default_inventory(), approach)
        .expect("built-in lexicon is valid")
}

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("score width {found} does not match inventory size {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("score matrix has {found} rows for a sequence of {expected}")]
    RowMismatch { expected: usize, found: usize },
    #[error("non-finite score at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("model load failed: {0}")]
    Load(String),
    #[error("model output width {found} does not match inventory size {expected}")]
    InventoryMismatch { expected: usize, found: usize },
    #[error("model process: {0}")]
    Process(String),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error(transparent)]
    Tag(#[from] TagError),
    #[error(transparent)]
    Arabizi(#[from] ArabiziError),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
}

/// Row-major `rows × width` scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    width: usize,
    data: Vec<f32>,
}

impl ScoreMatrix {
    pub fn zeros(rows: usize, width: usize) -> Self {
        ScoreMatrix {
            rows,
            width,
            data: vec![0.0; rows * width],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f32>>) -> Result<Self, ClassifierError> {
        let width = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * width);
        for row in &rows {
            if row.len() != width {
                return Err(ClassifierError::WidthMismatch {
                    expected: width,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(ScoreMatrix {
            rows: rows.len(),
            width,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.width..(i + 1) * self.width]
    }
}

pub trait TokenClassifier: Send + Sync {
    /// Number of score columns; equals the inventory size.
    fn width(&self) -> usize;

    fn scores(&self, seq: &TokenizedSequence) -> Result<ScoreMatrix, ClassifierError>;

    /// True when concurrent calls are queued behind a lock.
    fn serializes_access(&self) -> bool {
        false
    }
}

/// Per-row argmax over every label except `[PAD]`; ties go to the lowest id.
pub fn scores_to_tags(scores: &ScoreMatrix, inventory: &LabelInventory) -> Result<Vec<Tag>, ClassifierError> {
    if scores.width() != inventory.len() {
        return Err(ClassifierError::WidthMismatch {
            expected: inventory.len(),
            found: scores.width(),
        });
    }
    let decodable = inventory.decodable_len();
    (0..scores.rows())
        .map(|r| {
            let row = scores.row(r);
            if let Some(column) = row.iter().position(|v| !v.is_finite()) {
                return Err(ClassifierError::NonFinite { row: r, column });
            }
            let mut best = 0;
            for (i, &v) in row[..decodable].iter().enumerate().skip(1) {
                if v > row[best] {
                    best = i;
                }
            }
            Ok(inventory.tag(best).expect("id below inventory size").clone())
        })
        .collect()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Deterministic test backend: each score is a hash of (token id, position,
/// label) mapped to `[0, 1)`. Padding rows are one-hot on `O`.
#[derive(Debug, Clone)]
pub struct MockHashClassifier {
    width: usize,
    seed: u64,
}

impl MockHashClassifier {
    pub fn new(inventory: &LabelInventory) -> Self {
        MockHashClassifier {
            width: inventory.len(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

impl TokenClassifier for MockHashClassifier {
    fn width(&self) -> usize {
        self.width
    }

    fn scores(&self, seq: &TokenizedSequence) -> Result<ScoreMatrix, ClassifierError> {
        let mut scores = ScoreMatrix::zeros(seq.len(), self.width);
        for pos in 0..seq.len() {
            let row = scores.row_mut(pos);
            if !seq.mask[pos] {
                row[0] = 1.0;
                continue;
            }
            let base = splitmix64(self.seed ^ (u64::from(seq.ids[pos]) << 20) ^ pos as u64);
            for (label, v) in row.iter_mut().enumerate() {
                let h = splitmix64(base ^ label as u64);
                *v = (h >> 40) as f32 / (1u64 << 24) as f32;
            }
        }
        Ok(scores)
    }
}

/// Dictionary tagger: greedy left-to-right longest match of lexicon entries
/// over the words (compared without diacritics). Matched words are aligned to
/// sub-tokens like training labels and emitted as one-hot rows.
#[derive(Debug, Clone)]
pub struct GazetteerClassifier {
    inventory: LabelInventory,
    approach: AlignmentApproach,
    entries: HashMap<Vec<String>, EntityClass>,
    longest: usize,
}

fn lexicon_key(surface: &str) -> Vec<String> {
    surface.split_whitespace().map(strip_diacritics).collect()
}

impl GazetteerClassifier {
    pub fn new<I, S>(entries: I, inventory: LabelInventory, approach: AlignmentApproach) -> Result<Self, ClassifierError>
    where
        I: IntoIterator<Item = (S, EntityClass)>,
        S: AsRef<str>,
    {
        let mut map = HashMap::new();
        let mut longest = 0;
        for (i, (surface, class)) in entries.into_iter().enumerate() {
            let key = lexicon_key(surface.as_ref());
            if key.is_empty() || key.iter().any(String::is_empty) {
                return Err(ClassifierError::Lexicon {
                    line: i + 1,
                    message: "empty surface".into(),
                });
            }
            if inventory.class_index(&class).is_none() {
                return Err(ClassifierError::Lexicon {
                    line: i + 1,
                    message: format!("class {class} is not in the inventory"),
                });
            }
            longest = longest.max(key.len());
            map.insert(key, class);
        }
        Ok(GazetteerClassifier {
            inventory,
            approach,
            entries: map,
            longest,
        })
    }

    /// Reads `surface<TAB>ClassName` lines; blank lines and `#` comments are
    /// skipped.
    pub fn load(reader: impl BufRead, inventory: LabelInventory, approach: AlignmentApproach) -> Result<Self, ClassifierError> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ClassifierError::Lexicon { line: i + 1, message };
            let (surface, class) = line
                .split_once('\t')
                .ok_or_else(|| err("expected surface<TAB>class".into()))?;
            let class = EntityClass::new(class.trim()).map_err(|e| err(e.to_string()))?;
            if inventory.class_index(&class).is_none() {
                return Err(err(format!("class {class} is not in the inventory")));
            }
            if lexicon_key(surface).is_empty() {
                return Err(err("empty surface".into()));
            }
            entries.push((surface.to_string(), class));
        }
        GazetteerClassifier::new(entries, inventory, approach)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Word-level BIO tags from lexicon matches.
    pub fn tag_words(&self, words: &[String]) -> Vec<Tag> {
        let keys: Vec<String> = words.iter().map(|w| strip_diacritics(w)).collect();
        let mut tags = vec![Tag::Outside; words.len()];
        let mut i = 0;
        while i < keys.len() {
            let hit = (1..=self.longest.min(keys.len() - i))
                .rev()
                .find_map(|len| self.entries.get(&keys[i..i + len]).map(|class| (len, class)));
            match hit {
                Some((len, class)) => {
                    tags[i] = Tag::Begin(class.clone());
                    for tag in &mut tags[i + 1..i + len] {
                        *tag = Tag::Inside(class.clone());
                    }
                    i += len;
                }
                None => i += 1,
            }
        }
        tags
    }
}

impl TokenClassifier for GazetteerClassifier {
    fn width(&self) -> usize {
        self.inventory.len()
    }

    fn scores(&self, seq: &TokenizedSequence) -> Result<ScoreMatrix, ClassifierError> {
        let word_tags = self.tag_words(&seq.words);
        let aligned = align_labels(seq.clone(), &word_tags, self.approach, &self.inventory)?;
        let labels = aligned.labels.expect("align_labels sets labels");
        let mut scores = ScoreMatrix::zeros(seq.len(), self.width());
        for (pos, label) in labels.into_iter().enumerate() {
            // [PAD] rows decode to O: the ignore column is never considered
            scores.row_mut(pos)[label] = 1.0;
        }
        Ok(scores)
    }
}

/// `manifest.toml` of an external model directory.
#[derive(Debug, Clone, Deserialize)]
pub struct ModelManifest {
    /// Class list file, one class per line, in the model's label order.
    pub classes: PathBuf,
    /// Program and arguments, run with the model directory as working directory.
    pub command: Vec<String>,
    /// Number of score columns the model emits.
    pub output_width: usize,
    /// Vocabulary matching the model's embedding table.
    pub vocabulary: Option<PathBuf>,
}

struct ModelProcess {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

#[derive(Serialize)]
struct ModelRequest<'a> {
    ids: &'a [u32],
    mask: &'a [bool],
}

#[derive(Deserialize)]
struct ModelResponse {
    scores: Option<Vec<Vec<f32>>>,
    error: Option<String>,
}

#[derive(Deserialize)]
struct ModelHello {
    ready: bool,
    width: usize,
}

/// Fine-tuned weights behind a subprocess.
///
/// Protocol, one JSON object per line: the process first prints
/// `{"ready": true, "width": N}`; afterwards every request
/// `{"ids": [...], "mask": [...]}` on stdin is answered with
/// `{"scores": [[...], ...]}` (or `{"error": "..."}`) on stdout. Calls are
/// serialized through a mutex.
pub struct ExternalModel {
    dir: PathBuf,
    manifest: ModelManifest,
    inventory: LabelInventory,
    process: Mutex<ModelProcess>,
}

impl std::fmt::Debug for ExternalModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalModel")
            .field("dir", &self.dir)
            .field("manifest", &self.manifest)
            .finish()
    }
}

impl ExternalModel {
    pub fn inventory(&self) -> &LabelInventory {
        &self.inventory
    }

    pub fn vocabulary_path(&self) -> Option<PathBuf> {
        self.manifest.vocabulary.as_ref().map(|p| self.dir.join(p))
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        if let Ok(mut process) = self.process.lock() {
            let _ = process.child.kill();
            let _ = process.child.wait();
        }
    }
}

fn read_json_line<T: serde::de::DeserializeOwned>(stdout: &mut impl BufRead) -> Result<T, ClassifierError> {
    let mut line = String::new();
    if stdout.read_line(&mut line)? == 0 {
        return Err(ClassifierError::Process("model process closed its output".into()));
    }
    serde_json::from_str(&line).map_err(|e| ClassifierError::Process(format!("malformed reply: {e}")))
}

fn read_manifest(dir: &Path) -> Result<(ModelManifest, LabelInventory), ClassifierError> {
    let manifest_path = dir.join("manifest.toml");
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| ClassifierError::Load(format!("{}: {e}", manifest_path.display())))?;
    let manifest: ModelManifest =
        toml::from_str(&text).map_err(|e| ClassifierError::Load(format!("{}: {e}", manifest_path.display())))?;
    let classes_path = dir.join(&manifest.classes);
    let classes = std::fs::read_to_string(&classes_path)
        .map_err(|e| ClassifierError::Load(format!("{}: {e}", classes_path.display())))?;
    let inventory = LabelInventory::from_class_list(&classes).map_err(|e| ClassifierError::Load(e.to_string()))?;
    if manifest.output_width != inventory.len() {
        return Err(ClassifierError::InventoryMismatch {
            expected: inventory.len(),
            found: manifest.output_width,
        });
    }
    Ok((manifest, inventory))
}

/// The label inventory an external model directory declares, without
/// starting the model.
pub fn external_model_inventory(dir: &Path) -> Result<LabelInventory, ClassifierError> {
    read_manifest(dir).map(|(_, inventory)| inventory)
}

/// Loads an external model directory and starts its process.
pub fn load_external_model(dir: &Path) -> Result<ExternalModel, ClassifierError> {
    let (manifest, inventory) = read_manifest(dir)?;
    let (program, args) = manifest
        .command
        .split_first()
        .ok_or_else(|| ClassifierError::Load("manifest command is empty".into()))?;
    let mut child = Command::new(program)
        .args(args)
        .current_dir(dir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| ClassifierError::Load(format!("cannot start {program:?}: {e}")))?;
    let stdin = child.stdin.take().expect("piped stdin");
    let mut stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
    let hello: ModelHello = match read_json_line(&mut stdout) {
        Ok(hello) => hello,
        Err(e) => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(ClassifierError::Load(format!("no handshake: {e}")));
        }
    };
    if !hello.ready || hello.width != inventory.len() {
        let _ = child.kill();
        let _ = child.wait();
        return Err(ClassifierError::InventoryMismatch {
            expected: inventory.len(),
            found: hello.width,
        });
    }
    Ok(ExternalModel {
        dir: dir.to_path_buf(),
        manifest,
        inventory,
        process: Mutex::new(ModelProcess { child, stdin, stdout }),
    })
}

impl TokenClassifier for ExternalModel {
    fn width(&self) -> usize {
        self.inventory.len()
    }

    fn serializes_access(&self) -> bool {
        true
    }

    fn scores(&self, seq: &TokenizedSequence) -> Result<ScoreMatrix, ClassifierError> {
        let mut process = self
            .process
            .lock()
            .map_err(|_| ClassifierError::Process("model lock poisoned".into()))?;
        let request = serde_json::to_string(&ModelRequest {
            ids: &seq.ids,
            mask: &seq.mask,
        })
        .expect("request serializes");
        writeln!(process.stdin, "{request}")?;
        process.stdin.flush()?;
        let reply: ModelResponse = read_json_line(&mut process.stdout)?;
        if let Some(error) = reply.error {
            return Err(ClassifierError::Process(error));
        }
        let scores = ScoreMatrix::from_rows(reply.scores.unwrap_or_default())?;
        if scores.rows() != seq.len() {
            return Err(ClassifierError::RowMismatch {
                expected: seq.len(),
                found: scores.rows(),
            });
        }
        if scores.width() != self.width() {
            return Err(ClassifierError::WidthMismatch {
                expected: self.width(),
                found: scores.width(),
            });
        }
        Ok(scores)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexiconSource {
    /// [`DEFAULT_LEXICON`].
    Builtin,
    File(PathBuf),
    Inline(Vec<(String, EntityClass)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassifierSpec {
    MockHash,
    Gazetteer(LexiconSource),
    ExternalModel(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TransliterationSpec {
    /// Rule table file; `None` is the built-in table.
    #[default]
    Local,
    LocalFile(PathBuf),
    External(ExternalConfig),
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub model_id: String,
    pub inventory: LabelInventory,
    /// `None` selects the built-in character-level vocabulary, unless an
    /// external model ships its own.
    pub vocabulary: Option<PathBuf>,
    pub tokenizer: TokenizerConfig,
    pub approach: AlignmentApproach,
    pub classifier: ClassifierSpec,
    pub transliteration: TransliterationSpec,
}

impl PipelineConfig {
    pub fn new(model_id: impl Into<String>, inventory: LabelInventory, classifier: ClassifierSpec) -> Self {
        PipelineConfig {
            model_id: model_id.into(),
            inventory,
            vocabulary: None,
            tokenizer: TokenizerConfig::default(),
            approach: AlignmentApproach::default(),
            classifier,
            transliteration: TransliterationSpec::default(),
        }
    }
}

/// Output of one pipeline run. Span offsets index `normalized`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NerResult {
    pub input: String,
    pub normalized: String,
    pub tags: Vec<Tag>,
    pub spans: Vec<EntitySpan>,
    pub provenance: Vec<WordProvenance>,
    pub model_id: String,
    pub elapsed_ms: f64,
}

impl NerResult {
    pub fn words(&self) -> Vec<String> {
        self.provenance.iter().map(|w| w.output.clone()).collect()
    }

    /// Canonical JSON without the timing field, for reproducibility checks.
    pub fn to_canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.elapsed_ms = 0.0;
        serde_json::to_string(&copy).expect("result serializes")
    }
}

/// A loaded, immutable pipeline. Safe to share across threads.
pub struct Pipeline {
    model_id: String,
    inventory: LabelInventory,
    vocabulary: Vocabulary,
    tokenizer: TokenizerConfig,
    approach: AlignmentApproach,
    classifier: Arc<dyn TokenClassifier>,
    transliterator: Transliterator,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("model_id", &self.model_id)
            .field("labels", &self.inventory.len())
            .field("vocabulary", &self.vocabulary.len())
            .field("tokenizer", &self.tokenizer)
            .field("approach", &self.approach)
            .field("transliterator", &self.transliterator)
            .finish()
    }
}

fn open(path: &Path) -> Result<BufReader<std::fs::File>, PipelineError> {
    std::fs::File::open(path)
        .map(BufReader::new)
        .map_err(|source| PipelineError::File {
            path: path.to_path_buf(),
            source,
        })
}

impl Pipeline {
    /// Loads every resource named by `config`. All load failures surface here.
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        let mut vocabulary_path = config.vocabulary.clone();
        let classifier: Arc<dyn TokenClassifier> = match &config.classifier {
            ClassifierSpec::MockHash => Arc::new(MockHashClassifier::new(&config.inventory)),
            ClassifierSpec::Gazetteer(LexiconSource::Builtin) => Arc::new(GazetteerClassifier::load(
                DEFAULT_LEXICON.as_bytes(),
                config.inventory.clone(),
                config.approach,
            )?),
            ClassifierSpec::Gazetteer(LexiconSource::File(path)) => Arc::new(GazetteerClassifier::load(
                open(path)?,
                config.inventory.clone(),
                config.approach,
            )?),
            ClassifierSpec::Gazetteer(LexiconSource::Inline(entries)) => Arc::new(GazetteerClassifier::new(
                entries.iter().map(|(s, c)| (s.as_str(), c.clone())),
                config.inventory.clone(),
                config.approach,
            )?),
            ClassifierSpec::ExternalModel(dir) => {
                let model = load_external_model(dir)?;
                if model.inventory() != &config.inventory {
                    return Err(PipelineError::Config(format!(
                        "model {} was trained on a different class list",
                        dir.display()
                    )));
                }
                if vocabulary_path.is_none() {
                    vocabulary_path = model.vocabulary_path();
                }
                Arc::new(model)
            }
        };
        let vocabulary = match &vocabulary_path {
            Some(path) => Vocabulary::load(open(path)?)?,
            None => Vocabulary::character_level(),
        };
        let transliterator = match &config.transliteration {
            TransliterationSpec::Local => Transliterator::Local(RuleTable::builtin()),
            TransliterationSpec::LocalFile(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| PipelineError::File {
                    path: path.clone(),
                    source,
                })?;
                Transliterator::Local(Arc::new(RuleTable::parse(&text)?))
            }
            TransliterationSpec::External(external) => {
                Transliterator::External(ExternalTransliterator::new(external.clone(), RuleTable::builtin())?)
            }
        };
        Pipeline::from_parts(
            config.model_id,
            config.inventory,
            vocabulary,
            config.tokenizer,
            config.approach,
            classifier,
            transliterator,
        )
    }

    pub fn from_parts(
        model_id: String,
        inventory: LabelInventory,
        vocabulary: Vocabulary,
        tokenizer: TokenizerConfig,
        approach: AlignmentApproach,
        classifier: Arc<dyn TokenClassifier>,
        transliterator: Transliterator,
    ) -> Result<Self, PipelineError> {
        if classifier.width() != inventory.len() {
            return Err(ClassifierError::WidthMismatch {
                expected: inventory.len(),
                found: classifier.width(),
            }
            .into());
        }
        Ok(Pipeline {
            model_id,
            inventory,
            vocabulary,
            tokenizer,
            approach,
            classifier,
            transliterator,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn inventory(&self) -> &LabelInventory {
        &self.inventory
    }

    pub fn approach(&self) -> AlignmentApproach {
        self.approach
    }

    /// Raw text to entity spans.
    pub fn run(&self, raw: &str) -> Result<NerResult, PipelineError> {
        let started = Instant::now();
        let front = process_pipeline_front(raw, &self.transliterator);
        let words = front.words();
        let tags = self.tag_words(&words)?;
        let (text, offsets) = join_words(&words);
        debug_assert_eq!(text, front.text);
        let sentence = AnnotatedSentence::with_text(text, words, offsets, tags)?;
        let spans = decode_spans(&sentence);
        Ok(NerResult {
            input: raw.to_string(),
            normalized: front.text,
            tags: sentence.tags().to_vec(),
            spans,
            provenance: front.words,
            model_id: self.model_id.clone(),
            elapsed_ms: started.elapsed().as_secs_f64() * 1000.0,
        })
    }

    /// Tags already-split Arabic words, skipping cleaning and transliteration.
    pub fn tag_words(&self, words: &[String]) -> Result<Vec<Tag>, PipelineError> {
        let seqs = encode_sentence(&self.vocabulary, &self.tokenizer, words);
        let predictions = seqs
            .iter()
            .map(|seq| {
                let scores = self.classifier.scores(seq)?;
                if scores.rows() != seq.len() {
                    return Err(ClassifierError::RowMismatch {
                        expected: seq.len(),
                        found: scores.rows(),
                    });
                }
                scores_to_tags(&scores, &self.inventory)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(merge_windows(&seqs, &predictions)?)
    }

    /// Runs every text, preserving order.
    pub fn run_batch<S: AsRef<str> + Sync>(&self, texts: &[S], exec: Execution) -> Vec<Result<NerResult, PipelineError>> {
        exec.map(texts, |t| self.run(t.as_ref()))
    }
}
