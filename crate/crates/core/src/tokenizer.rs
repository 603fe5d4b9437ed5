//! Greedy longest-prefix sub-word tokenization, fixed-length sequence
//! preparation and word/sub-token label alignment.

use std::collections::HashMap;
use std::io::BufRead;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tags::{repair_tag_sequence, LabelInventory, Tag, TagError};

pub const CONTINUATION_PREFIX: &str = "##";
pub const DEFAULT_MAX_SEQUENCE_LENGTH: usize = 256;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("vocabulary lacks special token {0:?}")]
    MissingSpecial(String),
    #[error("duplicate vocabulary token {token:?} at line {line}")]
    DuplicateToken { token: String, line: usize },
    #[error("empty vocabulary token at line {0}")]
    EmptyToken(usize),
    #[error("invalid tokenizer configuration: {0}")]
    InvalidConfig(String),
    #[error("{tags} tags for {words} words")]
    TagCount { words: usize, tags: usize },
    #[error("{predictions} predictions for a sequence of {positions} positions")]
    PredictionCount { positions: usize, predictions: usize },
    #[error("tag {0} is not in the label inventory")]
    UnknownLabel(String),
    #[error(transparent)]
    Tag(#[from] TagError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialTokens {
    pub unknown: String,
    pub padding: String,
    pub start: String,
    pub end: String,
}

impl Default for SpecialTokens {
    fn default() -> Self {
        SpecialTokens {
            unknown: "[UNK]".into(),
            padding: "[PAD]".into(),
            start: "[CLS]".into(),
            end: "[SEP]".into(),
        }
    }
}

/// Token table with dense ids; id = position in the source file.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    specials: SpecialTokens,
    unk_id: u32,
    pad_id: u32,
}

impl Vocabulary {
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, TokenizerError> {
        Vocabulary::with_specials(tokens, SpecialTokens::default())
    }

    pub fn with_specials(tokens: Vec<String>, specials: SpecialTokens) -> Result<Self, TokenizerError> {
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, token) in tokens.iter().enumerate() {
            if token.is_empty() {
                return Err(TokenizerError::EmptyToken(i + 1));
            }
            if ids.insert(token.clone(), i as u32).is_some() {
                return Err(TokenizerError::DuplicateToken {
                    token: token.clone(),
                    line: i + 1,
                });
            }
        }
        let find = |name: &str| {
            ids.get(name)
                .copied()
                .ok_or_else(|| TokenizerError::MissingSpecial(name.to_string()))
        };
        find(&specials.start)?;
        find(&specials.end)?;
        Ok(Vocabulary {
            unk_id: find(&specials.unknown)?,
            pad_id: find(&specials.padding)?,
            tokens,
            ids,
            specials,
        })
    }

    /// Reads one token per line (UTF-8); the line number minus one is the id.
    pub fn load(reader: impl BufRead) -> Result<Self, TokenizerError> {
        let tokens = reader
            .lines()
            .map(|l| l.map(|l| l.trim_end_matches('\r').to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        Vocabulary::from_tokens(tokens)
    }

    /// Built-in fallback: specials plus every Arabic letter, diacritic, digit
    /// and common punctuation mark as a whole-word piece and a `##` piece.
    /// Any Arabic-script text therefore tokenizes without `[UNK]`.
    pub fn character_level() -> Self {
        let specials = SpecialTokens::default();
        let mut tokens = vec![
            specials.padding.clone(),
            specials.unknown.clone(),
            specials.start.clone(),
            specials.end.clone(),
        ];
        let chars = ('\u{0621}'..='\u{0652}')
            .chain('\u{0660}'..='\u{0669}')
            .chain('\u{0670}'..='\u{0671}')
            .chain(['\u{060C}', '\u{061B}', '\u{061F}', '\u{066A}', '\u{06D4}'])
            .chain('0'..='9')
            .chain("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~".chars());
        let chars: Vec<char> = chars.collect();
        for c in &chars {
            tokens.push(c.to_string());
        }
        for c in &chars {
            tokens.push(format!("{CONTINUATION_PREFIX}{c}"));
        }
        Vocabulary::with_specials(tokens, specials).expect("built-in vocabulary is well formed")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn specials(&self) -> &SpecialTokens {
        &self.specials
    }

    pub fn unk_id(&self) -> u32 {
        self.unk_id
    }

    pub fn pad_id(&self) -> u32 {
        self.pad_id
    }

    /// Reserved `[unusedN]` slots.
    pub fn unused_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.starts_with("[unused")).count()
    }
}

pub fn load_vocabulary(reader: impl BufRead) -> Result<Vocabulary, TokenizerError> {
    Vocabulary::load(reader)
}

/// Greedy longest-prefix-first segmentation. Continuation pieces carry `##`.
/// A word with no full segmentation becomes a single unknown token.
pub fn tokenize_word(vocab: &Vocabulary, word: &str) -> Vec<String> {
    if word.is_empty() {
        return Vec::new();
    }
    let bounds: Vec<usize> = word
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(word.len()))
        .collect();
    let mut pieces = Vec::new();
    let mut start = 0;
    let mut candidate = String::new();
    while start < bounds.len() - 1 {
        let mut found = None;
        for end in (start + 1..bounds.len()).rev() {
            candidate.clear();
            if start > 0 {
                candidate.push_str(CONTINUATION_PREFIX);
            }
            candidate.push_str(&word[bounds[start]..bounds[end]]);
            if vocab.contains(&candidate) {
                found = Some(end);
                break;
            }
        }
        match found {
            Some(end) => {
                pieces.push(candidate.clone());
                start = end;
            }
            None => return vec![vocab.specials.unknown.clone()],
        }
    }
    pieces
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy")]
pub enum OverflowPolicy {
    /// Drop content past the sequence capacity.
    #[default]
    Truncate,
    /// Overlapping windows whose starts are `stride` content tokens apart.
    Window { stride: usize },
}

/// Sequence shape. The start and end specials count toward
/// `max_sequence_length`, so a window holds `max_sequence_length - 2` content
/// tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenizerConfig {
    max_sequence_length: usize,
    overflow: OverflowPolicy,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            max_sequence_length: DEFAULT_MAX_SEQUENCE_LENGTH,
            overflow: OverflowPolicy::Truncate,
        }
    }
}

impl TokenizerConfig {
    pub fn new(max_sequence_length: usize, overflow: OverflowPolicy) -> Result<Self, TokenizerError> {
        if max_sequence_length < 3 {
            return Err(TokenizerError::InvalidConfig(format!(
                "max_sequence_length {max_sequence_length} leaves no room for content"
            )));
        }
        if let OverflowPolicy::Window { stride } = overflow {
            let capacity = max_sequence_length - 2;
            if stride == 0 || stride > capacity {
                return Err(TokenizerError::InvalidConfig(format!(
                    "window stride {stride} must be in 1..={capacity}"
                )));
            }
        }
        Ok(TokenizerConfig {
            max_sequence_length,
            overflow,
        })
    }

    pub fn max_sequence_length(&self) -> usize {
        self.max_sequence_length
    }

    pub fn overflow(&self) -> OverflowPolicy {
        self.overflow
    }

    pub fn content_capacity(&self) -> usize {
        self.max_sequence_length - 2
    }
}

/// One fixed-length model input.
///
/// All per-position vectors have length `max_sequence_length`. `word_index`
/// refers to the full sentence in `words`, not to this window.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedSequence {
    pub tokens: Vec<String>,
    pub ids: Vec<u32>,
    pub word_index: Vec<Option<usize>>,
    /// True on the first piece of each word.
    pub first_piece: Vec<bool>,
    /// True on real tokens (specials included), false on padding.
    pub mask: Vec<bool>,
    pub labels: Option<Vec<usize>>,
    pub words: Arc<[String]>,
    /// Positions holding sentence content (between the start and end specials).
    pub content: std::ops::Range<usize>,
}

impl TokenizedSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn label_tags<'a>(&self, inventory: &'a LabelInventory) -> Option<Vec<&'a Tag>> {
        self.labels
            .as_ref()
            .map(|ids| ids.iter().map(|&id| inventory.tag(id).expect("label id in range")).collect())
    }
}

struct Piece {
    text: String,
    word: usize,
    first: bool,
}

fn window_ranges(total: usize, config: &TokenizerConfig) -> Vec<std::ops::Range<usize>> {
    let capacity = config.content_capacity();
    match config.overflow {
        OverflowPolicy::Truncate => vec![0..total.min(capacity)],
        OverflowPolicy::Window { stride } => {
            let mut ranges = Vec::new();
            let mut start = 0;
            loop {
                ranges.push(start..(start + capacity).min(total));
                if start + capacity >= total {
                    break;
                }
                start += stride;
            }
            ranges
        }
    }
}

/// Tokenizes `words` into one or more fixed-length sequences.
pub fn encode_sentence(vocab: &Vocabulary, config: &TokenizerConfig, words: &[String]) -> Vec<TokenizedSequence> {
    let pieces: Vec<Piece> = words
        .iter()
        .enumerate()
        .flat_map(|(w, word)| {
            tokenize_word(vocab, word)
                .into_iter()
                .enumerate()
                .map(move |(i, text)| Piece { text, word: w, first: i == 0 })
        })
        .collect();
    let shared: Arc<[String]> = words.to_vec().into();
    let max = config.max_sequence_length;
    let specials = vocab.specials();

    window_ranges(pieces.len(), config)
        .into_iter()
        .map(|range| {
            let mut seq = TokenizedSequence {
                tokens: Vec::with_capacity(max),
                ids: Vec::with_capacity(max),
                word_index: Vec::with_capacity(max),
                first_piece: Vec::with_capacity(max),
                mask: Vec::with_capacity(max),
                labels: None,
                words: Arc::clone(&shared),
                content: 1..1 + range.len(),
            };
            let mut push = |text: &str, word: Option<usize>, first: bool, real: bool| {
                seq.ids.push(vocab.id(text).unwrap_or(vocab.unk_id));
                seq.tokens.push(text.to_string());
                seq.word_index.push(word);
                seq.first_piece.push(first);
                seq.mask.push(real);
            };
            push(&specials.start, None, false, true);
            for piece in &pieces[range.clone()] {
                push(&piece.text, Some(piece.word), piece.first, true);
            }
            push(&specials.end, None, false, true);
            let padding = max.saturating_sub(range.len() + 2);
            for _ in 0..padding {
                push(&specials.padding, None, false, false);
            }
            seq
        })
        .collect()
}

/// How word tags are copied onto sub-tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignmentApproach {
    /// Every piece carries the word's entity; continuation pieces of a `B-c`
    /// word get `I-c` so token-level decoding yields the same span.
    #[default]
    AllSubtokens,
    /// Every piece repeats the word's tag verbatim, `B-c` included.
    AllSubtokensRepeat,
    /// First piece carries the tag, the rest get `[PAD]`.
    FirstSubtokenOnly,
}

/// Fills `labels` from word-level tags. Specials and padding get `[PAD]`.
pub fn align_labels(
    mut seq: TokenizedSequence,
    word_tags: &[Tag],
    approach: AlignmentApproach,
    inventory: &LabelInventory,
) -> Result<TokenizedSequence, TokenizerError> {
    if word_tags.len() != seq.words.len() {
        return Err(TokenizerError::TagCount {
            words: seq.words.len(),
            tags: word_tags.len(),
        });
    }
    let id_of = |tag: &Tag| inventory.id(tag).ok_or_else(|| TokenizerError::UnknownLabel(tag.to_string()));
    let ignore = inventory.ignore_id();
    let mut labels = Vec::with_capacity(seq.len());
    for (word, &first) in seq.word_index.iter().zip(&seq.first_piece) {
        let label = match word {
            None => ignore,
            Some(w) => {
                let tag = &word_tags[*w];
                match (approach, first) {
                    (_, true) | (AlignmentApproach::AllSubtokensRepeat, false) => id_of(tag)?,
                    (AlignmentApproach::AllSubtokens, false) => id_of(&tag.continuation())?,
                    (AlignmentApproach::FirstSubtokenOnly, false) => ignore,
                }
            }
        };
        labels.push(label);
    }
    seq.labels = Some(labels);
    Ok(seq)
}

/// Word tags from per-position predictions of a single sequence: each word
/// takes the tag of its first piece; `[PAD]` predictions and words whose first
/// piece is not in the sequence become `O`. The result is repaired.
pub fn project_to_words(seq: &TokenizedSequence, predicted: &[Tag]) -> Result<Vec<Tag>, TokenizerError> {
    merge_windows(std::slice::from_ref(seq), &[predicted.to_vec()])
}

/// [`project_to_words`] over the windows of one sentence. A word seen in
/// several windows takes its tag from the window where its first piece lies
/// farthest from the window edge; ties go to the earlier window.
pub fn merge_windows(seqs: &[TokenizedSequence], predictions: &[Vec<Tag>]) -> Result<Vec<Tag>, TokenizerError> {
    let Some(first) = seqs.first() else {
        return Ok(Vec::new());
    };
    let mut best: Vec<Option<(usize, &Tag)>> = vec![None; first.words.len()];
    for (seq, predicted) in seqs.iter().zip(predictions) {
        if predicted.len() != seq.len() {
            return Err(TokenizerError::PredictionCount {
                positions: seq.len(),
                predictions: predicted.len(),
            });
        }
        for pos in seq.content.clone() {
            let (Some(word), true) = (seq.word_index[pos], seq.first_piece[pos]) else {
                continue;
            };
            let distance = (pos - seq.content.start).min(seq.content.end - 1 - pos);
            if best[word].map_or(true, |(d, _)| distance > d) {
                best[word] = Some((distance, &predicted[pos]));
            }
        }
    }
    let tags: Vec<Tag> = best
        .into_iter()
        .map(|slot| match slot {
            Some((_, Tag::Ignore)) | None => Tag::Outside,
            Some((_, tag)) => tag.clone(),
        })
        .collect();
    Ok(repair_tag_sequence(&tags)?)
}
