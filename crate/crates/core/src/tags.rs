//! BIO tag algebra.
//!
//! Tags serialize as `B-<class>`, `I-<class>`, `O` and `[PAD]`; the last one is
//! the sub-token "ignore" label and never appears in word-level sequences.
//!
//! ```
//! use ner_core::tags::{AnnotatedSentence, Tag, decode_spans};
//!
//! let words = ["زار", "محمد", "القاهرة"].map(String::from).to_vec();
//! let tags = ["O", "B-Person", "B-Location"]
//!     .iter()
//!     .map(|t| t.parse::<Tag>().unwrap())
//!     .collect();
//! let sentence = AnnotatedSentence::from_words(words, tags).unwrap();
//! let spans = decode_spans(&sentence);
//! assert_eq!(spans.len(), 2);
//! assert_eq!(spans[1].surface, "القاهرة");
//! ```

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const OUTSIDE_TEXT: &str = "O";
pub const IGNORE_TEXT: &str = "[PAD]";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TagError {
    #[error("invalid entity class name {0:?}")]
    InvalidClass(String),
    #[error("duplicate entity class {0:?}")]
    DuplicateClass(String),
    #[error("unknown tag form {0:?}")]
    UnknownTag(String),
    #[error("ignore label at position {0} in a word-level tag sequence")]
    IgnoreInSequence(usize),
    #[error("{words} words but {tags} tags")]
    LengthMismatch { words: usize, tags: usize },
    #[error("span over words {start}..={end} out of bounds for {len} words")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("spans over words {first:?} and {second:?} overlap")]
    OverlappingSpans {
        first: (usize, usize),
        second: (usize, usize),
    },
    #[error("offsets of word {0} do not match the sentence text")]
    OffsetMismatch(usize),
    #[error("empty word at position {0}")]
    EmptyWord(usize),
}

/// Entity class name, e.g. `Person` or `Population-Center`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EntityClass(String);

impl EntityClass {
    pub fn new(name: impl Into<String>) -> Result<Self, TagError> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(TagError::InvalidClass(name));
        }
        Ok(EntityClass(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for EntityClass {
    type Error = TagError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        EntityClass::new(value)
    }
}

impl From<EntityClass> for String {
    fn from(value: EntityClass) -> Self {
        value.0
    }
}

impl FromStr for EntityClass {
    type Err = TagError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityClass::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Tag {
    Begin(EntityClass),
    Inside(EntityClass),
    Outside,
    /// Sub-token label excluded from decoding (`[PAD]`).
    Ignore,
}

impl Tag {
    pub fn class(&self) -> Option<&EntityClass> {
        match self {
            Tag::Begin(c) | Tag::Inside(c) => Some(c),
            Tag::Outside | Tag::Ignore => None,
        }
    }

    /// The `I-` tag of the same class for `B-`, otherwise a clone.
    pub fn continuation(&self) -> Tag {
        match self {
            Tag::Begin(c) => Tag::Inside(c.clone()),
            other => other.clone(),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Begin(c) => write!(f, "B-{c}"),
            Tag::Inside(c) => write!(f, "I-{c}"),
            Tag::Outside => f.write_str(OUTSIDE_TEXT),
            Tag::Ignore => f.write_str(IGNORE_TEXT),
        }
    }
}

impl FromStr for Tag {
    type Err = TagError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let class = |name: &str| EntityClass::new(name).map_err(|_| TagError::UnknownTag(s.to_string()));
        match s {
            OUTSIDE_TEXT => Ok(Tag::Outside),
            IGNORE_TEXT => Ok(Tag::Ignore),
            _ => {
                if let Some(name) = s.strip_prefix("B-") {
                    Ok(Tag::Begin(class(name)?))
                } else if let Some(name) = s.strip_prefix("I-") {
                    Ok(Tag::Inside(class(name)?))
                } else {
                    Err(TagError::UnknownTag(s.to_string()))
                }
            }
        }
    }
}

impl TryFrom<String> for Tag {
    type Error = TagError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Tag> for String {
    fn from(value: Tag) -> Self {
        value.to_string()
    }
}

/// Closed label set with a dense index.
///
/// Layout for `C` classes: `O` = 0, then `B-c`, `I-c` pairs in class order
/// (`B-c` = 1 + 2i, `I-c` = 2 + 2i), and `[PAD]` last at `2C + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelInventory {
    classes: Vec<EntityClass>,
    tags: Vec<Tag>,
    ids: HashMap<Tag, usize>,
    class_ids: HashMap<EntityClass, usize>,
}

impl LabelInventory {
    pub fn new(classes: impl IntoIterator<Item = EntityClass>) -> Result<Self, TagError> {
        let classes: Vec<EntityClass> = classes.into_iter().collect();
        let mut class_ids = HashMap::with_capacity(classes.len());
        for (i, class) in classes.iter().enumerate() {
            if class_ids.insert(class.clone(), i).is_some() {
                return Err(TagError::DuplicateClass(class.to_string()));
            }
        }
        let mut tags = Vec::with_capacity(2 * classes.len() + 2);
        tags.push(Tag::Outside);
        for class in &classes {
            tags.push(Tag::Begin(class.clone()));
            tags.push(Tag::Inside(class.clone()));
        }
        tags.push(Tag::Ignore);
        let ids = tags.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        Ok(LabelInventory {
            classes,
            tags,
            ids,
            class_ids,
        })
    }

    /// Parses class names, one per non-empty line; `#` starts a comment line.
    pub fn from_class_list(text: &str) -> Result<Self, TagError> {
        let classes = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(EntityClass::new)
            .collect::<Result<Vec<_>, _>>()?;
        LabelInventory::new(classes)
    }

    pub fn classes(&self) -> &[EntityClass] {
        &self.classes
    }

    /// Total number of indices, including the ignore label.
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Labels a classifier may emit: everything but `[PAD]`.
    pub fn decodable_len(&self) -> usize {
        self.tags.len() - 1
    }

    pub fn outside_id(&self) -> usize {
        0
    }

    pub fn ignore_id(&self) -> usize {
        self.tags.len() - 1
    }

    pub fn id(&self, tag: &Tag) -> Option<usize> {
        self.ids.get(tag).copied()
    }

    pub fn tag(&self, id: usize) -> Option<&Tag> {
        self.tags.get(id)
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn class_index(&self, class: &EntityClass) -> Option<usize> {
        self.class_ids.get(class).copied()
    }

    pub fn class_by_name(&self, name: &str) -> Option<&EntityClass> {
        self.classes.iter().find(|c| c.as_str() == name)
    }
}

pub fn build_label_inventory(
    classes: impl IntoIterator<Item = EntityClass>,
) -> Result<LabelInventory, TagError> {
    LabelInventory::new(classes)
}

/// Turns orphan `I-c` tags (not preceded by `B-c`/`I-c`) into `B-c`.
pub fn repair_tag_sequence(tags: &[Tag]) -> Result<Vec<Tag>, TagError> {
    let mut out: Vec<Tag> = Vec::with_capacity(tags.len());
    for (i, tag) in tags.iter().enumerate() {
        let fixed = match tag {
            Tag::Ignore => return Err(TagError::IgnoreInSequence(i)),
            Tag::Inside(class) => {
                let continues = matches!(
                    out.last(),
                    Some(Tag::Begin(prev) | Tag::Inside(prev)) if prev == class
                );
                if continues {
                    tag.clone()
                } else {
                    Tag::Begin(class.clone())
                }
            }
            other => other.clone(),
        };
        out.push(fixed);
    }
    Ok(out)
}

/// A decoded entity. Word indices are inclusive, character offsets half-open
/// and counted in Unicode scalar values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub class: EntityClass,
    pub word_start: usize,
    pub word_end: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub surface: String,
}

/// Words with word-level tags and their character offsets into `text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    text: String,
    words: Vec<String>,
    tags: Vec<Tag>,
    offsets: Vec<Range<usize>>,
}

impl AnnotatedSentence {
    /// Builds a sentence whose text is the words joined by single spaces.
    pub fn from_words(words: Vec<String>, tags: Vec<Tag>) -> Result<Self, TagError> {
        let (text, offsets) = join_words(&words);
        AnnotatedSentence::with_text(text, words, offsets, tags)
    }

    /// Builds a sentence over an existing text. Each offset range must select
    /// exactly its word.
    pub fn with_text(
        text: String,
        words: Vec<String>,
        offsets: Vec<Range<usize>>,
        tags: Vec<Tag>,
    ) -> Result<Self, TagError> {
        if words.len() != tags.len() || words.len() != offsets.len() {
            return Err(TagError::LengthMismatch {
                words: words.len(),
                tags: tags.len(),
            });
        }
        if let Some(i) = tags.iter().position(|t| *t == Tag::Ignore) {
            return Err(TagError::IgnoreInSequence(i));
        }
        let index = CharIndex::new(&text);
        for (i, (word, range)) in words.iter().zip(&offsets).enumerate() {
            if word.is_empty() {
                return Err(TagError::EmptyWord(i));
            }
            if index.slice(&text, range.clone()) != Some(word.as_str()) {
                return Err(TagError::OffsetMismatch(i));
            }
        }
        let tags = repair_tag_sequence(&tags)?;
        Ok(AnnotatedSentence {
            text,
            words,
            tags,
            offsets,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn offsets(&self) -> &[Range<usize>] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Replaces the tags, repairing them.
    pub fn with_tags(mut self, tags: Vec<Tag>) -> Result<Self, TagError> {
        if tags.len() != self.words.len() {
            return Err(TagError::LengthMismatch {
                words: self.words.len(),
                tags: tags.len(),
            });
        }
        self.tags = repair_tag_sequence(&tags)?;
        Ok(self)
    }
}

/// Joins words with single spaces and returns the char range of each word.
pub fn join_words(words: &[String]) -> (String, Vec<Range<usize>>) {
    let mut text = String::new();
    let mut offsets = Vec::with_capacity(words.len());
    let mut pos = 0;
    for (i, word) in words.iter().enumerate() {
        if i > 0 {
            text.push(' ');
            pos += 1;
        }
        let len = word.chars().count();
        text.push_str(word);
        offsets.push(pos..pos + len);
        pos += len;
    }
    (text, offsets)
}

/// Char-index to byte-index lookup for one string.
pub(crate) struct CharIndex {
    bytes: Vec<usize>,
}

impl CharIndex {
    pub(crate) fn new(text: &str) -> Self {
        let mut bytes: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bytes.push(text.len());
        CharIndex { bytes }
    }

    pub(crate) fn slice<'a>(&self, text: &'a str, range: Range<usize>) -> Option<&'a str> {
        if range.start > range.end {
            return None;
        }
        let start = *self.bytes.get(range.start)?;
        let end = *self.bytes.get(range.end)?;
        text.get(start..end)
    }
}

/// Maximal `B-c (I-c)*` runs become spans, in word order.
///
/// Orphan `I-c` tags open a span, the same reading [`repair_tag_sequence`]
/// gives them, so the function is total.
pub fn decode_spans(sentence: &AnnotatedSentence) -> Vec<EntitySpan> {
    let index = CharIndex::new(&sentence.text);
    let mut spans = Vec::new();
    let mut open: Option<(EntityClass, usize)> = None;

    let close = |open: &mut Option<(EntityClass, usize)>, end: usize, spans: &mut Vec<EntitySpan>| {
        if let Some((class, start)) = open.take() {
            let char_start = sentence.offsets[start].start;
            let char_end = sentence.offsets[end].end;
            let surface = index
                .slice(&sentence.text, char_start..char_end)
                .unwrap_or_default()
                .to_string();
            spans.push(EntitySpan {
                class,
                word_start: start,
                word_end: end,
                char_start,
                char_end,
                surface,
            });
        }
    };

    for (i, tag) in sentence.tags.iter().enumerate() {
        match tag {
            Tag::Inside(class) if matches!(&open, Some((c, _)) if c == class) => {}
            Tag::Begin(class) | Tag::Inside(class) => {
                if i > 0 {
                    close(&mut open, i - 1, &mut spans);
                }
                open = Some((class.clone(), i));
            }
            Tag::Outside | Tag::Ignore => {
                if i > 0 {
                    close(&mut open, i - 1, &mut spans);
                }
            }
        }
    }
    if !sentence.tags.is_empty() {
        close(&mut open, sentence.tags.len() - 1, &mut spans);
    }
    spans
}

/// Inverse of [`decode_spans`]: only the word ranges and classes of `spans`
/// are read; the text is synthesized from `words`.
pub fn encode_spans(words: Vec<String>, spans: &[EntitySpan]) -> Result<AnnotatedSentence, TagError> {
    let n = words.len();
    let mut sorted: Vec<&EntitySpan> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.word_start, s.word_end));
    let mut tags = vec![Tag::Outside; n];
    let mut prev: Option<(usize, usize)> = None;
    for span in sorted {
        if span.word_start > span.word_end || span.word_end >= n {
            return Err(TagError::SpanOutOfBounds {
                start: span.word_start,
                end: span.word_end,
                len: n,
            });
        }
        if let Some(p) = prev {
            if span.word_start <= p.1 {
                return Err(TagError::OverlappingSpans {
                    first: p,
                    second: (span.word_start, span.word_end),
                });
            }
        }
        tags[span.word_start] = Tag::Begin(span.class.clone());
        for tag in &mut tags[span.word_start + 1..=span.word_end] {
            *tag = Tag::Inside(span.class.clone());
        }
        prev = Some((span.word_start, span.word_end));
    }
    AnnotatedSentence::from_words(words, tags)
}
