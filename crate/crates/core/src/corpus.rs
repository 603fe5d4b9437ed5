//! CoNLL corpora: reading, writing, splitting and class statistics.
//!
//! Each non-blank line is `token [middle columns...] tag`; the tag is always
//! the last whitespace-separated field. Blank lines separate sentences, lines
//! starting with `#` and `-DOCSTART-` lines are skipped. CoNLL does not keep
//! the original spacing, so sentence text is the words joined by single spaces.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tags::{decode_spans, AnnotatedSentence, EntityClass, LabelInventory, Tag, TagError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: expected `token ... tag`, found {fields} field(s)")]
    FieldCount { line: usize, fields: usize },
    #[error("line {line}: {source}")]
    Tag { line: usize, source: TagError },
    #[error("line {line}: the ignore label is not a word-level tag")]
    IgnoreTag { line: usize },
    #[error("split fractions must be non-negative and sum to 1, got {0}")]
    BadSplit(String),
    #[error("cannot split an empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub source_name: String,
    pub sentences: Vec<AnnotatedSentence>,
}

impl Corpus {
    pub fn new(source_name: impl Into<String>, sentences: Vec<AnnotatedSentence>) -> Self {
        Corpus {
            source_name: source_name.into(),
            sentences: sentences.into_iter().filter(|s| !s.is_empty()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(AnnotatedSentence::len).sum()
    }

    /// Entity classes used by the tags, sorted by name.
    pub fn classes(&self) -> Vec<EntityClass> {
        let set: BTreeSet<&EntityClass> = self
            .sentences
            .iter()
            .flat_map(|s| s.tags().iter().filter_map(Tag::class))
            .collect();
        set.into_iter().cloned().collect()
    }

    pub fn inventory(&self) -> LabelInventory {
        LabelInventory::new(self.classes()).expect("class set has no duplicates")
    }
}

pub fn read_conll(reader: impl BufRead, source_name: &str) -> Result<Corpus, CorpusError> {
    let mut sentences = Vec::new();
    let mut words = Vec::new();
    let mut tags = Vec::new();
    let mut first_line = 0;

    let flush = |words: &mut Vec<String>, tags: &mut Vec<Tag>, sentences: &mut Vec<AnnotatedSentence>, line: usize| {
        if words.is_empty() {
            return Ok(());
        }
        let sentence = AnnotatedSentence::from_words(std::mem::take(words), std::mem::take(tags))
            .map_err(|source| CorpusError::Tag { line, source })?;
        sentences.push(sentence);
        Ok::<(), CorpusError>(())
    };

    for (i, line) in reader.lines().enumerate() {
        let number = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(&mut words, &mut tags, &mut sentences, first_line)?;
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields[0] == "-DOCSTART-" {
            flush(&mut words, &mut tags, &mut sentences, first_line)?;
            continue;
        }
        if fields.len() < 2 {
            return Err(CorpusError::FieldCount {
                line: number,
                fields: fields.len(),
            });
        }
        let tag: Tag = fields[fields.len() - 1]
            .parse()
            .map_err(|source| CorpusError::Tag { line: number, source })?;
        if tag == Tag::Ignore {
            return Err(CorpusError::IgnoreTag { line: number });
        }
        if words.is_empty() {
            first_line = number;
        }
        words.push(fields[0].to_string());
        tags.push(tag);
    }
    flush(&mut words, &mut tags, &mut sentences, first_line)?;
    Ok(Corpus {
        source_name: source_name.to_string(),
        sentences,
    })
}

pub fn read_conll_str(text: &str, source_name: &str) -> Result<Corpus, CorpusError> {
    read_conll(text.as_bytes(), source_name)
}

/// One `token tag` line per word, each sentence followed by one blank line.
pub fn write_conll(corpus: &Corpus) -> String {
    let mut out = String::new();
    for sentence in &corpus.sentences {
        write_sentence(&mut out, sentence.words(), sentence.tags());
    }
    out
}

pub(crate) fn write_sentence(out: &mut String, words: &[String], tags: &[Tag]) {
    for (word, tag) in words.iter().zip(tags) {
        out.push_str(word);
        out.push(' ');
        out.push_str(&tag.to_string());
        out.push('\n');
    }
    out.push('\n');
}

/// Train/eval/test fractions plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: Ratio<u64>,
    pub eval: Ratio<u64>,
    pub test: Ratio<u64>,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: Ratio<u64>, eval: Ratio<u64>, test: Ratio<u64>, seed: u64) -> Result<Self, CorpusError> {
        let spec = SplitSpec {
            train,
            eval,
            test,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_percent(train: u64, eval: u64, test: u64, seed: u64) -> Result<Self, CorpusError> {
        SplitSpec::new(
            Ratio::new(train, 100),
            Ratio::new(eval, 100),
            Ratio::new(test, 100),
            seed,
        )
    }

    fn validate(&self) -> Result<(), CorpusError> {
        if self.train + self.eval + self.test != Ratio::from_integer(1) {
            return Err(CorpusError::BadSplit(format!(
                "{} + {} + {}",
                self.train, self.eval, self.test
            )));
        }
        Ok(())
    }
}

fn floor_part(fraction: Ratio<u64>, n: usize) -> usize {
    (fraction * Ratio::from_integer(n as u64)).to_integer() as usize
}

/// Seeded sentence-level shuffle, then a contiguous cut into
/// (train, eval, test). Eval and test get `floor(fraction * N)` sentences,
/// train takes the rest.
pub fn split(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus, Corpus), CorpusError> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let n = corpus.len();
    let eval_n = floor_part(spec.eval, n);
    let test_n = floor_part(spec.test, n);
    let train_n = n - eval_n - test_n;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));

    let part = |suffix: &str, range: std::ops::Range<usize>| Corpus {
        source_name: format!("{}:{suffix}", corpus.source_name),
        sentences: order[range].iter().map(|&i| corpus.sentences[i].clone()).collect(),
    };
    Ok((
        part("train", 0..train_n),
        part("eval", train_n..train_n + eval_n),
        part("test", train_n + eval_n..n),
    ))
}

/// Decoded span count per class.
pub fn class_histogram(corpus: &Corpus) -> BTreeMap<EntityClass, usize> {
    let mut counts = BTreeMap::new();
    for sentence in &corpus.sentences {
        for span in decode_spans(sentence) {
            *counts.entry(span.class).or_insert(0) += 1;
        }
    }
    counts
}
