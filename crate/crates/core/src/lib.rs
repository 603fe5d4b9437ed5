//! Arabic and Arabizi named entity recognition: tag algebra, CoNLL corpora,
//! sub-word tokenization with label alignment, Arabizi transliteration,
//! pluggable token classification and entity-level evaluation.
//!
//! The data-parallel loops (batch tagging, per-sentence scoring) run on rayon
//! when the `parallel` feature is enabled (the default) and fall back to plain
//! iterators otherwise. See [`exec`].

pub mod arabizi;
pub mod classifier;
pub mod corpus;
pub mod evaluation;
pub mod exec;
pub mod tags;
pub mod tokenizer;

pub use arabizi::{
    classify_word, clean_text, process_pipeline_front, strip_diacritics, transliterate_local,
    CleanedText, ExternalConfig, ExternalTransliterator, FrontOutput, RuleTable,
    TransliterationBackend, TransliterationResult, Transliterator, WordClassification, WordKind,
    WordProvenance,
};
pub use classifier::{
    default_gazetteer, default_inventory, external_model_inventory, load_external_model, scores_to_tags, ClassifierSpec, GazetteerClassifier, MockHashClassifier,
    NerResult, Pipeline, PipelineConfig, ScoreMatrix, TokenClassifier,
};
pub use corpus::{class_histogram, read_conll, split, write_conll, Corpus, SplitSpec};
pub use evaluation::{render_report, score, EvalReport, Metrics};
pub use exec::Execution;
pub use tags::{
    build_label_inventory, decode_spans, encode_spans, repair_tag_sequence, AnnotatedSentence,
    EntityClass, EntitySpan, LabelInventory, Tag,
};
pub use tokenizer::{
    align_labels, encode_sentence, merge_windows, project_to_words, tokenize_word,
    AlignmentApproach, OverflowPolicy, TokenizedSequence, TokenizerConfig, Vocabulary,
};
