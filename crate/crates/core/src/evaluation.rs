//! Strict entity-level scoring.
//!
//! A predicted span is a true positive only when a gold span in the same
//! sentence has the same class and the same word boundaries. Metrics are
//! percentages. With no predictions precision is 0, with no gold spans recall
//! is 0, and F1 is 0 whenever precision + recall is 0.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::Corpus;
use crate::exec::Execution;
use crate::tags::{decode_spans, EntityClass};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold has {gold} sentences, prediction has {predicted}")]
    SentenceCount { gold: usize, predicted: usize },
    #[error("sentence {sentence} differs between gold and prediction (first differing word: {word})")]
    WordMismatch { sentence: usize, word: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl Counts {
    fn add(&mut self, other: &Counts) {
        self.true_positives += other.true_positives;
        self.false_positives += other.false_positives;
        self.false_negatives += other.false_negatives;
    }

    pub fn gold(&self) -> usize {
        self.true_positives + self.false_negatives
    }

    pub fn predicted(&self) -> usize {
        self.true_positives + self.false_positives
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(c: &Counts) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
        let precision = ratio(c.true_positives, c.predicted());
        let recall = ratio(c.true_positives, c.gold());
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub metrics: Metrics,
    pub counts: Counts,
}

impl ClassReport {
    pub fn support(&self) -> usize {
        self.counts.gold()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub micro: Metrics,
    pub counts: Counts,
    pub per_class: BTreeMap<EntityClass, ClassReport>,
}

type ClassCounts = BTreeMap<EntityClass, Counts>;

fn merge(mut a: ClassCounts, b: ClassCounts) -> ClassCounts {
    for (class, counts) in b {
        a.entry(class).or_default().add(&counts);
    }
    a
}

fn check_alignment(gold: &Corpus, predicted: &Corpus) -> Result<(), EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::SentenceCount {
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    for (i, (g, p)) in gold.sentences.iter().zip(&predicted.sentences).enumerate() {
        if g.words() != p.words() {
            let word = g
                .words()
                .iter()
                .zip(p.words())
                .position(|(a, b)| a != b)
                .unwrap_or_else(|| g.len().min(p.len()));
            return Err(EvalError::WordMismatch { sentence: i, word });
        }
    }
    Ok(())
}

pub fn score(gold: &Corpus, predicted: &Corpus) -> Result<EvalReport, EvalError> {
    score_with(gold, predicted, Execution::default())
}

/// [`score`] with an explicit execution strategy. Sentences are counted
/// independently and merged, so both strategies give identical reports.
pub fn score_with(gold: &Corpus, predicted: &Corpus, exec: Execution) -> Result<EvalReport, EvalError> {
    check_alignment(gold, predicted)?;
    let per_class = exec.map_reduce(
        &gold.sentences,
        &predicted.sentences,
        ClassCounts::new(),
        |_, g, p| {
            let gold_spans: HashSet<(EntityClass, usize, usize)> = decode_spans(g)
                .into_iter()
                .map(|s| (s.class, s.word_start, s.word_end))
                .collect();
            let mut counts = ClassCounts::new();
            let mut matched = HashSet::new();
            for span in decode_spans(p) {
                let key = (span.class, span.word_start, span.word_end);
                let entry = counts.entry(key.0.clone()).or_default();
                if gold_spans.contains(&key) && matched.insert(key.clone()) {
                    entry.true_positives += 1;
                } else {
                    entry.false_positives += 1;
                }
            }
            for key in gold_spans {
                if !matched.contains(&key) {
                    counts.entry(key.0).or_default().false_negatives += 1;
                }
            }
            counts
        },
        merge,
    );
    let mut total = Counts::default();
    for counts in per_class.values() {
        total.add(counts);
    }
    Ok(EvalReport {
        micro: Metrics::from_counts(&total),
        counts: total,
        per_class: per_class
            .into_iter()
            .map(|(class, counts)| {
                (
                    class,
                    ClassReport {
                        metrics: Metrics::from_counts(&counts),
                        counts,
                    },
                )
            })
            .collect(),
    })
}

impl EvalReport {
    /// Classes by gold support, descending; ties by name.
    pub fn classes_by_support(&self) -> Vec<(&EntityClass, &ClassReport)> {
        let mut classes: Vec<_> = self.per_class.iter().collect();
        classes.sort_by(|a, b| b.1.support().cmp(&a.1.support()).then_with(|| a.0.cmp(b.0)));
        classes
    }

    /// `key=value` lines for scripts and CI checks.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut put = |key: &str, value: String| {
            let _ = writeln!(out, "{key}={value}");
        };
        put("micro.precision", format!("{:.4}", self.micro.precision));
        put("micro.recall", format!("{:.4}", self.micro.recall));
        put("micro.f1", format!("{:.4}", self.micro.f1));
        put("true_positives", self.counts.true_positives.to_string());
        put("false_positives", self.counts.false_positives.to_string());
        put("false_negatives", self.counts.false_negatives.to_string());
        for (class, report) in &self.per_class {
            put(&format!("class.{class}.precision"), format!("{:.4}", report.metrics.precision));
            put(&format!("class.{class}.recall"), format!("{:.4}", report.metrics.recall));
            put(&format!("class.{class}.f1"), format!("{:.4}", report.metrics.f1));
            put(&format!("class.{class}.support"), report.support().to_string());
            put(&format!("class.{class}.predicted"), report.counts.predicted().to_string());
        }
        out
    }
}

/// Fixed-width table: Recall, Precision and F1 rows; the micro column first,
/// then one column per class by descending gold support. One decimal place.
pub fn render_report(report: &EvalReport) -> String {
    let mut columns: Vec<(String, Metrics)> = vec![("micro".to_string(), report.micro)];
    columns.extend(
        report
            .classes_by_support()
            .into_iter()
            .map(|(class, r)| (class.to_string(), r.metrics)),
    );
    let label_width = "Precision".len();
    let widths: Vec<usize> = columns.iter().map(|(name, _)| name.chars().count().max(5)).collect();

    let mut out = String::new();
    let _ = write!(out, "{:<label_width$}", "Metric");
    for ((name, _), w) in columns.iter().zip(&widths) {
        let _ = write!(out, "  {name:>w$}");
    }
    out.push('\n');
    let rows: [(&str, fn(&Metrics) -> f64); 3] = [
        ("Recall", |m| m.recall),
        ("Precision", |m| m.precision),
        ("F1", |m| m.f1),
    ];
    for (label, get) in rows {
        let _ = write!(out, "{label:<label_width$}");
        for ((_, metrics), w) in columns.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$.1}", get(metrics));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::read_conll_str;

    fn corpus(text: &str) -> Corpus {
        read_conll_str(text, "t").unwrap()
    }

    #[test]
    fn perfect_match() {
        let gold = corpus("a B-Loc\nb I-Loc\nc O\nd B-Per\n\n");
        let r = score(&gold, &gold).unwrap();
        assert_eq!(r.micro, Metrics { precision: 100.0, recall: 100.0, f1: 100.0 });
    }

    #[test]
    fn one_hit_one_spurious_one_missed() {
        let gold = corpus("a B-Loc\nb O\nc B-Per\nd O\n\n");
        let pred = corpus("a B-Loc\nb B-Org\nc O\nd O\n\n");
        let r = score(&gold, &pred).unwrap();
        assert_eq!(
            r.counts,
            Counts { true_positives: 1, false_positives: 1, false_negatives: 1 }
        );
        assert_eq!(r.micro, Metrics { precision: 50.0, recall: 50.0, f1: 50.0 });
    }

    #[test]
    fn boundary_error_is_fp_and_fn() {
        let gold = corpus("a B-Loc\nb I-Loc\nc O\n\n");
        let pred = corpus("a B-Loc\nb O\nc O\n\n");
        let r = score(&gold, &pred).unwrap();
        assert_eq!(
            r.counts,
            Counts { true_positives: 0, false_positives: 1, false_negatives: 1 }
        );
    }

    #[test]
    fn zero_denominators() {
        let gold = corpus("a B-Loc\n\n");
        let none = corpus("a O\n\n");
        let r = score(&gold, &none).unwrap();
        assert_eq!(r.micro, Metrics::default());
        let r = score(&none, &none).unwrap();
        assert_eq!(r.micro, Metrics::default());
        assert_eq!(r.counts.gold(), 0);
    }

    #[test]
    fn misaligned_corpora() {
        let a = corpus("a O\n\nb O\n\n");
        let b = corpus("a O\n\n");
        assert_eq!(score(&a, &b).unwrap_err(), EvalError::SentenceCount { gold: 2, predicted: 1 });
        let c = corpus("a O\n\nb O\nx O\n\n");
        assert_eq!(score(&a, &c).unwrap_err(), EvalError::WordMismatch { sentence: 1, word: 1 });
    }

    #[test]
    fn render_micro_only() {
        let empty = corpus("a O\n\n");
        let text = render_report(&score(&empty, &empty).unwrap());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0].split_whitespace().collect::<Vec<_>>(), ["Metric", "micro"]);
        assert_eq!(lines[1].split_whitespace().collect::<Vec<_>>(), ["Recall", "0.0"]);
        assert_eq!(lines[3].split_whitespace().collect::<Vec<_>>(), ["F1", "0.0"]);
    }

    #[test]
    fn render_one_decimal_and_support_order() {
        let gold = corpus("a B-Per\nb B-Loc\nc B-Loc\nd B-Loc\n\n");
        let pred = corpus("a B-Per\nb B-Loc\nc O\nd O\n\n");
        let report = score(&gold, &pred).unwrap();
        let text = render_report(&report);
        let header: Vec<&str> = text.lines().next().unwrap().split_whitespace().collect();
        assert_eq!(header, ["Metric", "micro", "Loc", "Per"]);
        let recall: Vec<&str> = text.lines().nth(1).unwrap().split_whitespace().collect();
        assert_eq!(recall, ["Recall", "50.0", "33.3", "100.0"]);
        assert_eq!(text, render_report(&report));
    }

    #[test]
    fn key_values_export() {
        let gold = corpus("a B-Loc\nb O\nc B-Per\nd O\n\n");
        let pred = corpus("a B-Loc\nb B-Org\nc O\nd O\n\n");
        let kv = score(&gold, &pred).unwrap().to_key_values();
        assert!(kv.contains("micro.f1=50.0000\n"));
        assert!(kv.contains("class.Org.support=0\n"));
        assert!(kv.contains("true_positives=1\n"));
    }
}
