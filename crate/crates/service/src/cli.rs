//! Batch commands behind the `ner` binary.

use std::path::Path;

use anyhow::{bail, Context};
use ner_core::corpus::read_conll;
use ner_core::evaluation::score_with;
use ner_core::{
    class_histogram, split, write_conll, AlignmentApproach, AnnotatedSentence, Corpus, EvalReport, Execution,
    Pipeline, SplitSpec,
};

use crate::config::ServiceConfig;

/// Command-line adjustments applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub approach: Option<AlignmentApproach>,
    pub no_external_translit: bool,
}

pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> anyhow::Result<ServiceConfig> {
    let mut config = match path {
        Some(path) => ServiceConfig::load(path)?,
        None => ServiceConfig::default(),
    };
    if let Some(approach) = overrides.approach {
        for model in config.models.values_mut() {
            model.approach = approach;
        }
    }
    if overrides.no_external_translit {
        config.transliteration.external = false;
    }
    Ok(config)
}

/// The named model, or `gazetteer`, or the first configured one.
pub fn build_pipeline(config: &ServiceConfig, model: Option<&str>) -> anyhow::Result<Pipeline> {
    let id = match model {
        Some(id) => id,
        None if config.models.contains_key("gazetteer") => "gazetteer",
        None => config.models.keys().next().context("no models configured")?,
    };
    Pipeline::new(config.pipeline_config(id)?).with_context(|| format!("loading model {id}"))
}

fn read_corpus(path: &Path) -> anyhow::Result<Corpus> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let name = path.display().to_string();
    read_conll(std::io::BufReader::new(file), &name).with_context(|| format!("in {}", path.display()))
}

/// Tags a plain-text file (one sentence per line) and returns CoNLL text over
/// the normalized words. Blank lines, and lines with nothing left after
/// cleaning, produce no sentence.
pub fn cli_tag(pipeline: &Pipeline, input: &Path, exec: Execution) -> anyhow::Result<String> {
    let text = std::fs::read_to_string(input).with_context(|| format!("cannot read {}", input.display()))?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut sentences = Vec::with_capacity(lines.len());
    for (line, result) in lines.iter().zip(pipeline.run_batch(&lines, exec)) {
        let result = result.with_context(|| format!("tagging {line:?}"))?;
        if result.tags.is_empty() {
            continue;
        }
        sentences.push(AnnotatedSentence::from_words(result.words(), result.tags)?);
    }
    Ok(write_conll(&Corpus::new(input.display().to_string(), sentences)))
}

/// Re-tags the words of a CoNLL file, keeping its tokenization. Gold tags in
/// the input are ignored.
pub fn cli_tag_conll(pipeline: &Pipeline, input: &Path, exec: Execution) -> anyhow::Result<String> {
    let gold = read_corpus(input)?;
    let tagged = exec.map(&gold.sentences, |s| {
        let tags = pipeline.tag_words(s.words())?;
        anyhow::Ok(s.clone().with_tags(tags)?)
    });
    let sentences = tagged.into_iter().collect::<anyhow::Result<Vec<_>>>()?;
    Ok(write_conll(&Corpus::new(gold.source_name, sentences)))
}

pub fn cli_eval(gold: &Path, predicted: &Path, exec: Execution) -> anyhow::Result<EvalReport> {
    let gold = read_corpus(gold)?;
    let predicted = read_corpus(predicted)?;
    Ok(score_with(&gold, &predicted, exec)?)
}

/// Parses `80,10,10` style percentages.
pub fn parse_ratios(text: &str) -> anyhow::Result<(u64, u64, u64)> {
    let parts: Vec<u64> = text
        .split(',')
        .map(|p| p.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad ratios {text:?}"))?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => bail!("expected three comma-separated percentages, got {text:?}"),
    }
}

/// Writes `train.txt`, `eval.txt` and `test.txt` into `out_dir` and returns a
/// short summary with per-class span counts.
pub fn cli_split(input: &Path, out_dir: &Path, spec: &SplitSpec) -> anyhow::Result<String> {
    let corpus = read_corpus(input)?;
    let (train, eval, test) = split(&corpus, spec)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut summary = String::new();
    for (name, part) in [("train", &train), ("eval", &eval), ("test", &test)] {
        let path = out_dir.join(format!("{name}.txt"));
        std::fs::write(&path, write_conll(part)).with_context(|| format!("writing {}", path.display()))?;
        summary.push_str(&format!("{name}: {} sentences, {} tokens\n", part.len(), part.token_count()));
        for (class, n) in class_histogram(part) {
            summary.push_str(&format!("  {class}: {n}\n"));
        }
    }
    Ok(summary)
}
