use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ner_core::evaluation::score_with;
use ner_core::{
    default_inventory, AnnotatedSentence, ClassifierSpec, Corpus, EntityClass, Execution, Pipeline, PipelineConfig,
    Tag,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 8] = ["ذهبت", "إلى", "القاهرة", "mo3allem", "جامعة", "beirut", "في", "7ob"];

fn strategies() -> Vec<(&'static str, Execution)> {
    let mut s = vec![("sequential", Execution::Sequential)];
    #[cfg(feature = "parallel")]
    s.push(("parallel", Execution::Parallel));
    s
}

fn sentences(n: usize, rng: &mut impl Rng) -> Vec<String> {
    (0..n)
        .map(|_| {
            (0..rng.gen_range(5..30))
                .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

fn random_corpus(rng: &mut impl Rng, n: usize) -> (Corpus, Corpus) {
    let classes: Vec<EntityClass> = ["Loc", "Org", "Per"].map(|c| EntityClass::new(c).unwrap()).to_vec();
    let tag = |rng: &mut dyn rand::RngCore| match rng.gen_range(0..4) {
        0 => Tag::Begin(classes[rng.gen_range(0..3)].clone()),
        1 => Tag::Inside(classes[rng.gen_range(0..3)].clone()),
        _ => Tag::Outside,
    };
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for _ in 0..n {
        let words: Vec<String> = (0..rng.gen_range(5..40)).map(|i| format!("w{i}")).collect();
        let g = words.iter().map(|_| tag(rng)).collect();
        let p = words.iter().map(|_| tag(rng)).collect();
        gold.push(AnnotatedSentence::from_words(words.clone(), g).unwrap());
        pred.push(AnnotatedSentence::from_words(words, p).unwrap());
    }
    (Corpus::new("gold", gold), Corpus::new("pred", pred))
}

fn batch_tagging(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let texts = sentences(512, &mut rng);
    let pipeline = Pipeline::new(PipelineConfig::new("mock", default_inventory(), ClassifierSpec::MockHash)).unwrap();
    let mut group = c.benchmark_group("run_batch");
    group.throughput(Throughput::Elements(texts.len() as u64));
    for (name, exec) in strategies() {
        group.bench_with_input(BenchmarkId::new(name, texts.len()), &exec, |b, &exec| {
            b.iter(|| black_box(pipeline.run_batch(&texts, exec)))
        });
    }
    group.finish();
}

fn scoring(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (gold, pred) = random_corpus(&mut rng, 5000);
    let mut group = c.benchmark_group("score");
    group.throughput(Throughput::Elements(gold.len() as u64));
    for (name, exec) in strategies() {
        group.bench_with_input(BenchmarkId::new(name, gold.len()), &exec, |b, &exec| {
            b.iter(|| black_box(score_with(&gold, &pred, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, batch_tagging, scoring);
criterion_main!(benches);
