use std::collections::BTreeSet;

use ner_core::tokenizer::{CONTINUATION_PREFIX, OverflowPolicy, TokenizerConfig};
use ner_core::{
    align_labels, encode_sentence, merge_windows, project_to_words, repair_tag_sequence, tokenize_word,
    AlignmentApproach, EntityClass, LabelInventory, Tag, Vocabulary,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LETTERS: &str = "ابتثجحخدذرزسشصضطظعغفقكلمنهوية";

/// 200 entries: specials, every letter whole and continued, the Cairo pieces
/// and random two- and three-letter pieces.
fn toy_vocabulary() -> Vocabulary {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let letters: Vec<char> = LETTERS.chars().collect();
    let mut tokens: Vec<String> = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "ال", "##قاهر", "##ة"]
        .map(String::from)
        .to_vec();
    let mut seen: BTreeSet<String> = tokens.iter().cloned().collect();
    let singles = letters.iter().flat_map(|c| [c.to_string(), format!("##{c}")]);
    for token in singles {
        if seen.insert(token.clone()) {
            tokens.push(token);
        }
    }
    while tokens.len() < 200 {
        let len = rng.gen_range(2..=3);
        let body: String = (0..len).map(|_| *letters.choose(&mut rng).unwrap()).collect();
        let token = if rng.gen_bool(0.5) { format!("##{body}") } else { body };
        if seen.insert(token.clone()) {
            tokens.push(token);
        }
    }
    Vocabulary::from_tokens(tokens).unwrap()
}

fn random_word(rng: &mut impl Rng) -> String {
    let letters: Vec<char> = LETTERS.chars().collect();
    (0..rng.gen_range(1..9)).map(|_| *letters.choose(rng).unwrap()).collect()
}

fn inventory() -> LabelInventory {
    LabelInventory::new(["Loc", "Org", "Per"].map(|c| EntityClass::new(c).unwrap())).unwrap()
}

fn random_tags(rng: &mut impl Rng, n: usize, inv: &LabelInventory) -> Vec<Tag> {
    let decodable = &inv.tags()[..inv.decodable_len()];
    let raw: Vec<Tag> = (0..n).map(|_| decodable.choose(rng).unwrap().clone()).collect();
    repair_tag_sequence(&raw).unwrap()
}

#[test]
fn toy_vocabulary_has_two_hundred_entries() {
    assert_eq!(toy_vocabulary().len(), 200);
}

#[test]
fn cairo_split() {
    let v = toy_vocabulary();
    assert_eq!(tokenize_word(&v, "القاهرة"), ["ال", "##قاهر", "##ة"]);
}

#[test]
fn greedy_pieces_are_deterministic_maximal_and_concatenate_back() {
    let v = toy_vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let word = random_word(&mut rng);
        let pieces = tokenize_word(&v, &word);
        assert_eq!(pieces, tokenize_word(&v, &word));
        assert!(!pieces.contains(&"[UNK]".to_string()), "{word}");

        let rebuilt: String = pieces
            .iter()
            .map(|p| p.strip_prefix(CONTINUATION_PREFIX).unwrap_or(p))
            .collect();
        assert_eq!(rebuilt, word);

        // no piece could have been extended into a longer vocabulary entry
        let chars: Vec<char> = word.chars().collect();
        let mut at = 0;
        for (i, piece) in pieces.iter().enumerate() {
            let len = piece.strip_prefix(CONTINUATION_PREFIX).unwrap_or(piece).chars().count();
            for longer in at + len + 1..=chars.len() {
                let body: String = chars[at..longer].iter().collect();
                let candidate = if i == 0 { body } else { format!("##{body}") };
                assert!(!v.contains(&candidate), "{word}: {candidate} beats {piece}");
            }
            at += len;
        }
    }
}

#[test]
fn unsegmentable_word_is_one_unknown() {
    let v = toy_vocabulary();
    assert_eq!(tokenize_word(&v, "abc"), ["[UNK]"]);
    assert_eq!(tokenize_word(&v, "قaق"), ["[UNK]"]);
    assert!(tokenize_word(&v, "").is_empty());
}

#[test]
fn project_after_align_is_identity() {
    let v = toy_vocabulary();
    let inv = inventory();
    let config = TokenizerConfig::new(512, OverflowPolicy::Truncate).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for approach in [
        AlignmentApproach::AllSubtokens,
        AlignmentApproach::AllSubtokensRepeat,
        AlignmentApproach::FirstSubtokenOnly,
    ] {
        for _ in 0..500 {
            let words: Vec<String> = (0..rng.gen_range(0..15)).map(|_| random_word(&mut rng)).collect();
            let tags = random_tags(&mut rng, words.len(), &inv);
            let seqs = encode_sentence(&v, &config, &words);
            assert_eq!(seqs.len(), 1);
            let seq = align_labels(seqs[0].clone(), &tags, approach, &inv).unwrap();
            let labels: Vec<Tag> = seq.label_tags(&inv).unwrap().into_iter().cloned().collect();
            assert_eq!(project_to_words(&seq, &labels).unwrap(), tags, "{approach:?}");
        }
    }
}

#[test]
fn first_subtoken_only_marks_the_rest_ignored() {
    let v = toy_vocabulary();
    let inv = inventory();
    let loc = EntityClass::new("Loc").unwrap();
    let words = vec!["القاهرة".to_string()];
    let seq = encode_sentence(&v, &TokenizerConfig::default(), &words).remove(0);
    let tags = [Tag::Begin(loc.clone())];
    let label = |approach| {
        let seq = align_labels(seq.clone(), &tags, approach, &inv).unwrap();
        seq.label_tags(&inv).unwrap()[1..4].iter().map(|t| t.to_string()).collect::<Vec<_>>()
    };
    assert_eq!(label(AlignmentApproach::AllSubtokens), ["B-Loc", "I-Loc", "I-Loc"]);
    assert_eq!(label(AlignmentApproach::AllSubtokensRepeat), ["B-Loc", "B-Loc", "B-Loc"]);
    assert_eq!(label(AlignmentApproach::FirstSubtokenOnly), ["B-Loc", "[PAD]", "[PAD]"]);
}

#[test]
fn windows_cover_every_word_and_merge_back() {
    let v = toy_vocabulary();
    let inv = inventory();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        let max = rng.gen_range(4..20);
        let stride = rng.gen_range(1..=max - 2);
        let config = TokenizerConfig::new(max, OverflowPolicy::Window { stride }).unwrap();
        let words: Vec<String> = (0..rng.gen_range(0..25)).map(|_| random_word(&mut rng)).collect();
        let tags = random_tags(&mut rng, words.len(), &inv);
        let seqs = encode_sentence(&v, &config, &words);
        let mut firsts = BTreeSet::new();
        for seq in &seqs {
            assert_eq!(seq.len(), max);
            for (w, first) in seq.word_index.iter().zip(&seq.first_piece) {
                if let (Some(w), true) = (w, first) {
                    firsts.insert(*w);
                }
            }
        }
        assert_eq!(firsts.len(), words.len());

        let predictions: Vec<Vec<Tag>> = seqs
            .iter()
            .map(|s| {
                let s = align_labels(s.clone(), &tags, AlignmentApproach::AllSubtokens, &inv).unwrap();
                s.label_tags(&inv).unwrap().into_iter().cloned().collect()
            })
            .collect();
        assert_eq!(merge_windows(&seqs, &predictions).unwrap(), tags);
    }
}
