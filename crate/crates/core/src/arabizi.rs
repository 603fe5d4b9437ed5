//! Front half of the pipeline: text cleaning, per-word script detection and
//! Arabizi-to-Arabic transliteration.
//!
//! Transliteration has two backends. [`RuleTable`] is a deterministic
//! longest-match rewrite table (the built-in one lives in
//! `data/arabizi_rules.tsv`). [`ExternalTransliterator`] queries an input-tools
//! style HTTP endpoint word by word and falls back to the rule table whenever
//! the request or the response fails.

use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex, OnceLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use regex::Regex;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;
use unicode_script::{Script, UnicodeScript};

const BUILTIN_RULES: &str = include_str!("../data/arabizi_rules.tsv");

/// Stand-in for a Latin word that has no Arabic rendering at all.
pub const UNTRANSLITERABLE: &str = "؟";

#[derive(Debug, Error)]
pub enum ArabiziError {
    #[error("cannot transliterate an empty word")]
    EmptyWord,
    #[error("{word:?} is {kind:?}, not Arabizi")]
    NotArabizi { word: String, kind: WordKind },
    #[error("no Arabic rendering for {0:?}")]
    NoTransliteration(String),
    #[error("rule table line {line}: {message}")]
    RuleTable { line: usize, message: String },
    #[error("invalid transliteration endpoint {endpoint:?}: {message}")]
    Endpoint { endpoint: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CleanedText {
    pub text: String,
    /// For each output char, the index of the input char it came from.
    pub offset_map: Vec<usize>,
}

/// Emoji and other symbols, private-use and unassigned code points, and
/// invisible format characters except the zero-width non-joiner.
fn dropped_chars() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"[\p{So}\p{Sk}\p{Co}\p{Cn}\u{FE0E}\u{FE0F}\u{20E3}]|[\p{Cf}--\u{200C}]")
            .expect("valid pattern")
    })
}

/// Collapses whitespace runs (newlines included) to single spaces, drops
/// emoji, symbols and invisible format characters, and trims both ends.
pub fn clean_text(raw: &str) -> CleanedText {
    let mut text = String::with_capacity(raw.len());
    let mut offset_map = Vec::new();
    let mut pending_space: Option<usize> = None;
    let mut dropped = dropped_chars().find_iter(raw).map(|m| m.start()).peekable();
    for (i, (byte, c)) in raw.char_indices().enumerate() {
        let is_dropped = dropped.next_if_eq(&byte).is_some();
        if c.is_whitespace() {
            pending_space.get_or_insert(i);
            continue;
        }
        if is_dropped || c.is_control() {
            continue;
        }
        if let Some(space) = pending_space.take() {
            if !text.is_empty() {
                text.push(' ');
                offset_map.push(space);
            }
        }
        text.push(c);
        offset_map.push(i);
    }
    CleanedText { text, offset_map }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordKind {
    Arabic,
    Arabizi,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordClassification {
    pub word: String,
    pub kind: WordKind,
}

pub fn is_latin_letter(c: char) -> bool {
    c.is_alphabetic() && c.script() == Script::Latin
}

pub fn is_arabic_letter(c: char) -> bool {
    c.is_alphabetic() && c.script() == Script::Arabic
}

/// Code point inside one of the Arabic Unicode blocks.
pub fn is_arabic_block(c: char) -> bool {
    matches!(c,
        '\u{0600}'..='\u{06FF}'
        | '\u{0750}'..='\u{077F}'
        | '\u{08A0}'..='\u{08FF}'
        | '\u{FB50}'..='\u{FDFF}'
        | '\u{FE70}'..='\u{FEFF}')
}

/// Any Latin letter makes a word Arabizi, even next to Arabic letters.
pub fn classify_word(word: &str) -> WordClassification {
    let kind = if word.chars().any(is_latin_letter) {
        WordKind::Arabizi
    } else if word.chars().any(is_arabic_letter) {
        WordKind::Arabic
    } else {
        WordKind::Neutral
    };
    WordClassification {
        word: word.to_string(),
        kind,
    }
}

/// Removes Arabic harakat, tanween, shadda, sukun and the superscript alef.
pub fn strip_diacritics(text: &str) -> String {
    text.chars()
        .filter(|c| !matches!(c, '\u{064B}'..='\u{065F}' | '\u{0670}'))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransliterationBackend {
    External,
    LocalRules,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransliterationResult {
    pub source: String,
    /// Non-empty; the first entry is the one used.
    pub candidates: Vec<String>,
    pub backend: TransliterationBackend,
    /// Why the external backend was bypassed, if it was.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

impl TransliterationResult {
    pub fn best(&self) -> &str {
        &self.candidates[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Anchor {
    None,
    Start,
    End,
    Whole,
}

/// Longest-match Latin-to-Arabic rewrite rules.
#[derive(Debug, Clone, Default)]
pub struct RuleTable {
    rules: HashMap<(Anchor, String), String>,
    longest: usize,
}

impl RuleTable {
    /// Parses `latin<TAB>arabic` lines. Blank lines and `#` comments are
    /// skipped; `^` and `$` anchor a rule to the word start or end.
    pub fn parse(text: &str) -> Result<Self, ArabiziError> {
        let mut table = RuleTable::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: &str| ArabiziError::RuleTable {
                line: line_no,
                message: message.to_string(),
            };
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (latin, arabic) = line.split_once('\t').ok_or_else(|| err("missing tab separator"))?;
            let (anchor, seq) = match (latin.strip_prefix('^'), latin.len() > 1 && latin.ends_with('$')) {
                (Some(rest), true) => (Anchor::Whole, &rest[..rest.len() - 1]),
                (Some(rest), false) => (Anchor::Start, rest),
                (None, true) => (Anchor::End, &latin[..latin.len() - 1]),
                (None, false) => (Anchor::None, latin),
            };
            if seq.is_empty() {
                return Err(err("empty Latin sequence"));
            }
            if seq.chars().any(char::is_uppercase) {
                return Err(err("Latin sequence must be lowercase"));
            }
            if !arabic.chars().all(is_arabic_block) {
                return Err(err("replacement must be Arabic script"));
            }
            table.longest = table.longest.max(seq.chars().count());
            table.rules.insert((anchor, seq.to_string()), arabic.to_string());
        }
        Ok(table)
    }

    pub fn builtin() -> Arc<RuleTable> {
        static TABLE: OnceLock<Arc<RuleTable>> = OnceLock::new();
        TABLE
            .get_or_init(|| Arc::new(RuleTable::parse(BUILTIN_RULES).expect("built-in rule table parses")))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Rewrites `word` left to right. Characters with no rule are dropped, so
    /// the output is Arabic script only (and possibly empty).
    pub fn apply(&self, word: &str) -> String {
        let chars: Vec<char> = word
            .nfkd()
            .filter(|c| !is_combining_mark(*c))
            .flat_map(char::to_lowercase)
            .collect();
        let n = chars.len();
        let mut out = String::new();
        let mut pos = 0;
        let mut key = String::new();
        while pos < n {
            let mut matched = None;
            'len: for len in (1..=self.longest.min(n - pos)).rev() {
                key.clear();
                key.extend(&chars[pos..pos + len]);
                let at_start = pos == 0;
                let at_end = pos + len == n;
                let anchors = [
                    (Anchor::Whole, at_start && at_end),
                    (Anchor::Start, at_start),
                    (Anchor::End, at_end),
                    (Anchor::None, true),
                ];
                for (anchor, applies) in anchors {
                    if !applies {
                        continue;
                    }
                    // FIXME: clones the key per probe; a trie would avoid it
                    if let Some(arabic) = self.rules.get(&(anchor, key.clone())) {
                        matched = Some((len, arabic));
                        break 'len;
                    }
                }
            }
            match matched {
                Some((len, arabic)) => {
                    out.push_str(arabic);
                    pos += len;
                }
                None => pos += 1,
            }
        }
        out
    }

    pub fn transliterate(&self, word: &str) -> Result<TransliterationResult, ArabiziError> {
        if word.is_empty() {
            return Err(ArabiziError::EmptyWord);
        }
        let arabic = self.apply(word);
        if arabic.is_empty() {
            return Err(ArabiziError::NoTransliteration(word.to_string()));
        }
        Ok(TransliterationResult {
            source: word.to_string(),
            candidates: vec![arabic],
            backend: TransliterationBackend::LocalRules,
            fallback: None,
        })
    }
}

/// Transliterates with the built-in rule table.
pub fn transliterate_local(word: &str) -> Result<TransliterationResult, ArabiziError> {
    RuleTable::builtin().transliterate(word)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExternalConfig {
    pub endpoint: String,
    pub max_candidates: usize,
    pub timeout_ms: u64,
    /// Upper bound on concurrent requests from one client.
    pub max_in_flight: usize,
}

impl ExternalConfig {
    pub const DEFAULT_ENDPOINT: &'static str = "https://inputtools.google.com/request";
    pub const ENDPOINT_ENV: &'static str = "NER_TRANSLIT_ENDPOINT";

    /// Applies the endpoint override from the environment, if set.
    pub fn with_env_override(mut self) -> Self {
        if let Ok(endpoint) = std::env::var(Self::ENDPOINT_ENV) {
            if !endpoint.trim().is_empty() {
                self.endpoint = endpoint;
            }
        }
        self
    }
}

impl Default for ExternalConfig {
    fn default() -> Self {
        ExternalConfig {
            endpoint: Self::DEFAULT_ENDPOINT.to_string(),
            max_candidates: 5,
            timeout_ms: 3000,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug)]
struct InFlight {
    limit: usize,
    count: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn acquire(&self) -> Permit<'_> {
        let mut count = self.count.lock().unwrap_or_else(|e| e.into_inner());
        while *count >= self.limit {
            count = self.freed.wait(count).unwrap_or_else(|e| e.into_inner());
        }
        *count += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut count = self.0.count.lock().unwrap_or_else(|e| e.into_inner());
        *count -= 1;
        self.0.freed.notify_one();
    }
}

/// HTTP client for an input-tools transliteration endpoint.
///
/// Requests are `GET <endpoint>?text=<word>&itc=ar-t-i0-und&num=<n>`; a
/// successful response looks like
/// `["SUCCESS",[["mo3allem",["معلم","معلمه"],[],{}]]]`.
pub struct ExternalTransliterator {
    agent: ureq::Agent,
    endpoint: url::Url,
    config: ExternalConfig,
    gate: InFlight,
    rules: Arc<RuleTable>,
}

impl std::fmt::Debug for ExternalTransliterator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalTransliterator")
            .field("endpoint", &self.endpoint.as_str())
            .field("config", &self.config)
            .finish()
    }
}

impl ExternalTransliterator {
    pub fn new(config: ExternalConfig, rules: Arc<RuleTable>) -> Result<Self, ArabiziError> {
        let bad = |message: &str| ArabiziError::Endpoint {
            endpoint: config.endpoint.clone(),
            message: message.to_string(),
        };
        let endpoint = url::Url::parse(config.endpoint.trim()).map_err(|e| bad(&e.to_string()))?;
        if !matches!(endpoint.scheme(), "http" | "https") || endpoint.host_str().is_none() {
            return Err(bad("expected an http(s) URL with a host"));
        }
        if config.max_in_flight == 0 || config.max_candidates == 0 {
            return Err(bad("max_in_flight and max_candidates must be positive"));
        }
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build();
        Ok(ExternalTransliterator {
            agent,
            endpoint,
            gate: InFlight {
                limit: config.max_in_flight,
                count: Mutex::new(0),
                freed: Condvar::new(),
            },
            config,
            rules,
        })
    }

    pub fn endpoint(&self) -> &str {
        self.endpoint.as_str()
    }

    fn request(&self, word: &str) -> Result<Vec<String>, String> {
        let _permit = self.gate.acquire();
        let body = self
            .agent
            .request_url("GET", &self.endpoint)
            .query("text", word)
            .query("itc", "ar-t-i0-und")
            .query("num", &self.config.max_candidates.to_string())
            .call()
            .map_err(|e| format!("request failed: {e}"))?
            .into_string()
            .map_err(|e| format!("unreadable body: {e}"))?;
        parse_input_tools_response(&body)
    }

    /// One request for one Arabizi word. Any transport or parse failure yields
    /// the local rule result with `fallback` set.
    pub fn transliterate(&self, word: &str) -> Result<TransliterationResult, ArabiziError> {
        let kind = classify_word(word).kind;
        if kind != WordKind::Arabizi {
            return Err(ArabiziError::NotArabizi {
                word: word.to_string(),
                kind,
            });
        }
        match self.request(word) {
            Ok(candidates) => Ok(TransliterationResult {
                source: word.to_string(),
                candidates,
                backend: TransliterationBackend::External,
                fallback: None,
            }),
            Err(reason) => {
                log::debug!("external transliteration of {word:?} failed: {reason}");
                let mut local = self.rules.transliterate(word)?;
                local.fallback = Some(reason);
                Ok(local)
            }
        }
    }
}

/// Extracts the candidate list from an input-tools JSON response. Candidates
/// containing Latin letters or no Arabic letter are discarded.
pub fn parse_input_tools_response(body: &str) -> Result<Vec<String>, String> {
    let value: serde_json::Value = serde_json::from_str(body).map_err(|e| format!("invalid JSON: {e}"))?;
    let status = value.get(0).and_then(|s| s.as_str());
    if status != Some("SUCCESS") {
        return Err(format!("service status {status:?}"));
    }
    let candidates = value
        .get(1)
        .and_then(|v| v.get(0))
        .and_then(|v| v.get(1))
        .and_then(|v| v.as_array())
        .ok_or("missing candidate list")?;
    let candidates: Vec<String> = candidates
        .iter()
        .filter_map(|c| c.as_str())
        .map(str::trim)
        .filter(|c| c.chars().any(is_arabic_letter) && !c.chars().any(is_latin_letter))
        .map(str::to_string)
        .collect();
    if candidates.is_empty() {
        return Err("no Arabic candidates".to_string());
    }
    Ok(candidates)
}

/// Transliteration backend selected for a pipeline.
#[derive(Debug)]
pub enum Transliterator {
    Local(Arc<RuleTable>),
    External(ExternalTransliterator),
}

impl Default for Transliterator {
    fn default() -> Self {
        Transliterator::Local(RuleTable::builtin())
    }
}

impl Transliterator {
    pub fn transliterate(&self, word: &str) -> Result<TransliterationResult, ArabiziError> {
        match self {
            Transliterator::Local(rules) => rules.transliterate(word),
            Transliterator::External(client) => client.transliterate(word),
        }
    }
}

/// Where one output word came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordProvenance {
    pub original: String,
    pub kind: WordKind,
    pub output: String,
    /// Alternative transliterations, best first; empty unless Arabizi.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<TransliterationBackend>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
    /// Half-open char range of the word in the raw input.
    pub source_start: usize,
    pub source_end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrontOutput {
    /// Arabic-only text, words separated by single spaces.
    pub text: String,
    pub words: Vec<WordProvenance>,
}

impl FrontOutput {
    pub fn words(&self) -> Vec<String> {
        self.words.iter().map(|w| w.output.clone()).collect()
    }
}

/// Clean, split on spaces, classify each word and transliterate the Arabizi
/// ones, keeping word order. Arabic and neutral words pass through unchanged.
pub fn process_pipeline_front(raw: &str, transliterator: &Transliterator) -> FrontOutput {
    let cleaned = clean_text(raw);
    let mut words = Vec::new();
    let mut char_pos = 0;
    for word in cleaned.text.split(' ').filter(|w| !w.is_empty()) {
        let len = word.chars().count();
        let source_start = cleaned.offset_map[char_pos];
        let source_end = cleaned.offset_map[char_pos + len - 1] + 1;
        char_pos += len + 1;

        let kind = classify_word(word).kind;
        let mut record = WordProvenance {
            original: word.to_string(),
            kind,
            output: word.to_string(),
            candidates: Vec::new(),
            backend: None,
            fallback: None,
            source_start,
            source_end,
        };
        if kind == WordKind::Arabizi {
            match transliterator.transliterate(word) {
                Ok(result) => {
                    record.output = result.best().to_string();
                    record.backend = Some(result.backend);
                    record.fallback = result.fallback;
                    record.candidates = result.candidates;
                }
                Err(e) => {
                    record.output = UNTRANSLITERABLE.to_string();
                    record.fallback = Some(e.to_string());
                }
            }
        }
        words.push(record);
    }
    let text = words.iter().map(|w| w.output.as_str()).collect::<Vec<_>>().join(" ");
    FrontOutput { text, words }
}
