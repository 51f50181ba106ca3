//! Tokenizer, N-gram and tag features, vocabularies and sparse document-term matrices.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Tweet;

pub const VOCABULARY_VERSION: u32 = 1;
pub const URL_TOKEN: &str = "<url>";
pub const TAG_PREFIX: &str = "tag:";
const MAX_LETTER_RUN: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("no term reaches the minimum document frequency")]
    EmptyVocabulary,
    #[error("invalid feature config: {0}")]
    InvalidConfig(String),
    #[error("unsupported vocabulary version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("malformed vocabulary: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub ngram_order: usize,
    pub use_hashtags: bool,
    pub use_mentions: bool,
    pub min_doc_freq: usize,
    pub lowercase: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            ngram_order: 1,
            use_hashtags: true,
            use_mentions: true,
            min_doc_freq: 2,
            lowercase: true,
        }
    }
}

impl FeatureConfig {
    pub fn with_order(ngram_order: usize) -> Self {
        FeatureConfig {
            ngram_order,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if !(1..=3).contains(&self.ngram_order) {
            return Err(FeatureError::InvalidConfig(format!(
                "ngram_order must be 1, 2 or 3 (got {})",
                self.ngram_order
            )));
        }
        if self.min_doc_freq == 0 {
            return Err(FeatureError::InvalidConfig(
                "min_doc_freq must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn order_name(&self) -> &'static str {
        match self.ngram_order {
            1 => "uni-gram",
            2 => "bi-gram",
            3 => "tri-gram",
            _ => "n-gram",
        }
    }
}

/// Splits tweet text into lowercase tokens.
///
/// URLs become `<url>`, `#tags` and `@mentions` keep their sigil, inner
/// apostrophes stay inside a word (`isn't`), every other punctuation
/// character separates tokens, and runs of one letter longer than three are
/// cut to three (`noooooooo` becomes `nooo`).
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with(text, true)
}

pub fn tokenize_with(text: &str, lowercase: bool) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chunk = if lowercase {
            chunk.to_lowercase()
        } else {
            chunk.to_string()
        };
        if chunk == URL_TOKEN || is_url(&chunk) {
            out.push(URL_TOKEN.to_string());
            continue;
        }
        split_chunk(&chunk, &mut out);
    }
    out
}

fn is_url(chunk: &str) -> bool {
    let lower = chunk.to_ascii_lowercase();
    ["http://", "https://", "www."]
        .iter()
        .any(|p| lower.starts_with(p) && lower.len() > p.len())
}

fn is_tag_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn split_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut word = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let prev_alnum = i > 0 && chars[i - 1].is_alphanumeric();
        let next = chars.get(i + 1).copied();
        if (c == '#' || c == '@') && !prev_alnum && next.is_some_and(is_tag_char) {
            flush(&mut word, out);
            let mut tag = String::from(c);
            i += 1;
            while i < chars.len() && is_tag_char(chars[i]) {
                tag.push(chars[i]);
                i += 1;
            }
            out.push(collapse_elongation(&tag));
            continue;
        }
        if c.is_alphanumeric() {
            word.push(c);
        } else if (c == '\'' || c == '\u{2019}')
            && !word.is_empty()
            && next.is_some_and(char::is_alphanumeric)
        {
            word.push('\'');
        } else {
            flush(&mut word, out);
        }
        i += 1;
    }
    flush(&mut word, out);
}

fn flush(word: &mut String, out: &mut Vec<String>) {
    if !word.is_empty() {
        out.push(collapse_elongation(word));
        word.clear();
    }
}

fn collapse_elongation(token: &str) -> String {
    let mut out = String::with_capacity(token.len());
    let mut last = None;
    let mut run = 0;
    for c in token.chars() {
        if Some(c) == last {
            run += 1;
        } else {
            last = Some(c);
            run = 1;
        }
        if !c.is_alphabetic() || run <= MAX_LETTER_RUN {
            out.push(c);
        }
    }
    out
}

/// Contiguous `n`-token windows joined by a single space.
pub fn extract_ngrams(tokens: &[String], n: usize) -> Vec<String> {
    if n == 0 || tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).map(|w| w.join(" ")).collect()
}

/// `tag:`-namespaced hashtag and mention features, deduplicated and sorted.
pub fn extract_tag_features(tweet: &Tweet) -> Vec<String> {
    tag_features(tweet, true, true)
}

fn tag_features(tweet: &Tweet, hashtags: bool, mentions: bool) -> Vec<String> {
    let mut set = BTreeSet::new();
    if hashtags {
        set.extend(tweet.hashtags.iter().map(|h| h.to_lowercase()));
    }
    if mentions {
        set.extend(tweet.mentions.iter().map(|m| m.to_lowercase()));
    }
    set.into_iter().map(|t| format!("{TAG_PREFIX}{t}")).collect()
}

/// Every feature occurrence of `tweet` under `config`, with repetition.
///
/// Sigil tokens are excluded from the N-grams because tags are counted in
/// their own namespace.
pub fn document_terms(tweet: &Tweet, config: &FeatureConfig) -> Vec<String> {
    let tokens: Vec<String> = tokenize_with(&tweet.text, config.lowercase)
        .into_iter()
        .filter(|t| !t.starts_with('#') && !t.starts_with('@'))
        .collect();
    let mut terms = extract_ngrams(&tokens, config.ngram_order);
    terms.extend(tag_features(tweet, config.use_hashtags, config.use_mentions));
    terms
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    config: FeatureConfig,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    version: u32,
    config: FeatureConfig,
    terms: Vec<String>,
}

impl Vocabulary {
    /// Builds a vocabulary from terms that must already be sorted and unique.
    fn from_sorted(terms: Vec<String>, config: FeatureConfig) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            terms,
            index,
            config,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).map(|&i| i as usize)
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    /// Term to column map in index order.
    pub fn as_map(&self) -> BTreeMap<&str, usize> {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&VocabularyFile {
            version: VOCABULARY_VERSION,
            config: self.config,
            terms: self.terms.clone(),
        })
        .expect("vocabulary serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, FeatureError> {
        let file: VocabularyFile =
            serde_json::from_str(s).map_err(|e| FeatureError::Malformed(e.to_string()))?;
        if file.version != VOCABULARY_VERSION {
            return Err(FeatureError::VersionMismatch {
                found: file.version,
                expected: VOCABULARY_VERSION,
            });
        }
        file.config.validate()?;
        if file.terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FeatureError::Malformed(
                "terms must be strictly increasing".into(),
            ));
        }
        Ok(Vocabulary::from_sorted(file.terms, file.config))
    }
}

pub fn build_vocabulary(
    corpus: &[Tweet],
    config: &FeatureConfig,
) -> Result<Vocabulary, FeatureError> {
    config.validate()?;
    let docs: Vec<Vec<String>> = corpus.iter().map(|t| document_terms(t, config)).collect();
    vocabulary_from_terms(docs.iter().map(Vec::as_slice), config)
}

/// Vocabulary over pre-extracted per-document terms.
pub fn vocabulary_from_terms<'a, I>(docs: I, config: &FeatureConfig) -> Result<Vocabulary, FeatureError>
where
    I: IntoIterator<Item = &'a [String]>,
{
    config.validate()?;
    let mut doc_freq: HashMap<&str, usize> = HashMap::new();
    for terms in docs {
        let unique: BTreeSet<&str> = terms.iter().map(String::as_str).collect();
        for t in unique {
            *doc_freq.entry(t).or_default() += 1;
        }
    }
    let mut kept: Vec<String> = doc_freq
        .into_iter()
        .filter(|&(_, df)| df >= config.min_doc_freq)
        .map(|(t, _)| t.to_string())
        .collect();
    if kept.is_empty() {
        return Err(FeatureError::EmptyVocabulary);
    }
    kept.sort_unstable();
    Ok(Vocabulary::from_sorted(kept, *config))
}

/// One sparse row: `(column, count)` pairs with strictly increasing columns.
pub type SparseRow = Vec<(u32, u32)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentTermMatrix {
    pub n_docs: usize,
    pub n_terms: usize,
    pub rows: Vec<SparseRow>,
}

impl DocumentTermMatrix {
    /// Validates the sparse invariants.
    pub fn new(n_terms: usize, rows: Vec<SparseRow>) -> Result<Self, FeatureError> {
        for (i, row) in rows.iter().enumerate() {
            for w in row.windows(2) {
                if w[0].0 >= w[1].0 {
                    return Err(FeatureError::Malformed(format!(
                        "row {i}: columns not strictly increasing"
                    )));
                }
            }
            if row.iter().any(|&(c, v)| c as usize >= n_terms || v == 0) {
                return Err(FeatureError::Malformed(format!(
                    "row {i}: column out of range or explicit zero"
                )));
            }
        }
        Ok(DocumentTermMatrix {
            n_docs: rows.len(),
            n_terms,
            rows,
        })
    }

    /// Builds from dense rows, dropping zeros.
    pub fn from_dense(rows: &[Vec<u32>]) -> Self {
        let n_terms = rows.first().map_or(0, Vec::len);
        let sparse = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|&(_, &v)| v > 0)
                    .map(|(c, &v)| (c as u32, v))
                    .collect()
            })
            .collect();
        DocumentTermMatrix {
            n_docs: rows.len(),
            n_terms,
            rows: sparse,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        row_value(&self.rows[row], col as u32)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        DocumentTermMatrix {
            n_docs: indices.len(),
            n_terms: self.n_terms,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Count stored for `col` in a sparse row (0 when absent).
#[inline]
pub fn row_value(row: &[(u32, u32)], col: u32) -> u32 {
    match row.binary_search_by_key(&col, |&(c, _)| c) {
        Ok(pos) => row[pos].1,
        Err(_) => 0,
    }
}

pub fn vectorize_corpus(corpus: &[Tweet], vocab: &Vocabulary) -> DocumentTermMatrix {
    let rows = corpus
        .iter()
        .map(|t| vectorize_terms(&document_terms(t, vocab.config()), vocab))
        .collect();
    DocumentTermMatrix {
        n_docs: corpus.len(),
        n_terms: vocab.len(),
        rows,
    }
}

/// Sparse count row of pre-extracted terms; out-of-vocabulary terms are ignored.
pub fn vectorize_terms(terms: &[String], vocab: &Vocabulary) -> SparseRow {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for t in terms {
        if let Some(&c) = vocab.index.get(t.as_str()) {
            *counts.entry(c).or_default() += 1;
        }
    }
    counts.into_iter().collect()
}
