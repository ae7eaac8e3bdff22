//! Prompt extraction from file paths, keyword vocabulary construction, and
//! the multihot / hashed-base text embeddings used for conditioning.

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Tokens stripped from every path before prompt construction.
const PATH_STOPLIST: [&str; 4] = ["gm", "bonus", "mid", "midi"];

/// Width of the hashed bag-of-tokens base embedding (mirrors the 512-d
/// contract of a small BERT encoder).
pub const BASE_EMBED_DIM: usize = 512;

/// A cleaned, lowercase prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptText {
    pub text: String,
    pub tokens: Vec<String>,
}

impl PromptText {
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        PromptText {
            text: tokens.join(" "),
            tokens,
        }
    }

    /// Tokenizes an already-clean prompt string (used for user-typed
    /// prompts at generation time).
    pub fn from_prompt(prompt: &str) -> Self {
        PromptText::from_tokens(tokenize(prompt))
    }
}

/// Splits on whitespace, '/', '_' and '-', keeping hyphenated meter tokens
/// like "5-4" whole; lowercases everything.
fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in s.split(|c: char| c.is_whitespace() || c == '/' || c == '_') {
        if raw.is_empty() {
            continue;
        }
        let lower = raw.to_lowercase();
        if is_meter_token(&lower) {
            out.push(lower);
        } else {
            out.extend(lower.split('-').filter(|t| !t.is_empty()).map(str::to_string));
        }
    }
    out
}

fn is_meter_token(t: &str) -> bool {
    let mut parts = t.split('-');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(a), Some(b), None) => {
            !a.is_empty() && !b.is_empty() && a.bytes().all(|c| c.is_ascii_digit()) && b.bytes().all(|c| c.is_ascii_digit())
        }
        _ => false,
    }
}

/// Turns a MIDI file path into a prompt: separators and the extension are
/// dropped, everything is lowercased, and dataset boilerplate tokens
/// ("groove monkee", "gm", "bonus", extensions) are removed.
pub fn clean_path(filepath: &str) -> PromptText {
    let no_ext = match filepath.rsplit_once('.') {
        Some((stem, ext)) if ext.eq_ignore_ascii_case("mid") || ext.eq_ignore_ascii_case("midi") => stem,
        _ => filepath,
    };
    let raw = tokenize(no_ext);
    let mut tokens = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        if raw[i] == "groove" && raw.get(i + 1).map(String::as_str) == Some("monkee") {
            i += 2;
            continue;
        }
        if PATH_STOPLIST.contains(&raw[i].as_str()) {
            i += 1;
            continue;
        }
        tokens.push(raw[i].clone());
        i += 1;
    }
    PromptText::from_tokens(tokens)
}

/// Vocabulary construction / multihot settings, serialized with the model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VocabConfig {
    /// Cumulative document-frequency mass to keep, in (0, 1].
    pub coverage: f64,
    /// Tokens never admitted to the vocabulary.
    pub stoplist: Vec<String>,
    /// Optional curated allow-list; when present only these tokens qualify.
    pub allow: Option<Vec<String>>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            coverage: 0.95,
            stoplist: Vec::new(),
            allow: None,
        }
    }
}

/// Ordered keyword list; order is fixed at build time and serialized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordVocab {
    pub keywords: Vec<String>,
}

impl KeywordVocab {
    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.keywords.iter().position(|k| k == token)
    }
}

fn is_pure_number(t: &str) -> bool {
    !t.is_empty() && t.bytes().all(|c| c.is_ascii_digit())
}

/// Builds the keyword vocabulary by document frequency: tokens are ranked by
/// how many prompts contain them, pure numbers and stoplisted tokens are
/// dropped, and the descending-frequency prefix covering `coverage` of the
/// total mass is kept. Ties order lexicographically.
pub fn build_vocab(corpus: &[PromptText], cfg: &VocabConfig) -> Result<KeywordVocab> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(cfg.coverage > 0.0 && cfg.coverage <= 1.0) {
        return Err(Error::Config(format!("coverage must be in (0,1], got {}", cfg.coverage)));
    }

    let mut df: BTreeMap<&str, u64> = BTreeMap::new();
    for prompt in corpus {
        let mut seen: Vec<&str> = Vec::new();
        for tok in &prompt.tokens {
            if is_pure_number(tok) || cfg.stoplist.iter().any(|s| s == tok) {
                continue;
            }
            if let Some(allow) = &cfg.allow {
                if !allow.iter().any(|a| a == tok) {
                    continue;
                }
            }
            if !seen.contains(&tok.as_str()) {
                seen.push(tok);
                *df.entry(tok).or_insert(0) += 1;
            }
        }
    }

    let mut ranked: Vec<(&str, u64)> = df.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

    let total: u64 = ranked.iter().map(|(_, c)| c).sum();
    let mut keywords = Vec::new();
    let mut acc = 0u64;
    for (tok, count) in ranked {
        if total > 0 && acc as f64 / total as f64 >= cfg.coverage {
            break;
        }
        acc += count;
        keywords.push(tok.to_string());
    }
    Ok(KeywordVocab { keywords })
}

/// K hot bits plus one normalized-bpm dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MultihotVec {
    pub hot: Vec<u8>,
    /// bpm / 300, or 0 when the prompt carries no bpm.
    pub bpm: f32,
}

impl MultihotVec {
    pub fn dim(&self) -> usize {
        self.hot.len() + 1
    }

    pub fn to_dense(&self) -> Vec<f32> {
        let mut v: Vec<f32> = self.hot.iter().map(|&b| b as f32).collect();
        v.push(self.bpm);
        v
    }
}

/// First standalone integer token in [40, 300] is the bpm.
pub fn extract_bpm(text: &PromptText) -> Option<u32> {
    text.tokens
        .iter()
        .filter_map(|t| t.parse::<u32>().ok())
        .find(|&n| (40..=300).contains(&n))
}

pub fn encode_multihot(text: &PromptText, vocab: &KeywordVocab) -> MultihotVec {
    let hot = vocab
        .keywords
        .iter()
        .map(|k| u8::from(text.tokens.iter().any(|t| t == k)))
        .collect();
    let bpm = extract_bpm(text).map_or(0.0, |b| b as f32 / 300.0);
    MultihotVec { hot, bpm }
}

// ---------------------------------------------------------------------------
// Base text embedder for the contrastive path
// ---------------------------------------------------------------------------

/// FNV-1a, pinned here so hashed embeddings are identical across builds.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Deterministic feature-hashed bag-of-tokens vector of width 512, L2
/// normalized, standing in for a frozen 512-d language-model embedding.
/// Empty prompts map to the zero vector.
pub fn base_embed(text: &PromptText) -> Tensor {
    let mut v = vec![0.0f32; BASE_EMBED_DIM];
    for tok in &text.tokens {
        let h = fnv1a(tok.as_bytes());
        let idx = (h % BASE_EMBED_DIM as u64) as usize;
        let sign = if (h >> 63) & 1 == 0 { 1.0 } else { -1.0 };
        v[idx] += sign;
    }
    let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Tensor::from_vec(&[BASE_EMBED_DIM], v)
}
