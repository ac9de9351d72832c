//! Text normalization: lowercasing, character filtering, number replacement,
//! whitespace tokenization and fixed-length sample packing.
//!
//! A raw whitespace-delimited chunk becomes at most one [`Token`]. The
//! pipeline applied to each chunk is:
//!
//! 1. a chunk equal (ignoring ASCII case) to `<num>` is kept as the number
//!    placeholder, so normalizing already-normalized text is a no-op;
//! 2. lowercase, then drop every character outside `[a-z0-9]` and
//!    [`PUNCTUATION`];
//! 3. if what remains is a number (`\d+([.,]\d+)*`) it becomes `<num>`;
//! 4. otherwise the remaining digits are removed, and the chunk is dropped
//!    if nothing is left.
//!
//! Punctuation attached to a word stays inside the word (`earth.`).

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Placeholder emitted for numeric tokens.
pub const NUM_TOKEN: &str = "<num>";
/// Placeholder written at masked positions of MLM inputs.
pub const MASK_TOKEN: &str = "[MASK]";
/// Punctuation characters retained by normalization.
pub const PUNCTUATION: [char; 6] = ['.', ',', '!', '?', '\'', '-'];
/// Default maximum sample length.
pub const DEFAULT_MAX_LEN: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    NumberPlaceholder,
    Punctuation,
    MaskPlaceholder,
}

impl TokenKind {
    /// Classifies an already-normalized token text.
    pub fn of(text: &str) -> Self {
        if text == NUM_TOKEN {
            TokenKind::NumberPlaceholder
        } else if text == MASK_TOKEN {
            TokenKind::MaskPlaceholder
        } else if text.chars().all(is_punctuation) {
            TokenKind::Punctuation
        } else {
            TokenKind::Word
        }
    }

    pub fn is_placeholder(self) -> bool {
        matches!(self, TokenKind::NumberPlaceholder | TokenKind::MaskPlaceholder)
    }
}

/// Returns true for the atomic placeholder symbols (`<num>`, `[MASK]`).
pub fn is_placeholder(text: &str) -> bool {
    text == NUM_TOKEN || text == MASK_TOKEN
}

pub fn is_punctuation(c: char) -> bool {
    PUNCTUATION.contains(&c)
}

/// One normalized whitespace token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    text: String,
    kind: TokenKind,
}

impl Token {
    /// Wraps a token text, inferring its kind. The text is not re-normalized.
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let kind = TokenKind::of(&text);
        Token { text, kind }
    }

    pub fn num() -> Self {
        Token { text: NUM_TOKEN.to_owned(), kind: TokenKind::NumberPlaceholder }
    }

    pub fn mask() -> Self {
        Token { text: MASK_TOKEN.to_owned(), kind: TokenKind::MaskPlaceholder }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn kind(&self) -> TokenKind {
        self.kind
    }

    pub fn is_placeholder(&self) -> bool {
        self.kind.is_placeholder()
    }

    /// Character count of the token text.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn into_text(self) -> String {
        self.text
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.text
    }
}

/// Counters collected while normalizing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizeDiagnostics {
    /// Input bytes that were not valid UTF-8 and were dropped.
    pub invalid_bytes: u64,
    /// Whitespace chunks that became empty after filtering.
    pub dropped_chunks: u64,
    /// Chunks replaced by the number placeholder.
    pub numbers_replaced: u64,
}

impl NormalizeDiagnostics {
    pub fn merge(&mut self, other: &NormalizeDiagnostics) {
        self.invalid_bytes += other.invalid_bytes;
        self.dropped_chunks += other.dropped_chunks;
        self.numbers_replaced += other.numbers_replaced;
    }
}

/// A normalized token sequence plus the diagnostics gathered producing it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub diagnostics: NormalizeDiagnostics,
}

impl TokenStream {
    pub fn from_tokens(tokens: Vec<Token>) -> Self {
        TokenStream { tokens, diagnostics: NormalizeDiagnostics::default() }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-joined token texts.
    pub fn join(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(t.text());
        }
        out
    }

    /// Appends another stream, keeping order.
    pub fn extend(&mut self, other: TokenStream) {
        self.tokens.extend(other.tokens);
        self.diagnostics.merge(&other.diagnostics);
    }
}

/// Matches `\d+([.,]\d+)*`.
pub fn is_number(s: &str) -> bool {
    let b = s.as_bytes();
    if b.is_empty() || !b[0].is_ascii_digit() {
        return false;
    }
    let mut prev_sep = false;
    for &c in b {
        if c.is_ascii_digit() {
            prev_sep = false;
        } else if (c == b'.' || c == b',') && !prev_sep {
            prev_sep = true;
        } else {
            return false;
        }
    }
    !prev_sep
}

fn is_kept(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || is_punctuation(c)
}

/// Normalizes one whitespace-free chunk into `out` (cleared first).
///
/// Returns the resulting kind, or `None` when the chunk filters to nothing.
pub fn normalize_word(raw: &str, out: &mut String) -> Option<TokenKind> {
    out.clear();
    if raw.eq_ignore_ascii_case(NUM_TOKEN) {
        out.push_str(NUM_TOKEN);
        return Some(TokenKind::NumberPlaceholder);
    }
    for c in raw.chars() {
        if c.is_ascii() {
            let c = c.to_ascii_lowercase();
            if is_kept(c) {
                out.push(c);
            }
        } else {
            out.extend(c.to_lowercase().filter(|&c| is_kept(c)));
        }
    }
    if is_number(out) {
        out.clear();
        out.push_str(NUM_TOKEN);
        return Some(TokenKind::NumberPlaceholder);
    }
    out.retain(|c| !c.is_ascii_digit());
    if out.is_empty() {
        return None;
    }
    if out.bytes().any(|b| b.is_ascii_lowercase()) {
        Some(TokenKind::Word)
    } else {
        Some(TokenKind::Punctuation)
    }
}

/// Calls `f` for every normalized token in `raw`, updating `diag`.
pub fn for_each_token<F>(raw: &str, diag: &mut NormalizeDiagnostics, mut f: F)
where
    F: FnMut(&str, TokenKind),
{
    let mut buf = String::new();
    for chunk in raw.split_whitespace() {
        match normalize_word(chunk, &mut buf) {
            Some(kind) => {
                if kind == TokenKind::NumberPlaceholder {
                    diag.numbers_replaced += 1;
                }
                f(&buf, kind);
            }
            None => diag.dropped_chunks += 1,
        }
    }
}

/// Normalizes text into a token stream. Total: empty input gives an empty stream.
pub fn normalize_text(raw: &str) -> TokenStream {
    let mut stream = TokenStream::default();
    let mut diag = NormalizeDiagnostics::default();
    for_each_token(raw, &mut diag, |text, kind| {
        stream.tokens.push(Token { text: text.to_owned(), kind });
    });
    stream.diagnostics = diag;
    stream
}

/// Decodes `bytes` as UTF-8, dropping invalid sequences, and returns the
/// decoded text with the count of dropped bytes.
pub fn decode_lossy(bytes: &[u8]) -> (std::borrow::Cow<'_, str>, u64) {
    if let Ok(s) = std::str::from_utf8(bytes) {
        return (std::borrow::Cow::Borrowed(s), 0);
    }
    let mut out = String::with_capacity(bytes.len());
    let mut dropped = 0u64;
    for chunk in bytes.utf8_chunks() {
        out.push_str(chunk.valid());
        dropped += chunk.invalid().len() as u64;
    }
    (std::borrow::Cow::Owned(out), dropped)
}

/// Normalizes raw bytes; undecodable bytes are dropped and counted.
pub fn normalize_bytes(bytes: &[u8]) -> TokenStream {
    let (text, dropped) = decode_lossy(bytes);
    let mut stream = normalize_text(&text);
    stream.diagnostics.invalid_bytes = dropped;
    stream
}

/// Splits `bytes` into at most `shards` contiguous ranges whose boundaries
/// fall on ASCII whitespace, so normalizing each range independently and
/// concatenating the results equals normalizing the whole buffer.
pub fn shard_ranges(bytes: &[u8], shards: usize) -> Vec<Range<usize>> {
    let shards = shards.max(1);
    let len = bytes.len();
    let target = len.div_ceil(shards).max(1);
    let mut ranges = Vec::with_capacity(shards);
    let mut start = 0;
    while start < len {
        let mut end = (start + target).min(len);
        while end < len && !bytes[end].is_ascii_whitespace() {
            end += 1;
        }
        ranges.push(start..end);
        start = end;
    }
    ranges
}

/// Normalizes a large buffer shard-by-shard in parallel.
pub fn normalize_parallel(bytes: &[u8], shard_bytes: usize) -> TokenStream {
    use rayon::prelude::*;
    let shards = bytes.len().div_ceil(shard_bytes.max(1)).max(1);
    let parts: Vec<TokenStream> = shard_ranges(bytes, shards)
        .into_par_iter()
        .map(|r| normalize_bytes(&bytes[r]))
        .collect();
    let mut out = TokenStream::default();
    for p in parts {
        out.extend(p);
    }
    out
}

/// A packed training sample of 1..=max_len tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    tokens: Vec<Token>,
}

impl Sample {
    /// Returns `None` for an empty token list.
    pub fn new(tokens: Vec<Token>) -> Option<Self> {
        (!tokens.is_empty()).then_some(Sample { tokens })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.tokens
    }
}

/// Greedy left-to-right packing into samples of at most `max_len` tokens.
///
/// # Panics
/// If `max_len` is zero.
pub fn pack_sequences(stream: TokenStream, max_len: usize) -> Vec<Sample> {
    assert!(max_len >= 1, "max_len must be at least 1");
    let mut samples = Vec::with_capacity(stream.tokens.len().div_ceil(max_len));
    let mut iter = stream.tokens.into_iter().peekable();
    while iter.peek().is_some() {
        let tokens: Vec<Token> = iter.by_ref().take(max_len).collect();
        samples.push(Sample { tokens });
    }
    samples
}
