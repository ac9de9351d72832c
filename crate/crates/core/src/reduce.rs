//! Token reduction schemes keeping a subset of each token's characters.
//!
//! Positional schemes keep characters at fixed positions (first, middle,
//! last and their combinations); `V` and `C` keep a character class.
//! Placeholders (`<num>`, `[MASK]`) are atomic and pass through every scheme
//! unchanged.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::SchemeParseError;
use crate::normalize::{is_placeholder, Token, TokenKind};

/// The twelve reduction schemes, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReductionScheme {
    /// Identity.
    Full,
    First,
    Middle,
    Last,
    FirstLast,
    FirstTwo,
    LastTwo,
    FirstMiddleLast,
    FirstThree,
    LastThree,
    Vowels,
    Consonants,
}

const VOWELS: [char; 5] = ['a', 'e', 'i', 'o', 'u'];

pub fn is_vowel(c: char) -> bool {
    VOWELS.contains(&c)
}

impl ReductionScheme {
    /// All schemes in canonical order (`FULL, F, M, L, FL, FF, LL, FML, FFF, LLL, V, C`).
    pub const ALL: [ReductionScheme; 12] = [
        ReductionScheme::Full,
        ReductionScheme::First,
        ReductionScheme::Middle,
        ReductionScheme::Last,
        ReductionScheme::FirstLast,
        ReductionScheme::FirstTwo,
        ReductionScheme::LastTwo,
        ReductionScheme::FirstMiddleLast,
        ReductionScheme::FirstThree,
        ReductionScheme::LastThree,
        ReductionScheme::Vowels,
        ReductionScheme::Consonants,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ReductionScheme::Full => "FULL",
            ReductionScheme::First => "F",
            ReductionScheme::Middle => "M",
            ReductionScheme::Last => "L",
            ReductionScheme::FirstLast => "FL",
            ReductionScheme::FirstTwo => "FF",
            ReductionScheme::LastTwo => "LL",
            ReductionScheme::FirstMiddleLast => "FML",
            ReductionScheme::FirstThree => "FFF",
            ReductionScheme::LastThree => "LLL",
            ReductionScheme::Vowels => "V",
            ReductionScheme::Consonants => "C",
        }
    }

    /// Maximum output length for word tokens, if the scheme bounds it.
    pub fn max_len(self) -> Option<usize> {
        match self {
            ReductionScheme::First | ReductionScheme::Middle | ReductionScheme::Last => Some(1),
            ReductionScheme::FirstLast | ReductionScheme::FirstTwo | ReductionScheme::LastTwo => {
                Some(2)
            }
            ReductionScheme::FirstMiddleLast
            | ReductionScheme::FirstThree
            | ReductionScheme::LastThree => Some(3),
            _ => None,
        }
    }

    /// Parses a comma-separated list; `ALL` expands to [`Self::ALL`].
    pub fn parse_list(s: &str) -> Result<Vec<ReductionScheme>, SchemeParseError> {
        if s.trim() == "ALL" {
            return Ok(Self::ALL.to_vec());
        }
        s.split(',').map(|t| t.trim().parse()).collect()
    }
}

impl fmt::Display for ReductionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ReductionScheme {
    type Err = SchemeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|sch| sch.tag() == s)
            .ok_or_else(|| SchemeParseError(s.to_owned()))
    }
}

impl Serialize for ReductionScheme {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

impl<'de> Deserialize<'de> for ReductionScheme {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Zero-based middle position, `floor(len / 2)`.
///
/// # Panics
/// If `len` is zero.
pub fn middle_index(len: usize) -> usize {
    assert!(len >= 1, "middle_index of an empty token");
    len / 2
}

/// The reduced form of one token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReducedToken {
    pub text: String,
    /// Character count of the source token.
    pub source_len: usize,
}

impl AsRef<str> for ReducedToken {
    fn as_ref(&self) -> &str {
        &self.text
    }
}

fn pick(chars: &[char], idx: &[usize]) -> String {
    idx.iter().map(|&i| chars[i]).collect()
}

fn reduce_chars(scheme: ReductionScheme, text: &str, chars: &[char]) -> Option<String> {
    use ReductionScheme::*;
    let n = chars.len();
    if n == 0 {
        return None;
    }
    let out = match scheme {
        Full => return None,
        First => pick(chars, &[0]),
        Middle => pick(chars, &[middle_index(n)]),
        Last => pick(chars, &[n - 1]),
        FirstLast | FirstTwo | LastTwo if n <= 2 => return None,
        FirstLast => pick(chars, &[0, n - 1]),
        FirstTwo => pick(chars, &[0, 1]),
        LastTwo => pick(chars, &[n - 2, n - 1]),
        FirstMiddleLast | FirstThree | LastThree if n <= 3 => return None,
        FirstMiddleLast => pick(chars, &[0, middle_index(n), n - 1]),
        FirstThree => pick(chars, &[0, 1, 2]),
        LastThree => pick(chars, &[n - 3, n - 2, n - 1]),
        Vowels => {
            let kept: String = chars.iter().copied().filter(|&c| is_vowel(c)).collect();
            if kept.is_empty() {
                return None;
            }
            kept
        }
        Consonants => {
            let kept: String = chars.iter().copied().filter(|&c| !is_vowel(c)).collect();
            if kept.is_empty() {
                return None;
            }
            kept
        }
    };
    (out != text).then_some(out)
}

/// Reduces a token text; placeholders are returned unchanged.
///
/// Borrowed output means the token is a fixed point of the scheme.
pub fn reduce_str(scheme: ReductionScheme, text: &str) -> Cow<'_, str> {
    if scheme == ReductionScheme::Full || is_placeholder(text) {
        return Cow::Borrowed(text);
    }
    let chars: Vec<char> = text.chars().collect();
    match reduce_chars(scheme, text, &chars) {
        Some(s) => Cow::Owned(s),
        None => Cow::Borrowed(text),
    }
}

pub fn reduce_token(scheme: ReductionScheme, token: &Token) -> ReducedToken {
    let source_len = token.char_len();
    let text = if token.kind().is_placeholder() {
        token.text().to_owned()
    } else {
        reduce_str(scheme, token.text()).into_owned()
    };
    ReducedToken { text, source_len }
}

/// Element-wise reduction; output is aligned 1:1 with the input.
pub fn reduce_sequence(scheme: ReductionScheme, tokens: &[Token]) -> Vec<ReducedToken> {
    tokens.iter().map(|t| reduce_token(scheme, t)).collect()
}

/// Reduces and re-wraps as a [`Token`] (kind recomputed from the reduced text).
pub fn reduce_to_token(scheme: ReductionScheme, token: &Token) -> Token {
    if token.kind() == TokenKind::Word || token.kind() == TokenKind::Punctuation {
        Token::new(reduce_str(scheme, token.text()).into_owned())
    } else {
        token.clone()
    }
}
