//! Corpus information-loss statistics.
//!
//! The free functions in this module are direct single-pass computations
//! over token slices. [`CorpusIndex`] computes the same quantities for large
//! corpora by interning token types and working at type level, with n-gram
//! distinct counts done by parallel sort-and-dedup.
//!
//! Placeholders (`<num>`, `[MASK]`) are counted in the special bucket of the
//! length histogram and excluded from trim fractions and ambiguity classes.
//! In n-grams they are ordinary symbols.

mod engine;
mod report;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::normalize::is_placeholder;
use crate::reduce::{reduce_str, ReductionScheme};

pub use engine::CorpusIndex;
pub use report::{CorpusReport, SchemeReport};

/// Character-length distribution of a token stream.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthHistogram {
    /// Length in characters → number of non-placeholder tokens.
    pub buckets: BTreeMap<usize, u64>,
    /// Placeholder tokens.
    pub special_bucket: u64,
    pub total: u64,
}

impl LengthHistogram {
    pub fn add(&mut self, text: &str, n: u64) {
        if is_placeholder(text) {
            self.special_bucket += n;
        } else {
            *self.buckets.entry(text.chars().count()).or_insert(0) += n;
        }
        self.total += n;
    }

    /// Non-placeholder token count.
    pub fn word_total(&self) -> u64 {
        self.buckets.values().sum()
    }

    /// Number of non-placeholder tokens longer than `len` characters.
    pub fn longer_than(&self, len: usize) -> u64 {
        self.buckets.range(len + 1..).map(|(_, c)| c).sum()
    }

    /// Share of non-placeholder tokens with at most `len` characters.
    pub fn fraction_at_most(&self, len: usize) -> f64 {
        let words = self.word_total();
        if words == 0 {
            return 1.0;
        }
        (words - self.longer_than(len)) as f64 / words as f64
    }

    pub fn is_consistent(&self) -> bool {
        self.word_total() + self.special_bucket == self.total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NGramReport {
    pub n: usize,
    pub distinct: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityReport {
    pub scheme: ReductionScheme,
    /// Distinct reduced forms.
    pub classes: u64,
    /// Largest number of distinct full tokens sharing one reduced form.
    pub max_class_size: u64,
    /// Occurrence-weighted H(full | reduced) in bits.
    pub conditional_entropy_bits: f64,
    pub trim_fraction: f64,
    /// Distinct full tokens; the entropy is bounded by its log2.
    pub full_types: u64,
}

impl AmbiguityReport {
    /// Checks the entropy and fraction bounds.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let bound = if self.full_types > 0 { (self.full_types as f64).log2() } else { 0.0 };
        let h = self.conditional_entropy_bits;
        if !(h >= 0.0 && h <= bound + 1e-9) {
            v.push(format!("{}: conditional entropy {h} outside [0, {bound}]", self.scheme));
        }
        if !(0.0..=1.0).contains(&self.trim_fraction) {
            v.push(format!("{}: trim fraction {} outside [0, 1]", self.scheme, self.trim_fraction));
        }
        if self.scheme == ReductionScheme::Full && (h != 0.0 || self.trim_fraction != 0.0) {
            v.push("FULL: identity scheme must have zero entropy and trim".to_owned());
        }
        if self.classes > self.full_types || (self.full_types > 0 && self.max_class_size == 0) {
            v.push(format!("{}: inconsistent class counts", self.scheme));
        }
        v
    }
}

/// Entropy in bits of a class with the given member counts, summed in order.
pub(crate) fn class_entropy(counts: impl Iterator<Item = u64> + Clone, class_total: u64) -> f64 {
    let c = class_total as f64;
    let mut s = 0.0;
    for k in counts {
        let p = k as f64 / c;
        s += p * p.log2();
    }
    -s
}

pub fn length_histogram<S: AsRef<str>>(stream: &[S]) -> LengthHistogram {
    let mut h = LengthHistogram::default();
    for t in stream {
        h.add(t.as_ref(), 1);
    }
    h
}

/// Distinct and total n-grams; windows never cross sample boundaries.
///
/// # Panics
/// If `n` is zero.
pub fn ngram_report<T, S>(samples: &[T], n: usize) -> NGramReport
where
    T: AsRef<[S]>,
    S: AsRef<str>,
{
    assert!(n >= 1, "n-gram order must be at least 1");
    let mut seen: HashSet<Vec<&str>> = HashSet::new();
    let mut total = 0u64;
    for s in samples {
        let toks: Vec<&str> = s.as_ref().iter().map(AsRef::as_ref).collect();
        for w in toks.windows(n) {
            total += 1;
            if !seen.contains(w) {
                seen.insert(w.to_vec());
            }
        }
    }
    NGramReport { n, distinct: seen.len() as u64, total }
}

/// Share of non-placeholder tokens changed by `scheme`; zero for an empty stream.
pub fn trim_fraction<S: AsRef<str>>(original: &[S], scheme: ReductionScheme) -> f64 {
    let mut words = 0u64;
    let mut trimmed = 0u64;
    for t in original {
        let t = t.as_ref();
        if is_placeholder(t) {
            continue;
        }
        words += 1;
        if reduce_str(scheme, t) != t {
            trimmed += 1;
        }
    }
    if words == 0 {
        0.0
    } else {
        trimmed as f64 / words as f64
    }
}

/// Groups non-placeholder occurrences by reduced form.
pub fn ambiguity_report<S: AsRef<str>>(original: &[S], scheme: ReductionScheme) -> AmbiguityReport {
    let mut classes: HashMap<String, HashMap<&str, u64>> = HashMap::new();
    let mut words = 0u64;
    let mut full_types: HashSet<&str> = HashSet::new();
    for t in original {
        let t = t.as_ref();
        if is_placeholder(t) {
            continue;
        }
        words += 1;
        full_types.insert(t);
        *classes.entry(reduce_str(scheme, t).into_owned()).or_default().entry(t).or_insert(0) += 1;
    }
    // Canonical summation order: reduced form, then full token.
    let mut keys: Vec<&String> = classes.keys().collect();
    keys.sort();
    let mut h = 0.0;
    let mut max_class = 0u64;
    for k in keys {
        let members = &classes[k];
        let mut m: Vec<(&str, u64)> = members.iter().map(|(t, c)| (*t, *c)).collect();
        m.sort_unstable();
        let class_total: u64 = m.iter().map(|x| x.1).sum();
        max_class = max_class.max(m.len() as u64);
        let hr = class_entropy(m.iter().map(|x| x.1), class_total);
        h += (class_total as f64 / words as f64) * hr;
    }
    AmbiguityReport {
        scheme,
        classes: classes.len() as u64,
        max_class_size: max_class,
        conditional_entropy_bits: h,
        trim_fraction: trim_fraction(original, scheme),
        full_types: full_types.len() as u64,
    }
}

/// Full report for one contiguous stream treated as a single sample.
pub fn compare_schemes<S: AsRef<str> + Sync>(original: &[S], schemes: &[ReductionScheme]) -> CorpusReport {
    CorpusIndex::from_segments(&[original]).compare(schemes)
}
