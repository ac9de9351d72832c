#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use charsub::{AmbiguityReport, LengthHistogram, NGramReport, ReductionScheme};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

// Rough English letter frequencies (per mille), a..z.
const LETTER_WEIGHTS: [u32; 26] = [
    82, 15, 28, 43, 127, 22, 20, 61, 70, 2, 8, 40, 24, 67, 75, 19, 1, 60, 63, 91, 28, 10, 24, 2, 20, 1,
];
const LENGTH_WEIGHTS: [u32; 14] = [3, 17, 21, 16, 11, 9, 7, 5, 4, 3, 2, 1, 1, 1];

/// Deterministic English-like text generator with a Zipfian lexicon.
pub struct SyntheticText {
    rng: StdRng,
    lexicon: Vec<String>,
    cumulative: Vec<f64>,
}

fn pick_weighted(rng: &mut StdRng, weights: &[u32]) -> usize {
    let total: u32 = weights.iter().sum();
    let mut x = rng.gen_range(0..total);
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

impl SyntheticText {
    pub fn new(seed: u64, lexicon_size: usize) -> Self {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut seen = HashSet::new();
        let mut lexicon = Vec::with_capacity(lexicon_size);
        while lexicon.len() < lexicon_size {
            let len = pick_weighted(&mut rng, &LENGTH_WEIGHTS) + 1;
            let w: String = (0..len).map(|_| (b'a' + pick_weighted(&mut rng, &LETTER_WEIGHTS) as u8) as char).collect();
            if seen.insert(w.clone()) {
                lexicon.push(w);
            }
        }
        let mut cumulative = Vec::with_capacity(lexicon_size);
        let mut acc = 0.0;
        for r in 0..lexicon_size {
            acc += 1.0 / (r as f64 + 2.7);
            cumulative.push(acc);
        }
        SyntheticText { rng, lexicon, cumulative }
    }

    pub fn word(&mut self) -> &str {
        let x = self.rng.gen::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let i = self.cumulative.partition_point(|&c| c < x).min(self.lexicon.len() - 1);
        &self.lexicon[i]
    }

    /// Raw text with capitals, numbers, punctuation, symbols and non-ASCII noise.
    pub fn raw_text(&mut self, approx_bytes: usize) -> String {
        let mut out = String::with_capacity(approx_bytes + 64);
        let mut since_newline = 0;
        while out.len() < approx_bytes {
            let roll: u32 = self.rng.gen_range(0..1000);
            match roll {
                0..=14 => {
                    let n: u32 = self.rng.gen_range(0..100_000);
                    out.push_str(&n.to_string());
                }
                15..=19 => out.push_str("3.14"),
                20..=39 => out.push_str([".", ",", "!", "?", "-", "'"][(roll % 6) as usize]),
                40..=44 => out.push_str(["(x)", "$5", "#tag", "@me", "über", "naïve"][(roll % 6) as usize]),
                45..=49 => {
                    let w = self.word().to_owned();
                    out.push_str(&w);
                    out.push_str(&format!("{}", roll % 10));
                }
                50..=119 => {
                    let w = self.word().to_owned();
                    let mut c = w.chars();
                    let first = c.next().unwrap().to_ascii_uppercase();
                    out.push(first);
                    out.push_str(c.as_str());
                }
                120..=179 => {
                    let w = self.word().to_owned();
                    out.push_str(&w);
                    out.push(if roll % 2 == 0 { '.' } else { ',' });
                }
                _ => {
                    let w = self.word().to_owned();
                    out.push_str(&w);
                }
            }
            since_newline += 1;
            if since_newline > 40 && roll % 7 == 0 {
                out.push('\n');
                since_newline = 0;
            } else {
                out.push(' ');
            }
        }
        out
    }

    /// Already-normalized lowercase word tokens with occasional `<num>`.
    pub fn tokens(&mut self, n: usize) -> Vec<String> {
        (0..n)
            .map(|_| {
                if self.rng.gen_range(0..50) == 0 {
                    "<num>".to_owned()
                } else {
                    self.word().to_owned()
                }
            })
            .collect()
    }
}

/// Naive single-threaded statistics reference working directly on strings.
pub struct NaiveReport {
    pub histogram: LengthHistogram,
    pub ngrams: Vec<NGramReport>,
    pub trim_fraction: f64,
    pub ambiguity: AmbiguityReport,
}

fn placeholder(t: &str) -> bool {
    t == "<num>" || t == "[MASK]"
}

pub fn naive_reduce(scheme: ReductionScheme, t: &str) -> String {
    use ReductionScheme::*;
    if placeholder(t) {
        return t.to_owned();
    }
    let c: Vec<char> = t.chars().collect();
    let n = c.len();
    let idx: Vec<usize> = match scheme {
        Full => (0..n).collect(),
        First => vec![0],
        Middle => vec![n / 2],
        Last => vec![n - 1],
        FirstLast if n > 2 => vec![0, n - 1],
        FirstTwo if n > 2 => vec![0, 1],
        LastTwo if n > 2 => vec![n - 2, n - 1],
        FirstMiddleLast if n > 3 => vec![0, n / 2, n - 1],
        FirstThree if n > 3 => vec![0, 1, 2],
        LastThree if n > 3 => vec![n - 3, n - 2, n - 1],
        Vowels | Consonants => {
            let want_vowel = scheme == Vowels;
            let kept: Vec<usize> = (0..n).filter(|&i| "aeiou".contains(c[i]) == want_vowel).collect();
            if kept.is_empty() {
                (0..n).collect()
            } else {
                kept
            }
        }
        _ => (0..n).collect(),
    };
    idx.into_iter().map(|i| c[i]).collect()
}

pub fn naive_report(samples: &[Vec<String>], scheme: ReductionScheme) -> NaiveReport {
    let mut histogram = LengthHistogram::default();
    let mut words = 0u64;
    let mut trimmed = 0u64;
    let mut classes: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    let mut full_types = BTreeSet::new();
    let mut reduced_samples: Vec<Vec<String>> = Vec::new();
    for s in samples {
        let mut rs = Vec::with_capacity(s.len());
        for t in s {
            let r = naive_reduce(scheme, t);
            histogram.total += 1;
            if placeholder(&r) {
                histogram.special_bucket += 1;
            } else {
                *histogram.buckets.entry(r.chars().count()).or_insert(0) += 1;
            }
            if !placeholder(t) {
                words += 1;
                if &r != t {
                    trimmed += 1;
                }
                full_types.insert(t.clone());
                *classes.entry(r.clone()).or_default().entry(t.clone()).or_insert(0) += 1;
            }
            rs.push(r);
        }
        reduced_samples.push(rs);
    }
    let ngrams = (1..=3)
        .map(|n| {
            let mut set: HashSet<&[String]> = HashSet::new();
            let mut total = 0;
            for s in &reduced_samples {
                for w in s.windows(n) {
                    set.insert(w);
                    total += 1;
                }
            }
            NGramReport { n, distinct: set.len() as u64, total }
        })
        .collect();
    let mut h = 0.0;
    let mut max_class = 0;
    for members in classes.values() {
        let class_total: u64 = members.values().sum();
        max_class = max_class.max(members.len() as u64);
        let mut s = 0.0;
        for &k in members.values() {
            let p = k as f64 / class_total as f64;
            s += p * p.log2();
        }
        h += (class_total as f64 / words as f64) * -s;
    }
    let trim_fraction = if words == 0 { 0.0 } else { trimmed as f64 / words as f64 };
    NaiveReport {
        histogram,
        ngrams,
        trim_fraction,
        ambiguity: AmbiguityReport {
            scheme,
            classes: classes.len() as u64,
            max_class_size: max_class,
            conditional_entropy_bits: h,
            trim_fraction,
            full_types: full_types.len() as u64,
        },
    }
}

/// Splits a token list into consecutive samples of `max_len`.
pub fn chunk(tokens: &[String], max_len: usize) -> Vec<Vec<String>> {
    tokens.chunks(max_len).map(<[String]>::to_vec).collect()
}
