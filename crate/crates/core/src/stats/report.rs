use std::fmt::Write as _;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use super::{AmbiguityReport, LengthHistogram, NGramReport};
use crate::reduce::ReductionScheme;

/// Statistics of one corpus under one scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeReport {
    pub scheme: ReductionScheme,
    pub histogram: LengthHistogram,
    /// Orders 1, 2 and 3.
    pub ngrams: Vec<NGramReport>,
    pub trim_fraction: f64,
    pub ambiguity: AmbiguityReport,
}

impl SchemeReport {
    pub fn ngram(&self, n: usize) -> Option<&NGramReport> {
        self.ngrams.iter().find(|r| r.n == n)
    }

    /// Internal-consistency checks on this row.
    pub fn violations(&self) -> Vec<String> {
        let tag = self.scheme.tag();
        let mut v = self.ambiguity.violations();
        if !self.histogram.is_consistent() {
            v.push(format!("{tag}: histogram buckets do not sum to total"));
        }
        if let Some(max) = self.scheme.max_len() {
            let over = self.histogram.longer_than(max);
            if over > 0 {
                v.push(format!("{tag}: {over} word tokens longer than {max}"));
            }
        }
        for g in &self.ngrams {
            if g.distinct > g.total {
                v.push(format!("{tag}: {}-gram distinct {} > total {}", g.n, g.distinct, g.total));
            }
        }
        if self.trim_fraction != self.ambiguity.trim_fraction {
            v.push(format!("{tag}: trim fraction mismatch"));
        }
        v
    }
}

/// Rows in canonical scheme order. Serializes as a JSON object keyed by
/// scheme tag, preserving row order.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusReport {
    pub rows: Vec<SchemeReport>,
}

impl Serialize for CorpusReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.rows.len()))?;
        for r in &self.rows {
            m.serialize_entry(r.scheme.tag(), r)?;
        }
        m.end()
    }
}

impl CorpusReport {
    pub fn row(&self, scheme: ReductionScheme) -> Option<&SchemeReport> {
        self.rows.iter().find(|r| r.scheme == scheme)
    }

    /// Row invariants plus cross-row checks: FULL bounds every other row's
    /// distinct n-gram counts, and the positional refinement chains
    /// `F <= FL <= FML`, `L <= LL <= LLL`, `F <= FF <= FFF` hold for unigrams.
    pub fn violations(&self) -> Vec<String> {
        use ReductionScheme::*;
        let mut v: Vec<String> = self.rows.iter().flat_map(SchemeReport::violations).collect();
        if let Some(full) = self.row(Full) {
            for r in &self.rows {
                for g in &r.ngrams {
                    if let Some(f) = full.ngram(g.n) {
                        if g.distinct > f.distinct {
                            v.push(format!("{}: {}-grams exceed FULL ({} > {})", r.scheme, g.n, g.distinct, f.distinct));
                        }
                    }
                }
            }
        }
        let uni = |s| self.row(s).and_then(|r| r.ngram(1)).map(|g| g.distinct);
        for chain in [[First, FirstLast, FirstMiddleLast], [Last, LastTwo, LastThree], [First, FirstTwo, FirstThree]] {
            for w in chain.windows(2) {
                if let (Some(a), Some(b)) = (uni(w[0]), uni(w[1])) {
                    if a > b {
                        v.push(format!("distinct unigrams {} ({a}) > {} ({b})", w[0], w[1]));
                    }
                }
            }
        }
        v
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Fixed-width plain-text table, one line per scheme.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<6} {:>12} {:>7} {:>7} {:>7} {:>12} {:>12} {:>12} {:>7} {:>10} {:>9} {:>8}",
            "scheme", "tokens", "len=1", "len<=2", "len<=3", "unigrams", "bigrams", "trigrams", "trim", "classes",
            "max_cls", "H(bits)"
        );
        for r in &self.rows {
            let h = &r.histogram;
            let g = |n| r.ngram(n).map_or(0, |g| g.distinct);
            let _ = writeln!(
                out,
                "{:<6} {:>12} {:>6.1}% {:>6.1}% {:>6.1}% {:>12} {:>12} {:>12} {:>6.1}% {:>10} {:>9} {:>8.4}",
                r.scheme.tag(),
                h.total,
                100.0 * h.fraction_at_most(1),
                100.0 * h.fraction_at_most(2),
                100.0 * h.fraction_at_most(3),
                g(1),
                g(2),
                g(3),
                100.0 * r.trim_fraction,
                r.ambiguity.classes,
                r.ambiguity.max_class_size,
                r.ambiguity.conditional_entropy_bits
            );
        }
        out
    }

    /// `scheme,length,count` rows; placeholder tokens use length `special`.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("scheme,length,count\n");
        for r in &self.rows {
            for (len, c) in &r.histogram.buckets {
                let _ = writeln!(out, "{},{len},{c}", r.scheme.tag());
            }
            let _ = writeln!(out, "{},special,{}", r.scheme.tag(), r.histogram.special_bucket);
        }
        out
    }
}
