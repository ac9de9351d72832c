use std::borrow::Cow;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::{class_entropy, AmbiguityReport, LengthHistogram, NGramReport};
use super::report::{CorpusReport, SchemeReport};
use crate::normalize::{decode_lossy, for_each_token, is_placeholder, shard_ranges, NormalizeDiagnostics};
use crate::reduce::{reduce_str, ReductionScheme};

/// Interned corpus: every token is an id into a lexicographically sorted
/// type table, and samples are contiguous id ranges.
#[derive(Debug, Clone, Default)]
pub struct CorpusIndex {
    types: Vec<String>,
    counts: Vec<u64>,
    ids: Vec<u32>,
    /// Sample `i` is `ids[bounds[i]..bounds[i + 1]]`.
    bounds: Vec<usize>,
    diagnostics: NormalizeDiagnostics,
}

struct Shard {
    types: Vec<String>,
    ids: Vec<u32>,
    diag: NormalizeDiagnostics,
}

fn intern_shard<'a>(tokens: impl Iterator<Item = &'a str>) -> Shard {
    let mut map: FxHashMap<&str, u32> = FxHashMap::default();
    let mut types: Vec<String> = Vec::new();
    let mut ids = Vec::new();
    for t in tokens {
        let id = *map.entry(t).or_insert_with(|| {
            types.push(t.to_owned());
            (types.len() - 1) as u32
        });
        ids.push(id);
    }
    Shard { types, ids, diag: NormalizeDiagnostics::default() }
}

impl CorpusIndex {
    /// Builds from pre-tokenized segments; each segment is one sample.
    pub fn from_segments<T, S>(segments: &[T]) -> CorpusIndex
    where
        T: AsRef<[S]> + Sync,
        S: AsRef<str> + Sync,
    {
        let shards: Vec<Shard> = segments
            .par_iter()
            .map(|seg| intern_shard(seg.as_ref().iter().map(AsRef::as_ref)))
            .collect();
        let mut bounds = Vec::with_capacity(segments.len() + 1);
        bounds.push(0);
        for s in &shards {
            bounds.push(bounds.last().unwrap() + s.ids.len());
        }
        let mut idx = Self::merge(shards);
        idx.bounds = bounds;
        idx
    }

    /// Normalizes raw text in whitespace-aligned shards and packs the
    /// resulting stream greedily into samples of `max_len` tokens.
    pub fn from_raw(bytes: &[u8], max_len: usize, shard_bytes: usize) -> CorpusIndex {
        assert!(max_len >= 1, "max_len must be at least 1");
        let shards = bytes.len().div_ceil(shard_bytes.max(1)).max(1);
        let parts: Vec<Shard> = shard_ranges(bytes, shards)
            .into_par_iter()
            .map(|r| {
                let (text, invalid) = decode_lossy(&bytes[r]);
                let mut map: FxHashMap<String, u32> = FxHashMap::default();
                let mut types = Vec::new();
                let mut ids = Vec::new();
                let mut diag = NormalizeDiagnostics { invalid_bytes: invalid, ..Default::default() };
                for_each_token(&text, &mut diag, |t, _| {
                    let id = match map.get(t) {
                        Some(&id) => id,
                        None => {
                            let id = types.len() as u32;
                            types.push(t.to_owned());
                            map.insert(t.to_owned(), id);
                            id
                        }
                    };
                    ids.push(id);
                });
                Shard { types, ids, diag }
            })
            .collect();
        let mut idx = Self::merge(parts);
        idx.bounds = (0..idx.ids.len()).step_by(max_len).chain([idx.ids.len()]).collect();
        if idx.ids.is_empty() {
            idx.bounds = vec![0];
        }
        idx
    }

    fn merge(shards: Vec<Shard>) -> CorpusIndex {
        let mut all: Vec<&str> = shards.iter().flat_map(|s| s.types.iter().map(String::as_str)).collect();
        all.par_sort_unstable();
        all.dedup();
        let global: FxHashMap<&str, u32> = all.iter().enumerate().map(|(i, t)| (*t, i as u32)).collect();
        let remaps: Vec<Vec<u32>> =
            shards.par_iter().map(|s| s.types.iter().map(|t| global[t.as_str()]).collect()).collect();
        let total: usize = shards.iter().map(|s| s.ids.len()).sum();
        let mut ids = Vec::with_capacity(total);
        let mut diagnostics = NormalizeDiagnostics::default();
        for (s, remap) in shards.iter().zip(&remaps) {
            ids.extend(s.ids.iter().map(|&l| remap[l as usize]));
            diagnostics.merge(&s.diag);
        }
        let types: Vec<String> = all.into_iter().map(str::to_owned).collect();
        let counts = ids
            .par_chunks(1 << 20)
            .fold(
                || vec![0u64; types.len()],
                |mut acc, chunk| {
                    for &i in chunk {
                        acc[i as usize] += 1;
                    }
                    acc
                },
            )
            .reduce(
                || vec![0u64; types.len()],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        CorpusIndex { types, counts, ids, bounds: vec![0], diagnostics }
    }

    pub fn num_tokens(&self) -> usize {
        self.ids.len()
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn num_samples(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn diagnostics(&self) -> &NormalizeDiagnostics {
        &self.diagnostics
    }

    /// Sorted distinct token texts.
    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn type_counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sample_ids(&self, i: usize) -> &[u32] {
        &self.ids[self.bounds[i]..self.bounds[i + 1]]
    }

    /// Token texts in corpus order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> + '_ {
        self.ids.iter().map(|&i| self.types[i as usize].as_str())
    }

    /// Report rows for `schemes`, in the order given.
    pub fn compare(&self, schemes: &[ReductionScheme]) -> CorpusReport {
        CorpusReport { rows: schemes.iter().map(|&s| self.analyze(s)).collect() }
    }

    pub fn analyze(&self, scheme: ReductionScheme) -> SchemeReport {
        let view = ReducedView::new(self, scheme);
        let ngrams = (1..=3).map(|n| view.ngrams(self, n)).collect();
        SchemeReport {
            scheme,
            histogram: view.histogram(self),
            ngrams,
            trim_fraction: view.trim_fraction(self),
            ambiguity: view.ambiguity(self),
        }
    }

    pub fn ngram_report(&self, scheme: ReductionScheme, n: usize) -> NGramReport {
        ReducedView::new(self, scheme).ngrams(self, n)
    }
}

/// Type-level reduction of a corpus under one scheme.
struct ReducedView<'a> {
    scheme: ReductionScheme,
    reduced: Vec<Cow<'a, str>>,
    /// Type ids ordered by (reduced form, full form).
    order: Vec<u32>,
    /// Reduced-class id of each type, dense in `order`.
    class_of: Vec<u32>,
    classes: usize,
}

impl<'a> ReducedView<'a> {
    fn new(idx: &'a CorpusIndex, scheme: ReductionScheme) -> Self {
        let reduced: Vec<Cow<'a, str>> = idx.types.par_iter().map(|t| reduce_str(scheme, t)).collect();
        let mut order: Vec<u32> = (0..idx.types.len() as u32).collect();
        // Stable: ties keep the lexicographic full-type order.
        order.par_sort_by(|&a, &b| reduced[a as usize].cmp(&reduced[b as usize]));
        let mut class_of = vec![0u32; order.len()];
        let mut classes = 0usize;
        for (i, &t) in order.iter().enumerate() {
            if i > 0 && reduced[t as usize] != reduced[order[i - 1] as usize] {
                classes += 1;
            }
            class_of[t as usize] = classes as u32;
        }
        if !order.is_empty() {
            classes += 1;
        }
        ReducedView { scheme, reduced, order, class_of, classes }
    }

    fn histogram(&self, idx: &CorpusIndex) -> LengthHistogram {
        let mut h = LengthHistogram::default();
        for (r, &c) in self.reduced.iter().zip(&idx.counts) {
            h.add(r, c);
        }
        h
    }

    fn trim_fraction(&self, idx: &CorpusIndex) -> f64 {
        let (mut words, mut trimmed) = (0u64, 0u64);
        for ((t, r), &c) in idx.types.iter().zip(&self.reduced).zip(&idx.counts) {
            if is_placeholder(t) {
                continue;
            }
            words += c;
            if matches!(r, Cow::Owned(_)) {
                trimmed += c;
            }
        }
        if words == 0 {
            0.0
        } else {
            trimmed as f64 / words as f64
        }
    }

    fn ambiguity(&self, idx: &CorpusIndex) -> AmbiguityReport {
        let members: Vec<u32> =
            self.order.iter().copied().filter(|&t| !is_placeholder(&idx.types[t as usize])).collect();
        let words: u64 = members.iter().map(|&t| idx.counts[t as usize]).sum();
        let mut h = 0.0;
        let mut classes = 0u64;
        let mut max_class = 0u64;
        let mut start = 0;
        while start < members.len() {
            let cls = self.class_of[members[start] as usize];
            let mut end = start + 1;
            while end < members.len() && self.class_of[members[end] as usize] == cls {
                end += 1;
            }
            let group = &members[start..end];
            let counts = group.iter().map(|&t| idx.counts[t as usize]);
            let class_total: u64 = counts.clone().sum();
            h += (class_total as f64 / words as f64) * class_entropy(counts, class_total);
            classes += 1;
            max_class = max_class.max(group.len() as u64);
            start = end;
        }
        AmbiguityReport {
            scheme: self.scheme,
            classes,
            max_class_size: max_class,
            conditional_entropy_bits: h,
            trim_fraction: self.trim_fraction(idx),
            full_types: members.len() as u64,
        }
    }

    fn ngrams(&self, idx: &CorpusIndex, n: usize) -> NGramReport {
        assert!(n >= 1, "n-gram order must be at least 1");
        let total: u64 = (0..idx.num_samples())
            .map(|i| (idx.bounds[i + 1] - idx.bounds[i]).saturating_sub(n - 1) as u64)
            .sum();
        let bits = (usize::BITS - self.classes.max(2).saturating_sub(1).leading_zeros()) as usize;
        let distinct = if n == 1 {
            let mut seen = vec![false; self.classes];
            for &t in &idx.ids {
                seen[self.class_of[t as usize] as usize] = true;
            }
            seen.into_iter().filter(|&s| s).count() as u64
        } else if bits * n <= 64 {
            self.distinct_packed::<u64>(idx, n, bits)
        } else if bits * n <= 128 {
            self.distinct_packed::<u128>(idx, n, bits)
        } else {
            self.distinct_vec(idx, n)
        };
        NGramReport { n, distinct, total }
    }

    fn distinct_packed<K>(&self, idx: &CorpusIndex, n: usize, bits: usize) -> u64
    where
        K: Key,
    {
        let mut keys: Vec<K> = (0..idx.num_samples())
            .into_par_iter()
            .flat_map_iter(|i| {
                idx.sample_ids(i).windows(n).map(move |w| {
                    w.iter().fold(K::default(), |k, &t| k.push(self.class_of[t as usize], bits))
                })
            })
            .collect();
        keys.par_sort_unstable();
        count_runs(&keys)
    }

    fn distinct_vec(&self, idx: &CorpusIndex, n: usize) -> u64 {
        let mut keys: Vec<Vec<u32>> = (0..idx.num_samples())
            .into_par_iter()
            .flat_map_iter(|i| {
                idx.sample_ids(i)
                    .windows(n)
                    .map(move |w| w.iter().map(|&t| self.class_of[t as usize]).collect())
            })
            .collect();
        keys.par_sort_unstable();
        count_runs(&keys)
    }
}

fn count_runs<K: PartialEq>(sorted: &[K]) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    1 + sorted.windows(2).filter(|w| w[0] != w[1]).count() as u64
}

trait Key: Default + Ord + Copy + Send + Sync {
    fn push(self, v: u32, bits: usize) -> Self;
}

impl Key for u64 {
    fn push(self, v: u32, bits: usize) -> Self {
        (self << bits) | v as u64
    }
}

impl Key for u128 {
    fn push(self, v: u32, bits: usize) -> Self {
        (self << bits) | v as u128
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::{normalize_bytes, pack_sequences};
    use crate::stats::{ambiguity_report, length_histogram, ngram_report, trim_fraction};

    const TEXT: &str = "Mars is about half the size of Earth . The 2 moons of mars are small ; \
                        earth has one moon and 7,000 satellites ... mars mars earth";

    #[test]
    fn raw_and_segments_agree() {
        let stream = normalize_bytes(TEXT.as_bytes());
        let samples = pack_sequences(stream, 5);
        let segs: Vec<Vec<&str>> = samples.iter().map(|s| s.tokens().iter().map(|t| t.text()).collect()).collect();
        let a = CorpusIndex::from_segments(&segs);
        for shard in [1, 7, 64, 4096] {
            let b = CorpusIndex::from_raw(TEXT.as_bytes(), 5, shard);
            assert_eq!(a.types, b.types);
            assert_eq!(a.ids, b.ids);
            assert_eq!(a.bounds, b.bounds);
        }
    }

    #[test]
    fn matches_direct_functions() {
        let stream = normalize_bytes(TEXT.as_bytes());
        let texts: Vec<&str> = stream.tokens.iter().map(|t| t.text()).collect();
        let samples: Vec<&[&str]> = texts.chunks(4).collect();
        let idx = CorpusIndex::from_segments(&samples);
        for s in ReductionScheme::ALL {
            let reduced: Vec<String> = texts.iter().map(|t| reduce_str(s, t).into_owned()).collect();
            let red_samples: Vec<&[String]> = reduced.chunks(4).collect();
            let row = idx.analyze(s);
            assert_eq!(row.histogram, length_histogram(&reduced));
            for n in 1..=3 {
                assert_eq!(row.ngrams[n - 1], ngram_report(&red_samples, n), "{s} n={n}");
            }
            assert_eq!(row.trim_fraction, trim_fraction(&texts, s));
            assert_eq!(row.ambiguity, ambiguity_report(&texts, s));
        }
    }

    #[test]
    fn wide_keys_fall_back() {
        // 2^22 classes force 66-bit trigram keys.
        let toks: Vec<String> = (0..300).map(|i| format!("w{i}")).collect();
        let idx = CorpusIndex::from_segments(&[&toks]);
        let view = ReducedView::new(&idx, ReductionScheme::Full);
        assert_eq!(view.distinct_packed::<u128>(&idx, 3, 22), 298);
        assert_eq!(view.distinct_vec(&idx, 3), 298);
        assert_eq!(view.distinct_packed::<u64>(&idx, 2, 9), 299);
    }

    #[test]
    fn empty_corpus() {
        let idx = CorpusIndex::from_raw(b"", 512, 1024);
        assert_eq!(idx.num_samples(), 0);
        let row = idx.analyze(ReductionScheme::First);
        assert_eq!(row.histogram.total, 0);
        assert_eq!(row.ngrams[0].distinct, 0);
        assert_eq!(row.trim_fraction, 0.0);
        assert_eq!(row.ambiguity.conditional_entropy_bits, 0.0);
    }
}
