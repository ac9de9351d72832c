//! Frequency-ranked vocabularies over reduced tokens.
//!
//! Ids are dense: specials take `0..specials.len()` in the order given, the
//! remaining entries follow sorted by frequency descending with ties broken
//! by ascending token text. With a truncation limit only the first `limit`
//! non-special entries are kept and the dropped mass is recorded.
//!
//! # File format
//!
//! UTF-8, tab separated. The first line is a header:
//!
//! ```text
//! #scheme=F	#limit=none	#specials=6	#entries=32	#dropped_types=0	#dropped_mass=0	#merged_specials=17
//! ```
//!
//! The first two fields are mandatory and fixed in position. Every other line
//! is `token \t frequency \t id`, specials first.

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::error::VocabError;
use crate::normalize::{decode_lossy, for_each_token, shard_ranges, NormalizeDiagnostics, MASK_TOKEN, NUM_TOKEN, PUNCTUATION};
use crate::reduce::{reduce_str, ReductionScheme};

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";

/// Default reserved tokens.
pub const DEFAULT_SPECIALS: [&str; 6] =
    [PAD_TOKEN, UNK_TOKEN, MASK_TOKEN, NUM_TOKEN, BOS_TOKEN, EOS_TOKEN];

/// The ten non-letter symbols of a single-character vocabulary: the four
/// model specials plus the retained punctuation marks.
pub fn character_specials() -> Vec<String> {
    let mut v: Vec<String> =
        [PAD_TOKEN, UNK_TOKEN, MASK_TOKEN, NUM_TOKEN].iter().map(|s| s.to_string()).collect();
    v.extend(PUNCTUATION.iter().map(|c| c.to_string()));
    v
}

pub fn default_specials() -> Vec<String> {
    DEFAULT_SPECIALS.iter().map(|s| s.to_string()).collect()
}

/// Exact token frequency table. Merging is associative and commutative.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenCounts {
    counts: FxHashMap<String, u64>,
    total: u64,
}

impl TokenCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, token: &str) {
        self.add_n(token, 1);
    }

    pub fn add_n(&mut self, token: &str, n: u64) {
        if let Some(c) = self.counts.get_mut(token) {
            *c += n;
        } else {
            self.counts.insert(token.to_owned(), n);
        }
        self.total += n;
    }

    pub fn merge(self, other: TokenCounts) -> TokenCounts {
        let (mut big, small) =
            if self.counts.len() >= other.counts.len() { (self, other) } else { (other, self) };
        for (k, v) in small.counts {
            *big.counts.entry(k).or_insert(0) += v;
        }
        big.total += small.total;
        big
    }

    /// Counts a slice of tokens shard-by-shard on the current rayon pool.
    pub fn count_parallel<S: AsRef<str> + Sync>(tokens: &[S]) -> TokenCounts {
        tokens
            .par_chunks(1 << 16)
            .map(|chunk| chunk.iter().map(AsRef::as_ref).collect::<TokenCounts>())
            .reduce(TokenCounts::new, TokenCounts::merge)
    }

    /// Normalizes raw text in whitespace-aligned shards, reduces every token
    /// with `scheme` and counts the results.
    pub fn count_raw(bytes: &[u8], scheme: ReductionScheme, shard_bytes: usize) -> (TokenCounts, NormalizeDiagnostics) {
        let shards = bytes.len().div_ceil(shard_bytes.max(1)).max(1);
        shard_ranges(bytes, shards)
            .into_par_iter()
            .map(|r| {
                let (text, invalid) = decode_lossy(&bytes[r]);
                let mut diag = NormalizeDiagnostics { invalid_bytes: invalid, ..Default::default() };
                let mut counts = TokenCounts::new();
                for_each_token(&text, &mut diag, |t, _| counts.add(&reduce_str(scheme, t)));
                (counts, diag)
            })
            .reduce(
                || (TokenCounts::new(), NormalizeDiagnostics::default()),
                |(a, mut da), (b, db)| {
                    da.merge(&db);
                    (a.merge(b), da)
                },
            )
    }

    pub fn get(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

impl<'a> FromIterator<&'a str> for TokenCounts {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        let mut c = TokenCounts::new();
        for t in iter {
            c.add(t);
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabConfig {
    pub scheme: ReductionScheme,
    pub specials: Vec<String>,
    pub limit: Option<usize>,
}

impl VocabConfig {
    pub fn new(scheme: ReductionScheme) -> Self {
        VocabConfig { scheme, specials: default_specials(), limit: None }
    }

    pub fn with_specials<S: Into<String>>(mut self, specials: impl IntoIterator<Item = S>) -> Self {
        self.specials = specials.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_limit(mut self, limit: Option<usize>) -> Self {
        self.limit = limit;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub token: String,
    pub frequency: u64,
    pub id: u32,
}

#[derive(Debug, Clone)]
pub struct Vocabulary {
    scheme: ReductionScheme,
    limit: Option<usize>,
    entries: Vec<VocabEntry>,
    num_specials: usize,
    index: FxHashMap<String, u32>,
    unk_id: u32,
    dropped_types: u64,
    dropped_mass: u64,
    merged_specials: u64,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.scheme == other.scheme
            && self.limit == other.limit
            && self.entries == other.entries
            && self.num_specials == other.num_specials
            && self.dropped_types == other.dropped_types
            && self.dropped_mass == other.dropped_mass
            && self.merged_specials == other.merged_specials
    }
}

impl Eq for Vocabulary {}

/// Builds a vocabulary from a stream of (already reduced) token texts.
pub fn build_vocab<I, S>(reduced: I, config: &VocabConfig) -> Result<Vocabulary, VocabError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts = TokenCounts::new();
    for t in reduced {
        counts.add(t.as_ref());
    }
    Vocabulary::from_counts(&counts, config)
}

fn check_token(t: &str) -> Result<(), VocabError> {
    if t.is_empty() || t.chars().any(char::is_whitespace) {
        return Err(VocabError::InvalidToken(t.to_owned()));
    }
    Ok(())
}

impl Vocabulary {
    /// Builds from precomputed counts. Stream occurrences of a special token
    /// are merged into that special's frequency and tallied in
    /// [`Vocabulary::merged_specials`].
    pub fn from_counts(counts: &TokenCounts, config: &VocabConfig) -> Result<Vocabulary, VocabError> {
        if config.limit == Some(0) {
            return Err(VocabError::ZeroLimit);
        }
        let mut entries = Vec::with_capacity(config.specials.len() + counts.distinct());
        let mut index = FxHashMap::default();
        let mut merged = 0;
        for s in &config.specials {
            check_token(s)?;
            if index.contains_key(s.as_str()) {
                return Err(VocabError::DuplicateSpecial(s.clone()));
            }
            let freq = counts.get(s);
            merged += freq;
            index.insert(s.clone(), entries.len() as u32);
            entries.push(VocabEntry { token: s.clone(), frequency: freq, id: entries.len() as u32 });
        }
        let unk_id = *index.get(UNK_TOKEN).ok_or(VocabError::MissingUnknown(UNK_TOKEN))?;

        let mut rest: Vec<(&str, u64)> =
            counts.iter().filter(|(t, _)| !index.contains_key(*t)).collect();
        for (t, _) in &rest {
            check_token(t)?;
        }
        rest.par_sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let keep = config.limit.map_or(rest.len(), |l| l.min(rest.len()));
        let dropped = &rest[keep..];
        let dropped_types = dropped.len() as u64;
        let dropped_mass = dropped.iter().map(|(_, f)| f).sum();

        for &(t, f) in &rest[..keep] {
            let id = entries.len() as u32;
            index.insert(t.to_owned(), id);
            entries.push(VocabEntry { token: t.to_owned(), frequency: f, id });
        }
        Ok(Vocabulary {
            scheme: config.scheme,
            limit: config.limit,
            entries,
            num_specials: config.specials.len(),
            index,
            unk_id,
            dropped_types,
            dropped_mass,
            merged_specials: merged,
        })
    }

    pub fn scheme(&self) -> ReductionScheme {
        self.scheme
    }

    pub fn limit(&self) -> Option<usize> {
        self.limit
    }

    /// Total entry count, specials included.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn specials(&self) -> &[VocabEntry] {
        &self.entries[..self.num_specials]
    }

    pub fn regular(&self) -> &[VocabEntry] {
        &self.entries[self.num_specials..]
    }

    pub fn unk_id(&self) -> u32 {
        self.unk_id
    }

    /// Non-special types removed by truncation.
    pub fn dropped_types(&self) -> u64 {
        self.dropped_types
    }

    /// Occurrences of the types removed by truncation.
    pub fn dropped_mass(&self) -> u64 {
        self.dropped_mass
    }

    /// Stream occurrences that matched a special token.
    pub fn merged_specials(&self) -> u64 {
        self.merged_specials
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Id of `token`, or the unknown-token id.
    pub fn encode(&self, token: &str) -> u32 {
        self.get(token).unwrap_or(self.unk_id)
    }

    pub fn decode(&self, id: u32) -> Option<&str> {
        self.entries.get(id as usize).map(|e| e.token.as_str())
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        let limit = self.limit.map_or_else(|| "none".to_owned(), |l| l.to_string());
        writeln!(
            w,
            "#scheme={}\t#limit={}\t#specials={}\t#entries={}\t#dropped_types={}\t#dropped_mass={}\t#merged_specials={}",
            self.scheme,
            limit,
            self.num_specials,
            self.entries.len(),
            self.dropped_types,
            self.dropped_mass,
            self.merged_specials
        )?;
        for e in &self.entries {
            writeln!(w, "{}\t{}\t{}", e.token, e.frequency, e.id)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.write(&mut v).expect("writing to a Vec cannot fail");
        v
    }

    pub fn read<R: BufRead>(r: R) -> Result<Vocabulary, VocabError> {
        let mut lines = r.lines();
        let header = match lines.next() {
            Some(l) => l?,
            None => return Err(VocabError::parse(1, "empty file, expected header")),
        };
        let mut fields = header.split('\t');
        let scheme = fields
            .next()
            .and_then(|f| f.strip_prefix("#scheme="))
            .ok_or_else(|| VocabError::parse(1, "header must start with #scheme=<TAG>"))?
            .parse::<ReductionScheme>()
            .map_err(|e| VocabError::parse(1, e.to_string()))?;
        let limit = match fields.next().and_then(|f| f.strip_prefix("#limit=")) {
            Some("none") => None,
            Some(n) => Some(
                n.parse::<usize>()
                    .ok()
                    .filter(|&l| l > 0)
                    .ok_or_else(|| VocabError::parse(1, format!("bad limit `{n}`")))?,
            ),
            None => return Err(VocabError::parse(1, "second header field must be #limit=<N|none>")),
        };
        let mut num_specials = 0usize;
        let mut expected_entries = None;
        let (mut dropped_types, mut dropped_mass, mut merged_specials) = (0, 0, 0);
        for f in fields {
            let (k, v) = f
                .strip_prefix('#')
                .and_then(|f| f.split_once('='))
                .ok_or_else(|| VocabError::parse(1, format!("bad header field `{f}`")))?;
            let n: u64 =
                v.parse().map_err(|_| VocabError::parse(1, format!("bad value for {k}: `{v}`")))?;
            match k {
                "specials" => num_specials = n as usize,
                "entries" => expected_entries = Some(n as usize),
                "dropped_types" => dropped_types = n,
                "dropped_mass" => dropped_mass = n,
                "merged_specials" => merged_specials = n,
                _ => return Err(VocabError::parse(1, format!("unknown header field `{k}`"))),
            }
        }

        let mut entries: Vec<VocabEntry> = Vec::with_capacity(expected_entries.unwrap_or(0));
        let mut index = FxHashMap::default();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line?;
            let mut parts = line.split('\t');
            let (Some(token), Some(freq), Some(id), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(VocabError::parse(lineno, "expected `token<TAB>frequency<TAB>id`"));
            };
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(VocabError::parse(lineno, "invalid token text"));
            }
            let frequency: u64 =
                freq.parse().map_err(|_| VocabError::parse(lineno, format!("bad frequency `{freq}`")))?;
            let id: u32 = id.parse().map_err(|_| VocabError::parse(lineno, format!("bad id `{id}`")))?;
            if id as usize != entries.len() {
                return Err(VocabError::parse(lineno, format!("expected id {}, found {id}", entries.len())));
            }
            if entries.len() > num_specials {
                let prev = &entries[entries.len() - 1];
                let ordered = prev.frequency > frequency
                    || (prev.frequency == frequency && prev.token.as_str() < token);
                if !ordered {
                    return Err(VocabError::parse(lineno, "entries not sorted by (frequency desc, token asc)"));
                }
            }
            if index.insert(token.to_owned(), id).is_some() {
                return Err(VocabError::parse(lineno, format!("duplicate token `{token}`")));
            }
            entries.push(VocabEntry { token: token.to_owned(), frequency, id });
        }
        let last_line = entries.len() + 1;
        if let Some(n) = expected_entries {
            if n != entries.len() {
                return Err(VocabError::parse(
                    last_line,
                    format!("file truncated: header declares {n} entries, found {}", entries.len()),
                ));
            }
        }
        if entries.len() < num_specials {
            return Err(VocabError::parse(last_line, "fewer entries than declared specials"));
        }
        if let Some(l) = limit {
            if entries.len() - num_specials > l {
                return Err(VocabError::parse(last_line, "more entries than the truncation limit"));
            }
        }
        let unk_id = index
            .get(UNK_TOKEN)
            .copied()
            .filter(|&id| (id as usize) < num_specials)
            .ok_or_else(|| VocabError::parse(last_line, "no <unk> special token"))?;
        Ok(Vocabulary {
            scheme,
            limit,
            entries,
            num_specials,
            index,
            unk_id,
            dropped_types,
            dropped_mass,
            merged_specials,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), VocabError> {
        let mut f = io::BufWriter::new(fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Vocabulary, VocabError> {
        Vocabulary::read(BufReader::new(fs::File::open(path)?))
    }
}

pub fn save_vocab(vocab: &Vocabulary, path: impl AsRef<Path>) -> Result<(), VocabError> {
    vocab.save(path)
}

pub fn load_vocab(path: impl AsRef<Path>) -> Result<Vocabulary, VocabError> {
    Vocabulary::load(path)
}
