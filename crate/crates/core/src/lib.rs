//! Character-subset tokenization toolkit.
//!
//! The pipeline turns raw text into lowercase whitespace tokens
//! ([`normalize`]), reduces each token to a subset of its characters
//! ([`reduce`]), builds frequency-ranked vocabularies ([`vocab`]), generates
//! masked-LM examples ([`mlm`]) and measures how much information a
//! reduction removes from a corpus ([`stats`]).
//!
//! ```
//! use charsub::{normalize_text, reduce_str, ReductionScheme};
//!
//! let stream = normalize_text("Mars is about HALF the size of Earth");
//! let reduced: Vec<_> = stream
//!     .tokens
//!     .iter()
//!     .map(|t| reduce_str(ReductionScheme::FirstLast, t.text()))
//!     .collect();
//! assert_eq!(reduced.join(" "), "ms is at hf te se of eh");
//! ```

pub mod error;
pub mod mlm;
pub mod normalize;
pub mod reduce;
pub mod stats;
pub mod tokenio;
pub mod vocab;

pub use error::{MlmError, SchemeParseError, TokenIoError, VocabError};
pub use mlm::{
    derive_seed, generate_dataset, select_mask_positions, DatasetSummary, ExampleBuilder, MaskRng, MaskRule,
    MaskedExample, MaskingConfig, TargetMode,
};
pub use normalize::{
    normalize_bytes, normalize_text, pack_sequences, Sample, Token, TokenKind, TokenStream, MASK_TOKEN, NUM_TOKEN,
};
pub use reduce::{middle_index, reduce_sequence, reduce_str, reduce_token, ReducedToken, ReductionScheme};
pub use stats::{
    ambiguity_report, compare_schemes, length_histogram, ngram_report, trim_fraction, AmbiguityReport, CorpusIndex,
    CorpusReport, LengthHistogram, NGramReport, SchemeReport,
};
pub use vocab::{build_vocab, load_vocab, save_vocab, TokenCounts, VocabConfig, Vocabulary};
