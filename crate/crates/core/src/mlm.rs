//! Masked-LM example generation.
//!
//! Inputs are the reduced tokens of a sample. Selected positions follow the
//! 80/10/10 rule (mask placeholder / random vocabulary token / unchanged) and
//! carry a target that is either the reduced form of the original token
//! ([`TargetMode::Partial`]) or the original token itself
//! ([`TargetMode::Full`]).
//!
//! # Randomness contract
//!
//! All randomness comes from SplitMix64 (state `x`; step
//! `x += 0x9E3779B97F4A7C15`, output `mix(x)` with the standard
//! `30/27/31` shift and `0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`
//! multipliers), so outputs can be reproduced by any implementation:
//!
//! - `derive_seed(seed, k)` is the `(k+1)`-th output of a SplitMix64 stream
//!   started at `seed`, i.e. `mix(seed + (k+1) * 0x9E3779B97F4A7C15)`.
//! - Sample `i` of a dataset uses `derive_seed(run_seed, i)` as its seed.
//! - Position selection draws from the stream started at
//!   `derive_seed(sample_seed, 0)`; substitution draws from the stream
//!   started at `derive_seed(sample_seed, 1)`.
//! - `uniform()` is `(next >> 11) * 2^-53`; `below(n)` is
//!   `(next as u128 * n as u128) >> 64`.
//! - Selection: with `m` maskable positions (non-placeholders),
//!   `k = clamp(round(rate * m), 1, m)`; a partial Fisher-Yates shuffle
//!   (`for j in 0..k: swap(j, j + below(m - j))`) picks `k`, which are then
//!   sorted.
//! - Substitution, per selected position in ascending order: `u = uniform()`;
//!   `u < mask_prob` masks, `u < mask_prob + random_prob` draws
//!   `pool[below(pool.len())]`, otherwise the reduced original is kept.

use std::io::Write;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::MlmError;
use crate::normalize::{Sample, Token, MASK_TOKEN};
use crate::reduce::{reduce_str, ReductionScheme};
use crate::vocab::{Vocabulary, UNK_TOKEN};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The `(k+1)`-th SplitMix64 output from `seed`.
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    let start = seed.wrapping_add(k.wrapping_mul(GOLDEN_GAMMA));
    SplitMix64::seed_from_u64(start).next_u64()
}

/// Seeded generator implementing the draws of the randomness contract.
#[derive(Debug, Clone)]
pub struct MaskRng(SplitMix64);

impl MaskRng {
    pub fn new(seed: u64) -> Self {
        MaskRng(SplitMix64::seed_from_u64(seed))
    }

    /// Independent child stream `k` of `seed`.
    pub fn lane(seed: u64, k: u64) -> Self {
        MaskRng::new(derive_seed(seed, k))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `0..n`. `n` must be non-zero.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TargetMode {
    /// Predict the reduced form of the masked token.
    Partial,
    /// Predict the original token.
    Full,
}

impl std::str::FromStr for TargetMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "partial" => Ok(TargetMode::Partial),
            "full" => Ok(TargetMode::Full),
            _ => Err(format!("unknown target mode `{s}` (expected partial or full)")),
        }
    }
}

/// Which substitution fired at a selected position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskRule {
    Mask,
    Random,
    Keep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedExample {
    pub input: Vec<String>,
    pub mask_positions: Vec<usize>,
    pub targets: Vec<String>,
    pub scheme: ReductionScheme,
    pub mode: TargetMode,
    pub seed: u64,
    pub rules: Vec<MaskRule>,
}

/// Masking probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskingConfig {
    pub rate: f64,
    pub mask_prob: f64,
    pub random_prob: f64,
}

impl Default for MaskingConfig {
    fn default() -> Self {
        MaskingConfig { rate: 0.15, mask_prob: 0.8, random_prob: 0.1 }
    }
}

impl MaskingConfig {
    /// Every selected position becomes the mask placeholder.
    pub fn always_mask(rate: f64) -> Self {
        MaskingConfig { rate, mask_prob: 1.0, random_prob: 0.0 }
    }

    pub fn validate(&self) -> Result<(), MlmError> {
        check_rate(self.rate)?;
        let (m, r) = (self.mask_prob, self.random_prob);
        if !(m >= 0.0 && r >= 0.0 && m + r <= 1.0) {
            return Err(MlmError::InvalidRuleProbabilities { mask: m, random: r });
        }
        Ok(())
    }
}

fn check_rate(rate: f64) -> Result<(), MlmError> {
    if rate > 0.0 && rate < 1.0 {
        Ok(())
    } else {
        Err(MlmError::InvalidRate(rate))
    }
}

/// Picks positions to mask. Placeholders are never chosen; when any
/// maskable token exists at least one position is returned.
pub fn select_mask_positions(tokens: &[Token], rate: f64, seed: u64) -> Result<Vec<usize>, MlmError> {
    check_rate(rate)?;
    let mut maskable: Vec<usize> =
        tokens.iter().enumerate().filter(|(_, t)| !t.is_placeholder()).map(|(i, _)| i).collect();
    let m = maskable.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let k = ((rate * m as f64).round() as usize).clamp(1, m);
    let mut rng = MaskRng::lane(seed, 0);
    for j in 0..k {
        let r = j + rng.below(m - j);
        maskable.swap(j, r);
    }
    maskable.truncate(k);
    maskable.sort_unstable();
    Ok(maskable)
}

/// Builds examples for one scheme and target mode.
#[derive(Debug, Clone)]
pub struct ExampleBuilder<'a> {
    pub scheme: ReductionScheme,
    pub mode: TargetMode,
    pub config: MaskingConfig,
    /// Candidates for the random-substitution rule. When empty the rule
    /// falls back to the mask placeholder.
    pub random_pool: &'a [String],
    /// Full-token target vocabulary; out-of-vocabulary full targets become
    /// `<unk>`. Ignored in partial mode.
    pub target_vocab: Option<&'a Vocabulary>,
}

impl<'a> ExampleBuilder<'a> {
    pub fn new(scheme: ReductionScheme, mode: TargetMode) -> Self {
        ExampleBuilder {
            scheme,
            mode,
            config: MaskingConfig::default(),
            random_pool: &[],
            target_vocab: None,
        }
    }

    pub fn config(mut self, config: MaskingConfig) -> Self {
        self.config = config;
        self
    }

    pub fn random_pool(mut self, pool: &'a [String]) -> Self {
        self.random_pool = pool;
        self
    }

    pub fn target_vocab(mut self, vocab: Option<&'a Vocabulary>) -> Self {
        self.target_vocab = vocab;
        self
    }

    fn target_for(&self, token: &Token) -> String {
        match self.mode {
            TargetMode::Partial => reduce_str(self.scheme, token.text()).into_owned(),
            TargetMode::Full => match self.target_vocab {
                Some(v) if !v.contains(token.text()) => UNK_TOKEN.to_owned(),
                _ => token.text().to_owned(),
            },
        }
    }

    /// Builds one example. `positions` must be strictly increasing and in range.
    pub fn make_example(&self, tokens: &[Token], positions: &[usize], seed: u64) -> Result<MaskedExample, MlmError> {
        if let Some(&p) = positions.iter().find(|&&p| p >= tokens.len()) {
            return Err(MlmError::PositionOutOfRange { position: p, len: tokens.len() });
        }
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MlmError::UnsortedPositions);
        }
        let mut input: Vec<String> =
            tokens.iter().map(|t| reduce_str(self.scheme, t.text()).into_owned()).collect();
        let mut rng = MaskRng::lane(seed, 1);
        let mut targets = Vec::with_capacity(positions.len());
        let mut rules = Vec::with_capacity(positions.len());
        let cut_random = self.config.mask_prob + self.config.random_prob;
        for &p in positions {
            let u = rng.uniform();
            let rule = if u < self.config.mask_prob {
                MaskRule::Mask
            } else if u < cut_random {
                MaskRule::Random
            } else {
                MaskRule::Keep
            };
            match rule {
                MaskRule::Mask => input[p] = MASK_TOKEN.to_owned(),
                MaskRule::Random if self.random_pool.is_empty() => input[p] = MASK_TOKEN.to_owned(),
                MaskRule::Random => {
                    input[p] = self.random_pool[rng.below(self.random_pool.len())].clone();
                }
                MaskRule::Keep => {}
            }
            rules.push(rule);
            targets.push(self.target_for(&tokens[p]));
        }
        Ok(MaskedExample {
            input,
            mask_positions: positions.to_vec(),
            targets,
            scheme: self.scheme,
            mode: self.mode,
            seed,
            rules,
        })
    }

    /// Selects positions and builds the example for one sample seed.
    pub fn sample_example(&self, tokens: &[Token], sample_seed: u64) -> Result<MaskedExample, MlmError> {
        let positions = select_mask_positions(tokens, self.config.rate, sample_seed)?;
        self.make_example(tokens, &positions, sample_seed)
    }
}

/// Totals reported by [`generate_dataset`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub examples: u64,
    pub tokens: u64,
    pub masked_positions: u64,
    pub mask_rule: u64,
    pub random_rule: u64,
    pub keep_rule: u64,
    /// Full-mode targets replaced by `<unk>`.
    pub unknown_targets: u64,
    pub bytes_written: u64,
}

const BATCH: usize = 2048;

/// Writes one JSON line per sample to `sink` and returns the totals.
///
/// Examples are built in parallel; lines are written in sample order, so the
/// output depends only on the inputs and `seed`.
pub fn generate_dataset<W: Write>(
    samples: &[Sample],
    builder: &ExampleBuilder<'_>,
    seed: u64,
    mut sink: W,
) -> Result<DatasetSummary, MlmError> {
    builder.config.validate()?;
    let mut summary = DatasetSummary::default();
    for (b, batch) in samples.chunks(BATCH).enumerate() {
        let base = (b * BATCH) as u64;
        let lines: Vec<(Vec<u8>, MaskedExample)> = batch
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let ex = builder.sample_example(s.tokens(), derive_seed(seed, base + i as u64))?;
                let mut line = serde_json::to_vec(&ex)?;
                line.push(b'\n');
                Ok((line, ex))
            })
            .collect::<Result<_, MlmError>>()?;
        for ((line, ex), sample) in lines.into_iter().zip(batch) {
            sink.write_all(&line)
                .map_err(|source| MlmError::Io { offset: summary.bytes_written, source })?;
            summary.bytes_written += line.len() as u64;
            summary.examples += 1;
            summary.tokens += sample.len() as u64;
            summary.masked_positions += ex.mask_positions.len() as u64;
            for r in &ex.rules {
                match r {
                    MaskRule::Mask => summary.mask_rule += 1,
                    MaskRule::Random => summary.random_rule += 1,
                    MaskRule::Keep => summary.keep_rule += 1,
                }
            }
            if builder.mode == TargetMode::Full && builder.target_vocab.is_some() {
                summary.unknown_targets += ex
                    .mask_positions
                    .iter()
                    .zip(&ex.targets)
                    .filter(|(&p, t)| t.as_str() == UNK_TOKEN && sample.tokens()[p].text() != UNK_TOKEN)
                    .count() as u64;
            }
        }
    }
    sink.flush().map_err(|source| MlmError::Io { offset: summary.bytes_written, source })?;
    Ok(summary)
}
