use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  other error (invalid option values, malformed manifest)
  2  command-line usage error
  3  unknown reduction scheme tag
  4  unreadable or malformed input
  5  malformed or mismatched vocabulary file
  6  output could not be written
  7  check failed (report invariant violated, replay digest mismatch)

Errors are printed to stderr as one JSON object: {\"error\", \"code\", \"message\"}.";

#[derive(Parser, Debug)]
#[command(name = "charsub", version, about = "Character-subset tokenization toolkit", after_help = EXIT_CODES)]
pub struct Cli {
    /// Worker threads; 0 uses every available core. Output bytes do not depend on this value.
    #[arg(long, global = true, env = "CHARSUB_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Manifest path. Defaults to `<out>.manifest.json` when --out is a file.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,

    /// Do not write a manifest.
    #[arg(long, global = true, conflicts_with = "manifest")]
    pub no_manifest: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Normalize raw text into one token per line.
    Normalize(NormalizeArgs),
    /// Apply a reduction scheme to every token.
    Reduce(ReduceArgs),
    /// Build a frequency-ordered vocabulary (TSV).
    Vocab(VocabArgs),
    /// Generate masked-language-model examples as JSON lines.
    Mask(MaskArgs),
    /// Corpus statistics under one scheme (JSON).
    Stats(StatsArgs),
    /// Corpus statistics across several schemes.
    Compare(CompareArgs),
    /// Re-run a command from its manifest and verify the output digests.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn io_mut(&mut self) -> Option<&mut IoArgs> {
        match self {
            Command::Normalize(a) => Some(&mut a.io),
            Command::Reduce(a) => Some(&mut a.io),
            Command::Vocab(a) => Some(&mut a.io),
            Command::Mask(a) => Some(&mut a.io),
            Command::Stats(a) => Some(&mut a.io),
            Command::Compare(a) => Some(&mut a.io),
            Command::Replay(_) => None,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct IoArgs {
    /// Input file; standard input when omitted.
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long = "out", value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// Raw text, normalized on the fly.
    Raw,
    /// One token per line.
    Tokens,
    /// Length-prefixed binary tokens.
    Binary,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenFormat {
    Text,
    Binary,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Partial,
    Full,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct NormalizeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub io: IoArgs,
    /// Output token format.
    #[arg(long, value_enum, default_value_t = TokenFormat::Text)]
    pub format: TokenFormat,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReduceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub io: IoArgs,
    /// Scheme tag: FULL, F, M, L, FL, FF, LL, FML, FFF, LLL, V or C.
    #[arg(long)]
    pub scheme: String,
    #[arg(long, value_enum, default_value_t = InputFormat::Tokens)]
    pub input_format: InputFormat,
    /// Output token format.
    #[arg(long, value_enum, default_value_t = TokenFormat::Text)]
    pub format: TokenFormat,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct VocabArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub io: IoArgs,
    /// Scheme tag; input tokens are reduced with it (reduction is idempotent).
    #[arg(long)]
    pub scheme: String,
    #[arg(long, value_enum, default_value_t = InputFormat::Tokens)]
    pub input_format: InputFormat,
    /// Same as --input-format raw.
    #[arg(long, conflicts_with = "input_format")]
    #[serde(skip)]
    pub from_raw: bool,
    /// Keep at most this many non-special entries.
    #[arg(long)]
    pub limit: Option<usize>,
    /// `default`, `character`, or a comma-separated list that includes `<unk>`.
    #[arg(long, default_value = "default")]
    pub specials: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct MaskArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub io: IoArgs,
    #[arg(long)]
    pub scheme: String,
    #[arg(long, value_enum, default_value_t = Mode::Partial)]
    pub mode: Mode,
    /// Fraction of maskable tokens selected per sample.
    #[arg(long, default_value_t = 0.15)]
    pub rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub mask_prob: f64,
    #[arg(long, default_value_t = 0.1)]
    pub random_prob: f64,
    /// Tokens per packed sample.
    #[arg(long, default_value_t = 512)]
    pub max_len: usize,
    /// Size limit of the random-replacement pool and the full-mode target vocabulary.
    #[arg(long, default_value_t = 50_000)]
    pub target_limit: usize,
    /// Reduced vocabulary supplying random replacements; built from the input when omitted.
    #[arg(long, value_name = "PATH")]
    pub vocab: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Raw)]
    pub input_format: InputFormat,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct StatsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub io: IoArgs,
    #[arg(long)]
    pub scheme: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CompareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub io: IoArgs,
    /// Comma-separated scheme tags, or ALL for every scheme in canonical order.
    #[arg(long, default_value = "ALL")]
    pub schemes: String,
    /// Print a plain-text table instead of JSON.
    #[arg(long)]
    pub table: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub corpus: CorpusArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CorpusArgs {
    #[arg(long, value_enum, default_value_t = InputFormat::Raw)]
    pub input_format: InputFormat,
    /// Tokens per sample; n-grams never cross sample boundaries.
    #[arg(long, default_value_t = 512)]
    pub max_len: usize,
    /// Also write the length histogram as CSV.
    #[arg(long, value_name = "PATH")]
    pub hist_csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest_file: PathBuf,
    /// Read input from here instead of the recorded path.
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Write output here instead of the recorded path.
    #[arg(long = "out", value_name = "PATH")]
    pub output: Option<PathBuf>,
}
