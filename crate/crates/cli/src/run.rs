use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use charsub::tokenio::{decode_binary, read_text, write_binary, write_text};
use charsub::vocab::{character_specials, default_specials};
use charsub::{
    generate_dataset, pack_sequences, reduce_str, CorpusIndex, CorpusReport, ExampleBuilder, MaskingConfig,
    ReductionScheme, TargetMode, Token, TokenCounts, TokenStream, VocabConfig, VocabError, Vocabulary,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::args::*;

const SHARD_BYTES: usize = 4 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Other = 1,
    BadScheme = 3,
    Input = 4,
    Vocab = 5,
    Output = 6,
    Check = 7,
}

impl Kind {
    fn label(self) -> &'static str {
        match self {
            Kind::Other => "error",
            Kind::BadScheme => "bad_scheme",
            Kind::Input => "input",
            Kind::Vocab => "vocab",
            Kind::Output => "output",
            Kind::Check => "check_failed",
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl Failure {
    pub fn new(kind: Kind, message: impl fmt::Display) -> Self {
        Failure { kind, message: message.to_string() }
    }

    pub fn code(&self) -> u8 {
        self.kind as u8
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.kind.label(), "code": self.code(), "message": self.message }).to_string()
    }
}

type Result<T, E = Failure> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub role: String,
    pub path: Option<PathBuf>,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    fn of(role: &str, path: Option<&Path>, data: &[u8]) -> Self {
        FileDigest {
            role: role.to_owned(),
            path: path.map(Path::to_path_buf),
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(data)),
        }
    }
}

#[derive(Debug, Default)]
pub struct Execution {
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub summary: Value,
}

impl Execution {
    fn read(&mut self, role: &str, path: Option<&Path>) -> Result<Vec<u8>> {
        let data = match path {
            Some(p) => std::fs::read(p).map_err(|e| Failure::new(Kind::Input, format!("{}: {e}", p.display())))?,
            None => {
                let mut buf = Vec::new();
                std::io::stdin().lock().read_to_end(&mut buf).map_err(|e| Failure::new(Kind::Input, format!("stdin: {e}")))?;
                buf
            }
        };
        self.inputs.push(FileDigest::of(role, path, &data));
        Ok(data)
    }

    fn write(&mut self, role: &str, path: Option<&Path>, data: &[u8]) -> Result<()> {
        match path {
            Some(p) => std::fs::write(p, data).map_err(|e| Failure::new(Kind::Output, format!("{}: {e}", p.display())))?,
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(data)
                    .and_then(|_| out.flush())
                    .map_err(|e| Failure::new(Kind::Output, format!("stdout: {e}")))?;
            }
        }
        self.outputs.push(FileDigest::of(role, path, data));
        Ok(())
    }
}

fn scheme(tag: &str) -> Result<ReductionScheme> {
    tag.parse().map_err(|e| Failure::new(Kind::BadScheme, e))
}

/// Validates scheme tags and folds flag aliases, so the recorded config is canonical.
pub fn resolve(mut cmd: Command) -> Result<Command> {
    match &mut cmd {
        Command::Reduce(a) => a.scheme = scheme(&a.scheme)?.tag().to_owned(),
        Command::Vocab(a) => {
            a.scheme = scheme(&a.scheme)?.tag().to_owned();
            if a.from_raw {
                a.input_format = InputFormat::Raw;
                a.from_raw = false;
            }
            parse_specials(&a.specials)?;
        }
        Command::Mask(a) => {
            a.scheme = scheme(&a.scheme)?.tag().to_owned();
            masking(a).validate().map_err(|e| Failure::new(Kind::Other, e))?;
            check_max_len(a.max_len)?;
        }
        Command::Stats(a) => {
            a.scheme = scheme(&a.scheme)?.tag().to_owned();
            check_max_len(a.corpus.max_len)?;
        }
        Command::Compare(a) => {
            let list = ReductionScheme::parse_list(&a.schemes).map_err(|e| Failure::new(Kind::BadScheme, e))?;
            a.schemes = list.iter().map(|s| s.tag()).collect::<Vec<_>>().join(",");
            check_max_len(a.corpus.max_len)?;
        }
        Command::Normalize(_) | Command::Replay(_) => {}
    }
    Ok(cmd)
}

fn check_max_len(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Failure::new(Kind::Other, "--max-len must be at least 1"));
    }
    Ok(())
}

fn masking(a: &MaskArgs) -> MaskingConfig {
    MaskingConfig { rate: a.rate, mask_prob: a.mask_prob, random_prob: a.random_prob }
}

fn parse_specials(s: &str) -> Result<Vec<String>> {
    match s {
        "default" => Ok(default_specials()),
        "character" => Ok(character_specials()),
        list => {
            let v: Vec<String> = list.split(',').map(|t| t.trim().to_owned()).filter(|t| !t.is_empty()).collect();
            Vocabulary::from_counts(&TokenCounts::new(), &VocabConfig::new(ReductionScheme::Full).with_specials(v.clone()))
                .map_err(|e| Failure::new(Kind::Other, format!("--specials: {e}")))?;
            Ok(v)
        }
    }
}

/// Token texts from `data`, normalizing first when the input is raw text.
fn load_tokens(data: &[u8], format: InputFormat) -> Result<Vec<String>> {
    match format {
        InputFormat::Raw => {
            Ok(charsub::normalize::normalize_parallel(data, SHARD_BYTES).tokens.into_iter().map(Token::into_text).collect())
        }
        InputFormat::Tokens => read_text(data).map_err(|e| Failure::new(Kind::Input, e)),
        InputFormat::Binary => decode_binary(data).map_err(|e| Failure::new(Kind::Input, e)),
    }
}

fn encode_tokens<S: AsRef<str>>(tokens: &[S], format: TokenFormat) -> Vec<u8> {
    let mut buf = Vec::new();
    match format {
        TokenFormat::Text => write_text(&mut buf, tokens),
        TokenFormat::Binary => write_binary(&mut buf, tokens),
    }
    .expect("writing to memory cannot fail");
    buf
}

fn reduce_all(s: ReductionScheme, tokens: &[String]) -> Vec<String> {
    tokens.par_iter().map(|t| reduce_str(s, t).into_owned()).collect()
}

fn corpus_index(data: &[u8], c: &CorpusArgs) -> Result<CorpusIndex> {
    Ok(match c.input_format {
        InputFormat::Raw => CorpusIndex::from_raw(data, c.max_len, SHARD_BYTES),
        f => {
            let tokens = load_tokens(data, f)?;
            let samples: Vec<&[String]> = tokens.chunks(c.max_len).collect();
            CorpusIndex::from_segments(&samples)
        }
    })
}

fn report_outputs(exec: &mut Execution, io: &IoArgs, c: &CorpusArgs, report: &CorpusReport, main: String) -> Result<()> {
    exec.write("output", io.output.as_deref(), main.as_bytes())?;
    if let Some(p) = &c.hist_csv {
        exec.write("hist_csv", Some(p), report.histogram_csv().as_bytes())?;
    }
    let v = report.violations();
    exec.summary["violations"] = json!(v);
    if !v.is_empty() {
        return Err(Failure::new(Kind::Check, format!("report invariants violated: {}", v.join("; "))));
    }
    Ok(())
}

/// Runs a resolved command. Outputs are written before any check failure is returned.
pub fn execute(cmd: &Command, exec: &mut Execution) -> Result<()> {
    match cmd {
        Command::Normalize(a) => {
            let data = exec.read("input", a.io.input.as_deref())?;
            let stream = charsub::normalize::normalize_parallel(&data, SHARD_BYTES);
            exec.summary = json!({ "tokens": stream.len(), "diagnostics": stream.diagnostics });
            exec.write("output", a.io.output.as_deref(), &encode_tokens(&stream.tokens, a.format))
        }
        Command::Reduce(a) => {
            let s = scheme(&a.scheme)?;
            let data = exec.read("input", a.io.input.as_deref())?;
            let reduced = reduce_all(s, &load_tokens(&data, a.input_format)?);
            exec.summary = json!({ "tokens": reduced.len() });
            exec.write("output", a.io.output.as_deref(), &encode_tokens(&reduced, a.format))
        }
        Command::Vocab(a) => {
            let s = scheme(&a.scheme)?;
            let data = exec.read("input", a.io.input.as_deref())?;
            let counts = match a.input_format {
                InputFormat::Raw => TokenCounts::count_raw(&data, s, SHARD_BYTES).0,
                f => TokenCounts::count_parallel(&reduce_all(s, &load_tokens(&data, f)?)),
            };
            let cfg = VocabConfig::new(s).with_specials(parse_specials(&a.specials)?).with_limit(a.limit);
            let v = Vocabulary::from_counts(&counts, &cfg).map_err(|e| Failure::new(Kind::Other, e))?;
            exec.summary = json!({
                "tokens": counts.total(),
                "types": counts.distinct(),
                "entries": v.len(),
                "dropped_types": v.dropped_types(),
                "dropped_mass": v.dropped_mass(),
                "merged_specials": v.merged_specials(),
            });
            exec.write("output", a.io.output.as_deref(), &v.to_bytes())
        }
        Command::Mask(a) => mask(a, exec),
        Command::Stats(a) => {
            let s = scheme(&a.scheme)?;
            let data = exec.read("input", a.io.input.as_deref())?;
            let idx = corpus_index(&data, &a.corpus)?;
            let report = CorpusReport { rows: vec![idx.analyze(s)] };
            let mut out = serde_json::to_string_pretty(&report.rows[0]).expect("report serialization cannot fail");
            out.push('\n');
            exec.summary = json!({ "tokens": idx.num_tokens(), "samples": idx.num_samples() });
            report_outputs(exec, &a.io, &a.corpus, &report, out)
        }
        Command::Compare(a) => {
            let schemes = ReductionScheme::parse_list(&a.schemes).map_err(|e| Failure::new(Kind::BadScheme, e))?;
            let data = exec.read("input", a.io.input.as_deref())?;
            let idx = corpus_index(&data, &a.corpus)?;
            let report = idx.compare(&schemes);
            let out = if a.table { report.to_table() } else { report.to_json_pretty() + "\n" };
            exec.summary = json!({ "tokens": idx.num_tokens(), "samples": idx.num_samples(), "rows": report.rows.len() });
            report_outputs(exec, &a.io, &a.corpus, &report, out)
        }
        Command::Replay(_) => Err(Failure::new(Kind::Other, "replay cannot be nested")),
    }
}

fn mask(a: &MaskArgs, exec: &mut Execution) -> Result<()> {
    let s = scheme(&a.scheme)?;
    let pool_vocab = match &a.vocab {
        Some(p) => {
            let data = exec.read("vocab", Some(p))?;
            let v = Vocabulary::read(&data[..]).map_err(|e| vocab_failure(p, e))?;
            if v.scheme() != s {
                return Err(Failure::new(
                    Kind::Vocab,
                    format!("{}: vocabulary scheme {} does not match --scheme {s}", p.display(), v.scheme()),
                ));
            }
            Some(v)
        }
        None => None,
    };
    let data = exec.read("input", a.io.input.as_deref())?;
    let tokens = load_tokens(&data, a.input_format)?;

    let limit = Some(a.target_limit);
    let pool_vocab = match pool_vocab {
        Some(v) => v,
        None => {
            let cfg = VocabConfig::new(s).with_limit(limit);
            Vocabulary::from_counts(&TokenCounts::count_parallel(&reduce_all(s, &tokens)), &cfg)
                .map_err(|e| Failure::new(Kind::Other, e))?
        }
    };
    let pool: Vec<String> = pool_vocab.regular().iter().map(|e| e.token.clone()).collect();
    let mode = match a.mode {
        Mode::Partial => TargetMode::Partial,
        Mode::Full => TargetMode::Full,
    };
    let target_vocab = match mode {
        TargetMode::Full => Some(
            Vocabulary::from_counts(
                &TokenCounts::count_parallel(&tokens),
                &VocabConfig::new(ReductionScheme::Full).with_limit(limit),
            )
            .map_err(|e| Failure::new(Kind::Other, e))?,
        ),
        TargetMode::Partial => None,
    };

    let samples = pack_sequences(TokenStream::from_tokens(tokens.into_iter().map(Token::new).collect()), a.max_len);
    let builder = ExampleBuilder::new(s, mode).config(masking(a)).random_pool(&pool).target_vocab(target_vocab.as_ref());
    let mut out = Vec::new();
    let summary = generate_dataset(&samples, &builder, a.seed, &mut out).map_err(|e| Failure::new(Kind::Other, e))?;
    exec.summary = json!({ "dataset": summary, "random_pool": pool.len() });
    exec.write("output", a.io.output.as_deref(), &out)
}

fn vocab_failure(path: &Path, e: VocabError) -> Failure {
    match e {
        VocabError::Io(e) => Failure::new(Kind::Input, format!("{}: {e}", path.display())),
        e => Failure::new(Kind::Vocab, format!("{}: {e}", path.display())),
    }
}
