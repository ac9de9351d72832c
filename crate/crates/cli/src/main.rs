mod args;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use args::{Cli, Command, ReplayArgs};
use run::{Execution, Failure, FileDigest, Kind};

const TOOL: &str = "charsub";

/// Everything needed to re-run a command and check its result.
#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    argv: Vec<String>,
    threads: usize,
    config: Command,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    summary: Value,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.code())
        }
    }
}

fn run_cli(cli: Cli) -> Result<(), Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Failure::new(Kind::Other, e))?;
    if let Command::Replay(r) = cli.command {
        return replay(&r);
    }
    let cmd = run::resolve(cli.command)?;
    let mut exec = Execution::default();
    let result = run::execute(&cmd, &mut exec);
    let manifest_path = match (&cli.manifest, cli.no_manifest) {
        (_, true) => None,
        (Some(p), _) => Some(p.clone()),
        (None, false) => exec.outputs.first().and_then(|o| o.path.as_deref()).map(default_manifest_path),
    };
    if let Some(path) = manifest_path {
        if exec.outputs.is_empty() {
            return result;
        }
        let m = Manifest {
            tool: TOOL.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            argv: std::env::args().collect(),
            threads: cli.threads,
            config: cmd,
            inputs: exec.inputs,
            outputs: exec.outputs,
            summary: exec.summary,
        };
        let mut text = serde_json::to_string_pretty(&m).expect("manifest serialization cannot fail");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Failure::new(Kind::Output, format!("{}: {e}", path.display())))?;
    }
    result
}

fn default_manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn replay(r: &ReplayArgs) -> Result<(), Failure> {
    let path = &r.manifest_file;
    let text = std::fs::read(path).map_err(|e| Failure::new(Kind::Input, format!("{}: {e}", path.display())))?;
    let m: Manifest = serde_json::from_slice(&text)
        .map_err(|e| Failure::new(Kind::Other, format!("{}: not a {TOOL} manifest: {e}", path.display())))?;
    if m.tool != TOOL {
        return Err(Failure::new(Kind::Other, format!("{}: written by `{}`", path.display(), m.tool)));
    }
    let mut cmd = m.config;
    if let Some(io) = cmd.io_mut() {
        if r.input.is_some() {
            io.input = r.input.clone();
        }
        if r.output.is_some() {
            io.output = r.output.clone();
        }
    }
    let cmd = run::resolve(cmd)?;
    let mut exec = Execution::default();
    let result = run::execute(&cmd, &mut exec);

    let mut mismatches = Vec::new();
    for (recorded, actual) in [(&m.inputs, &exec.inputs), (&m.outputs, &exec.outputs)] {
        for want in recorded {
            match actual.iter().find(|d| d.role == want.role) {
                Some(got) if got.sha256 == want.sha256 => {}
                Some(got) => mismatches.push(format!("{}: sha256 {} != recorded {}", want.role, got.sha256, want.sha256)),
                None if result.is_err() => {}
                None => mismatches.push(format!("{}: not produced", want.role)),
            }
        }
    }
    if !mismatches.is_empty() {
        return Err(Failure::new(Kind::Check, format!("replay differs: {}", mismatches.join("; "))));
    }
    result?;
    eprintln!("replay: {} output(s) match {}", exec.outputs.len(), path.display());
    Ok(())
}
