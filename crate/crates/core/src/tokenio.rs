//! Token stream serialization.
//!
//! Two formats are supported:
//! - text: one token per line, `\n` terminated;
//! - binary: a sequence of records, each a `u32` little-endian byte length
//!   followed by that many UTF-8 bytes.

use std::io::{self, BufRead, Read, Write};

use crate::error::TokenIoError;

pub fn write_text<W: Write, S: AsRef<str>>(mut w: W, tokens: &[S]) -> io::Result<()> {
    for t in tokens {
        w.write_all(t.as_ref().as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads newline-delimited tokens; blank lines are skipped and `\r` is trimmed.
pub fn read_text<R: BufRead>(r: R) -> Result<Vec<String>, TokenIoError> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        let t = line.trim_end_matches('\r');
        if !t.is_empty() {
            out.push(t.to_owned());
        }
    }
    Ok(out)
}

pub fn write_binary<W: Write, S: AsRef<str>>(mut w: W, tokens: &[S]) -> io::Result<()> {
    for t in tokens {
        let b = t.as_ref().as_bytes();
        let len = u32::try_from(b.len())
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "token longer than u32::MAX bytes"))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(b)?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Vec<String>, TokenIoError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode_binary(&buf)
}

pub fn decode_binary(buf: &[u8]) -> Result<Vec<String>, TokenIoError> {
    let mut out = Vec::new();
    let mut pos = 0usize;
    while pos < buf.len() {
        let Some(head) = buf.get(pos..pos + 4) else {
            return Err(TokenIoError::Truncated(pos as u64));
        };
        let len = u32::from_le_bytes(head.try_into().unwrap()) as usize;
        let body = buf.get(pos + 4..pos + 4 + len).ok_or(TokenIoError::Truncated(pos as u64))?;
        let s = std::str::from_utf8(body).map_err(|_| TokenIoError::InvalidUtf8(pos as u64))?;
        out.push(s.to_owned());
        pos += 4 + len;
    }
    Ok(out)
}
