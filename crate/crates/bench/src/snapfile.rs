//! Plain-text snapshot files.
//!
//! ```text
//! # m=3 T=2
//! 1+0j 0.5-0.25j -1+2j
//! 0+1j 1e-3+0j 2-1j
//! ```
//!
//! One snapshot per line, `m` whitespace-separated `re+imj` tokens. Lines
//! after the header starting with `#` and blank lines are skipped.

use std::fmt::Write as _;
use std::path::Path;

use doa_core::{DMatrix, SnapshotSet, C64};

use crate::error::{BenchError, Result};

/// Formats `z` as `re+imj` with shortest round-trip float digits.
pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}j", z.re, sign, z.im.abs())
}

/// Parses `a+bj`, `a-bj`, a bare real `a` or a bare imaginary `bj`.
pub fn parse_complex(token: &str) -> std::result::Result<C64, String> {
    let bad = || format!("malformed complex number `{token}`");
    let Some(body) = token.strip_suffix('j') else {
        return token.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not an exponent sign or the leading sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (body[..i].parse::<f64>(), body[i..].parse::<f64>()),
        None => (Ok(0.0), body.parse::<f64>()),
    };
    match (re, im) {
        (Ok(re), Ok(im)) => Ok(C64::new(re, im)),
        _ => Err(bad()),
    }
}

pub fn render(snapshots: &DMatrix<C64>) -> String {
    let (m, t) = snapshots.shape();
    let mut out = format!("# m={m} T={t}\n");
    for col in snapshots.column_iter() {
        let tokens: Vec<String> = col.iter().map(|&z| format_complex(z)).collect();
        let _ = writeln!(out, "{}", tokens.join(" "));
    }
    out
}

pub fn write(path: &Path, snapshots: &DMatrix<C64>) -> Result<()> {
    std::fs::write(path, render(snapshots)).map_err(|e| BenchError::io(path, e))
}

fn header_value(header: &str, key: &str) -> Option<usize> {
    header
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix(key)?.strip_prefix('='))
        .and_then(|v| v.parse().ok())
}

/// Parses file contents. `source` names the input in error messages.
pub fn parse(source: &str, text: &str) -> Result<SnapshotSet> {
    let err = |line: usize, column: usize, message: String| BenchError::Parse {
        path: source.to_string(),
        line,
        column,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (m, t) = match lines.next() {
        Some((_, h)) if h.trim_start().starts_with('#') => {
            match (header_value(h, "m"), header_value(h, "T")) {
                (Some(m), Some(t)) => (m, t),
                _ => return Err(err(1, 1, "header must read `# m=<m> T=<T>`".into())),
            }
        }
        _ => return Err(err(1, 1, "missing `# m=<m> T=<T>` header".into())),
    };
    if m == 0 {
        return Err(err(1, 1, "m must be positive".into()));
    }
    if t == 0 {
        return Err(BenchError::Validation(format!("{source}: snapshot file has T=0")));
    }

    let mut data = Vec::with_capacity(m * t);
    let mut rows = 0;
    for (idx, line) in lines {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if rows == t {
            return Err(err(idx + 1, 1, format!("more than T={t} snapshot lines")));
        }
        let mut count = 0;
        let mut offset = 0;
        for token in line.split_whitespace() {
            // byte column of this token, 1-based
            let col = line[offset..].find(token).map_or(offset, |p| offset + p);
            offset = col + token.len();
            count += 1;
            if count > m {
                return Err(err(idx + 1, col + 1, format!("more than m={m} entries")));
            }
            data.push(parse_complex(token).map_err(|msg| err(idx + 1, col + 1, msg))?);
        }
        if count < m {
            return Err(err(idx + 1, line.len() + 1, format!("expected {m} entries, found {count}")));
        }
        rows += 1;
    }
    if rows < t {
        return Err(err(text.lines().count() + 1, 1, format!("expected T={t} snapshot lines, found {rows}")));
    }
    Ok(SnapshotSet::from_matrix(DMatrix::from_vec(m, t, data)))
}

pub fn read(path: &Path) -> Result<SnapshotSet> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse(&path.display().to_string(), &text)
}
