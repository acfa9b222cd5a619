//! Plain-text checkpoint format.
//!
//! ```text
//! moalign-policy v1
//! symbols A B C D E F G H ( )
//! order 2
//! slots 8
//! version 600
//! rows 1152 cols 11
//! <one line per row: cols whitespace-separated f64 values>
//! ```
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces the table bit for bit.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use super::{ContextOrder, Policy};
use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

pub const CHECKPOINT_MAGIC: &str = "moalign-policy v1";

pub fn write_checkpoint(policy: &Policy, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(CHECKPOINT_MAGIC);
    out.push('\n');
    out.push_str(&format!("symbols {}\n", policy.vocab().atoms().join(" ")));
    out.push_str(&format!("order {}\n", policy.order().len()));
    out.push_str(&format!("slots {}\n", policy.slots()));
    out.push_str(&format!("version {}\n", policy.version()));
    out.push_str(&format!("rows {} cols {}\n", policy.rows(), policy.cols()));
    for r in 0..policy.rows() {
        let row: Vec<String> = policy.row_logits(r).iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Policy> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text).map_err(|message| Error::Parse { path: path.to_path_buf(), message })
}

fn field<'a>(line: Option<&'a str>, key: &str) -> std::result::Result<&'a str, String> {
    line.and_then(|l| l.strip_prefix(key))
        .and_then(|l| l.strip_prefix(' '))
        .ok_or_else(|| format!("expected `{key}` line"))
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> std::result::Result<T, String> {
    s.trim().parse().map_err(|_| format!("bad {what} `{s}`"))
}

fn parse(text: &str) -> std::result::Result<Policy, String> {
    let mut lines = text.lines();
    if lines.next() != Some(CHECKPOINT_MAGIC) {
        return Err(format!("missing `{CHECKPOINT_MAGIC}` header"));
    }
    let symbols: Vec<&str> = field(lines.next(), "symbols")?.split_whitespace().collect();
    let vocab = Arc::new(Vocabulary::new(&symbols).map_err(|e| e.to_string())?);
    let order = ContextOrder::try_from(num::<u8>(field(lines.next(), "order")?, "order")?)?;
    let slots: usize = num(field(lines.next(), "slots")?, "slots")?;
    let version: u64 = num(field(lines.next(), "version")?, "version")?;
    let dims: Vec<&str> = field(lines.next(), "rows")?.split_whitespace().collect();
    let (rows, cols) = match dims.as_slice() {
        [r, "cols", c] => (num::<usize>(r, "rows")?, num::<usize>(c, "cols")?),
        _ => return Err("expected `rows <n> cols <m>`".into()),
    };
    let mut logits = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        let before = logits.len();
        for tok in line.split_whitespace() {
            logits.push(num::<f64>(tok, "logit")?);
        }
        if logits.len() - before != cols {
            return Err(format!("row {i} has {} values, expected {cols}", logits.len() - before));
        }
    }
    if logits.len() != rows * cols {
        return Err(format!("expected {rows} rows, found {}", logits.len() / cols.max(1)));
    }
    Policy::from_parts(vocab, order, slots, logits, version).map_err(|e| e.to_string())
}
