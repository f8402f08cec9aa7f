//! Arc-list text format shared by every tool in the workspace.
//!
//! Grammar: any line may carry a `#` comment (full-line or trailing); blank
//! lines are ignored; the first data line is `n m`; the next m data lines
//! are `u v` arcs with 0-based ids. UTF-8, LF. Emission is canonical:
//! header, then arcs in lexicographic order, no comments.

use thiserror::Error;

use crate::digraph::{Digraph, GraphError};

/// Hard parser limits; inputs are untrusted (CLI files, fuzzing).
pub const MAX_PARSE_N: usize = 2_000_000;
pub const MAX_PARSE_M: usize = 10_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error("line {line}: {source}")]
    Graph { line: usize, source: GraphError },
}

struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

fn parse_count(tok: &Token, what: &str, max: usize) -> Result<usize, ParseError> {
    let v: usize = tok.text.parse().map_err(|_| ParseError::Syntax {
        line: tok.line,
        column: tok.column,
        msg: format!("expected {what}, found {:?}", tok.text),
    })?;
    if v > max {
        return Err(ParseError::Syntax {
            line: tok.line,
            column: tok.column,
            msg: format!("{what} {v} exceeds limit {max}"),
        });
    }
    Ok(v)
}

/// Splits a data line into tokens, demanding exactly two.
fn two_tokens<'a>(raw: &'a str, line_no: usize) -> Result<[Token<'a>; 2], ParseError> {
    let data = raw.split('#').next().unwrap_or("");
    let mut toks = Vec::with_capacity(2);
    let mut col = 0;
    for piece in data.split_inclusive(char::is_whitespace) {
        let trimmed = piece.trim_end_matches(char::is_whitespace);
        if !trimmed.is_empty() {
            toks.push(Token { text: trimmed, line: line_no, column: col + 1 });
        }
        col += piece.chars().count();
    }
    match toks.len() {
        2 => Ok([toks.remove(0), toks.remove(0)]),
        k => Err(ParseError::Syntax {
            line: line_no,
            column: 1,
            msg: format!("expected 2 fields, found {k}"),
        }),
    }
}

fn is_data(raw: &str) -> bool {
    let data = raw.split('#').next().unwrap_or("");
    !data.trim().is_empty()
}

pub fn parse_digraph(text: &str) -> Result<Digraph, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| is_data(l));

    let (hline, hraw) = lines.next().ok_or(ParseError::Syntax {
        line: text.lines().count().max(1),
        column: 1,
        msg: "missing `n m` header".into(),
    })?;
    let [ntok, mtok] = two_tokens(hraw, hline)?;
    let n = parse_count(&ntok, "vertex count", MAX_PARSE_N)?;
    let m = parse_count(&mtok, "arc count", MAX_PARSE_M)?;

    let mut arcs = Vec::with_capacity(m.min(1 << 20));
    let mut last_line = hline;
    for (line_no, raw) in lines {
        if arcs.len() == m {
            return Err(ParseError::Syntax {
                line: line_no,
                column: 1,
                msg: format!("expected end of input after {m} arcs"),
            });
        }
        let [utok, vtok] = two_tokens(raw, line_no)?;
        let u = parse_count(&utok, "vertex id", usize::MAX - 1)?;
        let v = parse_count(&vtok, "vertex id", usize::MAX - 1)?;
        // range/loop checks deferred to the graph builder for a single error path
        arcs.push((u, v));
        last_line = line_no;
    }
    if arcs.len() < m {
        return Err(ParseError::Syntax {
            line: last_line,
            column: 1,
            msg: format!("expected {m} arcs, found {}", arcs.len()),
        });
    }
    Digraph::from_arcs(n, &arcs).map_err(|source| {
        let bad = |&(u, v): &(usize, usize)| match source {
            GraphError::InvalidVertex(x, _) => u == x || v == x,
            GraphError::InvalidArc(x, y, _) => u == x && v == y,
        };
        let idx = arcs.iter().position(bad).unwrap_or(0);
        // data line idx+2 counting only data lines; recover the raw line no
        let line = text
            .lines()
            .enumerate()
            .filter(|(_, l)| is_data(l))
            .nth(idx + 1)
            .map(|(i, _)| i + 1)
            .unwrap_or(last_line);
        ParseError::Graph { line, source }
    })
}

pub fn emit_digraph(g: &Digraph) -> String {
    let mut s = String::with_capacity(16 + 8 * g.m());
    s.push_str(&format!("{} {}\n", g.n(), g.m()));
    for (u, v) in g.arcs() {
        s.push_str(&format!("{u} {v}\n"));
    }
    s
}

/// Same format with a `# pattern: <name>` comment header.
pub fn emit_pattern(name: &str, g: &Digraph) -> String {
    format!("# pattern: {}\n{}", name, emit_digraph(g))
}

/// Reads back the `# pattern: <name>` header, if present.
pub fn pattern_name(text: &str) -> Option<&str> {
    for line in text.lines() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            if let Some(name) = rest.trim().strip_prefix("pattern:") {
                return Some(name.trim());
            }
            continue;
        }
        break;
    }
    None
}
