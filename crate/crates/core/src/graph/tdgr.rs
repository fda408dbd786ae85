//! The `tdgr` text format.
//!
//! ```text
//! c <comment>
//! p tdgr <n> <m> <period>
//! a <u> <v> <k> <t1> <w1> ... <tk> <wk>
//! ```
//!
//! Node ids are one-based. The problem line comes first and exactly once;
//! `m` counts the `a` lines.

use std::fmt::Write as _;
use std::io::BufRead;

use thiserror::Error;

use super::{NodeId, TdEdge, TdGraph};
use crate::ttf::{Point, Ttf, TtfError};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: invalid travel time function: {source}")]
    Ttf {
        line: usize,
        #[source]
        source: TtfError,
    },
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
}

/// Whitespace tokenizer that remembers 1-based columns.
pub(crate) struct Tokens<'a> {
    line: usize,
    text: &'a str,
    rest: std::iter::Peekable<std::str::CharIndices<'a>>,
    last_column: usize,
}

impl<'a> Tokens<'a> {
    pub(crate) fn new(line: usize, text: &'a str) -> Self {
        Tokens {
            line,
            text,
            rest: text.char_indices().peekable(),
            last_column: 1,
        }
    }

    pub(crate) fn error(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn column(&self) -> usize {
        self.last_column
    }

    pub(crate) fn next_token(&mut self) -> Option<(usize, &'a str)> {
        while let Some(&(_, c)) = self.rest.peek() {
            if c.is_whitespace() {
                self.rest.next();
            } else {
                break;
            }
        }
        let &(start, _) = self.rest.peek()?;
        let mut end = self.text.len();
        while let Some(&(i, c)) = self.rest.peek() {
            if c.is_whitespace() {
                end = i;
                break;
            }
            self.rest.next();
        }
        self.last_column = start + 1;
        Some((start + 1, &self.text[start..end]))
    }

    pub(crate) fn expect(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        let col = self.text.len() + 1;
        self.next_token()
            .ok_or_else(|| self.error(col, format!("expected {what}")))
    }

    pub(crate) fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, ParseError> {
        let (col, tok) = self.expect(what)?;
        tok.parse()
            .map_err(|_| self.error(col, format!("expected {what}, found `{tok}`")))
    }

    pub(crate) fn finish(&mut self) -> Result<(), ParseError> {
        match self.next_token() {
            Some((col, tok)) => Err(self.error(col, format!("unexpected trailing token `{tok}`"))),
            None => Ok(()),
        }
    }

    /// `<k> <t1> <w1> ... <tk> <wk>`
    pub(crate) fn ttf(&mut self, period: f64) -> Result<Ttf, ParseError> {
        let (kcol, _) = self.peek_column();
        let k: usize = self.number("breakpoint count")?;
        if k == 0 {
            return Err(self.error(kcol, "breakpoint count must be positive"));
        }
        let mut points = Vec::with_capacity(k);
        for _ in 0..k {
            let at: f64 = self.number("breakpoint time")?;
            let val: f64 = self.number("travel time")?;
            points.push(Point::new(at, val));
        }
        Ttf::new(points, period).map_err(|source| ParseError::Ttf {
            line: self.line,
            source,
        })
    }

    fn peek_column(&mut self) -> (usize, ()) {
        let col = self
            .rest
            .clone()
            .find(|&(_, c)| !c.is_whitespace())
            .map_or(self.text.len() + 1, |(i, _)| i + 1);
        (col, ())
    }

    pub(crate) fn node(&mut self, n: usize) -> Result<NodeId, ParseError> {
        let (col, _) = self.peek_column();
        let id: u64 = self.number("node id")?;
        match NodeId::from_one_based(id) {
            Some(v) if v.index() < n => Ok(v),
            _ => Err(self.error(col, format!("node id {id} outside 1..={n}"))),
        }
    }
}

/// Reads a `tdgr` stream.
pub fn parse_tdgr(reader: impl BufRead) -> Result<TdGraph, ParseError> {
    let mut header: Option<(usize, usize, f64)> = None;
    let mut edges = Vec::new();
    let mut last_line = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        last_line = lineno;
        let mut tok = Tokens::new(lineno, &line);
        let Some((col, kind)) = tok.next_token() else {
            continue;
        };
        match kind {
            "c" => continue,
            "p" => {
                if header.is_some() {
                    return Err(tok.error(col, "duplicate problem line"));
                }
                let (fcol, format) = tok.expect("format name")?;
                if format != "tdgr" {
                    return Err(
                        tok.error(fcol, format!("expected format `tdgr`, found `{format}`"))
                    );
                }
                let n: usize = tok.number("node count")?;
                let m: usize = tok.number("edge count")?;
                let period: f64 = tok.number("period")?;
                if !(period.is_finite() && period > 0.0) {
                    return Err(tok.error(tok.column(), "period must be positive"));
                }
                tok.finish()?;
                header = Some((n, m, period));
                edges.reserve(m);
            }
            "a" => {
                let Some((n, _, period)) = header else {
                    return Err(tok.error(col, "edge line before problem line"));
                };
                let tail = tok.node(n)?;
                let head_col = tok.peek_column().0;
                let head = tok.node(n)?;
                if tail == head {
                    return Err(tok.error(head_col, "self loop"));
                }
                let ttf = tok.ttf(period)?;
                tok.finish()?;
                edges.push(TdEdge { tail, head, ttf });
            }
            other => return Err(tok.error(col, format!("unknown record type `{other}`"))),
        }
    }
    let Some((n, m, period)) = header else {
        return Err(ParseError::Syntax {
            line: last_line.max(1),
            column: 1,
            message: "missing problem line".into(),
        });
    };
    if edges.len() != m {
        return Err(ParseError::Syntax {
            line: last_line.max(1),
            column: 1,
            message: format!("problem line announces {m} edges, found {}", edges.len()),
        });
    }
    Ok(TdGraph::from_edges(n, period, edges))
}

pub(crate) fn write_ttf(out: &mut String, ttf: &Ttf) {
    write!(out, " {}", ttf.len()).unwrap();
    for p in ttf.points() {
        write!(out, " {} {}", p.at, p.val).unwrap();
    }
}

/// Serializes a graph. Floats use the shortest representation that parses
/// back to the same value, so `parse_tdgr(write_tdgr(g)) == g`.
pub fn write_tdgr(g: &TdGraph) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "p tdgr {} {} {}",
        g.num_nodes(),
        g.num_edges(),
        g.period()
    )
    .unwrap();
    for e in g.edges() {
        write!(out, "a {} {}", e.tail, e.head).unwrap();
        write_ttf(&mut out, &e.ttf);
        out.push('\n');
    }
    out
}
