//! The `tch` text format.
//!
//! ```text
//! p tch <n> <m> <period>
//! o <new_id> <original_id>            (n lines)
//! l <node> <level>                    (n lines)
//! a <u> <v> <middle|-1> <k> <t1> <w1> ... <tk> <wk>   (m lines)
//! ```
//!
//! Ids are one-based. Node `1` is the most important. An edge is upward when
//! its head has a smaller id than its tail. Stored levels must match the
//! levels implied by the downward edges.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::BufRead;

use super::{RawEdge, Tch};
use crate::graph::tdgr::write_ttf;
use crate::graph::tdgr::Tokens;
use crate::graph::{NodeId, ParseError};

pub fn serialize_tch(t: &Tch) -> String {
    let mut out = String::new();
    let n = t.num_nodes();
    writeln!(out, "p tch {} {} {}", n, t.num_edges(), t.period()).unwrap();
    for u in 0..n {
        let u = NodeId(u as u32);
        writeln!(out, "o {} {}", u, t.original_id(u)).unwrap();
    }
    for u in 0..n {
        let u = NodeId(u as u32);
        writeln!(out, "l {} {}", u, t.level(u)).unwrap();
    }
    for e in t.edges() {
        match e.middle {
            Some(m) => write!(out, "a {} {} {}", e.tail, e.head, m).unwrap(),
            None => write!(out, "a {} {} -1", e.tail, e.head).unwrap(),
        }
        write_ttf(&mut out, &e.ttf);
        out.push('\n');
    }
    out
}

pub fn parse_tch(reader: impl BufRead) -> Result<Tch, ParseError> {
    let mut header: Option<(usize, usize, f64)> = None;
    let mut original: Vec<Option<u32>> = Vec::new();
    let mut levels: Vec<Option<(u32, usize)>> = Vec::new();
    let mut edges = Vec::new();
    let mut seen_edges = HashSet::new();
    let mut last_line = 0;

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        last_line = lineno;
        let mut tok = Tokens::new(lineno, &line);
        let Some((col, kind)) = tok.next_token() else {
            continue;
        };
        if kind == "c" {
            continue;
        }
        if kind == "p" {
            if header.is_some() {
                return Err(tok.error(col, "duplicate problem line"));
            }
            let (fcol, format) = tok.expect("format name")?;
            if format != "tch" {
                return Err(tok.error(fcol, format!("expected format `tch`, found `{format}`")));
            }
            let n: usize = tok.number("node count")?;
            let m: usize = tok.number("edge count")?;
            let period: f64 = tok.number("period")?;
            if !(period.is_finite() && period > 0.0) {
                return Err(tok.error(tok.column(), "period must be positive"));
            }
            tok.finish()?;
            header = Some((n, m, period));
            original = vec![None; n];
            levels = vec![None; n];
            continue;
        }
        let Some((n, _, period)) = header else {
            return Err(tok.error(col, "record before problem line"));
        };
        match kind {
            "o" => {
                let node_col = col + 2;
                let node = tok.node(n)?;
                let orig = tok.node(n)?;
                tok.finish()?;
                if original[node.index()].replace(orig.0).is_some() {
                    return Err(tok.error(node_col, format!("duplicate mapping for node {node}")));
                }
            }
            "l" => {
                let node_col = col + 2;
                let node = tok.node(n)?;
                let level: u32 = tok.number("level")?;
                tok.finish()?;
                if levels[node.index()].replace((level, lineno)).is_some() {
                    return Err(tok.error(node_col, format!("duplicate level for node {node}")));
                }
            }
            "a" => {
                let tail = tok.node(n)?;
                let head = tok.node(n)?;
                let (mcol, mtok) = tok.expect("middle node")?;
                let middle = if mtok == "-1" {
                    None
                } else {
                    let id: u64 = mtok.parse().map_err(|_| {
                        tok.error(mcol, format!("expected middle node, found `{mtok}`"))
                    })?;
                    match NodeId::from_one_based(id) {
                        Some(m) if m.index() < n => Some(m),
                        _ => return Err(tok.error(mcol, format!("node id {id} outside 1..={n}"))),
                    }
                };
                if tail == head {
                    return Err(tok.error(
                        col,
                        format!("edge {tail} -> {head} joins nodes of equal rank"),
                    ));
                }
                if !seen_edges.insert((tail, head)) {
                    return Err(tok.error(col, format!("duplicate edge {tail} -> {head}")));
                }
                let ttf = tok.ttf(period)?;
                tok.finish()?;
                edges.push(RawEdge {
                    tail,
                    head,
                    ttf,
                    middle,
                });
            }
            other => return Err(tok.error(col, format!("unknown record type `{other}`"))),
        }
    }

    let fail = |line: usize, message: String| ParseError::Syntax {
        line,
        column: 1,
        message,
    };
    let Some((_, m, period)) = header else {
        return Err(fail(last_line.max(1), "missing problem line".into()));
    };
    if edges.len() != m {
        return Err(fail(
            last_line.max(1),
            format!("problem line announces {m} edges, found {}", edges.len()),
        ));
    }
    let original: Vec<u32> = original
        .into_iter()
        .enumerate()
        .map(|(i, o)| {
            o.ok_or_else(|| fail(last_line.max(1), format!("node {} has no mapping", i + 1)))
        })
        .collect::<Result<_, _>>()?;
    let tch =
        Tch::from_parts(period, original, edges).map_err(|e| fail(last_line, e.to_string()))?;
    for (u, lv) in levels.into_iter().enumerate() {
        let Some((level, line)) = lv else {
            return Err(fail(
                last_line.max(1),
                format!("node {} has no level", u + 1),
            ));
        };
        let expected = tch.level(NodeId(u as u32));
        if level != expected {
            return Err(fail(
                line,
                format!(
                    "node {}: level {level} contradicts downward edges (expected {expected})",
                    u + 1
                ),
            ));
        }
    }
    Ok(tch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ttf::Ttf;

    const GOLDEN_ONE: &str = "p tch 1 0 86400\no 1 1\nl 1 0\n";

    #[test]
    fn one_node_golden() {
        let t = Tch::from_parts(86400.0, vec![0], vec![]).unwrap();
        assert_eq!(serialize_tch(&t), GOLDEN_ONE);
        assert_eq!(parse_tch(GOLDEN_ONE.as_bytes()).unwrap(), t);
    }

    #[test]
    fn two_node_round_trip() {
        let t = Tch::from_parts(
            86400.0,
            vec![1, 0],
            vec![
                RawEdge {
                    tail: NodeId(0),
                    head: NodeId(1),
                    ttf: Ttf::constant(100.0, 86400.0),
                    middle: None,
                },
                RawEdge {
                    tail: NodeId(1),
                    head: NodeId(0),
                    ttf: Ttf::constant(50.0, 86400.0),
                    middle: None,
                },
            ],
        )
        .unwrap();
        let text = serialize_tch(&t);
        assert_eq!(
            text,
            "p tch 2 2 86400\no 1 2\no 2 1\nl 1 0\nl 2 1\na 1 2 -1 1 0 100\na 2 1 -1 1 0 50\n"
        );
        assert_eq!(parse_tch(text.as_bytes()).unwrap(), t);
    }

    #[test]
    fn rejects_equal_rank_edge() {
        let text = "p tch 2 1 86400\no 1 1\no 2 2\nl 1 0\nl 2 0\na 2 2 -1 1 0 5\n";
        match parse_tch(text.as_bytes()).unwrap_err() {
            ParseError::Syntax { line, .. } => assert_eq!(line, 6),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn rejects_wrong_level() {
        let text = "p tch 2 1 86400\no 1 1\no 2 2\nl 1 0\nl 2 0\na 1 2 -1 1 0 5\n";
        match parse_tch(text.as_bytes()).unwrap_err() {
            ParseError::Syntax { line, message, .. } => {
                assert_eq!(line, 5, "{message}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn rejects_bad_mapping_and_counts() {
        let dup = "p tch 2 0 86400\no 1 1\no 2 1\nl 1 0\nl 2 0\n";
        assert!(parse_tch(dup.as_bytes()).is_err());
        let dup_edge =
            "p tch 2 2 86400\no 1 1\no 2 2\nl 1 0\nl 2 0\na 2 1 -1 1 0 5\na 2 1 -1 1 0 6\n";
        match parse_tch(dup_edge.as_bytes()).unwrap_err() {
            ParseError::Syntax { line, .. } => assert_eq!(line, 7),
            e => panic!("{e}"),
        }
        let count = "p tch 1 1 86400\no 1 1\nl 1 0\n";
        assert!(parse_tch(count.as_bytes()).is_err());
        let wrong_format = "p tdgr 1 0 86400\n";
        assert!(parse_tch(wrong_format.as_bytes()).is_err());
    }
}
