//! Time-dependent directed graphs.

mod synth;
pub(crate) mod tdgr;

pub use synth::{generate_synthetic, SynthError, SynthParams, Topology};
pub use tdgr::{parse_tdgr, write_tdgr, ParseError};

use std::fmt;

use crate::ttf::Ttf;

/// Zero-based node index. Files use one-based ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_one_based(id: u64) -> Option<NodeId> {
        id.checked_sub(1)
            .and_then(|i| u32::try_from(i).ok())
            .map(NodeId)
    }

    pub fn one_based(self) -> u64 {
        self.0 as u64 + 1
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.one_based())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdEdge {
    pub tail: NodeId,
    pub head: NodeId,
    pub ttf: Ttf,
}

/// A directed graph with one travel time function per edge.
///
/// Edges are sorted by `(tail, head)` and parallel edges are merged into
/// their pointwise minimum, so there is at most one edge per node pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TdGraph {
    period: f64,
    edges: Vec<TdEdge>,
    out_first: Vec<usize>,
    in_first: Vec<usize>,
    in_edges: Vec<usize>,
}

impl TdGraph {
    /// Builds a graph from an arbitrary edge list. Panics on self loops,
    /// out-of-range ids or period mismatches; use [`parse_tdgr`] for
    /// untrusted input.
    pub fn from_edges(n: usize, period: f64, mut edges: Vec<TdEdge>) -> TdGraph {
        for e in &edges {
            assert!(e.tail != e.head, "self loop at {}", e.tail);
            assert!(
                e.tail.index() < n && e.head.index() < n,
                "edge out of range"
            );
            assert_eq!(
                e.ttf.period(),
                period,
                "edge period differs from graph period"
            );
        }
        edges.sort_by_key(|e| (e.tail, e.head));
        let mut merged: Vec<TdEdge> = Vec::with_capacity(edges.len());
        for e in edges {
            match merged.last_mut() {
                Some(last) if last.tail == e.tail && last.head == e.head => {
                    last.ttf = last.ttf.merge_min_unchecked(&e.ttf);
                }
                _ => merged.push(e),
            }
        }
        let edges = merged;

        let mut out_first = vec![0; n + 1];
        let mut in_first = vec![0; n + 1];
        for e in &edges {
            out_first[e.tail.index() + 1] += 1;
            in_first[e.head.index() + 1] += 1;
        }
        for i in 0..n {
            out_first[i + 1] += out_first[i];
            in_first[i + 1] += in_first[i];
        }
        let mut fill = in_first.clone();
        let mut in_edges = vec![0; edges.len()];
        for (idx, e) in edges.iter().enumerate() {
            let slot = &mut fill[e.head.index()];
            in_edges[*slot] = idx;
            *slot += 1;
        }
        TdGraph {
            period,
            edges,
            out_first,
            in_first,
            in_edges,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.out_first.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn edges(&self) -> &[TdEdge] {
        &self.edges
    }

    pub fn out_edges(&self, u: NodeId) -> &[TdEdge] {
        &self.edges[self.out_first[u.index()]..self.out_first[u.index() + 1]]
    }

    pub fn in_edges(&self, v: NodeId) -> impl Iterator<Item = &TdEdge> + '_ {
        self.in_edges[self.in_first[v.index()]..self.in_first[v.index() + 1]]
            .iter()
            .map(move |&i| &self.edges[i])
    }

    /// Number of edges whose travel time is not constant.
    pub fn time_dependent_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.ttf.is_constant()).count()
    }

    pub fn total_breakpoints(&self) -> usize {
        self.edges.iter().map(|e| e.ttf.len()).sum()
    }
}
