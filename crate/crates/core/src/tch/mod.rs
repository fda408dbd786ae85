//! Time-dependent contraction hierarchies.
//!
//! Nodes are contracted in order of increasing importance. After
//! construction they are renumbered so that internal id `0` is the most
//! important node: a descending-rank sweep is then a forward scan. An edge
//! `u -> v` is *upward* when `v` outranks `u` (smaller internal id) and
//! *downward* otherwise. Downward edges are stored grouped by head.

mod contract;
mod io;

pub use contract::{Shortcut, WorkingGraph};
pub use io::{parse_tch, serialize_tch};

use thiserror::Error;

use crate::graph::{NodeId, TdGraph};
use crate::profile::ProfileGraph;
use crate::ttf::Ttf;

#[derive(Debug, Clone, PartialEq)]
pub struct OrderParams {
    /// Settled-node limit of each witness search.
    pub witness_budget: usize,
    /// Also run a budget-limited profile search when the scalar witness
    /// test is inconclusive.
    pub exact_witness: bool,
    pub edge_difference_weight: f64,
    pub deleted_neighbours_weight: f64,
    pub complexity_weight: f64,
}

impl Default for OrderParams {
    fn default() -> Self {
        OrderParams {
            witness_budget: 64,
            exact_witness: false,
            edge_difference_weight: 2.0,
            deleted_neighbours_weight: 1.0,
            complexity_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TchEdge {
    /// Head for upward edges, tail for downward edges.
    pub other: NodeId,
    pub ttf: Ttf,
    /// Internal id of the node this shortcut bypasses; `None` for input edges.
    pub middle: Option<NodeId>,
}

/// An edge of the hierarchy in internal ids, used to assemble a [`Tch`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawEdge {
    pub tail: NodeId,
    pub head: NodeId,
    pub ttf: Ttf,
    pub middle: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TchError {
    #[error("original ids must be a permutation of 1..={0}")]
    BadMapping(usize),
    #[error("edge {0} -> {1}: endpoints must differ in rank")]
    SameRank(NodeId, NodeId),
    #[error("edge {0} -> {1}: node id out of range")]
    OutOfRange(NodeId, NodeId),
    #[error("edge {0} -> {1}: duplicate")]
    Duplicate(NodeId, NodeId),
    #[error("edge {0} -> {1}: period differs from hierarchy period")]
    Period(NodeId, NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tch {
    period: f64,
    original: Vec<u32>,
    internal: Vec<u32>,
    level: Vec<u32>,
    up_first: Vec<usize>,
    up: Vec<TchEdge>,
    down_first: Vec<usize>,
    down: Vec<TchEdge>,
    has_down_out: Vec<bool>,
    by_level: Vec<Vec<u32>>,
}

impl Tch {
    /// Assembles a hierarchy from internal-id edges. `original[i]` is the
    /// zero-based input id of internal node `i`; rank is `n - i`.
    pub fn from_parts(
        period: f64,
        original: Vec<u32>,
        mut edges: Vec<RawEdge>,
    ) -> Result<Tch, TchError> {
        let n = original.len();
        let mut internal = vec![u32::MAX; n];
        for (i, &o) in original.iter().enumerate() {
            if o as usize >= n || internal[o as usize] != u32::MAX {
                return Err(TchError::BadMapping(n));
            }
            internal[o as usize] = i as u32;
        }
        edges.sort_by_key(|e| (e.tail, e.head));
        for (i, e) in edges.iter().enumerate() {
            if e.tail.index() >= n
                || e.head.index() >= n
                || e.middle.is_some_and(|m| m.index() >= n)
            {
                return Err(TchError::OutOfRange(e.tail, e.head));
            }
            if e.tail == e.head {
                return Err(TchError::SameRank(e.tail, e.head));
            }
            if i > 0 && edges[i - 1].tail == e.tail && edges[i - 1].head == e.head {
                return Err(TchError::Duplicate(e.tail, e.head));
            }
            if e.ttf.period() != period {
                return Err(TchError::Period(e.tail, e.head));
            }
        }

        let mut up_first = vec![0usize; n + 1];
        let mut down_first = vec![0usize; n + 1];
        let mut has_down_out = vec![false; n];
        for e in &edges {
            if e.head < e.tail {
                up_first[e.tail.index() + 1] += 1;
            } else {
                down_first[e.head.index() + 1] += 1;
                has_down_out[e.tail.index()] = true;
            }
        }
        for i in 0..n {
            up_first[i + 1] += up_first[i];
            down_first[i + 1] += down_first[i];
        }
        let mut up_fill = up_first.clone();
        let mut down_fill = down_first.clone();
        let mut up: Vec<Option<TchEdge>> = vec![None; up_first[n]];
        let mut down: Vec<Option<TchEdge>> = vec![None; down_first[n]];
        // edges are sorted by (tail, head): up lists come out sorted by head
        // and down lists sorted by tail
        for e in edges {
            if e.head < e.tail {
                let slot = &mut up_fill[e.tail.index()];
                up[*slot] = Some(TchEdge {
                    other: e.head,
                    ttf: e.ttf,
                    middle: e.middle,
                });
                *slot += 1;
            } else {
                let slot = &mut down_fill[e.head.index()];
                down[*slot] = Some(TchEdge {
                    other: e.tail,
                    ttf: e.ttf,
                    middle: e.middle,
                });
                *slot += 1;
            }
        }
        let up: Vec<TchEdge> = up.into_iter().map(Option::unwrap).collect();
        let down: Vec<TchEdge> = down.into_iter().map(Option::unwrap).collect();

        let level = compute_levels(n, |u| {
            down[down_first[u]..down_first[u + 1]]
                .iter()
                .map(|e| e.other.index())
        });
        let max_level = level.iter().copied().max().map_or(0, |l| l as usize + 1);
        let mut by_level = vec![Vec::new(); max_level];
        for (u, &l) in level.iter().enumerate() {
            by_level[l as usize].push(u as u32);
        }

        Ok(Tch {
            period,
            original,
            internal,
            level,
            up_first,
            up,
            down_first,
            down,
            has_down_out,
            by_level,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.original.len()
    }

    pub fn num_edges(&self) -> usize {
        self.up.len() + self.down.len()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Importance in `1..=n`, higher is more important.
    pub fn rank(&self, u: NodeId) -> u32 {
        (self.num_nodes() - u.index()) as u32
    }

    /// Input-graph id of an internal node.
    pub fn original_id(&self, u: NodeId) -> NodeId {
        NodeId(self.original[u.index()])
    }

    /// Internal id of an input-graph node.
    pub fn internal_id(&self, original: NodeId) -> NodeId {
        NodeId(self.internal[original.index()])
    }

    pub fn level(&self, u: NodeId) -> u32 {
        self.level[u.index()]
    }

    pub fn levels(&self) -> &[u32] {
        &self.level
    }

    /// Internal ids per level, ascending.
    pub fn nodes_by_level(&self) -> &[Vec<u32>] {
        &self.by_level
    }

    pub fn up_edges(&self, u: NodeId) -> &[TchEdge] {
        &self.up[self.up_first[u.index()]..self.up_first[u.index() + 1]]
    }

    /// Downward edges into `u`; `other` is the tail.
    pub fn down_edges(&self, u: NodeId) -> &[TchEdge] {
        &self.down[self.down_first[u.index()]..self.down_first[u.index() + 1]]
    }

    /// Position of the first downward edge into `u` in the global downward
    /// edge array.
    pub(crate) fn down_offset(&self, u: usize) -> usize {
        self.down_first[u]
    }

    pub(crate) fn all_down_edges(&self) -> &[TchEdge] {
        &self.down
    }

    pub(crate) fn has_down_out(&self, u: usize) -> bool {
        self.has_down_out[u]
    }

    pub fn num_shortcuts(&self) -> usize {
        self.up
            .iter()
            .chain(&self.down)
            .filter(|e| e.middle.is_some())
            .count()
    }

    pub fn total_breakpoints(&self) -> usize {
        self.up.iter().chain(&self.down).map(|e| e.ttf.len()).sum()
    }

    pub fn max_level(&self) -> u32 {
        self.level.iter().copied().max().unwrap_or(0)
    }

    /// All edges in internal ids, sorted by `(tail, head)`.
    pub fn edges(&self) -> Vec<RawEdge> {
        let mut out = Vec::with_capacity(self.num_edges());
        for u in 0..self.num_nodes() {
            let u = NodeId(u as u32);
            for e in self.up_edges(u) {
                out.push(RawEdge {
                    tail: u,
                    head: e.other,
                    ttf: e.ttf.clone(),
                    middle: e.middle,
                });
            }
            for e in self.down_edges(u) {
                out.push(RawEdge {
                    tail: e.other,
                    head: u,
                    ttf: e.ttf.clone(),
                    middle: e.middle,
                });
            }
        }
        out.sort_by_key(|e| (e.tail, e.head));
        out
    }

    /// The upward graph as a search target.
    pub fn upward(&self) -> UpwardGraph<'_> {
        UpwardGraph(self)
    }
}

pub struct UpwardGraph<'a>(&'a Tch);

impl ProfileGraph for UpwardGraph<'_> {
    fn num_nodes(&self) -> usize {
        self.0.num_nodes()
    }

    fn period(&self) -> f64 {
        self.0.period
    }

    fn out_edges(&self, u: usize) -> impl Iterator<Item = (usize, &Ttf)> + '_ {
        self.0
            .up_edges(NodeId(u as u32))
            .iter()
            .map(|e| (e.other.index(), &e.ttf))
    }
}

/// Sweep levels in one pass over nodes in descending rank (ascending
/// internal id): a node without downward in-edges has level 0, any other
/// node one more than the highest level among its downward sources.
pub fn compute_levels<I>(n: usize, mut down_sources: impl FnMut(usize) -> I) -> Vec<u32>
where
    I: Iterator<Item = usize>,
{
    let mut level = vec![0u32; n];
    for u in 0..n {
        level[u] = down_sources(u)
            .map(|v| {
                debug_assert!(v < u, "downward source must outrank its head");
                level[v] + 1
            })
            .max()
            .unwrap_or(0);
    }
    level
}

/// Importance of every input node (`1..=n`) from a full contraction run.
pub fn compute_order(g: &TdGraph, p: &OrderParams) -> Vec<u32> {
    let mut rank = vec![0u32; g.num_nodes()];
    for (i, r) in contract::contract_all(g, p).iter().enumerate() {
        rank[r.node as usize] = i as u32 + 1;
    }
    rank
}

pub fn build_tch(g: &TdGraph, p: &OrderParams) -> Tch {
    let n = g.num_nodes();
    let order = contract::contract_all(g, p);
    // internal id = n - rank, with rank = position in contraction order + 1
    let mut new_id = vec![0u32; n];
    let mut original = vec![0u32; n];
    for (pos, r) in order.iter().enumerate() {
        let id = (n - 1 - pos) as u32;
        new_id[r.node as usize] = id;
        original[id as usize] = r.node;
    }
    let mut edges = Vec::new();
    for r in order {
        let v = NodeId(new_id[r.node as usize]);
        for (w, e) in r.up {
            edges.push(RawEdge {
                tail: v,
                head: NodeId(new_id[w as usize]),
                ttf: e.ttf,
                middle: e.middle.map(|m| NodeId(new_id[m as usize])),
            });
        }
        for (u, e) in r.down {
            edges.push(RawEdge {
                tail: NodeId(new_id[u as usize]),
                head: v,
                ttf: e.ttf,
                middle: e.middle.map(|m| NodeId(new_id[m as usize])),
            });
        }
    }
    Tch::from_parts(g.period(), original, edges).expect("contraction yields a valid hierarchy")
}
