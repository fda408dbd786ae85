//! Label-correcting profile search and scalar Dijkstra.
//!
//! [`one_to_all_profile`] computes, for every node, the travel time profile
//! from a source: the pointwise minimum over all paths of the linked edge
//! functions. Queue keys are the global minima of the tentative labels; a node
//! whose label improves after it was scanned is queued again.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::ops::Index;

use crate::graph::{NodeId, TdGraph};
use crate::ttf::Ttf;

/// Labels that undercut the current one by less than this are not
/// improvements.
const IMPROVEMENT_EPS: f64 = 1e-9;

/// Read access to outgoing edges, so one search routine serves the input
/// graph, the upward part of a hierarchy and the contraction working graph.
pub trait ProfileGraph {
    fn num_nodes(&self) -> usize;
    fn period(&self) -> f64;
    fn out_edges(&self, u: usize) -> impl Iterator<Item = (usize, &Ttf)> + '_;
}

impl ProfileGraph for TdGraph {
    fn num_nodes(&self) -> usize {
        TdGraph::num_nodes(self)
    }

    fn period(&self) -> f64 {
        TdGraph::period(self)
    }

    fn out_edges(&self, u: usize) -> impl Iterator<Item = (usize, &Ttf)> + '_ {
        TdGraph::out_edges(self, NodeId(u as u32))
            .iter()
            .map(|e| (e.head.index(), &e.ttf))
    }
}

/// Only edges towards higher-ranked heads.
pub struct Upward<'a> {
    pub graph: &'a TdGraph,
    pub ranks: &'a [u32],
}

impl ProfileGraph for Upward<'_> {
    fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    fn period(&self) -> f64 {
        self.graph.period()
    }

    fn out_edges(&self, u: usize) -> impl Iterator<Item = (usize, &Ttf)> + '_ {
        let rank = self.ranks[u];
        self.graph
            .out_edges(NodeId(u as u32))
            .iter()
            .filter(move |e| self.ranks[e.head.index()] > rank)
            .map(|e| (e.head.index(), &e.ttf))
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Restriction<'a> {
    AllEdges,
    /// Relax only edges whose head outranks the tail; `ranks` is a
    /// permutation indexed by node.
    UpwardOnly(&'a [u32]),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileLabel {
    Unreached,
    Reached(Ttf),
}

impl ProfileLabel {
    pub fn ttf(&self) -> Option<&Ttf> {
        match self {
            ProfileLabel::Unreached => None,
            ProfileLabel::Reached(f) => Some(f),
        }
    }

    pub fn into_ttf(self) -> Option<Ttf> {
        match self {
            ProfileLabel::Unreached => None,
            ProfileLabel::Reached(f) => Some(f),
        }
    }

    pub fn is_reached(&self) -> bool {
        matches!(self, ProfileLabel::Reached(_))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub pops: usize,
    pub links: usize,
    pub merges: usize,
    pub breakpoints_processed: usize,
}

#[derive(Debug, Clone)]
pub struct LabelState {
    pub source: NodeId,
    pub labels: Vec<ProfileLabel>,
    pub stats: SearchStats,
}

impl LabelState {
    pub fn label(&self, v: NodeId) -> &ProfileLabel {
        &self.labels[v.index()]
    }
}

/// Limits used by witness searches; a default value searches everything.
#[derive(Debug, Clone, Copy, Default)]
pub struct SearchLimits {
    pub avoid: Option<usize>,
    pub max_settled: Option<usize>,
}

/// Total order on `f64` for heap keys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Key(pub f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub fn one_to_all_profile(g: &TdGraph, s: NodeId, restriction: Restriction<'_>) -> LabelState {
    match restriction {
        Restriction::AllEdges => profile_search(g, s.index(), SearchLimits::default()),
        Restriction::UpwardOnly(ranks) => profile_search(
            &Upward { graph: g, ranks },
            s.index(),
            SearchLimits::default(),
        ),
    }
}

pub fn profile_search<G: ProfileGraph>(g: &G, s: usize, limits: SearchLimits) -> LabelState {
    let n = g.num_nodes();
    let mut labels = vec![ProfileLabel::Unreached; n];
    let mut stats = SearchStats::default();
    // key under which a node currently sits in the queue; NaN when not queued
    let mut queued = vec![f64::NAN; n];
    let mut heap = BinaryHeap::new();

    labels[s] = ProfileLabel::Reached(Ttf::zero(g.period()));
    queued[s] = 0.0;
    heap.push(Reverse((Key(0.0), s)));

    let mut settled = 0;
    while let Some(Reverse((Key(key), u))) = heap.pop() {
        if queued[u].to_bits() != key.to_bits() {
            continue;
        }
        queued[u] = f64::NAN;
        stats.pops += 1;
        settled += 1;
        if limits.max_settled.is_some_and(|m| settled > m) {
            break;
        }
        let ProfileLabel::Reached(from) = &labels[u] else {
            unreachable!("queued nodes are reached")
        };
        let from = from.clone();
        for (v, edge) in g.out_edges(u) {
            if Some(v) == limits.avoid {
                continue;
            }
            let candidate = from.link_unchecked(edge);
            stats.links += 1;
            stats.breakpoints_processed += from.len() + edge.len();
            let updated = match &labels[v] {
                ProfileLabel::Unreached => candidate,
                ProfileLabel::Reached(old) => {
                    if candidate.undercuts(old, IMPROVEMENT_EPS).is_none() {
                        continue;
                    }
                    stats.merges += 1;
                    stats.breakpoints_processed += old.len() + candidate.len();
                    old.merge_min_unchecked(&candidate)
                }
            };
            let key = updated.min();
            labels[v] = ProfileLabel::Reached(updated);
            queued[v] = key;
            heap.push(Reverse((Key(key), v)));
        }
    }
    LabelState {
        source: NodeId(s as u32),
        labels,
        stats,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarWeight {
    TtfMin,
    TtfMax,
}

#[derive(Debug, Clone, Copy)]
pub struct ScalarQuery<'a> {
    pub weight: ScalarWeight,
    /// Stop after settling this many nodes.
    pub budget: Option<usize>,
    /// Stop once all of these are settled.
    pub targets: Option<&'a [usize]>,
    pub avoid: Option<usize>,
}

impl ScalarQuery<'_> {
    pub fn new(weight: ScalarWeight) -> Self {
        ScalarQuery {
            weight,
            budget: None,
            targets: None,
            avoid: None,
        }
    }
}

/// Distances settled by [`scalar_dijkstra`]. Only touched nodes are
/// stored, so short local searches stay cheap on large graphs.
#[derive(Debug, Clone, Default)]
pub struct Distances(HashMap<usize, f64>);

static UNSETTLED: f64 = f64::INFINITY;

impl Distances {
    pub fn get(&self, v: usize) -> f64 {
        self.0.get(&v).copied().unwrap_or(f64::INFINITY)
    }

    pub fn settled(&self) -> usize {
        self.0.len()
    }
}

impl Index<usize> for Distances {
    type Output = f64;

    fn index(&self, v: usize) -> &f64 {
        self.0.get(&v).unwrap_or(&UNSETTLED)
    }
}

/// Plain Dijkstra on per-edge global minima or maxima. Nodes that were not
/// settled before the search stopped report `+inf`.
pub fn scalar_dijkstra<G: ProfileGraph>(g: &G, s: usize, q: ScalarQuery<'_>) -> Distances {
    let mut ws = ScalarWorkspace::new(g.num_nodes());
    ws.run(g, s, q);
    Distances(ws.settled.iter().map(|&v| (v, ws.dist[v])).collect())
}

/// Reusable state for many small scalar searches on one graph. Arrays are
/// reset lazily through a round counter.
#[derive(Debug, Clone)]
pub(crate) struct ScalarWorkspace {
    dist: Vec<f64>,
    /// Round in which `dist` was last written.
    seen: Vec<u32>,
    /// Round in which the node was settled.
    done: Vec<u32>,
    /// Round in which the node was marked as a target.
    target: Vec<u32>,
    round: u32,
    settled: Vec<usize>,
    heap: BinaryHeap<Reverse<(Key, usize)>>,
}

impl ScalarWorkspace {
    pub(crate) fn new(n: usize) -> Self {
        ScalarWorkspace {
            dist: vec![f64::INFINITY; n],
            seen: vec![0; n],
            done: vec![0; n],
            target: vec![0; n],
            round: 0,
            settled: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    /// Settled distance from the last run, `+inf` otherwise.
    pub(crate) fn get(&self, v: usize) -> f64 {
        if self.done[v] == self.round {
            self.dist[v]
        } else {
            f64::INFINITY
        }
    }

    pub(crate) fn run<G: ProfileGraph>(&mut self, g: &G, s: usize, q: ScalarQuery<'_>) {
        self.round = self.round.wrapping_add(1);
        if self.round == 0 {
            self.seen.fill(0);
            self.done.fill(0);
            self.target.fill(0);
            self.round = 1;
        }
        let round = self.round;
        self.settled.clear();
        self.heap.clear();

        let mut remaining = 0usize;
        if let Some(targets) = q.targets {
            for &t in targets {
                if self.target[t] != round {
                    self.target[t] = round;
                    remaining += 1;
                }
            }
            if remaining == 0 {
                return;
            }
        }

        self.dist[s] = 0.0;
        self.seen[s] = round;
        self.heap.push(Reverse((Key(0.0), s)));
        while let Some(Reverse((Key(d), u))) = self.heap.pop() {
            if self.done[u] == round {
                continue;
            }
            if q.budget.is_some_and(|b| self.settled.len() >= b) {
                break;
            }
            self.done[u] = round;
            self.settled.push(u);
            if q.targets.is_some() && self.target[u] == round {
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
            for (v, ttf) in g.out_edges(u) {
                if Some(v) == q.avoid || self.done[v] == round {
                    continue;
                }
                let w = match q.weight {
                    ScalarWeight::TtfMin => ttf.min(),
                    ScalarWeight::TtfMax => ttf.max(),
                };
                if self.seen[v] != round || d + w < self.dist[v] {
                    self.seen[v] = round;
                    self.dist[v] = d + w;
                    self.heap.push(Reverse((Key(d + w), v)));
                }
            }
        }
    }
}
