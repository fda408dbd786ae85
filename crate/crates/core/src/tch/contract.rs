//! Node contraction on a mutable working graph.

use std::cell::RefCell;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use super::OrderParams;
use crate::graph::{NodeId, TdGraph};
use crate::profile::{
    profile_search, Key, ProfileGraph, ScalarQuery, ScalarWeight, ScalarWorkspace, SearchLimits,
};
use crate::ttf::{Strictness, Ttf};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct WorkEdge {
    pub ttf: Ttf,
    /// Node bypassed by the most recent shortcut merged into this edge.
    pub middle: Option<u32>,
}

/// A shortcut inserted while contracting a node.
#[derive(Debug, Clone, PartialEq)]
pub struct Shortcut {
    pub tail: NodeId,
    pub head: NodeId,
    pub ttf: Ttf,
}

/// The remaining graph during contraction. Contracted nodes have no edges.
#[derive(Debug, Clone)]
pub struct WorkingGraph {
    period: f64,
    out: Vec<BTreeMap<u32, WorkEdge>>,
    inc: Vec<BTreeSet<u32>>,
    contracted: Vec<bool>,
    search: RefCell<ScalarWorkspace>,
}

impl ProfileGraph for WorkingGraph {
    fn num_nodes(&self) -> usize {
        self.out.len()
    }

    fn period(&self) -> f64 {
        self.period
    }

    fn out_edges(&self, u: usize) -> impl Iterator<Item = (usize, &Ttf)> + '_ {
        self.out[u].iter().map(|(&h, e)| (h as usize, &e.ttf))
    }
}

impl WorkingGraph {
    pub fn new(g: &TdGraph) -> Self {
        let n = g.num_nodes();
        let mut out = vec![BTreeMap::new(); n];
        let mut inc = vec![BTreeSet::new(); n];
        for e in g.edges() {
            out[e.tail.index()].insert(
                e.head.0,
                WorkEdge {
                    ttf: e.ttf.clone(),
                    middle: None,
                },
            );
            inc[e.head.index()].insert(e.tail.0);
        }
        WorkingGraph {
            period: g.period(),
            out,
            inc,
            contracted: vec![false; n],
            search: RefCell::new(ScalarWorkspace::new(n)),
        }
    }

    pub fn is_contracted(&self, v: NodeId) -> bool {
        self.contracted[v.index()]
    }

    pub fn edge(&self, u: NodeId, w: NodeId) -> Option<&Ttf> {
        self.out[u.index()].get(&w.0).map(|e| &e.ttf)
    }

    pub(crate) fn out_of(&self, v: u32) -> &BTreeMap<u32, WorkEdge> {
        &self.out[v as usize]
    }

    pub(crate) fn in_of(&self, v: u32) -> impl Iterator<Item = (u32, &WorkEdge)> + '_ {
        self.inc[v as usize]
            .iter()
            .map(move |&u| (u, &self.out[u as usize][&v]))
    }

    fn neighbours(&self, v: u32) -> BTreeSet<u32> {
        self.inc[v as usize]
            .iter()
            .chain(self.out[v as usize].keys())
            .copied()
            .collect()
    }

    /// Upper bounds on the travel time from `u` to each of `targets` on
    /// paths avoiding `v`, `+inf` where the budget ran out first.
    fn witness_distances(&self, u: u32, v: u32, targets: &[usize], p: &OrderParams) -> Vec<f64> {
        let mut ws = self.search.borrow_mut();
        ws.run(
            self,
            u as usize,
            ScalarQuery {
                weight: ScalarWeight::TtfMax,
                budget: Some(p.witness_budget),
                targets: Some(targets),
                avoid: Some(v as usize),
            },
        );
        targets.iter().map(|&t| ws.get(t)).collect()
    }

    fn exact_witness(&self, u: u32, w: u32, v: u32, shortcut: &Ttf, p: &OrderParams) -> bool {
        let st = profile_search(
            self,
            u as usize,
            SearchLimits {
                avoid: Some(v as usize),
                max_settled: Some(p.witness_budget),
            },
        );
        st.labels[w as usize]
            .ttf()
            .is_some_and(|found| shortcut.dominates_unchecked(found, Strictness::NonStrict))
    }

    /// Whether a path from `u` to `w` that avoids `excluded` is proven to be
    /// no slower than `shortcut` at every departure time. `false` means
    /// "not proven", not "no witness".
    pub fn witness_exists(
        &self,
        u: NodeId,
        w: NodeId,
        excluded: NodeId,
        shortcut: &Ttf,
        p: &OrderParams,
    ) -> bool {
        let targets = [w.index()];
        let dist = self.witness_distances(u.0, excluded.0, &targets, p);
        dist[0] <= shortcut.min()
            || (p.exact_witness && self.exact_witness(u.0, w.0, excluded.0, shortcut, p))
    }

    /// Removes `v`, adding a shortcut `u -> w` for each pair of neighbours
    /// whose path through `v` is not covered by a witness.
    pub fn contract_node(&mut self, v: NodeId, p: &OrderParams) -> Vec<Shortcut> {
        let v = v.0;
        assert!(!self.contracted[v as usize], "node {v} contracted twice");
        let ins: Vec<(u32, Ttf)> = self.in_of(v).map(|(u, e)| (u, e.ttf.clone())).collect();
        let outs: Vec<(u32, Ttf)> = self.out[v as usize]
            .iter()
            .map(|(&w, e)| (w, e.ttf.clone()))
            .collect();

        let mut added = Vec::new();
        for (u, first) in &ins {
            let targets: Vec<usize> = outs
                .iter()
                .filter(|(w, _)| w != u)
                .map(|&(w, _)| w as usize)
                .collect();
            if targets.is_empty() {
                continue;
            }
            let dist = self.witness_distances(*u, v, &targets, p);
            for ((w, second), &bound) in outs.iter().filter(|(w, _)| w != u).zip(&dist) {
                // the witness beats even the fastest path through `v`
                if bound <= first.min() + second.min() {
                    continue;
                }
                let shortcut = first.link_unchecked(second);
                if let Some(existing) = self.out[*u as usize].get(w) {
                    if shortcut.dominates_unchecked(&existing.ttf, Strictness::NonStrict) {
                        continue;
                    }
                }
                if bound <= shortcut.min()
                    || (p.exact_witness && self.exact_witness(*u, *w, v, &shortcut, p))
                {
                    continue;
                }
                self.insert(*u, *w, shortcut.clone(), v);
                added.push(Shortcut {
                    tail: NodeId(*u),
                    head: NodeId(*w),
                    ttf: shortcut,
                });
            }
        }

        for (u, _) in &ins {
            self.out[*u as usize].remove(&v);
        }
        for (w, _) in &outs {
            self.inc[*w as usize].remove(&v);
        }
        self.out[v as usize].clear();
        self.inc[v as usize].clear();
        self.contracted[v as usize] = true;
        added
    }

    fn insert(&mut self, u: u32, w: u32, ttf: Ttf, middle: u32) {
        match self.out[u as usize].get_mut(&w) {
            Some(existing) => {
                existing.ttf = existing.ttf.merge_min_unchecked(&ttf);
                existing.middle = Some(middle);
            }
            None => {
                self.out[u as usize].insert(
                    w,
                    WorkEdge {
                        ttf,
                        middle: Some(middle),
                    },
                );
                self.inc[w as usize].insert(u);
            }
        }
    }

    /// Contraction priority of `v`, lower is contracted earlier:
    /// `2 * edge_difference + deleted_neighbours + shortcut_point_ratio`.
    ///
    /// Simulated shortcuts are not linked; the witness test compares against
    /// `min f + min g`, which never exceeds the minimum of the linked
    /// function, and the size estimate is `|f| + |g| - 1`.
    pub(crate) fn priority(&self, v: u32, deleted: u32, p: &OrderParams) -> f64 {
        let ins: Vec<(u32, &Ttf)> = self.in_of(v).map(|(u, e)| (u, &e.ttf)).collect();
        let outs = &self.out[v as usize];
        let removed = ins.len() + outs.len();
        let removed_points: usize = ins.iter().map(|(_, f)| f.len()).sum::<usize>()
            + outs.values().map(|e| e.ttf.len()).sum::<usize>();

        let mut new_edges = 0usize;
        let mut shortcut_points = 0usize;
        for &(u, first) in &ins {
            let targets: Vec<usize> = outs
                .keys()
                .filter(|&&w| w != u)
                .map(|&w| w as usize)
                .collect();
            if targets.is_empty() {
                continue;
            }
            let dist = self.witness_distances(u, v, &targets, p);
            for ((&w, e), &bound) in outs.iter().filter(|(&w, _)| w != u).zip(&dist) {
                if bound <= first.min() + e.ttf.min() {
                    continue;
                }
                if !self.out[u as usize].contains_key(&w) {
                    new_edges += 1;
                }
                shortcut_points += first.len() + e.ttf.len() - 1;
            }
        }
        let edge_difference = new_edges as f64 - removed as f64;
        let ratio = if removed_points == 0 {
            0.0
        } else {
            shortcut_points as f64 / removed_points as f64
        };
        p.edge_difference_weight * edge_difference
            + p.deleted_neighbours_weight * deleted as f64
            + p.complexity_weight * ratio
    }
}

/// Edges recorded for a node at the moment it is contracted.
pub(crate) struct Removed {
    pub node: u32,
    /// `node -> head`, head is more important.
    pub up: Vec<(u32, WorkEdge)>,
    /// `tail -> node`, tail is more important.
    pub down: Vec<(u32, WorkEdge)>,
}

/// Contracts all nodes in lazily-updated priority order. Returns the nodes
/// in contraction order together with their recorded edges.
pub(crate) fn contract_all(g: &TdGraph, p: &OrderParams) -> Vec<Removed> {
    let n = g.num_nodes();
    let mut work = WorkingGraph::new(g);
    let mut deleted = vec![0u32; n];
    let mut current = vec![0.0f64; n];
    let mut heap = BinaryHeap::with_capacity(n);
    for v in 0..n as u32 {
        current[v as usize] = work.priority(v, 0, p);
        heap.push(Reverse((Key(current[v as usize]), v)));
    }

    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((Key(prio), v))) = heap.pop() {
        if work.contracted[v as usize] || current[v as usize].to_bits() != prio.to_bits() {
            continue;
        }
        let fresh = work.priority(v, deleted[v as usize], p);
        if fresh.to_bits() != prio.to_bits() {
            current[v as usize] = fresh;
            if heap
                .peek()
                .is_some_and(|Reverse(top)| (Key(fresh), v) > *top)
            {
                heap.push(Reverse((Key(fresh), v)));
                continue;
            }
        }

        let up = work
            .out_of(v)
            .iter()
            .map(|(&w, e)| (w, e.clone()))
            .collect();
        let down = work.in_of(v).map(|(u, e)| (u, e.clone())).collect();
        let neighbours = work.neighbours(v);
        work.contract_node(NodeId(v), p);
        order.push(Removed { node: v, up, down });

        // Neighbour keys are left stale on purpose. They are refreshed when
        // popped, which is far cheaper than re-simulating every neighbour of
        // a high-degree node after each contraction.
        for nb in neighbours {
            deleted[nb as usize] += 1;
        }
    }
    order
}
