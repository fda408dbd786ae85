//! One-to-all profiles on a contraction hierarchy.
//!
//! A query runs a profile search on the upward graph from the source and
//! then visits every node in descending importance. Each node combines the
//! profiles of its more important downward neighbours:
//!
//! ```text
//! δ(u) = min(δ(u), min over edges v -> u of link(δ(v), f_v))
//! ```
//!
//! With pruning enabled, lower and upper ε-bounds of every finished profile
//! let most of those exact links be skipped without changing the result.

use std::fmt;
use std::ops::AddAssign;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::tdgr::write_ttf;
use crate::graph::NodeId;
use crate::profile::{profile_search, SearchLimits};
use crate::tch::Tch;
use crate::ttf::{ApproxMode, Epsilon, Strictness, Ttf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Relative width of the bounds used for pruning.
    pub prune_epsilon: Epsilon,
    pub pruning: bool,
    /// Restrict the sweep to the `k` most important nodes.
    pub core_k: Option<usize>,
    pub workers: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            prune_epsilon: Epsilon::default(),
            pruning: true,
            core_k: None,
            workers: 1,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("core size {k} exceeds node count {n}")]
    CoreTooLarge { k: usize, n: usize },
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("source {0} is not a node of the hierarchy")]
    BadSource(NodeId),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// An exact profile together with its ε-bounds and extrema.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxBundle {
    pub exact: Ttf,
    pub lower: Ttf,
    pub upper: Ttf,
    pub min: f64,
    pub max: f64,
}

impl ApproxBundle {
    pub fn new(exact: Ttf, eps: Epsilon) -> Self {
        let lower = exact.approximate(eps, ApproxMode::Lower);
        let upper = exact.approximate(eps, ApproxMode::Upper);
        let (min, max) = exact.extrema();
        ApproxBundle {
            exact,
            lower,
            upper,
            min,
            max,
        }
    }
}

/// Operation counters. All fields except the wall time are sums over
/// independent per-node work and do not depend on the worker count.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SweepStats {
    pub links_exact: u64,
    pub links_bound: u64,
    pub merges: u64,
    pub pruned_p2: u64,
    pub pruned_p3: u64,
    pub breakpoints_processed: u64,
    pub wall_time_ms: f64,
}

impl SweepStats {
    /// The counters without the wall time, for comparisons across runs.
    pub fn counters(&self) -> [u64; 6] {
        [
            self.links_exact,
            self.links_bound,
            self.merges,
            self.pruned_p2,
            self.pruned_p3,
            self.breakpoints_processed,
        ]
    }
}

impl AddAssign for SweepStats {
    fn add_assign(&mut self, o: SweepStats) {
        self.links_exact += o.links_exact;
        self.links_bound += o.links_bound;
        self.merges += o.merges;
        self.pruned_p2 += o.pruned_p2;
        self.pruned_p3 += o.pruned_p3;
        self.breakpoints_processed += o.breakpoints_processed;
        self.wall_time_ms += o.wall_time_ms;
    }
}

impl fmt::Display for SweepStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "links_exact={}", self.links_exact)?;
        writeln!(f, "links_bound={}", self.links_bound)?;
        writeln!(f, "merges={}", self.merges)?;
        writeln!(f, "pruned_p2={}", self.pruned_p2)?;
        writeln!(f, "pruned_p3={}", self.pruned_p3)?;
        writeln!(f, "breakpoints_processed={}", self.breakpoints_processed)?;
        writeln!(f, "wall_time_ms={:.3}", self.wall_time_ms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Unreached,
    /// Outside the core in core mode.
    NotComputed,
    Reached(Ttf),
}

impl Profile {
    pub fn ttf(&self) -> Option<&Ttf> {
        match self {
            Profile::Reached(f) => Some(f),
            _ => None,
        }
    }
}

/// Profiles of one query, indexed by input-graph node id.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub source: NodeId,
    pub profiles: Vec<Profile>,
    pub stats: SweepStats,
}

impl SweepResult {
    pub fn profile(&self, v: NodeId) -> &Profile {
        &self.profiles[v.index()]
    }

    /// One line per node: `<node> inf`, `<node> nc` or
    /// `<node> <k> <t1> <w1> ... <tk> <wk>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.profiles.iter().enumerate() {
            out.push_str(&NodeId(i as u32).to_string());
            match p {
                Profile::Unreached => out.push_str(" inf"),
                Profile::NotComputed => out.push_str(" nc"),
                Profile::Reached(f) => write_ttf(&mut out, f),
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Label {
    Unreached,
    /// Exact profile without bounds, for nodes that never feed a pruning
    /// decision.
    Exact(Ttf),
    Bounded(Box<ApproxBundle>),
}

impl Label {
    fn exact(&self) -> Option<&Ttf> {
        match self {
            Label::Unreached => None,
            Label::Exact(f) => Some(f),
            Label::Bounded(b) => Some(&b.exact),
        }
    }

    fn min(&self) -> f64 {
        match self {
            Label::Bounded(b) => b.min,
            other => other.exact().map_or(f64::INFINITY, Ttf::min),
        }
    }

    fn into_exact(self) -> Option<Ttf> {
        match self {
            Label::Unreached => None,
            Label::Exact(f) => Some(f),
            Label::Bounded(b) => Some(b.exact),
        }
    }
}

fn bundle(l: &Label) -> &ApproxBundle {
    match l {
        Label::Bounded(b) => b,
        _ => unreachable!("sources of downward edges are finalized with bounds"),
    }
}

/// Per-node labels of a sweep in internal ids, plus running counters.
///
/// A label is tentative until its node has been processed and finalized
/// afterwards.
#[derive(Debug, Clone)]
pub struct SweepState {
    labels: Vec<Label>,
    pub stats: SweepStats,
}

impl SweepState {
    pub fn new(n: usize) -> Self {
        SweepState {
            labels: vec![Label::Unreached; n],
            stats: SweepStats::default(),
        }
    }

    pub fn set_tentative(&mut self, u: NodeId, f: Ttf) {
        self.labels[u.index()] = Label::Exact(f);
    }

    pub fn profile(&self, u: NodeId) -> Option<&Ttf> {
        self.labels[u.index()].exact()
    }

    pub fn bundle(&self, u: NodeId) -> Option<&ApproxBundle> {
        match &self.labels[u.index()] {
            Label::Bounded(b) => Some(b),
            _ => None,
        }
    }
}

/// Bounds of one downward edge.
#[derive(Debug, Clone)]
struct EdgeBounds {
    lower: Ttf,
    upper: Ttf,
}

/// A hierarchy prepared for repeated queries with fixed options.
pub struct Sweeper<'a> {
    tch: &'a Tch,
    opt: SweepOptions,
    limit: usize,
    /// Indexed like the hierarchy's global downward edge array; empty when
    /// pruning is off.
    edge_bounds: Vec<EdgeBounds>,
    pool: Option<rayon::ThreadPool>,
}

impl<'a> Sweeper<'a> {
    pub fn new(tch: &'a Tch, opt: SweepOptions) -> Result<Self, SweepError> {
        let n = tch.num_nodes();
        if opt.workers == 0 {
            return Err(SweepError::NoWorkers);
        }
        if let Some(k) = opt.core_k {
            if k > n {
                return Err(SweepError::CoreTooLarge { k, n });
            }
        }
        let pool = if opt.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(opt.workers)
                    .build()
                    .map_err(|e| SweepError::Pool(e.to_string()))?,
            )
        } else {
            None
        };
        let bounds_of = |e: &crate::tch::TchEdge| EdgeBounds {
            lower: e.ttf.approximate(opt.prune_epsilon, ApproxMode::Lower),
            upper: e.ttf.approximate(opt.prune_epsilon, ApproxMode::Upper),
        };
        let edge_bounds = match (&pool, opt.pruning) {
            (_, false) => Vec::new(),
            (Some(pool), true) => {
                pool.install(|| tch.all_down_edges().par_iter().map(bounds_of).collect())
            }
            (None, true) => tch.all_down_edges().iter().map(bounds_of).collect(),
        };
        Ok(Sweeper {
            tch,
            opt,
            limit: opt.core_k.unwrap_or(n),
            edge_bounds,
            pool,
        })
    }

    pub fn options(&self) -> &SweepOptions {
        &self.opt
    }

    /// Profiles from `source` (an input-graph id) to every node.
    pub fn run(&self, source: NodeId) -> Result<SweepResult, SweepError> {
        let n = self.tch.num_nodes();
        if source.index() >= n {
            return Err(SweepError::BadSource(source));
        }
        let start = Instant::now();
        let s = self.tch.internal_id(source);
        let mut state = self.upward(s);

        match &self.pool {
            None => {
                for u in 0..self.limit {
                    self.process(NodeId(u as u32), &mut state);
                }
            }
            Some(pool) => {
                for level in self.tch.nodes_by_level() {
                    let nodes: Vec<u32> = level
                        .iter()
                        .copied()
                        .filter(|&u| (u as usize) < self.limit)
                        .collect();
                    if nodes.is_empty() {
                        continue;
                    }
                    let tentative: Vec<Option<Ttf>> = nodes
                        .iter()
                        .map(|&u| {
                            std::mem::replace(&mut state.labels[u as usize], Label::Unreached)
                                .into_exact()
                        })
                        .collect();
                    let labels = &state.labels;
                    let done: Vec<(Label, SweepStats)> = pool.install(|| {
                        nodes
                            .par_iter()
                            .zip(tentative)
                            .map(|(&u, tent)| {
                                let mut stats = SweepStats::default();
                                let best = self.minimum(u as usize, labels, tent, &mut stats);
                                (self.finalize(u as usize, best), stats)
                            })
                            .collect()
                    });
                    for (&u, (label, stats)) in nodes.iter().zip(done) {
                        state.labels[u as usize] = label;
                        state.stats += stats;
                    }
                }
            }
        }

        let mut profiles = vec![Profile::NotComputed; n];
        for (u, label) in state.labels.into_iter().enumerate() {
            if u >= self.limit {
                continue;
            }
            let original = self.tch.original_id(NodeId(u as u32));
            profiles[original.index()] = match label.into_exact() {
                Some(f) => Profile::Reached(f),
                None => Profile::Unreached,
            };
        }
        let mut stats = state.stats;
        stats.wall_time_ms = start.elapsed().as_secs_f64() * 1000.0;
        Ok(SweepResult {
            source,
            profiles,
            stats,
        })
    }

    /// Profile search on the upward graph from the internal node `s`.
    fn upward(&self, s: NodeId) -> SweepState {
        let search = profile_search(&self.tch.upward(), s.index(), SearchLimits::default());
        let mut state = SweepState::new(self.tch.num_nodes());
        for (u, label) in search.labels.into_iter().enumerate() {
            if let Some(f) = label.into_ttf() {
                state.labels[u] = Label::Exact(f);
            }
        }
        state.stats.links_exact += search.stats.links as u64;
        state.stats.merges += search.stats.merges as u64;
        state.stats.breakpoints_processed += search.stats.breakpoints_processed as u64;
        state
    }

    fn process(&self, u: NodeId, state: &mut SweepState) {
        let tentative =
            std::mem::replace(&mut state.labels[u.index()], Label::Unreached).into_exact();
        let best = self.minimum(u.index(), &state.labels, tentative, &mut state.stats);
        state.labels[u.index()] = self.finalize(u.index(), best);
    }

    /// Recomputes the tentative profile of `u` from its downward edges and
    /// returns it. The sources of those edges must be finalized. The label
    /// of `u` itself stays tentative.
    pub fn build_minimum<'s>(&self, u: NodeId, state: &'s mut SweepState) -> Option<&'s Ttf> {
        let tentative =
            std::mem::replace(&mut state.labels[u.index()], Label::Unreached).into_exact();
        let best = self.minimum(u.index(), &state.labels, tentative, &mut state.stats);
        if let Some(f) = best {
            state.labels[u.index()] = Label::Exact(f);
        }
        state.labels[u.index()].exact()
    }

    /// Fixes the label of `u`, attaching bounds if pruning is on.
    pub fn finalize_label<'s>(
        &self,
        u: NodeId,
        state: &'s mut SweepState,
    ) -> Option<&'s ApproxBundle> {
        let exact = std::mem::replace(&mut state.labels[u.index()], Label::Unreached).into_exact();
        state.labels[u.index()] = match exact {
            Some(f) if self.opt.pruning => {
                Label::Bounded(Box::new(ApproxBundle::new(f, self.opt.prune_epsilon)))
            }
            Some(f) => Label::Exact(f),
            None => Label::Unreached,
        };
        state.bundle(u)
    }

    fn finalize(&self, u: usize, best: Option<Ttf>) -> Label {
        match best {
            None => Label::Unreached,
            // bounds are only read through downward edges leaving `u`
            Some(f) if self.opt.pruning && self.tch.has_down_out(u) => {
                Label::Bounded(Box::new(ApproxBundle::new(f, self.opt.prune_epsilon)))
            }
            Some(f) => Label::Exact(f),
        }
    }

    fn minimum(
        &self,
        u: usize,
        labels: &[Label],
        tentative: Option<Ttf>,
        stats: &mut SweepStats,
    ) -> Option<Ttf> {
        let offset = self.tch.down_offset(u);
        let edges = self.tch.down_edges(NodeId(u as u32));
        // (index into `edges`, exact source label) for reached sources
        let live: Vec<(usize, &Label)> = edges
            .iter()
            .enumerate()
            .map(|(i, e)| (i, &labels[e.other.index()]))
            .filter(|(_, l)| !matches!(l, Label::Unreached))
            .collect();
        if live.is_empty() {
            return tentative;
        }

        // candidate edge: smallest lower bound on the path minimum
        let (cand, _) = live
            .iter()
            .map(|&(i, l)| (i, edges[i].ttf.min() + l.min()))
            .fold((usize::MAX, f64::INFINITY), |best, x| {
                if x.1 < best.1 {
                    x
                } else {
                    best
                }
            });
        let cand = if cand == usize::MAX { live[0].0 } else { cand };

        if !self.opt.pruning {
            let order =
                std::iter::once(cand).chain(live.iter().map(|&(i, _)| i).filter(|&i| i != cand));
            let paths = order
                .map(|i| {
                    let delta = labels[edges[i].other.index()].exact().expect("live source");
                    link_path(delta, &edges[i].ttf, stats)
                })
                .collect();
            return combine(tentative, paths, stats);
        }

        let bundle_of = |i: usize| bundle(&labels[edges[i].other.index()]);

        // P1: scalar upper bound from path maxima
        let mut bound = live
            .iter()
            .map(|&(i, l)| edges[i].ttf.max() + bundle(l).max)
            .fold(f64::INFINITY, f64::min);
        if let Some(t) = &tentative {
            bound = bound.min(t.max());
        }

        // P2: upper bound function from the candidate and promising edges
        let b = bundle_of(cand);
        let eb = &self.edge_bounds[offset + cand];
        let mut upper = b.upper.link_unchecked(&eb.upper);
        stats.links_bound += 1;
        stats.breakpoints_processed += (b.upper.len() + eb.upper.len()) as u64;
        bound = bound.min(upper.max());
        for &(i, l) in &live {
            if i == cand {
                continue;
            }
            let b = bundle(l);
            if edges[i].ttf.min() + b.lower.min() > bound {
                stats.pruned_p2 += 1;
                continue;
            }
            let eb = &self.edge_bounds[offset + i];
            let path = b.upper.link_unchecked(&eb.upper);
            stats.links_bound += 1;
            stats.merges += 1;
            stats.breakpoints_processed +=
                (b.upper.len() + eb.upper.len() + path.len() + upper.len()) as u64;
            upper = upper.merge_min_unchecked(&path);
            bound = bound.min(upper.max());
        }

        // P3: exact links for everything the lower bounds cannot rule out
        let mut paths = vec![link_path(&bundle_of(cand).exact, &edges[cand].ttf, stats)];
        for &(i, l) in &live {
            if i == cand {
                continue;
            }
            let b = bundle(l);
            if edges[i].ttf.min() + b.lower.min() > bound {
                stats.pruned_p3 += 1;
                continue;
            }
            let eb = &self.edge_bounds[offset + i];
            let low = b.lower.link_unchecked(&eb.lower);
            stats.links_bound += 1;
            stats.breakpoints_processed += (b.lower.len() + eb.lower.len() + upper.len()) as u64;
            if low.dominates_unchecked(&upper, Strictness::Strict) {
                stats.pruned_p3 += 1;
                continue;
            }
            paths.push(link_path(&b.exact, &edges[i].ttf, stats));
        }
        combine(tentative, paths, stats)
    }
}

/// How far a path must stay above the minimum to count as irrelevant.
/// Crossing points are computed on one side of the crossing, so a path that
/// forms part of the minimum can sit a few ulps above it at such points.
const ABOVE_MARGIN: f64 = 1e-7;

fn link_path(delta: &Ttf, f: &Ttf, stats: &mut SweepStats) -> Ttf {
    stats.links_exact += 1;
    stats.breakpoints_processed += (delta.len() + f.len()) as u64;
    delta.link_unchecked(f)
}

/// Pointwise minimum of `tentative` and `paths`, folded in order.
///
/// A path that lies strictly above the result everywhere must not influence
/// its breakpoints: merging it early can split segments of the running
/// minimum and shift later crossing points by an ulp. Such paths are
/// dropped and the rest folded again, so the output only depends on the
/// paths that touch the minimum. This is what makes pruned and unpruned
/// sweeps agree bit for bit.
fn combine(tentative: Option<Ttf>, paths: Vec<Ttf>, stats: &mut SweepStats) -> Option<Ttf> {
    let fold = |paths: &mut dyn Iterator<Item = &Ttf>, stats: &mut SweepStats| {
        let mut acc = tentative.clone();
        let mut changed_by = Vec::new();
        for (i, p) in paths.enumerate() {
            acc = match acc {
                None => {
                    changed_by.push(i);
                    Some(p.clone())
                }
                Some(a) => {
                    stats.merges += 1;
                    stats.breakpoints_processed += (a.len() + p.len()) as u64;
                    match a.merge_min_if_lower(p) {
                        Some(m) => {
                            changed_by.push(i);
                            Some(m)
                        }
                        None => Some(a),
                    }
                }
            };
        }
        (acc, changed_by)
    };

    let (acc, changed_by) = fold(&mut paths.iter(), stats);
    let result = acc?;
    let above = |p: &Ttf| p.exceeds(&result, ABOVE_MARGIN);
    if !changed_by.iter().any(|&i| above(&paths[i])) {
        return Some(result);
    }
    let keep: Vec<&Ttf> = paths.iter().filter(|p| !above(p)).collect();
    fold(&mut keep.into_iter(), stats).0
}

/// Runs a single query. Build a [`Sweeper`] to answer several queries with
/// the same options.
pub fn run(tch: &Tch, source: NodeId, opt: SweepOptions) -> Result<SweepResult, SweepError> {
    Sweeper::new(tch, opt)?.run(source)
}
